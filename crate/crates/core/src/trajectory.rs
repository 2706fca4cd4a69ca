//! Global construction: Γ1 from P+∞ to P8, the separatrices through the saddle P4, the family of
//! departures from P8 toward the origin, Γ2 through P1, Γ3 by reflection, and the assembled curve.

use serde::Serialize;

use crate::critical_points::{classify_infinity, locate_p4, PointId};
use crate::error::{Error, Result};
use crate::local_analysis::{compute_a8, node_data_p8, richardson, A8Estimate, ApproachSample, NodeData};
use crate::ode::{
    approach_point, continue_to_origin, integrate_planar, start_from_origin, Chart, Event, IntegratorOptions,
    Mark, MarkKind, OriginApproach, Sample, Termination, Trajectory,
};
use crate::similarity::{PhasePoint, System};

/// Numerical settings of the construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub integ: IntegratorOptions,
    /// Offset W0 of the Γ1 start along the unstable direction of P+∞.
    pub wz_offset: f64,
    /// Z value at which Γ1 leaves the WZ chart.
    pub crossover_z: f64,
    /// Radius around P8 and P1 at which the dedicated near-point integrators take over.
    pub switch_radius: f64,
    /// Distance from P8 at which departures start.
    pub node_offset: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            integ: IntegratorOptions::default(),
            wz_offset: 1e-15,
            crossover_z: 0.1,
            switch_radius: 1e-3,
            node_offset: 1e-7,
        }
    }
}

impl BuildOptions {
    pub fn validate(&self) -> Result<()> {
        self.integ.validate()?;
        let vals = [self.wz_offset, self.crossover_z, self.switch_radius, self.node_offset];
        if !vals.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidInput("construction offsets must be positive".into()));
        }
        if self.node_offset >= self.switch_radius || self.integ.stop_radius >= self.switch_radius {
            return Err(Error::InvalidInput("node offset and stop radius must lie inside the switch radius".into()));
        }
        Ok(())
    }

    /// The same settings with all integrator tolerances divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self { integ: self.integ.tightened(factor), ..*self }
    }

    /// Decreasing ball radii used on the final approach to a node: pairs (r, r/2) per decade.
    fn approach_radii(&self) -> Vec<f64> {
        let floor = self.integ.stop_radius.min(1e-8);
        let mut out = vec![0.5 * self.switch_radius];
        let mut r = 0.1 * self.switch_radius;
        while r >= floor * (1.0 - 1e-9) {
            out.push(r);
            out.push(0.5 * r);
            r *= 0.1;
        }
        if *out.last().unwrap() > self.integ.stop_radius {
            out.push(0.5 * self.integ.stop_radius);
        }
        out
    }
}

const DOMAIN: Event = Event::Box { v_min: -3.0, v_max: 3.0, c_min: -50.0, c_max: 50.0 };

fn origin() -> PhasePoint {
    PhasePoint::new(0.0, 0.0)
}

/// Polar angle in the upper half plane of a line through the origin with slope `s`.
pub fn angle_of_slope(s: f64) -> f64 {
    if s.is_infinite() {
        std::f64::consts::FRAC_PI_2
    } else if s >= 0.0 {
        s.atan()
    } else {
        std::f64::consts::PI + s.atan()
    }
}

fn with_vc_raw(mut t: Trajectory) -> Trajectory {
    for s in t.samples.iter_mut().chain(t.marks.iter_mut().map(|m| &mut m.sample)) {
        s.raw = [s.point.v, s.point.c];
    }
    t.chart = Chart::VC;
    t
}

/// Appends `next` to `base`, dropping the duplicated junction sample.
fn concat(base: &mut Trajectory, next: Trajectory) {
    base.samples.extend(next.samples.into_iter().skip(1));
    base.marks.extend(next.marks);
    base.termination = next.termination;
}

fn polar_trajectory(o: &OriginApproach, termination: Termination) -> Trajectory {
    Trajectory { chart: Chart::VC, samples: o.samples.clone(), x_values: None, termination, marks: Vec::new() }
}

/// Limit at r → 0 of the values `f` sampled on the approach marks, with the given exponents.
fn extrapolate_marks(marks: &[(f64, Sample)], f: impl Fn(&Sample) -> f64, exps: &[f64]) -> Option<f64> {
    let hs: Vec<f64> = marks.iter().map(|(r, _)| *r).collect();
    let fs: Vec<f64> = marks.iter().map(|(_, s)| f(s)).collect();
    richardson(&hs, &fs, exps)
}

fn node(sys: &System) -> Result<NodeData> {
    let nd = node_data_p8(sys)?;
    if !nd.node {
        return Err(Error::OutOfRegime(format!("R² = {} at P8: not a proper node", nd.r2)));
    }
    Ok(nd)
}

/// Result of the final approach to P8 of a trajectory.
#[derive(Debug, Clone, PartialEq)]
struct NodeArrival {
    traj: Trajectory,
    reached: bool,
    log_x8: f64,
    log_r8: f64,
    marks: Vec<(f64, Sample)>,
}

fn arrive_at_p8(sys: &System, nd: &NodeData, from: &Sample, direction: f64, opts: &BuildOptions) -> Result<NodeArrival> {
    let radii = opts.approach_radii();
    let traj = approach_point(sys, PointId::P8, nd.p8, from, direction, &radii, &opts.integ)?;
    let marks = traj.ball_marks(PointId::P8);
    let reached = traj.termination == Termination::HitTarget
        && marks.last().is_some_and(|(r, _)| *r <= opts.integ.stop_radius);
    let (log_x8, log_r8) = if reached {
        (
            extrapolate_marks(&marks, |s| s.log_x, &[1.0]).unwrap_or(traj.last().log_x),
            extrapolate_marks(&marks, |s| s.log_r, &[1.0]).unwrap_or(traj.last().log_r),
        )
    } else {
        (traj.last().log_x, traj.last().log_r)
    };
    Ok(NodeArrival { traj, reached, log_x8, log_r8, marks })
}

fn chord_slope(p: PhasePoint, q: PhasePoint) -> f64 {
    (p.c - q.c) / (p.v - q.v)
}

/// Γ1 together with its arrival data at P8.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gamma1 {
    /// Samples from P+∞ to P8; logs shifted so that ln|x8| = 0 and ln R(x8) = 0.
    pub traj: Trajectory,
    pub reached_p8: bool,
    /// Extrapolated arrival slope at P8.
    pub arrival_slope: Option<f64>,
    /// |arrival slope - L1| / |L1|.
    pub slope_error: Option<f64>,
    pub a8: Option<A8Estimate>,
    pub p8: PhasePoint,
}

/// Tolerance on the relative mismatch between the Γ1 arrival slope and L1.
pub const SLOPE_AGREEMENT: f64 = 1e-3;

/// Tolerance factor applied to the far-field WZ segment of Γ1, where ln|x| and ln R vary fastest.
pub const WZ_TIGHTENING: f64 = 100.0;

/// Starts Γ1 in the WZ chart at W0 = `wz_offset` on the eigenline of P+∞ and follows it to P8.
pub fn build_gamma1(sys: &System, opts: &BuildOptions) -> Result<Gamma1> {
    let inf = classify_infinity(sys)?;
    let w0 = opts.wz_offset;
    gamma1_from_wz(sys, [w0, inf.eigen_slope * w0], opts)
}

/// Follows the x-flow from a WZ-chart start (W > 0, Z > 0) toward P8.
pub fn gamma1_from_wz(sys: &System, start: [f64; 2], opts: &BuildOptions) -> Result<Gamma1> {
    opts.validate()?;
    let nd = node(sys)?;
    if !(start[0] >= 0.0 && start[1] > 0.0) {
        return Err(Error::InvalidInput("Γ1 must start with W ≥ 0 and Z > 0".into()));
    }
    let o = &opts.integ;
    let mut traj = if start[1] < opts.crossover_z {
        let wz = integrate_planar(sys, Chart::WZ, start, [0.0, 0.0], -1.0, &[Event::Crossover { z: opts.crossover_z }], &o.tightened(WZ_TIGHTENING));
        if wz.termination != Termination::HitTarget {
            return Err(Error::Construction(format!("Γ1 did not leave the WZ chart: {:?}", wz.termination)));
        }
        with_vc_raw(wz)
    } else {
        let p = crate::ode::chart_from_wz(sys, start[0], start[1], 1.0)?;
        let s = Sample { s: 0.0, point: p, raw: [p.v, p.c], log_x: 0.0, log_r: 0.0 };
        Trajectory { chart: Chart::VC, samples: vec![s], x_values: None, termination: Termination::HitTarget, marks: vec![] }
    };
    let last = *traj.last();
    let events = [
        Event::CrossLPlus { terminal: true },
        Event::Ball { id: PointId::P8, center: nd.p8, radius: opts.switch_radius, terminal: true },
        DOMAIN,
    ];
    let mut vc = integrate_planar(sys, Chart::VC, [last.point.v, last.point.c], [last.log_x, last.log_r], -1.0, &events, o);
    for s in vc.samples.iter_mut().chain(vc.marks.iter_mut().map(|m| &mut m.sample)) {
        s.s += last.s;
    }
    let vc_term = vc.termination;
    concat(&mut traj, vc);
    if vc_term != Termination::HitTarget {
        return Ok(Gamma1 { traj, reached_p8: false, arrival_slope: None, slope_error: None, a8: None, p8: nd.p8 });
    }
    let arr = arrive_at_p8(sys, &nd, traj.last(), -1.0, opts)?;
    concat(&mut traj, arr.traj.clone());
    if !arr.reached {
        return Ok(Gamma1 { traj, reached_p8: false, arrival_slope: None, slope_error: None, a8: None, p8: nd.p8 });
    }
    traj.shift_logs(-arr.log_x8, -arr.log_r8);
    let p = nd.eigen_ratio().unwrap_or(2.0);
    let chords: Vec<(f64, Sample)> = arr.marks.iter().filter(|(r, _)| *r <= 1e-2 * opts.switch_radius).copied().collect();
    let exps: Vec<f64> = (1..=3).map(|j| (p - 1.0) * j as f64).collect();
    let arrival_slope = extrapolate_marks(&chords, |s| chord_slope(s.point, nd.p8), &exps);
    let l1 = nd.l1.unwrap_or(f64::NAN);
    let slope_error = arrival_slope.map(|s| (s - l1).abs() / l1.abs());
    let mut pairs = Vec::new();
    for w in arr.marks.windows(2) {
        let ((ra, a), (rb, b)) = (w[0], w[1]);
        if (rb / ra - 0.5).abs() < 1e-9 {
            let mk = |r: f64, s: Sample| ApproachSample { radius: r, point: s.point, log_x: s.log_x - arr.log_x8 };
            pairs.push((mk(ra, a), mk(rb, b)));
        }
    }
    let a8 = compute_a8(sys, &nd, &pairs).ok();
    Ok(Gamma1 { traj, reached_p8: true, arrival_slope, slope_error, a8, p8: nd.p8 })
}

/// Largest violation of the Ω bounds V* ≤ V ≤ V8 and 1+V ≤ C ≤ C̄(V) over the finite-C samples.
pub fn omega_violation(sys: &System, nd: &NodeData, traj: &Trajectory) -> f64 {
    let vs = sys.v_star();
    let mut worst: f64 = 0.0;
    for s in &traj.samples {
        let p = s.point;
        worst = worst.max(vs - p.v).max(p.v - nd.p8.v).max(1.0 + p.v - p.c);
        let cbar2 = sys.g_zero_c2(p.v);
        if cbar2.is_finite() && cbar2 > 0.0 {
            worst = worst.max((p.c - cbar2.sqrt()) / cbar2.sqrt());
        }
    }
    worst
}

/// Central-difference Jacobian of (G, F).
pub fn fd_jacobian(sys: &System, p: PhasePoint) -> [[f64; 2]; 2] {
    let hv = 1e-6 * (1.0 + p.v.abs());
    let hc = 1e-6 * (1.0 + p.c.abs());
    let (gvp, fvp) = sys.field(PhasePoint::new(p.v + hv, p.c));
    let (gvm, fvm) = sys.field(PhasePoint::new(p.v - hv, p.c));
    let (gcp, fcp) = sys.field(PhasePoint::new(p.v, p.c + hc));
    let (gcm, fcm) = sys.field(PhasePoint::new(p.v, p.c - hc));
    [
        [(gvp - gvm) / (2.0 * hv), (gcp - gcm) / (2.0 * hc)],
        [(fvp - fvm) / (2.0 * hv), (fcp - fcm) / (2.0 * hc)],
    ]
}

/// Eigenpairs (negative, positive) of a saddle Jacobian, with unit eigenvectors.
pub fn saddle_eigen(j: [[f64; 2]; 2]) -> Result<[(f64, [f64; 2]); 2]> {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if !(det < 0.0) {
        return Err(Error::EigenFailure("P4 is not a saddle"));
    }
    let disc = (0.25 * tr * tr - det).sqrt();
    let vec_for = |e: f64| {
        let a = [j[0][1], e - j[0][0]];
        let b = [e - j[1][1], j[1][0]];
        let v = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
        let n = v[0].hypot(v[1]);
        if n > 0.0 && n.is_finite() {
            Ok([v[0] / n, v[1] / n])
        } else {
            Err(Error::EigenFailure("degenerate eigenvector at P4"))
        }
    };
    let (e_neg, e_pos) = (0.5 * tr - disc, 0.5 * tr + disc);
    Ok([(e_neg, vec_for(e_neg)?), (e_pos, vec_for(e_pos)?)])
}

/// Separatrices through P4 and the L2 departure Γs from P8.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatrixSet {
    /// P4 → P8 under the reversed field.
    pub theta: Trajectory,
    /// P4 → P1, continued into the origin.
    pub phi: Trajectory,
    /// Reflection of Φ.
    pub psi: Trajectory,
    /// P8 → P1 along L2.
    pub gamma_s: Trajectory,
    pub zeta: f64,
    pub eps: f64,
    pub delta: f64,
}

/// Follows a trajectory into the origin ball and continues it to the limit; returns the
/// trajectory and the origin data, or `None` when the origin is not reached.
fn run_to_origin(
    sys: &System,
    start: PhasePoint,
    direction: f64,
    extra: &[Event],
    opts: &BuildOptions,
) -> Result<(Trajectory, Option<OriginApproach>)> {
    let mut events = vec![
        Event::Ball { id: PointId::P1, center: origin(), radius: opts.switch_radius, terminal: true },
        Event::CrossLPlus { terminal: true },
        DOMAIN,
    ];
    events.extend_from_slice(extra);
    let mut traj = integrate_planar(sys, Chart::VC, [start.v, start.c], [0.0, 0.0], direction, &events, &opts.integ);
    let at_origin = traj.termination == Termination::HitTarget && traj.last().point.norm() <= opts.switch_radius * (1.0 + 1e-6);
    if !at_origin {
        return Ok((traj, None));
    }
    let o = continue_to_origin(sys, traj.last(), &opts.integ)?;
    concat(&mut traj, polar_trajectory(&o, Termination::HitTarget));
    Ok((traj, Some(o)))
}

pub fn build_separatrices(sys: &System, opts: &BuildOptions) -> Result<SeparatrixSet> {
    opts.validate()?;
    let nd = node(sys)?;
    let p4 = locate_p4(sys)?.location;
    let [(_, v_in), (_, v_out)] = saddle_eigen(fd_jacobian(sys, p4))?;
    let off = opts.node_offset;
    let o = &opts.integ;

    let mut theta = None;
    for sgn in [1.0, -1.0] {
        let st = PhasePoint::new(p4.v + sgn * off * v_in[0], p4.c + sgn * off * v_in[1]);
        let events = [
            Event::Ball { id: PointId::P8, center: nd.p8, radius: opts.switch_radius, terminal: true },
            Event::Ball { id: PointId::P1, center: origin(), radius: opts.switch_radius, terminal: true },
            Event::CrossLPlus { terminal: true },
            DOMAIN,
        ];
        let mut t = integrate_planar(sys, Chart::VC, [st.v, st.c], [0.0, 0.0], -1.0, &events, o);
        if t.termination == Termination::HitTarget && t.last().point.dist(nd.p8) <= opts.switch_radius * (1.0 + 1e-6) {
            let arr = arrive_at_p8(sys, &nd, t.last(), -1.0, opts)?;
            if arr.reached {
                concat(&mut t, arr.traj);
                theta = Some(t);
                break;
            }
        }
    }
    let theta = theta.ok_or_else(|| Error::Construction("no branch of Θ reaches P8".into()))?;

    let mut phi = None;
    for sgn in [1.0, -1.0] {
        let st = PhasePoint::new(p4.v + sgn * off * v_out[0], p4.c + sgn * off * v_out[1]);
        let (t, o) = run_to_origin(sys, st, 1.0, &[], opts)?;
        if let Some(o) = o {
            phi = Some((t, o));
            break;
        }
    }
    let (phi, phi_origin) = phi.ok_or_else(|| Error::Construction("no branch of Φ reaches P1".into()))?;
    let zeta = -phi_origin.slope;
    if !(zeta > 0.0) {
        return Err(Error::Construction(format!("Φ arrives at P1 with slope {} (expected < 0)", phi_origin.slope)));
    }
    let psi = phi.reflect();

    let v2 = nd.secondary_dir().ok_or(Error::EigenFailure("P8 has no secondary direction"))?;
    let st = PhasePoint::new(nd.p8.v + off * v2[0], nd.p8.c + off * v2[1]);
    let (gamma_s, gs_origin) = run_to_origin(sys, st, 1.0, &[], opts)?;
    let gs_origin = gs_origin.ok_or_else(|| Error::Construction("Γs does not reach P1".into()))?;
    let eps = gs_origin.slope;
    if !(eps >= 0.0) {
        return Err(Error::Construction(format!("Γs arrives at P1 with slope {eps} (expected ≥ 0)")));
    }
    Ok(SeparatrixSet { theta, phi, psi, gamma_s, zeta, eps, delta: zeta.max(eps) })
}

/// The one-parameter family of departures from P8 toward the origin.
///
/// Departures start at P8 + ε0 (cos φ v1 + sin φ v2) with v1, v2 the unit primary and secondary
/// directions. The admissible angles form (φΘ, π/2], with φΘ the start of Θ and π/2 that of Γs;
/// the parameter t ∈ (0, 1] maps to φ = φΘ + (π/2 - φΘ) 10^{-12(1-t)}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepartureFamily {
    pub node: NodeData,
    pub phi_theta: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Departure {
    pub t: f64,
    pub phi: f64,
    pub traj: Trajectory,
    /// Slope at P1, absent when the origin is not reached.
    pub slope: Option<f64>,
    /// True when some crossing of G = 0 in the first quadrant is vertical (G = 0 there).
    pub crosses_g_first_quadrant: bool,
}

impl DepartureFamily {
    pub fn phi_of_t(&self, t: f64) -> f64 {
        let half_pi = std::f64::consts::FRAC_PI_2;
        self.phi_theta + (half_pi - self.phi_theta) * 10f64.powf(-12.0 * (1.0 - t))
    }

    /// Inverse of [`Self::phi_of_t`]; `None` outside (φΘ, π/2].
    pub fn t_of_phi(&self, phi: f64) -> Option<f64> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let frac = (phi - self.phi_theta) / (half_pi - self.phi_theta);
        (frac > 0.0 && frac <= 1.0 + 1e-12).then(|| 1.0 + frac.log10() / 12.0)
    }

    fn start(&self, phi: f64) -> PhasePoint {
        let v1 = self.node.primary_dir().unwrap();
        let v2 = self.node.secondary_dir().unwrap();
        let (s, c) = phi.sin_cos();
        let p8 = self.node.p8;
        PhasePoint::new(p8.v + self.offset * (c * v1[0] + s * v2[0]), p8.c + self.offset * (c * v1[1] + s * v2[1]))
    }

    /// Angle φ of the direction from P8 to `p` in the (v1, v2) frame.
    pub fn phi_of_point(&self, p: PhasePoint) -> f64 {
        let v1 = self.node.primary_dir().unwrap();
        let v2 = self.node.secondary_dir().unwrap();
        let (dv, dc) = (p.v - self.node.p8.v, p.c - self.node.p8.c);
        let det = v1[0] * v2[1] - v1[1] * v2[0];
        let a = (dv * v2[1] - dc * v2[0]) / det;
        let b = (v1[0] * dc - v1[1] * dv) / det;
        b.atan2(a)
    }
}

fn reaches_origin(sys: &System, fam: &DepartureFamily, phi: f64, opts: &BuildOptions) -> Result<bool> {
    let events = [
        Event::Ball { id: PointId::P1, center: origin(), radius: opts.switch_radius, terminal: true },
        Event::CrossLPlus { terminal: true },
        DOMAIN,
    ];
    let st = fam.start(phi);
    let t = integrate_planar(sys, Chart::VC, [st.v, st.c], [0.0, 0.0], 1.0, &events, &opts.integ);
    Ok(t.termination == Termination::HitTarget && t.last().point.norm() <= opts.switch_radius * (1.0 + 1e-6))
}

/// Locates φΘ by bisection between a failing angle and the Γs angle π/2.
pub fn departure_family(sys: &System, opts: &BuildOptions) -> Result<DepartureFamily> {
    opts.validate()?;
    let nd = node(sys)?;
    let mut fam = DepartureFamily { node: nd, phi_theta: 0.0, offset: opts.node_offset };
    let mut hi = std::f64::consts::FRAC_PI_2;
    if !reaches_origin(sys, &fam, hi, opts)? {
        return Err(Error::Construction("Γs does not reach P1".into()));
    }
    let mut lo = -1.0;
    if reaches_origin(sys, &fam, lo, opts)? {
        return Err(Error::Construction("departure fan has no Θ boundary below π/2".into()));
    }
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if reaches_origin(sys, &fam, mid, opts)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    fam.phi_theta = lo;
    Ok(fam)
}

/// One member of the family, integrated toward the origin.
pub fn depart_p8(sys: &System, fam: &DepartureFamily, t: f64, opts: &BuildOptions) -> Result<Departure> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidInput("departure parameter must lie in (0, 1]".into()));
    }
    let phi = fam.phi_of_t(t);
    let (traj, o) = run_to_origin(sys, fam.start(phi), 1.0, &[Event::CrossG], opts)?;
    let crosses_g_first_quadrant = traj.marks.iter().any(|m| {
        m.kind == MarkKind::CrossG && m.sample.point.v > 0.0 && m.sample.point.c > 0.0
    });
    Ok(Departure { t, phi, traj, slope: o.map(|o| o.slope), crosses_g_first_quadrant })
}

/// A branch of Γ2 obtained by shooting backward from the origin to P8.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    /// Samples from the origin to P8 in the normalization ln|x| - ln ρ → 0, ln R → 0 at P1.
    pub traj: Trajectory,
    /// Origin arrival angle and slope.
    pub psi: f64,
    pub slope: f64,
    pub log_x8: f64,
    pub log_r8: f64,
    /// Departure angle at P8 and its family parameter, re-derived from the arrival direction.
    pub phi: f64,
    pub t: Option<f64>,
}

pub fn shoot_from_origin(sys: &System, fam: &DepartureFamily, psi: f64, opts: &BuildOptions) -> Result<Branch> {
    let nd = &fam.node;
    let o = start_from_origin(sys, psi, opts.switch_radius, &opts.integ)?;
    let mut traj = polar_trajectory(&o, Termination::HitTarget);
    let last = *traj.last();
    let events = [
        Event::Ball { id: PointId::P8, center: nd.p8, radius: opts.switch_radius, terminal: true },
        Event::CrossLPlus { terminal: true },
        DOMAIN,
    ];
    let mut vc = integrate_planar(sys, Chart::VC, [last.point.v, last.point.c], [last.log_x, last.log_r], -1.0, &events, &opts.integ);
    for s in vc.samples.iter_mut().chain(vc.marks.iter_mut().map(|m| &mut m.sample)) {
        s.s += last.s;
    }
    let term = vc.termination;
    concat(&mut traj, vc);
    if term != Termination::HitTarget || traj.last().point.dist(nd.p8) > opts.switch_radius * (1.0 + 1e-6) {
        return Err(Error::Construction(format!("backward trajectory from P1 at angle {psi} does not reach P8 ({term:?})")));
    }
    let arr = arrive_at_p8(sys, nd, traj.last(), -1.0, opts)?;
    if !arr.reached {
        return Err(Error::Construction(format!("backward trajectory from P1 at angle {psi} stalls near P8")));
    }
    let at_offset = arr
        .marks
        .iter()
        .min_by(|a, b| (a.0 / fam.offset).ln().abs().total_cmp(&(b.0 / fam.offset).ln().abs()))
        .map(|(_, s)| s.point)
        .unwrap();
    let phi = fam.phi_of_point(at_offset);
    concat(&mut traj, arr.traj);
    Ok(Branch { traj, psi, slope: o.slope, log_x8: arr.log_x8, log_r8: arr.log_r8, phi, t: fam.t_of_phi(phi) })
}

/// Γ2 through the origin with its x-parameterization (x8 = -1 on the upper branch).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gamma2 {
    pub s_target: f64,
    /// P8 → P1 with x from -1 up to 0⁻.
    pub upper: Trajectory,
    /// P1 → P9 with x from 0⁺ up to x9.
    pub lower: Trajectory,
    pub t_upper: Option<f64>,
    pub t_lower: Option<f64>,
    /// Family members whose reflections give the lower branch (slope -s in the upper half plane).
    pub lower_slope_source: f64,
    pub nu: f64,
    pub omega: f64,
    pub x9: f64,
    /// ln R at the origin and at P9 relative to ln R(x8) = 0.
    pub log_r_origin: f64,
    pub log_r9: f64,
}

/// Relative margin by which |s| must exceed δ.
pub const DELTA_MARGIN: f64 = 1e-3;

fn set_x(traj: &mut Trajectory, sign: f64) {
    traj.x_values = Some(traj.samples.iter().map(|s| sign * s.log_x.exp()).collect());
}

pub fn build_gamma2(sys: &System, fam: &DepartureFamily, delta: f64, s_target: f64, opts: &BuildOptions) -> Result<Gamma2> {
    opts.validate()?;
    if s_target.is_nan() {
        return Err(Error::InvalidInput("slope must not be NaN".into()));
    }
    if !(s_target.abs() > delta * (1.0 + DELTA_MARGIN)) {
        return Err(Error::OutOfRegime(format!("|s| = {} does not exceed δ = {delta}", s_target.abs())));
    }
    let psi_u = angle_of_slope(s_target);
    let up = shoot_from_origin(sys, fam, psi_u, opts)?;
    let lo = if s_target.is_infinite() { up.clone() } else { shoot_from_origin(sys, fam, angle_of_slope(-s_target), opts)? };
    let shift_x = -up.log_x8;
    let shift_r = -up.log_r8;
    let mut upper = up.traj.reversed();
    upper.shift_logs(shift_x, shift_r);
    set_x(&mut upper, -1.0);
    let mut lower = lo.traj.reflect();
    lower.shift_logs(shift_x, shift_r);
    set_x(&mut lower, 1.0);
    let e = shift_x.exp().recip();
    let nu = -psi_u.cos() * e;
    let omega = -psi_u.sin() * e;
    Ok(Gamma2 {
        s_target,
        upper,
        lower,
        t_upper: up.t,
        t_lower: lo.t,
        lower_slope_source: -s_target,
        nu: if nu.abs() < 1e-15 * omega.abs() { 0.0 } else { nu },
        omega,
        x9: (lo.log_x8 + shift_x).exp(),
        log_r_origin: shift_r,
        log_r9: lo.log_r8 + shift_r,
    })
}

/// The assembled global solution P+∞ → P8 → P1 → P9 → P-∞.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionCurve {
    pub gamma1: Trajectory,
    pub gamma2_upper: Trajectory,
    pub gamma2_lower: Trajectory,
    pub gamma3: Trajectory,
    pub x8: f64,
    pub x9: f64,
    pub s_origin: f64,
    pub nu: f64,
    pub omega: f64,
    /// ln R at x = 0 (R(x8) = 1).
    pub log_r_origin: f64,
    pub a8: Option<A8Estimate>,
    pub p8: PhasePoint,
}

/// One point of the assembled curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub point: PhasePoint,
    /// ln R from the mass equation.
    pub log_r: f64,
}

impl SolutionCurve {
    /// All samples in increasing x, with the exact origin point inserted between the Γ2 branches.
    pub fn points(&self) -> Vec<CurvePoint> {
        let mut out = Vec::new();
        extend_points(&mut out, &self.gamma1);
        extend_points(&mut out, &self.gamma2_upper);
        out.push(CurvePoint { x: 0.0, point: origin(), log_r: self.log_r_origin });
        extend_points(&mut out, &self.gamma2_lower);
        extend_points(&mut out, &self.gamma3);
        out
    }
}

fn extend_points(out: &mut Vec<CurvePoint>, t: &Trajectory) {
    let xs = t.x_values.as_ref().expect("assembled trajectories carry x");
    out.extend(t.samples.iter().zip(xs).map(|(s, x)| CurvePoint { x: *x, point: s.point, log_r: s.log_r }));
}

/// Joins Γ1, Γ2 and the reflected Γ1 and validates signs and monotonicity of x.
pub fn assemble(gamma1: &Gamma1, gamma2: &Gamma2) -> Result<SolutionCurve> {
    if !gamma1.reached_p8 {
        return Err(Error::Construction("Γ1 did not reach P8".into()));
    }
    if gamma2.nu == 0.0 && gamma2.omega == 0.0 {
        return Err(Error::Construction("Γ2 has vanishing limits ν = ω = 0".into()));
    }
    let mut g1 = gamma1.traj.clone();
    set_x(&mut g1, -1.0);
    let ln9 = gamma2.x9.ln();
    let mut g3 = gamma1.traj.reflect().reversed();
    g3.shift_logs(ln9, gamma2.log_r9);
    set_x(&mut g3, 1.0);
    let sol = SolutionCurve {
        gamma1: g1,
        gamma2_upper: gamma2.upper.clone(),
        gamma2_lower: gamma2.lower.clone(),
        gamma3: g3,
        x8: -1.0,
        x9: gamma2.x9,
        s_origin: gamma2.s_target,
        nu: gamma2.nu,
        omega: gamma2.omega,
        log_r_origin: gamma2.log_r_origin,
        a8: gamma1.a8,
        p8: gamma1.p8,
    };
    validate(&sol)?;
    Ok(sol)
}

/// Checks that x strictly increases within each branch and that sign(x)·sign(C) = -1.
pub fn validate(sol: &SolutionCurve) -> Result<()> {
    let pts = sol.points();
    for w in pts.windows(2) {
        if !(w[1].x >= w[0].x) {
            return Err(Error::Construction(format!("x decreases from {} to {}", w[0].x, w[1].x)));
        }
    }
    for p in &pts {
        if p.x != 0.0 && p.point.c != 0.0 && p.x.signum() * p.point.c.signum() != -1.0 {
            return Err(Error::Construction(format!("sign mismatch at x = {} (C = {})", p.x, p.point.c)));
        }
    }
    if !(sol.x9 > 0.0) {
        return Err(Error::Construction("x at P9 must be positive".into()));
    }
    Ok(())
}

/// The full pipeline for one slope: Γ1, separatrices, family, Γ2 and assembly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Construction {
    pub node: NodeData,
    pub gamma1: Gamma1,
    pub separatrices: SeparatrixSet,
    pub family: DepartureFamily,
    pub gamma2: Gamma2,
    pub solution: SolutionCurve,
}

pub fn construct(sys: &System, s_target: f64, opts: &BuildOptions) -> Result<Construction> {
    let node = node(sys)?;
    let gamma1 = build_gamma1(sys, opts)?;
    if !gamma1.reached_p8 {
        return Err(Error::Construction(format!("Γ1 terminated without reaching P8 ({:?})", gamma1.traj.termination)));
    }
    let separatrices = build_separatrices(sys, opts)?;
    let family = departure_family(sys, opts)?;
    let gamma2 = build_gamma2(sys, &family, separatrices.delta, s_target, opts)?;
    let solution = assemble(&gamma1, &gamma2)?;
    Ok(Construction { node, gamma1, separatrices, family, gamma2, solution })
}

/// Marks of a given kind on a trajectory.
pub fn marks_of(traj: &Trajectory, kind: MarkKind) -> Vec<Mark> {
    traj.marks.iter().filter(|m| m.kind == kind).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::SimilarityParams;
    use std::sync::OnceLock;

    fn flagship() -> System {
        System::new(SimilarityParams::isentropic(3, 12.0, 0.02).unwrap()).unwrap()
    }

    fn built() -> &'static Construction {
        static C: OnceLock<Construction> = OnceLock::new();
        C.get_or_init(|| construct(&flagship(), -20.0, &BuildOptions::default()).unwrap())
    }

    #[test]
    fn gamma1_reaches_p8_along_l1() {
        let c = built();
        let g1 = &c.gamma1;
        assert!(g1.reached_p8);
        assert!(g1.slope_error.unwrap() < SLOPE_AGREEMENT, "{:?}", g1.slope_error);
        assert!(g1.traj.last().point.dist(g1.p8) <= BuildOptions::default().integ.stop_radius);
        let a8 = g1.a8.unwrap();
        assert!(a8.agree && a8.linear < 0.0);
        assert!(g1.traj.first().point.c > 1e5);
    }

    #[test]
    fn gamma1_stays_in_omega() {
        let s = flagship();
        let c = built();
        assert!(omega_violation(&s, &c.node, &c.gamma1.traj) < 1e-9);
    }

    #[test]
    fn bracketing_starts_reach_p8() {
        let s = flagship();
        let opts = BuildOptions::default();
        let a = gamma1_from_wz(&s, [0.0, 0.3], &opts).unwrap();
        assert!(a.reached_p8);
        let nd = node_data_p8(&s).unwrap();
        let w = 0.5 * (nd.p8.v - s.v_star());
        let z = 1.01 / s.g_zero_c2(s.v_star() + w);
        let b = gamma1_from_wz(&s, [w, z], &opts).unwrap();
        assert!(b.reached_p8);
        assert!(b.slope_error.unwrap() < SLOPE_AGREEMENT);
    }

    #[test]
    fn halving_start_offset_is_stable() {
        let s = flagship();
        let opts = BuildOptions::default();
        let a = build_gamma1(&s, &opts).unwrap();
        let b = build_gamma1(&s, &BuildOptions { wz_offset: 0.5 * opts.wz_offset, ..opts }).unwrap();
        assert!(b.reached_p8);
        assert!(a.traj.last().point.dist(b.traj.last().point) < 1e-6);
        assert!(b.slope_error.unwrap() < SLOPE_AGREEMENT);
    }

    #[test]
    fn gamma1_rejects_bad_start() {
        let s = flagship();
        assert!(gamma1_from_wz(&s, [-1e-3, 0.01], &BuildOptions::default()).is_err());
    }

    #[test]
    fn reflection_is_an_involution() {
        let t = &built().gamma1.traj;
        assert_eq!(&t.reflect().reflect(), t);
        let sol = &built().solution;
        assert_eq!(sol.gamma3.samples.len(), sol.gamma1.samples.len());
        let n = sol.gamma1.samples.len();
        for (i, p) in sol.gamma3.samples.iter().enumerate() {
            assert_eq!(p.point, sol.gamma1.samples[n - 1 - i].point.reflect());
        }
    }

    #[test]
    fn separatrix_slopes() {
        let sep = &built().separatrices;
        assert!(sep.eps >= 0.0 && sep.eps < 1e-6, "{}", sep.eps);
        assert!(sep.zeta > 1.0);
        assert_eq!(sep.delta, sep.zeta);
        let p8 = built().node.p8;
        assert!(sep.theta.last().point.dist(p8) <= BuildOptions::default().integ.stop_radius);
        let end_phi = sep.phi.last().point;
        let end_psi = sep.psi.last().point;
        assert!((end_phi.c / end_phi.v + end_psi.c / end_psi.v).abs() < 1e-12);
        assert!((end_phi.c / end_phi.v + sep.zeta).abs() < 1e-6 * sep.zeta);
    }

    #[test]
    fn saddle_eigen_of_diagonal() {
        let [(a, va), (b, vb)] = saddle_eigen([[-2.0, 0.0], [0.0, 3.0]]).unwrap();
        assert_eq!((a, b), (-2.0, 3.0));
        assert!((va[0].abs() - 1.0).abs() < 1e-15 && vb[1].abs() == 1.0);
        assert!(saddle_eigen([[1.0, 0.0], [0.0, 2.0]]).is_err());
    }

    #[test]
    fn departures_span_from_minus_zeta_to_eps() {
        let s = flagship();
        let opts = BuildOptions::default();
        let c = built();
        let near_theta = depart_p8(&s, &c.family, 0.01, &opts).unwrap();
        let zeta = c.separatrices.zeta;
        assert!((near_theta.slope.unwrap() + zeta).abs() < 1e-3 * zeta, "{:?}", near_theta.slope);
        let gs = depart_p8(&s, &c.family, 1.0, &opts).unwrap();
        assert!((gs.slope.unwrap() - c.separatrices.eps).abs() < 1e-6);
        for t in [0.01, 0.3, 0.6, 0.9, 1.0] {
            let d = depart_p8(&s, &c.family, t, &opts).unwrap();
            assert!(d.slope.is_some() && d.crosses_g_first_quadrant, "t = {t}");
        }
        assert!(depart_p8(&s, &c.family, 0.0, &opts).is_err());
    }

    #[test]
    fn family_parameter_round_trip() {
        let fam = &built().family;
        for t in [0.5, 0.75, 0.95, 1.0] {
            assert!((fam.t_of_phi(fam.phi_of_t(t)).unwrap() - t).abs() < 1e-8);
        }
        assert!(fam.t_of_phi(fam.phi_theta - 0.1).is_none());
    }

    #[test]
    fn vertical_arrival_has_reflected_lower_branch() {
        let s = flagship();
        let c = built();
        let g = build_gamma2(&s, &c.family, c.separatrices.delta, f64::INFINITY, &BuildOptions::default()).unwrap();
        assert_eq!(g.nu, 0.0);
        assert!((g.x9 - 1.0).abs() < 1e-12);
        let n = g.upper.samples.len();
        assert_eq!(n, g.lower.samples.len());
        for (i, p) in g.lower.samples.iter().enumerate() {
            assert_eq!(p.point, g.upper.samples[n - 1 - i].point.reflect());
        }
        assert!(assemble(&c.gamma1, &g).is_ok());
    }

    #[test]
    fn slopes_within_delta_are_rejected() {
        let s = flagship();
        let c = built();
        let d = c.separatrices.delta;
        for slope in [0.5 * d, -0.5 * d, d, 0.0] {
            let r = build_gamma2(&s, &c.family, d, slope, &BuildOptions::default());
            assert!(matches!(r, Err(Error::OutOfRegime(_))), "{slope}");
        }
        assert!(build_gamma2(&s, &c.family, d, f64::NAN, &BuildOptions::default()).is_err());
    }

    #[test]
    fn gamma2_crosses_half_planes_through_origin() {
        let g = &built().gamma2;
        assert!(g.upper.samples.iter().all(|p| p.point.c >= 0.0));
        assert!(g.lower.samples.iter().all(|p| p.point.c <= 0.0));
        let t_l = g.t_lower.unwrap();
        assert!(t_l > 0.0 && t_l <= 1.0);
        assert!(g.t_upper.unwrap() > 0.0);
    }

    #[test]
    fn assembled_curve_invariants() {
        let sol = &built().solution;
        assert_eq!(sol.x8, -1.0);
        assert!(sol.x9 > 0.0);
        assert!(sol.nu != 0.0 && sol.omega != 0.0 && sol.nu.is_finite() && sol.omega.is_finite());
        assert!((sol.omega / sol.nu - sol.s_origin).abs() < 1e-9 * sol.s_origin.abs());
        let pts = sol.points();
        assert_eq!(pts.iter().filter(|p| p.x == 0.0).count(), 1);
        assert!(pts.windows(2).all(|w| w[1].x >= w[0].x));
        assert!(pts.last().unwrap().point.c < -1e5);
        assert!(pts.last().unwrap().x > sol.x9);
        assert!(validate(sol).is_ok());
        let x8 = pts.iter().min_by(|a, b| (a.x + 1.0).abs().total_cmp(&(b.x + 1.0).abs())).unwrap();
        assert!(x8.point.dist(sol.p8) < 1e-6);
    }

    #[test]
    fn options_validation() {
        let o = BuildOptions::default();
        assert!(o.validate().is_ok());
        assert!(BuildOptions { node_offset: 1.0, ..o }.validate().is_err());
        assert!(BuildOptions { wz_offset: -1.0, ..o }.validate().is_err());
        let r = o.approach_radii();
        assert!(r.windows(2).all(|w| w[1] < w[0]));
        assert!(*r.last().unwrap() <= o.integ.stop_radius);
    }
}
