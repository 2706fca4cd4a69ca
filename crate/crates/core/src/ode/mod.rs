//! Numerical integration of the similarity ODEs in the (V, C) plane, in the chart
//! W = V-V*, Z = C⁻² around C = ±∞, and in log-polar coordinates at the origin.
//!
//! Planar integration follows the arclength-normalized field ±(G, F)/|(G, F)|. Two auxiliary
//! states ride along: ln|x| (from d ln|x|/dτ = -λD) and ln R (from the mass equation), both up
//! to an additive constant fixed later by anchoring.

pub mod integrator;
mod polar;

use serde::Serialize;

pub use integrator::{State, Tolerances};
pub use polar::{continue_to_origin, start_from_origin, OriginApproach};

use crate::critical_points::PointId;
use crate::error::{Error, Result};
use crate::similarity::{PhasePoint, System};
use integrator::{integrate, EventFn, StepperConfig, Stop};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub event_tol: f64,
    pub stop_radius: f64,
    pub max_steps: usize,
    pub max_length: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.02,
            event_tol: 1e-12,
            stop_radius: 1e-7,
            max_steps: 400_000,
            max_length: 50.0,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.rel_tol, self.abs_tol, self.max_step, self.event_tol, self.stop_radius, self.max_length];
        if vals.iter().all(|v| v.is_finite() && *v > 0.0) && self.max_steps > 0 {
            Ok(())
        } else {
            Err(Error::InvalidInput("integrator options must be positive".into()))
        }
    }

    /// The same options with both error tolerances divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self { rel_tol: self.rel_tol / factor, abs_tol: self.abs_tol / factor, ..*self }
    }

    fn stepper(&self, abs: State) -> StepperConfig {
        StepperConfig {
            tol: Tolerances { rel: self.rel_tol, abs },
            h_init: 1e-4f64.min(self.max_step),
            max_step: self.max_step,
            min_step: 1e-15,
            event_tol: self.event_tol,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Chart {
    VC,
    WZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    HitTarget,
    CrossedLPlus,
    CrossedLMinus,
    LeftDomain,
    StepFloor,
    MaxSteps,
    /// Arclength budget exhausted without any event.
    MaxLength,
}

/// What a recorded event was.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MarkKind {
    Ball { id: PointId, radius: f64 },
    CrossG,
    CrossF,
    CrossLPlus,
    CrossLMinus,
    LeftBox,
    Crossover,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    /// Integration parameter (arclength in the chart of integration).
    pub s: f64,
    /// Location in the (V, C) plane.
    pub point: PhasePoint,
    /// Chart coordinates: (V, C) or (W, Z).
    pub raw: [f64; 2],
    /// ln|x| up to an additive constant.
    pub log_x: f64,
    /// ln R up to an additive constant.
    pub log_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mark {
    pub kind: MarkKind,
    pub sample: Sample,
}

/// An ordered sample path of the autonomous system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub chart: Chart,
    pub samples: Vec<Sample>,
    pub x_values: Option<Vec<f64>>,
    pub termination: Termination,
    pub marks: Vec<Mark>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn points(&self) -> impl Iterator<Item = PhasePoint> + '_ {
        self.samples.iter().map(|s| s.point)
    }

    /// Mirror image across the V-axis; x changes sign, everything else is kept.
    pub fn reflect(&self) -> Self {
        let refl = |s: &Sample| Sample {
            point: s.point.reflect(),
            raw: match self.chart {
                Chart::VC => [s.raw[0], -s.raw[1]],
                Chart::WZ => s.raw,
            },
            ..*s
        };
        Self {
            chart: self.chart,
            samples: self.samples.iter().map(refl).collect(),
            x_values: self.x_values.as_ref().map(|xs| xs.iter().map(|x| -x).collect()),
            termination: self.termination,
            marks: self.marks.iter().map(|m| Mark { kind: m.kind, sample: refl(&m.sample) }).collect(),
        }
    }

    /// Reverses the sample order and re-parameterizes s as arclength from the new start.
    pub fn reversed(&self) -> Self {
        let s_end = self.last().s;
        let samples = self.samples.iter().rev().map(|s| Sample { s: s_end - s.s, ..*s }).collect();
        Self {
            chart: self.chart,
            samples,
            x_values: self.x_values.as_ref().map(|xs| xs.iter().rev().copied().collect()),
            termination: self.termination,
            marks: self.marks.iter().rev().map(|m| Mark { kind: m.kind, sample: Sample { s: s_end - m.sample.s, ..m.sample } }).collect(),
        }
    }

    /// Shifts the auxiliary logarithms.
    pub fn shift_logs(&mut self, dlog_x: f64, dlog_r: f64) {
        for s in self.samples.iter_mut().chain(self.marks.iter_mut().map(|m| &mut m.sample)) {
            s.log_x += dlog_x;
            s.log_r += dlog_r;
        }
    }

    /// Marks of ball-entry events around `id`, in radius order of occurrence.
    pub fn ball_marks(&self, id: PointId) -> Vec<(f64, Sample)> {
        self.marks
            .iter()
            .filter_map(|m| match m.kind {
                MarkKind::Ball { id: i, radius } if i == id => Some((radius, m.sample)),
                _ => None,
            })
            .collect()
    }
}

/// dV/dx and dC/dx at a point with x ≠ 0.
pub fn rhs_x(sys: &System, x: f64, p: PhasePoint) -> Result<(f64, f64)> {
    let fl = sys.eval_fgd(p)?;
    if x == 0.0 {
        return Err(Error::InvalidInput("x must be nonzero".into()));
    }
    if fl.d == 0.0 {
        return Err(Error::Singular { v: p.v, c: p.c, what: "D vanishes" });
    }
    let den = sys.lambda() * x * fl.d;
    Ok((-fl.g / den, -fl.f / den))
}

/// dC/dV = F/G; an infinite value carries the sign of F.
pub fn slope_field(sys: &System, p: PhasePoint) -> f64 {
    let (g, f) = sys.field(p);
    if g == 0.0 {
        if f >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        f / g
    }
}

pub fn chart_to_wz(sys: &System, p: PhasePoint) -> Result<(f64, f64)> {
    if p.c == 0.0 || !p.c.is_finite() {
        return Err(Error::InvalidInput("C must be finite and nonzero".into()));
    }
    Ok((p.v - sys.v_star(), 1.0 / (p.c * p.c)))
}

pub fn chart_from_wz(sys: &System, w: f64, z: f64, sign_c: f64) -> Result<PhasePoint> {
    if !(z > 0.0) {
        return Err(Error::InvalidInput("Z must be positive".into()));
    }
    Ok(PhasePoint::new(sys.v_star() + w, sign_c.signum() * z.sqrt().recip()))
}

/// Right-hand side of the mass equation: d ln R/dτ = -[(κ+n)VD + G]/(1+V).
fn log_r_rate(sys: &System, v: f64, d: f64, g: f64) -> f64 {
    let kn = sys.params.kappa + sys.n();
    let num = kn * v * d + g;
    let w = 1.0 + v;
    if w == 0.0 {
        0.0
    } else {
        -num / w
    }
}

/// Arclength-normalized VC field with auxiliary rates.
pub(crate) fn vc_rhs(sys: &System, dir: f64, y: &State) -> Option<State> {
    let p = PhasePoint::new(y[0], y[1]);
    let (g, f) = sys.field(p);
    let nrm = g.hypot(f);
    if !(nrm > 0.0) || !nrm.is_finite() {
        return None;
    }
    let d = sys.d(p);
    let s = dir / nrm;
    Some([s * g, s * f, -s * sys.lambda() * d, s * log_r_rate(sys, p.v, d, g)])
}

/// Arclength-normalized WZ field; orientation matches (G, F) for C > 0.
pub(crate) fn wz_rhs(sys: &System, dir: f64, y: &State) -> Option<State> {
    let (w, z) = (y[0], y[1]);
    let v = sys.v_star() + w;
    let zg = sys.n() * w - sys.b_poly(v) * z;
    let zf = -2.0 * z * (sys.a_coef(v) - sys.p_poly(v) * z);
    let nrm = zg.hypot(zf);
    if !(nrm > 0.0) || !nrm.is_finite() {
        return None;
    }
    let zd = (1.0 + v) * (1.0 + v) * z - 1.0;
    let kn = sys.params.kappa + sys.n();
    let zlr = -(kn * v * zd + zg) / (1.0 + v);
    let s = dir / nrm;
    Some([s * zg, s * zf, -s * sys.lambda() * zd, s * zlr])
}

/// Event requests for [`integrate_planar`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    /// C - (1+V) changes sign (upper half plane critical line).
    CrossLPlus { terminal: bool },
    /// C + (1+V) changes sign.
    CrossLMinus { terminal: bool },
    CrossG,
    CrossF,
    /// Distance to `center` drops below `radius`.
    Ball { id: PointId, center: PhasePoint, radius: f64, terminal: bool },
    /// V or C leaves the box (terminal).
    Box { v_min: f64, v_max: f64, c_min: f64, c_max: f64 },
    /// WZ chart: Z rises through the given value (terminal).
    Crossover { z: f64 },
}

fn point_of(sys: &System, chart: Chart, y: &State, sign_c: f64) -> PhasePoint {
    match chart {
        Chart::VC => PhasePoint::new(y[0], y[1]),
        Chart::WZ => PhasePoint::new(sys.v_star() + y[0], sign_c / y[1].max(0.0).sqrt()),
    }
}

/// Integrates from `start` (chart coordinates) along `direction`·(G, F) until an event fires.
///
/// `aux` seeds (ln|x|, ln R). In the WZ chart `sign_c` selects the half plane used when
/// mapping samples back to (V, C).
pub fn integrate_planar(
    sys: &System,
    chart: Chart,
    start: [f64; 2],
    aux: [f64; 2],
    direction: f64,
    events: &[Event],
    opts: &IntegratorOptions,
) -> Trajectory {
    integrate_planar_signed(sys, chart, start, aux, direction, events, opts, 1.0)
}

#[allow(clippy::too_many_arguments)]
pub fn integrate_planar_signed(
    sys: &System,
    chart: Chart,
    start: [f64; 2],
    aux: [f64; 2],
    direction: f64,
    events: &[Event],
    opts: &IntegratorOptions,
    sign_c: f64,
) -> Trajectory {
    let dir = direction.signum();
    let abs = match chart {
        Chart::VC => [opts.abs_tol, opts.abs_tol, opts.abs_tol, opts.abs_tol],
        Chart::WZ => [1e-300, 1e-300, opts.abs_tol, opts.abs_tol],
    };
    let cfg = opts.stepper(abs);

    let pt = move |y: &State| point_of(sys, chart, y, sign_c);
    let efns: Vec<EventFn<'_>> = events
        .iter()
        .map(|ev| match *ev {
            Event::CrossLPlus { terminal } => EventFn::new(move |y: &State| { let p = pt(y); p.c - (1.0 + p.v) }, 0, terminal),
            Event::CrossLMinus { terminal } => EventFn::new(move |y: &State| { let p = pt(y); p.c + (1.0 + p.v) }, 0, terminal),
            Event::CrossG => EventFn::new(move |y: &State| sys.g(pt(y)), 0, false),
            Event::CrossF => EventFn::new(move |y: &State| sys.f(pt(y)), 0, false),
            Event::Ball { center, radius, terminal, .. } => {
                EventFn::new(move |y: &State| pt(y).dist(center) - radius, -1, terminal)
            }
            Event::Box { v_min, v_max, c_min, c_max } => EventFn::new(
                move |y: &State| {
                    let p = pt(y);
                    (p.v - v_min).min(v_max - p.v).min(p.c - c_min).min(c_max - p.c)
                },
                -1,
                true,
            ),
            Event::Crossover { z } => EventFn::new(move |y: &State| y[1] - z, 1, true),
        })
        .collect();

    let y0 = [start[0], start[1], aux[0], aux[1]];
    let out = match chart {
        Chart::VC => integrate(|y: &State| vc_rhs(sys, dir, y), 0.0, y0, opts.max_length, &cfg, &efns),
        Chart::WZ => integrate(|y: &State| wz_rhs(sys, dir, y), 0.0, y0, opts.max_length, &cfg, &efns),
    };

    let mk = |s: f64, y: &State| Sample { s, point: pt(y), raw: [y[0], y[1]], log_x: y[2], log_r: y[3] };
    let samples: Vec<Sample> = out.samples.iter().map(|(s, y)| mk(*s, y)).collect();
    let kind_of = |ev: &Event| match *ev {
        Event::CrossLPlus { .. } => MarkKind::CrossLPlus,
        Event::CrossLMinus { .. } => MarkKind::CrossLMinus,
        Event::CrossG => MarkKind::CrossG,
        Event::CrossF => MarkKind::CrossF,
        Event::Ball { id, radius, .. } => MarkKind::Ball { id, radius },
        Event::Box { .. } => MarkKind::LeftBox,
        Event::Crossover { .. } => MarkKind::Crossover,
    };
    let marks = out.hits.iter().map(|h| Mark { kind: kind_of(&events[h.index]), sample: mk(h.s, &h.state) }).collect();
    let termination = match out.stop {
        Stop::Event(i) => match events[i] {
            Event::CrossLPlus { .. } => Termination::CrossedLPlus,
            Event::CrossLMinus { .. } => Termination::CrossedLMinus,
            Event::Box { .. } => Termination::LeftDomain,
            _ => Termination::HitTarget,
        },
        Stop::Length => Termination::MaxLength,
        Stop::StepFloor => Termination::StepFloor,
        Stop::MaxSteps => Termination::MaxSteps,
    };
    Trajectory { chart, samples, x_values: None, termination, marks }
}

/// Follows a trajectory from `from` into the critical point `center` in offset coordinates.
///
/// States are (V-V0, C-C0, Δln|x|, Δln R) with purely relative error control, so the approach stays
/// accurate at radii far below the absolute tolerance. Entry into each ball of `radii` (given in
/// decreasing order) is marked; the last one ends the run. A sign change of D also ends it.
pub fn approach_point(
    sys: &System,
    id: PointId,
    center: PhasePoint,
    from: &Sample,
    direction: f64,
    radii: &[f64],
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let Some(&r_end) = radii.last() else {
        return Err(Error::InvalidInput("approach needs at least one radius".into()));
    };
    let dir = direction.signum();
    let off0 = [from.point.v - center.v, from.point.c - center.c];
    let d0 = sys.d(center);
    let d_off = move |y: &State| {
        let (a, b) = (1.0 + center.v, center.c);
        d0 + (2.0 * a + y[0]) * y[0] - (2.0 * b + y[1]) * y[1]
    };
    let rhs = move |y: &State| vc_rhs(sys, dir, &[center.v + y[0], center.c + y[1], 0.0, 0.0]);
    let mut efns: Vec<EventFn<'_>> = radii
        .iter()
        .enumerate()
        .map(|(i, &r)| EventFn::new(move |y: &State| y[0].hypot(y[1]) - r, -1, i + 1 == radii.len()))
        .collect();
    efns.push(EventFn::new(move |y: &State| d_off(y) / y[0].hypot(y[1]), 0, true));
    let cfg = StepperConfig {
        tol: Tolerances { rel: opts.rel_tol * 1e-2, abs: [1e-300; 4] },
        h_init: 1e-3 * off0[0].hypot(off0[1]),
        max_step: opts.max_step,
        min_step: 1e-6 * r_end,
        event_tol: 1e-6 * r_end,
        max_steps: opts.max_steps,
    };
    let y0 = [off0[0], off0[1], 0.0, 0.0];
    let out = integrate(rhs, 0.0, y0, opts.max_length, &cfg, &efns);
    let mk = |s: f64, y: &State| {
        let point = PhasePoint::new(center.v + y[0], center.c + y[1]);
        Sample { s: from.s + s, point, raw: [point.v, point.c], log_x: from.log_x + y[2], log_r: from.log_r + y[3] }
    };
    let samples = out.samples.iter().map(|(s, y)| mk(*s, y)).collect();
    let marks = out
        .hits
        .iter()
        .filter(|h| h.index < radii.len())
        .map(|h| Mark { kind: MarkKind::Ball { id, radius: radii[h.index] }, sample: mk(h.s, &h.state) })
        .collect();
    let termination = match out.stop {
        Stop::Event(i) if i < radii.len() => Termination::HitTarget,
        Stop::Event(_) if center.c >= 0.0 => Termination::CrossedLPlus,
        Stop::Event(_) => Termination::CrossedLMinus,
        Stop::Length => Termination::MaxLength,
        Stop::StepFloor => Termination::StepFloor,
        Stop::MaxSteps => Termination::MaxSteps,
    };
    Ok(Trajectory { chart: Chart::VC, samples, x_values: None, termination, marks })
}

/// How the free additive constant of ln|x| is pinned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    /// Sample `index` gets the value `x`.
    Index(usize, f64),
    /// The location where the integrated ln|x| equals `log_x` gets the value `x`.
    LogX { log_x: f64, x: f64 },
}

/// Assigns x to every sample from the integrated ln|x|, pinned at the anchor.
pub fn x_parameterize(traj: &Trajectory, anchor: Anchor) -> Result<Trajectory> {
    let (ref_log, x_ref) = match anchor {
        Anchor::Index(i, x) => {
            let s = traj.samples.get(i).ok_or_else(|| Error::InvalidInput("anchor index out of range".into()))?;
            (s.log_x, x)
        }
        Anchor::LogX { log_x, x } => (log_x, x),
    };
    if x_ref == 0.0 || !x_ref.is_finite() {
        return Err(Error::InvalidInput("anchor x must be finite and nonzero".into()));
    }
    let base = x_ref.abs().ln() - ref_log;
    let sign = x_ref.signum();
    let xs: Vec<f64> = traj.samples.iter().map(|s| sign * (s.log_x + base).exp()).collect();
    let mut out = traj.clone();
    out.x_values = Some(xs);
    Ok(out)
}

/// Trapezoidal quadrature of d ln|x|/dV = -λD/G (or d ln|x|/dC = -λD/F where |F| > |G|),
/// started from the first sample's ln|x|. Cross-check for the integrated value.
pub fn quadrature_log_x(sys: &System, traj: &Trajectory) -> Result<Vec<f64>> {
    let lam = sys.lambda();
    let mut out = Vec::with_capacity(traj.samples.len());
    let mut acc = traj.samples[0].log_x;
    out.push(acc);
    for w in traj.samples.windows(2) {
        let (a, b) = (w[0].point, w[1].point);
        let (ga, fa) = sys.field(a);
        let (gb, fb) = sys.field(b);
        let scale = 1e-13 * (1.0 + a.norm());
        if ga.abs().max(fa.abs()) < scale || gb.abs().max(fb.abs()) < scale {
            return Err(Error::Singular { v: a.v, c: a.c, what: "both F and G vanish away from a flagged point" });
        }
        let use_v = ga.abs() >= fa.abs() && gb.abs() >= fb.abs();
        let inc = if use_v {
            0.5 * (-lam * sys.d(a) / ga - lam * sys.d(b) / gb) * (b.v - a.v)
        } else {
            0.5 * (-lam * sys.d(a) / fa - lam * sys.d(b) / fb) * (b.c - a.c)
        };
        acc += inc;
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::SimilarityParams;
    use approx::assert_relative_eq;

    fn flagship() -> System {
        System::new(SimilarityParams::isentropic(3, 12.0, 0.02).unwrap()).unwrap()
    }

    #[test]
    fn rhs_x_on_axis() {
        let s = flagship();
        let (_, dc) = rhs_x(&s, -0.5, PhasePoint::new(0.3, 0.0)).unwrap();
        assert_eq!(dc, 0.0);
        assert!(rhs_x(&s, -0.5, PhasePoint::new(0.0, 1.0)).is_err());
        assert!(rhs_x(&s, 0.0, PhasePoint::new(0.1, 0.3)).is_err());
    }

    #[test]
    fn rhs_x_small_along_v_star() {
        let s = flagship();
        let c = 1e4;
        let (dv, dc) = rhs_x(&s, -1.0, PhasePoint::new(s.v_star(), c)).unwrap();
        assert!(dv.abs() < 1e-6 * dc.abs() / c);
    }

    #[test]
    fn slope_field_cases() {
        let s = flagship();
        let v = 0.03;
        let cbar = s.g_zero_c2(v);
        assert!(cbar < 0.0 || slope_field(&s, PhasePoint::new(v, cbar.abs().sqrt())).is_finite());
        let v = 0.0601;
        let cb = s.g_zero_c2(v).sqrt();
        let p = PhasePoint::new(v, cb);
        let sl = s.f(p) / s.g(p);
        assert!(sl.abs() > 1e8 || !sl.is_finite());
        assert!(slope_field(&s, PhasePoint::new(s.v_star(), 2.0)).is_finite());
        let omega = PhasePoint::new(0.06, 1.5);
        assert!(slope_field(&s, omega) < 0.0);
    }

    #[test]
    fn wz_round_trip() {
        let s = flagship();
        let (w, z) = chart_to_wz(&s, PhasePoint::new(s.v_star(), 1.0)).unwrap();
        assert_eq!((w, z), (0.0, 1.0));
        for i in 0..200 {
            let v = -1.5 + 0.013 * i as f64;
            let c = 0.1 + 0.05 * i as f64;
            let (w, z) = chart_to_wz(&s, PhasePoint::new(v, c)).unwrap();
            let p = chart_from_wz(&s, w, z, 1.0).unwrap();
            assert_relative_eq!(p.v, v, max_relative = 1e-14, epsilon = 1e-15);
            assert_relative_eq!(p.c, c, max_relative = 1e-14);
        }
        assert!(chart_from_wz(&s, 0.0, 0.0, 1.0).is_err());
        assert!(chart_to_wz(&s, PhasePoint::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn reflection_of_start_mirrors_trajectory() {
        let s = flagship();
        let opts = IntegratorOptions::default();
        let box_ev = Event::Box { v_min: -2.0, v_max: 1.0, c_min: -4.0, c_max: 4.0 };
        let ev = [box_ev, Event::Ball { id: PointId::P1, center: PhasePoint::new(0.0, 0.0), radius: 1e-3, terminal: true }];
        let a = integrate_planar(&s, Chart::VC, [0.05, 0.3], [0.0, 0.0], 1.0, &ev, &opts);
        let b = integrate_planar(&s, Chart::VC, [0.05, -0.3], [0.0, 0.0], 1.0, &ev, &opts);
        assert_eq!(a.termination, Termination::HitTarget);
        assert_eq!(a.samples.len(), b.samples.len());
        for (p, q) in a.samples.iter().zip(&b.samples) {
            assert!((p.point.v - q.point.v).abs() < 1e-9 && (p.point.c + q.point.c).abs() < 1e-9);
        }
    }

    #[test]
    fn x_parameterize_scaling() {
        let s = flagship();
        let opts = IntegratorOptions::default();
        let ev = [Event::Ball { id: PointId::P1, center: PhasePoint::new(0.0, 0.0), radius: 1e-3, terminal: true }];
        let t = integrate_planar(&s, Chart::VC, [0.05, 0.3], [0.0, 0.0], 1.0, &ev, &opts);
        let a = x_parameterize(&t, Anchor::Index(0, -1.0)).unwrap();
        let b = x_parameterize(&t, Anchor::Index(0, -3.5)).unwrap();
        for (xa, xb) in a.x_values.as_ref().unwrap().iter().zip(b.x_values.as_ref().unwrap()) {
            assert_relative_eq!(3.5 * xa, *xb, max_relative = 1e-15);
            assert!(*xa < 0.0);
        }
        let xs = a.x_values.unwrap();
        assert!(xs.last().unwrap().abs() < xs[0].abs());
    }

    #[test]
    fn quadrature_agrees_with_integrated_log_x() {
        let s = flagship();
        let opts = IntegratorOptions { max_step: 1e-3, ..Default::default() };
        let ev = [Event::Ball { id: PointId::P1, center: PhasePoint::new(0.0, 0.0), radius: 1e-2, terminal: true }];
        let t = integrate_planar(&s, Chart::VC, [0.05, 0.3], [0.0, 0.0], 1.0, &ev, &opts);
        let q = quadrature_log_x(&s, &t).unwrap();
        let last = t.last().log_x;
        assert!((q.last().unwrap() - last).abs() < 1e-3 * last.abs().max(1.0));
    }
}
