//! Rankine-Hugoniot jumps in similarity variables, entropy conditions, the converging-shock probe
//! for κ = 0, and the Hugoniot-locus test for expanding shocks after collapse.

use rayon::prelude::*;
use serde::Serialize;

use crate::critical_points::{roots68, PointId};
use crate::error::{Error, Result};
use crate::ode::{integrate_planar, Chart, Event, IntegratorOptions, Termination, Trajectory};
use crate::similarity::{PhasePoint, SimilarityParams, System};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpState {
    pub minus: PhasePoint,
    pub plus: PhasePoint,
    pub r_minus: Option<f64>,
    pub r_plus: Option<f64>,
}

/// Post-jump state; C+ carries the sign of C- (positive for C- = +0).
pub fn hugoniot_map(gamma: f64, minus: PhasePoint, r_minus: Option<f64>) -> Result<JumpState> {
    if !(gamma > 1.0) {
        return Err(Error::InvalidParams("gamma must exceed 1".into()));
    }
    let w = 1.0 + minus.v;
    if w == 0.0 || !w.is_finite() {
        return Err(Error::Singular { v: minus.v, c: minus.c, what: "1 + V vanishes ahead of the jump" });
    }
    let c2 = minus.c * minus.c;
    let wp = (gamma - 1.0) / (gamma + 1.0) * w + 2.0 * c2 / ((gamma + 1.0) * w);
    let cp2 = c2 + 0.5 * (gamma - 1.0) * (w * w - wp * wp);
    if cp2 < 0.0 {
        return Err(Error::NotReal("post-jump sound speed"));
    }
    let sign = if minus.c.is_sign_negative() { -1.0 } else { 1.0 };
    let plus = PhasePoint::new(wp - 1.0, sign * cp2.sqrt());
    Ok(JumpState { minus, plus, r_minus, r_plus: r_minus.map(|r| r * w / wp) })
}

/// Residuals of mass, momentum and energy fluxes across a jump (unit density ahead if absent).
pub fn jump_residuals(gamma: f64, j: &JumpState) -> [f64; 3] {
    let (wm, wp) = (1.0 + j.minus.v, 1.0 + j.plus.v);
    let rm = j.r_minus.unwrap_or(1.0);
    let rp = j.r_plus.unwrap_or(rm * wm / wp);
    let (cm2, cp2) = (j.minus.c * j.minus.c, j.plus.c * j.plus.c);
    let mass = rp * wp - rm * wm;
    let mom = rp * (wp * wp + cp2 / gamma) - rm * (wm * wm + cm2 / gamma);
    let en = 0.5 * wp * wp + cp2 / (gamma - 1.0) - 0.5 * wm * wm - cm2 / (gamma - 1.0);
    let scale = 1.0 + rm * (wm * wm + cm2);
    [mass / scale, mom / scale, en / scale]
}

/// Post-shock state of a quiescent pre-shock state for the given γ.
pub fn p_plus(gamma: f64) -> Result<PhasePoint> {
    Ok(hugoniot_map(gamma, PhasePoint::new(0.0, 0.0), None)?.plus)
}

/// Entropy conditions of a converging 1-shock: C- < 1+V- and C+ > 1+V+.
pub fn lax_check(minus: PhasePoint, plus: PhasePoint) -> bool {
    minus.c < 1.0 + minus.v && plus.c > 1.0 + plus.v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scenario {
    /// P+ above the zero set of F: the trajectory first moves up.
    A,
    /// P+ below it: the trajectory moves monotonically down.
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub n: u32,
    pub gamma: f64,
    pub lambda: f64,
    pub start: PhasePoint,
    pub scenario: Scenario,
    /// V at the first crossing of L+, if any.
    pub v_cross: Option<f64>,
    pub v8: f64,
    pub reached_p8: bool,
    pub termination: Termination,
    #[serde(skip)]
    pub traj: Trajectory,
}

/// Follows the x-flow (-G, -F) from P+ with κ = 0 until L+ is crossed or P8 is reached.
pub fn guderley_probe(n: u32, gamma: f64, lambda: f64, opts: &IntegratorOptions) -> Result<ProbeResult> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParams("lambda must lie in (0, 1)".into()));
    }
    let sys = System::new(SimilarityParams::new(n, gamma, lambda, 0.0)?)?;
    let start = p_plus(gamma)?;
    let v8 = roots68(&sys).ok_or(Error::NotReal("P8"))?.v_plus;
    let p8 = PhasePoint::new(v8, 1.0 + v8);
    let scenario = if sys.f(start) < 0.0 { Scenario::A } else { Scenario::B };
    let events = [
        Event::CrossLPlus { terminal: true },
        Event::Ball { id: PointId::P8, center: p8, radius: opts.stop_radius, terminal: true },
        Event::Box { v_min: -1.0, v_max: 3.0, c_min: 0.0, c_max: 1e3 },
    ];
    let traj = integrate_planar(&sys, Chart::VC, [start.v, start.c], [0.0, 0.0], -1.0, &events, opts);
    let reached_p8 = traj.termination == Termination::HitTarget;
    let v_cross = (traj.termination == Termination::CrossedLPlus).then(|| traj.last().point.v);
    Ok(ProbeResult { n, gamma, lambda, start, scenario, v_cross, v8, reached_p8, termination: traj.termination, traj })
}

/// Probes every (n, γ, λ) cell in parallel; results follow the nesting n, γ, λ.
pub fn guderley_sweep(ns: &[u32], gammas: &[f64], lambdas: &[f64], opts: &IntegratorOptions) -> Vec<Result<ProbeResult>> {
    let cells: Vec<(u32, f64, f64)> = ns
        .iter()
        .flat_map(|&n| gammas.iter().flat_map(move |&g| lambdas.iter().map(move |&l| (n, g, l))))
        .collect();
    cells.par_iter().map(|&(n, g, l)| guderley_probe(n, g, l, opts)).collect()
}

/// Jumps of every sample of the lower Γ2 branch (ordered from the origin), under the 3-shock
/// convention C+ < 0; the first state is the jump of the origin itself.
pub fn hugoniot_locus(gamma: f64, lower: &Trajectory) -> Result<Vec<JumpState>> {
    let mut out = vec![hugoniot_map(gamma, PhasePoint::new(0.0, -0.0), None)?];
    for s in &lower.samples {
        out.push(hugoniot_map(gamma, s.point, None)?);
    }
    Ok(out)
}

fn segment_intersection(a: PhasePoint, b: PhasePoint, c: PhasePoint, d: PhasePoint) -> Option<PhasePoint> {
    let (r0, r1) = (b.v - a.v, b.c - a.c);
    let (s0, s1) = (d.v - c.v, d.c - c.c);
    let den = r0 * s1 - r1 * s0;
    if den == 0.0 {
        return None;
    }
    let (q0, q1) = (c.v - a.v, c.c - a.c);
    let t = (q0 * s1 - q1 * s0) / den;
    let u = (q0 * r1 - q1 * r0) / den;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then(|| PhasePoint::new(a.v + t * r0, a.c + t * r1))
}

/// First crossing of the polyline `h` with `gamma3` strictly below L-, ignoring segments that
/// touch the ball of radius `exclude` around `p9`.
pub fn shock_detect(h: &[PhasePoint], gamma3: &[PhasePoint], p9: PhasePoint, exclude: f64) -> Option<PhasePoint> {
    let keep = |a: PhasePoint, b: PhasePoint| a.dist(p9) > exclude && b.dist(p9) > exclude;
    let bbox = |a: PhasePoint, b: PhasePoint| (a.v.min(b.v), a.v.max(b.v), a.c.min(b.c), a.c.max(b.c));
    let g_segs: Vec<_> = gamma3.windows(2).filter(|w| keep(w[0], w[1])).map(|w| (w[0], w[1], bbox(w[0], w[1]))).collect();
    for w in h.windows(2) {
        if !keep(w[0], w[1]) {
            continue;
        }
        let hb = bbox(w[0], w[1]);
        for &(c, d, gb) in &g_segs {
            if hb.1 < gb.0 || gb.1 < hb.0 || hb.3 < gb.2 || gb.3 < hb.2 {
                continue;
            }
            if let Some(p) = segment_intersection(w[0], w[1], c, d) {
                if p.c < -(1.0 + p.v) && p.dist(p9) > exclude {
                    return Some(p);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{construct, BuildOptions};
    use proptest::prelude::*;

    fn closed_p_plus(g: f64) -> PhasePoint {
        PhasePoint::new(-2.0 / (g + 1.0), (2.0 * g * (g - 1.0)).sqrt() / (g + 1.0))
    }

    #[test]
    fn p_plus_closed_form() {
        let gammas: Vec<f64> = (0..19).map(|k| 1.05 + 0.5 * k as f64).chain([3.0]).collect();
        assert_eq!(gammas.len(), 20);
        for g in gammas {
            let p = p_plus(g).unwrap();
            let q = closed_p_plus(g);
            assert!((p.v - q.v).abs() < 1e-14 && (p.c - q.c).abs() < 1e-14, "γ = {g}");
        }
        let p = p_plus(3.0).unwrap();
        assert!((p.v + 0.5).abs() < 1e-15 && (p.c - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_jumps() {
        assert!(hugoniot_map(1.0, PhasePoint::new(0.0, 0.0), None).is_err());
        assert!(hugoniot_map(1.4, PhasePoint::new(-1.0, 0.3), None).is_err());
    }

    #[test]
    fn lax_examples() {
        let o = PhasePoint::new(0.0, 0.0);
        assert!(lax_check(o, p_plus(1.4).unwrap()));
        let on = PhasePoint::new(0.2, 1.2);
        assert!(!lax_check(on, on));
        assert!(!lax_check(PhasePoint::new(0.0, 2.0), p_plus(1.4).unwrap()));
    }

    proptest! {
        #[test]
        fn zero_strength_on_critical_lines(v in -0.99f64..3.0, g in 1.01f64..50.0, upper in any::<bool>()) {
            let c = if upper { 1.0 + v } else { -(1.0 + v) };
            let m = PhasePoint::new(v, c);
            let j = hugoniot_map(g, m, Some(2.0)).unwrap();
            prop_assert!((j.plus.v - v).abs() < 1e-12 * (1.0 + v.abs()));
            prop_assert!((j.plus.c - c).abs() < 1e-12 * (1.0 + c.abs()));
            prop_assert!((j.r_plus.unwrap() - 2.0).abs() < 1e-12);
        }

        #[test]
        fn fluxes_balance(v in -0.95f64..2.0, c in -3.0f64..3.0, g in 1.01f64..50.0, r in 0.1f64..10.0) {
            prop_assume!((c * c - (1.0 + v) * (1.0 + v)).abs() > 1e-3);
            let j = hugoniot_map(g, PhasePoint::new(v, c), Some(r));
            prop_assume!(j.is_ok());
            let j = j.unwrap();
            for res in jump_residuals(g, &j) {
                prop_assert!(res.abs() < 1e-10, "{res}");
            }
            let mass = j.r_plus.unwrap() * (1.0 + j.plus.v) - r * (1.0 + v);
            prop_assert!(mass.abs() < 1e-12 * r * (1.0 + v).abs().max(1.0));
            prop_assert_eq!(j.plus.c.is_sign_negative(), c.is_sign_negative());
        }
    }

    #[test]
    fn probe_hits_l_plus_left_of_p8() {
        let r = guderley_probe(3, 5.0 / 3.0, 0.5, &IntegratorOptions::default()).unwrap();
        assert!(!r.reached_p8);
        assert!(r.v_cross.unwrap() < r.v8);
        let last = r.traj.last().point;
        assert!((last.c - (1.0 + last.v)).abs() < 1e-9);
        assert!(guderley_probe(3, 5.0 / 3.0, 1.5, &IntegratorOptions::default()).is_err());
    }

    #[test]
    fn probe_start_for_stiff_gas() {
        let r = guderley_probe(3, 1e6, 0.5, &IntegratorOptions::default()).unwrap();
        assert!(r.start.dist(PhasePoint::new(0.0, 2f64.sqrt())) < 1e-5);
    }

    #[test]
    fn guderley_sweep_never_reaches_p8() {
        let lambdas: Vec<f64> = (1..=9).map(|k| 0.1 * k as f64).collect();
        let res = guderley_sweep(&[2, 3], &[1.4, 5.0 / 3.0, 3.0, 10.0, 1e6], &lambdas, &IntegratorOptions::default());
        assert_eq!(res.len(), 90);
        for r in res {
            let r = r.unwrap();
            assert!(!r.reached_p8 && r.v_cross.unwrap() < r.v8, "{} {} {}", r.n, r.gamma, r.lambda);
        }
    }

    #[test]
    fn flagship_locus_stays_below_l_minus_and_misses_gamma3() {
        let sys = System::new(SimilarityParams::isentropic(3, 12.0, 0.02).unwrap()).unwrap();
        let c = construct(&sys, -20.0, &BuildOptions::default()).unwrap();
        let h = hugoniot_locus(12.0, &c.solution.gamma2_lower).unwrap();
        let first = h[0].plus;
        assert_eq!(first, closed_p_plus(12.0).reflect());
        assert!(h.iter().all(|j| j.plus.c < -(1.0 + j.plus.v)));
        let p9 = c.solution.p8.reflect();
        assert!(h.last().unwrap().plus.dist(p9) < 1e-3);
        let hp: Vec<PhasePoint> = h.iter().map(|j| j.plus).collect();
        let g3: Vec<PhasePoint> = c.solution.gamma3.points().collect();
        let ex = BuildOptions::default().integ.stop_radius;
        assert!(shock_detect(&hp, &g3, p9, ex).is_none());
        let shifted: Vec<PhasePoint> = hp.iter().map(|p| PhasePoint::new(p.v + 0.01, p.c)).collect();
        assert!(shock_detect(&shifted, &g3, p9, ex).is_some());
    }

    #[test]
    fn segment_crossing_geometry() {
        let h = [PhasePoint::new(-2.0, -1.0), PhasePoint::new(0.0, -3.0)];
        let g = [PhasePoint::new(-2.0, -3.0), PhasePoint::new(0.0, -1.0)];
        let p = shock_detect(&h, &g, PhasePoint::new(10.0, 10.0), 1e-7).unwrap();
        assert!((p.v + 1.0).abs() < 1e-15 && (p.c + 2.0).abs() < 1e-15);
        let above = [PhasePoint::new(-0.5, 0.0), PhasePoint::new(0.5, 0.0)];
        let cross = [PhasePoint::new(0.0, -0.1), PhasePoint::new(0.0, 0.1)];
        assert!(shock_detect(&above, &cross, PhasePoint::new(10.0, 10.0), 1e-7).is_none());
        assert!(shock_detect(&h, &g, PhasePoint::new(-1.0, -2.0), 0.5).is_none());
    }
}
