//! Log-polar continuation through the star node at the origin.
//!
//! With V = ρ cos ψ, C = ρ sin ψ and u = ln ρ the field near P1 is regular:
//! dψ/du = (VF - CG)/(VG + CF) = O(ρ), and ln|x| - u and ln R tend to finite limits.

use super::integrator::{integrate, EventFn, State, StepperConfig, Stop, Tolerances};
use super::{log_r_rate, IntegratorOptions, Sample};
use crate::error::{Error, Result};
use crate::similarity::{PhasePoint, System};

/// Limits read at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct OriginApproach {
    /// Samples from the switch radius down toward ρ = 0 (or the reverse for departures).
    pub samples: Vec<Sample>,
    /// Limiting polar angle of the arrival direction.
    pub psi: f64,
    /// Limiting slope C/V (±∞ for a vertical arrival).
    pub slope: f64,
    /// lim (ln|x| - ln ρ).
    pub log_x_offset: f64,
    /// lim ln R.
    pub log_r: f64,
}

fn polar_rhs(sys: &System, sign: f64, y: &State) -> Option<State> {
    let (psi, u) = (y[0], y[3]);
    let rho = u.exp();
    let p = PhasePoint::new(rho * psi.cos(), rho * psi.sin());
    let (g, f) = sys.field(p);
    let rr = p.v * g + p.c * f;
    if !(rr < 0.0) || !rr.is_finite() {
        return None;
    }
    let rho2 = rho * rho;
    let d = sys.d(p);
    let dpsi = (p.v * f - p.c * g) / rr;
    let dl = -sys.lambda() * d * rho2 / rr - 1.0;
    let dlr = log_r_rate(sys, p.v, d, g) * rho2 / rr;
    Some([sign * dpsi, sign * dl, sign * dlr, sign])
}

fn config(opts: &IntegratorOptions) -> StepperConfig {
    StepperConfig {
        tol: Tolerances { rel: opts.rel_tol, abs: [opts.abs_tol; 4] },
        h_init: 1e-3,
        max_step: 0.5,
        min_step: 1e-12,
        event_tol: 1e-10,
        max_steps: opts.max_steps,
    }
}

fn to_sample(s: f64, y: &State) -> Sample {
    let rho = y[3].exp();
    let point = PhasePoint::new(rho * y[0].cos(), rho * y[0].sin());
    Sample { s, point, raw: [point.v, point.c], log_x: y[1] + y[3], log_r: y[2] }
}

fn slope_of(psi: f64) -> f64 {
    let (s, c) = psi.sin_cos();
    if c.abs() < 1e-15 {
        if s > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        s / c
    }
}

/// Radius at which origin limits are read.
pub const END_RADIUS: f64 = 1e-14;

/// Continues an arriving trajectory from `from` (a sample near P1) to ρ = `END_RADIUS`.
pub fn continue_to_origin(sys: &System, from: &Sample, opts: &IntegratorOptions) -> Result<OriginApproach> {
    let rho0 = from.point.norm();
    if !(rho0 > END_RADIUS * 10.0) {
        return Err(Error::InvalidInput("arrival sample is already at the origin".into()));
    }
    let u0 = rho0.ln();
    let psi0 = from.point.c.atan2(from.point.v);
    let y0 = [psi0, from.log_x - u0, from.log_r, u0];
    let u_mark = (10.0 * END_RADIUS).ln();
    let u_end = END_RADIUS.ln();
    let ev = [EventFn::new(move |y: &State| y[3] - u_mark, -1, false)];
    let out = integrate(|y: &State| polar_rhs(sys, -1.0, y), 0.0, y0, u0 - u_end, &config(opts), &ev);
    if out.stop != Stop::Length {
        return Err(Error::Construction("log-polar continuation to the origin stalled".into()));
    }
    let (_, y_end) = *out.samples.last().unwrap();
    let y_mark = out.hits.first().map(|h| h.state).unwrap_or(y_end);
    let lim = |i: usize| (10.0 * y_end[i] - y_mark[i]) / 9.0;
    let psi = lim(0);
    let samples = out.samples.iter().map(|(s, y)| to_sample(from.s + s, y)).collect();
    Ok(OriginApproach { samples, psi, slope: slope_of(psi), log_x_offset: lim(1), log_r: lim(2) })
}

/// Departs the origin along polar angle `psi` (exact at ρ → 0) up to radius `rho_out`.
///
/// The returned samples run outward; at the origin ln|x| - ln ρ = 0 and ln R = 0.
pub fn start_from_origin(sys: &System, psi: f64, rho_out: f64, opts: &IntegratorOptions) -> Result<OriginApproach> {
    let u0 = END_RADIUS.ln() - 2.0 * 10f64.ln();
    let u1 = rho_out.ln();
    let y0 = [psi, 0.0, 0.0, u0];
    let out = integrate(|y: &State| polar_rhs(sys, 1.0, y), 0.0, y0, u1 - u0, &config(opts), &[]);
    if out.stop != Stop::Length {
        return Err(Error::Construction("log-polar departure from the origin stalled".into()));
    }
    let samples = out.samples.iter().map(|(s, y)| to_sample(*s, y)).collect();
    Ok(OriginApproach { samples, psi, slope: slope_of(psi), log_x_offset: 0.0, log_r: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::SimilarityParams;

    fn flagship() -> System {
        System::new(SimilarityParams::isentropic(3, 12.0, 0.02).unwrap()).unwrap()
    }

    #[test]
    fn departure_and_return_are_consistent() {
        let s = flagship();
        let opts = IntegratorOptions::default();
        let psi = 1.3;
        let out = start_from_origin(&s, psi, 1e-3, &opts).unwrap();
        let last = *out.samples.last().unwrap();
        assert!((last.point.norm() - 1e-3).abs() < 1e-12);
        let back = continue_to_origin(&s, &last, &opts).unwrap();
        assert!((back.psi - psi).abs() < 1e-9, "{}", back.psi - psi);
        assert!(back.log_x_offset.abs() < 1e-9);
        assert!(back.log_r.abs() < 1e-9);
    }

    #[test]
    fn angle_correction_is_linear_in_radius() {
        let s = flagship();
        let opts = IntegratorOptions::default();
        let dpsi = |r: f64| {
            let out = start_from_origin(&s, 0.4, r, &opts).unwrap();
            let last = out.samples.last().unwrap();
            (last.point.c.atan2(last.point.v) - 0.4, last.log_x - last.point.norm().ln())
        };
        let (a1, l1) = dpsi(1e-6);
        let (a2, l2) = dpsi(1e-7);
        assert!(a1.abs() < 1e-3);
        assert!((a1 / a2 - 10.0).abs() < 0.01, "{}", a1 / a2);
        assert!((l1 / l2 - 10.0).abs() < 0.01, "{}", l1 / l2);
    }
}
