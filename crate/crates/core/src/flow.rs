//! Physical fields ρ, u, c, p on (t, r) from an assembled similarity solution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::local_analysis::richardson;
use crate::similarity::{PhasePoint, SimilarityParams, System};
use crate::trajectory::SolutionCurve;

/// A point of the solution with both density evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub x: f64,
    pub v: f64,
    pub c: f64,
    /// R from the isentropic closed form.
    pub r: f64,
    /// R from the integrated mass equation.
    pub r_mass: f64,
}

/// The solution with R(x) attached, split at x = 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityProfile {
    pub params: SimilarityParams,
    pub rho_ref: f64,
    pub points: Vec<ProfilePoint>,
    pub nu: f64,
    pub omega: f64,
    /// R(0) from the closed form.
    pub r0: f64,
    neg: Knots,
    pos: Knots,
}

/// Interpolation knots on one side of x = 0 in ln|x|, increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
struct Knots {
    log_x: Vec<f64>,
    /// V/x, ln|C/x|, ln R.
    vals: Vec<[f64; 3]>,
}

impl Knots {
    fn build(points: &[ProfilePoint]) -> Self {
        let mut rows: Vec<(f64, [f64; 3])> = points
            .iter()
            .filter(|p| p.x != 0.0)
            .map(|p| (p.x.abs().ln(), [p.v / p.x, (p.c / p.x).abs().ln(), p.r.ln()]))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut log_x = Vec::with_capacity(rows.len());
        let mut vals = Vec::with_capacity(rows.len());
        for (l, v) in rows {
            if log_x.last().is_none_or(|&prev: &f64| l > prev + 1e-13 * (1.0 + prev.abs())) {
                log_x.push(l);
                vals.push(v);
            }
        }
        Self { log_x, vals }
    }

    /// Cubic Lagrange interpolation on the four nearest knots; `None` above the last knot.
    fn eval(&self, l: f64) -> Option<[f64; 3]> {
        let n = self.log_x.len();
        if n < 4 || l > self.log_x[n - 1] {
            return None;
        }
        let i = self.log_x.partition_point(|&k| k < l).clamp(2, n - 2);
        let idx = [i - 2, i - 1, i, i + 1];
        let mut out = [0.0; 3];
        for &a in &idx {
            let mut w = 1.0;
            for &b in &idx {
                if a != b {
                    w *= (l - self.log_x[b]) / (self.log_x[a] - self.log_x[b]);
                }
            }
            for k in 0..3 {
                out[k] += w * self.vals[a][k];
            }
        }
        Some(out)
    }

    fn min(&self) -> f64 {
        self.log_x[0]
    }
}

fn require_isentropic(params: &SimilarityParams) -> Result<()> {
    if params.is_isentropic() {
        Ok(())
    } else {
        Err(Error::OutOfRegime("density closed form requires kappa = kappa_hat".into()))
    }
}

/// Attaches R(x) = rho_ref (|C/x| / C8)^{2/(γ-1)}, which equals rho_ref at x8 = -1.
pub fn attach_density(sys: &System, sol: &SolutionCurve, rho_ref: f64) -> Result<DensityProfile> {
    require_isentropic(&sys.params)?;
    if !(rho_ref > 0.0 && rho_ref.is_finite()) {
        return Err(Error::InvalidInput("rho_ref must be positive".into()));
    }
    let e = 2.0 / (sys.gamma() - 1.0);
    let c8 = sol.p8.c;
    let closed = |q: f64| rho_ref * (q.abs() / c8).powf(e);
    let points: Vec<ProfilePoint> = sol
        .points()
        .iter()
        .map(|p| {
            let q = if p.x == 0.0 { sol.omega } else { p.point.c / p.x };
            ProfilePoint { x: p.x, v: p.point.v, c: p.point.c, r: closed(q), r_mass: rho_ref * p.log_r.exp() }
        })
        .collect();
    let neg: Vec<ProfilePoint> = points.iter().filter(|p| p.x < 0.0).copied().collect();
    let pos: Vec<ProfilePoint> = points.iter().filter(|p| p.x > 0.0).copied().collect();
    Ok(DensityProfile {
        params: sys.params,
        rho_ref,
        nu: sol.nu,
        omega: sol.omega,
        r0: closed(sol.omega),
        neg: Knots::build(&neg),
        pos: Knots::build(&pos),
        points,
    })
}

/// Similarity state at one x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityState {
    pub point: PhasePoint,
    /// V/x and C/x (finite at x = 0).
    pub v_over_x: f64,
    pub c_over_x: f64,
    pub r: f64,
}

impl DensityProfile {
    /// V, C, R at `x`; `None` outside the computed range.
    pub fn eval(&self, x: f64) -> Option<SimilarityState> {
        if !x.is_finite() {
            return None;
        }
        let knots = if x < 0.0 { &self.neg } else { &self.pos };
        let origin = SimilarityState {
            point: PhasePoint::new(self.nu * x, self.omega * x),
            v_over_x: self.nu,
            c_over_x: self.omega,
            r: self.r0,
        };
        if x == 0.0 || knots.log_x.is_empty() {
            return (x == 0.0).then_some(origin);
        }
        let l = x.abs().ln();
        if l < knots.min() {
            return Some(origin);
        }
        let [q, lc, lr] = knots.eval(l)?;
        let cx = -lc.exp();
        Some(SimilarityState { point: PhasePoint::new(q * x, cx * x), v_over_x: q, c_over_x: cx, r: lr.exp() })
    }

    /// Largest |x| covered on each side: (most negative x, most positive x).
    pub fn x_range(&self) -> (f64, f64) {
        let far = |k: &Knots| k.log_x.last().map_or(0.0, |l| l.exp());
        (-far(&self.neg), far(&self.pos))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowSample {
    pub t: f64,
    pub r: f64,
    pub rho: f64,
    pub u: f64,
    pub c: f64,
    pub p: f64,
    /// False when x = t/r^λ lies outside the computed solution; the fields are then zero.
    pub in_domain: bool,
}

/// Samples ρ = r^κ R(x), u = -(r^{1-λ}/λ) V/x, c = -(r^{1-λ}/λ) C/x, p = ρc²/γ.
pub fn sample_flow(profile: &DensityProfile, t: f64, r_grid: &[f64]) -> Result<Vec<FlowSample>> {
    let par = &profile.params;
    let (lam, kappa, gamma) = (par.lambda, par.kappa, par.gamma);
    r_grid
        .iter()
        .map(|&r| {
            if !(r > 0.0 && r.is_finite()) || !t.is_finite() {
                return Err(Error::InvalidInput(format!("invalid sample point (t, r) = ({t}, {r})")));
            }
            let x = t / r.powf(lam);
            Ok(match profile.eval(x) {
                Some(st) => {
                    let scale = r.powf(1.0 - lam) / lam;
                    let rho = r.powf(kappa) * st.r;
                    let c = -scale * st.c_over_x;
                    FlowSample { t, r, rho, u: -scale * st.v_over_x, c, p: rho * c * c / gamma, in_domain: true }
                }
                None => FlowSample { t, r, rho: 0.0, u: 0.0, c: 0.0, p: 0.0, in_domain: false },
            })
        })
        .collect()
}

/// (VD + G) without the cancellation of the C² terms.
fn vd_plus_g(sys: &System, p: PhasePoint) -> f64 {
    let n = sys.n();
    p.c * p.c * ((n - 1.0) * p.v - n * sys.v_star()) + p.v * (1.0 + p.v) * (1.0 - sys.lambda())
}

/// (CD + F) without the cancellation of the C³ terms.
fn cd_plus_f(sys: &System, p: PhasePoint) -> f64 {
    let k = &sys.consts;
    let w = 1.0 + p.v;
    p.c * ((1.0 - k.k1) * w * w + k.alpha * p.c * p.c / w + k.k2 * w - k.k3)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientDiagnostics {
    pub t_bar: f64,
    pub radii: Vec<f64>,
    pub u_r: Vec<f64>,
    pub c_r: Vec<f64>,
    pub u_r_limit: f64,
    pub c_r_limit: f64,
    /// -V*/(λ t̄).
    pub u_r_expected: f64,
    pub u_r_rel_err: f64,
    /// |c_r| at the smallest radius.
    pub c_r_smallest: f64,
}

/// Number of levels of the geometric r-grid used for the r → 0 limits.
pub const GRADIENT_LEVELS: usize = 12;

/// r-derivatives of u and c at fixed t̄ < 0 and their r → 0 limits.
///
/// u_r = -(VD+G)/(λ t̄ D) and c_r = -(CD+F)/(λ t̄ D) are evaluated on r_k = r_0 2^{-k}, where the
/// smallest radius sits just inside the computed range of x, then extrapolated.
pub fn gradient_diagnostics(sys: &System, profile: &DensityProfile, t_bar: f64) -> Result<GradientDiagnostics> {
    if !(t_bar < 0.0 && t_bar.is_finite()) {
        return Err(Error::InvalidInput("t_bar must be negative".into()));
    }
    let lam = sys.lambda();
    let x_far = profile.x_range().0.abs();
    let r_min = 2.0 * (t_bar.abs() / x_far).powf(1.0 / lam);
    let radii: Vec<f64> = (0..GRADIENT_LEVELS).map(|k| r_min * 2f64.powi((GRADIENT_LEVELS - 1 - k) as i32)).collect();
    let mut u_r = Vec::new();
    let mut c_r = Vec::new();
    for &r in &radii {
        let x = t_bar / r.powf(lam);
        let st = profile.eval(x).ok_or_else(|| Error::InvalidInput(format!("x = {x} outside the solution")))?;
        let d = sys.d(st.point);
        u_r.push(-vd_plus_g(sys, st.point) / (lam * t_bar * d));
        c_r.push(-cd_plus_f(sys, st.point) / (lam * t_bar * d));
    }
    let u_r_limit = richardson(&radii, &u_r, &[2.0, 4.0]).unwrap_or(*u_r.last().unwrap());
    let c_r_limit = richardson(&radii, &c_r, &[1.0, 2.0]).unwrap_or(*c_r.last().unwrap());
    let u_r_expected = -sys.v_star() / (lam * t_bar);
    Ok(GradientDiagnostics {
        t_bar,
        u_r_rel_err: (u_r_limit - u_r_expected).abs() / u_r_expected.abs(),
        c_r_smallest: c_r.last().unwrap().abs(),
        radii,
        u_r,
        c_r,
        u_r_limit,
        c_r_limit,
        u_r_expected,
    })
}

/// Which fields blow up in gradient at r = 0 at the collapse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Regularity {
    pub rho_blowup: bool,
    pub uc_blowup: bool,
    pub p_blowup: bool,
}

pub fn collapse_regularity(params: &SimilarityParams) -> Result<Regularity> {
    require_isentropic(params)?;
    let (l, g) = (params.lambda, params.gamma);
    if !(l > 0.0 && l < 1.0) {
        return Err(Error::OutOfRegime("lambda must lie in (0, 1)".into()));
    }
    Ok(Regularity { rho_blowup: params.kappa_hat() < 1.0, uc_blowup: l < 1.0, p_blowup: l > 0.5 * (1.0 + 1.0 / g) })
}

/// Largest |ln E - ln E(x8)| of the entropy integral E = (C/x)² R^{1-γ} along the profile,
/// using the mass-equation density (`mass = true`) or the closed form.
pub fn entropy_deviation(profile: &DensityProfile, mass: bool) -> f64 {
    let g = profile.params.gamma;
    let ln_e = |p: &ProfilePoint| {
        let q = if p.x == 0.0 { profile.omega } else { p.c / p.x };
        let r = if mass { p.r_mass } else { p.r };
        2.0 * q.abs().ln() + (1.0 - g) * r.ln()
    };
    let reference = profile
        .points
        .iter()
        .min_by(|a, b| (a.x + 1.0).abs().total_cmp(&(b.x + 1.0).abs()))
        .map(ln_e)
        .unwrap_or(0.0);
    profile.points.iter().map(|p| (ln_e(p) - reference).abs()).fold(0.0, f64::max)
}

/// d ln|C| / d ln|x| between the two samples of largest |x| on the negative side.
pub fn far_field_exponent(profile: &DensityProfile) -> Option<f64> {
    let k = &profile.neg;
    let n = k.log_x.len();
    if n < 2 {
        return None;
    }
    let (la, lb) = (k.log_x[n - 1], k.log_x[n - 2]);
    let ca = k.vals[n - 1][1] + la;
    let cb = k.vals[n - 2][1] + lb;
    Some((ca - cb) / (la - lb))
}
