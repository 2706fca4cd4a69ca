//! Linearization at the sonic node P8, the saddle P4, the regime curve γ₃(λ) and the
//! characteristic-density exponent A8.

use serde::Serialize;

use crate::critical_points::{locate_p4, roots68_isentropic, v4};
use crate::error::{Error, Result};
use crate::similarity::{PhasePoint, SimilarityParams, System};

/// Linearization invariants of P8 for κ = κ̂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeData {
    pub p8: PhasePoint,
    pub f_c: f64,
    pub f_v: f64,
    pub g_c: f64,
    pub g_v: f64,
    /// F_C G_V - F_V G_C.
    pub w: f64,
    /// 2k C8² (V8-V4)(V8-V6).
    pub w_closed: f64,
    pub r2: f64,
    pub r: Option<f64>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    /// True when R² > 0 (a proper node with two real directions).
    pub node: bool,
}

impl NodeData {
    /// The Jacobian eigenvalue belonging to the primary direction L1.
    pub fn primary_eigenvalue(&self) -> Option<f64> {
        self.r.map(|r| 0.5 * (self.f_c + self.g_v - r))
    }

    pub fn secondary_eigenvalue(&self) -> Option<f64> {
        self.r.map(|r| 0.5 * (self.f_c + self.g_v + r))
    }

    /// Ratio of the secondary to the primary eigenvalue (> 1 for a node).
    pub fn eigen_ratio(&self) -> Option<f64> {
        Some(self.secondary_eigenvalue()? / self.primary_eigenvalue()?)
    }

    /// Unit vector along L1 pointing into D > 0 (below L+).
    pub fn primary_dir(&self) -> Option<[f64; 2]> {
        self.l1.map(|l| into_subsonic(l))
    }

    pub fn secondary_dir(&self) -> Option<[f64; 2]> {
        self.l2.map(|l| into_subsonic(l))
    }

    /// A8 from the primary eigen-rate: 1 - e1/(2 C8).
    pub fn a8_linear(&self) -> Option<f64> {
        self.primary_eigenvalue().map(|e| 1.0 - e / (2.0 * self.p8.c))
    }

    /// G_V + G_C, F_V + F_C, F_C + G_V from their closed forms, for identity checks.
    pub fn sum_identities(&self, sys: &System) -> [(f64, f64); 3] {
        let g = sys.gamma();
        let m = sys.consts.m;
        let mu = sys.consts.mu;
        let e = (g - 3.0) / (m * (g - 1.0));
        let q = e * e * mu * mu - 2.0 * (g + 1.0) / (m * (g - 1.0)) * mu + 1.0;
        let c = self.p8.c;
        let gsum = m * c * q.sqrt();
        [
            (self.g_v + self.g_c, gsum),
            (self.f_v + self.f_c, -(g - 1.0) / 2.0 * gsum),
            (self.f_c + self.g_v, c * (sys.n() + 1.0 - (g + 1.0) / (g - 1.0) * mu)),
        ]
    }
}

/// Unit vector (1, s)/|(1, s)| with the sign that decreases C - (1+V).
fn into_subsonic(s: f64) -> [f64; 2] {
    let nrm = 1.0f64.hypot(s);
    let (dv, dc) = (1.0 / nrm, s / nrm);
    if dc - dv < 0.0 {
        [dv, dc]
    } else {
        [-dv, -dc]
    }
}

fn require_isentropic(sys: &System) -> Result<()> {
    if sys.params.is_isentropic() {
        Ok(())
    } else {
        Err(Error::OutOfRegime("kappa must equal kappa_hat".into()))
    }
}

pub fn node_data_p8(sys: &System) -> Result<NodeData> {
    require_isentropic(sys)?;
    let roots = roots68_isentropic(sys).ok_or(Error::NotReal("P8"))?;
    let v8 = roots.v_plus;
    let v6 = roots.v_minus;
    let c8 = 1.0 + v8;
    let n = sys.n();
    let lam = sys.lambda();
    let vs = sys.v_star();
    let k = &sys.consts;
    let f_c = 2.0 * c8 * c8;
    let f_v = c8 * (k.k2 - 2.0 * k.k1 * (1.0 + v8));
    let g_c = 2.0 * n * c8 * (v8 - vs);
    let g_v = c8 * (n - lam + n * vs - 2.0 * v8);
    let w = f_c * g_v - f_v * g_c;
    let w_closed = 2.0 * k.k * c8 * c8 * (v8 - v4(sys)) * (v8 - v6);
    let tr = f_c + g_v;
    let r2 = tr * tr - 4.0 * w;
    let node = r2 > 0.0;
    let r = node.then(|| r2.sqrt());
    let l1 = r.map(|r| (f_c - g_v - r) / (2.0 * g_c));
    let l2 = r.map(|r| (f_c - g_v + r) / (2.0 * g_c));
    let e1 = r.map(|r| (tr - r) / (2.0 * g_c));
    let e2 = r.map(|r| (tr + r) / (2.0 * g_c));
    Ok(NodeData { p8: PhasePoint::new(v8, c8), f_c, f_v, g_c, g_v, w, w_closed, r2, r, l1, l2, e1, e2, node })
}

/// W4 = 2k C4² (V4-V6)(V4-V8).
pub fn wronskian_p4(sys: &System) -> Result<f64> {
    require_isentropic(sys)?;
    let p4 = locate_p4(sys)?.location;
    let roots = roots68_isentropic(sys).ok_or(Error::NotReal("P6/P8"))?;
    Ok(2.0 * sys.consts.k * p4.c * p4.c * (p4.v - roots.v_minus) * (p4.v - roots.v_plus))
}

/// Sign-carrying part of R²: (n+1-((γ+1)/(γ-1))μ)² - 8k(V8-V4)(V8-V6).
pub fn regime_margin(n: u32, lambda: f64, gamma: f64) -> Option<f64> {
    let sys = System::new(SimilarityParams::isentropic(n, gamma, lambda).ok()?).ok()?;
    let roots = roots68_isentropic(&sys)?;
    let mu = lambda - 1.0;
    let lhs = sys.n() + 1.0 - (gamma + 1.0) / (gamma - 1.0) * mu;
    let v8 = roots.v_plus;
    Some(lhs * lhs - 8.0 * sys.consts.k * (v8 - v4(&sys)) * (v8 - roots.v_minus))
}

/// True iff R² > 0 at P8 (κ = κ̂ required).
pub fn in_regime(sys: &System) -> bool {
    sys.params.is_isentropic()
        && regime_margin(sys.params.n, sys.lambda(), sys.gamma()).is_some_and(|m| m > 0.0)
}

/// Interval of λ on which the regime curve exists for dimension n.
pub fn gamma3_interval(n: u32) -> Option<(f64, f64)> {
    match n {
        3 => Some((0.0, 1.0 / 9.0)),
        2 => Some((8.0 / 9.0, 1.0)),
        _ => None,
    }
}

/// The γ above which R² > 0, for λ in the admissible interval; `None` outside it or if no
/// sign change is found below γ = 1e15.
pub fn gamma3(lambda: f64, n: u32) -> Option<f64> {
    let (lo_l, hi_l) = gamma3_interval(n)?;
    if !(lambda > lo_l && lambda < hi_l) {
        return None;
    }
    let f = |g: f64| regime_margin(n, lambda, g);
    let mut lo = if n == 3 { 8.0 } else { 1.0 + 1e-9 };
    if f(lo)? > 0.0 {
        lo = 1.0 + 1e-9;
        if f(lo)? > 0.0 {
            return None;
        }
    }
    let mut hi = 1e6f64.max(2.0 * lo);
    while f(hi)? <= 0.0 {
        lo = hi;
        hi *= 10.0;
        if hi > 1e15 {
            return None;
        }
    }
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Both evaluations of A8 and whether they agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct A8Estimate {
    /// From the primary eigen-rate of the linearization (returned value).
    pub linear: f64,
    /// From extrapolated one-sided finite differences along Γ1.
    pub finite_difference: f64,
    pub rel_diff: f64,
    pub agree: bool,
}

/// A state on the approach to P8: radius from P8, the point and ln|x| with any offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproachSample {
    pub radius: f64,
    pub point: PhasePoint,
    pub log_x: f64,
}

/// Tolerance on the relative disagreement between the two A8 routes.
pub const A8_AGREEMENT: f64 = 1e-3;

/// Generalized Richardson extrapolation to h → 0 of `f(h) = f0 + Σ c_j h^{e_j}`.
pub fn richardson(hs: &[f64], fs: &[f64], exps: &[f64]) -> Option<f64> {
    let k = exps.len() + 1;
    if hs.len() < k || fs.len() < k {
        return None;
    }
    let hs = &hs[hs.len() - k..];
    let fs = &fs[fs.len() - k..];
    let mut a: Vec<Vec<f64>> = hs
        .iter()
        .zip(fs)
        .map(|(&h, &f)| {
            let mut row = vec![1.0];
            row.extend(exps.iter().map(|&e| h.powf(e)));
            row.push(f);
            row
        })
        .collect();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        a.swap(col, piv);
        if a[col][col] == 0.0 {
            return None;
        }
        for row in 0..k {
            if row != col {
                let fac = a[row][col] / a[col][col];
                for c in col..=k {
                    a[row][c] -= fac * a[col][c];
                }
            }
        }
    }
    Some(a[0][k] / a[0][0])
}

/// Evaluates A8 = λ x8 (V'(x8) - C'(x8)) + 1 two ways.
///
/// `pairs` holds approach samples at radii (r, r/2) for a decreasing sequence of r, with x8 = -1
/// after anchoring (`log_x` already shifted so that ln|x8| = 0).
pub fn compute_a8(sys: &System, node: &NodeData, pairs: &[(ApproachSample, ApproachSample)]) -> Result<A8Estimate> {
    let linear = node.a8_linear().ok_or_else(|| Error::OutOfRegime("P8 is not a proper node".into()))?;
    let p = node.eigen_ratio().ok_or_else(|| Error::OutOfRegime("P8 is not a proper node".into()))?;
    let lam = sys.lambda();
    let mut hs = Vec::new();
    let mut fs = Vec::new();
    for (a, b) in pairs {
        let xa = -a.log_x.exp();
        let xb = -b.log_x.exp();
        let dx = xb - xa;
        if dx == 0.0 {
            continue;
        }
        let dv = (b.point.v - a.point.v) / dx;
        let dc = (b.point.c - a.point.c) / dx;
        let xm = 0.5 * (xa + xb);
        hs.push(0.75 * a.radius);
        fs.push(lam * xm * (dv - dc) + 1.0);
    }
    let exps: Vec<f64> = (1..=3).map(|j| (p - 1.0) * j as f64).collect();
    let finite_difference = richardson(&hs, &fs, &exps)
        .ok_or_else(|| Error::Construction("not enough approach samples for A8".into()))?;
    let rel_diff = (finite_difference - linear).abs() / linear.abs();
    Ok(A8Estimate { linear, finite_difference, rel_diff, agree: rel_diff <= A8_AGREEMENT })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sys(n: u32, g: f64, l: f64) -> System {
        System::new(SimilarityParams::isentropic(n, g, l).unwrap()).unwrap()
    }

    #[test]
    fn flagship_node_values() {
        let nd = node_data_p8(&sys(3, 12.0, 0.02)).unwrap();
        assert_relative_eq!(nd.w, nd.w_closed, max_relative = 1e-9);
        assert_relative_eq!(nd.w, 7.449432925578031, max_relative = 1e-9);
        assert_relative_eq!(nd.r2, 0.15097494668486533, max_relative = 1e-8);
        let (l1, l2) = (nd.l1.unwrap(), nd.l2.unwrap());
        assert_relative_eq!(l1, -68.85676201210133, max_relative = 1e-9);
        assert_relative_eq!(l2, -29.473742664605968, max_relative = 1e-9);
        assert!(l1 < l2 && l2 < 0.0);
        assert!(nd.e1.unwrap().abs() < nd.e2.unwrap().abs());
        assert_relative_eq!(nd.a8_linear().unwrap(), -0.1979866609852976, max_relative = 1e-9);
        assert!(nd.f_c > 0.0 && nd.g_c > 0.0);
    }

    #[test]
    fn closed_partials_match_field_jacobian() {
        let s = sys(3, 12.0, 0.02);
        let nd = node_data_p8(&s).unwrap();
        let j = s.jacobian(nd.p8);
        assert_relative_eq!(nd.g_v, j[0][0], max_relative = 1e-10);
        assert_relative_eq!(nd.g_c, j[0][1], max_relative = 1e-10);
        assert_relative_eq!(nd.f_v, j[1][0], max_relative = 1e-10);
        assert_relative_eq!(nd.f_c, j[1][1], max_relative = 1e-10);
    }

    #[test]
    fn primary_direction_is_eigenvector() {
        let s = sys(3, 12.0, 0.02);
        let nd = node_data_p8(&s).unwrap();
        let e = nd.primary_eigenvalue().unwrap();
        let [dv, dc] = nd.primary_dir().unwrap();
        let j = s.jacobian(nd.p8);
        assert_relative_eq!(j[0][0] * dv + j[0][1] * dc, e * dv, max_relative = 1e-9);
        assert_relative_eq!(j[1][0] * dv + j[1][1] * dc, e * dc, max_relative = 1e-9);
        assert!(dc - dv < 0.0);
    }

    #[test]
    fn n2_slope_positive() {
        let g = (2..200).map(|i| i as f64).find(|&g| in_regime(&sys(2, g, 0.95))).unwrap();
        let nd = node_data_p8(&sys(2, g, 0.95)).unwrap();
        assert!(nd.l1.unwrap() > 0.0);
    }

    #[test]
    fn wronskian_p4_negative() {
        assert!(wronskian_p4(&System::new(SimilarityParams::new(3, 5.0 / 3.0, 2.0 / 3.0, 1.0).unwrap()).unwrap()).unwrap() < 0.0);
        assert!(wronskian_p4(&sys(3, 12.0, 0.02)).unwrap() < 0.0);
    }

    #[test]
    fn regime_examples() {
        assert!(in_regime(&sys(3, 12.0, 0.02)));
        assert!(in_regime(&sys(3, 1e6, 0.05)));
        assert!(!in_regime(&sys(3, 1e6, 0.2)));
        assert!(!in_regime(&sys(3, 8.0, 0.02)));
    }

    #[test]
    fn gamma3_examples() {
        let g0 = gamma3(1e-9, 3).unwrap();
        assert!((g0 - 8.72).abs() < 0.05, "{g0}");
        let g1 = gamma3(0.001, 3).unwrap();
        assert!((g1 - 8.791630652728897).abs() < 1e-7, "{g1}");
        let g = gamma3(0.02, 3).unwrap();
        assert!(g > 8.72 && g < 12.0);
        assert!(gamma3(0.2, 3).is_none());
        assert!(gamma3(0.11, 3).unwrap() > 100.0);
        assert!(gamma3(0.95, 2).is_some());
        assert!(gamma3(0.5, 2).is_none());
        let m = regime_margin(3, 0.02, g).unwrap();
        assert!(m.abs() < 1e-6);
    }

    #[test]
    fn richardson_recovers_limit() {
        let hs = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
        let fs: Vec<f64> = hs.iter().map(|&h: &f64| 3.0 + 2.0 * h.powf(0.3) - h.powf(0.6) + 0.5 * h.powf(0.9)).collect();
        let r = richardson(&hs, &fs, &[0.3, 0.6, 0.9]).unwrap();
        assert_relative_eq!(r, 3.0, max_relative = 1e-12);
    }
}
