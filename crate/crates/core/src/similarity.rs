//! Similarity parameters, derived constants and the phase-plane fields D, G, F.
//!
//! With x = t/r^λ the radial Euler system reduces to
//! dV/dx = -G/(λxD), dC/dx = -F/(λxD), where
//!
//! * D = (1+V)² - C²
//! * G = nC²(V-V*) - V(1+V)(λ+V)
//! * F = C{C²(1+α/(1+V)) - k1(1+V)² + k2(1+V) - k3}

use serde::Serialize;

use crate::error::{Error, Result};

/// The tuple (n, γ, λ, κ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityParams {
    pub n: u32,
    pub gamma: f64,
    pub lambda: f64,
    pub kappa: f64,
}

/// Density exponent that makes the flow globally isentropic.
pub fn kappa_hat(gamma: f64, lambda: f64) -> f64 {
    2.0 * (1.0 - lambda) / (gamma - 1.0)
}

impl SimilarityParams {
    pub fn new(n: u32, gamma: f64, lambda: f64, kappa: f64) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::InvalidParams(format!("n must be 2 or 3, got {n}")));
        }
        if !gamma.is_finite() || gamma <= 1.0 {
            return Err(Error::InvalidParams(format!("gamma must exceed 1, got {gamma}")));
        }
        if !lambda.is_finite() || !kappa.is_finite() {
            return Err(Error::InvalidParams("lambda and kappa must be finite".into()));
        }
        Ok(Self { n, gamma, lambda, kappa })
    }

    /// Parameters with κ = κ̂(γ, λ).
    pub fn isentropic(n: u32, gamma: f64, lambda: f64) -> Result<Self> {
        Self::new(n, gamma, lambda, 0.0).map(|p| Self { kappa: kappa_hat(gamma, lambda), ..p })
    }

    pub fn kappa_hat(&self) -> f64 {
        kappa_hat(self.gamma, self.lambda)
    }

    /// True when κ equals κ̂ to 1e-14 relative.
    pub fn is_isentropic(&self) -> bool {
        let kh = self.kappa_hat();
        (self.kappa - kh).abs() <= 1e-14 * kh.abs()
    }
}

/// Constants derived from [`SimilarityParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub m: f64,
    pub mu: f64,
    pub v_star: f64,
    pub alpha: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k: f64,
    pub q: f64,
    pub kappa_hat: f64,
    pub lambda_bar: f64,
}

pub fn derive_constants(params: &SimilarityParams) -> Result<DerivedConstants> {
    let SimilarityParams { n, gamma, lambda, kappa } = *params;
    let nf = n as f64;
    if kappa + nf == 0.0 {
        return Err(Error::InvalidParams("kappa + n = 0 leaves q undefined".into()));
    }
    let m = nf - 1.0;
    let mu = lambda - 1.0;
    let alpha = if params.is_isentropic() {
        0.0
    } else {
        (kappa * (gamma - 1.0) + 2.0 * mu) / (2.0 * gamma)
    };
    Ok(DerivedConstants {
        m,
        mu,
        v_star: (kappa - 2.0 * mu) / (nf * gamma),
        alpha,
        k1: 1.0 + m * (gamma - 1.0) / 2.0,
        k2: (m * (gamma - 1.0) + (gamma - 3.0) * mu) / 2.0,
        k3: (gamma - 1.0) * mu / 2.0,
        k: (m / 2.0) * (nf * (gamma - 1.0) + 2.0),
        q: 2.0 * gamma * alpha / (kappa + nf),
        kappa_hat: kappa_hat(gamma, lambda),
        lambda_bar: 1.0 + (nf / 2.0) * (1.0 - 1.0 / gamma),
    })
}

/// A point (V, C) of the similarity phase plane. C > 0 encodes x < 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PhasePoint {
    pub v: f64,
    pub c: f64,
}

impl PhasePoint {
    pub const fn new(v: f64, c: f64) -> Self {
        Self { v, c }
    }

    /// Mirror image across the V-axis.
    pub fn reflect(self) -> Self {
        Self { v: self.v, c: -self.c }
    }

    pub fn dist(self, other: Self) -> f64 {
        (self.v - other.v).hypot(self.c - other.c)
    }

    pub fn norm(self) -> f64 {
        self.v.hypot(self.c)
    }
}

/// Values of the three scalar fields at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fields {
    pub f: f64,
    pub g: f64,
    pub d: f64,
}

/// Parameters bundled with their derived constants; every field evaluation goes through here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct System {
    pub params: SimilarityParams,
    pub consts: DerivedConstants,
}

impl System {
    pub fn new(params: SimilarityParams) -> Result<Self> {
        Ok(Self { params, consts: derive_constants(&params)? })
    }

    pub fn n(&self) -> f64 {
        self.params.n as f64
    }

    pub fn lambda(&self) -> f64 {
        self.params.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma
    }

    pub fn v_star(&self) -> f64 {
        self.consts.v_star
    }

    /// V(1+V)(λ+V), the C-independent part of G.
    pub fn b_poly(&self, v: f64) -> f64 {
        v * (1.0 + v) * (self.params.lambda + v)
    }

    /// k1(1+V)² - k2(1+V) + k3, the C-independent bracket of F/C.
    pub fn p_poly(&self, v: f64) -> f64 {
        let w = 1.0 + v;
        let DerivedConstants { k1, k2, k3, .. } = self.consts;
        k1 * w * w - k2 * w + k3
    }

    /// 1 + α/(1+V); identically 1 when α = 0.
    pub fn a_coef(&self, v: f64) -> f64 {
        if self.consts.alpha == 0.0 {
            1.0
        } else {
            1.0 + self.consts.alpha / (1.0 + v)
        }
    }

    pub fn d(&self, p: PhasePoint) -> f64 {
        let w = 1.0 + p.v;
        (w - p.c) * (w + p.c)
    }

    pub fn g(&self, p: PhasePoint) -> f64 {
        self.n() * p.c * p.c * (p.v - self.consts.v_star) - self.b_poly(p.v)
    }

    /// F; non-finite at V = -1 when α ≠ 0.
    pub fn f(&self, p: PhasePoint) -> f64 {
        p.c * (p.c * p.c * self.a_coef(p.v) - self.p_poly(p.v))
    }

    /// (1+V)·F, a polynomial for every α.
    pub fn f_cleared(&self, p: PhasePoint) -> f64 {
        let w = 1.0 + p.v;
        p.c * (p.c * p.c * (w + self.consts.alpha) - w * self.p_poly(p.v))
    }

    /// The pair (G, F) without singularity checks.
    pub fn field(&self, p: PhasePoint) -> (f64, f64) {
        (self.g(p), self.f(p))
    }

    pub fn eval_fgd(&self, p: PhasePoint) -> Result<Fields> {
        if !p.v.is_finite() || !p.c.is_finite() {
            return Err(Error::InvalidInput("phase point must be finite".into()));
        }
        if self.consts.alpha != 0.0 && p.v == -1.0 {
            return Err(Error::Singular { v: p.v, c: p.c, what: "F has a pole at V = -1 when alpha != 0" });
        }
        Ok(Fields { f: self.f(p), g: self.g(p), d: self.d(p) })
    }

    /// Analytic Jacobian [[G_V, G_C], [F_V, F_C]].
    pub fn jacobian(&self, p: PhasePoint) -> [[f64; 2]; 2] {
        let (v, c) = (p.v, p.c);
        let lam = self.params.lambda;
        let n = self.n();
        let DerivedConstants { k1, k2, alpha, v_star, .. } = self.consts;
        let db = 3.0 * v * v + 2.0 * (1.0 + lam) * v + lam;
        let g_v = n * c * c - db;
        let g_c = 2.0 * n * c * (v - v_star);
        let a = self.a_coef(v);
        let da = if alpha == 0.0 { 0.0 } else { -alpha / ((1.0 + v) * (1.0 + v)) };
        let dp = 2.0 * k1 * (1.0 + v) - k2;
        let f_v = c * (c * c * da - dp);
        let f_c = 3.0 * c * c * a - self.p_poly(v);
        [[g_v, g_c], [f_v, f_c]]
    }

    /// C̄(V)², the G = 0 locus solved for C²; may be negative or infinite.
    pub fn g_zero_c2(&self, v: f64) -> f64 {
        self.b_poly(v) / (self.n() * (v - self.consts.v_star))
    }
}

/// Local finiteness of mass, momentum and energy near the centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Integrability {
    pub i: bool,
    pub ii: bool,
    pub iii: bool,
}

impl Integrability {
    /// (I) and (III) together imply (II).
    pub fn implication_holds(&self) -> bool {
        !(self.i && self.iii) || self.ii
    }
}

pub fn check_integrability(params: &SimilarityParams) -> Integrability {
    let kn = params.kappa + params.n as f64;
    Integrability {
        i: kn > 0.0,
        ii: params.lambda < 1.0 + kn,
        iii: params.lambda < 1.0 + kn / 2.0,
    }
}
