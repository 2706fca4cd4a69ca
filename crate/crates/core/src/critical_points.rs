//! Equilibria P1-P9 of the (G, F) field and the saddle points at C = ±∞.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::similarity::{PhasePoint, System};

/// Points closer than this are reported as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PointId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
    P9,
    PPlusInf,
    PMinusInf,
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PointId::P1 => "P1",
            PointId::P2 => "P2",
            PointId::P3 => "P3",
            PointId::P4 => "P4",
            PointId::P5 => "P5",
            PointId::P6 => "P6",
            PointId::P7 => "P7",
            PointId::P8 => "P8",
            PointId::P9 => "P9",
            PointId::PPlusInf => "P+inf",
            PointId::PMinusInf => "P-inf",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Kind {
    StarNode,
    Saddle,
    Node,
    Unclassified,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::StarNode => "star-node",
            Kind::Saddle => "saddle",
            Kind::Node => "node",
            Kind::Unclassified => "unclassified",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Line {
    LPlus,
    LMinus,
    VAxis,
    None,
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Line::LPlus => "L+",
            Line::LMinus => "L-",
            Line::VAxis => "V-axis",
            Line::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub id: PointId,
    /// For P±∞ the location is (V*, ±∞).
    pub location: PhasePoint,
    pub kind: Kind,
    pub on_line: Line,
}

impl CriticalPoint {
    pub fn reflect(&self, id: PointId) -> Self {
        let on_line = match self.on_line {
            Line::LPlus => Line::LMinus,
            Line::LMinus => Line::LPlus,
            other => other,
        };
        Self { id, location: self.location.reflect(), kind: self.kind, on_line }
    }
}

fn line_of(p: PhasePoint) -> Line {
    let w = 1.0 + p.v;
    let tol = 1e-10 * w.abs().max(1.0);
    if p.c == 0.0 {
        Line::VAxis
    } else if (p.c - w).abs() <= tol {
        Line::LPlus
    } else if (p.c + w).abs() <= tol {
        Line::LMinus
    } else {
        Line::None
    }
}

pub fn locate_axis_points(sys: &System) -> [CriticalPoint; 3] {
    let mk = |id, v: f64, kind| CriticalPoint { id, location: PhasePoint::new(v, 0.0), kind, on_line: Line::VAxis };
    [
        mk(PointId::P1, 0.0, Kind::StarNode),
        mk(PointId::P2, -1.0, Kind::Unclassified),
        mk(PointId::P3, -sys.lambda(), Kind::Unclassified),
    ]
}

/// Classifies a planar equilibrium from its Jacobian.
pub fn classify_jacobian(j: [[f64; 2]; 2]) -> Kind {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let tr = j[0][0] + j[1][1];
    if det < 0.0 {
        Kind::Saddle
    } else if det > 0.0 && tr * tr - 4.0 * det > 0.0 {
        Kind::Node
    } else {
        Kind::Unclassified
    }
}

/// V4 = -λ/(1+(n/2)(γ-1)).
pub fn v4(sys: &System) -> f64 {
    -sys.lambda() / (1.0 + sys.n() / 2.0 * (sys.gamma() - 1.0))
}

pub fn locate_p4(sys: &System) -> Result<CriticalPoint> {
    let v = v4(sys);
    if v == sys.v_star() {
        return Err(Error::NotReal("P4"));
    }
    let c2 = sys.g_zero_c2(v);
    if !(c2 >= 0.0) || !c2.is_finite() {
        return Err(Error::NotReal("P4"));
    }
    let location = PhasePoint::new(v, c2.sqrt());
    Ok(CriticalPoint {
        id: PointId::P4,
        location,
        kind: classify_jacobian(sys.jacobian(location)),
        on_line: line_of(location),
    })
}

/// Roots V8 ≥ V6 of the quadratic for the points on L±.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Roots68 {
    pub v_plus: f64,
    pub v_minus: f64,
}

/// Stable quadratic roots from b = sum, c = product, disc = b²-4c.
fn stable_pair(sum: f64, prod: f64, sqrt_disc: f64) -> (f64, f64) {
    let q = 0.5 * (sum + sum.signum() * sqrt_disc);
    if q == 0.0 {
        return (0.5 * sqrt_disc, -0.5 * sqrt_disc);
    }
    let (r1, r2) = (q, prod / q);
    if r1 >= r2 {
        (r1, r2)
    } else {
        (r2, r1)
    }
}

/// General-κ path: V± = [(γ-2)μ+κ-mγ ± √disc]/(2mγ).
pub fn roots68_general(sys: &System) -> Option<Roots68> {
    let g = sys.gamma();
    let m = sys.consts.m;
    let mu = sys.consts.mu;
    let kap = sys.params.kappa;
    let disc = (g - 2.0) * (g - 2.0) * mu * mu - 2.0 * (g * m * (g + 2.0) - kap * (g - 2.0)) * mu
        + (g * m + kap) * (g * m + kap);
    if disc < 0.0 {
        return None;
    }
    let sum = ((g - 2.0) * mu + kap - m * g) / (m * g);
    let prod = (2.0 * mu - kap) / (m * g);
    let (v_plus, v_minus) = stable_pair(sum, prod, disc.sqrt() / (m * g));
    Some(Roots68 { v_plus, v_minus })
}

/// κ = κ̂ path: V± = (a ± √Q)/2.
pub fn roots68_isentropic(sys: &System) -> Option<Roots68> {
    let g = sys.gamma();
    let m = sys.consts.m;
    let mu = sys.consts.mu;
    let e = (g - 3.0) / (m * (g - 1.0));
    let a = e * mu - 1.0;
    let q = e * e * mu * mu - 2.0 * (g + 1.0) / (m * (g - 1.0)) * mu + 1.0;
    if q < 0.0 {
        return None;
    }
    let prod = 2.0 * mu / (m * (g - 1.0));
    let (v_plus, v_minus) = stable_pair(a, prod, q.sqrt());
    Some(Roots68 { v_plus, v_minus })
}

pub fn roots68(sys: &System) -> Option<Roots68> {
    if sys.params.is_isentropic() {
        roots68_isentropic(sys)
    } else {
        roots68_general(sys)
    }
}

/// Returns (P6, P8) when real.
pub fn locate_p68(sys: &System) -> Option<(CriticalPoint, CriticalPoint)> {
    let r = roots68(sys)?;
    let mk = |id, v: f64| {
        let w = 1.0 + v;
        let location = PhasePoint::new(v, w.abs());
        let on_line = if w >= 0.0 { Line::LPlus } else { Line::LMinus };
        CriticalPoint { id, location, kind: Kind::Unclassified, on_line }
    };
    let p6 = mk(PointId::P6, r.v_minus);
    let mut p8 = mk(PointId::P8, r.v_plus);
    p8.kind = classify_jacobian(sys.jacobian(p8.location));
    Some((p6, p8))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PresenceCase {
    /// γ = 2.
    I,
    /// γ ≠ 2, 2γm - κ(γ-2) < 0: always present.
    II,
    /// κ = -γm.
    III,
    /// General κ.
    IV,
    /// κ = κ̂ with γ = 3.
    A,
    /// κ = κ̂ with γ ≠ 3.
    B,
}

impl fmt::Display for PresenceCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PresenceCase::I => "(i)",
            PresenceCase::II => "(ii)",
            PresenceCase::III => "(iii)",
            PresenceCase::IV => "(iv)",
            PresenceCase::A => "(a)",
            PresenceCase::B => "(b)",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PresenceReport {
    pub case_id: PresenceCase,
    pub lambda_max: Option<f64>,
    pub lambda_min: Option<f64>,
    pub p68_present: bool,
}

pub fn presence_bounds(sys: &System) -> PresenceReport {
    let g = sys.gamma();
    let m = sys.consts.m;
    let kap = sys.params.kappa;
    let lam = sys.lambda();
    let (case_id, lambda_max, lambda_min) = if sys.params.is_isentropic() {
        if g == 3.0 {
            (PresenceCase::A, Some(1.0 + m / 4.0), None)
        } else {
            let s = (8.0 * (g - 1.0)).sqrt();
            let lo = (g + 1.0) - s;
            let lmin = if lo > 0.0 { Some(1.0 + m * (g - 1.0) / lo) } else { None };
            (PresenceCase::B, Some(1.0 + m * (g - 1.0) / ((g + 1.0) + s)), lmin)
        }
    } else if g == 2.0 {
        (PresenceCase::I, Some(1.0 + (2.0 * m + kap).powi(2) / (16.0 * m)), None)
    } else {
        let rad = 2.0 * g * m - kap * (g - 2.0);
        if rad < 0.0 {
            (PresenceCase::II, None, None)
        } else if kap == -g * m {
            (PresenceCase::III, Some(1.0), Some(1.0 + 4.0 * m * g * g / ((g - 2.0) * (g - 2.0))))
        } else {
            let num = (m * g + kap).powi(2);
            let sm = g * m.sqrt();
            let sr = rad.sqrt();
            let lmax = 1.0 + num / ((sm + sr) * (sm + sr));
            let dm = sm - sr;
            let lmin = if dm != 0.0 { Some(1.0 + num / (dm * dm)) } else { None };
            (PresenceCase::IV, Some(lmax), lmin)
        }
    };
    let p68_present = match (lambda_max, lambda_min) {
        (None, None) => true,
        (Some(hi), None) => lam <= hi,
        (None, Some(lo)) => lam >= lo,
        (Some(hi), Some(lo)) => lam <= hi || lam >= lo,
    };
    PresenceReport { case_id, lambda_max, lambda_min, p68_present }
}

/// Linearization data of the saddle at C = +∞ in the chart W = V-V*, Z = C⁻².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfinityData {
    pub a: f64,
    pub b: f64,
    pub saddle: bool,
    /// dZ/dW of the separatrix direction leaving the saddle into C < ∞.
    pub eigen_slope: f64,
}

pub fn classify_infinity(sys: &System) -> Result<InfinityData> {
    let vs = sys.v_star();
    let a = 2.0 * sys.a_coef(vs);
    let b = sys.b_poly(vs);
    if b == 0.0 {
        return Err(Error::DegenerateChart);
    }
    Ok(InfinityData { a, b, saddle: a > 0.0, eigen_slope: (sys.n() + a) / b })
}

/// Checks V6 < -1 < -λ < V4 < 0 < V* < V8.
pub fn verify_ordering(sys: &System) -> bool {
    let Some(r) = roots68(sys) else { return false };
    let chain = [r.v_minus, -1.0, -sys.lambda(), v4(sys), 0.0, sys.v_star(), r.v_plus];
    chain.windows(2).all(|w| w[0] < w[1])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPointSet {
    pub points: Vec<CriticalPoint>,
    pub presence: PresenceReport,
    pub infinity: Option<InfinityData>,
    /// Pairs of finite points closer than [`COINCIDENCE_TOL`].
    pub coincident: Vec<(PointId, PointId)>,
}

impl CriticalPointSet {
    pub fn get(&self, id: PointId) -> Option<&CriticalPoint> {
        self.points.iter().find(|p| p.id == id)
    }
}

pub fn critical_point_set(sys: &System) -> CriticalPointSet {
    let mut points: Vec<CriticalPoint> = locate_axis_points(sys).to_vec();
    if let Ok(p4) = locate_p4(sys) {
        points.push(p4);
        points.push(p4.reflect(PointId::P5));
    }
    if let Some((p6, p8)) = locate_p68(sys) {
        points.push(p6);
        points.push(p6.reflect(PointId::P7));
        points.push(p8);
        points.push(p8.reflect(PointId::P9));
    }
    points.sort_by_key(|p| p.id as u8);
    let infinity = classify_infinity(sys).ok();
    if let Some(inf) = infinity {
        let kind = if inf.saddle { Kind::Saddle } else { Kind::Unclassified };
        for (id, c) in [(PointId::PPlusInf, f64::INFINITY), (PointId::PMinusInf, f64::NEG_INFINITY)] {
            points.push(CriticalPoint { id, location: PhasePoint::new(sys.v_star(), c), kind, on_line: Line::None });
        }
    }
    let mut coincident = Vec::new();
    let finite: Vec<&CriticalPoint> = points.iter().filter(|p| p.location.c.is_finite()).collect();
    for (i, a) in finite.iter().enumerate() {
        for b in &finite[i + 1..] {
            if a.location.dist(b.location) < COINCIDENCE_TOL {
                coincident.push((a.id, b.id));
            }
        }
    }
    CriticalPointSet { points, presence: presence_bounds(sys), infinity, coincident }
}
