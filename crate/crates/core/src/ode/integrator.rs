//! Adaptive Dormand-Prince 5(4) stepping for autonomous systems with event localization.
//!
//! Events are detected from sign changes of scalar functions across accepted steps and
//! localized by bisecting the step length, re-taking a single Runge-Kutta step from the
//! left end each time.

/// State dimension used by all charts: two phase coordinates plus ln|x| and ln R.
pub const N: usize = 4;
pub type State = [f64; N];

/// Error weights: |err_i| ≤ abs_i + rel·|y_i|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: State,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub tol: Tolerances,
    pub h_init: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub event_tol: f64,
    pub max_steps: usize,
}

/// Scalar event function with a crossing direction (+1 rising, -1 falling, 0 either).
pub struct EventFn<'a> {
    pub g: Box<dyn Fn(&State) -> f64 + 'a>,
    pub direction: i8,
    pub terminal: bool,
}

impl<'a> EventFn<'a> {
    pub fn new(g: impl Fn(&State) -> f64 + 'a, direction: i8, terminal: bool) -> Self {
        Self { g: Box::new(g), direction, terminal }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit {
    pub index: usize,
    pub s: f64,
    pub state: State,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Event(usize),
    Length,
    StepFloor,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub samples: Vec<(f64, State)>,
    pub hits: Vec<EventHit>,
    pub stop: Stop,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn finite(y: &State) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// One Dormand-Prince step; returns the fifth-order solution and the embedded error vector.
fn dp_step<F>(rhs: &F, y: &State, k1: &State, h: f64) -> Option<(State, State, State)>
where
    F: Fn(&State) -> Option<State>,
{
    let k2 = rhs(&axpy(y, &[(A21, k1)], h))?;
    let k3 = rhs(&axpy(y, &[(A31, k1), (A32, &k2)], h))?;
    let k4 = rhs(&axpy(y, &[(A41, k1), (A42, &k2), (A43, &k3)], h))?;
    let k5 = rhs(&axpy(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h))?;
    let k6 = rhs(&axpy(y, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h))?;
    let y5 = axpy(y, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
    if !finite(&y5) {
        return None;
    }
    let k7 = rhs(&y5)?;
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Some((y5, err, k7))
}

fn error_norm(tol: &Tolerances, y0: &State, y1: &State, err: &State) -> f64 {
    let mut e: f64 = 0.0;
    for i in 0..N {
        let sc = tol.abs[i] + tol.rel * y0[i].abs().max(y1[i].abs());
        e = e.max(err[i].abs() / sc);
    }
    e
}

fn triggered(g0: f64, g1: f64, direction: i8) -> bool {
    if g0 == 0.0 || g0.signum() == g1.signum() && g1 != 0.0 {
        return false;
    }
    match direction {
        1 => g0 < 0.0,
        -1 => g0 > 0.0,
        _ => true,
    }
}

/// Integrates y' = rhs(y) from (s0, y0) until a terminal event, `s_max`, or a failure.
///
/// `rhs` returns `None` where the field is undefined; such trial steps are rejected.
pub fn integrate<F>(rhs: F, s0: f64, y0: State, s_max: f64, cfg: &StepperConfig, events: &[EventFn<'_>]) -> Outcome
where
    F: Fn(&State) -> Option<State>,
{
    let mut samples = vec![(s0, y0)];
    let mut hits = Vec::new();
    let mut s = s0;
    let mut y = y0;
    let Some(mut k1) = rhs(&y) else {
        return Outcome { samples, hits, stop: Stop::StepFloor };
    };
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(&y)).collect();
    let mut h = cfg.h_init.min(cfg.max_step);
    let mut steps = 0usize;
    loop {
        if s >= s_max {
            return Outcome { samples, hits, stop: Stop::Length };
        }
        if steps >= cfg.max_steps {
            return Outcome { samples, hits, stop: Stop::MaxSteps };
        }
        h = h.min(cfg.max_step).min(s_max - s);
        if h < cfg.min_step {
            return Outcome { samples, hits, stop: Stop::StepFloor };
        }
        let Some((y1, err, k7)) = dp_step(&rhs, &y, &k1, h) else {
            h *= 0.25;
            continue;
        };
        let en = error_norm(&cfg.tol, &y, &y1, &err);
        if !(en <= 1.0) {
            let fac = if en.is_finite() { (0.9 * en.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= fac;
            continue;
        }
        steps += 1;
        let g_new: Vec<f64> = events.iter().map(|e| (e.g)(&y1)).collect();
        let mut crossings: Vec<EventHit> = Vec::new();
        for (i, ev) in events.iter().enumerate() {
            if triggered(g_prev[i], g_new[i], ev.direction) {
                let (ds, st) = localize(&rhs, &y, &k1, h, g_prev[i], &*ev.g, cfg.event_tol);
                crossings.push(EventHit { index: i, s: s + ds, state: st });
            }
        }
        crossings.sort_by(|a, b| a.s.total_cmp(&b.s));
        if let Some(pos) = crossings.iter().position(|c| events[c.index].terminal) {
            let term = crossings[pos];
            hits.extend(crossings.into_iter().take(pos + 1));
            samples.push((term.s, term.state));
            return Outcome { samples, hits, stop: Stop::Event(term.index) };
        }
        hits.extend(crossings);
        s += h;
        y = y1;
        k1 = k7;
        g_prev = g_new;
        samples.push((s, y));
        let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
}

/// Bisection on the step length for the first zero of `g` inside (0, h].
fn localize<F>(rhs: &F, y: &State, k1: &State, h: f64, g0: f64, g: &dyn Fn(&State) -> f64, tol: f64) -> (f64, State)
where
    F: Fn(&State) -> Option<State>,
{
    let mut lo = 0.0;
    let mut hi = h;
    let mut y_hi = match dp_step(rhs, y, k1, h) {
        Some((y1, _, _)) => y1,
        None => *y,
    };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let Some((ym, _, _)) = dp_step(rhs, y, k1, mid) else { break };
        let gm = g(&ym);
        if gm != 0.0 && gm.signum() == g0.signum() {
            lo = mid;
        } else {
            hi = mid;
            y_hi = ym;
        }
    }
    (hi, y_hi)
}
