//! Command-line front end: argument and config handling, the pipeline commands, and CSV, JSON and
//! SVG output.

pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::critical_points::{critical_point_set, CriticalPointSet, PointId};
use crate::flow::{attach_density, collapse_regularity, entropy_deviation, gradient_diagnostics, sample_flow, DensityProfile};
use crate::local_analysis::{gamma3, A8_AGREEMENT};
use crate::shock::{guderley_sweep, hugoniot_locus, shock_detect};
use crate::similarity::{PhasePoint, System};
use crate::trajectory::{construct, BuildOptions, Construction, SLOPE_AGREEMENT};
use config::{parse_grid, ConfigError, KappaSpec, RunConfig};
use svg::{Portrait, Stroke};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// γ3 values above this are flagged as near the vertical asymptote.
pub const ASYMPTOTE_FLAG: f64 = 100.0;

pub const DEFAULT_GAMMA3_GRID: &str = "0.001:0.1:50";
pub const DEFAULT_PROBE_GRID: &str = "n=2,3;gamma=1.4,1.6666666666666667,3,10,1e6;lambda=0.1:0.9:9";
pub const DEFAULT_FLOW_GRID: &str = "t=-1,-0.5,0,0.25,0.5;r=1e-3:1e3:61:log";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] crate::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid SSFLOW_THREADS value `{0}`")]
    Threads(String),
}

impl CliError {
    /// 2 invalid configuration, 3 construction failure, 4 tolerance failure.
    pub fn exit_code(&self) -> i32 {
        use crate::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::Threads(_) => 2,
            CliError::Core(E::InvalidParams(_) | E::InvalidInput(_)) => 2,
            CliError::Core(E::Tolerance(_)) => 4,
            CliError::Core(_) => 3,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "ssflow", version, about = "Radial self-similar Euler flows with 0 < lambda < 1")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// key=value config file ('#' starts a comment); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Spatial dimension (2 cylindrical, 3 spherical).
    #[arg(long, global = true)]
    n: Option<u32>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Density exponent; the default is the isentropic value.
    #[arg(long, global = true, allow_negative_numbers = true, conflicts_with = "isentropic")]
    kappa: Option<f64>,
    #[arg(long, global = true)]
    isentropic: bool,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, overrides_with = "no_svg")]
    svg: bool,
    #[arg(long, global = true, overrides_with = "svg")]
    no_svg: bool,
    /// Slope of Γ2 at the origin (inf for a vertical arrival).
    #[arg(long, global = true, allow_negative_numbers = true)]
    s_target: Option<f64>,
    /// Grid: `lo:hi:N[:log]` or a comma list, optionally keyed as `key=...;key=...`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Density at (t, r) = (-1, 1).
    #[arg(long, global = true)]
    rho_ref: Option<f64>,
    /// Time at which gradient limits are evaluated (negative).
    #[arg(long, global = true, allow_negative_numbers = true)]
    t_bar: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Critical points, their classification and the presence report of P6-P9.
    CriticalPoints,
    /// The regime boundary γ3(λ) on a λ grid (default key `lambda`).
    Gamma3,
    /// Builds the global solution: solution.csv, summary.json and portrait.svg.
    Construct,
    /// Physical fields on a (t, r) grid (keys `t` and `r`): flow.csv and flow_summary.json.
    Flow,
    /// Converging-shock probe with κ = 0 over a grid (keys `n`, `gamma`, `lambda`).
    GuderleyProbe,
}

impl CommonArgs {
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(p) = &self.config {
            let text = fs::read_to_string(p).map_err(|source| CliError::Io { path: p.clone(), source })?;
            c.apply_file(&text)?;
        }
        if self.n.is_some() {
            c.n = self.n;
        }
        if self.gamma.is_some() {
            c.gamma = self.gamma;
        }
        if self.lambda.is_some() {
            c.lambda = self.lambda;
        }
        if let Some(k) = self.kappa {
            c.kappa = KappaSpec::Value(k);
        }
        if self.isentropic {
            c.kappa = KappaSpec::Isentropic;
        }
        if let Some(v) = self.rel_tol {
            c.rel_tol = v;
        }
        if let Some(v) = self.abs_tol {
            c.abs_tol = v;
        }
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        if self.svg {
            c.svg = true;
        }
        if self.no_svg {
            c.svg = false;
        }
        if let Some(v) = self.s_target {
            c.s_target = v;
        }
        if self.grid.is_some() {
            c.grid = self.grid.clone();
        }
        if let Some(v) = self.rho_ref {
            c.rho_ref = v;
        }
        if let Some(v) = self.t_bar {
            c.t_bar = v;
        }
        Ok(c)
    }
}

/// Runs the CLI on `args` (including the program name) and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("SSFLOW_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| CliError::Threads(v.clone()))?;
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn execute(cli: &Cli) -> CliResult<()> {
    init_threads()?;
    let cfg = cli.common.resolve()?;
    match cli.command {
        Command::CriticalPoints => cmd_critical_points(&cfg),
        Command::Gamma3 => cmd_gamma3(&cfg),
        Command::Construct => cmd_construct(&cfg),
        Command::Flow => cmd_flow(&cfg),
        Command::GuderleyProbe => cmd_guderley_probe(&cfg),
    }
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
}

fn emit_table(cfg: &RunConfig, name: &str, contents: &str) -> CliResult<()> {
    match &cfg.out {
        Some(dir) => write_file(dir, name, contents),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes()).map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn put(map: &mut Map<String, Value>, key: &str, v: f64) {
    if v.is_finite() {
        map.insert(key.into(), Value::from(v));
    }
}

fn put_opt(map: &mut Map<String, Value>, key: &str, v: Option<f64>) {
    if let Some(v) = v {
        put(map, key, v);
    }
}

fn header_json(cfg: &RunConfig, sys: &System, command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("version".into(), Value::from(VERSION));
    m.insert("command".into(), Value::from(command));
    m.insert("n".into(), Value::from(sys.params.n));
    put(&mut m, "gamma", sys.gamma());
    put(&mut m, "lambda", sys.lambda());
    put(&mut m, "kappa", sys.params.kappa);
    m.insert("isentropic".into(), Value::from(sys.params.is_isentropic()));
    put(&mut m, "rel_tol", cfg.rel_tol);
    put(&mut m, "abs_tol", cfg.abs_tol);
    put(&mut m, "rho_ref", cfg.rho_ref);
    if cfg.s_target.is_infinite() {
        m.insert("s_target_vertical".into(), Value::from(true));
    } else {
        put(&mut m, "s_target", cfg.s_target);
    }
    m
}

fn json_text(m: Map<String, Value>) -> String {
    let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("finite JSON values");
    s.push('\n');
    s
}

fn opt_str(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v}"))
}

/// Samples of the zero sets of G and F on the window's V range, upper and lower halves.
fn zero_sets(sys: &System, v_range: (f64, f64)) -> [Vec<Vec<PhasePoint>>; 2] {
    let k = &sys.consts;
    let vs: Vec<f64> = (0..=600).map(|i| v_range.0 + (v_range.1 - v_range.0) * i as f64 / 600.0).collect();
    let g2 = |v: f64| sys.g_zero_c2(v);
    let f2 = |v: f64| {
        let w = 1.0 + v;
        (k.k1 * w * w - k.k2 * w + k.k3) / (1.0 + k.alpha / w)
    };
    let branches = |c2: &dyn Fn(f64) -> f64| {
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        for &v in &vs {
            let q = c2(v);
            if q.is_finite() && q >= 0.0 && (1.0 + v).abs() > 1e-9 {
                upper.push(PhasePoint::new(v, q.sqrt()));
                lower.push(PhasePoint::new(v, -q.sqrt()));
            } else {
                upper.push(PhasePoint::new(f64::NAN, f64::NAN));
                lower.push(PhasePoint::new(f64::NAN, f64::NAN));
            }
        }
        vec![upper, lower]
    };
    [branches(&g2), branches(&f2)]
}

fn draw_background(p: &mut Portrait, sys: &System, set: &CriticalPointSet) {
    p.axes();
    let [g, f] = zero_sets(sys, p.v_range());
    for c in g {
        p.curve(c, Stroke::Dashed);
    }
    for c in f {
        p.curve(c, Stroke::Dotted);
    }
    for cp in &set.points {
        p.point(cp.location, &cp.id.to_string());
    }
}

fn cmd_critical_points(cfg: &RunConfig) -> CliResult<()> {
    let sys = System::new(cfg.params()?)?;
    let set = critical_point_set(&sys);
    let pr = &set.presence;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "# presence case {}: lambda_max = {}, lambda_min = {}, P6-P9 present: {}",
        pr.case_id,
        opt_str(pr.lambda_max),
        opt_str(pr.lambda_min),
        pr.p68_present
    );
    for (a, b) in &set.coincident {
        let _ = writeln!(text, "# coincident: {a} {b}");
    }
    let rows = set.points.iter().map(|p| {
        vec![p.id.to_string(), fmt_f(p.location.v), fmt_f(p.location.c), p.on_line.to_string(), p.kind.to_string()]
    });
    let table = csv(&["id", "V", "C", "line", "kind"], rows);
    print!("{text}");
    emit_table(cfg, "critical_points.csv", &table)?;
    if let (Some(dir), true) = (&cfg.out, cfg.svg) {
        let fin: Vec<PhasePoint> = set.points.iter().map(|p| p.location).filter(|p| p.c.is_finite()).collect();
        let mut p = Portrait::covering(&fin);
        draw_background(&mut p, &sys, &set);
        write_file(dir, "critical_points.svg", &p.finish(&format!("critical points n={} gamma={} lambda={}", sys.params.n, sys.gamma(), sys.lambda())))?;
    }
    Ok(())
}

fn cmd_gamma3(cfg: &RunConfig) -> CliResult<()> {
    let n = cfg.n.unwrap_or(3);
    let grid = parse_grid(cfg.grid.as_deref().unwrap_or(DEFAULT_GAMMA3_GRID), "lambda")?;
    let lambdas = grid.get("lambda").ok_or(ConfigError::Missing("lambda grid"))?;
    let vals: Vec<Option<f64>> = lambdas.par_iter().map(|&l| gamma3(l, n)).collect();
    let rows = lambdas.iter().zip(&vals).map(|(&l, g)| match g {
        Some(g) => vec![fmt_f(l), fmt_f(*g), if *g > ASYMPTOTE_FLAG { "asymptote".into() } else { String::new() }],
        None => vec![fmt_f(l), "absent".into(), String::new()],
    });
    emit_table(cfg, "gamma3.csv", &csv(&["lambda", "gamma3", "note"], rows))
}

/// Construction with the configured tolerances, plus density when κ = κ̂.
struct Built {
    sys: System,
    c: Construction,
    profile: Option<DensityProfile>,
}

fn build(cfg: &RunConfig) -> CliResult<Built> {
    let sys = System::new(cfg.params()?)?;
    let integ = cfg.integrator()?;
    let opts = BuildOptions { integ, ..BuildOptions::default() };
    let c = construct(&sys, cfg.s_target, &opts)?;
    let profile = if sys.params.is_isentropic() { Some(attach_density(&sys, &c.solution, cfg.rho_ref)?) } else { None };
    Ok(Built { sys, c, profile })
}

fn tolerance_failures(c: &Construction) -> Vec<String> {
    let mut out = Vec::new();
    match c.gamma1.slope_error {
        Some(e) if e <= SLOPE_AGREEMENT => {}
        e => out.push(format!("Γ1 arrival slope differs from L1 by {e:?} (limit {SLOPE_AGREEMENT})")),
    }
    match c.gamma1.a8 {
        Some(a) if a.agree => {}
        a => out.push(format!("A8 estimates disagree: {a:?} (limit {A8_AGREEMENT})")),
    }
    out
}

fn cmd_construct(cfg: &RunConfig) -> CliResult<()> {
    let b = build(cfg)?;
    let (sys, c) = (&b.sys, &b.c);
    let sol = &c.solution;
    let dir = out_dir(cfg);

    let h = hugoniot_locus(sys.gamma(), &sol.gamma2_lower)?;
    let hp: Vec<PhasePoint> = h.iter().map(|j| j.plus).collect();
    let g3: Vec<PhasePoint> = sol.gamma3.points().collect();
    let p9 = sol.p8.reflect();
    let shock = shock_detect(&hp, &g3, p9, cfg.integrator()?.stop_radius);

    let rows: Vec<Vec<String>> = match &b.profile {
        Some(p) => p.points.iter().map(|q| vec![fmt_f(q.x), fmt_f(q.v), fmt_f(q.c), fmt_f(q.r)]).collect(),
        None => sol
            .points()
            .iter()
            .map(|q| vec![fmt_f(q.x), fmt_f(q.point.v), fmt_f(q.point.c), fmt_f(cfg.rho_ref * q.log_r.exp())])
            .collect(),
    };
    write_file(&dir, "solution.csv", &csv(&["x", "V", "C", "R"], rows))?;

    let nd = &c.node;
    let sep = &c.separatrices;
    let mut m = header_json(cfg, sys, "construct");
    put(&mut m, "x8", sol.x8);
    put(&mut m, "x9", sol.x9);
    if sol.s_origin.is_infinite() {
        m.insert("s_origin_vertical".into(), Value::from(true));
    } else {
        put(&mut m, "s_origin", sol.s_origin);
    }
    put(&mut m, "nu", sol.nu);
    put(&mut m, "omega", sol.omega);
    put(&mut m, "V8", nd.p8.v);
    put(&mut m, "C8", nd.p8.c);
    put_opt(&mut m, "L1", nd.l1);
    put_opt(&mut m, "L2", nd.l2);
    put(&mut m, "R2", nd.r2);
    put(&mut m, "W8", nd.w);
    put_opt(&mut m, "A8", sol.a8.map(|a| a.linear));
    put_opt(&mut m, "A8_finite_difference", sol.a8.map(|a| a.finite_difference));
    put_opt(&mut m, "gamma1_arrival_slope", c.gamma1.arrival_slope);
    put_opt(&mut m, "gamma1_slope_error", c.gamma1.slope_error);
    put(&mut m, "zeta", sep.zeta);
    put(&mut m, "eps", sep.eps);
    put(&mut m, "delta", sep.delta);
    put_opt(&mut m, "t_upper", c.gamma2.t_upper);
    put_opt(&mut m, "t_lower", c.gamma2.t_lower);
    put(&mut m, "log_r_origin", sol.log_r_origin);
    if let Some(p) = &b.profile {
        put(&mut m, "R0", p.r0);
        put(&mut m, "entropy_deviation", entropy_deviation(p, false));
        put(&mut m, "entropy_deviation_mass", entropy_deviation(p, true));
    }
    m.insert("shock_detected".into(), Value::from(shock.is_some()));
    if let Some(p) = shock {
        put(&mut m, "shock_V", p.v);
        put(&mut m, "shock_C", p.c);
    }
    let failures = tolerance_failures(c);
    m.insert("tolerance_ok".into(), Value::from(failures.is_empty()));
    write_file(&dir, "summary.json", &json_text(m))?;

    if cfg.svg {
        let set = critical_point_set(sys);
        let mut frame: Vec<PhasePoint> = sol.gamma2_upper.points().chain(sol.gamma2_lower.points()).collect();
        frame.extend(set.points.iter().filter(|p| matches!(p.id, PointId::P4 | PointId::P5 | PointId::P8 | PointId::P9)).map(|p| p.location));
        frame.extend(hp.iter().copied());
        let frame: Vec<PhasePoint> = frame.into_iter().filter(|p| p.c.abs() < 10.0).collect();
        let mut p = Portrait::covering(&frame);
        draw_background(&mut p, sys, &set);
        for t in [&sep.theta, &sep.phi, &sep.psi, &sep.gamma_s] {
            p.curve(t.points(), Stroke::Dashed);
        }
        for t in [&sol.gamma1, &sol.gamma2_upper, &sol.gamma2_lower, &sol.gamma3] {
            p.curve(t.points(), Stroke::Solid);
        }
        p.curve(hp.iter().copied(), Stroke::Dotted);
        let title = format!("solution n={} gamma={} lambda={} s={}", sys.params.n, sys.gamma(), sys.lambda(), sol.s_origin);
        write_file(&dir, "portrait.svg", &p.finish(&title))?;
    }
    println!(
        "x9 = {}, nu = {}, omega = {}, A8 = {}, shock_detected = {}",
        sol.x9,
        sol.nu,
        sol.omega,
        opt_str(sol.a8.map(|a| a.linear)),
        shock.is_some()
    );
    if failures.is_empty() {
        Ok(())
    } else {
        Err(crate::Error::Tolerance(failures.join("; ")).into())
    }
}

fn cmd_flow(cfg: &RunConfig) -> CliResult<()> {
    let b = build(cfg)?;
    let profile = b.profile.as_ref().ok_or_else(|| crate::Error::OutOfRegime("flow fields require kappa = kappa_hat".into()))?;
    let grid = parse_grid(cfg.grid.as_deref().unwrap_or(DEFAULT_FLOW_GRID), "r")?;
    let defaults = parse_grid(DEFAULT_FLOW_GRID, "r")?;
    let ts = grid.get("t").unwrap_or(&defaults["t"]);
    let rs = grid.get("r").unwrap_or(&defaults["r"]);
    let rows: Vec<Vec<crate::flow::FlowSample>> = ts.par_iter().map(|&t| sample_flow(profile, t, rs)).collect::<crate::Result<_>>()?;
    let dir = out_dir(cfg);
    let lines = rows.iter().flatten().map(|f| {
        let v = |x: f64| if f.in_domain { fmt_f(x) } else { String::new() };
        vec![fmt_f(f.t), fmt_f(f.r), v(f.rho), v(f.u), v(f.c), v(f.p), (f.in_domain as u8).to_string()]
    });
    write_file(&dir, "flow.csv", &csv(&["t", "r", "rho", "u", "c", "p", "in_domain"], lines))?;

    let sys = &b.sys;
    let mut m = header_json(cfg, sys, "flow");
    let d = gradient_diagnostics(sys, profile, cfg.t_bar)?;
    put(&mut m, "t_bar", d.t_bar);
    put(&mut m, "u_r_limit", d.u_r_limit);
    put(&mut m, "u_r_expected", d.u_r_expected);
    put(&mut m, "u_r_rel_err", d.u_r_rel_err);
    put(&mut m, "c_r_limit", d.c_r_limit);
    put(&mut m, "c_r_smallest", d.c_r_smallest);
    let reg = collapse_regularity(&sys.params)?;
    m.insert("rho_blowup".into(), Value::from(reg.rho_blowup));
    m.insert("uc_blowup".into(), Value::from(reg.uc_blowup));
    m.insert("p_blowup".into(), Value::from(reg.p_blowup));
    put(&mut m, "nu", profile.nu);
    put(&mut m, "omega", profile.omega);
    put(&mut m, "R0", profile.r0);
    let out_of_domain = rows.iter().flatten().filter(|f| !f.in_domain).count();
    m.insert("samples".into(), Value::from(rows.iter().map(Vec::len).sum::<usize>()));
    m.insert("samples_out_of_domain".into(), Value::from(out_of_domain));
    write_file(&dir, "flow_summary.json", &json_text(m))?;
    println!("u_r limit = {} (expected {}), |c_r| = {}", d.u_r_limit, d.u_r_expected, d.c_r_smallest);
    Ok(())
}

fn cmd_guderley_probe(cfg: &RunConfig) -> CliResult<()> {
    let mut grid = parse_grid(DEFAULT_PROBE_GRID, "lambda")?;
    if let Some(spec) = &cfg.grid {
        grid.extend(parse_grid(spec, "lambda")?);
    }
    if let Some(n) = cfg.n {
        grid.insert("n".into(), vec![n as f64]);
    }
    if let Some(g) = cfg.gamma {
        grid.insert("gamma".into(), vec![g]);
    }
    if let Some(l) = cfg.lambda {
        grid.insert("lambda".into(), vec![l]);
    }
    let ns: Vec<u32> = grid["n"]
        .iter()
        .map(|&v| {
            if v >= 1.0 && v.fract() == 0.0 && v < 1e6 {
                Ok(v as u32)
            } else {
                Err(ConfigError::Grid(format!("n = {v}")))
            }
        })
        .collect::<Result<_, _>>()?;
    let opts = cfg.integrator()?;
    let res = guderley_sweep(&ns, &grid["gamma"], &grid["lambda"], &opts);
    let mut rows = Vec::new();
    for r in res {
        let r = r?;
        rows.push(vec![
            r.n.to_string(),
            fmt_f(r.gamma),
            fmt_f(r.lambda),
            r.v_cross.map(fmt_f).unwrap_or_default(),
            fmt_f(r.v8),
            r.reached_p8.to_string(),
            format!("{:?}", r.scenario),
        ]);
    }
    emit_table(cfg, "probe.csv", &csv(&["n", "gamma", "lambda", "V_cross", "V8", "reached", "scenario"], rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_has_17_digits() {
        assert_eq!(fmt_f(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_f(f64::INFINITY), "inf");
        assert_eq!(fmt_f(f64::NAN), "");
        for v in [0.1, 1.0 / 3.0, -12345.678e-200, 5e-324] {
            assert_eq!(fmt_f(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(crate::Error::InvalidParams("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(crate::Error::Construction("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(crate::Error::OutOfRegime("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(crate::Error::Tolerance("x".into())).exit_code(), 4);
        assert_eq!(CliError::from(ConfigError::Missing("n")).exit_code(), 2);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["ssflow", "bogus"]), 2);
        assert_eq!(run(["ssflow", "critical-points", "--gamma", "abc"]), 2);
        assert_eq!(run(["ssflow", "critical-points", "--kappa", "0", "--isentropic"]), 2);
        assert_eq!(run(["ssflow", "--help"]), 0);
    }

    #[test]
    fn csv_layout() {
        let s = csv(&["a", "b"], [vec!["1".to_string(), "2".to_string()]]);
        assert_eq!(s, "a,b\n1,2\n");
    }
}
