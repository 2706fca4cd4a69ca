//! Run configuration: a key=value file with '#' comments, overridden by flags, and grid specs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::ode::IntegratorOptions;
use crate::similarity::SimilarityParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("missing required setting `{0}`")]
    Missing(&'static str),
    #[error("invalid grid `{0}`")]
    Grid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaSpec {
    Isentropic,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: Option<u32>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub kappa: KappaSpec,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub out: Option<PathBuf>,
    pub svg: bool,
    /// Origin slope of Γ2; infinite for a vertical arrival.
    pub s_target: f64,
    pub grid: Option<String>,
    /// Density at x8 = -1, i.e. at (t, r) = (-1, 1).
    pub rho_ref: f64,
    pub t_bar: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let o = IntegratorOptions::default();
        Self {
            n: None,
            gamma: None,
            lambda: None,
            kappa: KappaSpec::Isentropic,
            rel_tol: o.rel_tol,
            abs_tol: o.abs_tol,
            out: None,
            svg: true,
            s_target: f64::INFINITY,
            grid: None,
            rho_ref: 1.0,
            t_bar: -1.0,
        }
    }
}

fn num(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.trim().parse::<f64>().ok().filter(|v| !v.is_nan()).ok_or_else(|| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
    })
}

fn flag(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue { key: key.into(), value: value.into() }),
    }
}

impl RunConfig {
    /// Applies one setting; keys accept '-' or '_' as separators.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let k = key.trim().replace('-', "_");
        let v = value.trim();
        match k.as_str() {
            "n" => {
                self.n = Some(v.parse().map_err(|_| ConfigError::BadValue { key: k.clone(), value: v.into() })?);
            }
            "gamma" => self.gamma = Some(num(&k, v)?),
            "lambda" => self.lambda = Some(num(&k, v)?),
            "kappa" => {
                self.kappa = if v == "isentropic" { KappaSpec::Isentropic } else { KappaSpec::Value(num(&k, v)?) };
            }
            "isentropic" => {
                if flag(&k, v)? {
                    self.kappa = KappaSpec::Isentropic;
                }
            }
            "rel_tol" => self.rel_tol = num(&k, v)?,
            "abs_tol" => self.abs_tol = num(&k, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "svg" => self.svg = flag(&k, v)?,
            "s_target" => self.s_target = num(&k, v)?,
            "grid" => self.grid = Some(v.to_string()),
            "rho_ref" => self.rho_ref = num(&k, v)?,
            "t_bar" => self.t_bar = num(&k, v)?,
            _ => return Err(ConfigError::UnknownKey(key.trim().to_string())),
        }
        Ok(())
    }

    /// Applies every `key = value` line of a config file.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, msg: "expected key = value".into() })?;
            self.set(k, v).map_err(|e| ConfigError::Syntax { line: i + 1, msg: e.to_string() })?;
        }
        Ok(())
    }

    pub fn params(&self) -> Result<SimilarityParams, crate::Error> {
        let n = self.n.ok_or_else(|| crate::Error::InvalidParams("n is required".into()))?;
        let gamma = self.gamma.ok_or_else(|| crate::Error::InvalidParams("gamma is required".into()))?;
        let lambda = self.lambda.ok_or_else(|| crate::Error::InvalidParams("lambda is required".into()))?;
        match self.kappa {
            KappaSpec::Isentropic => SimilarityParams::isentropic(n, gamma, lambda),
            KappaSpec::Value(k) => SimilarityParams::new(n, gamma, lambda, k),
        }
    }

    pub fn integrator(&self) -> Result<IntegratorOptions, crate::Error> {
        let o = IntegratorOptions { rel_tol: self.rel_tol, abs_tol: self.abs_tol, ..IntegratorOptions::default() };
        o.validate()?;
        Ok(o)
    }
}

/// Values of one grid axis: `lo:hi:N`, `lo:hi:N:log` or a comma list.
pub fn parse_axis(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = || ConfigError::Grid(spec.to_string());
    let s = spec.trim();
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let log = match parts.len() {
            3 => false,
            4 if parts[3] == "log" => true,
            4 if parts[3] == "lin" => false,
            _ => return Err(bad()),
        };
        let lo: f64 = parts[0].parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].parse().map_err(|_| bad())?;
        let count: usize = parts[2].parse().map_err(|_| bad())?;
        if count == 0 || !lo.is_finite() || !hi.is_finite() || (log && !(lo > 0.0 && hi > 0.0)) {
            return Err(bad());
        }
        if count == 1 {
            return Ok(vec![lo]);
        }
        let step = |k: usize| k as f64 / (count - 1) as f64;
        Ok((0..count)
            .map(|k| {
                if k == count - 1 {
                    hi
                } else if log {
                    (lo.ln() + (hi.ln() - lo.ln()) * step(k)).exp()
                } else {
                    lo + (hi - lo) * step(k)
                }
            })
            .collect())
    } else {
        let vals: Result<Vec<f64>, _> = s.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|_| bad())?;
        if vals.is_empty() || vals.iter().any(|v| v.is_nan()) {
            return Err(bad());
        }
        Ok(vals)
    }
}

/// Parses `key=axis;key=axis`; a bare axis binds to `default_key`.
pub fn parse_grid(spec: &str, default_key: &str) -> Result<BTreeMap<String, Vec<f64>>, ConfigError> {
    let mut out = BTreeMap::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = match part.split_once('=') {
            Some((k, v)) => (k.trim().to_string(), v),
            None => (default_key.to_string(), part),
        };
        if out.insert(k, parse_axis(v)?).is_some() {
            return Err(ConfigError::Grid(spec.to_string()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_with_comments_and_overrides() {
        let mut c = RunConfig::default();
        c.apply_file("# flagship\nn = 3\ngamma=12 # stiff\n\nlambda = 0.02\nrel-tol = 1e-9\nsvg = false\n").unwrap();
        assert_eq!((c.n, c.gamma, c.lambda), (Some(3), Some(12.0), Some(0.02)));
        assert_eq!(c.rel_tol, 1e-9);
        assert!(!c.svg);
        c.set("kappa", "0").unwrap();
        assert_eq!(c.kappa, KappaSpec::Value(0.0));
        assert!(c.params().unwrap().kappa == 0.0);
    }

    #[test]
    fn malformed_files() {
        let mut c = RunConfig::default();
        assert!(matches!(c.apply_file("n 3"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(c.apply_file("colour = red").is_err());
        assert!(c.apply_file("gamma = abc").is_err());
        assert!(c.apply_file("n = -3").is_err());
        assert!(RunConfig::default().params().is_err());
    }

    #[test]
    fn axes() {
        assert_eq!(parse_axis("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_axis("1e-3:10:5:log").unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[1] - 1e-2).abs() < 1e-15 && g[4] == 10.0);
        assert_eq!(parse_axis("1, 2.5,inf").unwrap(), vec![1.0, 2.5, f64::INFINITY]);
        assert!(parse_axis("0:1:3:log").is_err());
        assert!(parse_axis("1:x:3").is_err());
        assert!(parse_axis("").is_err());
    }

    #[test]
    fn keyed_grids() {
        let g = parse_grid("t=-1,0;r=1:100:3:log", "r").unwrap();
        assert_eq!(g["t"], vec![-1.0, 0.0]);
        assert_eq!(g["r"], vec![1.0, 10.000000000000002, 100.0]);
        let g = parse_grid("0.001:0.1:50", "lambda").unwrap();
        assert_eq!(g["lambda"].len(), 50);
        assert!(parse_grid("t=1;t=2", "t").is_err());
    }
}
