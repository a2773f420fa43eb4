//! Flat `key = value` configuration files and the CSV/JSON artefacts written
//! by the command-line tool.
//!
//! Recognised keys:
//!
//! | key | meaning |
//! |---|---|
//! | `model.alpha`, `model.beta`, `model.eta`, `model.mu`, `model.eps` | full-system parameters |
//! | `sigmoid.family` | `arctan`, `algebraic`, `hill`, `gk` |
//! | `sigmoid.n`, `sigmoid.eps_gk` | Hill order, Goldbeter–Koshland ε |
//! | `gamma.k`, `gamma.alpha`, `gamma.beta`, `gamma.phi_l0`, `gamma.phi_r0` | sphere data γ |
//! | `shoot.tol`, `shoot.seed` | heteroclinic shooting |
//! | `integrator.rel_tol`, `integrator.abs_tol`, `integrator.stiff_switch` | ODE solver |
//! | `run.seed` | seed for randomised checks |
//!
//! Values are numbers, `pi`, or a quotient `a/b` of those (so `1/pi` works).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{GammaVector, ModelParams, Sigmoid};
use crate::numerics::ode::IntegratorConfig;
use crate::sphere::{HetCurve, ShootConfig};

const KNOWN: &[&str] = &[
    "model.alpha",
    "model.beta",
    "model.eta",
    "model.mu",
    "model.eps",
    "sigmoid.family",
    "sigmoid.n",
    "sigmoid.eps_gk",
    "gamma.k",
    "gamma.alpha",
    "gamma.beta",
    "gamma.phi_l0",
    "gamma.phi_r0",
    "shoot.tol",
    "shoot.seed",
    "integrator.rel_tol",
    "integrator.abs_tol",
    "integrator.stiff_switch",
    "run.seed",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KvConfig {
    map: BTreeMap<String, String>,
}

fn parse_atom(s: &str) -> Option<f64> {
    match s.trim() {
        "pi" => Some(std::f64::consts::PI),
        t => t.parse().ok(),
    }
}

/// Number, `pi`, or `a/b`.
pub fn parse_number(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => Some(parse_atom(a)? / parse_atom(b)?),
        None => parse_atom(s),
    }
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let k = k.trim();
            if !KNOWN.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key '{k}'", i + 1)));
            }
            if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", i + 1)));
            }
        }
        Ok(Self { map })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn num(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| parse_number(v).ok_or_else(|| Error::Config(format!("{key}: '{v}' is not a number"))))
            .transpose()
    }

    pub fn req(&self, key: &str) -> Result<f64> {
        self.num(key)?.ok_or_else(|| Error::Config(format!("missing key '{key}'")))
    }

    pub fn model(&self) -> Result<ModelParams> {
        ModelParams::new(
            self.req("model.alpha")?,
            self.req("model.beta")?,
            self.req("model.eta")?,
            self.num("model.mu")?.unwrap_or(0.0),
            self.req("model.eps")?,
        )
    }

    pub fn sigmoid(&self) -> Result<Sigmoid> {
        match self.get("sigmoid.family").unwrap_or("arctan") {
            "arctan" => Ok(Sigmoid::arctan()),
            "algebraic" => Ok(Sigmoid::algebraic()),
            "hill" => {
                let n = self.req("sigmoid.n")?;
                if n.fract() != 0.0 || n < 1.0 {
                    return Err(Error::Config("sigmoid.n must be a positive integer".into()));
                }
                Sigmoid::hill(n as u32)
            }
            "gk" => Sigmoid::goldbeter_koshland(self.req("sigmoid.eps_gk")?),
            other => Err(Error::Config(format!("unknown sigmoid family '{other}'"))),
        }
    }

    /// γ from `gamma.*` keys, or derived from the model and sigmoid.
    pub fn gamma(&self) -> Result<GammaVector> {
        if self.get("gamma.k").is_some() {
            let k = self.req("gamma.k")?;
            if k.fract() != 0.0 || k < 1.0 {
                return Err(Error::Config("gamma.k must be a positive integer".into()));
            }
            return GammaVector::new(
                k as u32,
                self.req("gamma.alpha")?,
                self.req("gamma.beta")?,
                self.req("gamma.phi_l0")?,
                self.req("gamma.phi_r0")?,
            );
        }
        GammaVector::from_model(&self.model()?, &self.sigmoid()?)
    }

    pub fn integrator(&self) -> Result<IntegratorConfig> {
        let mut c = IntegratorConfig::default();
        if let Some(v) = self.num("integrator.rel_tol")? {
            c.rel_tol = v;
        }
        if let Some(v) = self.num("integrator.abs_tol")? {
            c.abs_tol = v;
        }
        if let Some(v) = self.get("integrator.stiff_switch") {
            c.stiff_switch = v.parse().map_err(|_| Error::Config("integrator.stiff_switch must be true/false".into()))?;
        }
        if !(c.rel_tol > 0.0 && c.abs_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(c)
    }

    pub fn shoot(&self) -> Result<ShootConfig> {
        let mut c = ShootConfig::default();
        if let Some(v) = self.num("shoot.tol")? {
            c.tol = v;
        }
        if let Some(v) = self.num("shoot.seed")? {
            c.seed = v;
        }
        Ok(c)
    }

    pub fn run_seed(&self) -> Result<u64> {
        match self.get("run.seed") {
            None => Ok(0),
            Some(v) => v.parse().map_err(|_| Error::Config("run.seed must be a nonnegative integer".into())),
        }
    }
}

/// Shortest decimal form that round-trips is not stable across platforms;
/// fixed 17 significant digits is.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn write_trajectory_csv<W: Write>(mut w: W, t: &[f64], y: &[[f64; 2]]) -> std::io::Result<()> {
    writeln!(w, "t,x,y")?;
    for (t, s) in t.iter().zip(y) {
        writeln!(w, "{},{},{}", fmt_f64(*t), fmt_f64(s[0]), fmt_f64(s[1]))?;
    }
    Ok(())
}

pub fn write_het_csv<W: Write>(mut w: W, h: &HetCurve) -> std::io::Result<()> {
    writeln!(w, "mu1,etaL_het,etaR_het")?;
    for i in 0..h.mu1_grid.len() {
        writeln!(w, "{},{},{}", fmt_f64(h.mu1_grid[i]), fmt_f64(h.eta_l_het[i]), fmt_f64(h.eta_r_het[i]))?;
    }
    Ok(())
}

pub fn read_het_csv<R: BufRead>(r: R) -> Result<HetCurve> {
    let mut lines = r.lines();
    let head = lines.next().transpose().map_err(|e| Error::Config(e.to_string()))?;
    if head.as_deref().map(str::trim) != Some("mu1,etaL_het,etaR_het") {
        return Err(Error::Config("het CSV header must be 'mu1,etaL_het,etaR_het'".into()));
    }
    let (mut m, mut l, mut rr) = (vec![], vec![], vec![]);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Config(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("het CSV row {}: bad number", i + 2)))?;
        if v.len() != 3 {
            return Err(Error::Config(format!("het CSV row {}: expected 3 columns", i + 2)));
        }
        m.push(v[0]);
        l.push(v[1]);
        rr.push(v[2]);
    }
    HetCurve::from_samples(m, l, rr).map_err(|e| Error::Config(e.to_string()))
}

pub fn write_json<W: Write, T: Serialize>(w: W, v: &T) -> std::io::Result<()> {
    serde_json::to_writer_pretty(w, v).map_err(std::io::Error::other)
}

/// Machine-readable error record.
#[derive(Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl ErrorReport {
    pub fn from_error(e: &Error) -> Self {
        let kind = match e {
            Error::InvalidParams(_) => "invalid_params",
            Error::Domain(_) => "domain",
            Error::UnsupportedSpec(_) => "unsupported_spec",
            Error::InvalidChart(_) => "invalid_chart",
            Error::OutOfOverlap(_) => "out_of_overlap",
            Error::StepCollapse { .. } => "step_collapse",
            Error::MaxSteps(_) => "max_steps",
            Error::NonFinite(_) => "non_finite",
            Error::NoReturn(_) => "no_return",
            Error::NoConvergence(_) => "no_convergence",
            Error::NoSignChange(_) => "no_sign_change",
            Error::NonMonotone(_) => "non_monotone",
            Error::ClassificationMismatch(_) => "classification_mismatch",
            Error::Config(_) => "config",
        };
        Self { error: kind, message: e.to_string(), exit_code: if e.is_config() { 3 } else { 2 } }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_quotients_and_comments() {
        let c = KvConfig::parse("gamma.phi_l0 = 1/pi  # tail\n\nmodel.alpha=0.5\n").unwrap();
        assert_eq!(c.req("gamma.phi_l0").unwrap(), 1.0 / std::f64::consts::PI);
        assert_eq!(c.req("model.alpha").unwrap(), 0.5);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(KvConfig::parse("model.alhpa = 1").unwrap_err().is_config());
        assert!(KvConfig::parse("model.eta = 1\nmodel.eta = 2").is_err());
        assert!(KvConfig::parse("model.eta 1").is_err());
    }

    #[test]
    fn het_csv_round_trip() {
        let h = HetCurve::from_samples(vec![0.0, 0.5], vec![-0.7, 0.3], vec![0.3, 0.6]).unwrap();
        let mut buf = Vec::new();
        write_het_csv(&mut buf, &h).unwrap();
        let back = read_het_csv(&buf[..]).unwrap();
        assert_eq!(back.eta_l_het, h.eta_l_het);
        assert!((back.mu1_star - h.mu1_star).abs() < 1e-15);
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
