//! Flat `key = value` experiment configuration.
//!
//! One setting per line, dotted keys, `#` starts a comment. Every key has a
//! default, so a file only lists what it changes. Unknown keys and duplicate
//! keys are rejected, and every error names the offending key.
//!
//! ```text
//! # desk-scale comparison
//! run.horizon = 50000
//! run.algos = known,baseline
//! env.n_states = 40
//! ```

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baseline::BaselineParams;
use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::known::{KnownParams, RadiusMode, UcbParams};
use crate::trace::{ALGO_BASELINE, ALGO_KNOWN, ALGO_UNKNOWN};
use crate::unknown::UnknownParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algo {
    Known,
    Unknown,
    Baseline,
}

impl Algo {
    pub fn label(self) -> &'static str {
        match self {
            Algo::Known => ALGO_KNOWN,
            Algo::Unknown => ALGO_UNKNOWN,
            Algo::Baseline => ALGO_BASELINE,
        }
    }

    fn key(self) -> &'static str {
        match self {
            Algo::Known => "known",
            Algo::Unknown => "unknown",
            Algo::Baseline => "baseline",
        }
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "known" => Ok(Algo::Known),
            "unknown" => Ok(Algo::Unknown),
            "baseline" => Ok(Algo::Baseline),
            other => Err(format!("unknown algorithm `{other}` (expected known, unknown or baseline)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub horizon: usize,
    pub n_runs: usize,
    /// Run `r` uses seed `seed + r`.
    pub seed: u64,
    pub algos: Vec<Algo>,
    pub checkpoints: usize,
    pub full_trace: bool,
    pub env: EnvSpec,
    /// Environment JSON that replaces the generated one.
    pub env_file: Option<String>,
    pub bank_size: usize,
    pub bank_include_theta_star: bool,
    pub c_tau: f64,
    pub theory_mode: bool,
    pub ucb: UcbParams,
    /// Multiplier for the fixed radius.
    pub alpha: f64,
    pub pe_delta: f64,
    pub misspec_delta: f64,
    pub c_mix_bound: Option<f64>,
    pub beta_bound: Option<f64>,
    pub baseline: BaselineParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            horizon: 200_000,
            n_runs: 20,
            seed: 0,
            algos: vec![Algo::Known, Algo::Baseline],
            checkpoints: 50,
            full_trace: false,
            env: EnvSpec::table3(1),
            env_file: None,
            bank_size: 256,
            bank_include_theta_star: false,
            c_tau: 1.0,
            theory_mode: false,
            ucb: UcbParams::default(),
            alpha: 2.0,
            pe_delta: 0.05,
            misspec_delta: 0.05,
            c_mix_bound: None,
            beta_bound: None,
            baseline: BaselineParams::default(),
        }
    }
}

/// Every key, in the order used when writing a config back out.
pub const KEYS: [&str; 33] = [
    "run.horizon",
    "run.n_runs",
    "run.seed",
    "run.algos",
    "run.checkpoints",
    "run.full_trace",
    "env.n_states",
    "env.n_actions",
    "env.dim",
    "env.p_loop",
    "env.n_neighbors",
    "env.beta",
    "env.pi",
    "env.noise_sigma",
    "env.c_mix",
    "env.seed",
    "env.theta_star",
    "env.file",
    "bank.size",
    "bank.include_theta_star",
    "oracle.lambda",
    "oracle.radius",
    "oracle.alpha",
    "oracle.bonus_cap",
    "oracle.delta",
    "oracle.c_tau",
    "oracle.theory_mode",
    "pe.delta",
    "pe.misspec_delta",
    "pe.c_mix_bound",
    "pe.beta_bound",
    "baseline.lambda",
    "baseline.alpha",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e: T::Err| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, got `{value}`"))),
    }
}

fn parse_optional(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn show_optional(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn show_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "run.horizon" => self.horizon = parse(key, value)?,
            "run.n_runs" => self.n_runs = parse(key, value)?,
            "run.seed" => self.seed = parse(key, value)?,
            "run.algos" => {
                let mut algos = Vec::new();
                for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    let algo: Algo = part.parse().map_err(|e| Error::config(key, e))?;
                    if algos.contains(&algo) {
                        return Err(Error::config(key, format!("`{part}` listed twice")));
                    }
                    algos.push(algo);
                }
                self.algos = algos;
            }
            "run.checkpoints" => self.checkpoints = parse(key, value)?,
            "run.full_trace" => self.full_trace = parse_bool(key, value)?,
            "env.n_states" => self.env.n_states = parse(key, value)?,
            "env.n_actions" => self.env.n_actions = parse(key, value)?,
            "env.dim" => self.env.dim = parse(key, value)?,
            "env.p_loop" => self.env.p_loop = parse(key, value)?,
            "env.n_neighbors" => self.env.n_neighbors = parse(key, value)?,
            "env.beta" => self.env.beta = parse(key, value)?,
            "env.pi" => {
                if value != "uniform" {
                    return Err(Error::config(key, "only `uniform` is supported"));
                }
            }
            "env.noise_sigma" => self.env.noise_sigma = parse(key, value)?,
            "env.c_mix" => self.env.c_mix = parse(key, value)?,
            "env.seed" => self.env.seed = parse(key, value)?,
            "env.theta_star" => {
                self.env.theta_star = if value == "random" {
                    None
                } else {
                    Some(value.split(',').map(|x| parse(key, x.trim())).collect::<Result<_>>()?)
                }
            }
            "env.file" => self.env_file = (value != "none").then(|| value.to_string()),
            "bank.size" => self.bank_size = parse(key, value)?,
            "bank.include_theta_star" => self.bank_include_theta_star = parse_bool(key, value)?,
            "oracle.lambda" => self.ucb.lambda = parse(key, value)?,
            "oracle.radius" => {
                self.ucb.radius = match value {
                    "self-normalized" => RadiusMode::SelfNormalized,
                    "fixed" => RadiusMode::Fixed(self.alpha),
                    _ => return Err(Error::config(key, format!("expected self-normalized or fixed, got `{value}`"))),
                }
            }
            "oracle.alpha" => {
                self.alpha = parse(key, value)?;
                if let RadiusMode::Fixed(_) = self.ucb.radius {
                    self.ucb.radius = RadiusMode::Fixed(self.alpha);
                }
            }
            "oracle.bonus_cap" => self.ucb.bonus_cap = parse_optional(key, value)?,
            "oracle.delta" => self.ucb.delta = parse(key, value)?,
            "oracle.c_tau" => self.c_tau = parse(key, value)?,
            "oracle.theory_mode" => self.theory_mode = parse_bool(key, value)?,
            "pe.delta" => self.pe_delta = parse(key, value)?,
            "pe.misspec_delta" => self.misspec_delta = parse(key, value)?,
            "pe.c_mix_bound" => self.c_mix_bound = parse_optional(key, value)?,
            "pe.beta_bound" => self.beta_bound = parse_optional(key, value)?,
            "baseline.lambda" => self.baseline.lambda = parse(key, value)?,
            "baseline.alpha" => self.baseline.alpha = parse(key, value)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// The value of `key` as it would be written to a file.
    pub fn get(&self, key: &str) -> Result<String> {
        Ok(match key {
            "run.horizon" => self.horizon.to_string(),
            "run.n_runs" => self.n_runs.to_string(),
            "run.seed" => self.seed.to_string(),
            "run.algos" => self.algos.iter().map(|a| a.key()).collect::<Vec<_>>().join(","),
            "run.checkpoints" => self.checkpoints.to_string(),
            "run.full_trace" => self.full_trace.to_string(),
            "env.n_states" => self.env.n_states.to_string(),
            "env.n_actions" => self.env.n_actions.to_string(),
            "env.dim" => self.env.dim.to_string(),
            "env.p_loop" => self.env.p_loop.to_string(),
            "env.n_neighbors" => self.env.n_neighbors.to_string(),
            "env.beta" => self.env.beta.to_string(),
            "env.pi" => "uniform".to_string(),
            "env.noise_sigma" => self.env.noise_sigma.to_string(),
            "env.c_mix" => self.env.c_mix.to_string(),
            "env.seed" => self.env.seed.to_string(),
            "env.theta_star" => self.env.theta_star.as_deref().map_or_else(|| "random".to_string(), show_list),
            "env.file" => self.env_file.clone().unwrap_or_else(|| "none".to_string()),
            "bank.size" => self.bank_size.to_string(),
            "bank.include_theta_star" => self.bank_include_theta_star.to_string(),
            "oracle.lambda" => self.ucb.lambda.to_string(),
            "oracle.radius" => match self.ucb.radius {
                RadiusMode::SelfNormalized => "self-normalized".to_string(),
                RadiusMode::Fixed(_) => "fixed".to_string(),
            },
            "oracle.alpha" => self.alpha.to_string(),
            "oracle.bonus_cap" => show_optional(self.ucb.bonus_cap),
            "oracle.delta" => self.ucb.delta.to_string(),
            "oracle.c_tau" => self.c_tau.to_string(),
            "oracle.theory_mode" => self.theory_mode.to_string(),
            "pe.delta" => self.pe_delta.to_string(),
            "pe.misspec_delta" => self.misspec_delta.to_string(),
            "pe.c_mix_bound" => show_optional(self.c_mix_bound),
            "pe.beta_bound" => show_optional(self.beta_bound),
            "baseline.lambda" => self.baseline.lambda.to_string(),
            "baseline.alpha" => self.baseline.alpha.to_string(),
            _ => return Err(Error::config(key, "unknown key")),
        })
    }

    /// Parses a config on top of the defaults and validates it.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies the settings in `text` without validating.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen: Vec<String> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}", n + 1), "expected `key = value`"))?;
            let key = key.trim();
            if seen.iter().any(|k| k == key) {
                return Err(Error::config(key, format!("set twice (line {})", n + 1)));
            }
            self.set(key, value)?;
            seen.push(key.to_string());
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(assignment, "override must look like key=value"))?;
        self.set(key.trim(), value)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&self.get(key).expect("listed key"));
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the canonical text form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, reason: &str| if ok { Ok(()) } else { Err(Error::config(key, reason)) };
        let prob = |x: f64| x > 0.0 && x < 1.0;
        check(self.horizon >= 2, "run.horizon", "must be at least 2")?;
        check(self.n_runs >= 1, "run.n_runs", "must be at least 1")?;
        check(!self.algos.is_empty(), "run.algos", "must list at least one algorithm")?;
        check(self.checkpoints >= 1, "run.checkpoints", "must be at least 1")?;
        check(self.env.n_states >= 1, "env.n_states", "must be at least 1")?;
        check(self.env.n_actions >= 1, "env.n_actions", "must be at least 1")?;
        check(self.env.dim >= 1, "env.dim", "must be at least 1")?;
        check((0.0..=1.0).contains(&self.env.p_loop), "env.p_loop", "must lie in [0, 1]")?;
        check(
            self.env.n_states == 1 || 2 * self.env.n_neighbors < self.env.n_states,
            "env.n_neighbors",
            "ring neighbours on both sides must be fewer than the states",
        )?;
        check((0.0..1.0).contains(&self.env.beta), "env.beta", "must lie in [0, 1)")?;
        check(self.env.noise_sigma >= 0.0 && self.env.noise_sigma.is_finite(), "env.noise_sigma", "must be finite and nonnegative")?;
        check(self.env.c_mix >= 1.0 && self.env.c_mix.is_finite(), "env.c_mix", "must be finite and at least 1")?;
        if let Some(theta) = &self.env.theta_star {
            check(theta.len() == self.env.dim, "env.theta_star", "length must equal env.dim")?;
            let n = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
            check(n <= 1.0 + 1e-9, "env.theta_star", "norm must be at most 1")?;
        }
        check(self.bank_size >= 2, "bank.size", "must be at least 2")?;
        check(self.ucb.lambda > 0.0 && self.ucb.lambda.is_finite(), "oracle.lambda", "must be positive")?;
        check(self.alpha >= 0.0 && self.alpha.is_finite(), "oracle.alpha", "must be finite and nonnegative")?;
        check(self.ucb.bonus_cap.is_none_or(|c| c > 0.0), "oracle.bonus_cap", "must be positive or none")?;
        check(prob(self.ucb.delta), "oracle.delta", "must lie in (0, 1)")?;
        check(self.c_tau > 0.0 && self.c_tau.is_finite(), "oracle.c_tau", "must be positive")?;
        check(!self.theory_mode || self.c_tau > 1.0, "oracle.c_tau", "theory mode requires c_tau > 1")?;
        check(prob(self.pe_delta), "pe.delta", "must lie in (0, 1)")?;
        check(prob(self.misspec_delta), "pe.misspec_delta", "must lie in (0, 1)")?;
        check(self.c_mix_bound.is_none_or(|c| c >= 1.0), "pe.c_mix_bound", "must be at least 1 or none")?;
        check(self.beta_bound.is_none_or(|b| (0.0..1.0).contains(&b)), "pe.beta_bound", "must lie in [0, 1) or none")?;
        check(self.baseline.lambda > 0.0 && self.baseline.lambda.is_finite(), "baseline.lambda", "must be positive")?;
        check(self.baseline.alpha >= 0.0 && self.baseline.alpha.is_finite(), "baseline.alpha", "must be finite and nonnegative")?;
        Ok(())
    }

    pub fn known_params(&self) -> KnownParams {
        KnownParams {
            horizon: self.horizon,
            c_tau: self.c_tau,
            theory_mode: self.theory_mode,
            ucb: self.ucb,
        }
    }

    pub fn unknown_params(&self) -> UnknownParams {
        UnknownParams {
            horizon: self.horizon,
            c_tau: self.c_tau,
            pe_delta: self.pe_delta,
            delta: self.misspec_delta,
            c_mix_bound: self.c_mix_bound,
            beta_bound: self.beta_bound,
        }
    }
}
