//! Multi-run experiments: builds the instance, runs every (algorithm, run)
//! pair in parallel, aggregates, and writes results.
//!
//! Output directory layout:
//!
//! - `traces.csv`: per-round rows (or checkpoint rows for long horizons).
//! - `summary.json`: mean and standard error of cumulative regret at
//!   log-spaced checkpoints, plus per-epoch diagnostics of the
//!   unknown-distribution reduction.
//! - `config.cfg`: the resolved configuration.
//! - `env.json`: the environment, loadable again through `env.file`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::run_baseline;
use crate::config::{Algo, RunConfig};
use crate::env::FiniteMarkovEnv;
use crate::error::Result;
use crate::known::run_known;
use crate::rng::{stream, Stream};
use crate::surrogate::{make_bank, ParameterBank};
use crate::trace::{aggregate, aggregate_sampled, log_checkpoints, read_csv, write_csv, RegretTrace, RowSelection, Summary};
use crate::unknown::{run_unknown, EpochDiagnostics};

pub const TRACES_FILE: &str = "traces.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.cfg";
pub const ENV_FILE: &str = "env.json";

/// Horizons from here on get checkpoint rows unless a full trace is asked for.
pub const FULL_TRACE_LIMIT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEpochs {
    pub run_id: usize,
    pub seed: u64,
    pub epochs: Vec<EpochDiagnostics>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: RunConfig,
    pub env: FiniteMarkovEnv,
    /// Grouped by algorithm in config order, then by run.
    pub traces: Vec<RegretTrace>,
    pub epochs: Vec<RunEpochs>,
    pub summary: Summary,
}

/// The environment and parameter bank a config describes.
pub fn build_instance(cfg: &RunConfig) -> Result<(FiniteMarkovEnv, ParameterBank)> {
    let env = match &cfg.env_file {
        Some(path) => FiniteMarkovEnv::from_json(&fs::read_to_string(path)?)?,
        None => cfg.env.build()?,
    };
    let star = cfg.bank_include_theta_star.then(|| env.theta_star().to_vec());
    let bank = make_bank(cfg.bank_size, env.dim(), star.as_deref(), &mut stream(cfg.env.seed, Stream::Bank))?;
    Ok((env, bank))
}

pub fn run_seed(cfg: &RunConfig, run: usize) -> u64 {
    cfg.seed.wrapping_add(run as u64)
}

/// Runs every replica on the current rayon pool. Runs with the same index
/// share their seed across algorithms, hence the context trajectory and the
/// reward noise.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (env, bank) = build_instance(cfg)?;
    let jobs: Vec<(Algo, usize)> = cfg
        .algos
        .iter()
        .flat_map(|&a| (0..cfg.n_runs).map(move |r| (a, r)))
        .collect();
    let known = cfg.known_params();
    let unknown = cfg.unknown_params();
    let outputs: Vec<(RegretTrace, Option<RunEpochs>)> = jobs
        .par_iter()
        .map(|&(algo, run)| {
            let seed = run_seed(cfg, run);
            Ok(match algo {
                Algo::Known => (run_known(&env, &bank, &known, run, seed)?.trace, None),
                Algo::Baseline => (run_baseline(&env, cfg.baseline, cfg.horizon, run, seed)?.trace, None),
                Algo::Unknown => {
                    let out = run_unknown(&env, &bank, &unknown, run, seed)?;
                    let epochs = RunEpochs {
                        run_id: run,
                        seed,
                        epochs: out.epochs,
                    };
                    (out.run.trace, Some(epochs))
                }
            })
        })
        .collect::<Result<_>>()?;
    let (traces, epochs): (Vec<_>, Vec<_>) = outputs.into_iter().unzip();
    let epochs: Vec<RunEpochs> = epochs.into_iter().flatten().collect();
    let mut summary = aggregate(&traces, &log_checkpoints(cfg.horizon, cfg.checkpoints), &cfg.digest())?;
    if !epochs.is_empty() {
        summary.epochs = Some(serde_json::to_value(&epochs)?);
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        env,
        traces,
        epochs,
        summary,
    })
}

/// Writes traces, summary, resolved config and environment into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path, full_trace: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    let cfg = &result.config;
    let rows = if full_trace || cfg.full_trace || cfg.horizon < FULL_TRACE_LIMIT {
        RowSelection::Full
    } else {
        RowSelection::Checkpoints(&result.summary.checkpoints)
    };
    write_csv(BufWriter::new(File::create(dir.join(TRACES_FILE))?), &result.traces, rows)?;
    fs::write(dir.join(SUMMARY_FILE), result.summary.to_json()? + "\n")?;
    fs::write(dir.join(CONFIG_FILE), cfg.to_text())?;
    fs::write(dir.join(ENV_FILE), result.env.to_json()? + "\n")?;
    Ok(())
}

pub fn load_summary(dir: &Path) -> Result<Summary> {
    Summary::from_json(&fs::read_to_string(dir.join(SUMMARY_FILE))?)
}

/// Re-aggregates `traces.csv` in `dir` at the rounds every trace shares.
pub fn reaggregate(dir: &Path) -> Result<Summary> {
    let traces = read_csv(File::open(dir.join(TRACES_FILE))?)?;
    let digest = match fs::read_to_string(dir.join(CONFIG_FILE)) {
        Ok(text) => RunConfig::parse(&text)?.digest(),
        Err(_) => String::new(),
    };
    aggregate_sampled(&traces, &digest)
}

/// `t,<algo>_mean,<algo>_stderr,…` table of a summary.
pub fn summary_csv(summary: &Summary) -> String {
    let mut out = String::from("t");
    for algo in &summary.algos {
        out.push_str(&format!(",{algo}_mean,{algo}_stderr"));
    }
    out.push('\n');
    for (k, t) in summary.checkpoints.iter().enumerate() {
        out.push_str(&t.to_string());
        for algo in &summary.algos {
            out.push_str(&format!(",{},{}", summary.mean[algo][k], summary.stderr[algo][k]));
        }
        out.push('\n');
    }
    out
}

pub fn default_out_dir(cfg_path: &Path) -> PathBuf {
    let stem = cfg_path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    PathBuf::from("results").join(stem)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> RunConfig {
        let mut cfg = RunConfig::default();
        for o in [
            "run.horizon=600",
            "run.n_runs=3",
            "run.algos=known,unknown,baseline",
            "env.n_states=6",
            "env.n_actions=4",
            "env.dim=3",
            "env.n_neighbors=1",
            "bank.size=16",
            "run.checkpoints=10",
        ] {
            cfg.apply_override(o).unwrap();
        }
        cfg
    }

    #[test]
    fn traces_are_grouped_and_paired() {
        let res = run_experiment(&tiny()).unwrap();
        assert_eq!(res.traces.len(), 9);
        assert_eq!(res.summary.algos, vec!["alg1-known", "alg2-unknown", "baseline-linucb"]);
        for r in 0..3 {
            let hashes: Vec<u64> = res.traces.iter().filter(|t| t.run_id == r).map(|t| t.traj_hash[599]).collect();
            assert!(hashes.windows(2).all(|w| w[0] == w[1]));
        }
        assert_eq!(res.epochs.len(), 3);
        assert!(res.summary.epochs.is_some());
    }

    #[test]
    fn summary_csv_shape() {
        let res = run_experiment(&tiny()).unwrap();
        let csv = summary_csv(&res.summary);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), res.summary.checkpoints.len() + 1);
        assert_eq!(lines[0].split(',').count(), 7);
    }

    #[test]
    fn default_directory_follows_the_config_name() {
        assert_eq!(default_out_dir(Path::new("configs/desk.cfg")), PathBuf::from("results/desk"));
    }
}
