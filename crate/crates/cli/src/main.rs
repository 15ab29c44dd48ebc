use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mbl_core::harness::{self, SUMMARY_FILE};
use mbl_core::verify::{self, VERIFY_SEED};
use mbl_core::{Error, RunConfig};

/// Markovian contextual linear bandit experiments.
#[derive(Debug, Parser)]
#[command(name = "mbl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment a config file describes.
    Run {
        config: PathBuf,
        /// Output directory [default: results/<config name>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed; run r uses seed + r. Falls back to $MBL_SEED, then to the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Write every round to traces.csv even for long horizons.
        #[arg(long)]
        full_trace: bool,
        /// Override a config key, e.g. --set env.beta=0.5. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Worker threads [default: available parallelism].
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run numerical checks; exits 2 if any fails.
    Verify {
        /// One of the suite names, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Override the suite's repetition count.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = VERIFY_SEED)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print the regret summary of a results directory.
    Report {
        dir: PathBuf,
        /// Also write summary.csv into the directory.
        #[arg(long)]
        emit_csv: bool,
    },
}

enum Failure {
    Config(anyhow::Error),
    Verify,
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(Error::Config { .. } | Error::InvalidParameter { .. } | Error::HorizonTooShort { .. }) => Failure::Config(e),
            _ => Failure::Other(e),
        }
    }
}

fn init_pool(jobs: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("cannot start worker pool")?;
    }
    Ok(())
}

fn load_config(path: &Path, seed: Option<u64>, full_trace: bool, overrides: &[String]) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Config)?;
    let mut cfg = RunConfig::default();
    let cfg_err = |e: Error| Failure::Config(anyhow::Error::new(e).context(format!("in {}", path.display())));
    cfg.apply_text(&text).map_err(cfg_err)?;
    for o in overrides {
        cfg.apply_override(o).map_err(|e| Failure::Config(e.into()))?;
    }
    let env_seed = std::env::var("MBL_SEED").ok();
    match (seed, env_seed) {
        (Some(s), _) => cfg.seed = s,
        (None, Some(s)) => cfg.set("run.seed", &s).map_err(|e| Failure::Config(anyhow::Error::new(e).context("from MBL_SEED")))?,
        (None, None) => {}
    }
    if full_trace {
        cfg.full_trace = true;
    }
    cfg.validate().map_err(|e| Failure::Config(e.into()))?;
    Ok(cfg)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            config,
            out,
            seed,
            full_trace,
            overrides,
            jobs,
        } => {
            let cfg = load_config(&config, seed, full_trace, &overrides)?;
            init_pool(jobs)?;
            let out = out.unwrap_or_else(|| harness::default_out_dir(&config));
            let result = harness::run_experiment(&cfg).map_err(anyhow::Error::from)?;
            harness::write_outputs(&result, &out, full_trace).map_err(anyhow::Error::from)?;
            for trace in &result.traces {
                println!(
                    "run {:>3} {:<16} seed {:<6} T {:<7} regret {:.3}",
                    trace.run_id,
                    trace.algo,
                    trace.seed,
                    trace.horizon(),
                    trace.final_regret()
                );
            }
            println!("wrote {} (config {})", out.display(), &result.summary.config_digest[..12]);
            Ok(())
        }
        Command::Verify { suite, trials, seed, jobs } => {
            init_pool(jobs)?;
            let reports = verify::run_suite(&suite, trials, seed).map_err(|e| Failure::Config(e.into()))?;
            let mut failed = false;
            for r in &reports {
                failed |= !r.pass;
                println!("{}", r.to_json().map_err(anyhow::Error::from)?);
            }
            if failed {
                Err(Failure::Verify)
            } else {
                Ok(())
            }
        }
        Command::Report { dir, emit_csv } => {
            let summary = if dir.join(SUMMARY_FILE).exists() {
                harness::load_summary(&dir)
            } else {
                harness::reaggregate(&dir)
            }
            .with_context(|| format!("cannot read results in {}", dir.display()))?;
            let table = harness::summary_csv(&summary);
            print!("{table}");
            if emit_csv {
                std::fs::write(dir.join("summary.csv"), table).context("cannot write summary.csv")?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Verify) => {
            eprintln!("verification failed");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
