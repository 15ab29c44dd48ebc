//! Regret traces, their CSV form, and cross-run aggregation.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = ["run_id", "algo", "t", "inst_regret", "cum_regret", "seed", "traj_hash"];

pub const ALGO_KNOWN: &str = "alg1-known";
pub const ALGO_UNKNOWN: &str = "alg2-unknown";
pub const ALGO_BASELINE: &str = "baseline-linucb";

/// FNV-1a over the visited states; one value per round, covering the prefix.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryHasher(u64);

impl Default for TrajectoryHasher {
    fn default() -> Self {
        TrajectoryHasher(0xcbf2_9ce4_8422_2325)
    }
}

impl TrajectoryHasher {
    pub fn push(&mut self, state: usize) -> u64 {
        for byte in (state as u64).to_le_bytes() {
            self.0 ^= byte as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self.0
    }
}

/// Per-round pseudo-regret of one run of one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub run_id: usize,
    pub algo: String,
    pub seed: u64,
    pub inst: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub traj_hash: Vec<u64>,
}

impl RegretTrace {
    pub fn new(run_id: usize, algo: impl Into<String>, seed: u64, horizon: usize) -> Self {
        RegretTrace {
            run_id,
            algo: algo.into(),
            seed,
            inst: Vec::with_capacity(horizon),
            cumulative: Vec::with_capacity(horizon),
            traj_hash: Vec::with_capacity(horizon),
        }
    }

    pub fn push(&mut self, inst_regret: f64, traj_hash: u64) {
        // Regret against the exact maximum is non-negative; clamp rounding noise.
        let inst = inst_regret.max(0.0);
        let prev = self.cumulative.last().copied().unwrap_or(0.0);
        self.inst.push(inst);
        self.cumulative.push(prev + inst);
        self.traj_hash.push(traj_hash);
    }

    pub fn horizon(&self) -> usize {
        self.inst.len()
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Cumulative regret at round `t` (1-based).
    pub fn at(&self, t: usize) -> f64 {
        self.cumulative[t - 1]
    }
}

/// About `count` log-spaced rounds in `1..=horizon`, always including `horizon`.
pub fn log_checkpoints(horizon: usize, count: usize) -> Vec<usize> {
    if horizon == 0 {
        return Vec::new();
    }
    let count = count.max(1);
    let mut out: Vec<usize> = (0..count)
        .map(|i| {
            let frac = if count == 1 { 1.0 } else { i as f64 / (count - 1) as f64 };
            ((horizon as f64).powf(frac).round() as usize).clamp(1, horizon)
        })
        .collect();
    out.push(horizon);
    out.sort_unstable();
    out.dedup();
    out
}

/// Sample mean and standard error `s / √n` (zero for a single value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Mean and standard error of cumulative regret per algorithm and checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_digest: String,
    pub algos: Vec<String>,
    pub checkpoints: Vec<usize>,
    pub mean: BTreeMap<String, Vec<f64>>,
    pub stderr: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub runs: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<serde_json::Value>,
}

impl Summary {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let summary: Summary = serde_json::from_str(text)?;
        for algo in &summary.algos {
            for (name, table) in [("mean", &summary.mean), ("stderr", &summary.stderr)] {
                match table.get(algo) {
                    Some(v) if v.len() == summary.checkpoints.len() => {}
                    _ => {
                        return Err(Error::MalformedTrace(format!(
                            "summary `{name}` has no column of the right length for `{algo}`"
                        )))
                    }
                }
            }
        }
        Ok(summary)
    }
}

fn algo_order(traces: impl Iterator<Item = String>) -> Vec<String> {
    let mut algos: Vec<String> = Vec::new();
    for a in traces {
        if !algos.contains(&a) {
            algos.push(a);
        }
    }
    algos
}

/// Aggregates complete in-memory traces at the given checkpoints.
pub fn aggregate(traces: &[RegretTrace], checkpoints: &[usize], config_digest: &str) -> Result<Summary> {
    let first = traces.first().ok_or_else(|| Error::param("traces", "nothing to aggregate"))?;
    let horizon = first.horizon();
    if let Some(t) = traces.iter().find(|t| t.horizon() != horizon) {
        return Err(Error::MixedHorizons(horizon, t.horizon()));
    }
    if let Some(&c) = checkpoints.iter().find(|&&c| c == 0 || c > horizon) {
        return Err(Error::param("checkpoints", format!("round {c} outside 1..={horizon}")));
    }
    let algos = algo_order(traces.iter().map(|t| t.algo.clone()));
    let mut mean = BTreeMap::new();
    let mut stderr = BTreeMap::new();
    let mut runs = BTreeMap::new();
    for algo in &algos {
        let group: Vec<&RegretTrace> = traces.iter().filter(|t| &t.algo == algo).collect();
        let (m, s): (Vec<f64>, Vec<f64>) = checkpoints
            .iter()
            .map(|&c| mean_stderr(&group.iter().map(|t| t.at(c)).collect::<Vec<_>>()))
            .unzip();
        mean.insert(algo.clone(), m);
        stderr.insert(algo.clone(), s);
        runs.insert(algo.clone(), group.len());
    }
    Ok(Summary {
        config_digest: config_digest.to_string(),
        algos,
        checkpoints: checkpoints.to_vec(),
        mean,
        stderr,
        runs,
        epochs: None,
    })
}

/// Which rounds of a trace go to CSV.
#[derive(Debug, Clone)]
pub enum RowSelection<'a> {
    Full,
    Checkpoints(&'a [usize]),
}

pub fn write_csv<W: Write>(out: W, traces: &[RegretTrace], rows: RowSelection<'_>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for trace in traces {
        let mut emit = |t: usize| -> Result<()> {
            w.write_record([
                trace.run_id.to_string(),
                trace.algo.clone(),
                t.to_string(),
                trace.inst[t - 1].to_string(),
                trace.cumulative[t - 1].to_string(),
                trace.seed.to_string(),
                format!("{:016x}", trace.traj_hash[t - 1]),
            ])?;
            Ok(())
        };
        match rows {
            RowSelection::Full => (1..=trace.horizon()).try_for_each(&mut emit)?,
            RowSelection::Checkpoints(cps) => cps
                .iter()
                .copied()
                .filter(|&t| t >= 1 && t <= trace.horizon())
                .try_for_each(&mut emit)?,
        }
    }
    w.flush()?;
    Ok(())
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub run_id: usize,
    pub algo: String,
    pub t: usize,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub seed: u64,
    pub traj_hash: String,
}

/// Rounds of one (algo, run) pair as read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrace {
    pub run_id: usize,
    pub algo: String,
    pub seed: u64,
    pub rounds: Vec<usize>,
    pub cumulative: Vec<f64>,
    pub traj_hash: Vec<String>,
}

/// Parses a trace CSV; checks the exact header, row sanity, and per-trace
/// monotonicity of rounds and cumulative regret.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<SampledTrace>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::MalformedTrace(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut traces: Vec<SampledTrace> = Vec::new();
    let mut index: BTreeMap<(String, usize), usize> = BTreeMap::new();
    for (line, record) in reader.deserialize::<TraceRow>().enumerate() {
        let row = record?;
        if row.t == 0 || !row.inst_regret.is_finite() || !row.cum_regret.is_finite() {
            return Err(Error::MalformedTrace(format!("row {}: invalid values", line + 2)));
        }
        let slot = *index.entry((row.algo.clone(), row.run_id)).or_insert_with(|| {
            traces.push(SampledTrace {
                run_id: row.run_id,
                algo: row.algo.clone(),
                seed: row.seed,
                rounds: Vec::new(),
                cumulative: Vec::new(),
                traj_hash: Vec::new(),
            });
            traces.len() - 1
        });
        let trace = &mut traces[slot];
        if let (Some(&t), Some(&c)) = (trace.rounds.last(), trace.cumulative.last()) {
            if row.t <= t || row.cum_regret < c - 1e-9 {
                return Err(Error::MalformedTrace(format!(
                    "row {}: rounds or cumulative regret not increasing",
                    line + 2
                )));
            }
        }
        if row.seed != trace.seed {
            return Err(Error::MalformedTrace(format!("row {}: seed changes within a run", line + 2)));
        }
        trace.rounds.push(row.t);
        trace.cumulative.push(row.cum_regret);
        trace.traj_hash.push(row.traj_hash);
    }
    Ok(traces)
}

/// Aggregates traces read back from CSV at the rounds every trace shares.
pub fn aggregate_sampled(traces: &[SampledTrace], config_digest: &str) -> Result<Summary> {
    let first = traces.first().ok_or_else(|| Error::param("traces", "nothing to aggregate"))?;
    let last = |t: &SampledTrace| t.rounds.last().copied().unwrap_or(0);
    if let Some(t) = traces.iter().find(|t| last(t) != last(first)) {
        return Err(Error::MixedHorizons(last(first), last(t)));
    }
    let mut common: Vec<usize> = first.rounds.clone();
    for t in &traces[1..] {
        common.retain(|r| t.rounds.binary_search(r).is_ok());
    }
    let algos = algo_order(traces.iter().map(|t| t.algo.clone()));
    let mut mean = BTreeMap::new();
    let mut stderr = BTreeMap::new();
    let mut runs = BTreeMap::new();
    for algo in &algos {
        let group: Vec<&SampledTrace> = traces.iter().filter(|t| &t.algo == algo).collect();
        let (m, s): (Vec<f64>, Vec<f64>) = common
            .iter()
            .map(|r| {
                let vals: Vec<f64> = group
                    .iter()
                    .map(|t| t.cumulative[t.rounds.binary_search(r).expect("common round")])
                    .collect();
                mean_stderr(&vals)
            })
            .unzip();
        mean.insert(algo.clone(), m);
        stderr.insert(algo.clone(), s);
        runs.insert(algo.clone(), group.len());
    }
    Ok(Summary {
        config_digest: config_digest.to_string(),
        algos,
        checkpoints: common,
        mean,
        stderr,
        runs,
        epochs: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(algo: &str, run: usize, inst: &[f64]) -> RegretTrace {
        let mut t = RegretTrace::new(run, algo, 7 + run as u64, inst.len());
        let mut h = TrajectoryHasher::default();
        for (i, v) in inst.iter().enumerate() {
            t.push(*v, h.push(i % 3));
        }
        t
    }

    #[test]
    fn mean_and_stderr_of_two_runs() {
        let (m, s) = mean_stderr(&[10.0, 14.0]);
        assert_eq!(m, 12.0);
        assert!((s - 2.0).abs() < 1e-12);
        assert_eq!(mean_stderr(&[5.0]), (5.0, 0.0));
    }

    #[test]
    fn single_trace_has_zero_stderr() {
        let t = trace("a", 0, &[0.5, 0.25, 0.0, 1.0]);
        let s = aggregate(&[t], &[1, 2, 4], "x").unwrap();
        assert_eq!(s.mean["a"], vec![0.5, 0.75, 1.75]);
        assert_eq!(s.stderr["a"], vec![0.0; 3]);
    }

    #[test]
    fn mixed_horizons_rejected() {
        let a = trace("a", 0, &[0.1, 0.2]);
        let b = trace("a", 1, &[0.1, 0.2, 0.3]);
        assert!(matches!(aggregate(&[a, b], &[1], ""), Err(Error::MixedHorizons(2, 3))));
    }

    #[test]
    fn checkpoints_are_log_spaced() {
        let cps = log_checkpoints(50_000, 50);
        assert_eq!(cps.first(), Some(&1));
        assert_eq!(cps.last(), Some(&50_000));
        assert!(cps.windows(2).all(|w| w[0] < w[1]));
        assert!(cps.len() <= 51 && cps.len() >= 40);
        assert_eq!(log_checkpoints(1, 50), vec![1]);
    }

    #[test]
    fn csv_round_trip_aggregates_identically() {
        let traces = vec![
            trace("x", 0, &[0.5, 0.1, 0.2, 0.0]),
            trace("x", 1, &[0.3, 0.3, 0.1, 0.1]),
            trace("y", 0, &[1.0, 1.0, 0.5, 0.5]),
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &traces, RowSelection::Full).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("run_id,algo,t,inst_regret,cum_regret,seed,traj_hash\n"));
        let back = read_csv(buf.as_slice()).unwrap();
        let a = aggregate(&traces, &[1, 2, 3, 4], "d").unwrap();
        let b = aggregate_sampled(&back, "d").unwrap();
        assert_eq!(a.checkpoints, b.checkpoints);
        for algo in ["x", "y"] {
            for (p, q) in a.mean[algo].iter().zip(&b.mean[algo]) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn csv_rejects_bad_header_and_decreasing_regret() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
        let text = "run_id,algo,t,inst_regret,cum_regret,seed,traj_hash\n0,x,1,0.5,0.5,1,00\n0,x,2,0.1,0.2,1,00\n";
        assert!(read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn summary_json_schema() {
        let s = aggregate(&[trace("x", 0, &[0.5, 0.5])], &[1, 2], "abc").unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        for key in ["config_digest", "algos", "checkpoints", "mean", "stderr"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(Summary::from_json(&s.to_json().unwrap()).unwrap(), s);
    }
}
