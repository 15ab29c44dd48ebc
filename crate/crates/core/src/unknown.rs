//! Epoch-doubling reduction for an unknown stationary distribution.
//!
//! Epoch `m` spans rounds `t^(m)+1 ..= t^(m+1)` with
//! `t^(m) = (m−1)τ + 2^{m−1} − 1`: `τ` warm-start rounds followed by
//! `2^{m−1}` oracle rounds. A fresh phased-elimination oracle runs on the
//! empirical surrogate arms `{g^(m)(θ_i)}` with misspecification allowance
//! `ε_m`, and feedback is delayed by `τ` exactly as in the known case. At the
//! end of each epoch the surrogate map is re-estimated from the visit counts
//! of every round so far.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::delay::DelayBuffer;
use crate::env::FiniteMarkovEnv;
use crate::episode::{Episode, RunOutput};
use crate::error::{Error, Result};
use crate::known::compute_tau;
use crate::linalg::{dot, sub};
use crate::oracle::{LinearBanditOracle, PeConfig, PeOracle};
use crate::surrogate::{exact_surrogate, GreedyTable, ParameterBank, SurrogateKind, SurrogateSet, VisitCounts};
use crate::trace::ALGO_UNKNOWN;

/// Epoch boundaries for a horizon and delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSchedule {
    pub horizon: usize,
    pub tau: usize,
    /// `t^(1), …, t^(M+1)`; the last entry may exceed the horizon.
    pub starts: Vec<usize>,
}

impl EpochSchedule {
    pub fn n_epochs(&self) -> usize {
        self.starts.len() - 1
    }

    /// `t^(m)`, 1-based epoch index.
    pub fn start(&self, m: usize) -> usize {
        self.starts[m - 1]
    }

    /// `T_m = τ + 2^{m−1}`.
    pub fn length(&self, m: usize) -> usize {
        self.tau + (1usize << (m - 1))
    }

    /// `H_m = 2^{m−1}` oracle rounds.
    pub fn oracle_budget(&self, m: usize) -> usize {
        1usize << (m - 1)
    }

    /// Last round of epoch `m`, truncated at the horizon.
    pub fn end(&self, m: usize) -> usize {
        self.starts[m].min(self.horizon)
    }
}

/// `t^(m) = (m−1)τ + 2^{m−1} − 1`.
pub fn epoch_start(m: usize, tau: usize) -> usize {
    (m - 1) * tau + (1usize << (m - 1)) - 1
}

pub fn build_schedule(horizon: usize, tau: usize) -> Result<EpochSchedule> {
    if horizon <= tau + 1 {
        return Err(Error::HorizonTooShort {
            horizon,
            reason: format!("one epoch needs more than τ + 1 = {} rounds", tau + 1),
        });
    }
    let mut starts = vec![0];
    let mut m = 1;
    while *starts.last().expect("non-empty") < horizon {
        m += 1;
        if m > 62 {
            return Err(Error::param("horizon", "too many epochs"));
        }
        starts.push(epoch_start(m, tau));
    }
    Ok(EpochSchedule { horizon, tau, starts })
}

/// Constants of the misspecification bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisspecConstants {
    pub c_mix: f64,
    pub beta: f64,
    pub delta: f64,
    pub n_epochs: usize,
    pub n_bank: usize,
    pub horizon: usize,
}

/// Factor on the non-stationarity term `C_mix / ((1 − β) t)`.
pub const BIAS_TERM_FACTOR: f64 = 2.0;

/// `√(36 log(4C)/((1−β)t) · log(2 M_e M_b / δ)) + 2C/((1−β)t) + 2/T`, unclipped.
pub fn misspec_bound(t_m: usize, c: &MisspecConstants) -> f64 {
    let t = t_m.max(1) as f64;
    let scale = (1.0 - c.beta) * t;
    let log_union = (2.0 * c.n_epochs as f64 * c.n_bank as f64 / c.delta).ln();
    let fluctuation = (36.0 * (4.0 * c.c_mix).ln() / scale * log_union).sqrt();
    fluctuation + BIAS_TERM_FACTOR * c.c_mix / scale + 2.0 / c.horizon as f64
}

/// Misspecification allowance clipped to `[2/T, 2]`.
pub fn epsilon_m(t_m: usize, c: &MisspecConstants) -> f64 {
    misspec_bound(t_m, c).clamp(2.0 / c.horizon as f64, 2.0)
}

/// `ε_1 = 1`, then `ε_m = epsilon_m(t^(m))`.
pub fn misspec_schedule(schedule: &EpochSchedule, c: &MisspecConstants) -> Vec<f64> {
    (1..=schedule.n_epochs())
        .map(|m| if m == 1 { 1.0 } else { epsilon_m(schedule.start(m), c) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnknownParams {
    pub horizon: usize,
    pub c_tau: f64,
    /// Confidence of each phased-elimination instance.
    pub pe_delta: f64,
    /// Confidence of the misspecification bound.
    pub delta: f64,
    /// Upper bounds replacing the environment's `C_mix` and `β` in `ε_m`.
    pub c_mix_bound: Option<f64>,
    pub beta_bound: Option<f64>,
}

impl Default for UnknownParams {
    fn default() -> Self {
        UnknownParams {
            horizon: 20_000,
            c_tau: 1.0,
            pe_delta: 0.05,
            delta: 0.05,
            c_mix_bound: None,
            beta_bound: None,
        }
    }
}

impl UnknownParams {
    pub fn tau(&self, env: &FiniteMarkovEnv) -> usize {
        compute_tau(self.horizon, env.beta(), self.c_tau)
    }

    pub fn constants(&self, env: &FiniteMarkovEnv, schedule: &EpochSchedule, n_bank: usize) -> MisspecConstants {
        MisspecConstants {
            c_mix: self.c_mix_bound.unwrap_or(env.c_mix()),
            beta: self.beta_bound.unwrap_or(env.beta()),
            delta: self.delta,
            n_epochs: schedule.n_epochs(),
            n_bank,
            horizon: self.horizon,
        }
    }
}

/// Per-epoch record of what the oracle was given and how it ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochDiagnostics {
    pub epoch: usize,
    pub start: usize,
    pub end: usize,
    pub epsilon: f64,
    /// `max_{i,j} |⟨g_π(θ_i) − g^(m)(θ_i), θ_j⟩|` over the bank.
    pub max_misspecification: f64,
    pub samples: usize,
    pub active_arms: usize,
    pub phase: u32,
}

#[derive(Debug, Clone)]
pub struct UnknownOutput {
    pub run: RunOutput,
    pub epochs: Vec<EpochDiagnostics>,
}

/// What the epoch loop needs from an oracle beyond the bandit interface.
pub trait EpochOracle: LinearBanditOracle {
    fn active_arms(&self) -> usize;
    fn phase(&self) -> u32;
}

impl EpochOracle for PeOracle {
    fn active_arms(&self) -> usize {
        self.active().len()
    }
    fn phase(&self) -> u32 {
        PeOracle::phase(self)
    }
}

/// Largest surrogate error over bank pairs.
pub fn max_misspecification(exact: &SurrogateSet, estimate: &SurrogateSet, bank: &ParameterBank) -> f64 {
    let mut worst: f64 = 0.0;
    for (g, h) in exact.arms.iter().zip(&estimate.arms) {
        let diff = sub(g, h);
        for theta in bank.vectors() {
            worst = worst.max(dot(&diff, theta).abs());
        }
    }
    worst
}

pub fn run_unknown(
    env: &FiniteMarkovEnv,
    bank: &ParameterBank,
    params: &UnknownParams,
    run_id: usize,
    seed: u64,
) -> Result<UnknownOutput> {
    let pe_delta = params.pe_delta;
    let n_bank = bank.len();
    run_unknown_with(env, bank, params, run_id, seed, |arms, epsilon, budget| {
        PeOracle::new(
            arms,
            PeConfig {
                epsilon,
                delta: pe_delta,
                horizon: budget,
                n_candidates: n_bank,
            },
        )
    })
}

/// The epoch loop with a caller-supplied oracle constructor
/// `(arms, ε_m, oracle budget) -> oracle`.
pub fn run_unknown_with<O, F>(
    env: &FiniteMarkovEnv,
    bank: &ParameterBank,
    params: &UnknownParams,
    run_id: usize,
    seed: u64,
    mut make_oracle: F,
) -> Result<UnknownOutput>
where
    O: EpochOracle,
    F: FnMut(Vec<Vec<f64>>, f64, usize) -> Result<O>,
{
    if !(params.c_tau > 0.0) {
        return Err(Error::param("oracle.c_tau", "must be positive"));
    }
    let horizon = params.horizon;
    let tau = params.tau(env);
    let schedule = build_schedule(horizon, tau)?;
    let constants = params.constants(env, &schedule, bank.len());
    let table = GreedyTable::new(env, bank);
    let exact = exact_surrogate(env, bank);
    let mut episode = Episode::new(env, run_id, ALGO_UNKNOWN, seed, horizon);
    let n_bank = bank.len();

    // g^(1): for each θ_i, its greedy action in a uniformly drawn state.
    let mut surrogates = SurrogateSet {
        arms: (0..n_bank)
            .map(|i| {
                let s = episode.policy.gen_range(0..env.n_states());
                env.actions(s)[table.action_index(i, s)].clone()
            })
            .collect(),
        kind: SurrogateKind::EmpiricalEpoch(1),
        sample_count: 0,
    };
    let mut epsilon = 1.0;
    let mut counts = VisitCounts::new(env.n_states());
    let mut epochs = Vec::with_capacity(schedule.n_epochs());

    for m in 1..=schedule.n_epochs() {
        let start = schedule.start(m);
        let end = schedule.end(m);
        let warm_end = start + tau;
        let budget = schedule.oracle_budget(m).min(end.saturating_sub(warm_end)).max(1);
        let mut oracle = make_oracle(surrogates.arms.clone(), epsilon, budget)?;
        let mut buffer: DelayBuffer<(usize, f64, bool)> = DelayBuffer::new(tau);
        for t in start + 1..=end {
            let warm = t <= warm_end;
            let i = if warm { episode.policy.gen_range(0..n_bank) } else { oracle.select() };
            let s = episode.state();
            counts.record(s);
            let reward = episode.play(table.action_index(i, s), i);
            if let Some((j, r, solicited)) = buffer.push((i, reward, !warm)) {
                if solicited {
                    oracle.observe(j, r);
                } else {
                    oracle.observe_unsolicited(j, r);
                }
            }
        }
        // Pairs still in flight belong to this epoch's oracle only.
        buffer.clear();
        epochs.push(EpochDiagnostics {
            epoch: m,
            start,
            end,
            epsilon,
            max_misspecification: max_misspecification(&exact, &surrogates, bank),
            samples: surrogates.sample_count,
            active_arms: oracle.active_arms(),
            phase: oracle.phase(),
        });
        if end >= horizon {
            break;
        }
        surrogates = counts.surrogate(env, &table, m + 1);
        epsilon = epsilon_m(end, &constants);
    }
    Ok(UnknownOutput {
        run: episode.finish(),
        epochs,
    })
}
