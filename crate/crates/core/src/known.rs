//! Delayed-feedback reduction with a known stationary distribution.
//!
//! The oracle works on the fixed arm set `{g_π(θ_i)}`. Each round it proposes
//! a bank index `i`; the learner plays the greedy action for `θ_i` in the
//! realized context, and the oracle only learns about that round `τ` rounds
//! later, by which time the chain has mixed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::delay::DelayBuffer;
use crate::env::FiniteMarkovEnv;
use crate::episode::{Episode, RunOutput};
use crate::error::{Error, Result};
use crate::linalg::{dot, sub};
use crate::oracle::{bias_level, FixedArmUcb, LinearBanditOracle, Radius, UcbOracle};
use crate::surrogate::{exact_surrogate, surrogate_under, GreedyTable, ParameterBank, SurrogateKind, SurrogateSet};
use crate::trace::ALGO_KNOWN;

/// Feedback delay `⌈c_τ ln T / (1 − β)⌉`, at least 1.
pub fn compute_tau(horizon: usize, beta: f64, c_tau: f64) -> usize {
    let raw = c_tau * (horizon as f64).ln() / (1.0 - beta);
    (raw.ceil() as usize).max(1)
}

/// Exploration radius of the UCB oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RadiusMode {
    /// Self-normalized radius with noise proxy √17 and bias inflation `ε_T`.
    SelfNormalized,
    /// Constant multiplier.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcbParams {
    pub lambda: f64,
    pub radius: RadiusMode,
    pub bonus_cap: Option<f64>,
    pub delta: f64,
}

impl Default for UcbParams {
    fn default() -> Self {
        UcbParams {
            lambda: 100.0,
            radius: RadiusMode::SelfNormalized,
            bonus_cap: Some(2.5),
            delta: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownParams {
    pub horizon: usize,
    pub c_tau: f64,
    /// Require `c_τ > 1`, as the regret analysis does.
    pub theory_mode: bool,
    pub ucb: UcbParams,
}

impl KnownParams {
    pub fn tau(&self, env: &FiniteMarkovEnv) -> usize {
        compute_tau(self.horizon, env.beta(), self.c_tau)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::param("run.horizon", "must be at least 2"));
        }
        if !(self.c_tau > 0.0 && self.c_tau.is_finite()) {
            return Err(Error::param("oracle.c_tau", "must be positive"));
        }
        if self.theory_mode && self.c_tau <= 1.0 {
            return Err(Error::param("oracle.c_tau", "theory mode requires c_tau > 1"));
        }
        Ok(())
    }

    /// The UCB oracle over `arms` configured for a run on `env`.
    pub fn oracle(&self, env: &FiniteMarkovEnv, arms: Vec<Vec<f64>>) -> Result<FixedArmUcb> {
        let radius = match self.ucb.radius {
            RadiusMode::Fixed(alpha) => Radius::Fixed { alpha },
            RadiusMode::SelfNormalized => Radius::SelfNormalized {
                delta: self.ucb.delta,
                noise_proxy: Radius::REDUCTION_NOISE_PROXY,
                bias_level: bias_level(self.horizon, self.c_tau, env.c_mix()),
                horizon: self.horizon,
            },
        };
        let inner = UcbOracle::new(env.dim(), self.ucb.lambda, radius, self.ucb.bonus_cap)?;
        FixedArmUcb::new(inner, arms)
    }
}

/// Runs the known-distribution reduction with its UCB oracle.
pub fn run_known(
    env: &FiniteMarkovEnv,
    bank: &ParameterBank,
    params: &KnownParams,
    run_id: usize,
    seed: u64,
) -> Result<RunOutput> {
    params.validate()?;
    let surrogates = exact_surrogate(env, bank);
    let oracle = params.oracle(env, surrogates.arms.clone())?;
    let table = GreedyTable::new(env, bank);
    run_known_with(env, &table, &surrogates, oracle, params.tau(env), params.horizon, run_id, seed)
}

/// The reduction loop for an arbitrary oracle over `surrogates`.
#[allow(clippy::too_many_arguments)]
pub fn run_known_with<O: LinearBanditOracle>(
    env: &FiniteMarkovEnv,
    table: &GreedyTable,
    surrogates: &SurrogateSet,
    mut oracle: O,
    tau: usize,
    horizon: usize,
    run_id: usize,
    seed: u64,
) -> Result<RunOutput> {
    if surrogates.kind != SurrogateKind::ExactStationary {
        return Err(Error::param("surrogates", "the known-distribution reduction needs exact surrogates"));
    }
    if horizon <= tau {
        return Err(Error::HorizonTooShort {
            horizon,
            reason: format!("no oracle rounds after the warm-start of {tau} rounds"),
        });
    }
    let n_bank = surrogates.arms.len();
    let mut episode = Episode::new(env, run_id, ALGO_KNOWN, seed, horizon);
    // (bank index, reward, chosen by the oracle)
    let mut buffer: DelayBuffer<(usize, f64, bool)> = DelayBuffer::new(tau);
    for t in 1..=horizon {
        let warm = t <= tau;
        let i = if warm { episode.policy.gen_range(0..n_bank) } else { oracle.select() };
        let k = table.action_index(i, episode.state());
        let reward = episode.play(k, i);
        if let Some((j, r, solicited)) = buffer.push((i, reward, !warm)) {
            if solicited {
                oracle.observe(j, r);
            } else {
                oracle.observe_unsolicited(j, r);
            }
        }
        debug_assert_eq!(oracle.observations(), t.saturating_sub(tau));
    }
    Ok(episode.finish())
}

/// Exact conditional bias `⟨g_ρ(θ) − g_π(θ), θ*⟩` with `ρ = P^τ(s0, ·)`.
pub fn bias_oracle(env: &FiniteMarkovEnv, tau: usize, theta: &[f64], s0: usize) -> Result<f64> {
    if s0 >= env.n_states() {
        return Err(Error::param("s0", format!("state {s0} out of range")));
    }
    let rho = env.kernel_power_row(s0, tau);
    bias_under(env, &rho, theta)
}

/// `⟨g_ρ(θ) − g_π(θ), θ*⟩` for an arbitrary state law `ρ`.
pub fn bias_under(env: &FiniteMarkovEnv, rho: &[f64], theta: &[f64]) -> Result<f64> {
    let g_rho = surrogate_under(env, rho, theta)?;
    let g_pi = surrogate_under(env, env.stationary(), theta)?;
    Ok(dot(&sub(&g_rho, &g_pi), env.theta_star()))
}

/// Regret the oracle itself incurs on the exact surrogate instance when it
/// makes the decisions in `choices`: `Σ_t max_i ⟨g_π(θ_i), θ*⟩ − ⟨g_π(θ_t), θ*⟩`.
pub fn surrogate_regret(env: &FiniteMarkovEnv, surrogates: &SurrogateSet, choices: &[usize]) -> Vec<f64> {
    let values: Vec<f64> = surrogates.arms.iter().map(|g| env.mean_reward(g)).collect();
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = 0.0;
    choices
        .iter()
        .map(|&i| {
            acc += best - values[i];
            acc
        })
        .collect()
}
