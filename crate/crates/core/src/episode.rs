//! Round bookkeeping shared by every algorithm.
//!
//! All algorithms draw contexts and reward noise from the same per-seed
//! streams through [`Episode`], so runs with equal seeds are paired: they see
//! the same context trajectory and the same noise sequence.

use rand_chacha::ChaCha8Rng;

use crate::env::{ChainState, FiniteMarkovEnv};
use crate::rng::{stream, Stream};
use crate::trace::{RegretTrace, TrajectoryHasher};

/// Everything a run produces. `choices` holds bank indices for the
/// reductions and action indices for the baseline.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: RegretTrace,
    pub states: Vec<usize>,
    pub choices: Vec<usize>,
    pub rewards: Vec<f64>,
}

pub(crate) struct Episode<'a> {
    env: &'a FiniteMarkovEnv,
    chain: ChainState,
    noise: ChaCha8Rng,
    pub(crate) policy: ChaCha8Rng,
    hasher: TrajectoryHasher,
    optimal: Vec<f64>,
    out: RunOutput,
}

impl<'a> Episode<'a> {
    pub(crate) fn new(env: &'a FiniteMarkovEnv, run_id: usize, algo: &str, seed: u64, horizon: usize) -> Self {
        Episode {
            env,
            chain: ChainState::stationary_start(env, seed),
            noise: stream(seed, Stream::Noise),
            policy: stream(seed, Stream::Policy),
            hasher: TrajectoryHasher::default(),
            optimal: (0..env.n_states()).map(|s| env.optimal_value(s)).collect(),
            out: RunOutput {
                trace: RegretTrace::new(run_id, algo, seed, horizon),
                states: Vec::with_capacity(horizon),
                choices: Vec::with_capacity(horizon),
                rewards: Vec::with_capacity(horizon),
            },
        }
    }

    /// Current context state.
    pub(crate) fn state(&self) -> usize {
        self.chain.current()
    }

    /// Plays action `action_index` of the current context, records regret,
    /// advances the chain, and returns the observed reward.
    pub(crate) fn play(&mut self, action_index: usize, choice: usize) -> f64 {
        let s = self.chain.current();
        let action = &self.env.actions(s)[action_index];
        let reward = self.env.reward(action, &mut self.noise);
        let inst = self.optimal[s] - self.env.mean_reward(action);
        let h = self.hasher.push(s);
        self.out.trace.push(inst, h);
        self.out.states.push(s);
        self.out.choices.push(choice);
        self.out.rewards.push(reward);
        self.env.step(&mut self.chain);
        reward
    }

    pub(crate) fn finish(self) -> RunOutput {
        self.out
    }
}
