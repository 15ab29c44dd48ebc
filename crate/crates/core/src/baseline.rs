//! Contextual LinUCB acting directly on the realized context, with a fixed
//! exploration multiplier and immediate feedback.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::FiniteMarkovEnv;
use crate::episode::{Episode, RunOutput};
use crate::error::Result;
use crate::oracle::{Radius, UcbOracle};
use crate::trace::ALGO_BASELINE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub lambda: f64,
    pub alpha: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams { lambda: 1e-2, alpha: 2.0 }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineState {
    ucb: UcbOracle,
}

impl BaselineState {
    pub fn new(dim: usize, params: BaselineParams) -> Result<Self> {
        Ok(BaselineState {
            ucb: UcbOracle::new(dim, params.lambda, Radius::Fixed { alpha: params.alpha }, None)?,
        })
    }

    pub fn oracle(&self) -> &UcbOracle {
        &self.ucb
    }

    /// Picks `argmax_k ⟨a_k, θ̂⟩ + α ‖a_k‖_{V⁻¹}` in `context`, draws its
    /// reward and updates at once. Returns the action index and reward.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        env: &FiniteMarkovEnv,
        context: &[Vec<f64>],
        rng: &mut R,
    ) -> Result<(usize, f64)> {
        let k = self.ucb.select(context)?;
        let reward = env.reward(&context[k], rng);
        self.ucb.update(&context[k], reward);
        Ok((k, reward))
    }

    pub fn choose(&self, context: &[Vec<f64>]) -> Result<usize> {
        self.ucb.select(context)
    }

    pub fn learn(&mut self, action: &[f64], reward: f64) {
        self.ucb.update(action, reward);
    }
}

pub fn run_baseline(
    env: &FiniteMarkovEnv,
    params: BaselineParams,
    horizon: usize,
    run_id: usize,
    seed: u64,
) -> Result<RunOutput> {
    let mut state = BaselineState::new(env.dim(), params)?;
    let mut episode = Episode::new(env, run_id, ALGO_BASELINE, seed, horizon);
    for _ in 0..horizon {
        let s = episode.state();
        let k = state.choose(env.actions(s))?;
        let reward = episode.play(k, k);
        state.learn(&env.actions(s)[k], reward);
    }
    Ok(episode.finish())
}
