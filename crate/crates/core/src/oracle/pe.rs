//! Phased elimination with G-optimal exploration, robust to a known
//! misspecification level `ε`.
//!
//! Phase `ℓ` plays the rounded design allocation of
//! `n_ℓ = ⌈2d 4^ℓ log(2M ℓ(ℓ+1)/δ)⌉` pulls, fits least squares on the
//! phase's own observations, and drops every arm whose estimated gap exceeds
//! `2·2^{−ℓ} + 2ε√d`.
//!
//! Feedback may arrive late. Each selection is tagged with the phase that
//! issued it; a phase closes once all of its scheduled pulls have been
//! observed. While waiting, the oracle keeps cycling the same allocation, and
//! observations of stale selections are discarded.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::design::g_optimal_design;
use super::LinearBanditOracle;
use crate::error::{Error, Result};

const WEIGHT_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeConfig {
    /// Misspecification level `ε`.
    pub epsilon: f64,
    /// Confidence level `δ`.
    pub delta: f64,
    /// Total number of selections this instance will be asked for.
    pub horizon: usize,
    /// Number of candidate arms entering the phase-length log term.
    pub n_candidates: usize,
}

#[derive(Debug, Clone)]
pub struct PeOracle {
    arms: Vec<Vec<f64>>,
    dim: usize,
    config: PeConfig,
    phase: u32,
    active: Vec<usize>,
    design_weights: Vec<f64>,
    // scheduled pulls per active arm, and pulls issued in the current cycle
    allocation: Vec<usize>,
    issued: Vec<usize>,
    phase_budget: usize,
    phase_observed: usize,
    pending: VecDeque<u32>,
    selected: usize,
    observed: usize,
    gram: DMatrix<f64>,
    moment: DVector<f64>,
    estimates: Vec<f64>,
}

impl PeOracle {
    pub fn new(arms: Vec<Vec<f64>>, config: PeConfig) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::EmptyActions);
        }
        let dim = arms[0].len();
        if dim == 0 || arms.iter().any(|a| a.len() != dim) {
            return Err(Error::param("arms", "arms must share a positive dimension"));
        }
        if !(config.epsilon >= 0.0 && config.epsilon.is_finite()) {
            return Err(Error::param("epsilon", "must be finite and non-negative"));
        }
        if !(config.delta > 0.0 && config.delta < 1.0) {
            return Err(Error::param("delta", format!("{} is not in (0, 1)", config.delta)));
        }
        let n = arms.len();
        let mut oracle = PeOracle {
            arms,
            dim,
            config,
            phase: 1,
            active: (0..n).collect(),
            design_weights: Vec::new(),
            allocation: Vec::new(),
            issued: Vec::new(),
            phase_budget: 0,
            phase_observed: 0,
            pending: VecDeque::new(),
            selected: 0,
            observed: 0,
            gram: DMatrix::zeros(dim, dim),
            moment: DVector::zeros(dim),
            estimates: vec![0.0; n],
        };
        oracle.start_phase();
        Ok(oracle)
    }

    pub fn phase(&self) -> u32 {
        self.phase
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Design weights aligned with [`PeOracle::active`].
    pub fn design_weights(&self) -> &[f64] {
        &self.design_weights
    }

    pub fn phase_budget(&self) -> usize {
        self.phase_budget
    }

    /// Estimated rewards from the last completed phase, indexed by arm.
    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon
    }

    /// Elimination threshold of the current phase.
    pub fn threshold(&self) -> f64 {
        2.0 * 0.5f64.powi(self.phase as i32) + 2.0 * self.config.epsilon * (self.dim as f64).sqrt()
    }

    /// Unrounded phase length `⌈2d 4^ℓ log(2M ℓ(ℓ+1)/δ)⌉`.
    pub fn nominal_phase_length(&self) -> usize {
        let l = self.phase as f64;
        let m = self.config.n_candidates.max(1) as f64;
        let log_term = (2.0 * m * l * (l + 1.0) / self.config.delta).ln();
        (2.0 * self.dim as f64 * 4f64.powf(l) * log_term).ceil() as usize
    }

    fn start_phase(&mut self) {
        let active_arms: Vec<&[f64]> = self.active.iter().map(|&i| self.arms[i].as_slice()).collect();
        let design = g_optimal_design(&active_arms);
        let n_l = self.nominal_phase_length();
        self.design_weights = design.weights;
        self.allocation = self
            .design_weights
            .iter()
            .map(|w| if *w > WEIGHT_FLOOR { (w * n_l as f64).ceil() as usize } else { 0 })
            .collect();
        if self.allocation.iter().all(|c| *c == 0) {
            self.allocation = vec![1; self.active.len()];
        }
        let scheduled: usize = self.allocation.iter().sum();
        let remaining = self.config.horizon.saturating_sub(self.selected).max(1);
        self.phase_budget = scheduled.min(remaining);
        self.issued = vec![0; self.active.len()];
        self.phase_observed = 0;
        self.gram.fill(0.0);
        self.moment.fill(0.0);
    }

    /// Next arm of the allocation: the slot with the largest unissued share,
    /// ties to the lowest position.
    pub fn next_arm(&mut self) -> usize {
        if self.issued.iter().zip(&self.allocation).all(|(i, c)| i >= c) {
            self.issued.iter_mut().for_each(|i| *i = 0);
        }
        let mut best = 0;
        let mut best_share = f64::NEG_INFINITY;
        for (pos, (&c, &i)) in self.allocation.iter().zip(&self.issued).enumerate() {
            if c == 0 || i >= c {
                continue;
            }
            let share = (c - i) as f64 / c as f64;
            if share > best_share {
                best = pos;
                best_share = share;
            }
        }
        self.issued[best] += 1;
        self.pending.push_back(self.phase);
        self.selected += 1;
        self.active[best]
    }

    /// Feeds one observation. Closes the phase once its budget has been observed.
    pub fn observe_reward(&mut self, arm: usize, reward: f64) {
        self.observed += 1;
        let tag = self.pending.pop_front();
        if tag.is_some_and(|p| p != self.phase) {
            return;
        }
        self.ingest(arm, reward);
    }

    /// Adds an observation the oracle never asked for to the current phase.
    pub fn observe_external(&mut self, arm: usize, reward: f64) {
        self.observed += 1;
        self.ingest(arm, reward);
    }

    fn ingest(&mut self, arm: usize, reward: f64) {
        let x = DVector::from_column_slice(&self.arms[arm]);
        self.gram.ger(1.0, &x, &x, 1.0);
        self.moment.axpy(reward, &x, 1.0);
        self.phase_observed += 1;
        if self.phase_observed >= self.phase_budget {
            self.end_phase();
        }
    }

    /// Least squares on the phase's data, elimination, and the next phase's design.
    pub fn end_phase(&mut self) {
        let svd = self.gram.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let theta = if smax > 0.0 {
            svd.pseudo_inverse(1e-10 * smax)
                .map(|p| p * &self.moment)
                .unwrap_or_else(|_| DVector::zeros(self.dim))
        } else {
            DVector::zeros(self.dim)
        };
        for &i in &self.active {
            self.estimates[i] = DVector::from_column_slice(&self.arms[i]).dot(&theta);
        }
        let best = self
            .active
            .iter()
            .map(|&i| self.estimates[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let threshold = self.threshold();
        let survivors: Vec<usize> = self
            .active
            .iter()
            .copied()
            .filter(|&i| best - self.estimates[i] <= threshold)
            .collect();
        self.active = if survivors.is_empty() {
            // Unreachable for finite estimates; keep the empirical leader.
            vec![self.empirical_leader()]
        } else {
            survivors
        };
        self.phase += 1;
        self.start_phase();
    }

    fn empirical_leader(&self) -> usize {
        let mut leader = self.active[0];
        for &i in &self.active {
            if self.estimates[i] > self.estimates[leader] {
                leader = i;
            }
        }
        leader
    }
}

impl LinearBanditOracle for PeOracle {
    fn select(&mut self) -> usize {
        self.next_arm()
    }

    fn observe(&mut self, arm: usize, reward: f64) {
        self.observe_reward(arm, reward)
    }

    fn observe_unsolicited(&mut self, arm: usize, reward: f64) {
        self.observe_external(arm, reward)
    }

    fn observations(&self) -> usize {
        self.observed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(epsilon: f64, horizon: usize, n: usize) -> PeConfig {
        PeConfig {
            epsilon,
            delta: 0.05,
            horizon,
            n_candidates: n,
        }
    }

    fn run_noiseless(oracle: &mut PeOracle, theta: &[f64], rounds: usize) {
        for _ in 0..rounds {
            let a = oracle.select();
            let r: f64 = oracle.arms[a].iter().zip(theta).map(|(x, y)| x * y).sum();
            oracle.observe(a, r);
        }
    }

    #[test]
    fn single_arm_always_played() {
        let mut pe = PeOracle::new(vec![vec![0.2, 0.1]], config(0.0, 1000, 1)).unwrap();
        for _ in 0..300 {
            let a = pe.select();
            assert_eq!(a, 0);
            pe.observe(a, 0.5);
        }
    }

    #[test]
    fn orthogonal_pair_alternates() {
        let mut pe = PeOracle::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], config(0.0, 10_000, 2)).unwrap();
        assert_eq!(pe.design_weights(), &[0.5, 0.5]);
        let picks: Vec<usize> = (0..10).map(|_| pe.next_arm()).collect();
        assert_eq!(picks, vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn identical_arms_survive() {
        let arms = vec![vec![0.6, 0.8]; 3];
        let mut pe = PeOracle::new(arms, config(0.0, 100_000, 3)).unwrap();
        let budget = pe.phase_budget();
        run_noiseless(&mut pe, &[1.0, 0.0], budget);
        assert_eq!(pe.phase(), 2);
        assert_eq!(pe.active(), &[0, 1, 2]);
    }

    #[test]
    fn clear_gap_eliminated_after_first_phase() {
        // gap 1.2 exceeds the first-phase width 2 * 2^-1 = 1
        let arms = vec![vec![1.0, 0.0], vec![-0.2, 0.0]];
        let mut pe = PeOracle::new(arms, config(0.0, 100_000, 2)).unwrap();
        let budget = pe.phase_budget();
        run_noiseless(&mut pe, &[1.0, 0.0], budget);
        assert_eq!(pe.phase(), 2);
        assert_eq!(pe.active(), &[0]);
    }

    #[test]
    fn unit_gap_needs_second_phase() {
        let arms = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let mut pe = PeOracle::new(arms, config(0.0, 100_000, 2)).unwrap();
        let b1 = pe.phase_budget();
        run_noiseless(&mut pe, &[1.0, 0.0], b1);
        // estimated gap 1 equals the width: kept
        assert_eq!(pe.active(), &[0, 1]);
        let b2 = pe.phase_budget();
        run_noiseless(&mut pe, &[1.0, 0.0], b2);
        assert_eq!(pe.phase(), 3);
        assert_eq!(pe.active(), &[0]);
    }

    #[test]
    fn large_epsilon_never_eliminates() {
        // 2 ε √d > 2 bounds every possible gap
        let arms = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]];
        let mut pe = PeOracle::new(arms, config(0.75, 1_000_000, 3)).unwrap();
        for _ in 0..3 {
            let b = pe.phase_budget();
            run_noiseless(&mut pe, &[1.0, 0.0], b);
        }
        assert_eq!(pe.phase(), 4);
        assert_eq!(pe.active().len(), 3);
    }

    #[test]
    fn phase_length_formula() {
        let pe = PeOracle::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], config(0.0, 1_000_000, 256)).unwrap();
        let expect = (2.0 * 2.0 * 4.0 * (2.0 * 256.0 * 2.0 / 0.05f64).ln()).ceil() as usize;
        assert_eq!(pe.nominal_phase_length(), expect);
        // allocation ⌈n/2⌉ each
        assert_eq!(pe.phase_budget(), 2 * expect.div_ceil(2));
    }

    #[test]
    fn budget_capped_by_horizon() {
        let pe = PeOracle::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], config(0.0, 17, 2)).unwrap();
        assert_eq!(pe.phase_budget(), 17);
    }

    #[test]
    fn delayed_observations_stay_in_their_phase() {
        let arms = vec![vec![1.0, 0.0], vec![-0.2, 0.0]];
        let mut pe = PeOracle::new(arms, config(0.0, 100_000, 2)).unwrap();
        let budget = pe.phase_budget();
        let delay = 7;
        let mut queue = VecDeque::new();
        for _ in 0..budget + delay {
            let a = pe.select();
            queue.push_back(a);
            if queue.len() > delay {
                let b = queue.pop_front().unwrap();
                pe.observe(b, if b == 0 { 1.0 } else { -0.2 });
            }
        }
        assert_eq!(pe.phase(), 2);
        assert_eq!(pe.active(), &[0]);
        // Surplus selections from phase 1 arrive now and are ignored.
        while let Some(b) = queue.pop_front() {
            pe.observe(b, 100.0);
        }
        assert_eq!(pe.phase(), 2);
    }
}
