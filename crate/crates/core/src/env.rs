//! Finite-state Markov context processes.
//!
//! A [`FiniteMarkovEnv`] pairs a row-stochastic transition kernel over `S`
//! states with one `K × d` action matrix per state. The chain is sampled by a
//! [`ChainState`], and the exact distributional helpers ([`tv_distance`],
//! [`FiniteMarkovEnv::kernel_power_row`]) back the verification suite.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::rng::{self, Stream};

const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;

/// Ring kernel: self-loop mass `p_loop`, the rest spread evenly over the
/// `n_neighbors` states on each side.
pub fn build_ring_kernel(n_states: usize, p_loop: f64, n_neighbors: usize) -> Result<Vec<Vec<f64>>> {
    if !(p_loop > 0.0 && p_loop < 1.0) {
        return Err(Error::param("p_loop", format!("{p_loop} is not in (0, 1)")));
    }
    if n_neighbors == 0 {
        return Err(Error::param("n_neighbors", "must be at least 1"));
    }
    if 2 * n_neighbors >= n_states {
        return Err(Error::param(
            "n_neighbors",
            format!("2 * {n_neighbors} neighbors cover the whole ring of {n_states} states"),
        ));
    }
    let share = (1.0 - p_loop) / (2 * n_neighbors) as f64;
    let kernel = (0..n_states)
        .map(|s| {
            let mut row = vec![0.0; n_states];
            row[s] = p_loop;
            for k in 1..=n_neighbors {
                row[(s + k) % n_states] += share;
                row[(s + n_states - k) % n_states] += share;
            }
            row
        })
        .collect();
    Ok(kernel)
}

/// Doeblin mixture `P = βQ + (1 − β) 1πᵀ`.
pub fn build_doeblin_kernel(q: &[Vec<f64>], beta: f64, pi: &[f64]) -> Result<Vec<Vec<f64>>> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::param("beta", format!("{beta} is not in [0, 1)")));
    }
    check_probability_vector("pi", pi)?;
    for (s, row) in q.iter().enumerate() {
        if row.len() != pi.len() {
            return Err(Error::LengthMismatch {
                expected: pi.len(),
                actual: row.len(),
            });
        }
        check_probability_vector(&format!("q[{s}]"), row)?;
    }
    Ok(q.iter()
        // Single rounding per entry keeps dyadic entries such as 5/32 exact.
        .map(|row| row.iter().zip(pi).map(|(qv, p)| beta.mul_add(*qv, (1.0 - beta) * p)).collect())
        .collect())
}

/// Total-variation distance `½ Σ |p_i − q_i|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

fn check_probability_vector(name: &str, p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::param(name, "empty probability vector"));
    }
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::param(name, "entries must be finite and non-negative"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > ROW_SUM_TOL * p.len().max(1) as f64 {
        return Err(Error::param(name, format!("sums to {total}, not 1")));
    }
    Ok(())
}

/// Draws an index from a probability row given a uniform `u ∈ [0, 1)`.
pub(crate) fn sample_index(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `acc` slightly below 1: fall back to the last state with mass.
    row.iter().rposition(|p| *p > 0.0).unwrap_or(row.len() - 1)
}

/// Recipe for the ring/Doeblin environment used in the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub n_states: usize,
    pub n_actions: usize,
    pub dim: usize,
    pub p_loop: f64,
    pub n_neighbors: usize,
    pub beta: f64,
    pub noise_sigma: f64,
    pub c_mix: f64,
    pub seed: u64,
    pub theta_star: Option<Vec<f64>>,
}

impl EnvSpec {
    /// Table-3 sized environment (S = 40, K = 20, d = 20, β = 0.75).
    pub fn table3(seed: u64) -> Self {
        EnvSpec {
            n_states: 40,
            n_actions: 20,
            dim: 20,
            p_loop: 0.20,
            n_neighbors: 2,
            beta: 0.75,
            noise_sigma: 0.5,
            c_mix: 1.0,
            seed,
            theta_star: None,
        }
    }

    /// Small instance used by the exact checks (S = 6, K = 4, d = 3).
    pub fn small(seed: u64) -> Self {
        EnvSpec {
            n_states: 6,
            n_actions: 4,
            dim: 3,
            p_loop: 0.20,
            n_neighbors: 1,
            beta: 0.75,
            noise_sigma: 0.5,
            c_mix: 1.0,
            seed,
            theta_star: None,
        }
    }

    /// Builds the environment: uniform π, ring kernel mixed with π, unit-norm
    /// action features and θ* drawn from the environment stream.
    pub fn build(&self) -> Result<FiniteMarkovEnv> {
        if self.n_actions == 0 {
            return Err(Error::EmptyActions);
        }
        if self.dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        let pi = vec![1.0 / self.n_states as f64; self.n_states];
        let q = build_ring_kernel(self.n_states, self.p_loop, self.n_neighbors)?;
        let kernel = build_doeblin_kernel(&q, self.beta, &pi)?;
        let mut rng = rng::stream(self.seed, Stream::Environment);
        let actions = (0..self.n_states)
            .map(|_| {
                (0..self.n_actions)
                    .map(|_| rng::unit_vector(&mut rng, self.dim))
                    .collect()
            })
            .collect();
        let theta_star = match &self.theta_star {
            Some(v) => v.clone(),
            None => rng::unit_vector(&mut rng, self.dim),
        };
        FiniteMarkovEnv::new(
            actions,
            kernel,
            pi,
            self.beta,
            self.c_mix,
            self.noise_sigma,
            theta_star,
        )
    }
}

/// A uniformly geometrically ergodic finite-state context process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMarkovEnv {
    n_states: usize,
    n_actions: usize,
    dim: usize,
    actions: Vec<Vec<Vec<f64>>>,
    kernel: Vec<Vec<f64>>,
    stationary: Vec<f64>,
    doeblin_beta: f64,
    c_mix: f64,
    noise_sigma: f64,
    theta_star: Vec<f64>,
}

impl FiniteMarkovEnv {
    pub fn new(
        actions: Vec<Vec<Vec<f64>>>,
        kernel: Vec<Vec<f64>>,
        stationary: Vec<f64>,
        doeblin_beta: f64,
        c_mix: f64,
        noise_sigma: f64,
        theta_star: Vec<f64>,
    ) -> Result<Self> {
        let env = FiniteMarkovEnv {
            n_states: kernel.len(),
            n_actions: actions.first().map_or(0, Vec::len),
            dim: theta_star.len(),
            actions,
            kernel,
            stationary,
            doeblin_beta,
            c_mix,
            noise_sigma,
            theta_star,
        };
        env.validate()?;
        Ok(env)
    }

    /// Checks every structural invariant. Called by [`FiniteMarkovEnv::new`]
    /// and after deserialization.
    pub fn validate(&self) -> Result<()> {
        let s = self.n_states;
        if s == 0 {
            return Err(Error::InvalidEnv("no states".into()));
        }
        if self.dim == 0 {
            return Err(Error::InvalidEnv("dimension is zero".into()));
        }
        if self.n_actions == 0 {
            return Err(Error::EmptyActions);
        }
        if self.kernel.len() != s || self.kernel.iter().any(|r| r.len() != s) {
            return Err(Error::InvalidEnv(format!("kernel is not {s}x{s}")));
        }
        if self.stationary.len() != s {
            return Err(Error::InvalidEnv("stationary length differs from n_states".into()));
        }
        if self.actions.len() != s {
            return Err(Error::InvalidEnv(format!("expected {s} action matrices")));
        }
        for (i, row) in self.kernel.iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidEnv(format!("kernel row {i} has a negative or non-finite entry")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidEnv(format!("kernel row {i} sums to {total}")));
            }
        }
        check_probability_vector("stationary", &self.stationary)
            .map_err(|e| Error::InvalidEnv(e.to_string()))?;
        let pushed = self.push_forward(&self.stationary);
        for (i, (a, b)) in pushed.iter().zip(&self.stationary).enumerate() {
            if (a - b).abs() > STATIONARY_TOL {
                return Err(Error::InvalidEnv(format!(
                    "stationary distribution is not invariant at state {i} ({a} vs {b})"
                )));
            }
        }
        for (st, mat) in self.actions.iter().enumerate() {
            if mat.len() != self.n_actions {
                return Err(Error::InvalidEnv(format!("state {st} has {} actions, expected {}", mat.len(), self.n_actions)));
            }
            for (k, a) in mat.iter().enumerate() {
                if a.len() != self.dim {
                    return Err(Error::InvalidEnv(format!("action ({st},{k}) has wrong dimension")));
                }
                if a.iter().any(|x| !x.is_finite()) || norm(a) > 1.0 + NORM_TOL {
                    return Err(Error::InvalidEnv(format!("action ({st},{k}) has norm above 1")));
                }
            }
        }
        if self.theta_star.iter().any(|x| !x.is_finite()) || norm(&self.theta_star) > 1.0 + NORM_TOL {
            return Err(Error::InvalidEnv("theta_star has norm above 1".into()));
        }
        if !(0.0..1.0).contains(&self.doeblin_beta) {
            return Err(Error::InvalidEnv(format!("doeblin_beta {} is not in [0, 1)", self.doeblin_beta)));
        }
        if !(self.c_mix >= 1.0 && self.c_mix.is_finite()) {
            return Err(Error::InvalidEnv(format!("c_mix {} must be at least 1", self.c_mix)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidEnv("noise_sigma must be non-negative".into()));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn actions(&self, state: usize) -> &[Vec<f64>] {
        &self.actions[state]
    }
    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }
    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }
    pub fn beta(&self) -> f64 {
        self.doeblin_beta
    }
    pub fn c_mix(&self) -> f64 {
        self.c_mix
    }
    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }
    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    /// One step of the pushforward: `μ ↦ μP`.
    pub fn push_forward(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_states];
        for (m, row) in mu.iter().zip(&self.kernel) {
            if *m == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(row) {
                *o += m * p;
            }
        }
        out
    }

    /// `μPᵗ` by repeated vector-matrix products.
    pub fn push_forward_n(&self, mu: &[f64], t: usize) -> Vec<f64> {
        let mut cur = mu.to_vec();
        for _ in 0..t {
            cur = self.push_forward(&cur);
        }
        cur
    }

    /// Row `s` of `Pᵗ`: the law of the context `t` steps after visiting `s`.
    pub fn kernel_power_row(&self, s: usize, t: usize) -> Vec<f64> {
        let mut one_hot = vec![0.0; self.n_states];
        one_hot[s] = 1.0;
        self.push_forward_n(&one_hot, t)
    }

    /// Advances the chain by one transition and returns the new state.
    pub fn step(&self, chain: &mut ChainState) -> usize {
        let u: f64 = chain.rng.gen();
        chain.current = sample_index(&self.kernel[chain.current], u);
        chain.current
    }

    /// Noiseless mean reward `⟨a, θ*⟩`.
    pub fn mean_reward(&self, action: &[f64]) -> f64 {
        dot(action, &self.theta_star)
    }

    /// Noisy reward `⟨a, θ*⟩ + σ z`, `z ~ N(0, 1)` from `rng`.
    pub fn reward<R: Rng + ?Sized>(&self, action: &[f64], rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.mean_reward(action) + self.noise_sigma * z
    }

    /// `max_k ⟨a_{s,k}, θ*⟩`, found by exhaustive scan.
    pub fn optimal_value(&self, state: usize) -> f64 {
        self.actions[state]
            .iter()
            .map(|a| self.mean_reward(a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: FiniteMarkovEnv = serde_json::from_str(text)?;
        env.check_declared_sizes()?;
        env.validate()?;
        Ok(env)
    }

    /// Deserialized documents carry explicit sizes; they must agree with the data.
    pub(crate) fn check_declared_sizes(&self) -> Result<()> {
        if self.kernel.len() != self.n_states
            || self.theta_star.len() != self.dim
            || self.actions.first().map_or(0, Vec::len) != self.n_actions
        {
            return Err(Error::InvalidEnv("declared sizes disagree with the data".into()));
        }
        Ok(())
    }
}

/// Position of one context chain plus its private transition stream.
#[derive(Debug, Clone)]
pub struct ChainState {
    current: usize,
    rng: ChaCha8Rng,
}

impl ChainState {
    pub fn new(env: &FiniteMarkovEnv, start: usize, seed: u64) -> Result<Self> {
        if start >= env.n_states() {
            return Err(Error::param("start", format!("state {start} out of range")));
        }
        Ok(ChainState {
            current: start,
            rng: rng::stream(seed, Stream::Chain),
        })
    }

    /// Starts the chain from a draw of the stationary distribution.
    pub fn stationary_start(env: &FiniteMarkovEnv, seed: u64) -> Self {
        let mut rng = rng::stream(seed, Stream::Chain);
        let u: f64 = rng.gen();
        ChainState {
            current: sample_index(env.stationary(), u),
            rng,
        }
    }

    pub fn current(&self) -> usize {
        self.current
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table3_ring_row() {
        let q = build_ring_kernel(40, 0.20, 2).unwrap();
        for (s, row) in q.iter().enumerate() {
            assert_eq!(row[s], 0.20);
            for k in [1, 2] {
                assert!((row[(s + k) % 40] - 0.2).abs() < 1e-15);
                assert!((row[(s + 40 - k) % 40] - 0.2).abs() < 1e-15);
            }
            assert_eq!(row.iter().filter(|p| **p > 0.0).count(), 5);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn three_state_ring() {
        let q = build_ring_kernel(3, 0.5, 1).unwrap();
        assert_eq!(q[0], vec![0.5, 0.25, 0.25]);
        assert_eq!(q[1], vec![0.25, 0.5, 0.25]);
        assert_eq!(q[2], vec![0.25, 0.25, 0.5]);
    }

    #[test]
    fn ring_rejects_degenerate_inputs() {
        assert!(build_ring_kernel(10, 0.0, 1).is_err());
        assert!(build_ring_kernel(10, 1.0, 1).is_err());
        assert!(build_ring_kernel(4, 0.5, 2).is_err());
        assert!(build_ring_kernel(5, 0.5, 0).is_err());
    }

    #[test]
    fn doeblin_table3_entries() {
        let pi = vec![1.0 / 40.0; 40];
        let q = build_ring_kernel(40, 0.20, 2).unwrap();
        let p = build_doeblin_kernel(&q, 0.75, &pi).unwrap();
        assert!((p[0][0] - 0.15625).abs() < 1e-15);
        assert!((p[0][20] - 0.00625).abs() < 1e-15);
    }

    #[test]
    fn doeblin_beta_zero_collapses_to_pi() {
        let pi = vec![0.2, 0.3, 0.5];
        let q = build_ring_kernel(3, 0.5, 1).unwrap();
        let p = build_doeblin_kernel(&q, 0.0, &pi).unwrap();
        for row in &p {
            assert_eq!(row, &pi);
        }
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!((tv_distance(&[0.5, 0.5], &[0.75, 0.25]).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(tv_distance(&[1.0], &[0.5, 0.5]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn kernel_powers_base_cases() {
        let env = EnvSpec::small(3).build().unwrap();
        let r0 = env.kernel_power_row(2, 0);
        assert_eq!(r0, vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(env.kernel_power_row(2, 1), env.kernel()[2]);
        let pi = env.stationary().to_vec();
        assert!(tv_distance(&env.push_forward(&pi), &pi).unwrap() < 1e-15);
    }

    #[test]
    fn doeblin_contraction_on_exact_powers() {
        let env = EnvSpec::table3(7).build().unwrap();
        for s in [0, 13, 39] {
            let mut row = env.kernel_power_row(s, 0);
            for t in 0..=100 {
                let tv = tv_distance(&row, env.stationary()).unwrap();
                assert!(tv <= 0.75f64.powi(t) + 1e-12, "s={s} t={t} tv={tv}");
                row = env.push_forward(&row);
            }
        }
    }

    #[test]
    fn one_hot_row_is_deterministic() {
        let mut kernel = vec![vec![0.0; 3]; 3];
        kernel[0][2] = 1.0;
        kernel[1][0] = 1.0;
        kernel[2][1] = 1.0;
        let actions = vec![vec![vec![1.0, 0.0]]; 3];
        let env = FiniteMarkovEnv::new(actions, kernel, vec![1.0 / 3.0; 3], 0.5, 1.0, 0.0, vec![1.0, 0.0]).unwrap();
        let mut chain = ChainState::new(&env, 0, 11).unwrap();
        for _ in 0..50 {
            let prev = chain.current();
            let next = env.step(&mut chain);
            assert_eq!(next, [2, 0, 1][prev]);
        }
    }

    #[test]
    fn equal_seeds_equal_trajectories() {
        let env = EnvSpec::table3(1).build().unwrap();
        let run = |seed| {
            let mut c = ChainState::stationary_start(&env, seed);
            (0..1000).map(|_| env.step(&mut c)).collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn visit_frequencies_match_pi() {
        let env = EnvSpec::table3(2).build().unwrap();
        let n = 1_000_000usize;
        let mut counts = vec![0usize; env.n_states()];
        let mut chain = ChainState::stationary_start(&env, 99);
        for _ in 0..n {
            counts[env.step(&mut chain)] += 1;
        }
        let beta = env.beta();
        for (s, c) in counts.iter().enumerate() {
            let p = env.stationary()[s];
            let freq = *c as f64 / n as f64;
            let tol = 3.0 * (p * (1.0 - p) / n as f64 * (1.0 + beta) / (1.0 - beta)).sqrt();
            assert!((freq - p).abs() <= tol, "state {s}: {freq} vs {p} (tol {tol})");
        }
    }

    #[test]
    fn reward_noiseless_and_mean() {
        let mut spec = EnvSpec::small(4);
        spec.noise_sigma = 0.0;
        let env = spec.build().unwrap();
        let mut rng = rng::stream(1, Stream::Noise);
        let a = env.actions(0)[1].clone();
        assert_eq!(env.reward(&a, &mut rng), dot(&a, env.theta_star()));
        assert_eq!(env.reward(&[0.0; 3], &mut rng), 0.0);

        let env = EnvSpec::small(4).build().unwrap();
        let n = 100_000;
        let mean = (0..n).map(|_| env.reward(&a, &mut rng)).sum::<f64>() / n as f64;
        let sigma = env.noise_sigma();
        assert!((mean - dot(&a, env.theta_star())).abs() <= 4.0 * sigma / (n as f64).sqrt());
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let env = EnvSpec::small(8).build().unwrap();
        let text = env.to_json().unwrap();
        assert_eq!(FiniteMarkovEnv::from_json(&text).unwrap(), env);

        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["kernel"][0][0] = serde_json::json!(0.9);
        assert!(FiniteMarkovEnv::from_json(&value.to_string()).is_err());
    }

    #[test]
    fn rejects_non_stationary_pi() {
        let kernel = vec![vec![0.9, 0.1], vec![0.5, 0.5]];
        let actions = vec![vec![vec![1.0]]; 2];
        let err = FiniteMarkovEnv::new(actions, kernel, vec![0.5, 0.5], 0.5, 1.0, 0.1, vec![1.0]);
        assert!(matches!(err, Err(Error::InvalidEnv(_))));
    }

    proptest! {
        #[test]
        fn ring_rows_sum_to_one(s in 3usize..60, p in 0.01f64..0.99, nb in 1usize..10) {
            prop_assume!(2 * nb < s);
            let q = build_ring_kernel(s, p, nb).unwrap();
            for row in &q {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn doeblin_contracts_tv(weights in proptest::collection::vec(0.0f64..1.0, 6), beta in 0.0f64..0.99) {
            let total: f64 = weights.iter().sum();
            prop_assume!(total > 1e-6);
            let mu: Vec<f64> = weights.iter().map(|w| w / total).collect();
            let pi = vec![1.0 / 6.0; 6];
            let q = build_ring_kernel(6, 0.3, 2).unwrap();
            let p = build_doeblin_kernel(&q, beta, &pi).unwrap();
            let env = FiniteMarkovEnv::new(vec![vec![vec![1.0]]; 6], p, pi.clone(), beta, 1.0, 0.0, vec![1.0]).unwrap();
            let before = tv_distance(&mu, &pi).unwrap();
            let after = tv_distance(&env.push_forward(&mu), &pi).unwrap();
            prop_assert!(after <= beta * before + 1e-12);
        }
    }
}
