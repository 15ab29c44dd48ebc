//! Surrogate action maps.
//!
//! For a parameter `θ` and a law `ρ` over states, the surrogate action is the
//! expected greedy action `g_ρ(θ) = Σ_s ρ(s) argmax_k ⟨a_{s,k}, θ⟩`. Applied to
//! every entry of a [`ParameterBank`] this yields the fixed arm set handed to a
//! single-context linear bandit oracle.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::FiniteMarkovEnv;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm};
use crate::rng::unit_vector;

/// Greedy action `argmax_k ⟨a_k, θ⟩`, ties to the lowest index.
pub fn greedy_action<'a>(actions: &'a [Vec<f64>], theta: &[f64]) -> Result<(usize, &'a [f64])> {
    let mut best: Option<(usize, f64)> = None;
    for (k, a) in actions.iter().enumerate() {
        let v = dot(a, theta);
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((k, v)),
        }
    }
    let (k, _) = best.ok_or(Error::EmptyActions)?;
    Ok((k, &actions[k]))
}

/// Finite stand-in for the parameter set: unit-norm vectors, optionally with θ*.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBank {
    vectors: Vec<Vec<f64>>,
    contains_theta_star: bool,
}

impl ParameterBank {
    pub fn new(vectors: Vec<Vec<f64>>, contains_theta_star: bool) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::param("bank", "empty parameter bank"));
        }
        let dim = vectors[0].len();
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::LengthMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) || norm(v) > 1.0 + 1e-12 {
                return Err(Error::param("bank", format!("vector {i} has norm above 1")));
            }
        }
        for i in 0..vectors.len() {
            for j in 0..i {
                if vectors[i] == vectors[j] {
                    return Err(Error::param("bank", format!("vectors {j} and {i} are duplicates")));
                }
            }
        }
        Ok(ParameterBank {
            vectors,
            contains_theta_star,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn contains_theta_star(&self) -> bool {
        self.contains_theta_star
    }
}

/// Samples `m_bank` uniform unit vectors; appends `theta_star` when asked.
pub fn make_bank<R: Rng + ?Sized>(
    m_bank: usize,
    dim: usize,
    include_theta_star: Option<&[f64]>,
    rng: &mut R,
) -> Result<ParameterBank> {
    if m_bank < 2 {
        return Err(Error::param("bank.size", "must be at least 2"));
    }
    let mut vectors: Vec<Vec<f64>> = (0..m_bank).map(|_| unit_vector(rng, dim)).collect();
    if let Some(theta) = include_theta_star {
        if theta.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: theta.len(),
            });
        }
        vectors.push(theta.to_vec());
    }
    ParameterBank::new(vectors, include_theta_star.is_some())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurrogateKind {
    ExactStationary,
    /// Built from the contexts seen before epoch `m` starts.
    EmpiricalEpoch(usize),
}

/// Arm set `{g(θ_i)}` indexed like the bank.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateSet {
    pub arms: Vec<Vec<f64>>,
    pub kind: SurrogateKind,
    pub sample_count: usize,
}

/// Greedy action index for every (bank entry, state) pair.
#[derive(Debug, Clone)]
pub struct GreedyTable {
    n_states: usize,
    // index[i * n_states + s]
    index: Vec<usize>,
}

impl GreedyTable {
    pub fn new(env: &FiniteMarkovEnv, bank: &ParameterBank) -> Self {
        let n_states = env.n_states();
        let mut index = Vec::with_capacity(bank.len() * n_states);
        for theta in bank.vectors() {
            for s in 0..n_states {
                // actions are non-empty by env validation
                let (k, _) = greedy_action(env.actions(s), theta).expect("validated env has actions");
                index.push(k);
            }
        }
        GreedyTable { n_states, index }
    }

    #[inline]
    pub fn action_index(&self, bank_index: usize, state: usize) -> usize {
        self.index[bank_index * self.n_states + state]
    }

    pub fn n_bank(&self) -> usize {
        self.index.len() / self.n_states.max(1)
    }

    /// `g_ρ(θ_i)` for a state law `rho`.
    pub fn surrogate(&self, env: &FiniteMarkovEnv, bank_index: usize, rho: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; env.dim()];
        for (s, w) in rho.iter().enumerate() {
            if *w != 0.0 {
                axpy(&mut out, *w, &env.actions(s)[self.action_index(bank_index, s)]);
            }
        }
        out
    }

    pub fn surrogate_all(&self, env: &FiniteMarkovEnv, rho: &[f64]) -> Vec<Vec<f64>> {
        (0..self.n_bank()).map(|i| self.surrogate(env, i, rho)).collect()
    }
}

/// `g_ρ(θ)` computed directly from the action matrices.
pub fn surrogate_under(env: &FiniteMarkovEnv, rho: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
    if rho.len() != env.n_states() {
        return Err(Error::LengthMismatch {
            expected: env.n_states(),
            actual: rho.len(),
        });
    }
    if theta.len() != env.dim() {
        return Err(Error::LengthMismatch {
            expected: env.dim(),
            actual: theta.len(),
        });
    }
    let mut out = vec![0.0; env.dim()];
    for (s, w) in rho.iter().enumerate() {
        if *w != 0.0 {
            let (_, a) = greedy_action(env.actions(s), theta)?;
            axpy(&mut out, *w, a);
        }
    }
    Ok(out)
}

/// Surrogate arms under the stationary distribution.
pub fn exact_surrogate(env: &FiniteMarkovEnv, bank: &ParameterBank) -> SurrogateSet {
    let table = GreedyTable::new(env, bank);
    SurrogateSet {
        arms: table.surrogate_all(env, env.stationary()),
        kind: SurrogateKind::ExactStationary,
        sample_count: 0,
    }
}

/// Running visit counts; the empirical surrogate only depends on them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitCounts {
    counts: Vec<u64>,
    total: u64,
}

impl VisitCounts {
    pub fn new(n_states: usize) -> Self {
        VisitCounts {
            counts: vec![0; n_states],
            total: 0,
        }
    }

    #[inline]
    pub fn record(&mut self, state: usize) {
        self.counts[state] += 1;
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.total.max(1) as f64;
        self.counts.iter().map(|c| *c as f64 / n).collect()
    }

    pub fn surrogate(&self, env: &FiniteMarkovEnv, table: &GreedyTable, epoch: usize) -> SurrogateSet {
        SurrogateSet {
            arms: table.surrogate_all(env, &self.frequencies()),
            kind: SurrogateKind::EmpiricalEpoch(epoch),
            sample_count: self.total as usize,
        }
    }
}

/// Average greedy action over a context history.
pub fn empirical_surrogate(
    history: &[usize],
    env: &FiniteMarkovEnv,
    bank: &ParameterBank,
    epoch: usize,
) -> Result<SurrogateSet> {
    if history.is_empty() {
        return Err(Error::param("history", "empty context history"));
    }
    let mut counts = VisitCounts::new(env.n_states());
    for &s in history {
        if s >= env.n_states() {
            return Err(Error::param("history", format!("state {s} out of range")));
        }
        counts.record(s);
    }
    Ok(counts.surrogate(env, &GreedyTable::new(env, bank), epoch))
}
