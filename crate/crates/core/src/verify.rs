//! Numerical checks of the structural lemmas and concentration bounds on
//! small instances.
//!
//! The exact checks (kernel, mixing, Lipschitz, bias, argmax, schedule) use
//! only deterministic arithmetic and must report zero violations. The
//! Monte-Carlo checks compare empirical frequencies or means against their
//! bounds with the stated tolerance.

use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{build_ring_kernel, tv_distance, ChainState, EnvSpec, FiniteMarkovEnv};
use crate::error::{Error, Result};
use crate::known::{bias_oracle, compute_tau, run_known, surrogate_regret, KnownParams, UcbParams};
use crate::linalg::{dot, norm, sub};
use crate::rng::{stream, unit_vector, Stream};
use crate::surrogate::{exact_surrogate, make_bank, surrogate_under, GreedyTable, ParameterBank};
use crate::unknown::{build_schedule, epoch_start, misspec_schedule, run_unknown, UnknownParams};

/// Slack for floating-point comparisons in exact checks.
const EXACT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    pub trials: usize,
    pub violations: usize,
    /// The bound being checked.
    pub bound: f64,
    /// The statistic compared against it: a worst case for exact checks, an
    /// estimate for Monte-Carlo checks.
    pub observed: f64,
    pub pass: bool,
    pub runtime_secs: f64,
}

impl VerificationReport {
    fn exact(name: &str, trials: usize, violations: usize, bound: f64, observed: f64, started: Instant) -> Self {
        VerificationReport {
            name: name.to_string(),
            trials,
            violations,
            bound,
            observed,
            pass: violations == 0,
            runtime_secs: started.elapsed().as_secs_f64(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Random law on `n` points, uniform on the simplex.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Ring-kernel mixture entries: row sums, stationarity, and the two
/// closed-form entry values of the ring mixture.
pub fn check_kernel(env: &FiniteMarkovEnv, p_loop: f64, n_neighbors: usize) -> Result<VerificationReport> {
    let started = Instant::now();
    let s = env.n_states();
    let q = build_ring_kernel(s, p_loop, n_neighbors)?;
    let beta = env.beta();
    let uniform = 1.0 / s as f64;
    let diag = beta * p_loop + (1.0 - beta) * uniform;
    let far = (1.0 - beta) * uniform;
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    let p = env.kernel();
    for (i, row) in p.iter().enumerate() {
        let sum_err = (row.iter().sum::<f64>() - 1.0).abs();
        worst = worst.max(sum_err);
        violations += usize::from(sum_err > EXACT_SLACK);
        for (j, &pij) in row.iter().enumerate() {
            let expect = if i == j {
                diag
            } else if q[i][j] == 0.0 {
                far
            } else {
                continue;
            };
            let err = (pij - expect).abs();
            worst = worst.max(err);
            violations += usize::from(err > 1e-15);
        }
    }
    let pushed = env.push_forward(env.stationary());
    for (a, b) in pushed.iter().zip(env.stationary()) {
        let err = (a - b).abs();
        worst = worst.max(err);
        violations += usize::from(err > 1e-10);
    }
    Ok(VerificationReport::exact("kernel", s * s, violations, EXACT_SLACK, worst, started))
}

/// `TV(μP^t, π) ≤ C_mix β^t` for random initial laws.
pub fn check_doeblin(env: &FiniteMarkovEnv, n_initial: usize, t_max: usize, seed: u64) -> Result<VerificationReport> {
    let started = Instant::now();
    let mut rng = stream(seed, Stream::Verify);
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..n_initial {
        let mut mu = random_distribution(&mut rng, env.n_states());
        for t in 0..=t_max {
            let tv = tv_distance(&mu, env.stationary())?;
            let bound = env.c_mix() * env.beta().powi(t as i32);
            violations += usize::from(tv > bound + 1e-10);
            if bound > 1e-10 {
                worst_ratio = worst_ratio.max(tv / bound);
            }
            mu = env.push_forward(&mu);
        }
    }
    Ok(VerificationReport::exact("doeblin", n_initial * (t_max + 1), violations, 1.0, worst_ratio, started))
}

/// `‖g_ρ(θ) − g_ρ′(θ)‖₂ ≤ 2 TV(ρ, ρ′)` over random triples.
pub fn check_lemma1(env: &FiniteMarkovEnv, triples: usize, seed: u64) -> Result<VerificationReport> {
    let started = Instant::now();
    let mut rng = stream(seed, Stream::Verify);
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..triples {
        let rho = random_distribution(&mut rng, env.n_states());
        let rho2 = random_distribution(&mut rng, env.n_states());
        let theta = unit_vector(&mut rng, env.dim());
        let lhs = norm(&sub(&surrogate_under(env, &rho, &theta)?, &surrogate_under(env, &rho2, &theta)?));
        let rhs = 2.0 * tv_distance(&rho, &rho2)?;
        violations += usize::from(lhs > rhs + EXACT_SLACK);
        if rhs > 0.0 {
            worst_ratio = worst_ratio.max(lhs / rhs);
        }
    }
    Ok(VerificationReport::exact("lemma1", triples, violations, 1.0, worst_ratio, started))
}

/// `|Δ(s₀, θ_i, τ)| ≤ 2 TV(P^τ(s₀,·), π) ≤ 2 C_mix β^τ` for every start state,
/// bank entry and `τ = 1..=tau_max`. `observed` is the largest
/// `|Δ| / (2 C_mix β^τ)`.
pub fn check_bias(env: &FiniteMarkovEnv, bank: &ParameterBank, tau_max: usize) -> Result<VerificationReport> {
    let started = Instant::now();
    let mut violations = 0;
    let mut trials = 0;
    let mut worst_ratio: f64 = 0.0;
    for tau in 1..=tau_max {
        let envelope = 2.0 * env.c_mix() * env.beta().powi(tau as i32);
        for s0 in 0..env.n_states() {
            let tv = tv_distance(&env.kernel_power_row(s0, tau), env.stationary())?;
            for theta in bank.vectors() {
                let delta = bias_oracle(env, tau, theta, s0)?.abs();
                trials += 1;
                violations += usize::from(delta > 2.0 * tv + EXACT_SLACK || delta > envelope + EXACT_SLACK);
                if envelope > 0.0 {
                    worst_ratio = worst_ratio.max(delta / envelope);
                }
            }
        }
    }
    Ok(VerificationReport::exact("bias", trials, violations, 1.0, worst_ratio, started))
}

/// For each bank entry `θ_i`, `i ∈ argmax_j ⟨g_ρ(θ_j), θ_i⟩`, under random `ρ`.
pub fn check_argmax(env: &FiniteMarkovEnv, bank: &ParameterBank, n_rho: usize, seed: u64) -> Result<VerificationReport> {
    let started = Instant::now();
    let mut rng = stream(seed, Stream::Verify);
    let table = GreedyTable::new(env, bank);
    let mut violations = 0;
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..n_rho {
        let rho = random_distribution(&mut rng, env.n_states());
        let g = table.surrogate_all(env, &rho);
        for (i, theta) in bank.vectors().iter().enumerate() {
            let own = dot(&g[i], theta);
            for gj in &g {
                let excess = dot(gj, theta) - own;
                worst = worst.max(excess);
                violations += usize::from(excess > EXACT_SLACK);
            }
        }
    }
    let trials = n_rho * bank.len() * bank.len();
    Ok(VerificationReport::exact("argmax", trials, violations, 0.0, worst, started))
}

/// `√(18 T log(4 C_mix) / (1 − β) · log(2/δ))`.
pub fn paulin_bound(horizon: usize, beta: f64, c_mix: f64, delta: f64) -> f64 {
    (18.0 * horizon as f64 * (4.0 * c_mix).ln() / (1.0 - beta) * (2.0 / delta).ln()).sqrt()
}

/// Deviation of `Σ_t h(A_t)` from its exact mean over `trials` trajectories
/// of length `horizon`, each started at a uniformly drawn state.
pub fn check_paulin(
    env: &FiniteMarkovEnv,
    h: &[f64],
    horizon: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let started = Instant::now();
    if h.len() != env.n_states() {
        return Err(Error::LengthMismatch {
            expected: env.n_states(),
            actual: h.len(),
        });
    }
    if h.iter().any(|v| !(v.abs() <= 1.0)) {
        return Err(Error::param("h", "values must lie in [-1, 1]"));
    }
    let bound = paulin_bound(horizon, env.beta(), env.c_mix(), delta);
    // Exact Σ_t E h(A_t) for each start state.
    let expected: Vec<f64> = (0..env.n_states())
        .map(|s0| {
            let mut mu = vec![0.0; env.n_states()];
            mu[s0] = 1.0;
            let mut total = 0.0;
            for _ in 0..horizon {
                total += dot(&mu, h);
                mu = env.push_forward(&mu);
            }
            total
        })
        .collect();
    let deviations: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let trial_seed = seed.wrapping_add(k as u64);
            let s0 = stream(trial_seed, Stream::Verify).gen_range(0..env.n_states());
            let mut chain = ChainState::new(env, s0, trial_seed).expect("state in range");
            let mut total = 0.0;
            for _ in 0..horizon {
                total += h[chain.current()];
                env.step(&mut chain);
            }
            (total - expected[s0]).abs()
        })
        .collect();
    let violations = deviations.iter().filter(|d| **d > bound).count();
    let worst = deviations.iter().cloned().fold(0.0, f64::max);
    let rate = violations as f64 / trials.max(1) as f64;
    Ok(VerificationReport {
        name: "paulin".into(),
        trials,
        violations,
        bound,
        observed: worst,
        pass: rate <= delta,
        runtime_secs: started.elapsed().as_secs_f64(),
    })
}

/// Delay and epoch arithmetic against direct enumeration.
pub fn check_schedule(horizon: usize, beta: f64, c_tau: f64) -> Result<VerificationReport> {
    let started = Instant::now();
    let tau = compute_tau(horizon, beta, c_tau);
    let schedule = build_schedule(horizon, tau)?;
    let mut violations = 0;
    let mut trials = 0;
    let direct_tau = (c_tau * (horizon as f64).ln() / (1.0 - beta)).ceil() as usize;
    violations += usize::from(tau != direct_tau.max(1));
    // Walk epochs one by one: each lasts τ + 2^{m−1} rounds.
    let mut t = 0usize;
    let mut m = 0usize;
    while t < horizon {
        m += 1;
        trials += 1;
        violations += usize::from(schedule.starts.get(m - 1) != Some(&t) || epoch_start(m, tau) != t);
        t += tau + (1usize << (m - 1));
    }
    violations += usize::from(schedule.n_epochs() != m);
    Ok(VerificationReport::exact("schedule", trials + 2, violations, m as f64, schedule.n_epochs() as f64, started))
}

/// Samples of the reduction's residual noise
/// `η′ = r − ⟨g_π(θ), θ*⟩ − Δ(s₀, θ, τ)`, where the context is drawn `τ` steps
/// after a uniform start `s₀` and `θ` is uniform on the bank.
fn residual_noise(env: &FiniteMarkovEnv, bank: &ParameterBank, tau: usize, samples: usize, seed: u64) -> Result<Vec<f64>> {
    let table = GreedyTable::new(env, bank);
    let exact = exact_surrogate(env, bank);
    let base: Vec<f64> = exact.arms.iter().map(|g| env.mean_reward(g)).collect();
    let mut bias = vec![vec![0.0; bank.len()]; env.n_states()];
    for (s0, row) in bias.iter_mut().enumerate() {
        for (i, b) in row.iter_mut().enumerate() {
            *b = bias_oracle(env, tau, bank.get(i), s0)?;
        }
    }
    let mut rng = stream(seed, Stream::Verify);
    let mut noise = stream(seed, Stream::Noise);
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let s0 = rng.gen_range(0..env.n_states());
        let i = rng.gen_range(0..bank.len());
        let mut chain = ChainState::new(env, s0, rng.gen())?;
        for _ in 0..tau {
            env.step(&mut chain);
        }
        let s = chain.current();
        let r = env.reward(&env.actions(s)[table.action_index(i, s)], &mut noise);
        out.push(r - base[i] - bias[s0][i]);
    }
    Ok(out)
}

/// Smoke check of the sub-Gaussian proxy 17: the empirical moment generating
/// function of the residual noise at `λ ∈ {±0.25, ±0.5}` stays below
/// `exp(17 λ²/2)` with 10% slack.
pub fn check_subgaussian(env: &FiniteMarkovEnv, bank: &ParameterBank, tau: usize, samples: usize, seed: u64) -> Result<VerificationReport> {
    let started = Instant::now();
    let eta = residual_noise(env, bank, tau, samples, seed)?;
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    for lambda in [-0.5, -0.25, 0.25, 0.5] {
        let mgf = eta.iter().map(|e| (lambda * e).exp()).sum::<f64>() / eta.len() as f64;
        let bound = (17.0 * lambda * lambda / 2.0).exp();
        worst_ratio = worst_ratio.max(mgf / bound);
        violations += usize::from(mgf > 1.1 * bound);
    }
    Ok(VerificationReport::exact("subgaussian", 4, violations, 1.1, worst_ratio, started))
}

/// Mean and standard error.
fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-run statistics of the known-distribution reduction on a small
/// instance whose bank contains `θ*`.
struct KnownRunStats {
    /// `Σ_{t>τ} b_t − E[b_t | A_{t−τ}, θ_t]`.
    martingale: f64,
    /// Oracle-phase pseudo-regret minus the oracle's regret on the exact
    /// surrogate instance.
    phase_gap: f64,
    /// Full-run pseudo-regret minus surrogate regret of the replayed choices.
    coupling_gap: f64,
}

fn known_run_stats(env: &FiniteMarkovEnv, bank: &ParameterBank, params: &KnownParams, runs: usize, seed: u64) -> Result<Vec<KnownRunStats>> {
    let tau = params.tau(env);
    let exact = exact_surrogate(env, bank);
    let table = GreedyTable::new(env, bank);
    let base: Vec<f64> = exact.arms.iter().map(|g| env.mean_reward(g)).collect();
    // b(s, i) = ⟨greedy(s, θ_i) − g_π(θ_i), θ*⟩ and its conditional mean.
    let b: Vec<Vec<f64>> = (0..env.n_states())
        .map(|s| (0..bank.len()).map(|i| env.mean_reward(&env.actions(s)[table.action_index(i, s)]) - base[i]).collect())
        .collect();
    let mut cond = vec![vec![0.0; bank.len()]; env.n_states()];
    for (s0, row) in cond.iter_mut().enumerate() {
        for (i, c) in row.iter_mut().enumerate() {
            *c = bias_oracle(env, tau, bank.get(i), s0)?;
        }
    }
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let out = run_known(env, bank, params, r, seed.wrapping_add(r as u64))?;
            let sur = surrogate_regret(env, &exact, &out.choices);
            let t_end = out.trace.horizon();
            let mut martingale = 0.0;
            for t in tau..t_end {
                let (s, i) = (out.states[t], out.choices[t]);
                martingale += b[s][i] - cond[out.states[t - tau]][i];
            }
            let pseudo = out.trace.final_regret();
            let phase_pseudo = pseudo - out.trace.at(tau);
            let phase_sur = sur[t_end - 1] - sur[tau - 1];
            Ok(KnownRunStats {
                martingale,
                phase_gap: phase_pseudo - phase_sur,
                coupling_gap: pseudo - sur[t_end - 1],
            })
        })
        .collect()
}

/// The small instance used by the Monte-Carlo reduction checks, with `θ*`
/// appended to a bank of `m_bank` random vectors.
pub fn small_instance(seed: u64, m_bank: usize, include_theta_star: bool) -> Result<(FiniteMarkovEnv, ParameterBank)> {
    let env = EnvSpec::small(seed).build()?;
    let star = include_theta_star.then(|| env.theta_star().to_vec());
    let bank = make_bank(m_bank, env.dim(), star.as_deref(), &mut stream(seed, Stream::Bank))?;
    Ok((env, bank))
}

fn small_known_params(horizon: usize) -> KnownParams {
    KnownParams {
        horizon,
        c_tau: 1.0,
        theory_mode: false,
        ucb: UcbParams::default(),
    }
}

/// Block sums of the bias residual have mean zero (within 3 standard errors).
pub fn check_martingale(runs: usize, horizon: usize, seed: u64) -> Result<VerificationReport> {
    let started = Instant::now();
    let (env, bank) = small_instance(seed, 32, true)?;
    let stats = known_run_stats(&env, &bank, &small_known_params(horizon), runs, seed)?;
    let values: Vec<f64> = stats.iter().map(|s| s.martingale).collect();
    let (mean, se) = mean_se(&values);
    Ok(VerificationReport {
        name: "martingale".into(),
        trials: runs,
        violations: usize::from(mean.abs() > 3.0 * se),
        bound: 3.0 * se,
        observed: mean,
        pass: mean.abs() <= 3.0 * se,
        runtime_secs: started.elapsed().as_secs_f64(),
    })
}

/// Paired coupling of the reduction with its oracle on the exact instance:
/// `|mean gap| ≤ 2τ + 4 T C_mix β^τ + 3 SE`.
pub fn check_coupling(runs: usize, horizon: usize, seed: u64) -> Result<VerificationReport> {
    let started = Instant::now();
    let (env, bank) = small_instance(seed, 32, true)?;
    let params = small_known_params(horizon);
    let tau = params.tau(&env);
    let stats = known_run_stats(&env, &bank, &params, runs, seed)?;
    let values: Vec<f64> = stats.iter().map(|s| s.coupling_gap).collect();
    let (mean, se) = mean_se(&values);
    let bound = 2.0 * tau as f64 + 4.0 * horizon as f64 * env.c_mix() * env.beta().powi(tau as i32) + 3.0 * se;
    Ok(VerificationReport {
        name: "coupling".into(),
        trials: runs,
        violations: usize::from(mean.abs() > bound),
        bound,
        observed: mean,
        pass: mean.abs() <= bound,
        runtime_secs: started.elapsed().as_secs_f64(),
    })
}

/// Per-run envelope on the oracle-phase regret gap:
/// `|gap| ≤ 3 (√(T τ log(τ T)) + τ)`, never violated.
pub fn check_envelope(runs: usize, horizon: usize, seed: u64) -> Result<VerificationReport> {
    let started = Instant::now();
    let (env, bank) = small_instance(seed, 32, true)?;
    let params = small_known_params(horizon);
    let tau = params.tau(&env) as f64;
    let t = horizon as f64;
    let bound = 3.0 * ((t * tau * (tau * t).ln()).sqrt() + tau);
    let stats = known_run_stats(&env, &bank, &params, runs, seed)?;
    let violations = stats.iter().filter(|s| s.phase_gap.abs() > bound).count();
    let worst = stats.iter().map(|s| s.phase_gap.abs()).fold(0.0, f64::max);
    Ok(VerificationReport::exact("envelope", runs, violations, bound, worst, started))
}

/// Outcome of the misspecification check, per epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspecEpoch {
    pub epoch: usize,
    pub start: usize,
    pub epsilon: f64,
    /// Fraction of runs with `max |⟨g_π(θ) − g^(m)(θ), θ′⟩| ≤ ε_m`.
    pub coverage: f64,
}

/// Empirical coverage of the misspecification allowance by the estimated
/// surrogates, for every epoch starting at or after `10τ`. Passes when each
/// such epoch is covered in at least 95% of runs and `ε_m` is nonincreasing
/// from the second epoch on.
pub fn check_misspec(runs: usize, horizon: usize, m_bank: usize, seed: u64) -> Result<(VerificationReport, Vec<MisspecEpoch>)> {
    let started = Instant::now();
    let (env, bank) = small_instance(seed, m_bank, false)?;
    let params = UnknownParams {
        horizon,
        ..UnknownParams::default()
    };
    let tau = params.tau(&env);
    let schedule = build_schedule(horizon, tau)?;
    let epsilons = misspec_schedule(&schedule, &params.constants(&env, &schedule, bank.len()));
    let outputs: Vec<_> = (0..runs)
        .into_par_iter()
        .map(|r| run_unknown(&env, &bank, &params, r, seed.wrapping_add(r as u64)).map(|o| o.epochs))
        .collect::<Result<_>>()?;
    let mut epochs = Vec::new();
    let mut violations = 0;
    for m in 1..=schedule.n_epochs() {
        let start = schedule.start(m);
        if start < 10 * tau {
            continue;
        }
        let covered = outputs
            .iter()
            .filter(|run| run.get(m - 1).is_some_and(|e| e.max_misspecification <= e.epsilon))
            .count();
        let coverage = covered as f64 / runs as f64;
        violations += usize::from(coverage < 0.95);
        epochs.push(MisspecEpoch {
            epoch: m,
            start,
            epsilon: epsilons[m - 1],
            coverage,
        });
    }
    let monotone = epsilons[1..].windows(2).all(|w| w[1] <= w[0]);
    violations += usize::from(!monotone);
    let worst = epochs.iter().map(|e| e.coverage).fold(1.0, f64::min);
    let report = VerificationReport::exact("misspec", runs, violations, 0.95, worst, started);
    Ok((report, epochs))
}

/// Default seed of the verification suites.
pub const VERIFY_SEED: u64 = 20_240_601;

pub const SUITES: [&str; 12] = [
    "kernel", "doeblin", "lemma1", "bias", "argmax", "paulin", "schedule", "subgaussian", "martingale", "coupling", "envelope", "misspec",
];

/// Runs one named suite, or all of them for `"all"`. `trials` overrides the
/// main repetition count of the suite.
pub fn run_suite(name: &str, trials: Option<usize>, seed: u64) -> Result<Vec<VerificationReport>> {
    if name == "all" {
        let mut out = Vec::new();
        for suite in SUITES {
            out.extend(run_suite(suite, trials, seed)?);
        }
        return Ok(out);
    }
    let n = |default: usize| trials.unwrap_or(default);
    let table3 = || EnvSpec::table3(seed).build();
    let report = match name {
        "kernel" => check_kernel(&table3()?, 0.2, 2)?,
        "doeblin" => check_doeblin(&table3()?, n(10), 100, seed)?,
        "lemma1" => check_lemma1(&small_instance(seed, 2, false)?.0, n(1000), seed)?,
        "bias" => {
            let (env, bank) = small_instance(seed, 256, false)?;
            check_bias(&env, &bank, 30)?
        }
        "argmax" => {
            let (env, bank) = small_instance(seed, 256, false)?;
            check_argmax(&env, &bank, n(20), seed)?
        }
        "paulin" => {
            let env = table3()?;
            let mut rng = stream(seed, Stream::Verify);
            let h: Vec<f64> = (0..env.n_states()).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
            check_paulin(&env, &h, 1000, 0.05, n(500), seed)?
        }
        "schedule" => check_schedule(200_000, 0.75, 1.0)?,
        "subgaussian" => {
            let (env, bank) = small_instance(seed, 32, false)?;
            let tau = compute_tau(5000, env.beta(), 1.0);
            check_subgaussian(&env, &bank, tau, n(20_000), seed)?
        }
        "martingale" => check_martingale(n(200), 5000, seed)?,
        "coupling" => check_coupling(n(200), 5000, seed)?,
        "envelope" => check_envelope(n(200), 5000, seed)?,
        "misspec" => check_misspec(n(200), 20_000, 256, seed)?.0,
        other => {
            return Err(Error::param("suite", format!("unknown suite `{other}`; expected one of {} or all", SUITES.join(", "))));
        }
    };
    Ok(vec![report])
}
