//! Both bandit oracles on a plain fixed-arm linear bandit.

use mbl_core::oracle::{FixedArmUcb, LinearBanditOracle, PeConfig, PeOracle, Radius, UcbOracle};
use mbl_core::rng::{stream, unit_vector, Stream};
use rand::Rng;
use rand_distr::{Distribution, Normal};

const DIM: usize = 5;
const ARMS: usize = 32;
const HORIZON: usize = 20_000;
const SIGMA: f64 = 0.5;

struct Instance {
    arms: Vec<Vec<f64>>,
    means: Vec<f64>,
    best: f64,
}

fn instance(seed: u64) -> Instance {
    let mut rng = stream(seed, Stream::Environment);
    let arms: Vec<Vec<f64>> = (0..ARMS).map(|_| unit_vector(&mut rng, DIM)).collect();
    let theta = unit_vector(&mut rng, DIM);
    let means: Vec<f64> = arms.iter().map(|a| a.iter().zip(&theta).map(|(x, y)| x * y).sum()).collect();
    let best = means.iter().cloned().fold(f64::MIN, f64::max);
    Instance { arms, means, best }
}

/// Per-round regret of `oracle` over the horizon.
fn play<O: LinearBanditOracle>(mut oracle: O, inst: &Instance, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, Stream::Noise);
    let noise = Normal::new(0.0, SIGMA).unwrap();
    (0..HORIZON)
        .map(|_| {
            let i = oracle.select();
            oracle.observe(i, inst.means[i] + noise.sample(&mut rng));
            inst.best - inst.means[i]
        })
        .collect()
}

fn uniform_regret(inst: &Instance, seed: u64) -> f64 {
    let mut rng = stream(seed, Stream::Policy);
    (0..HORIZON).map(|_| inst.best - inst.means[rng.gen_range(0..ARMS)]).sum()
}

fn check(regret: &[f64], inst: &Instance, seed: u64, name: &str, max_fraction: f64) {
    let total: f64 = regret.iter().sum();
    let uniform = uniform_regret(inst, seed);
    assert!(total < uniform * max_fraction, "{name}: {total} vs uniform {uniform}");
    let first: f64 = regret[..HORIZON / 2].iter().sum();
    let second: f64 = regret[HORIZON / 2..].iter().sum();
    assert!(second < first, "{name}: per-round regret not decreasing ({first} then {second})");
}

#[test]
fn ucb_beats_uniform_play() {
    for seed in 0..8 {
        let inst = instance(seed);
        let radius = Radius::SelfNormalized {
            delta: 0.05,
            noise_proxy: SIGMA,
            bias_level: 0.0,
            horizon: HORIZON,
        };
        let ucb = FixedArmUcb::new(UcbOracle::new(DIM, 1.0, radius, None).unwrap(), inst.arms.clone()).unwrap();
        check(&play(ucb, &inst, seed), &inst, seed, "ucb", 0.2);
    }
}

#[test]
fn phased_elimination_beats_uniform_play() {
    for seed in 0..8 {
        let inst = instance(seed);
        let cfg = PeConfig {
            epsilon: 0.0,
            delta: 0.05,
            horizon: HORIZON,
            n_candidates: ARMS,
        };
        let pe = PeOracle::new(inst.arms.clone(), cfg).unwrap();
        check(&play(pe, &inst, seed), &inst, seed, "pe", 1.0 / 3.0);
    }
}
