//! Ridge-regression UCB with an optional bias-inflated confidence radius.

use serde::{Deserialize, Serialize};

use super::LinearBanditOracle;
use crate::error::{Error, Result};
use crate::linalg::{dot, mat_vec, quad_form};

/// Bias bound `ε_T = 2 C_mix T^{−c_τ}` left over after a delay of
/// `⌈c_τ log T / (1 − β)⌉` rounds.
pub fn bias_level(horizon: usize, c_tau: f64, c_mix: f64) -> f64 {
    2.0 * c_mix * (horizon as f64).powf(-c_tau)
}

/// How the exploration radius multiplying `‖x‖_{V⁻¹}` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Radius {
    /// `√λ + R √(2 log(1/δ) + log det(V/λI)) + ε_T √(2d log(1 + T))`.
    SelfNormalized {
        delta: f64,
        noise_proxy: f64,
        bias_level: f64,
        horizon: usize,
    },
    /// A constant multiplier.
    Fixed { alpha: f64 },
}

impl Radius {
    /// Noise proxy for rewards seen through the reduction: the conditional
    /// bias term adds variance proxy 16 to the unit proxy of the noise.
    pub const REDUCTION_NOISE_PROXY: f64 = 4.123_105_625_617_661; // √17
}

#[derive(Debug, Clone)]
pub struct UcbOracle {
    dim: usize,
    lambda: f64,
    // V⁻¹, row-major
    inv_gram: Vec<f64>,
    moment: Vec<f64>,
    log_det_ratio: f64,
    radius: Radius,
    bonus_cap: f64,
    t_obs: usize,
}

impl UcbOracle {
    pub fn new(dim: usize, lambda: f64, radius: Radius, bonus_cap: Option<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", format!("{lambda} must be positive")));
        }
        match radius {
            Radius::SelfNormalized {
                delta,
                noise_proxy,
                bias_level,
                ..
            } => {
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::param("delta", format!("{delta} is not in (0, 1)")));
                }
                if !(noise_proxy >= 0.0) || !(bias_level >= 0.0) {
                    return Err(Error::param("radius", "noise proxy and bias level must be non-negative"));
                }
            }
            Radius::Fixed { alpha } => {
                if !(alpha >= 0.0 && alpha.is_finite()) {
                    return Err(Error::param("alpha", format!("{alpha} must be non-negative")));
                }
            }
        }
        let cap = bonus_cap.unwrap_or(f64::INFINITY);
        if !(cap > 0.0) {
            return Err(Error::param("bonus_cap", "must be positive"));
        }
        let mut inv_gram = vec![0.0; dim * dim];
        for i in 0..dim {
            inv_gram[i * dim + i] = 1.0 / lambda;
        }
        Ok(UcbOracle {
            dim,
            lambda,
            inv_gram,
            moment: vec![0.0; dim],
            log_det_ratio: 0.0,
            radius,
            bonus_cap: cap,
            t_obs: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn t_obs(&self) -> usize {
        self.t_obs
    }

    pub fn bonus_cap(&self) -> f64 {
        self.bonus_cap
    }

    /// `log det(V / λI)`, tracked through the matrix determinant lemma.
    pub fn log_det_ratio(&self) -> f64 {
        self.log_det_ratio
    }

    pub fn inverse_gram(&self) -> &[f64] {
        &self.inv_gram
    }

    /// `θ̂ = V⁻¹ b`.
    pub fn theta_hat(&self) -> Vec<f64> {
        mat_vec(&self.inv_gram, self.dim, &self.moment)
    }

    /// Current multiplier of `‖x‖_{V⁻¹}`.
    pub fn radius(&self) -> f64 {
        match self.radius {
            Radius::Fixed { alpha } => alpha,
            Radius::SelfNormalized {
                delta,
                noise_proxy,
                bias_level,
                horizon,
            } => {
                let beta_t = self.lambda.sqrt()
                    + noise_proxy * (2.0 * (1.0 / delta).ln() + self.log_det_ratio).sqrt();
                let inflation = bias_level * (2.0 * self.dim as f64 * (1.0 + horizon as f64).ln()).sqrt();
                beta_t + inflation
            }
        }
    }

    fn score(&self, theta_hat: &[f64], radius: f64, arm: &[f64]) -> f64 {
        let width = quad_form(&self.inv_gram, self.dim, arm).max(0.0).sqrt();
        dot(arm, theta_hat) + (radius * width).min(self.bonus_cap)
    }

    /// `argmax_i ⟨x_i, θ̂⟩ + min(cap, radius ‖x_i‖_{V⁻¹})`, ties to the lowest index.
    pub fn select(&self, arms: &[Vec<f64>]) -> Result<usize> {
        if arms.is_empty() {
            return Err(Error::EmptyActions);
        }
        let theta_hat = self.theta_hat();
        let radius = self.radius();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, arm) in arms.iter().enumerate() {
            let s = self.score(&theta_hat, radius, arm);
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        Ok(best)
    }

    /// Rank-one update of `V⁻¹`, `b` and `log det`. Returns `V⁻¹x` (before the
    /// update) and `1 + ‖x‖²_{V⁻¹}` for callers caching per-arm quantities.
    pub fn update(&mut self, arm: &[f64], reward: f64) -> (Vec<f64>, f64) {
        assert_eq!(arm.len(), self.dim, "arm dimension");
        let d = self.dim;
        let u = mat_vec(&self.inv_gram, d, arm);
        let denom = 1.0 + dot(arm, &u);
        assert!(denom > 0.0 && denom.is_finite(), "gram matrix lost positive definiteness");
        for r in 0..d {
            for c in 0..d {
                self.inv_gram[r * d + c] -= u[r] * u[c] / denom;
            }
        }
        for (m, x) in self.moment.iter_mut().zip(arm) {
            *m += x * reward;
        }
        self.log_det_ratio += denom.ln();
        self.t_obs += 1;
        (u, denom)
    }
}

/// [`UcbOracle`] bound to a fixed arm set, caching `‖x_i‖²_{V⁻¹}` per arm so
/// that a selection costs `O(M d)` instead of `O(M d²)`.
#[derive(Debug, Clone)]
pub struct FixedArmUcb {
    inner: UcbOracle,
    arms: Vec<Vec<f64>>,
    sq_widths: Vec<f64>,
}

impl FixedArmUcb {
    pub fn new(inner: UcbOracle, arms: Vec<Vec<f64>>) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::EmptyActions);
        }
        if let Some(a) = arms.iter().find(|a| a.len() != inner.dim()) {
            return Err(Error::LengthMismatch {
                expected: inner.dim(),
                actual: a.len(),
            });
        }
        let sq_widths = arms
            .iter()
            .map(|a| quad_form(inner.inverse_gram(), inner.dim(), a))
            .collect();
        Ok(FixedArmUcb {
            inner,
            arms,
            sq_widths,
        })
    }

    pub fn oracle(&self) -> &UcbOracle {
        &self.inner
    }

    pub fn arms(&self) -> &[Vec<f64>] {
        &self.arms
    }
}

impl LinearBanditOracle for FixedArmUcb {
    fn select(&mut self) -> usize {
        let theta_hat = self.inner.theta_hat();
        let radius = self.inner.radius();
        let cap = self.inner.bonus_cap();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, (arm, sq)) in self.arms.iter().zip(&self.sq_widths).enumerate() {
            let s = dot(arm, &theta_hat) + (radius * sq.max(0.0).sqrt()).min(cap);
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        best
    }

    fn observe(&mut self, arm: usize, reward: f64) {
        let (u, denom) = self.inner.update(&self.arms[arm], reward);
        for (x, sq) in self.arms.iter().zip(self.sq_widths.iter_mut()) {
            let proj = dot(x, &u);
            *sq -= proj * proj / denom;
        }
    }

    fn observations(&self) -> usize {
        self.inner.t_obs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, unit_vector, Stream};
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;

    fn plain(dim: usize, lambda: f64) -> UcbOracle {
        UcbOracle::new(dim, lambda, Radius::Fixed { alpha: 1.0 }, None).unwrap()
    }

    #[test]
    fn single_update_closed_form() {
        let mut o = plain(3, 1.0);
        o.update(&[1.0, 0.0, 0.0], 1.0);
        let th = o.theta_hat();
        assert!((th[0] - 0.5).abs() < 1e-15 && th[1] == 0.0 && th[2] == 0.0);
        o.update(&[1.0, 0.0, 0.0], 1.0);
        assert!((o.theta_hat()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(o.t_obs(), 2);
    }

    #[test]
    fn update_order_does_not_matter() {
        let mut rng = stream(3, Stream::Verify);
        let data: Vec<(Vec<f64>, f64)> = (0..30).map(|_| (unit_vector(&mut rng, 4), rng.gen::<f64>())).collect();
        let mut a = plain(4, 2.0);
        let mut b = plain(4, 2.0);
        for (x, r) in &data {
            a.update(x, *r);
        }
        for (x, r) in data.iter().rev() {
            b.update(x, *r);
        }
        for (p, q) in a.theta_hat().iter().zip(b.theta_hat()) {
            assert!((p - q).abs() < 1e-12);
        }
        assert!((a.log_det_ratio() - b.log_det_ratio()).abs() < 1e-12);
    }

    #[test]
    fn cold_start_prefers_longest_arm() {
        let o = UcbOracle::new(
            2,
            100.0,
            Radius::SelfNormalized {
                delta: 0.05,
                noise_proxy: 1.0,
                bias_level: 0.0,
                horizon: 100,
            },
            Some(2.5),
        )
        .unwrap();
        let arms = vec![vec![0.3, 0.0], vec![0.0, 0.9], vec![0.5, 0.5]];
        assert_eq!(o.select(&arms).unwrap(), 1);
    }

    #[test]
    fn bonus_cap_binds() {
        let o = UcbOracle::new(2, 0.01, Radius::Fixed { alpha: 1000.0 }, Some(2.5)).unwrap();
        let th = o.theta_hat();
        let s = o.score(&th, o.radius(), &[1.0, 0.0]);
        assert_eq!(s, 2.5);
    }

    #[test]
    fn bias_inflation_dominates() {
        let make = |bias| {
            UcbOracle::new(
                5,
                1.0,
                Radius::SelfNormalized {
                    delta: 0.05,
                    noise_proxy: Radius::REDUCTION_NOISE_PROXY,
                    bias_level: bias,
                    horizon: 1000,
                },
                None,
            )
            .unwrap()
        };
        let mut a = make(0.0);
        let mut b = make(1e-3);
        let mut rng = stream(4, Stream::Verify);
        for _ in 0..50 {
            assert!(b.radius() > a.radius());
            let x = unit_vector(&mut rng, 5);
            a.update(&x, 0.1);
            b.update(&x, 0.1);
        }
    }

    #[test]
    fn bias_level_values() {
        assert!((bias_level(200_000, 1.0, 1.0) - 1e-5).abs() < 1e-20);
        assert_eq!(bias_level(1000, 1.5, 0.0), 0.0);
        assert!(bias_level(1000, 1.0, 1.0) > bias_level(2000, 1.0, 1.0));
    }

    /// Straight-line OFUL: recompute V, V⁻¹, θ̂ and det(V) from scratch each step.
    fn reference_choice(history: &[(Vec<f64>, f64)], arms: &[Vec<f64>], lambda: f64, delta: f64, sigma: f64) -> usize {
        let d = arms[0].len();
        let mut v = DMatrix::<f64>::identity(d, d) * lambda;
        let mut b = DVector::<f64>::zeros(d);
        for (x, r) in history {
            let x = DVector::from_column_slice(x);
            v += &x * x.transpose();
            b += &x * *r;
        }
        let vinv = v.clone().try_inverse().unwrap();
        let theta = &vinv * &b;
        let log_det = (v.determinant() / lambda.powi(d as i32)).ln();
        let beta = lambda.sqrt() + sigma * (2.0 * (1.0 / delta).ln() + log_det).sqrt();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, a) in arms.iter().enumerate() {
            let x = DVector::from_column_slice(a);
            let s = x.dot(&theta) + beta * (x.transpose() * &vinv * &x)[(0, 0)].sqrt();
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        best
    }

    #[test]
    fn matches_reference_oful_script() {
        let mut rng = stream(5, Stream::Verify);
        let d = 4;
        let theta_star = unit_vector(&mut rng, d);
        let arms: Vec<Vec<f64>> = (0..12).map(|_| unit_vector(&mut rng, d)).collect();
        let radius = Radius::SelfNormalized {
            delta: 0.1,
            noise_proxy: 1.0,
            bias_level: 0.0,
            horizon: 100,
        };
        let mut oracle = UcbOracle::new(d, 1.0, radius, None).unwrap();
        let mut cached = FixedArmUcb::new(oracle.clone(), arms.clone()).unwrap();
        let mut history = Vec::new();
        for _ in 0..100 {
            let choice = oracle.select(&arms).unwrap();
            assert_eq!(choice, reference_choice(&history, &arms, 1.0, 0.1, 1.0));
            assert_eq!(choice, cached.select());
            let r = dot(&arms[choice], &theta_star) + 0.3 * (rng.gen::<f64>() - 0.5);
            oracle.update(&arms[choice], r);
            cached.observe(choice, r);
            history.push((arms[choice].clone(), r));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(UcbOracle::new(3, 0.0, Radius::Fixed { alpha: 1.0 }, None).is_err());
        assert!(UcbOracle::new(3, 1.0, Radius::Fixed { alpha: -1.0 }, None).is_err());
        assert!(UcbOracle::new(3, 1.0, Radius::Fixed { alpha: 1.0 }, Some(0.0)).is_err());
        assert!(plain(2, 1.0).select(&[]).is_err());
    }
}
