//! G-optimal design by Frank–Wolfe on the D-optimal objective.
//!
//! By Kiefer–Wolfowitz the two designs coincide, and the D-optimal
//! Frank–Wolfe step has a closed-form line search. Arms that do not span the
//! whole space are handled through the pseudo-inverse; the optimum leverage
//! is then the rank of the span instead of the ambient dimension.

use nalgebra::{DMatrix, DVector};

/// Stop once `max_i ‖x_i‖²_{V(w)⁺} ≤ DESIGN_TOLERANCE · rank`.
pub const DESIGN_TOLERANCE: f64 = 1.1;
pub const DESIGN_MAX_ITERS: usize = 500;

const RANK_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub weights: Vec<f64>,
    pub max_leverage: f64,
    pub rank: usize,
    pub iterations: usize,
}

fn design_matrix(arms: &[&[f64]], weights: &[f64]) -> DMatrix<f64> {
    let d = arms[0].len();
    let mut v = DMatrix::<f64>::zeros(d, d);
    for (a, w) in arms.iter().zip(weights) {
        if *w == 0.0 {
            continue;
        }
        let x = DVector::from_column_slice(a);
        v.ger(*w, &x, &x, 1.0);
    }
    v
}

fn pinv_and_rank(v: DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let svd = v.svd(true, true);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        let d = svd.singular_values.len();
        return (DMatrix::zeros(d, d), 0);
    }
    let eps = RANK_EPS * smax.max(1.0);
    let rank = svd.singular_values.iter().filter(|s| **s > eps).count();
    let pinv = svd.pseudo_inverse(eps).expect("svd computed with both factors");
    (pinv, rank)
}

/// `‖x_i‖²_{V(w)⁺}` for every arm, plus the rank of `V(w)`.
pub fn leverages(arms: &[&[f64]], weights: &[f64]) -> (Vec<f64>, usize) {
    let (pinv, rank) = pinv_and_rank(design_matrix(arms, weights));
    let lev = arms
        .iter()
        .map(|a| {
            let x = DVector::from_column_slice(a);
            (x.transpose() * &pinv * &x)[(0, 0)]
        })
        .collect();
    (lev, rank)
}

/// Approximate G-optimal design over `arms`, starting from uniform weights.
pub fn g_optimal_design(arms: &[&[f64]]) -> Design {
    let n = arms.len();
    assert!(n > 0, "design over an empty arm set");
    let mut weights = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    loop {
        let (lev, rank) = leverages(arms, &weights);
        let (k, max_lev) = lev
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        let r = rank as f64;
        if rank == 0 || max_lev <= DESIGN_TOLERANCE * r || iterations >= DESIGN_MAX_ITERS {
            return Design {
                weights,
                max_leverage: max_lev.max(0.0),
                rank,
                iterations,
            };
        }
        let step = (max_lev / r - 1.0) / (max_lev - 1.0);
        for w in weights.iter_mut() {
            *w *= 1.0 - step;
        }
        weights[k] += step;
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, unit_vector, Stream};

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(Vec::as_slice).collect()
    }

    #[test]
    fn orthonormal_pair_is_uniform() {
        let arms = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let design = g_optimal_design(&refs(&arms));
        assert_eq!(design.weights, vec![0.5, 0.5]);
        assert_eq!(design.rank, 2);
        assert!((design.max_leverage - 2.0).abs() < 1e-12);
    }

    #[test]
    fn leverage_within_tolerance_on_random_arms() {
        let mut rng = stream(21, Stream::Verify);
        for d in [3, 5, 20] {
            let arms: Vec<Vec<f64>> = (0..64).map(|_| unit_vector(&mut rng, d)).collect();
            let design = g_optimal_design(&refs(&arms));
            assert!((design.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(design.rank, d);

            // Independent check with an explicit inverse.
            let mut v = DMatrix::<f64>::zeros(d, d);
            for (a, w) in arms.iter().zip(&design.weights) {
                let x = DVector::from_column_slice(a);
                v += *w * &x * x.transpose();
            }
            let inv = v.try_inverse().unwrap();
            let max = arms
                .iter()
                .map(|a| {
                    let x = DVector::from_column_slice(a);
                    (x.transpose() * &inv * &x)[(0, 0)]
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(max <= DESIGN_TOLERANCE * d as f64 + 1e-9, "d={d}: {max}");
        }
    }

    #[test]
    fn rank_deficient_arms_use_span_dimension() {
        let arms = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.7, 0.7, 0.0]];
        let design = g_optimal_design(&refs(&arms));
        assert_eq!(design.rank, 2);
        assert!(design.max_leverage <= DESIGN_TOLERANCE * 2.0 + 1e-12);
    }

    #[test]
    fn single_and_zero_arms() {
        let design = g_optimal_design(&refs(&[vec![0.3, 0.4]]));
        assert_eq!(design.weights, vec![1.0]);
        let design = g_optimal_design(&refs(&[vec![0.0, 0.0], vec![0.0, 0.0]]));
        assert_eq!(design.rank, 0);
        assert_eq!(design.weights, vec![0.5, 0.5]);
    }
}
