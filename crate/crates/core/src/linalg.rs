//! Small dense helpers on plain slices.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `out += scale * v`
#[inline]
pub fn axpy(out: &mut [f64], scale: f64, v: &[f64]) {
    for (o, x) in out.iter_mut().zip(v) {
        *o += scale * x;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Row-major square matrix times vector.
pub fn mat_vec(m: &[f64], dim: usize, v: &[f64]) -> Vec<f64> {
    (0..dim).map(|r| dot(&m[r * dim..(r + 1) * dim], v)).collect()
}

/// `xᵀ M x` for a row-major square matrix.
pub fn quad_form(m: &[f64], dim: usize, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for r in 0..dim {
        acc += x[r] * dot(&m[r * dim..(r + 1) * dim], x);
    }
    acc
}
