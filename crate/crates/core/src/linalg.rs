//! Small dense complex-matrix helpers shared by the projector, frame and
//! geometry code.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().iter().sum()
}

/// `trace(a * b)` without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entry of `a - a†`.
pub fn hermiticity_defect(a: &CMat) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Frobenius inner product `trace(a b)` for Hermitian arguments.
pub fn inner(a: &CMat, b: &CMat) -> f64 {
    trace_prod(a, b).re
}

pub fn scale(a: &CMat, s: f64) -> CMat {
    a.map(|z| z * s)
}

pub fn from_real_imag(re: &[Vec<f64>], im: &[Vec<f64>], n: usize) -> Option<CMat> {
    if re.len() != n || im.len() != n {
        return None;
    }
    let mut m = zeros(n);
    for i in 0..n {
        if re[i].len() != n || im[i].len() != n {
            return None;
        }
        for j in 0..n {
            m[(i, j)] = Complex64::new(re[i][j], im[i][j]);
        }
    }
    Some(m)
}

/// Pauli matrices in the order x, y, z.
pub fn pauli() -> [CMat; 3] {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let o = c(0.0, 0.0);
    [
        CMat::from_row_slice(2, 2, &[o, c(1.0, 0.0), c(1.0, 0.0), o]),
        CMat::from_row_slice(2, 2, &[o, c(0.0, -1.0), c(0.0, 1.0), o]),
        CMat::from_row_slice(2, 2, &[c(1.0, 0.0), o, o, c(-1.0, 0.0)]),
    ]
}

/// `v · σ` for a real 3-vector.
pub fn pauli_dot(v: [f64; 3]) -> CMat {
    let [sx, sy, sz] = pauli();
    scale(&sx, v[0]) + scale(&sy, v[1]) + scale(&sz, v[2])
}

/// Pairwise (cascade) summation; the order depends only on the length of
/// the slice, so results are reproducible regardless of how the values were
/// produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}
