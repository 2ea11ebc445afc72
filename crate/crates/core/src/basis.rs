//! Trace-orthonormal frames of Hermitian matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Candidates whose residual after orthogonalization has squared norm below
/// this are treated as linearly dependent.
pub const REJECT_EPS: f64 = 1e-20;
/// Relative threshold on the squared residual of `∂_y P` after removing the
/// `∂_x P` direction; below it the tangent plane has rank one.
pub const RANK_REL: f64 = 1e-10;

/// Hermitian matrices with `trace(H_j H_k) = δ_jk`. The first
/// `tangent_count` entries span the tangent plane when the frame was built
/// by [`normal_frame`].
#[derive(Debug, Clone)]
pub struct HermitianFrame {
    pub mats: Vec<CMat>,
    pub tangent_count: usize,
    n: usize,
}

impl HermitianFrame {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.mats.len() == self.n * self.n
    }

    pub fn tangents(&self) -> &[CMat] {
        &self.mats[..self.tangent_count]
    }

    pub fn normals(&self) -> &[CMat] {
        &self.mats[self.tangent_count..]
    }

    /// `Σ_j trace(H_j a) H_j`.
    pub fn reconstruct(&self, a: &CMat) -> CMat {
        let mut out = linalg::zeros(self.n);
        for h in &self.mats {
            out += linalg::scale(h, linalg::inner(h, a));
        }
        out
    }

    /// Largest `|trace(H_j H_k) - δ_jk|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, a) in self.mats.iter().enumerate() {
            for (k, b) in self.mats.iter().enumerate() {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((linalg::trace_prod(a, b) - target).norm());
            }
        }
        worst
    }

    /// The frame conjugated by a unitary, `U H_j U†`.
    pub fn conjugated(&self, u: &CMat) -> Self {
        Self {
            mats: self.mats.iter().map(|h| u * h * u.adjoint()).collect(),
            tangent_count: self.tangent_count,
            n: self.n,
        }
    }

    /// Drop entry `j`, leaving a partial frame.
    pub fn without(&self, j: usize) -> Self {
        let mut mats = self.mats.clone();
        mats.remove(j);
        Self {
            mats,
            tangent_count: self.tangent_count.min(j),
            n: self.n,
        }
    }
}

/// Identity, real symmetric, imaginary antisymmetric and traceless diagonal
/// generators, normalized to unit trace norm. For `N = 2` these are the
/// Pauli matrices over `√2`.
pub fn standard_hermitian_frame(n: usize) -> HermitianFrame {
    let mut mats = Vec::with_capacity(n * n);
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    mats.push(linalg::scale(&linalg::identity(n), 1.0 / (n as f64).sqrt()));
    for a in 0..n {
        for b in (a + 1)..n {
            let mut m = linalg::zeros(n);
            m[(a, b)] = r2.into();
            m[(b, a)] = r2.into();
            mats.push(m);
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let mut m = linalg::zeros(n);
            m[(a, b)] = Complex64::new(0.0, -r2);
            m[(b, a)] = Complex64::new(0.0, r2);
            mats.push(m);
        }
    }
    for l in 1..n {
        let c = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut m = linalg::zeros(n);
        for j in 0..l {
            m[(j, j)] = c.into();
        }
        m[(l, l)] = (-(l as f64) * c).into();
        mats.push(m);
    }
    HermitianFrame {
        mats,
        tangent_count: 0,
        n,
    }
}

/// Gram–Schmidt frame whose leading entries span `{∂_x P, ∂_y P}`, completed
/// to a full frame by standard generators.
pub fn normal_frame(dpx: &CMat, dpy: &CMat, n: usize) -> Result<HermitianFrame> {
    if dpx.nrows() != n || dpy.nrows() != n {
        return Err(Error::Dimension(format!(
            "tangents are {}x{} and {}x{}, expected {n}x{n}",
            dpx.nrows(),
            dpx.ncols(),
            dpy.nrows(),
            dpy.ncols()
        )));
    }
    let nxx = linalg::inner(dpx, dpx);
    if !(nxx > REJECT_EPS) {
        return Err(Error::RankZero);
    }
    let mut mats: Vec<CMat> = vec![linalg::scale(dpx, 1.0 / nxx.sqrt())];

    let nyy = linalg::inner(dpy, dpy);
    let ry = orthogonalize(dpy, &mats);
    let ry_norm2 = linalg::inner(&ry, &ry);
    if ry_norm2 >= RANK_REL * nxx.max(nyy) && ry_norm2 > REJECT_EPS {
        mats.push(linalg::scale(&ry, 1.0 / ry_norm2.sqrt()));
    }
    let tangent_count = mats.len();

    for cand in standard_hermitian_frame(n).mats {
        if mats.len() == n * n {
            break;
        }
        let r = orthogonalize(&cand, &mats);
        let r2 = linalg::inner(&r, &r);
        if r2 < REJECT_EPS {
            continue;
        }
        mats.push(linalg::scale(&r, 1.0 / r2.sqrt()));
    }
    debug_assert_eq!(mats.len(), n * n);
    Ok(HermitianFrame {
        mats,
        tangent_count,
        n,
    })
}

/// Two passes of modified Gram–Schmidt against an orthonormal set.
fn orthogonalize(a: &CMat, basis: &[CMat]) -> CMat {
    let mut r = a.clone();
    for _ in 0..2 {
        for b in basis {
            let c = linalg::inner(b, &r);
            r -= linalg::scale(b, c);
        }
    }
    r
}

/// `max |Σ_j (H_j)_ab (H_j)_cd - δ_ad δ_bc|` for a full frame.
pub fn completeness_defect(frame: &HermitianFrame) -> Result<f64> {
    if !frame.is_full() {
        return Err(Error::PartialFrame {
            got: frame.len(),
            expected: frame.dim() * frame.dim(),
        });
    }
    Ok(completeness_residual(&frame.mats, frame.dim()))
}

/// The completeness sum without the full-frame check.
pub fn completeness_residual(mats: &[CMat], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for h in mats {
                        acc += h[(a, b)] * h[(c, d)];
                    }
                    if a == d && b == c {
                        acc -= 1.0;
                    }
                    worst = worst.max(acc.norm());
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, pauli};

    #[test]
    fn two_by_two_frame_is_pauli() {
        let f = standard_hermitian_frame(2);
        let [sx, sy, sz] = pauli();
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [
            linalg::scale(&linalg::identity(2), r2),
            linalg::scale(&sx, r2),
            linalg::scale(&sy, r2),
            linalg::scale(&sz, r2),
        ];
        for (m, e) in f.mats.iter().zip(&expect) {
            assert!(max_abs_diff(m, e) < 1e-15);
        }
    }

    #[test]
    fn standard_frames_are_orthonormal_and_complete() {
        for n in 1..=5 {
            let f = standard_hermitian_frame(n);
            assert_eq!(f.len(), n * n);
            assert!(f.orthonormality_defect() < 1e-14);
            assert!(completeness_defect(&f).unwrap() < 1e-14);
        }
    }

    #[test]
    fn deleting_an_element_breaks_completeness() {
        let f = standard_hermitian_frame(3);
        for j in 0..f.len() {
            let partial = f.without(j);
            assert!(matches!(
                completeness_defect(&partial),
                Err(Error::PartialFrame {
                    got: 8,
                    expected: 9
                })
            ));
            assert!(completeness_residual(&partial.mats, 3) >= 1.0 / 3.0 - 1e-14);
        }
    }

    #[test]
    fn zero_tangent_is_rank_zero() {
        let z = linalg::zeros(2);
        assert!(matches!(normal_frame(&z, &z, 2), Err(Error::RankZero)));
    }

    #[test]
    fn parallel_tangents_give_rank_one() {
        let [sx, ..] = pauli();
        let f = normal_frame(&sx, &linalg::scale(&sx, -3.0), 2).unwrap();
        assert_eq!(f.tangent_count, 1);
        assert_eq!(f.normals().len(), 3);
        assert!(f.orthonormality_defect() < 1e-14);
    }
}
