//! Pointwise quantum geometry from a projector jet.
//!
//! Conventions: `g_μν = trace(∂_μP ∂_νP)` (twice the usual quantum metric),
//! `Γ_αβγ = trace(∂_αP ∂_β∂_γP)` with the lowered index first, and
//! `λ̄ = -i trace(P [∂_xP, ∂_yP])`.

use crate::basis::{normal_frame, HermitianFrame};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{KPoint, ModelSpec};
use crate::projector::{self, BandSelection, ProjectorJet};

/// Points with `det g` below this are singular.
pub const SING_EPS: f64 = 1e-8;
/// Imaginary parts of real-valued traces above this are an error.
pub const RESIDUE_EPS: f64 = 1e-10;
/// Finite-difference step for derivatives of Christoffel symbols.
pub const CHRISTOFFEL_FD_STEP: f64 = 1e-4;
/// Projected tangents shorter than this are dropped from the split route.
pub const TANGENT_FLOOR: f64 = 1e-12;

pub type Metric = [[f64; 2]; 2];
pub type Christoffel = [[[f64; 2]; 2]; 2];

#[derive(Debug, Clone)]
pub struct QGeometryPoint {
    pub k: KPoint,
    pub g: Metric,
    pub det_g: f64,
    pub lambda_bar: f64,
    pub gamma_first: Christoffel,
    pub r1212: f64,
    /// `None` at singular points.
    pub k_gauss: Option<f64>,
    pub regular: bool,
}

fn real_trace(z: num_complex::Complex64, quantity: &'static str) -> Result<f64> {
    if z.im.abs() >= RESIDUE_EPS {
        return Err(Error::HermiticityViolation {
            quantity,
            residue: z.im.abs(),
        });
    }
    Ok(z.re)
}

pub fn metric_tensor(pj: &ProjectorJet) -> Result<Metric> {
    let mut g = [[0.0; 2]; 2];
    for mu in 0..2 {
        for nu in mu..2 {
            g[mu][nu] = real_trace(linalg::trace_prod(&pj.dp[mu], &pj.dp[nu]), "metric")?;
        }
    }
    g[1][0] = g[0][1];
    Ok(g)
}

pub fn det2(g: &Metric) -> f64 {
    g[0][0] * g[1][1] - g[0][1] * g[1][0]
}

pub fn christoffel_first(pj: &ProjectorJet) -> Result<Christoffel> {
    let mut out = [[[0.0; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for c in b..2 {
                let z = linalg::trace_prod(&pj.dp[a], &pj.d2p[b][c]);
                out[a][b][c] = real_trace(z, "christoffel")?;
                out[a][c][b] = out[a][b][c];
            }
        }
    }
    Ok(out)
}

/// `∂_μ g_αβ = Γ_αβμ + Γ_βαμ`, indexed `[μ][α][β]`.
pub fn metric_gradient(gamma: &Christoffel) -> [Metric; 2] {
    let mut out = [[[0.0; 2]; 2]; 2];
    for mu in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                out[mu][a][b] = gamma[a][b][mu] + gamma[b][a][mu];
            }
        }
    }
    out
}

/// `R_1212` from the Gauss equation: normal components of the second
/// derivatives of `P`. Never inverts `g`.
pub fn riemann_r1212_normal(pj: &ProjectorJet, frame: &HermitianFrame) -> Result<f64> {
    if frame.dim() != pj.n() {
        return Err(Error::Dimension(format!(
            "frame is for N = {}, jet has N = {}",
            frame.dim(),
            pj.n()
        )));
    }
    let mut r = 0.0;
    for n in frame.normals() {
        let xx = linalg::inner(&pj.d2p[0][0], n);
        let yy = linalg::inner(&pj.d2p[1][1], n);
        let xy = linalg::inner(&pj.d2p[0][1], n);
        r += xx * yy - xy * xy;
    }
    Ok(r)
}

/// `R_1212` from the Gauss equation, split through the Grassmannian. The
/// block-diagonal part of `∂_μ∂_νP` is fixed by `P² = P` and contributes
/// `‖[∂_xP, ∂_yP]‖²` in closed form; only the off-diagonal part, taken
/// normal to the tangents of `frame`, is summed numerically. Equal to
/// [`riemann_r1212_normal`] but free of the O(1) cancellation near folds.
pub fn riemann_r1212_split(pj: &ProjectorJet, frame: &HermitianFrame) -> Result<f64> {
    if frame.dim() != pj.n() {
        return Err(Error::Dimension(format!(
            "frame is for N = {}, jet has N = {}",
            frame.dim(),
            pj.n()
        )));
    }
    let q = linalg::identity(pj.n()) - &pj.p;
    let off = |m: &linalg::CMat| &pj.p * m * &q + &q * m * &pj.p;
    let c = linalg::commutator(&pj.dp[0], &pj.dp[1]);
    let grassmann = linalg::trace_prod(&c.adjoint(), &c).re;

    // Tangents restricted to the Grassmannian's tangent space. Away from
    // folds they already lie there; the limiting tangent on Σ does not.
    let mut tangents: Vec<linalg::CMat> = Vec::with_capacity(2);
    for t in frame.tangents() {
        let mut t = off(t);
        for s in &tangents {
            t -= linalg::scale(s, linalg::inner(&t, s));
        }
        let norm = linalg::inner(&t, &t).sqrt();
        if norm > TANGENT_FLOOR {
            tangents.push(linalg::scale(&t, 1.0 / norm));
        }
    }
    let h = |m: &linalg::CMat| {
        let mut o = off(m);
        for t in &tangents {
            o -= linalg::scale(t, linalg::inner(&o, t));
        }
        o
    };
    let (xx, yy, xy) = (h(&pj.d2p[0][0]), h(&pj.d2p[1][1]), h(&pj.d2p[0][1]));
    Ok(grassmann + linalg::inner(&xx, &yy) - linalg::inner(&xy, &xy))
}

/// `R_1212` from `Γ` and its finite-difference derivatives. Requires a
/// regular point.
pub fn riemann_r1212_intrinsic(spec: &ModelSpec, band: &BandSelection, k: KPoint) -> Result<f64> {
    riemann_r1212_intrinsic_with_step(spec, band, k, CHRISTOFFEL_FD_STEP)
}

pub fn riemann_r1212_intrinsic_with_step(
    spec: &ModelSpec,
    band: &BandSelection,
    k: KPoint,
    h: f64,
) -> Result<f64> {
    let pj = projector::projector_jet(spec, band, k)?;
    let g = metric_tensor(&pj)?;
    let det_g = det2(&g);
    if det_g < SING_EPS {
        return Err(Error::SingularMetric { det_g });
    }
    let gamma = christoffel_first(&pj)?;
    let dgamma = christoffel_gradient(spec, band, k, h)?;
    let ginv = [
        [g[1][1] / det_g, -g[0][1] / det_g],
        [-g[1][0] / det_g, g[0][0] / det_g],
    ];
    // Γ^σ_λμ = g^{σα} Γ_αλμ
    let raise =
        |s: usize, l: usize, m: usize| -> f64 { (0..2).map(|a| ginv[s][a] * gamma[a][l][m]).sum() };
    // R_ρλμν at (ρ, λ, μ, ν) = (0, 1, 0, 1).
    let mut r = dgamma[0][0][1][1] - dgamma[1][0][1][0];
    for s in 0..2 {
        r += raise(s, 1, 0) * gamma[s][0][1] - raise(s, 1, 1) * gamma[s][0][0];
    }
    Ok(r)
}

/// `∂_μ Γ_αβγ` by fourth-order central differences, indexed `[μ][α][β][γ]`.
pub fn christoffel_gradient(
    spec: &ModelSpec,
    band: &BandSelection,
    k: KPoint,
    h: f64,
) -> Result<[Christoffel; 2]> {
    const C: [(f64, f64); 4] = [
        (-2.0, 1.0 / 12.0),
        (-1.0, -2.0 / 3.0),
        (1.0, 2.0 / 3.0),
        (2.0, -1.0 / 12.0),
    ];
    let mut out = [[[[0.0; 2]; 2]; 2]; 2];
    for (mu, slot) in out.iter_mut().enumerate() {
        for &(s, w) in &C {
            let kk = if mu == 0 {
                k.shifted(s * h, 0.0)
            } else {
                k.shifted(0.0, s * h)
            };
            let gam = christoffel_first(&projector::projector_jet(spec, band, kk)?)?;
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        slot[a][b][c] += w * gam[a][b][c] / h;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Frame for the normal route. Where the tangents are parallel (`Σ`), the
/// missing tangent is replaced by its limit from the regular side, the
/// second derivative along the metric's null direction; this keeps
/// `R_1212` continuous across the fold.
pub fn tangent_normal_frame(pj: &ProjectorJet, g: &Metric) -> Result<HermitianFrame> {
    let n = pj.n();
    let frame = normal_frame(&pj.dp[0], &pj.dp[1], n)?;
    if frame.tangent_count == 2 {
        return Ok(frame);
    }
    let eta = null_direction(g);
    let mut second = linalg::zeros(n);
    for mu in 0..2 {
        for nu in 0..2 {
            second += linalg::scale(&pj.d2p[mu][nu], eta[mu] * eta[nu]);
        }
    }
    normal_frame(&frame.mats[0], &second, n)
}

/// Unit eigenvector of the smaller eigenvalue of a symmetric 2×2 matrix.
pub fn null_direction(g: &Metric) -> [f64; 2] {
    let (a, b, c) = (g[0][0], g[0][1], g[1][1]);
    let half_diff = 0.5 * (a - c);
    let lam = 0.5 * (a + c) - half_diff.hypot(b);
    // Rows of (g - lam) are orthogonal to the null vector; use the larger.
    let (r0, r1) = ([a - lam, b], [b, c - lam]);
    let row = if r0[0].hypot(r0[1]) >= r1[0].hypot(r1[1]) {
        r0
    } else {
        r1
    };
    let norm = row[0].hypot(row[1]);
    if norm == 0.0 {
        return [1.0, 0.0];
    }
    [-row[1] / norm, row[0] / norm]
}

/// `K_G = R_1212 / det g`, or `None` at a singular point.
pub fn gauss_curvature(r1212: f64, det_g: f64) -> Option<f64> {
    (det_g >= SING_EPS).then(|| r1212 / det_g)
}

pub fn signed_area_density(pj: &ProjectorJet) -> Result<f64> {
    let t = linalg::trace_prod(&pj.p, &linalg::commutator(&pj.dp[0], &pj.dp[1]));
    // -i (a + ib) = b - ia
    if t.re.abs() >= RESIDUE_EPS {
        return Err(Error::HermiticityViolation {
            quantity: "signed area density",
            residue: t.re.abs(),
        });
    }
    Ok(t.im)
}

/// `∂_μ λ̄` from the second-order jet.
pub fn signed_area_density_gradient(pj: &ProjectorJet) -> [f64; 2] {
    let c = linalg::commutator(&pj.dp[0], &pj.dp[1]);
    let mut out = [0.0; 2];
    for (mu, o) in out.iter_mut().enumerate() {
        let dc = linalg::commutator(&pj.d2p[mu][0], &pj.dp[1])
            + linalg::commutator(&pj.dp[0], &pj.d2p[mu][1]);
        *o = (linalg::trace_prod(&pj.dp[mu], &c) + linalg::trace_prod(&pj.p, &dc)).im;
    }
    out
}

/// `Ω = Im[trace(∂_xP Q ∂_yP) - trace(∂_yP Q ∂_xP)]` with `Q = 1 - P`.
pub fn berry_density_qform(pj: &ProjectorJet) -> f64 {
    let q = linalg::identity(pj.n()) - &pj.p;
    let a = linalg::trace_prod(&(&pj.dp[0] * &q), &pj.dp[1]);
    let b = linalg::trace_prod(&(&pj.dp[1] * &q), &pj.dp[0]);
    (a - b).im
}

/// `λ̄` at one k-point from a first-order projector jet.
pub fn lambda_bar_at(spec: &ModelSpec, band: &BandSelection, k: KPoint) -> Result<f64> {
    let jet = spec.eval_jet(k);
    let energies = projector::eigenvalues(&jet)?;
    let pj = projector::polynomial_projector_jet_first_order(&jet, band, &energies)?;
    signed_area_density(&pj)
}

pub fn geometry_from_jet(k: KPoint, pj: &ProjectorJet) -> Result<QGeometryPoint> {
    let g = metric_tensor(pj)?;
    let det_g = det2(&g);
    let lambda_bar = signed_area_density(pj)?;
    let gamma_first = christoffel_first(pj)?;
    let frame = tangent_normal_frame(pj, &g)?;
    let r1212 = riemann_r1212_split(pj, &frame)?;
    let k_gauss = gauss_curvature(r1212, det_g);
    Ok(QGeometryPoint {
        k,
        g,
        det_g,
        lambda_bar,
        gamma_first,
        r1212,
        k_gauss,
        regular: k_gauss.is_some(),
    })
}

pub fn geometry_point(spec: &ModelSpec, band: &BandSelection, k: KPoint) -> Result<QGeometryPoint> {
    let pj = projector::projector_jet(spec, band, k)?;
    geometry_from_jet(k, &pj)
}
