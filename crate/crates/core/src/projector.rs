//! Gauge-invariant eigenprojector jets.
//!
//! The primary route writes the projector onto a (possibly degenerate) group
//! of bands as a polynomial in `H`, with coefficients given by elementary
//! symmetric polynomials of the remaining eigenvalues. The coefficients are
//! generated by Newton-identity recursions driven by the power sums
//! `p_n = trace(H^n)`, and every derivative of `P` follows from derivatives
//! of `H^n`. No eigenvectors enter, so nothing here depends on a gauge.
//!
//! [`spectral_projector_jet`] is an independent check: projectors from an
//! eigendecomposition, differentiated by central differences.

use nalgebra::linalg::SymmetricEigen;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{HamiltonianJet, KPoint, ModelSpec};

/// Selected bands must be separated from the rest by more than this fraction
/// of the spectral range.
pub const GAP_REL: f64 = 1e-8;
/// Bands closer than this fraction of the spectral range are treated as one
/// degenerate group.
pub const DEGENERACY_REL: f64 = 1e-8;
/// Lower bound on `|trace K|` in the rescaled spectrum.
pub const TRACE_EPS: f64 = 1e-12;

/// A set of band indices, zero-based in ascending-energy order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BandSelection {
    indices: Vec<usize>,
}

impl BandSelection {
    pub fn new(mut indices: Vec<usize>, n_bands: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::BandSelection("no bands selected".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n_bands) {
            return Err(Error::BandSelection(format!(
                "band index {bad} out of range for {n_bands} bands"
            )));
        }
        Ok(Self { indices })
    }

    pub fn single(index: usize) -> Self {
        Self {
            indices: vec![index],
        }
    }

    /// The lowest band.
    pub fn lower() -> Self {
        Self::single(0)
    }

    /// The highest of `n_bands` bands.
    pub fn upper(n_bands: usize) -> Self {
        Self::single(n_bands - 1)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    fn check(&self, n_bands: usize) -> Result<()> {
        match self.indices.last() {
            Some(&last) if last < n_bands => Ok(()),
            _ => Err(Error::BandSelection(format!(
                "selection {:?} does not fit {n_bands} bands",
                self.indices
            ))),
        }
    }
}

/// `P`, `∂_μ P` and `∂_μ ∂_ν P` at one k-point.
#[derive(Debug, Clone)]
pub struct ProjectorJet {
    pub p: CMat,
    pub dp: [CMat; 2],
    pub d2p: [[CMat; 2]; 2],
}

impl ProjectorJet {
    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    fn zeros(n: usize) -> Self {
        let z = || linalg::zeros(n);
        Self {
            p: z(),
            dp: [z(), z()],
            d2p: [[z(), z()], [z(), z()]],
        }
    }

    fn add_assign(&mut self, other: &ProjectorJet) {
        self.p += &other.p;
        for mu in 0..2 {
            self.dp[mu] += &other.dp[mu];
            for nu in 0..2 {
                self.d2p[mu][nu] += &other.d2p[mu][nu];
            }
        }
    }

    /// Largest entry-wise difference over `P`, `∂P` and `∂²P`.
    pub fn max_diff(&self, other: &ProjectorJet) -> (f64, f64, f64) {
        let d0 = linalg::max_abs_diff(&self.p, &other.p);
        let d1 = (0..2)
            .map(|m| linalg::max_abs_diff(&self.dp[m], &other.dp[m]))
            .fold(0.0, f64::max);
        let d2 = (0..2)
            .flat_map(|m| (0..2).map(move |n| (m, n)))
            .map(|(m, n)| linalg::max_abs_diff(&self.d2p[m][n], &other.d2p[m][n]))
            .fold(0.0, f64::max);
        (d0, d1, d2)
    }
}

/// Elementary-symmetric-polynomial data for one degenerate group.
///
/// All spectral quantities live in the rescaled spectrum
/// `(E - shift) / scale`; projectors are unaffected by the affine map.
#[derive(Debug, Clone)]
pub struct SymmetricPolyState {
    pub shift: f64,
    pub scale: f64,
    /// Size `d` of the degenerate group.
    pub degeneracy: usize,
    /// `e_k` of the eigenvalues outside the group, `k = 0..=N-d`.
    pub e: Vec<f64>,
    pub de: Vec<[f64; 2]>,
    pub d2e: Vec<[[f64; 2]; 2]>,
    /// `p_n = trace(H^n)` and its derivatives.
    pub powers: Vec<f64>,
    pub d_powers: Vec<[f64; 2]>,
    pub d2_powers: Vec<[[f64; 2]; 2]>,
    /// `d E^n = trace(H^n P)` for the group and its derivatives.
    pub band_powers: Vec<f64>,
    pub d_band_powers: Vec<[f64; 2]>,
    pub d2_band_powers: Vec<[[f64; 2]; 2]>,
}

/// Ascending eigenvalues of `jet.h`.
pub fn eigenvalues(jet: &HamiltonianJet) -> Result<Vec<f64>> {
    Ok(eigh(&jet.h)?.0)
}

/// Ascending eigenvalues and the matching orthonormal eigenvectors (columns).
pub fn eigh(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = h.nrows();
    let eig = SymmetricEigen::try_new(h.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Eigen(format!("no convergence for {n}x{n} matrix")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Powers `H^m`, `m = 0..count`, with first and second derivatives.
struct PowerTable {
    h: Vec<CMat>,
    dh: Vec<[CMat; 2]>,
    d2h: Vec<[[CMat; 2]; 2]>,
}

impl PowerTable {
    fn new(h: &CMat, dh: &[CMat; 2], d2h: &[[CMat; 2]; 2], count: usize, second: bool) -> Self {
        let n = h.nrows();
        let z = || linalg::zeros(n);
        let mut t = PowerTable {
            h: vec![linalg::identity(n)],
            dh: vec![[z(), z()]],
            d2h: vec![[[z(), z()], [z(), z()]]],
        };
        for m in 1..count {
            let prev = &t.h[m - 1];
            let pd = &t.dh[m - 1];
            let pd2 = &t.d2h[m - 1];
            let cur = prev * h;
            let d = [&pd[0] * h + prev * &dh[0], &pd[1] * h + prev * &dh[1]];
            let mut d2 = [[z(), z()], [z(), z()]];
            for mu in 0..(if second { 2 } else { 0 }) {
                for nu in mu..2 {
                    d2[mu][nu] = &pd2[mu][nu] * h
                        + &pd[mu] * &dh[nu]
                        + &pd[nu] * &dh[mu]
                        + prev * &d2h[mu][nu];
                }
            }
            d2[1][0] = d2[0][1].clone();
            t.h.push(cur);
            t.dh.push(d);
            t.d2h.push(d2);
        }
        t
    }
}

/// Projector jet onto `band` from the Cayley–Hamilton polynomial in `H`.
///
/// `energies` must be the ascending eigenvalues of `jet.h`. Selected bands
/// that are mutually degenerate (within [`DEGENERACY_REL`]) are handled as
/// one group with `trace P = d`; distinct groups are summed.
pub fn polynomial_projector_jet(
    jet: &HamiltonianJet,
    band: &BandSelection,
    energies: &[f64],
) -> Result<ProjectorJet> {
    polynomial_projector_jet_with_state(jet, band, energies).map(|(pj, _)| pj)
}

/// `P` and `∂P` only; the second-derivative slots are left at zero.
pub(crate) fn polynomial_projector_jet_first_order(
    jet: &HamiltonianJet,
    band: &BandSelection,
    energies: &[f64],
) -> Result<ProjectorJet> {
    polynomial_jet(jet, band, energies, false).map(|(pj, _)| pj)
}

/// As [`polynomial_projector_jet`], also returning the per-group recursion
/// state.
pub fn polynomial_projector_jet_with_state(
    jet: &HamiltonianJet,
    band: &BandSelection,
    energies: &[f64],
) -> Result<(ProjectorJet, Vec<SymmetricPolyState>)> {
    polynomial_jet(jet, band, energies, true)
}

fn polynomial_jet(
    jet: &HamiltonianJet,
    band: &BandSelection,
    energies: &[f64],
    second: bool,
) -> Result<(ProjectorJet, Vec<SymmetricPolyState>)> {
    let n = jet.n_bands();
    band.check(n)?;
    if energies.len() != n {
        return Err(Error::Dimension(format!(
            "{} energies for {n} bands",
            energies.len()
        )));
    }
    if band.len() == n {
        return Ok((identity_jet(n), Vec::new()));
    }

    let lo = energies[0];
    let hi = energies[n - 1];
    let range = hi - lo;
    let gap_eps = GAP_REL * range;
    let deg_eps = DEGENERACY_REL * range;

    let groups = degenerate_groups(band, energies, deg_eps);
    for group in &groups {
        let gap = group_gap(group, energies);
        if !(gap > gap_eps) {
            return Err(Error::NearDegeneracy {
                gap,
                threshold: gap_eps,
            });
        }
    }

    let shift = 0.5 * (hi + lo);
    let scale = 0.5 * range;
    let inv = 1.0 / scale;
    let h = (&jet.h - linalg::identity(n).map(|z| z * shift)).map(|z| z * inv);
    let dh = [
        linalg::scale(&jet.dh[0], inv),
        linalg::scale(&jet.dh[1], inv),
    ];
    let d2h = [
        [
            linalg::scale(&jet.d2h[0][0], inv),
            linalg::scale(&jet.d2h[0][1], inv),
        ],
        [
            linalg::scale(&jet.d2h[1][0], inv),
            linalg::scale(&jet.d2h[1][1], inv),
        ],
    ];
    let table = PowerTable::new(&h, &dh, &d2h, n, second);

    let mut total = ProjectorJet::zeros(n);
    let mut states = Vec::with_capacity(groups.len());
    for group in &groups {
        let e_group = group.iter().map(|&i| energies[i]).sum::<f64>() / group.len() as f64;
        let (pj, mut state) =
            group_projector(&table, (e_group - shift) * inv, group.len(), second)?;
        state.shift = shift;
        state.scale = scale;
        total.add_assign(&pj);
        states.push(state);
    }
    Ok((total, states))
}

fn identity_jet(n: usize) -> ProjectorJet {
    let mut pj = ProjectorJet::zeros(n);
    pj.p = linalg::identity(n);
    pj
}

/// Split the selection into runs of consecutive, mutually degenerate bands.
fn degenerate_groups(band: &BandSelection, energies: &[f64], deg_eps: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in band.indices() {
        match groups.last_mut() {
            Some(g) if *g.last().unwrap() + 1 == i && energies[i] - energies[i - 1] <= deg_eps => {
                g.push(i)
            }
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Distance from a group's energy to the closest band outside the group.
fn group_gap(group: &[usize], energies: &[f64]) -> f64 {
    let first = group[0];
    let last = *group.last().unwrap();
    let below = first
        .checked_sub(1)
        .map(|j| energies[first] - energies[j])
        .unwrap_or(f64::INFINITY);
    let above = energies
        .get(last + 1)
        .map(|e| e - energies[last])
        .unwrap_or(f64::INFINITY);
    below.min(above)
}

fn group_projector(
    t: &PowerTable,
    energy: f64,
    d: usize,
    second: bool,
) -> Result<(ProjectorJet, SymmetricPolyState)> {
    let n = t.h[0].nrows();
    let top = n - d; // highest power of H in K
    let df = d as f64;
    let z2 = [[0.0; 2]; 2];

    let powers: Vec<f64> = (0..=top).map(|m| linalg::trace(&t.h[m]).re).collect();
    let d_powers: Vec<[f64; 2]> = (0..=top)
        .map(|m| [linalg::trace(&t.dh[m][0]).re, linalg::trace(&t.dh[m][1]).re])
        .collect();
    let d2_powers: Vec<[[f64; 2]; 2]> = (0..=top)
        .map(|m| {
            let tr = |a: usize, b: usize| linalg::trace(&t.d2h[m][a][b]).re;
            [[tr(0, 0), tr(0, 1)], [tr(1, 0), tr(1, 1)]]
        })
        .collect();
    let band_powers: Vec<f64> = (0..=top).map(|m| df * energy.powi(m as i32)).collect();

    // e_k of the eigenvalues outside the group.
    let mut e = vec![0.0; top + 1];
    e[0] = 1.0;
    for k in 1..=top {
        let mut acc = 0.0;
        for m in 1..=k {
            acc += sign(m + 1) * (powers[m] - band_powers[m]) * e[k - m];
        }
        e[k] = acc / k as f64;
    }

    let k0 = poly_sum(top, |k| e[k], |m| &t.h[m]);
    let tr_k = linalg::trace(&k0).re;
    if !(tr_k.abs() >= TRACE_EPS) {
        return Err(Error::TraceBreakdown {
            value: tr_k.abs(),
            threshold: TRACE_EPS,
        });
    }
    let p = linalg::scale(&k0, df / tr_k);

    // First derivatives. The trace(H^n ∂P) part of ∂(d E^n) vanishes
    // identically, so the group power derivatives only need P.
    let d_band_powers: Vec<[f64; 2]> = (0..=top)
        .map(|m| {
            [
                linalg::inner(&t.dh[m][0], &p),
                linalg::inner(&t.dh[m][1], &p),
            ]
        })
        .collect();
    let mut de = vec![[0.0; 2]; top + 1];
    for k in 1..=top {
        for mu in 0..2 {
            let mut acc = 0.0;
            for m in 1..=k {
                acc += sign(m + 1)
                    * ((d_powers[m][mu] - d_band_powers[m][mu]) * e[k - m]
                        + (powers[m] - band_powers[m]) * de[k - m][mu]);
            }
            de[k][mu] = acc / k as f64;
        }
    }
    let mut dk: [CMat; 2] = [linalg::zeros(n), linalg::zeros(n)];
    let mut dp: [CMat; 2] = [linalg::zeros(n), linalg::zeros(n)];
    let mut tr_dk = [0.0; 2];
    for mu in 0..2 {
        dk[mu] =
            poly_sum(top, |k| de[k][mu], |m| &t.h[m]) + poly_sum(top, |k| e[k], |m| &t.dh[m][mu]);
        tr_dk[mu] = linalg::trace(&dk[mu]).re;
        dp[mu] = (linalg::scale(&dk[mu], df) - linalg::scale(&p, tr_dk[mu])).map(|z| z / tr_k);
    }

    if !second {
        let z = || linalg::zeros(n);
        let state = SymmetricPolyState {
            shift: 0.0,
            scale: 1.0,
            degeneracy: d,
            d2e: vec![z2; top + 1],
            d2_band_powers: vec![z2; top + 1],
            e,
            de,
            powers,
            d_powers,
            d2_powers,
            band_powers,
            d_band_powers,
        };
        let d2p = [[z(), z()], [z(), z()]];
        return Ok((ProjectorJet { p, dp, d2p }, state));
    }

    // Second derivatives consume ∂P through ∂_μ∂_ν(d E^n).
    let d2_band_powers: Vec<[[f64; 2]; 2]> = (0..=top)
        .map(|m| {
            let mut out = z2;
            for mu in 0..2 {
                for nu in 0..2 {
                    out[mu][nu] =
                        linalg::inner(&t.d2h[m][mu][nu], &p) + linalg::inner(&t.dh[m][mu], &dp[nu]);
                }
            }
            out
        })
        .collect();
    let mut d2e = vec![z2; top + 1];
    for k in 1..=top {
        for mu in 0..2 {
            for nu in mu..2 {
                let mut acc = 0.0;
                for m in 1..=k {
                    let r = powers[m] - band_powers[m];
                    let r_mu = d_powers[m][mu] - d_band_powers[m][mu];
                    let r_nu = d_powers[m][nu] - d_band_powers[m][nu];
                    let r_mn = d2_powers[m][mu][nu] - d2_band_powers[m][mu][nu];
                    acc += sign(m + 1)
                        * (r_mn * e[k - m]
                            + r_mu * de[k - m][nu]
                            + r_nu * de[k - m][mu]
                            + r * d2e[k - m][mu][nu]);
                }
                d2e[k][mu][nu] = acc / k as f64;
            }
        }
        d2e[k][1][0] = d2e[k][0][1];
    }

    let mut d2p = [
        [linalg::zeros(n), linalg::zeros(n)],
        [linalg::zeros(n), linalg::zeros(n)],
    ];
    for mu in 0..2 {
        for nu in mu..2 {
            let d2k = poly_sum(top, |k| d2e[k][mu][nu], |m| &t.h[m])
                + poly_sum(top, |k| e[k], |m| &t.d2h[m][mu][nu])
                + poly_sum(top, |k| de[k][mu], |m| &t.dh[m][nu])
                + poly_sum(top, |k| de[k][nu], |m| &t.dh[m][mu]);
            let tr_d2k = linalg::trace(&d2k).re;
            d2p[mu][nu] = (linalg::scale(&d2k, df)
                - linalg::scale(&p, tr_d2k)
                - linalg::scale(&dp[nu], tr_dk[mu])
                - linalg::scale(&dp[mu], tr_dk[nu]))
            .map(|z| z / tr_k);
        }
    }
    d2p[1][0] = d2p[0][1].clone();

    let state = SymmetricPolyState {
        shift: 0.0,
        scale: 1.0,
        degeneracy: d,
        e,
        de,
        d2e,
        powers,
        d_powers,
        d2_powers,
        band_powers,
        d_band_powers,
        d2_band_powers,
    };
    Ok((ProjectorJet { p, dp, d2p }, state))
}

/// `Σ_k (-1)^k c_k M_{top-k}`.
fn poly_sum<'a>(top: usize, coef: impl Fn(usize) -> f64, mats: impl Fn(usize) -> &'a CMat) -> CMat {
    let mut acc = linalg::zeros(mats(0).nrows());
    for k in 0..=top {
        let c = sign(k) * coef(k);
        if c != 0.0 {
            acc += linalg::scale(mats(top - k), c);
        }
    }
    acc
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Evaluate the Hamiltonian, diagonalize for the energies and build the
/// polynomial projector jet.
pub fn projector_jet(spec: &ModelSpec, band: &BandSelection, k: KPoint) -> Result<ProjectorJet> {
    let jet = spec.eval_jet(k);
    let energies = eigenvalues(&jet)?;
    polynomial_projector_jet(&jet, band, &energies)
}

const D1: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];

/// Projector jet from eigendecompositions on a 5×5 stencil of spacing `h`,
/// differentiated with fourth-order central differences.
pub fn spectral_projector_jet(
    spec: &ModelSpec,
    k: KPoint,
    band: &BandSelection,
    h: f64,
) -> Result<ProjectorJet> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::StencilStep(h));
    }
    let n = spec.n_bands();
    band.check(n)?;

    let (e0, v0) = eigh(&spec.eval_jet(k).h)?;
    let range = e0[n - 1] - e0[0];
    let gap0 = selection_gap(band, &e0);
    if band.len() < n && !(gap0 > GAP_REL * range) {
        return Err(Error::NearDegeneracy {
            gap: gap0,
            threshold: GAP_REL * range,
        });
    }

    let mut grid: Vec<CMat> = Vec::with_capacity(25);
    for i in -2..=2 {
        for j in -2..=2 {
            let kk = k.shifted(i as f64 * h, j as f64 * h);
            let (e, v) = if i == 0 && j == 0 {
                (e0.clone(), v0.clone())
            } else {
                eigh(&spec.eval_jet(kk).h)?
            };
            if band.len() < n {
                let gap = selection_gap(band, &e);
                let drift = band
                    .indices()
                    .iter()
                    .map(|&b| (e[b] - e0[b]).abs())
                    .fold(0.0, f64::max);
                if !(gap > GAP_REL * range) || drift >= 0.5 * gap0 {
                    return Err(Error::StencilCrossing {
                        kx: kk.kx,
                        ky: kk.ky,
                    });
                }
            }
            grid.push(projector_from_vectors(&v, band));
        }
    }
    let at = |i: usize, j: usize| &grid[i * 5 + j];

    let mut dp = [linalg::zeros(n), linalg::zeros(n)];
    let mut d2p = [
        [linalg::zeros(n), linalg::zeros(n)],
        [linalg::zeros(n), linalg::zeros(n)],
    ];
    for s in 0..5 {
        dp[0] += linalg::scale(at(s, 2), D1[s] / h);
        dp[1] += linalg::scale(at(2, s), D1[s] / h);
        d2p[0][0] += linalg::scale(at(s, 2), D2[s] / (h * h));
        d2p[1][1] += linalg::scale(at(2, s), D2[s] / (h * h));
        for t in 0..5 {
            let c = D1[s] * D1[t];
            if c != 0.0 {
                d2p[0][1] += linalg::scale(at(s, t), c / (h * h));
            }
        }
    }
    d2p[1][0] = d2p[0][1].clone();
    Ok(ProjectorJet {
        p: at(2, 2).clone(),
        dp,
        d2p,
    })
}

fn projector_from_vectors(v: &CMat, band: &BandSelection) -> CMat {
    let n = v.nrows();
    let mut p = linalg::zeros(n);
    for &b in band.indices() {
        let col = v.column(b);
        p += col * col.adjoint();
    }
    p
}

/// Smallest gap between a selected and an unselected band.
fn selection_gap(band: &BandSelection, energies: &[f64]) -> f64 {
    let mut gap = f64::INFINITY;
    for &s in band.indices() {
        for (j, &e) in energies.iter().enumerate() {
            if !band.contains(j) {
                gap = gap.min((energies[s] - e).abs());
            }
        }
    }
    gap
}
