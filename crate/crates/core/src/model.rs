//! Bloch Hamiltonian families and their second-order jets in k.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Crystal momentum. Components are kept as given; comparisons and the
/// canonical representative work modulo 2π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KPoint {
    pub kx: f64,
    pub ky: f64,
}

impl KPoint {
    pub const fn new(kx: f64, ky: f64) -> Self {
        Self { kx, ky }
    }

    /// Representative in `[0, 2π)²`.
    pub fn wrapped(self) -> Self {
        Self::new(wrap(self.kx), wrap(self.ky))
    }

    /// Equality modulo the reciprocal lattice, to within `tol`.
    pub fn approx_eq(self, other: KPoint, tol: f64) -> bool {
        periodic_distance(self.kx, other.kx) <= tol && periodic_distance(self.ky, other.ky) <= tol
    }

    pub fn shifted(self, dx: f64, dy: f64) -> Self {
        Self::new(self.kx + dx, self.ky + dy)
    }

    pub fn is_finite(self) -> bool {
        self.kx.is_finite() && self.ky.is_finite()
    }
}

fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn periodic_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// `H(k)` with its exact first and second derivatives.
#[derive(Debug, Clone)]
pub struct HamiltonianJet {
    pub h: CMat,
    pub dh: [CMat; 2],
    pub d2h: [[CMat; 2]; 2],
}

impl HamiltonianJet {
    pub fn n_bands(&self) -> usize {
        self.h.nrows()
    }

    /// Conjugate every component by a constant unitary `u`: `X -> u X u†`.
    pub fn conjugated(&self, u: &CMat) -> Self {
        let c = |m: &CMat| u * m * u.adjoint();
        Self {
            h: c(&self.h),
            dh: [c(&self.dh[0]), c(&self.dh[1])],
            d2h: [
                [c(&self.d2h[0][0]), c(&self.d2h[0][1])],
                [c(&self.d2h[1][0]), c(&self.d2h[1][1])],
            ],
        }
    }
}

/// One Fourier component `amplitude · e^{i k·dR}` of a tight-binding model.
#[derive(Debug, Clone, PartialEq)]
pub struct Hopping {
    pub dr: [i64; 2],
    pub amplitude: CMat,
}

/// A validated model family.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// `H = d(k)·σ` with `d = (sin kx, sin ky, m0 - cos kx - cos ky)`.
    TwoBandDVector { m0: f64 },
    TightBinding {
        n_bands: usize,
        hoppings: Vec<Hopping>,
    },
}

impl ModelSpec {
    pub fn two_band(m0: f64) -> Self {
        ModelSpec::TwoBandDVector { m0 }
    }

    /// Build a tight-binding model, merging repeated `dR` entries and
    /// checking the Hermiticity pairing `A(-dR) = A(dR)†`.
    pub fn tight_binding(n_bands: usize, hoppings: Vec<Hopping>) -> Result<Self> {
        if n_bands == 0 {
            return Err(Error::InvalidModel("n_bands must be positive".into()));
        }
        let mut merged: Vec<Hopping> = Vec::with_capacity(hoppings.len());
        for (index, hop) in hoppings.into_iter().enumerate() {
            if hop.amplitude.nrows() != n_bands || hop.amplitude.ncols() != n_bands {
                return Err(Error::InvalidModel(format!(
                    "hopping #{index} amplitude is {}x{}, expected {n_bands}x{n_bands}",
                    hop.amplitude.nrows(),
                    hop.amplitude.ncols()
                )));
            }
            if hop
                .amplitude
                .iter()
                .any(|z| !z.re.is_finite() || !z.im.is_finite())
            {
                return Err(Error::InvalidModel(format!(
                    "hopping #{index} has non-finite entries"
                )));
            }
            match merged.iter_mut().find(|h| h.dr == hop.dr) {
                Some(existing) => existing.amplitude += hop.amplitude,
                None => merged.push(hop),
            }
        }
        for (index, hop) in merged.iter().enumerate() {
            let partner_dr = [-hop.dr[0], -hop.dr[1]];
            let scale = 1.0 + linalg::max_abs(&hop.amplitude);
            let pair_err = |reason: String| Error::HermiticityPair {
                index,
                dx: hop.dr[0],
                dy: hop.dr[1],
                reason,
            };
            match merged.iter().find(|h| h.dr == partner_dr) {
                None => {
                    return Err(pair_err(format!(
                        "no entry for dR = ({}, {})",
                        partner_dr[0], partner_dr[1]
                    )))
                }
                Some(partner) => {
                    let defect = linalg::max_abs_diff(&partner.amplitude, &hop.amplitude.adjoint());
                    if defect > 1e-12 * scale {
                        return Err(pair_err(format!(
                            "A(-dR) differs from A(dR)^dagger by {defect:e}"
                        )));
                    }
                }
            }
        }
        Ok(ModelSpec::TightBinding {
            n_bands,
            hoppings: merged,
        })
    }

    pub fn n_bands(&self) -> usize {
        match self {
            ModelSpec::TwoBandDVector { .. } => 2,
            ModelSpec::TightBinding { n_bands, .. } => *n_bands,
        }
    }

    /// Same Hamiltonian written as Fourier components.
    pub fn to_tight_binding(&self) -> ModelSpec {
        match self {
            ModelSpec::TightBinding { .. } => self.clone(),
            ModelSpec::TwoBandDVector { m0 } => {
                let [sx, sy, sz] = linalg::pauli();
                let half_i = Complex64::new(0.0, -0.5); // 1/(2i)
                let hop = |dr: [i64; 2], amplitude: CMat| Hopping { dr, amplitude };
                // sin k = (e^{ik} - e^{-ik}) / 2i, cos k = (e^{ik} + e^{-ik}) / 2
                let hx = sx.map(|z| z * half_i) - linalg::scale(&sz, 0.5);
                let hy = sy.map(|z| z * half_i) - linalg::scale(&sz, 0.5);
                ModelSpec::TightBinding {
                    n_bands: 2,
                    hoppings: vec![
                        hop([0, 0], linalg::scale(&sz, *m0)),
                        hop([1, 0], hx.clone()),
                        hop([-1, 0], hx.adjoint()),
                        hop([0, 1], hy.clone()),
                        hop([0, -1], hy.adjoint()),
                    ],
                }
            }
        }
    }

    /// Conjugate the model by a constant unitary.
    pub fn conjugated(&self, u: &CMat) -> Result<ModelSpec> {
        match self.to_tight_binding() {
            ModelSpec::TightBinding { n_bands, hoppings } => {
                if u.nrows() != n_bands || u.ncols() != n_bands {
                    return Err(Error::Dimension(format!(
                        "unitary is {}x{}, model has {n_bands} bands",
                        u.nrows(),
                        u.ncols()
                    )));
                }
                let hoppings = hoppings
                    .into_iter()
                    .map(|h| Hopping {
                        dr: h.dr,
                        amplitude: u * h.amplitude * u.adjoint(),
                    })
                    .collect();
                Ok(ModelSpec::TightBinding { n_bands, hoppings })
            }
            ModelSpec::TwoBandDVector { .. } => unreachable!(),
        }
    }

    pub fn eval_jet(&self, k: KPoint) -> HamiltonianJet {
        match self {
            ModelSpec::TwoBandDVector { m0 } => two_band_jet(*m0, k),
            ModelSpec::TightBinding { n_bands, hoppings } => {
                tight_binding_jet(*n_bands, hoppings, k)
            }
        }
    }

    /// Parameters as a JSON document in the model-file format.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            ModelSpec::TwoBandDVector { m0 } => serde_json::json!({
                "kind": "two_band_d_vector",
                "m0": m0,
            }),
            ModelSpec::TightBinding { n_bands, hoppings } => {
                let hops: Vec<RawHopping> = hoppings
                    .iter()
                    .map(|h| RawHopping {
                        dr: h.dr,
                        re: rows(&h.amplitude, |z| z.re),
                        im: Some(rows(&h.amplitude, |z| z.im)),
                    })
                    .collect();
                serde_json::json!({
                    "kind": "tight_binding",
                    "n_bands": n_bands,
                    "hoppings": hops,
                })
            }
        }
    }
}

fn rows(m: &CMat, f: impl Fn(&Complex64) -> f64) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
        .collect()
}

/// Evaluate the jet at `k`. Convenience wrapper around [`ModelSpec::eval_jet`].
pub fn eval_jet(spec: &ModelSpec, k: KPoint) -> HamiltonianJet {
    spec.eval_jet(k)
}

fn two_band_jet(m0: f64, k: KPoint) -> HamiltonianJet {
    let (sx, cx) = k.kx.sin_cos();
    let (sy, cy) = k.ky.sin_cos();
    let h = linalg::pauli_dot([sx, sy, m0 - cx - cy]);
    let dhx = linalg::pauli_dot([cx, 0.0, sx]);
    let dhy = linalg::pauli_dot([0.0, cy, sy]);
    let hxx = linalg::pauli_dot([-sx, 0.0, cx]);
    let hyy = linalg::pauli_dot([0.0, -sy, cy]);
    let hxy = linalg::zeros(2);
    HamiltonianJet {
        h,
        dh: [dhx, dhy],
        d2h: [[hxx, hxy.clone()], [hxy, hyy]],
    }
}

fn tight_binding_jet(n: usize, hoppings: &[Hopping], k: KPoint) -> HamiltonianJet {
    let mut h = linalg::zeros(n);
    let mut dh = [linalg::zeros(n), linalg::zeros(n)];
    let mut d2h = [
        [linalg::zeros(n), linalg::zeros(n)],
        [linalg::zeros(n), linalg::zeros(n)],
    ];
    for hop in hoppings {
        let r = [hop.dr[0] as f64, hop.dr[1] as f64];
        let phase = Complex64::from_polar(1.0, k.kx * r[0] + k.ky * r[1]);
        let term = hop.amplitude.map(|z| z * phase);
        for mu in 0..2 {
            dh[mu] += term.map(|z| z * Complex64::new(0.0, r[mu]));
            for nu in mu..2 {
                d2h[mu][nu] -= linalg::scale(&term, r[mu] * r[nu]);
            }
        }
        h += term;
    }
    d2h[1][0] = d2h[0][1].clone();
    HamiltonianJet { h, dh, d2h }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawModel {
    TwoBandDVector {
        m0: f64,
    },
    TightBinding {
        n_bands: usize,
        hoppings: Vec<RawHopping>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHopping {
    #[serde(rename = "dR")]
    dr: [i64; 2],
    re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    im: Option<Vec<Vec<f64>>>,
}

/// Parse and validate a JSON model document.
pub fn parse_model_spec(text: &[u8]) -> Result<ModelSpec> {
    let raw: RawModel = serde_json::from_slice(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    match raw {
        RawModel::TwoBandDVector { m0 } => {
            if !m0.is_finite() {
                return Err(Error::InvalidModel("m0 must be finite".into()));
            }
            Ok(ModelSpec::TwoBandDVector { m0 })
        }
        RawModel::TightBinding { n_bands, hoppings } => {
            let mut hops = Vec::with_capacity(hoppings.len());
            for (index, raw) in hoppings.into_iter().enumerate() {
                let im = raw.im.unwrap_or_else(|| vec![vec![0.0; n_bands]; n_bands]);
                let amplitude = linalg::from_real_imag(&raw.re, &im, n_bands).ok_or_else(|| {
                    Error::InvalidModel(format!(
                        "hoppings[{index}]: re/im must both be {n_bands}x{n_bands}"
                    ))
                })?;
                hops.push(Hopping {
                    dr: raw.dr,
                    amplitude,
                });
            }
            ModelSpec::tight_binding(n_bands, hops)
        }
    }
}
