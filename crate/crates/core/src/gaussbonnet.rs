//! Gauss–Bonnet bookkeeping for the folded two-band surface.
//!
//! With `K_G = 2` the Gauss-curvature integrals reduce to integrals of
//! `2|λ̄|` (unsigned area) and `2λ̄` (signed area), so the report never
//! divides by `det g`. Euler characteristics come from the covering
//! decomposition: `χ(M₊) = 3C - 4`, `χ(M₋) = C`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{RESIDUE_EPS, SING_EPS};
use crate::model::ModelSpec;
use crate::projector::{BandSelection, DEGENERACY_REL, GAP_REL, TRACE_EPS};
use crate::quadrature::{self, VolumeReport};
use crate::singular::{self, CUSP_THETAS, ROOT_TOL};

/// Residuals above this mark the report as not verified.
pub const RESIDUAL_MAX: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub crate_version: &'static str,
    pub model: serde_json::Value,
    pub band: Vec<usize>,
    pub grid_n: usize,
    pub curve_n: usize,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub gap_rel: f64,
    pub degeneracy_rel: f64,
    pub trace: f64,
    pub singular_det_g: f64,
    pub trace_residue: f64,
    pub root: f64,
    pub residual_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gap_rel: GAP_REL,
            degeneracy_rel: DEGENERACY_REL,
            trace: TRACE_EPS,
            singular_det_g: SING_EPS,
            trace_residue: RESIDUE_EPS,
            root: ROOT_TOL,
            residual_max: RESIDUAL_MAX,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussBonnetReport {
    pub chern: i64,
    pub chern_raw: f64,
    pub lattice_chern: i64,
    /// `(1/2π) ∫ K_G dA`.
    pub gauss_integral: f64,
    /// `(1/2π) ∫ K_G dĀ`.
    pub signed_gauss_integral: f64,
    /// `(1/π) ∫ κ_s ds`.
    pub singular_integral: f64,
    pub sum_lhs: f64,
    pub sub_lhs: f64,
    pub sum_rhs: f64,
    pub sub_rhs: f64,
    pub euler_plus: i64,
    pub euler_minus: i64,
    pub cusp_count: usize,
    pub sum_residual: f64,
    pub sub_residual: f64,
    pub verified: bool,
    /// Set when `C ≠ 1`, where the general-degree relations are conjectural.
    pub experimental: bool,
    pub volume: VolumeReport,
    pub provenance: Provenance,
}

pub fn euler_characteristics(chern: i64) -> (i64, i64) {
    (3 * chern - 4, chern)
}

fn fold_regime_m0(spec: &ModelSpec) -> Result<f64> {
    match spec {
        ModelSpec::TwoBandDVector { m0 } if *m0 != 0.0 && m0.abs() < 2.0 => Ok(*m0),
        ModelSpec::TwoBandDVector { m0 } => Err(Error::Unsupported(format!(
            "m0 = {m0} is outside the fold regime 0 < |m0| < 2"
        ))),
        ModelSpec::TightBinding { .. } => Err(Error::Unsupported(
            "the Gauss–Bonnet report needs the built-in two-band model".into(),
        )),
    }
}

/// Assemble the report. For `C ≠ 1` this fails unless `allow_general_c`.
pub fn gauss_bonnet_report(
    spec: &ModelSpec,
    band: &BandSelection,
    grid_n: usize,
    curve_n: usize,
    allow_general_c: bool,
) -> Result<GaussBonnetReport> {
    fold_regime_m0(spec)?;
    let density = quadrature::lambda_bar_grid(spec, band, grid_n)?;
    let chern = quadrature::chern_from_density(spec, band, &density)?;
    let experimental = chern.chern != 1;
    if experimental && !allow_general_c {
        return Err(Error::Unsupported(format!(
            "C = {}: the general-degree relations are experimental and need explicit opt-in",
            chern.chern
        )));
    }
    let volume = quadrature::volume_from_density(&density)?;
    let curve = singular::trace_singular_curve(spec, band, curve_n)?;
    let singular_integral = singular::singular_line_integral(&curve)?;

    let two_pi = 2.0 * PI;
    let gauss_integral = 2.0 * volume.unsigned_volume / two_pi;
    let signed_gauss_integral = 2.0 * volume.signed_volume / two_pi;
    let c = chern.chern;
    let (euler_plus, euler_minus) = euler_characteristics(c);
    let sum_lhs = gauss_integral + singular_integral;
    let sub_lhs = signed_gauss_integral;
    let sum_rhs = 4.0 * (c - 1) as f64;
    let sub_rhs = 2.0 * c as f64;
    let sum_residual = (sum_lhs - sum_rhs).abs();
    let sub_residual = (sub_lhs - sub_rhs).abs();
    Ok(GaussBonnetReport {
        chern: c,
        chern_raw: chern.raw,
        lattice_chern: chern.lattice,
        gauss_integral,
        signed_gauss_integral,
        singular_integral,
        sum_lhs,
        sub_lhs,
        sum_rhs,
        sub_rhs,
        euler_plus,
        euler_minus,
        cusp_count: CUSP_THETAS.len(),
        sum_residual,
        sub_residual,
        verified: sum_residual <= RESIDUAL_MAX && sub_residual <= RESIDUAL_MAX,
        experimental,
        volume,
        provenance: Provenance {
            crate_version: env!("CARGO_PKG_VERSION"),
            model: spec.to_json(),
            band: band.indices().to_vec(),
            grid_n,
            curve_n,
            tolerances: Tolerances::default(),
        },
    })
}
