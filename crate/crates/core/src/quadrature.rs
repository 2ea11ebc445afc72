//! Brillouin-zone sampling and integration.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry;
use crate::linalg::{self, CMat};
use crate::model::{KPoint, ModelSpec};
use crate::projector::{self, BandSelection};

pub const MIN_GRID: usize = 8;
/// Largest allowed distance of the raw Chern integral from an integer.
pub const CHERN_RESIDUAL_MAX: f64 = 0.01;

/// Values on the periodic grid `k = (2πi/n, 2πj/n)`, stored with `i` (the
/// `k_x` index) major.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub n: usize,
    pub values: Vec<f64>,
    pub field_name: String,
}

pub fn grid_point(n: usize, i: usize, j: usize) -> KPoint {
    let h = 2.0 * PI / n as f64;
    KPoint::new(h * i as f64, h * j as f64)
}

impl FieldGrid {
    pub fn new(n: usize, values: Vec<f64>, field_name: impl Into<String>) -> Result<Self> {
        if n < MIN_GRID {
            return Err(Error::GridTooSmall(n));
        }
        if values.len() != n * n {
            return Err(Error::Dimension(format!(
                "{} values for an {n}x{n} grid",
                values.len()
            )));
        }
        Ok(Self {
            n,
            values,
            field_name: field_name.into(),
        })
    }

    /// Sample `f` at every grid point, rows in parallel.
    pub fn try_sample<F>(n: usize, field_name: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(KPoint) -> Result<f64> + Sync,
    {
        if n < MIN_GRID {
            return Err(Error::GridTooSmall(n));
        }
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| f(grid_point(n, i, j)))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Self::new(n, rows.concat(), field_name)
    }

    pub fn sample<F>(n: usize, field_name: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(KPoint) -> f64 + Sync,
    {
        Self::try_sample(n, field_name, |k| Ok(f(k)))
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn map(&self, field_name: impl Into<String>, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|&v| f(v)).collect(),
            field_name: field_name.into(),
        }
    }

    /// CSV with header `kx,ky,<field_name>`, row-major, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "kx,ky,{}", self.field_name)?;
        for i in 0..self.n {
            for j in 0..self.n {
                let k = grid_point(self.n, i, j);
                writeln!(
                    w,
                    "{},{},{}",
                    fmt17(k.kx),
                    fmt17(k.ky),
                    fmt17(self.at(i, j))
                )?;
            }
        }
        Ok(())
    }
}

/// Shortest round-trip form is at most 17 significant digits; scientific
/// form keeps the width bounded.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Periodic trapezoid rule: `(2π/n)² Σ values`, summed pairwise.
pub fn bz_integrate(field: &FieldGrid) -> Result<f64> {
    let bad: Vec<(usize, usize)> = field
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_nan())
        .map(|(idx, _)| (idx / field.n, idx % field.n))
        .collect();
    if !bad.is_empty() {
        return Err(Error::PoisonedGrid { indices: bad });
    }
    let h = 2.0 * PI / field.n as f64;
    Ok(h * h * linalg::pairwise_sum(&field.values))
}

pub fn lambda_bar_grid(spec: &ModelSpec, band: &BandSelection, n: usize) -> Result<FieldGrid> {
    FieldGrid::try_sample(n, "lambda_bar", |k| geometry::lambda_bar_at(spec, band, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernResult {
    pub chern: i64,
    /// `(1/2π) ∫ λ̄ d²k`.
    pub raw: f64,
    pub residual: f64,
    /// Integer from the plaquette oracle.
    pub lattice: i64,
}

/// Chern number from the integrated density, cross-checked against the
/// plaquette oracle.
pub fn chern_number(spec: &ModelSpec, band: &BandSelection, n: usize) -> Result<ChernResult> {
    let density = lambda_bar_grid(spec, band, n)?;
    chern_from_density(spec, band, &density)
}

pub fn chern_from_density(
    spec: &ModelSpec,
    band: &BandSelection,
    density: &FieldGrid,
) -> Result<ChernResult> {
    let raw = bz_integrate(density)? / (2.0 * PI);
    let chern = raw.round();
    let residual = (raw - chern).abs();
    if residual > CHERN_RESIDUAL_MAX {
        return Err(Error::ChernNotConverged { raw, residual });
    }
    let chern = chern as i64;
    let lattice = lattice_chern(spec, band, density.n)?;
    if lattice != chern {
        return Err(Error::ChernMismatch {
            density: chern,
            lattice,
        });
    }
    Ok(ChernResult {
        chern,
        raw,
        residual,
        lattice,
    })
}

/// Plaquette (lattice field-strength) Chern number: the phase of the
/// determinant of overlap products around each cell, summed over the zone.
/// Eigenvector phases cancel around every closed loop.
pub fn lattice_chern(spec: &ModelSpec, band: &BandSelection, n: usize) -> Result<i64> {
    Ok(lattice_chern_raw(spec, band, n)?.round() as i64)
}

pub fn lattice_chern_raw(spec: &ModelSpec, band: &BandSelection, n: usize) -> Result<f64> {
    if n < MIN_GRID {
        return Err(Error::GridTooSmall(n));
    }
    let nb = spec.n_bands();
    let cols: Vec<usize> = band.indices().to_vec();
    if cols.iter().any(|&c| c >= nb) {
        return Err(Error::BandSelection(format!(
            "selection {cols:?} does not fit {nb} bands"
        )));
    }
    let frames: Vec<Vec<CMat>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (_, v) = projector::eigh(&spec.eval_jet(grid_point(n, i, j)).h)?;
                    Ok(v.select_columns(&cols))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let link = |a: &CMat, b: &CMat| -> Complex64 { (a.adjoint() * b).determinant() };
    let phases: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let frames = &frames;
            (0..n).map(move |j| {
                let ip = (i + 1) % n;
                let jp = (j + 1) % n;
                let v1 = &frames[i][j];
                let v2 = &frames[ip][j];
                let v3 = &frames[ip][jp];
                let v4 = &frames[i][jp];
                (link(v1, v2) * link(v2, v3) * link(v3, v4) * link(v4, v1)).arg()
            })
        })
        .collect();
    Ok(linalg::pairwise_sum(&phases) / (2.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeReport {
    pub grid_n: usize,
    pub unsigned_volume: f64,
    pub signed_volume: f64,
    pub area_m3: f64,
    pub area_m1: f64,
    pub chern_from_density: f64,
    pub chern_rounded: i64,
}

impl VolumeReport {
    /// The same report with every area divided by `2π`.
    pub fn in_units_of_2pi(&self) -> [f64; 4] {
        let s = 2.0 * PI;
        [
            self.unsigned_volume / s,
            self.signed_volume / s,
            self.area_m3 / s,
            self.area_m1 / s,
        ]
    }
}

/// Quantum volumes of a two-band model. `√det g` is taken as `|λ̄|`.
pub fn volume_report(spec: &ModelSpec, band: &BandSelection, n: usize) -> Result<VolumeReport> {
    if spec.n_bands() != 2 {
        return Err(Error::Unsupported(
            "volume report assumes a two-band model".into(),
        ));
    }
    let density = lambda_bar_grid(spec, band, n)?;
    volume_from_density(&density)
}

pub fn volume_from_density(density: &FieldGrid) -> Result<VolumeReport> {
    let signed = bz_integrate(density)?;
    let unsigned = bz_integrate(&density.map("abs_lambda_bar", f64::abs))?;
    let tol = 1e-9 * unsigned.abs().max(1.0);
    if unsigned < signed.abs() - tol {
        return Err(Error::IntegrationInconsistency { unsigned, signed });
    }
    // The region whose orientation opposes the total is covered once.
    let orient = if signed >= 0.0 { -1.0 } else { 1.0 };
    let area_m3 = bz_integrate(&density.map("opposite", |v| (orient * v).max(0.0)))?;
    let closed_form = 0.5 * (unsigned - signed.abs());
    if (area_m3 - closed_form).abs() > tol {
        return Err(Error::IntegrationInconsistency { unsigned, signed });
    }
    let chern = signed / (2.0 * PI);
    Ok(VolumeReport {
        grid_n: density.n,
        unsigned_volume: unsigned,
        signed_volume: signed,
        area_m3,
        area_m1: signed.abs() - area_m3,
        chern_from_density: chern,
        chern_rounded: chern.round() as i64,
    })
}
