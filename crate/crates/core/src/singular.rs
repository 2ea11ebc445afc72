//! The fold curve `Σ = {det g = 0}` of the two-band model, its adapted
//! frame, singular curvature and line integral.
//!
//! `Σ` is traced as the zero set of `λ̄`, which changes sign across the fold
//! and has no poles. On `Σ` the model satisfies `sec k_x + sec k_y = m0`, and
//! the adapted fields `u`, `v` are coordinate fields of
//! `(ln|sin k_x / sin k_y|, sec k_x + sec k_y)`, so they commute.
//!
//! `κ_s` is evaluated as the geodesic curvature of the image of `Σ`. The
//! adapted-frame expression gives the same number but its numerator cancels
//! to a few digits within a grid spacing of a cusp, so it is kept as a check.

use std::f64::consts::{FRAC_PI_4, PI};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, Metric};
use crate::jet::{self, Jet2};
use crate::linalg;
use crate::model::{KPoint, ModelSpec};
use crate::projector::{self, BandSelection, ProjectorJet};
use crate::quadrature::fmt17;

pub const MIN_SAMPLES: usize = 64;
/// Bisection stops once `|λ̄|` is below this.
pub const ROOT_TOL: f64 = 1e-12;
/// Adapted fields are refused when `|cos k_x|` or `|cos k_y|` is below this.
pub const CUSP_EPS: f64 = 1e-8;
/// Smallest acceptable `|λ̄_v|`.
pub const DENOM_EPS: f64 = 1e-10;
/// Step for the metric Hessian (differences of the exact metric gradient).
pub const HESSIAN_FD_STEP: f64 = 1e-4;
/// Samples closer than this (in angle) to a cusp direction are dropped.
pub const CUSP_ANGLE_SKIP: f64 = 1e-12;

const RAY_STEPS: usize = 128;

/// Directions from the center toward the four cusp preimages.
pub const CUSP_THETAS: [f64; 4] = [FRAC_PI_4, 3.0 * FRAC_PI_4, 5.0 * FRAC_PI_4, 7.0 * FRAC_PI_4];

#[derive(Debug, Clone, Serialize)]
pub struct SingularSample {
    pub theta: f64,
    pub k: KPoint,
    pub u: [f64; 2],
    pub v: [f64; 2],
    #[serde(rename = "E")]
    pub e: f64,
    pub lambda_bar_v: f64,
    pub kappa_s: f64,
    pub ds: f64,
    pub is_cusp_adjacent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularCurve {
    pub center: KPoint,
    pub n_samples: usize,
    pub samples: Vec<SingularSample>,
    pub cusp_thetas: [f64; 4],
}

impl SingularCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "theta,kx,ky,u1,u2,v1,v2,E,lambda_bar_v,kappa_s,ds")?;
        for s in &self.samples {
            let row = [
                s.theta,
                s.k.kx,
                s.k.ky,
                s.u[0],
                s.u[1],
                s.v[0],
                s.v[1],
                s.e,
                s.lambda_bar_v,
                s.kappa_s,
                s.ds,
            ];
            let cells: Vec<String> = row.iter().map(|&x| fmt17(x)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// The point the fold curve winds around: `(π, π)` for `m0 > 0`, the zone
/// origin for `m0 < 0`.
pub fn curve_center(spec: &ModelSpec) -> KPoint {
    match spec {
        ModelSpec::TwoBandDVector { m0 } if *m0 < 0.0 => KPoint::new(0.0, 0.0),
        _ => KPoint::new(PI, PI),
    }
}

pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

pub fn distance_to_cusp_theta(theta: f64) -> f64 {
    CUSP_THETAS
        .iter()
        .map(|&c| angular_distance(theta, c))
        .fold(f64::INFINITY, f64::min)
}

/// First sign change of `λ̄` along the ray from `center` at angle `theta`,
/// refined by bisection. Returns the radius and the (unwrapped) point.
pub fn root_on_ray(
    spec: &ModelSpec,
    band: &BandSelection,
    center: KPoint,
    theta: f64,
) -> Result<(f64, KPoint)> {
    let (s, c) = theta.sin_cos();
    let at = |r: f64| center.shifted(r * c, r * s);
    let f = |r: f64| geometry::lambda_bar_at(spec, band, at(r));
    let r_max = PI / c.abs().max(s.abs());
    let r_min = 1e-3 * r_max;
    let step = (r_max - r_min) / RAY_STEPS as f64;

    let mut lo = r_min;
    let mut f_lo = f(lo)?;
    let mut bracket = None;
    for i in 1..=RAY_STEPS {
        let hi = r_min + step * i as f64;
        let f_hi = f(hi)?;
        if f_lo == 0.0 {
            return Ok((lo, at(lo)));
        }
        if f_lo * f_hi <= 0.0 {
            bracket = Some((lo, hi, f_lo));
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    let (mut a, mut b, mut fa) = bracket.ok_or(Error::TopologyMismatch { theta })?;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    let r = 0.5 * (a + b);
    let residual = f(r)?.abs();
    if residual > ROOT_TOL {
        return Err(Error::RootRefinement { theta, residual });
    }
    Ok((r, at(r)))
}

fn cusp_distance(k: KPoint) -> f64 {
    let mut best = f64::INFINITY;
    for (px, py) in [(0.5, 0.5), (0.5, 1.5), (1.5, 0.5), (1.5, 1.5)] {
        let q = KPoint::new(px * PI, py * PI);
        let dx = angular_distance(k.kx, q.kx);
        let dy = angular_distance(k.ky, q.ky);
        best = best.min(dx.hypot(dy));
    }
    best
}

/// Adapted fields as jets in `k`:
/// `u = |s_x s_y| / D (c_x² s_y, -c_y² s_x)`,
/// `v = -c_x² c_y² / D (s_x c_y, s_y c_x)`, `D = c_x³ s_y² + c_y³ s_x²`,
/// with `v` negated if needed so that `u ∧ v > 0`.
pub fn adapted_frame_jet(k: KPoint) -> Result<([Jet2; 2], [Jet2; 2])> {
    let x = Jet2::var(k.kx, 0);
    let y = Jet2::var(k.ky, 1);
    let (sx, cx, sy, cy) = (x.sin(), x.cos(), y.sin(), y.cos());
    let distance = cusp_distance(k);
    if distance < CUSP_EPS || cx.v.abs() < CUSP_EPS || cy.v.abs() < CUSP_EPS {
        return Err(Error::CuspProximity {
            kx: k.kx,
            ky: k.ky,
            distance,
        });
    }
    // On Σ, D falls off like the fourth power of the cusp distance, so it is
    // only required to be nonzero.
    let d = cx * cx * cx * sy * sy + cy * cy * cy * sx * sx;
    if !(d.v.abs() > 0.0) {
        return Err(Error::DegenerateDenominator(d.v));
    }
    let a = (sx * sy).abs() / d;
    let u = [a * cx * cx * sy, -(a * cy * cy * sx)];
    let b = -(cx * cx * cy * cy / d);
    let mut v = [b * sx * cy, b * sy * cx];
    if u[0].v * v[1].v - u[1].v * v[0].v < 0.0 {
        v = [-v[0], -v[1]];
    }
    Ok((u, v))
}

pub fn adapted_frame(k: KPoint) -> Result<([f64; 2], [f64; 2])> {
    let (u, v) = adapted_frame_jet(k)?;
    Ok((jet::values(&u), jet::values(&v)))
}

pub fn wedge(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Everything that enters `κ_s` at one point.
#[derive(Debug, Clone)]
pub struct CurvatureDetail {
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub e: f64,
    pub f: f64,
    pub e_u: f64,
    pub f_v: f64,
    pub e_vv: f64,
    pub f_uv: f64,
    /// `-i trace(P [∂_u P, ∂_v² P])`.
    pub lambda_bar_v: f64,
    /// `v · ∇((u ∧ v) λ̄)`, an independent route to the same quantity on `Σ`.
    pub lambda_bar_v_directional: f64,
    /// `(2E F_uv - F_v E_u - E E_vv) / (2 E^{3/2} λ̄_v)` in the adapted frame.
    /// Loses digits near cusps, where the terms of the numerator cancel.
    pub kappa_s_frame: f64,
    /// Geodesic curvature of the image curve `P(Σ)` in the limiting tangent
    /// plane, signed by `λ̄_v`. This is the value used for integration.
    pub kappa_s: f64,
}

/// Metric components as jets: exact gradient from `Γ`, Hessian from
/// fourth-order differences of that gradient.
fn metric_jets(
    spec: &ModelSpec,
    band: &BandSelection,
    k: KPoint,
    pj: &ProjectorJet,
    h: f64,
) -> Result<[[Jet2; 2]; 2]> {
    let g = geometry::metric_tensor(pj)?;
    let dg = geometry::metric_gradient(&geometry::christoffel_first(pj)?);
    const C: [(f64, f64); 4] = [
        (-2.0, 1.0 / 12.0),
        (-1.0, -2.0 / 3.0),
        (1.0, 2.0 / 3.0),
        (2.0, -1.0 / 12.0),
    ];
    // hess[ν][μ] = ∂_ν ∂_μ g
    let mut hess = [[[[0.0; 2]; 2]; 2]; 2];
    for (nu, slot) in hess.iter_mut().enumerate() {
        for &(s, w) in &C {
            let kk = if nu == 0 {
                k.shifted(s * h, 0.0)
            } else {
                k.shifted(0.0, s * h)
            };
            let pjs = projector::projector_jet(spec, band, kk)?;
            let dgs = geometry::metric_gradient(&geometry::christoffel_first(&pjs)?);
            for mu in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        slot[mu][a][b] += w * dgs[mu][a][b] / h;
                    }
                }
            }
        }
    }
    let mut out = [[Jet2::constant(0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let j = &mut out[a][b];
            j.v = g[a][b];
            j.g = [dg[0][a][b], dg[1][a][b]];
            let cross = 0.5 * (hess[0][1][a][b] + hess[1][0][a][b]);
            j.h = [[hess[0][0][a][b], cross], [cross, hess[1][1][a][b]]];
        }
    }
    Ok(out)
}

fn combine(mats: &[linalg::CMat; 2], w: [f64; 2]) -> linalg::CMat {
    linalg::scale(&mats[0], w[0]) + linalg::scale(&mats[1], w[1])
}

/// Hessian of `λ̄` from fourth-order differences of its exact gradient.
fn lambda_bar_hessian(
    spec: &ModelSpec,
    band: &BandSelection,
    k: KPoint,
    h: f64,
) -> Result<[[f64; 2]; 2]> {
    const C: [(f64, f64); 4] = [
        (-2.0, 1.0 / 12.0),
        (-1.0, -2.0 / 3.0),
        (1.0, 2.0 / 3.0),
        (2.0, -1.0 / 12.0),
    ];
    let mut hess = [[0.0; 2]; 2];
    for (nu, row) in hess.iter_mut().enumerate() {
        for &(s, w) in &C {
            let kk = if nu == 0 {
                k.shifted(s * h, 0.0)
            } else {
                k.shifted(0.0, s * h)
            };
            let grad =
                geometry::signed_area_density_gradient(&projector::projector_jet(spec, band, kk)?);
            for mu in 0..2 {
                row[mu] += w * grad[mu] / h;
            }
        }
    }
    let cross = 0.5 * (hess[0][1] + hess[1][0]);
    hess[0][1] = cross;
    hess[1][0] = cross;
    Ok(hess)
}

/// Geodesic curvature of `s ↦ P(k(s))` along the unit-speed level curve
/// `λ̄ = 0` through `k`, measured against the limiting tangent plane
/// `span(∂_s P, ∂_v² P)` with `v` the null direction of `g`. Unsigned by
/// orientation: the result is invariant under `s → -s` and `v → -v`.
pub fn image_curve_curvature(
    spec: &ModelSpec,
    band: &BandSelection,
    k: KPoint,
    pj: &ProjectorJet,
    h: f64,
) -> Result<f64> {
    let grad = geometry::signed_area_density_gradient(pj);
    let gn = grad[0].hypot(grad[1]);
    if !(gn > 0.0) {
        return Err(Error::DegenerateDenominator(gn));
    }
    let n = [grad[0] / gn, grad[1] / gn];
    let t = [-n[1], n[0]];
    let hess = lambda_bar_hessian(spec, band, k, h)?;
    let mut tht = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            tht += t[a] * hess[a][b] * t[b];
        }
    }
    let curv = -tht / gn;

    let vel = combine(&pj.dp, t);
    let mut acc = combine(&pj.dp, [curv * n[0], curv * n[1]]);
    let v = geometry::null_direction(&geometry::metric_tensor(pj)?);
    let mut fold = linalg::zeros(pj.n());
    for a in 0..2 {
        for b in 0..2 {
            acc += linalg::scale(&pj.d2p[a][b], t[a] * t[b]);
            fold += linalg::scale(&pj.d2p[a][b], v[a] * v[b]);
        }
    }
    // Tangential part of the acceleration on the projector manifold.
    let q = linalg::identity(pj.n()) - &pj.p;
    let acc = &pj.p * &acc * &q + &q * &acc * &pj.p;

    let speed2 = linalg::inner(&vel, &vel);
    if !(speed2 > 0.0) {
        return Err(Error::DegenerateDenominator(speed2));
    }
    let conormal = &fold - linalg::scale(&vel, linalg::inner(&fold, &vel) / speed2);
    let cn = linalg::inner(&conormal, &conormal).sqrt();
    if !(cn > 0.0) {
        return Err(Error::DegenerateDenominator(cn));
    }
    Ok(linalg::inner(&acc, &conormal) / (cn * speed2))
}

fn quadratic(a: &[Jet2; 2], g: &[[Jet2; 2]; 2], b: &[Jet2; 2]) -> Jet2 {
    let mut out = Jet2::constant(0.0);
    for i in 0..2 {
        for j in 0..2 {
            out = out + a[i] * g[i][j] * b[j];
        }
    }
    out
}

pub fn curvature_detail(
    spec: &ModelSpec,
    band: &BandSelection,
    k: KPoint,
) -> Result<CurvatureDetail> {
    curvature_detail_with_step(spec, band, k, HESSIAN_FD_STEP)
}

/// Both routes to `κ_s` at `k`, with the adapted-frame ingredients.
pub fn curvature_detail_with_step(
    spec: &ModelSpec,
    band: &BandSelection,
    k: KPoint,
    h: f64,
) -> Result<CurvatureDetail> {
    let (u, v) = adapted_frame_jet(k)?;
    let pj = projector::projector_jet(spec, band, k)?;
    let g = metric_jets(spec, band, k, &pj, h)?;
    let e = quadratic(&u, &g, &u);
    let f = quadratic(&u, &g, &v);
    let (uv, vv) = (jet::values(&u), jet::values(&v));
    let e_u = e.along(uv);
    let f_v = f.along(vv);
    let e_vv = jet::along2(&v, &v, &e);
    let f_uv = jet::along2(&u, &v, &f);

    let n = pj.n();
    let mut du_p = linalg::zeros(n);
    let mut dvv_p = linalg::zeros(n);
    for mu in 0..2 {
        du_p += linalg::scale(&pj.dp[mu], uv[mu]);
        for nu in 0..2 {
            dvv_p += linalg::scale(&pj.d2p[mu][nu], vv[mu] * vv[nu]);
            dvv_p += linalg::scale(&pj.dp[nu], vv[mu] * v[nu].g[mu]);
        }
    }
    let lambda_bar_v = linalg::trace_prod(&pj.p, &linalg::commutator(&du_p, &dvv_p)).im;

    let lambda_bar = geometry::signed_area_density(&pj)?;
    let grad_lb = geometry::signed_area_density_gradient(&pj);
    let w = u[0] * v[1] - u[1] * v[0];
    let lambda_bar_v_directional =
        w.along(vv) * lambda_bar + w.v * (vv[0] * grad_lb[0] + vv[1] * grad_lb[1]);

    if !(lambda_bar_v.abs() >= DENOM_EPS) {
        return Err(Error::DegenerateDenominator(lambda_bar_v));
    }
    let ev = e.v;
    let kappa_s_frame =
        (2.0 * ev * f_uv - f_v * e_u - ev * e_vv) / (2.0 * ev.powf(1.5) * lambda_bar_v);
    let kappa_s = lambda_bar_v.signum() * image_curve_curvature(spec, band, k, &pj, h)?;
    Ok(CurvatureDetail {
        u: uv,
        v: vv,
        e: ev,
        f: f.v,
        e_u,
        f_v,
        e_vv,
        f_uv,
        lambda_bar_v,
        lambda_bar_v_directional,
        kappa_s_frame,
        kappa_s,
    })
}

pub fn singular_curvature_at(
    spec: &ModelSpec,
    band: &BandSelection,
    sample: &SingularSample,
) -> Result<f64> {
    Ok(curvature_detail(spec, band, sample.k)?.kappa_s)
}

/// Metric at `k` from the projector jet, for null-space checks.
pub fn metric_at(spec: &ModelSpec, band: &BandSelection, k: KPoint) -> Result<Metric> {
    geometry::metric_tensor(&projector::projector_jet(spec, band, k)?)
}

/// Trace `Σ` on the angle grid `θ_i = 2π(i + ½)/n` around the curve center.
/// The half-step offset keeps samples off the cusp directions and off the
/// axis lines where `u` vanishes.
pub fn trace_singular_curve(
    spec: &ModelSpec,
    band: &BandSelection,
    n_samples: usize,
) -> Result<SingularCurve> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::MalformedCurve(format!(
            "{n_samples} samples, need at least {MIN_SAMPLES}"
        )));
    }
    if spec.n_bands() != 2 {
        return Err(Error::Unsupported(
            "fold-curve tracing assumes a two-band model".into(),
        ));
    }
    let center = curve_center(spec);
    let spacing = 2.0 * PI / n_samples as f64;
    let thetas: Vec<f64> = (0..n_samples)
        .map(|i| spacing * (i as f64 + 0.5))
        .filter(|&t| distance_to_cusp_theta(t) > CUSP_ANGLE_SKIP)
        .collect();
    let mut samples: Vec<SingularSample> = thetas
        .par_iter()
        .map(|&theta| {
            let (_, k) = root_on_ray(spec, band, center, theta)?;
            let d = curvature_detail(spec, band, k)?;
            Ok(SingularSample {
                theta,
                k,
                u: d.u,
                v: d.v,
                e: d.e,
                lambda_bar_v: d.lambda_bar_v,
                kappa_s: d.kappa_s,
                ds: 0.0,
                is_cusp_adjacent: distance_to_cusp_theta(theta) <= spacing,
            })
        })
        .collect::<Result<_>>()?;
    assign_arc_lengths(&mut samples)?;
    Ok(SingularCurve {
        center,
        n_samples,
        samples,
        cusp_thetas: CUSP_THETAS,
    })
}

/// `ds = √E |du|` with `du = (v² dk_x - v¹ dk_y)/(u ∧ v)` evaluated on the
/// centered chord `(k_{i+1} - k_{i-1})/2` of the closed curve.
pub fn assign_arc_lengths(samples: &mut [SingularSample]) -> Result<()> {
    let m = samples.len();
    if m < 3 {
        return Err(Error::MalformedCurve(format!("{m} samples")));
    }
    let ks: Vec<KPoint> = samples.iter().map(|s| s.k).collect();
    for (i, s) in samples.iter_mut().enumerate() {
        let prev = ks[(i + m - 1) % m];
        let next = ks[(i + 1) % m];
        let dkx = 0.5 * (next.kx - prev.kx);
        let dky = 0.5 * (next.ky - prev.ky);
        let du = (s.v[1] * dkx - s.v[0] * dky) / wedge(s.u, s.v);
        s.ds = s.e.sqrt() * du.abs();
        if !(s.ds > 0.0 && s.ds.is_finite()) {
            return Err(Error::MalformedCurve(format!(
                "non-positive arc length at theta = {}",
                s.theta
            )));
        }
    }
    Ok(())
}

/// `(1/π) Σ κ_s ds` over the curve samples.
pub fn singular_line_integral(curve: &SingularCurve) -> Result<f64> {
    let s = &curve.samples;
    if s.len() < MIN_SAMPLES {
        return Err(Error::MalformedCurve(format!(
            "{} samples, need at least {MIN_SAMPLES}",
            s.len()
        )));
    }
    for w in s.windows(2) {
        if !(w[1].theta > w[0].theta) {
            return Err(Error::MalformedCurve(format!(
                "theta not increasing at {}",
                w[1].theta
            )));
        }
    }
    if s[0].theta < 0.0 || s[s.len() - 1].theta >= 2.0 * PI {
        return Err(Error::MalformedCurve("theta outside [0, 2π)".into()));
    }
    let terms: Vec<f64> = s.iter().map(|x| x.kappa_s * x.ds).collect();
    if let Some(bad) = s.iter().find(|x| !(x.ds > 0.0) || !x.kappa_s.is_finite()) {
        return Err(Error::MalformedCurve(format!(
            "bad sample at theta = {}",
            bad.theta
        )));
    }
    Ok(linalg::pairwise_sum(&terms) / PI)
}
