mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use qgeom::gaussbonnet::{self, euler_characteristics};
use qgeom::geometry;
use qgeom::jet::Jet2;
use qgeom::linalg;
use qgeom::singular::{self, CUSP_THETAS};
use qgeom::{
    gauss_bonnet_report, projector_jet, singular_line_integral, trace_singular_curve,
    BandSelection, Error, KPoint, ModelSpec,
};

fn m0_1() -> ModelSpec {
    ModelSpec::two_band(1.0)
}

fn lower() -> BandSelection {
    BandSelection::lower()
}

fn wrap(k: KPoint) -> KPoint {
    KPoint::new(k.kx.rem_euclid(2.0 * PI), k.ky.rem_euclid(2.0 * PI))
}

fn acos(a: Jet2) -> Jet2 {
    let s = 1.0 - a.v * a.v;
    a.chain(a.v.acos(), -1.0 / s.sqrt(), -a.v / s.powf(1.5))
}

fn sqrt(a: Jet2) -> Jet2 {
    let r = a.v.sqrt();
    a.chain(r, 0.5 / r, -0.25 / (r * a.v))
}

/// |κ| of the m0 = 1 fold from its image on the Bloch sphere. On the fold
/// `cos k_y = cos k_x / (cos k_x - 1)`; the image `n̂(k_x)` is differentiated
/// exactly and its geodesic curvature on the unit sphere is rescaled by √2
/// because the metric is half the round one.
fn bloch_sphere_fold_curvature(kx: f64) -> f64 {
    let x = Jet2::var(kx, 0);
    let cx = x.cos();
    let ky = acos(cx / (cx - Jet2::constant(1.0)));
    let d = [x.sin(), ky.sin(), Jet2::constant(1.0) - cx - ky.cos()];
    let r = sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    let n = d.map(|c| c / r);
    let c0 = n.map(|c| c.v);
    let c1 = n.map(|c| c.g[0]);
    let c2 = n.map(|c| c.h[0][0]);
    let cross = [
        c1[1] * c2[2] - c1[2] * c2[1],
        c1[2] * c2[0] - c1[0] * c2[2],
        c1[0] * c2[1] - c1[1] * c2[0],
    ];
    let triple = c0[0] * cross[0] + c0[1] * cross[1] + c0[2] * cross[2];
    let speed = (c1[0] * c1[0] + c1[1] * c1[1] + c1[2] * c1[2]).sqrt();
    std::f64::consts::SQRT_2 * (triple / speed.powi(3)).abs()
}

#[test]
fn fold_crosses_the_axis_rays_at_two_thirds_pi() {
    let center = KPoint::new(PI, PI);
    let expected = [
        (0.0, KPoint::new(PI + 2.0 * PI / 3.0, PI)),
        (FRAC_PI_2, KPoint::new(PI, PI + 2.0 * PI / 3.0)),
        (PI, KPoint::new(PI - 2.0 * PI / 3.0, PI)),
        (3.0 * FRAC_PI_2, KPoint::new(PI, PI - 2.0 * PI / 3.0)),
    ];
    for (theta, want) in expected {
        let (_, k) = singular::root_on_ray(&m0_1(), &lower(), center, theta).unwrap();
        assert!(
            (k.kx - want.kx).hypot(k.ky - want.ky) < 1e-6,
            "theta = {theta}: {k:?}"
        );
    }
}

#[test]
fn samples_are_ordered_and_positively_framed() {
    let curve = trace_singular_curve(&m0_1(), &lower(), 256).unwrap();
    assert_eq!(curve.samples.len(), 256);
    for w in curve.samples.windows(2) {
        assert!(w[1].theta > w[0].theta);
    }
    for s in &curve.samples {
        assert!(singular::wedge(s.u, s.v) > 0.0);
        assert!(s.ds > 0.0 && s.ds.is_finite());
        let lb = geometry::lambda_bar_at(&m0_1(), &lower(), s.k).unwrap();
        assert!(lb.abs() < 1e-12);
    }
}

#[test]
fn every_cusp_is_approached_within_one_angular_step() {
    for n in [400, 800] {
        let curve = trace_singular_curve(&m0_1(), &lower(), n).unwrap();
        let spacing = 2.0 * PI / n as f64;
        for (cusp, target) in CUSP_THETAS.iter().zip([
            KPoint::new(1.5 * PI, 1.5 * PI),
            KPoint::new(0.5 * PI, 1.5 * PI),
            KPoint::new(0.5 * PI, 0.5 * PI),
            KPoint::new(1.5 * PI, 0.5 * PI),
        ]) {
            let near = curve
                .samples
                .iter()
                .filter(|s| singular::angular_distance(s.theta, *cusp) <= spacing)
                .collect::<Vec<_>>();
            assert_eq!(near.len(), 2, "cusp at theta = {cusp}");
            for s in near {
                assert!(s.is_cusp_adjacent);
                let k = wrap(s.k);
                assert!((k.kx - target.kx).hypot(k.ky - target.ky) < 2.0 * spacing);
            }
        }
    }
}

#[test]
fn adapted_v_spans_the_kernel_of_the_metric() {
    let curve = trace_singular_curve(&m0_1(), &lower(), 256).unwrap();
    for s in &curve.samples {
        let pj = projector_jet(&m0_1(), &lower(), s.k).unwrap();
        let v = geometry::null_direction(&geometry::metric_tensor(&pj).unwrap());
        let dv = linalg::scale(&pj.dp[0], v[0]) + linalg::scale(&pj.dp[1], v[1]);
        assert!(linalg::inner(&dv, &dv).sqrt() < 1e-7);
        let vn = s.v[0].hypot(s.v[1]);
        assert!(singular::wedge([s.v[0] / vn, s.v[1] / vn], v).abs() < 1e-7);
    }
}

#[test]
fn adapted_u_is_tangent_to_the_fold() {
    let curve = trace_singular_curve(&m0_1(), &lower(), 256).unwrap();
    for s in &curve.samples {
        let grad =
            geometry::signed_area_density_gradient(&projector_jet(&m0_1(), &lower(), s.k).unwrap());
        let along = grad[0] * s.u[0] + grad[1] * s.u[1];
        let scale = grad[0].hypot(grad[1]) * s.u[0].hypot(s.u[1]);
        assert!(along.abs() < 1e-8 * scale, "theta = {}", s.theta);
    }
}

#[test]
fn adapted_fields_commute() {
    for theta in [0.3, 1.2, 2.0, 4.0, 5.5] {
        let (_, k) = singular::root_on_ray(&m0_1(), &lower(), KPoint::new(PI, PI), theta).unwrap();
        let (u, v) = singular::adapted_frame_jet(k).unwrap();
        for mu in 0..2 {
            let uv = u[0].v * v[mu].g[0] + u[1].v * v[mu].g[1];
            let vu = v[0].v * u[mu].g[0] + v[1].v * u[mu].g[1];
            let scale = uv.abs().max(vu.abs()).max(1.0);
            assert!(
                (uv - vu).abs() < 1e-12 * scale,
                "theta = {theta}: {uv} vs {vu}"
            );
        }
    }
}

#[test]
fn frame_fields_refuse_the_cusp() {
    match singular::adapted_frame(KPoint::new(FRAC_PI_2, FRAC_PI_2)) {
        Err(Error::CuspProximity { distance, .. }) => assert!(distance < 1e-12),
        other => panic!("{other:?}"),
    }
}

#[test]
fn singular_curvature_is_negative_off_the_cusps() {
    let curve = trace_singular_curve(&m0_1(), &lower(), 400).unwrap();
    for s in curve.samples.iter().filter(|s| !s.is_cusp_adjacent) {
        assert!(s.kappa_s < 0.0, "theta = {}: {}", s.theta, s.kappa_s);
    }
}

#[test]
fn singular_curvature_grows_toward_each_cusp() {
    let curve = trace_singular_curve(&m0_1(), &lower(), 800).unwrap();
    for &cusp in &CUSP_THETAS {
        let before: Vec<f64> = curve
            .samples
            .iter()
            .filter(|s| s.theta < cusp && cusp - s.theta < 0.2)
            .map(|s| s.kappa_s.abs())
            .collect();
        let tail = &before[before.len() - 10..];
        assert!(
            tail.windows(2).all(|w| w[1] > w[0]),
            "cusp at {cusp}: {tail:?}"
        );
    }
}

#[test]
fn singular_curvature_matches_the_bloch_sphere_image() {
    let curve = trace_singular_curve(&m0_1(), &lower(), 800).unwrap();
    for s in &curve.samples {
        let want = bloch_sphere_fold_curvature(wrap(s.k).kx);
        let rel = (s.kappa_s.abs() - want).abs() / want;
        assert!(rel < 1e-6, "theta = {}: {} vs {want}", s.theta, s.kappa_s);
    }
}

#[test]
fn frame_formula_agrees_away_from_cusps() {
    let curve = trace_singular_curve(&m0_1(), &lower(), 200).unwrap();
    for s in curve
        .samples
        .iter()
        .filter(|s| singular::distance_to_cusp_theta(s.theta) > 0.2)
    {
        let d = singular::curvature_detail(&m0_1(), &lower(), s.k).unwrap();
        assert!((d.kappa_s - d.kappa_s_frame).abs() < 1e-8 * d.kappa_s.abs());
        assert!((d.lambda_bar_v - d.lambda_bar_v_directional).abs() < 1e-8 * d.lambda_bar_v.abs());
    }
}

#[test]
fn singular_curvature_is_stable_under_step_halving() {
    let curve = trace_singular_curve(&m0_1(), &lower(), 128).unwrap();
    for s in curve.samples.iter().step_by(7) {
        let a = singular::curvature_detail_with_step(&m0_1(), &lower(), s.k, 1e-4).unwrap();
        let b = singular::curvature_detail_with_step(&m0_1(), &lower(), s.k, 5e-5).unwrap();
        assert!((a.kappa_s - b.kappa_s).abs() < 1e-6 * a.kappa_s.abs());
    }
}

#[test]
fn mirrored_model_has_opposite_singular_integral() {
    let a = singular_line_integral(&trace_singular_curve(&m0_1(), &lower(), 256).unwrap()).unwrap();
    let b = singular_line_integral(
        &trace_singular_curve(&ModelSpec::two_band(-1.0), &lower(), 256).unwrap(),
    )
    .unwrap();
    assert!(a < 0.0);
    assert!((a + b).abs() < 1e-9, "{a} vs {b}");
}

#[test]
fn curve_csv_header() {
    let curve = trace_singular_curve(&m0_1(), &lower(), 64).unwrap();
    let mut out = Vec::new();
    curve.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("theta,kx,ky,u1,u2,v1,v2,E,lambda_bar_v,kappa_s,ds")
    );
    assert_eq!(text.lines().count(), 65);
}

#[test]
fn too_few_samples_or_bands_are_refused() {
    assert!(matches!(
        trace_singular_curve(&m0_1(), &lower(), 32),
        Err(Error::MalformedCurve(_))
    ));
    let four = common::random_tight_binding(3, 4);
    assert!(matches!(
        trace_singular_curve(&four, &lower(), 64),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn gauss_bonnet_closes_for_another_fold_model() {
    let r = gauss_bonnet_report(&ModelSpec::two_band(0.5), &lower(), 200, 400, false).unwrap();
    assert_eq!(r.chern, 1);
    assert!(r.verified);
    assert!(r.sum_residual < 1e-3, "{}", r.sum_residual);
    assert!(r.sub_residual < 1e-9);
    assert!(r.singular_integral < -2.6);
}

#[test]
fn gauss_bonnet_bookkeeping() {
    let (plus, minus) = euler_characteristics(1);
    assert_eq!((plus, minus), (-1, 1));
    let r = gauss_bonnet_report(&m0_1(), &lower(), 64, 128, false).unwrap();
    assert_eq!(r.sum_rhs, 0.0);
    assert_eq!(r.sub_rhs, 2.0);
    assert_eq!(r.cusp_count, 4);
    assert_eq!((r.euler_plus, r.euler_minus), (-1, 1));
    assert!((r.sum_lhs - r.gauss_integral - r.singular_integral).abs() < 1e-15);
    assert_eq!(
        r.provenance.tolerances.residual_max,
        gaussbonnet::RESIDUAL_MAX
    );
}

#[test]
fn gauss_bonnet_needs_the_built_in_model() {
    let tb = common::random_tight_binding(5, 2);
    assert!(matches!(
        gauss_bonnet_report(&tb, &lower(), 32, 64, true),
        Err(Error::Unsupported(_))
    ));
}
