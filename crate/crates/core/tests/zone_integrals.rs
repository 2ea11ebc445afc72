mod common;

use std::f64::consts::PI;

use common::*;
use qgeom::quadrature;
use qgeom::{
    bz_integrate, chern_number, volume_report, BandSelection, Error, FieldGrid, ModelSpec,
};

#[test]
fn chern_numbers_match_projector_plaquette_oracle() {
    for m0 in [-1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 3.0] {
        let spec = ModelSpec::two_band(m0);
        let c = chern_number(&spec, &BandSelection::lower(), 64).unwrap();
        let oracle = projector_plaquette_chern(m0, 48);
        assert!(
            (oracle - oracle.round()).abs() < 1e-9,
            "m0 = {m0}: {oracle}"
        );
        assert_eq!(c.chern, oracle.round() as i64, "m0 = {m0}");
        assert_eq!(c.chern, c.lattice);
        assert!(c.residual < 1e-6);
    }
}

#[test]
fn chern_sign_convention() {
    let band = BandSelection::lower();
    assert_eq!(
        chern_number(&ModelSpec::two_band(1.0), &band, 64)
            .unwrap()
            .chern,
        1
    );
    assert_eq!(
        chern_number(&ModelSpec::two_band(-1.0), &band, 64)
            .unwrap()
            .chern,
        -1
    );
    assert_eq!(
        chern_number(&ModelSpec::two_band(3.0), &band, 64)
            .unwrap()
            .chern,
        0
    );
    // The upper band carries the opposite charge.
    let upper = BandSelection::upper(2);
    assert_eq!(
        chern_number(&ModelSpec::two_band(1.0), &upper, 64)
            .unwrap()
            .chern,
        -1
    );
}

#[test]
fn chern_numbers_of_all_bands_sum_to_zero() {
    let spec = random_tight_binding(41, 3);
    let total: i64 = (0..3)
        .map(|i| {
            chern_number(&spec, &BandSelection::single(i), 48)
                .unwrap()
                .chern
        })
        .sum();
    assert_eq!(total, 0);
    let pair = chern_number(&spec, &BandSelection::new(vec![0, 1], 3).unwrap(), 48).unwrap();
    let single2 = chern_number(&spec, &BandSelection::single(2), 48).unwrap();
    assert_eq!(pair.chern, -single2.chern);
}

#[test]
fn trapezoid_rule_is_exact_for_low_harmonics() {
    let f = FieldGrid::sample(16, "f", |k| k.kx.cos().powi(2) + (k.kx + 2.0 * k.ky).sin()).unwrap();
    assert!((bz_integrate(&f).unwrap() - 2.0 * PI * PI).abs() < 1e-12);
}

#[test]
fn poisoned_grid_reports_indices() {
    let f = FieldGrid::sample(8, "f", |k| {
        if k.kx == 0.0 && k.ky == 0.0 {
            f64::NAN
        } else {
            1.0
        }
    })
    .unwrap();
    match bz_integrate(&f) {
        Err(Error::PoisonedGrid { indices }) => assert_eq!(indices, vec![(0, 0)]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn small_grids_are_refused() {
    assert!(matches!(
        chern_number(&ModelSpec::two_band(1.0), &BandSelection::lower(), 4),
        Err(Error::GridTooSmall(4))
    ));
}

#[test]
fn volume_decomposition() {
    let v = volume_report(&ModelSpec::two_band(1.0), &BandSelection::lower(), 200).unwrap();
    // M₃ is covered three times with orientations (+, +, -), M₁ once.
    assert!((v.area_m1 + 3.0 * v.area_m3 - v.unsigned_volume).abs() < 1e-10);
    assert!((v.area_m1 + v.area_m3 - v.signed_volume).abs() < 1e-10);
    assert!(v.unsigned_volume > v.signed_volume.abs());
    assert_eq!(v.chern_rounded, 1);
    let [_, signed, _, _] = v.in_units_of_2pi();
    assert!((signed - 1.0).abs() < 1e-12);
}

#[test]
fn volume_without_folds_equals_signed_volume() {
    // For m0 = 3 the map has no fold, so |λ̄| = ±λ̄ everywhere.
    let v = volume_report(&ModelSpec::two_band(3.0), &BandSelection::lower(), 64).unwrap();
    assert!(v.signed_volume.abs() < 1e-12);
    let u = volume_report(&ModelSpec::two_band(2.5), &BandSelection::lower(), 64).unwrap();
    assert!(u.area_m3 < 1e-14 || u.area_m1 < 1e-14);
}

#[test]
fn signed_volume_converges_spectrally() {
    let band = BandSelection::lower();
    let spec = ModelSpec::two_band(0.5);
    let a =
        quadrature::bz_integrate(&quadrature::lambda_bar_grid(&spec, &band, 48).unwrap()).unwrap();
    let b =
        quadrature::bz_integrate(&quadrature::lambda_bar_grid(&spec, &band, 96).unwrap()).unwrap();
    // Doubling the grid squares the error rather than quartering it.
    let (ea, eb) = ((a - 2.0 * PI).abs(), (b - 2.0 * PI).abs());
    assert!(ea < 1e-6, "{ea}");
    assert!(eb < 1e-12, "{eb}");
}

#[test]
fn field_csv_has_header_and_full_precision() {
    let f = FieldGrid::sample(8, "lambda_bar", |k| k.kx + 0.1).unwrap();
    let mut out = Vec::new();
    f.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("kx,ky,lambda_bar"));
    assert_eq!(text.lines().count(), 65);
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(first, vec![0.0, 0.0, 0.1]);
}
