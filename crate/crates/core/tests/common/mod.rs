#![allow(dead_code)]

use num_complex::Complex64;
use qgeom::linalg::{self, CMat};
use qgeom::projector::eigh;
use qgeom::{HamiltonianJet, Hopping, KPoint, ModelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, n: usize, scale: f64) -> CMat {
    CMat::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale
    })
}

/// Random tight-binding model: staggered on-site levels plus random
/// Hermitian on-site mixing and random nearest-neighbour hoppings.
pub fn random_tight_binding(seed: u64, n: usize) -> ModelSpec {
    let mut r = rng(seed);
    let onsite = random_matrix(&mut r, n, 0.5);
    let levels = CMat::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(3.0 * i as f64 - 1.5 * (n - 1) as f64, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let mut hops = vec![Hopping {
        dr: [0, 0],
        amplitude: levels + (&onsite + onsite.adjoint()).map(|z| z * 0.5),
    }];
    for dr in [[1, 0], [0, 1]] {
        let a = random_matrix(&mut r, n, 0.4);
        hops.push(Hopping {
            dr: [-dr[0], -dr[1]],
            amplitude: a.adjoint(),
        });
        hops.push(Hopping { dr, amplitude: a });
    }
    ModelSpec::tight_binding(n, hops).expect("paired hoppings")
}

pub fn random_k(rng: &mut impl Rng) -> KPoint {
    KPoint::new(
        rng.random_range(0.0..2.0 * PI),
        rng.random_range(0.0..2.0 * PI),
    )
}

pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMat {
    let a = random_matrix(rng, n, 1.0);
    let qr = a.qr();
    qr.q()
}

type V3 = [f64; 3];

fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `n̂ = d/|d|` and its two first derivatives for the built-in two-band model.
pub fn unit_d(m0: f64, k: KPoint) -> (V3, [V3; 2]) {
    let (sx, cx) = k.kx.sin_cos();
    let (sy, cy) = k.ky.sin_cos();
    let d = [sx, sy, m0 - cx - cy];
    let dd = [[cx, 0.0, sx], [0.0, cy, sy]];
    let r = dot(d, d).sqrt();
    let n = d.map(|x| x / r);
    let dn = dd.map(|dv| {
        let along = dot(n, dv);
        [0, 1, 2].map(|i| (dv[i] - n[i] * along) / r)
    });
    (n, dn)
}

/// Metric and `λ̄` of the lower band in closed form:
/// `g = ½ ∂n̂·∂n̂`, `λ̄ = -½ n̂·(∂_x n̂ × ∂_y n̂)`.
pub fn bloch_sphere_geometry(m0: f64, k: KPoint) -> ([[f64; 2]; 2], f64) {
    let (n, dn) = unit_d(m0, k);
    let g = [
        [0.5 * dot(dn[0], dn[0]), 0.5 * dot(dn[0], dn[1])],
        [0.5 * dot(dn[1], dn[0]), 0.5 * dot(dn[1], dn[1])],
    ];
    (g, -0.5 * dot(n, cross(dn[0], dn[1])))
}

/// Lower-band projector `(1 - n̂·σ)/2`.
pub fn bloch_sphere_projector(m0: f64, k: KPoint) -> CMat {
    let (n, _) = unit_d(m0, k);
    (linalg::identity(2) - linalg::pauli_dot(n)).map(|z| z * 0.5)
}

/// Central fourth-order derivative of a scalar function of `k` along `axis`.
pub fn fd4(f: impl Fn(KPoint) -> f64, k: KPoint, axis: usize, h: f64) -> f64 {
    let at = |s: f64| {
        if axis == 0 {
            f(k.shifted(s * h, 0.0))
        } else {
            f(k.shifted(0.0, s * h))
        }
    };
    (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h)
}

pub fn fd4_matrix(f: impl Fn(KPoint) -> CMat, k: KPoint, axis: usize, h: f64) -> CMat {
    let at = |s: f64| {
        if axis == 0 {
            f(k.shifted(s * h, 0.0))
        } else {
            f(k.shifted(0.0, s * h))
        }
    };
    (at(-2.0) - at(-1.0).map(|z| z * 8.0) + at(1.0).map(|z| z * 8.0) - at(2.0))
        .map(|z| z / (12.0 * h))
}

/// A 3-band model whose two lowest bands are exactly degenerate everywhere:
/// `H = U diag(a, a, b) U†` with `k`-dependent `U`.
fn degenerate_three_band(k: KPoint) -> CMat {
    let [sx, sy, sz] = linalg::pauli();
    let mut gen = linalg::zeros(3);
    let emb = |m: &CMat, off: usize, g: &mut CMat, s: f64| {
        for i in 0..2 {
            for j in 0..2 {
                g[(i + off, j + off)] += m[(i, j)] * s;
            }
        }
    };
    emb(&sx, 0, &mut gen, k.kx.sin());
    emb(&sy, 1, &mut gen, k.ky.cos());
    emb(&sz, 1, &mut gen, 0.5 * (k.kx + 2.0 * k.ky).sin());
    let (w, v) = eigh(&gen).unwrap();
    let u =
        &v * CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            w.iter().map(|&x| Complex64::from_polar(1.0, x)),
        )) * v.adjoint();
    let a = -1.0 + 0.2 * k.kx.cos();
    let b = 1.5 + 0.3 * k.ky.sin();
    let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
        Complex64::new(a, 0.0),
        Complex64::new(a, 0.0),
        Complex64::new(b, 0.0),
    ]));
    &u * d * u.adjoint()
}

/// Hamiltonian jet of [`degenerate_three_band`] by nested differences.
pub fn degenerate_three_band_jet(k: KPoint) -> HamiltonianJet {
    HamiltonianJet {
        h: degenerate_three_band(k),
        dh: [0, 1].map(|mu| fd4_matrix(degenerate_three_band, k, mu, 1e-3)),
        d2h: [0, 1].map(|mu| {
            [0, 1].map(|nu| {
                fd4_matrix(
                    |kk| fd4_matrix(degenerate_three_band, kk, nu, 1e-3),
                    k,
                    mu,
                    1e-3,
                )
            })
        }),
    }
}

/// Plaquette Chern number from rank-one projectors: the Berry phase of a
/// plaquette is `arg trace(P₁P₂P₃P₄)`, which needs no gauge choice.
pub fn projector_plaquette_chern(m0: f64, n: usize) -> f64 {
    let p = |i: usize, j: usize| {
        bloch_sphere_projector(m0, qgeom::quadrature::grid_point(n, i % n, j % n))
    };
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let loop_ = &p(i, j) * &p(i + 1, j) * &p(i + 1, j + 1) * &p(i, j + 1);
            total += linalg::trace(&loop_).arg();
        }
    }
    // trace(P₁P₂P₃P₄) = ⟨1|2⟩⟨2|3⟩⟨3|4⟩⟨4|1⟩, the link product around a
    // counter-clockwise plaquette.
    total / (2.0 * PI)
}
