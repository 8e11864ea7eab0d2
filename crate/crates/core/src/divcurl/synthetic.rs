//! Closed-form balance systems: the shipped certification scenarios and a
//! generator of random smooth systems satisfying the hypotheses exactly.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BalanceSystem, Domain};
use crate::error::Result;

/// `f¹² = f²¹ = cos 2πx`, `G¹ = −2π sin 2πx`, others zero.
pub fn cosine_pair(n_t: usize, n_x: usize) -> Result<BalanceSystem> {
    BalanceSystem::from_fn(Domain::Periodic, n_t, n_x, 1.0, |_, x| {
        let c = (2.0 * PI * x).cos();
        [0.0, c, c, 0.0, -2.0 * PI * (2.0 * PI * x).sin(), 0.0]
    })
}

/// `f¹¹ = sin 2πx cos t`, `G¹ = −sin 2πx sin t`, `f²¹ = cos 2πx`.
pub fn orthogonal_pair(n_t: usize, n_x: usize) -> Result<BalanceSystem> {
    BalanceSystem::from_fn(Domain::Periodic, n_t, n_x, 1.0, |t, x| {
        let s = (2.0 * PI * x).sin();
        [s * t.cos(), 0.0, (2.0 * PI * x).cos(), 0.0, -s * t.sin(), 0.0]
    })
}

/// `f¹² = f²¹ = e^{−x²}` on `[−L, L)`, `G¹ = ∂ₓf¹²`.
pub fn gaussian_line(n_t: usize, n_x: usize, half_width: f64) -> Result<BalanceSystem> {
    BalanceSystem::from_fn(Domain::Line { half_width }, n_t, n_x, 1.0, |_, x| {
        let e = (-x * x).exp();
        [0.0, e, e, 0.0, -2.0 * x * e, 0.0]
    })
}

/// `Σ c·cos(2πkx + φ)·cos(νt + ψ)` with its exact partial derivatives.
#[derive(Clone, Debug)]
struct Field {
    modes: Vec<(f64, f64, f64, f64, f64)>,
}

impl Field {
    fn random(rng: &mut ChaCha8Rng, band: usize) -> Self {
        let modes = (0..=band)
            .map(|k| {
                let c = rng.gen_range(-1.0..1.0) / (1.0 + k as f64);
                (c, k as f64, rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.5..3.0), rng.gen_range(0.0..2.0 * PI))
            })
            .collect();
        Field { modes }
    }

    fn eval(&self, t: f64, x: f64) -> (f64, f64, f64) {
        let (mut v, mut dt, mut dx) = (0.0, 0.0, 0.0);
        for &(c, k, phi, nu, psi) in &self.modes {
            let (sx, cx) = (2.0 * PI * k * x + phi).sin_cos();
            let (st, ct) = (nu * t + psi).sin_cos();
            v += c * cx * ct;
            dt -= c * cx * nu * st;
            dx -= c * 2.0 * PI * k * sx * ct;
        }
        (v, dt, dx)
    }
}

/// Random smooth periodic system on `[0,1] × [0,1)`; the sources are
/// defined from the fields, so the hypotheses hold exactly.
pub fn random_periodic(seed: u64, n_t: usize, n_x: usize) -> Result<BalanceSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = (n_x / 4).min(3);
    let f: Vec<Field> = (0..4).map(|_| Field::random(&mut rng, band)).collect();
    BalanceSystem::from_fn(Domain::Periodic, n_t, n_x, 1.0, |t, x| {
        let [(f11, d11, _), (f12, _, x12), (f21, d21, _), (f22, _, x22)] = [0, 1, 2, 3].map(|i| f[i].eval(t, x));
        [f11, f12, f21, f22, d11 + x12, d21 - x22]
    })
}
