//! Periodic discrete calculus on an equispaced grid.
//!
//! The default differentiation scheme is Fourier collocation: exact for
//! trigonometric polynomials of degree below `n/2`, with the Nyquist
//! coefficient of every derivative set to zero. A 4th-order centred
//! finite-difference stencil is kept as a cross-check.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, SmfError};

/// Nodal values of a real function on a [`PeriodicGrid`].
pub type ScalarField = Vec<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DiffScheme {
    #[default]
    Spectral,
    FiniteDifference4,
}

impl DiffScheme {
    pub fn from_key(key: &str) -> Result<Self> {
        match key.trim() {
            "spectral" => Ok(Self::Spectral),
            "fd4" => Ok(Self::FiniteDifference4),
            other => Err(SmfError::InvalidConfig {
                key: "diff_scheme".into(),
                message: format!("unknown scheme `{other}` (expected spectral | fd4)"),
            }),
        }
    }
}

/// Equispaced periodic grid `x_j = origin + j·length/n`, `n` even and ≥ 8.
///
/// FFT plans are built once and shared; a grid is cheap to clone and safe to
/// use from several threads.
#[derive(Clone)]
pub struct PeriodicGrid {
    n: usize,
    origin: f64,
    length: f64,
    scheme: DiffScheme,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("n", &self.n)
            .field("origin", &self.origin)
            .field("length", &self.length)
            .field("scheme", &self.scheme)
            .finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.origin == other.origin
            && self.length == other.length
            && self.scheme == other.scheme
    }
}

impl PeriodicGrid {
    /// The unit circle `[0, 1)`.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_period(n, 0.0, 1.0)
    }

    pub fn with_period(n: usize, origin: f64, length: f64) -> Result<Self> {
        if n < 8 {
            return Err(contract(format!("grid needs at least 8 points, got {n}")));
        }
        if n % 2 != 0 {
            return Err(contract(format!("grid size must be even, got {n}")));
        }
        if !(length > 0.0) || !length.is_finite() || !origin.is_finite() {
            return Err(contract(format!("bad grid period [{origin}, {origin}+{length})")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            origin,
            length,
            scheme: DiffScheme::Spectral,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn with_scheme(mut self, scheme: DiffScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn scheme(&self) -> DiffScheme {
        self.scheme
    }

    pub fn node(&self, j: usize) -> f64 {
        self.origin + self.length * j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Signed integer frequency of FFT bin `k`.
    fn frequency(&self, k: usize) -> i64 {
        if k <= self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Angular wavenumber of FFT bin `k` (zero at the Nyquist bin).
    pub fn wavenumber(&self, k: usize) -> f64 {
        if k == self.n / 2 {
            0.0
        } else {
            2.0 * PI * self.frequency(k) as f64 / self.length
        }
    }

    /// Real symbol `σ_k` of the first-derivative operator: `D e^{iκx} = iσ e^{iκx}`.
    pub fn derivative_symbol(&self, k: usize) -> f64 {
        match self.scheme {
            DiffScheme::Spectral => self.wavenumber(k),
            DiffScheme::FiniteDifference4 => {
                let h = self.spacing();
                let th = 2.0 * PI * self.frequency(k) as f64 / self.n as f64;
                (8.0 * th.sin() - (2.0 * th).sin()) / (6.0 * h)
            }
        }
    }

    /// Symbol `−λ_k ≤ 0` of the second-derivative operator used by the time
    /// stepper. Unlike `D∘D` it keeps the Nyquist mode: spectral `−κ²` with
    /// `|κ| = πN/L` there, the five-point fourth-order stencil for FD4.
    pub fn second_derivative_symbol(&self, k: usize) -> f64 {
        let th = 2.0 * PI * self.frequency(k) as f64 / self.n as f64;
        match self.scheme {
            DiffScheme::Spectral => {
                let kappa = th * self.n as f64 / self.length;
                -kappa * kappa
            }
            DiffScheme::FiniteDifference4 => {
                let h = self.spacing();
                (32.0 * th.cos() - 2.0 * (2.0 * th).cos() - 30.0) / (12.0 * h * h)
            }
        }
    }

    pub(crate) fn fft_forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse transform including the `1/n` normalisation.
    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= s);
    }

    /// Applies a real Fourier multiplier `m(k)` to two real fields at once
    /// (packed as real and imaginary parts). `m` must be even in the
    /// frequency so that real fields stay real.
    pub(crate) fn apply_even_multiplier_pair(
        &self,
        f: &[f64],
        g: &[f64],
        multiplier: impl Fn(usize) -> f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex64> = f.iter().zip(g).map(|(&a, &b)| Complex64::new(a, b)).collect();
        self.fft_forward(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            *c *= multiplier(k);
        }
        self.fft_inverse(&mut buf);
        (buf.iter().map(|c| c.re).collect(), buf.iter().map(|c| c.im).collect())
    }

    /// Derivative of two real fields with one complex transform pair.
    pub(crate) fn derivative_pair(&self, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self.scheme {
            DiffScheme::Spectral => {
                let mut buf: Vec<Complex64> =
                    f.iter().zip(g).map(|(&a, &b)| Complex64::new(a, b)).collect();
                self.fft_forward(&mut buf);
                for (k, c) in buf.iter_mut().enumerate() {
                    *c *= Complex64::new(0.0, self.wavenumber(k));
                }
                self.fft_inverse(&mut buf);
                (buf.iter().map(|c| c.re).collect(), buf.iter().map(|c| c.im).collect())
            }
            DiffScheme::FiniteDifference4 => (self.fd4(f), self.fd4(g)),
        }
    }

    pub(crate) fn derivative_raw(&self, f: &[f64]) -> Vec<f64> {
        match self.scheme {
            DiffScheme::Spectral => self.derivative_pair(f, &vec![0.0; f.len()]).0,
            DiffScheme::FiniteDifference4 => self.fd4(f),
        }
    }

    fn fd4(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let c = 1.0 / (12.0 * self.spacing());
        (0..n)
            .map(|j| {
                let at = |o: isize| f[(j as isize + o).rem_euclid(n as isize) as usize];
                c * (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2))
            })
            .collect()
    }

    fn check(&self, f: &[f64], what: &str) -> Result<()> {
        if f.len() != self.n {
            return Err(contract(format!("{what}: field has {} values, grid has {}", f.len(), self.n)));
        }
        if !f.iter().all(|v| v.is_finite()) {
            return Err(SmfError::NonFinite(what.into()));
        }
        Ok(())
    }

    /// `∂_x f` with the grid's differentiation scheme.
    pub fn spectral_derivative(&self, f: &[f64]) -> Result<ScalarField> {
        self.check(f, "spectral_derivative input")?;
        Ok(self.derivative_raw(f))
    }

    /// Rectangle rule over one period; exact for trigonometric polynomials
    /// of degree below `n`.
    pub fn integrate_periodic(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.spacing()
    }

    pub fn mean(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() / self.n as f64
    }

    /// Mean-zero spectral antiderivative of `f − mean(f)`.
    fn periodic_antiderivative(&self, f: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        self.fft_forward(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            let kappa = self.wavenumber(k);
            *c = if kappa == 0.0 { Complex64::new(0.0, 0.0) } else { *c / Complex64::new(0.0, kappa) };
        }
        self.fft_inverse(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    /// `K(x) = (1/L) ∫ dy ∫_y^x f(z) dz` over one period, i.e. the
    /// antiderivative of `f` shifted to zero mean. For `f` of zero mean, `K`
    /// is periodic and `∂_x K = f`; otherwise the mean contributes the
    /// sawtooth `mean(f)·(x − x₀ − L/2)`.
    pub fn double_integral_kernel(&self, f: &[f64]) -> ScalarField {
        let c0 = self.mean(f);
        let tilde = self.periodic_antiderivative(f);
        let mid = self.origin + 0.5 * self.length;
        tilde
            .iter()
            .enumerate()
            .map(|(j, t)| t + c0 * (self.node(j) - mid))
            .collect()
    }

    /// `∫_{x₀}^{x_j} f` at every node (spectrally accurate for band-limited
    /// `f`). Used on truncated line domains.
    pub fn cumulative_integral(&self, f: &[f64]) -> ScalarField {
        let c0 = self.mean(f);
        let tilde = self.periodic_antiderivative(f);
        let t0 = tilde[0];
        tilde
            .iter()
            .enumerate()
            .map(|(j, t)| t - t0 + c0 * (self.node(j) - self.origin))
            .collect()
    }

    /// `∫|f|` over one period for the trigonometric interpolant of `f`.
    /// The rectangle rule on `|f|` is only second order at sign changes, so
    /// the roots are located on the interpolant and the exact antiderivative
    /// is differenced between them.
    pub fn l1_norm(&self, f: &[f64]) -> f64 {
        if f.iter().all(|v| *v == 0.0) {
            return 0.0;
        }
        let p = Interpolant::new(self, f);
        let (vals, ders) = self.half_cell_samples(f);
        let m = vals.len();
        let ds = 0.5 * self.spacing();
        let mut roots = vec![];
        for i in 0..m {
            let (s0, s1) = (ds * i as f64, ds * (i + 1) as f64);
            let (v0, v1) = (vals[i], vals[(i + 1) % m]);
            let (d0, d1) = (ders[i], ders[(i + 1) % m]);
            if v0 == 0.0 {
                roots.push(s0);
            } else if v0 * v1 < 0.0 {
                roots.push(Interpolant::root(|s| p.eval(s), s0, v0, s1, v1));
            } else if d0 * d1 < 0.0 {
                // An extremum inside the cell may dip across zero and back.
                let se = Interpolant::root(|s| p.derivative(s), s0, d0, s1, d1);
                let ve = p.eval(se);
                if ve * v0 < 0.0 {
                    roots.push(Interpolant::root(|s| p.eval(s), s0, v0, se, ve));
                    roots.push(Interpolant::root(|s| p.eval(s), se, ve, s1, v1));
                }
            }
        }
        let g = |s: f64| p.antiderivative(s);
        let mut cuts = vec![0.0];
        cuts.extend(roots);
        cuts.push(self.length);
        cuts.windows(2).map(|w| (g(w[1]) - g(w[0])).abs()).sum()
    }

    /// Interpolant values and derivatives at nodes and cell midpoints,
    /// interleaved, from one forward and four inverse transforms.
    fn half_cell_samples(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let h = self.spacing();
        let mut spec: Vec<Complex64> = f.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        self.fft_forward(&mut spec);
        let nyq = spec[n / 2].re;
        let kn = PI * n as f64 / self.length;
        let synth = |order: u32, shift: f64| -> Vec<f64> {
            let mut buf: Vec<Complex64> = spec
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    if k == n / 2 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let kappa = 2.0 * PI * self.frequency(k) as f64 / self.length;
                    let d = if order == 1 { Complex64::new(0.0, kappa) } else { Complex64::new(1.0, 0.0) };
                    c * d * Complex64::from_polar(1.0, kappa * shift)
                })
                .collect();
            self.fft_inverse(&mut buf);
            buf.iter().map(|c| c.re).collect()
        };
        let sign = |j: usize| if j % 2 == 0 { 1.0 } else { -1.0 };
        let v_node: Vec<f64> = synth(0, 0.0).iter().enumerate().map(|(j, v)| v + nyq * sign(j) / n as f64).collect();
        let v_mid = synth(0, 0.5 * h);
        let d_node = synth(1, 0.0);
        let d_mid: Vec<f64> = synth(1, 0.5 * h).iter().enumerate().map(|(j, v)| v - nyq * kn * sign(j) / n as f64).collect();
        let interleave = |a: &[f64], b: &[f64]| a.iter().zip(b).flat_map(|(x, y)| [*x, *y]).collect();
        (interleave(&v_node, &v_mid), interleave(&d_node, &d_mid))
    }

    /// `(1 + a² Δ²)⁻¹` applied to two fields, `Δ` the stepper's second
    /// derivative; the dispersive preconditioner of the midpoint solver.
    pub(crate) fn dispersive_resolvent_pair(&self, a: f64, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.apply_even_multiplier_pair(f, g, |k| {
            let l = self.second_derivative_symbol(k);
            1.0 / (1.0 + a * a * l * l)
        })
    }

    /// The stepper's second derivative `Δ` of two fields.
    pub(crate) fn second_derivative_pair(&self, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.apply_even_multiplier_pair(f, g, |k| self.second_derivative_symbol(k))
    }
}

/// Real trigonometric interpolant in the offset `s = x − x₀`:
/// `c₀ + Σ (aₘ cos κₘs + bₘ sin κₘs) + a_ν cos κ_ν s`.
struct Interpolant {
    c0: f64,
    modes: Vec<(f64, f64, f64)>,
    nyquist: (f64, f64),
}

impl Interpolant {
    fn new(grid: &PeriodicGrid, f: &[f64]) -> Self {
        let n = grid.n;
        let mut buf: Vec<Complex64> = f.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        grid.fft_forward(&mut buf);
        let scale = 1.0 / n as f64;
        let modes = (1..n / 2)
            .map(|k| (2.0 * buf[k].re * scale, -2.0 * buf[k].im * scale, 2.0 * PI * k as f64 / grid.length))
            .collect();
        Interpolant {
            c0: buf[0].re * scale,
            modes,
            nyquist: (buf[n / 2].re * scale, PI * n as f64 / grid.length),
        }
    }

    fn eval(&self, s: f64) -> f64 {
        let (an, kn) = self.nyquist;
        self.modes.iter().fold(self.c0 + an * (kn * s).cos(), |acc, &(a, b, k)| {
            let (sn, cs) = (k * s).sin_cos();
            acc + a * cs + b * sn
        })
    }

    /// `∫₀ˢ` of the interpolant.
    fn antiderivative(&self, s: f64) -> f64 {
        let (an, kn) = self.nyquist;
        self.modes.iter().fold(self.c0 * s + an * (kn * s).sin() / kn, |acc, &(a, b, k)| {
            let (sn, cs) = (k * s).sin_cos();
            acc + (a * sn + b * (1.0 - cs)) / k
        })
    }

    fn derivative(&self, s: f64) -> f64 {
        let (an, kn) = self.nyquist;
        self.modes.iter().fold(-an * kn * (kn * s).sin(), |acc, &(a, b, k)| {
            let (sn, cs) = (k * s).sin_cos();
            acc + k * (b * cs - a * sn)
        })
    }

    /// Illinois iteration on a bracketing interval.
    fn root(g: impl Fn(f64) -> f64, mut s0: f64, mut v0: f64, mut s1: f64, mut v1: f64) -> f64 {
        for _ in 0..200 {
            let s = s1 - v1 * (s1 - s0) / (v1 - v0);
            let v = g(s);
            if v == 0.0 {
                return s;
            }
            if v * v1 < 0.0 {
                (s0, v0) = (s1, v1);
            } else {
                v0 *= 0.5;
            }
            (s1, v1) = (s, v);
            if (s1 - s0).abs() <= 4.0 * f64::EPSILON * (1.0 + s1.abs()) {
                break;
            }
        }
        s1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(grid: &PeriodicGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
        grid.nodes().into_iter().map(f).collect()
    }

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// Random real trigonometric polynomial with `band` modes.
    fn random_trig(rng: &mut ChaCha8Rng, band: usize) -> (f64, Vec<(f64, f64)>) {
        let c0 = rng.gen_range(-1.0..1.0);
        let modes = (0..band).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        (c0, modes)
    }

    fn eval_trig(c: &(f64, Vec<(f64, f64)>), x: f64) -> f64 {
        c.0 + c
            .1
            .iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let w = 2.0 * PI * (k + 1) as f64;
                a * (w * x).cos() + b * (w * x).sin()
            })
            .sum::<f64>()
    }

    #[test]
    fn rejects_odd_and_small_grids() {
        assert!(PeriodicGrid::new(7).is_err());
        assert!(PeriodicGrid::new(6).is_err());
        assert!(PeriodicGrid::new(33).is_err());
        let g = PeriodicGrid::new(64).unwrap();
        assert_eq!(g.spacing() * g.n_points() as f64, 1.0);
    }

    #[test]
    fn derivative_examples() {
        let g = PeriodicGrid::new(64).unwrap();
        let f = sample(&g, |x| (2.0 * PI * x).sin());
        let df = g.spectral_derivative(&f).unwrap();
        assert!(max_err(&df, &sample(&g, |x| 2.0 * PI * (2.0 * PI * x).cos())) <= 1e-10);

        let c = vec![3.5; 64];
        assert!(g.spectral_derivative(&c).unwrap().iter().all(|v| v.abs() < 1e-13));

        let f = sample(&g, |x| (6.0 * PI * x).cos());
        let df = g.spectral_derivative(&f).unwrap();
        assert!(max_err(&df, &sample(&g, |x| -6.0 * PI * (6.0 * PI * x).sin())) <= 1e-10);
    }

    #[test]
    fn derivative_output_has_zero_mean_and_rejects_nan() {
        let g = PeriodicGrid::new(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert!(g.mean(&g.spectral_derivative(&f).unwrap()).abs() < 1e-13);
        let mut bad = f.clone();
        bad[4] = f64::NAN;
        assert!(matches!(g.spectral_derivative(&bad), Err(SmfError::NonFinite(_))));
    }

    #[test]
    fn fd4_is_fourth_order() {
        let err = |n: usize| {
            let g = PeriodicGrid::new(n).unwrap().with_scheme(DiffScheme::FiniteDifference4);
            let f = sample(&g, |x| (2.0 * PI * x).sin().exp());
            let exact = sample(&g, |x| 2.0 * PI * (2.0 * PI * x).cos() * (2.0 * PI * x).sin().exp());
            max_err(&g.spectral_derivative(&f).unwrap(), &exact)
        };
        let ratio = err(64) / err(128);
        assert!((14.0..18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn fd4_symbol_matches_stencil() {
        let g = PeriodicGrid::new(32).unwrap().with_scheme(DiffScheme::FiniteDifference4);
        let k = 5usize;
        let f = sample(&g, |x| (2.0 * PI * k as f64 * x).sin());
        let df = g.spectral_derivative(&f).unwrap();
        let s = g.derivative_symbol(k);
        assert!(max_err(&df, &sample(&g, |x| s * (2.0 * PI * k as f64 * x).cos())) < 1e-12);
    }

    #[test]
    fn integration_examples() {
        let g = PeriodicGrid::new(64).unwrap();
        assert!((g.integrate_periodic(&vec![1.0; 64]) - 1.0).abs() < 1e-15);
        let s2 = sample(&g, |x| (2.0 * PI * x).sin().powi(2));
        assert!((g.integrate_periodic(&s2) - 0.5).abs() <= 1e-12);
        let s = sample(&g, |x| (2.0 * PI * x).sin());
        assert!(g.integrate_periodic(&s).abs() <= 1e-12);
    }

    #[test]
    fn l1_norm_examples() {
        for n in [8, 16, 64] {
            let g = PeriodicGrid::new(n).unwrap();
            let c = sample(&g, |x| (2.0 * PI * x).cos());
            assert!((g.l1_norm(&c) - 2.0 / PI).abs() <= 1e-13, "n {n}");
            let s = sample(&g, |x| (2.0 * PI * x).sin());
            assert!((g.l1_norm(&s) - 2.0 / PI).abs() <= 1e-13, "n {n}");
            let pos = sample(&g, |x| 2.0 + (2.0 * PI * x).sin());
            assert!((g.l1_norm(&pos) - 2.0).abs() <= 1e-13);
            assert_eq!(g.l1_norm(&vec![0.0; n]), 0.0);
        }
        // |½ + cos 2πx|: positive on (−⅓, ⅓), ∫|f| = 2∫₊f − ∫f.
        let g = PeriodicGrid::new(32).unwrap();
        let f = sample(&g, |x| 0.5 + (2.0 * PI * x).cos());
        let want = 2.0 * (1.0 / 3.0 + 3f64.sqrt() / (2.0 * PI)) - 0.5;
        assert!((g.l1_norm(&f) - want).abs() <= 1e-13);
        // Positive only on a window strictly inside the first cell.
        let g = PeriodicGrid::with_period(8, 0.0, 8.0).unwrap();
        let f = sample(&g, |x| (2.0 * PI * (x - 0.5) / 8.0).cos() - 0.99);
        let c = 0.99f64.acos();
        let pos = 8.0 / (2.0 * PI) * (2.0 * c.sin() - 1.98 * c);
        assert!(f.iter().all(|v| *v < 0.0));
        assert!((g.l1_norm(&f) - (2.0 * pos + 7.92)).abs() <= 1e-12);
        // Narrower still: both roots between a node and the next midpoint.
        let f = sample(&g, |x| (2.0 * PI * (x - 0.25) / 8.0).cos() - 0.999);
        let c = 0.999f64.acos();
        let pos = 8.0 / (2.0 * PI) * (2.0 * c.sin() - 1.998 * c);
        assert!((g.l1_norm(&f) - (2.0 * pos + 7.992)).abs() <= 1e-12);
    }

    #[test]
    fn kernel_examples() {
        let g = PeriodicGrid::new(64).unwrap();
        let k = g.double_integral_kernel(&vec![1.0; 64]);
        assert!(max_err(&k, &sample(&g, |x| x - 0.5)) < 1e-13);
        let f = sample(&g, |x| (2.0 * PI * x).sin());
        let k = g.double_integral_kernel(&f);
        assert!(max_err(&k, &sample(&g, |x| -(2.0 * PI * x).cos() / (2.0 * PI))) <= 1e-10);
    }

    #[test]
    fn kernel_is_antiderivative_after_mean_removal() {
        let g = PeriodicGrid::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let c = random_trig(&mut rng, 10);
            let f = sample(&g, |x| eval_trig(&c, x));
            let m = g.mean(&f);
            let centred: Vec<f64> = f.iter().map(|v| v - m).collect();
            let dk = g.spectral_derivative(&g.double_integral_kernel(&centred)).unwrap();
            assert!(max_err(&dk, &centred) <= 1e-9);
            assert!(g.mean(&g.double_integral_kernel(&centred)).abs() < 1e-13);
        }
    }

    /// Brute-force oracle: the kernel at node j as a direct sum over all
    /// nodes m against the closed-form discrete Green's function.
    fn kernel_direct_sum(f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let nf = n as f64;
        (0..n)
            .map(|j| {
                let xj = j as f64 / nf;
                (0..n)
                    .map(|m| {
                        let s = xj - m as f64 / nf;
                        let green: f64 = (1..n / 2)
                            .map(|k| (2.0 * PI * k as f64 * s).sin() / (PI * k as f64))
                            .sum();
                        f[m] * ((xj - 0.5) + green) / nf
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn kernel_matches_brute_force_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in [8usize, 16, 32, 64] {
            let g = PeriodicGrid::new(n).unwrap();
            for _ in 0..5 {
                let c = random_trig(&mut rng, n / 4);
                let f = sample(&g, |x| eval_trig(&c, x));
                let k = g.double_integral_kernel(&f);
                assert!(max_err(&k, &kernel_direct_sum(&f)) <= 1e-8, "n = {n}");
            }
        }
    }

    #[test]
    fn kernel_matches_analytic_double_integral() {
        // K(x) = ∫₀¹ dy ∫_y^x f for a trigonometric polynomial, by hand.
        let g = PeriodicGrid::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = random_trig(&mut rng, 8);
        let f = sample(&g, |x| eval_trig(&c, x));
        let exact = sample(&g, |x| {
            c.0 * (x - 0.5)
                + c.1
                    .iter()
                    .enumerate()
                    .map(|(k, (a, b))| {
                        let w = 2.0 * PI * (k + 1) as f64;
                        a * (w * x).sin() / w - b * (w * x).cos() / w
                    })
                    .sum::<f64>()
        });
        assert!(max_err(&g.double_integral_kernel(&f), &exact) <= 1e-12);
    }

    #[test]
    fn cumulative_integral_on_a_shifted_period() {
        let g = PeriodicGrid::with_period(256, -8.0, 16.0).unwrap();
        let f = sample(&g, |x| (-x * x).exp());
        let cum = g.cumulative_integral(&f);
        assert!(cum[0].abs() < 1e-15);
        // ∫_{-8}^{0} e^{-x²} = √π / 2 (node 128 sits at x = 0).
        assert!((cum[128] - PI.sqrt() / 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn derivative_quadrature_duality(seed in 0u64..1000, n_exp in 3u32..8) {
            let n = 1usize << n_exp;
            let g = PeriodicGrid::new(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let band = n / 2 - 1;
            let cf = random_trig(&mut rng, band);
            let cg = random_trig(&mut rng, band);
            let f = sample(&g, |x| eval_trig(&cf, x));
            let h = sample(&g, |x| eval_trig(&cg, x));
            let df = g.spectral_derivative(&f).unwrap();
            let dh = g.spectral_derivative(&h).unwrap();
            let lhs: Vec<f64> = df.iter().zip(&h).map(|(a, b)| a * b).collect();
            let rhs: Vec<f64> = f.iter().zip(&dh).map(|(a, b)| a * b).collect();
            prop_assert!((g.integrate_periodic(&lhs) + g.integrate_periodic(&rhs)).abs() <= 1e-10);
        }

        #[test]
        fn derivative_is_linear(seed in 0u64..1000, alpha in -3.0f64..3.0) {
            let g = PeriodicGrid::new(32).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let comb: Vec<f64> = f.iter().zip(&h).map(|(a, b)| alpha * a + b).collect();
            let d = g.spectral_derivative(&comb).unwrap();
            let df = g.spectral_derivative(&f).unwrap();
            let dh = g.spectral_derivative(&h).unwrap();
            for j in 0..32 {
                prop_assert!((d[j] - alpha * df[j] - dh[j]).abs() < 1e-11);
            }
        }
    }
}
