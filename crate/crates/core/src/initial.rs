//! Initial data and the analytic spin-wave solution.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, SmfError};
use crate::geometry::{TargetGeometry, TargetKind, Vec3};
use crate::grid::PeriodicGrid;
use crate::map::MapState;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Constant,
    GreatCircle { n: i32 },
    SpinWave { theta: f64, n: i32 },
    /// Band-limited random Fourier data, projected to the target.
    RandomSmooth { seed: u64, band: usize },
}

impl fmt::Display for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant => write!(f, "constant"),
            Self::GreatCircle { n } => write!(f, "great_circle({n})"),
            Self::SpinWave { theta, n } => write!(f, "spin_wave({theta}, {n})"),
            Self::RandomSmooth { seed, band } => write!(f, "random_smooth({seed}, {band})"),
        }
    }
}

/// Spin-wave frequency: `u = (sinθ cos φ, sinθ sin φ, cosθ)` with
/// `φ = 2πn x − ω t` solves `∂ₜu = −u × τ(u)` when `ω = −(2πn)² cosθ`.
pub fn spin_wave_frequency(theta: f64, n: i32) -> f64 {
    let k = 2.0 * PI * n as f64;
    -k * k * theta.cos()
}

fn spin_wave_point(theta: f64, n: i32, x: f64, t: f64) -> Vec3 {
    let phi = 2.0 * PI * n as f64 * x - spin_wave_frequency(theta, n) * t;
    Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

/// Radius of the torus plane wave that plays the role of the spin wave.
fn torus_wave_radius(theta: f64) -> f64 {
    theta.sin() / (2.0 * PI)
}

/// Exact solution at time `t`.
///
/// On the sphere this is the precessing spin wave; on CP¹ its image in a
/// stereographic chart (the flow does not see a constant rescaling of the
/// metric); on the torus the plane wave `z = ½(1+i) + r e^{i(kx + k²t)}` of
/// the linear flow `∂ₜz = −i ∂ₓ²z`, with `r = sinθ/2π`.
pub fn spin_wave_exact(
    geometry: TargetGeometry,
    grid: PeriodicGrid,
    theta: f64,
    n: i32,
    t: f64,
) -> Result<MapState> {
    if !theta.is_finite() || !t.is_finite() {
        return Err(SmfError::NonFinite("spin-wave parameters".into()));
    }
    let xs = grid.nodes();
    match geometry.kind {
        TargetKind::Sphere2 => {
            let pts: Vec<Vec3> = xs.iter().map(|&x| spin_wave_point(theta, n, x, t)).collect();
            MapState::from_coords(geometry, grid, &pts, 0, t)
        }
        TargetKind::FubiniStudyCP1 => {
            let pts: Vec<Vec3> = xs.iter().map(|&x| spin_wave_point(theta, n, x, t)).collect();
            place_on_cp1(geometry, grid, &pts, t)
        }
        TargetKind::FlatTorus2 => {
            let k = 2.0 * PI * n as f64;
            let r = torus_wave_radius(theta);
            let pts: Vec<Vec3> = xs
                .iter()
                .map(|&x| {
                    let a = k * x + k * k * t;
                    Vec3::new(0.5 + r * a.cos(), 0.5 + r * a.sin(), 0.0)
                })
                .collect();
            MapState::from_coords(geometry, grid, &pts, 0, t)
        }
    }
}

/// Puts unit-sphere points into a CP¹ chart: the first chart whose image
/// stays inside the switch radius, else the one with the smaller image if
/// that fits the exit disc.
pub fn place_on_cp1(geometry: TargetGeometry, grid: PeriodicGrid, sphere: &[Vec3], t: f64) -> Result<MapState> {
    let image = |chart: u8| -> (Vec<Vec3>, f64) {
        let w: Vec<Vec3> = sphere.iter().map(|p| TargetGeometry::cp1_from_sphere(p, chart)).collect();
        let r = w.iter().map(|v| v.x.hypot(v.y)).fold(0.0, |a: f64, b| if b.is_finite() { a.max(b) } else { f64::INFINITY });
        (w, r)
    };
    let (w0, r0) = image(0);
    let (w1, r1) = image(1);
    let (w, chart) = if r0 <= geometry.chart_switch_radius {
        (w0, 0)
    } else if r1 <= geometry.chart_switch_radius || r1 < r0 {
        (w1, 1)
    } else {
        (w0, 0)
    };
    MapState::from_coords(geometry, grid, &w, chart, t)
}

fn random_sphere_map(grid: &PeriodicGrid, seed: u64, band: usize) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes: Vec<(Vec3, Vec3)> = (1..=band)
        .map(|k| {
            let amp = 0.5 / (k * k) as f64;
            let mut v = || Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
            (v(), v())
        })
        .collect();
    loop {
        let raw: Vec<Vec3> = grid
            .nodes()
            .iter()
            .map(|&x| {
                modes.iter().enumerate().fold(Vec3::new(0.0, 0.0, 1.0), |acc, (i, (a, b))| {
                    let s = 2.0 * PI * (i + 1) as f64 * x;
                    acc + a * s.cos() + b * s.sin()
                })
            })
            .collect();
        // Keep well away from the origin so the projection stays smooth.
        if raw.iter().all(|v| v.norm() > 0.3) {
            return raw.iter().map(|v| v / v.norm()).collect();
        }
        for (a, b) in &mut modes {
            *a *= 0.5;
            *b *= 0.5;
        }
    }
}

fn random_torus_map(grid: &PeriodicGrid, seed: u64, band: usize) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<[f64; 4]> = (1..=band)
        .map(|k| {
            let amp = 0.1 / (k * k) as f64;
            std::array::from_fn(|_| rng.gen_range(-1.0..1.0) * amp)
        })
        .collect();
    grid.nodes()
        .iter()
        .map(|&x| {
            modes.iter().enumerate().fold(Vec3::new(0.5, 0.5, 0.0), |acc, (i, m)| {
                let s = 2.0 * PI * (i + 1) as f64 * x;
                acc + Vec3::new(m[0] * s.cos() + m[1] * s.sin(), m[2] * s.cos() + m[3] * s.sin(), 0.0)
            })
        })
        .collect()
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Err(SmfError::InvalidConfig { key: "initial_data".into(), message });
        match *self {
            Self::GreatCircle { n } if n == 0 => bad("great_circle needs n ≠ 0".into()),
            Self::SpinWave { theta, .. } if !(theta > 0.0 && theta < PI) => {
                bad(format!("spin_wave needs 0 < theta < pi, got {theta}"))
            }
            Self::SpinWave { n, .. } if n == 0 => bad("spin_wave needs n ≠ 0".into()),
            Self::RandomSmooth { band, .. } if band == 0 => bad("random_smooth needs band ≥ 1".into()),
            _ => Ok(()),
        }
    }

    /// Samples the data on `grid` at `t = 0`.
    pub fn build(&self, geometry: TargetGeometry, grid: PeriodicGrid) -> Result<MapState> {
        self.validate()?;
        if let Self::RandomSmooth { band, .. } = *self {
            if 2 * band >= grid.n_points() {
                return Err(contract(format!(
                    "band {band} is not resolved on {} points",
                    grid.n_points()
                )));
            }
        }
        let xs = grid.nodes();
        match (*self, geometry.kind) {
            (Self::SpinWave { theta, n }, _) => spin_wave_exact(geometry, grid, theta, n, 0.0),
            (Self::Constant, TargetKind::FlatTorus2) => {
                MapState::from_coords(geometry, grid, &vec![Vec3::new(0.5, 0.5, 0.0); xs.len()], 0, 0.0)
            }
            (Self::GreatCircle { n }, TargetKind::FlatTorus2) => {
                let pts: Vec<Vec3> = xs.iter().map(|&x| Vec3::new(n as f64 * x, 0.0, 0.0)).collect();
                MapState::from_coords(geometry, grid, &pts, 0, 0.0)
            }
            (Self::RandomSmooth { seed, band }, TargetKind::FlatTorus2) => {
                let pts = random_torus_map(&grid, seed, band);
                MapState::from_coords(geometry, grid, &pts, 0, 0.0)
            }
            (data, _) => {
                let pts: Vec<Vec3> = match data {
                    Self::Constant => vec![Vec3::new(0.0, 0.0, 1.0); xs.len()],
                    Self::GreatCircle { n } => xs
                        .iter()
                        .map(|&x| {
                            let s = 2.0 * PI * n as f64 * x;
                            Vec3::new(s.cos(), s.sin(), 0.0)
                        })
                        .collect(),
                    Self::RandomSmooth { seed, band } => random_sphere_map(&grid, seed, band),
                    Self::SpinWave { .. } => unreachable!(),
                };
                if geometry.kind == TargetKind::Sphere2 {
                    MapState::from_coords(geometry, grid, &pts, 0, 0.0)
                } else {
                    place_on_cp1(geometry, grid, &pts, 0.0)
                }
            }
        }
    }
}
