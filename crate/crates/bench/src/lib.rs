//! Shared fixtures for the criterion benches.

use std::f64::consts::PI;

use smf_core::{InitialData, MapState, PeriodicGrid, TargetGeometry};

/// Spin wave θ = π/4, n = 1 on `n` points.
pub fn spin_wave(n: usize) -> MapState {
    InitialData::SpinWave { theta: PI / 4.0, n: 1 }
        .build(TargetGeometry::sphere2(), PeriodicGrid::new(n).expect("valid grid size"))
        .expect("spin wave builds")
}

/// Band-4 random data on the sphere.
pub fn random_sphere(n: usize, seed: u64) -> MapState {
    InitialData::RandomSmooth { seed, band: 4 }
        .build(TargetGeometry::sphere2(), PeriodicGrid::new(n).expect("valid grid size"))
        .expect("random data builds")
}

pub fn sampled(grid: &PeriodicGrid) -> Vec<f64> {
    grid.nodes().iter().map(|&x| (2.0 * PI * x).sin() + 0.3 * (6.0 * PI * x).cos()).collect()
}
