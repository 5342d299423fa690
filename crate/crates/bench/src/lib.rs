//! Shared fixtures for the benchmarks in `benches/`.

use rrmmse_core::sim::{generate_scene, simulate_measurement, SceneConfig};
use rrmmse_core::{
    build_sensing_matrix, Geometry, Measurement, NoiseModel, SensingMatrix, SpectrumSupport,
};

/// Desk geometry with `k` evenly spaced lines, a 20% scene and a 30 dB measurement.
pub struct Fixture {
    pub geometry: Geometry,
    pub h: SensingMatrix,
    pub v: Measurement,
    pub noise: NoiseModel,
}

pub fn desk_fixture(k: usize) -> Fixture {
    let geometry = Geometry::desk();
    let n = geometry.line_count();
    let lines: Vec<usize> = (0..k).map(|i| i * n / k).collect();
    let support = SpectrumSupport::from_indices(n, &lines).expect("lines within the grid");
    let h = build_sensing_matrix(&support, &geometry.frequencies, &geometry.ranges).expect("non-empty support");
    let scene = generate_scene(&SceneConfig::new(0.2, 1), &geometry.ranges).expect("valid scene");
    let (v, noise) = simulate_measurement(&h, &scene, 30.0, 2).expect("matching dimensions");
    Fixture { geometry, h, v, noise }
}
