//! Noisy measurements at a fixed realised SNR.

use rand_distr::{Distribution, StandardNormal};

use super::rng::rng_from_seed;
use super::scene::Scene;
use crate::bayes::{Measurement, NoiseModel};
use crate::c64;
use crate::error::{Error, Result};
use crate::grid::SensingMatrix;
use crate::linalg;

/// Noise variance used when the scene reflects nothing.
pub const DEFAULT_NOISE_FLOOR: f64 = 1e-9;

/// `v = H γ + n` with `σ_n² = (‖Hγ‖²/K) / 10^{snr/10}`, so the per-measurement
/// SNR is set by the realised signal power.
pub fn simulate_measurement(h: &SensingMatrix, scene: &Scene, snr_db: f64, seed: u64) -> Result<(Measurement, NoiseModel)> {
    simulate_measurement_with_floor(h, scene, snr_db, seed, DEFAULT_NOISE_FLOOR)
}

pub fn simulate_measurement_with_floor(
    h: &SensingMatrix,
    scene: &Scene,
    snr_db: f64,
    seed: u64,
    floor: f64,
) -> Result<(Measurement, NoiseModel)> {
    if scene.gamma.len() != h.cols() {
        return Err(Error::DimensionMismatch {
            what: "scene length",
            expected: h.cols(),
            found: scene.gamma.len(),
        });
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid("noise.snr_db", "must be finite"));
    }
    let clean = linalg::times(h.entries(), &scene.gamma);
    let power = clean.iter().map(|z| z.norm_sqr()).sum::<f64>() / clean.len() as f64;
    let variance = if power > 0.0 {
        power / 10f64.powf(snr_db / 10.0)
    } else {
        log::warn!("scene carries no signal; using the noise floor {floor:e}");
        floor
    };
    let noise = NoiseModel::new(variance)?;
    Ok((add_noise(clean, noise, seed), noise))
}

/// `v = H γ + n` at a given noise variance.
pub fn simulate_measurement_at(h: &SensingMatrix, gamma: &[c64], noise: NoiseModel, seed: u64) -> Result<Measurement> {
    if gamma.len() != h.cols() {
        return Err(Error::DimensionMismatch {
            what: "scene length",
            expected: h.cols(),
            found: gamma.len(),
        });
    }
    Ok(add_noise(linalg::times(h.entries(), gamma), noise, seed))
}

fn add_noise(clean: Vec<c64>, noise: NoiseModel, seed: u64) -> Measurement {
    let mut rng = rng_from_seed(seed);
    let s = (noise.variance() / 2.0).sqrt();
    let values = clean
        .into_iter()
        .map(|z| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            z + c64::new(s * re, s * im)
        })
        .collect();
    Measurement::new(values)
}
