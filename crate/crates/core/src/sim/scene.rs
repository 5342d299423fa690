//! Random sparse range profiles.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::rng_from_seed;
use crate::c64;
use crate::error::{Error, Result};
use crate::grid::RangeGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    /// Fraction `ρ` of eligible bins holding a scatterer.
    pub target_occupancy: f64,
    /// Range of `20 log10 |γ|` in dB.
    pub magnitude_range_db: [f64; 2],
    pub seed: u64,
    /// 0-based eligible bins; `None` means every bin except the zero-delay one.
    pub eligible_bins: Option<Vec<usize>>,
}

impl SceneConfig {
    pub fn new(target_occupancy: f64, seed: u64) -> Self {
        Self {
            target_occupancy,
            magnitude_range_db: [-10.0, 30.0],
            seed,
            eligible_bins: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.target_occupancy) {
            return Err(Error::invalid("scene.target_occupancy", "must lie in [0, 1]"));
        }
        let [lo, hi] = self.magnitude_range_db;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::invalid("scene.magnitude_db", "low must be below high"));
        }
        Ok(())
    }

    fn eligible(&self, bins: usize) -> Result<Vec<usize>> {
        match &self.eligible_bins {
            None => Ok((1..bins).collect()),
            Some(list) => {
                let mut v = list.clone();
                v.sort_unstable();
                v.dedup();
                if v.len() != list.len() || v.last().is_some_and(|&m| m >= bins) {
                    return Err(Error::invalid("scene.eligible_bins", "bins must be distinct and within the range grid"));
                }
                Ok(v)
            }
        }
    }

    /// Number of scatterers `floor(ρ · |eligible|)`, at least one when `ρ > 0`.
    pub fn scatterer_count(&self, eligible: usize) -> usize {
        let g = (self.target_occupancy * eligible as f64 + 1e-9).floor() as usize;
        if g == 0 && self.target_occupancy > 0.0 {
            1
        } else {
            g
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(with = "crate::io::interleaved")]
    pub gamma: Vec<c64>,
    /// Occupied bins, ascending, 0-based.
    pub true_support: Vec<usize>,
}

impl Scene {
    pub fn empty(bins: usize) -> Self {
        Self {
            gamma: vec![c64::new(0.0, 0.0); bins],
            true_support: Vec::new(),
        }
    }

    pub fn scatterer_count(&self) -> usize {
        self.true_support.len()
    }
}

/// Places scatterers on distinct eligible bins chosen uniformly at random,
/// with log-uniform magnitudes and uniform phases.
pub fn generate_scene(cfg: &SceneConfig, ranges: &RangeGrid) -> Result<Scene> {
    cfg.validate()?;
    let m = ranges.bin_count();
    let eligible = cfg.eligible(m)?;
    let g = cfg.scatterer_count(eligible.len());
    if g > eligible.len() {
        return Err(Error::NotEnoughEligibleBins {
            available: eligible.len(),
            requested: g,
        });
    }
    if g == 1 && cfg.target_occupancy * (eligible.len() as f64) < 1.0 {
        log::warn!("target occupancy {} rounds to zero scatterers; placing one", cfg.target_occupancy);
    }
    let mut rng = rng_from_seed(cfg.seed);
    let mut bins: Vec<usize> = sample(&mut rng, eligible.len(), g).into_iter().map(|i| eligible[i]).collect();
    let [lo, hi] = cfg.magnitude_range_db;
    let mut scene = Scene::empty(m);
    for &b in &bins {
        let db = rng.random_range(lo..hi);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        scene.gamma[b] = c64::from_polar(10f64.powf(db / 20.0), phase);
    }
    bins.sort_unstable();
    scene.true_support = bins;
    Ok(scene)
}

/// Scene drawn from the flat prior `CN(0, variance I)` on every bin.
pub fn gaussian_scene(bins: usize, variance: f64, seed: u64) -> Scene {
    let mut rng = rng_from_seed(seed);
    let s = (variance / 2.0).sqrt();
    let gamma: Vec<c64> = (0..bins)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            c64::new(s * re, s * im)
        })
        .collect();
    Scene {
        true_support: (0..bins).collect(),
        gamma,
    }
}
