//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::design::NoiseReference;
use crate::error::{Error, Result};
use crate::grid::Geometry;
use crate::rrmmse::RrmmseConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub bandwidth_hz: f64,
    pub timewidth_s: f64,
    pub oversampling: usize,
    /// Recorded with the results; relative phases do not depend on it.
    pub carrier_hz: Option<f64>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 20e3,
            timewidth_s: 2.5e-3,
            oversampling: 8,
            carrier_hz: None,
        }
    }
}

impl GeometryConfig {
    pub fn paper_scale() -> Self {
        Self {
            timewidth_s: 10e-3,
            oversampling: 10,
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<Geometry> {
        Geometry::from_window(self.bandwidth_hz, self.timewidth_s, self.oversampling)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Target occupancies to design for, each in `(0, 1]`.
    pub occupancies: Vec<f64>,
    /// Lines per removal block; defaults to `ceil(0.0125 N)`.
    pub block_size: Option<usize>,
    /// Use this support instead of designing one.
    pub support_file: Option<PathBuf>,
    /// Flat prior variance used while designing; defaults to the estimator's.
    pub design_prior_variance: Option<f64>,
    /// Noise variance used while designing; defaults to the design prior
    /// variance divided by the scene SNR.
    pub design_noise_variance: Option<f64>,
    pub noise_reference: NoiseReference,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            occupancies: vec![0.5, 0.75, 1.0],
            block_size: None,
            support_file: None,
            design_prior_variance: None,
            design_noise_variance: None,
            noise_reference: NoiseReference::FullComb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSettings {
    /// Fractions `ρ` of eligible bins holding scatterers.
    pub target_occupancies: Vec<f64>,
    /// Range of `20 log10 |γ|`.
    pub magnitude_db: [f64; 2],
    /// 1-based eligible bins; every bin but the first by default.
    pub eligible_bins: Option<Vec<usize>>,
    /// Scatterers at or below this amplitude (dB) do not count against recall.
    pub detection_floor_db: f64,
}

impl Default for SceneSettings {
    fn default() -> Self {
        Self {
            target_occupancies: vec![0.2],
            magnitude_db: [-10.0, 30.0],
            eligible_bins: None,
            detection_floor_db: -10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSettings {
    pub snr_db: f64,
    /// Noise variance used for scenes without any signal.
    pub floor: f64,
}

impl Default for NoiseSettings {
    fn default() -> Self {
        Self {
            snr_db: 30.0,
            floor: crate::sim::measure::DEFAULT_NOISE_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
    /// Write wall-clock times; off by default so reruns are byte-identical.
    pub include_timing: bool,
    /// Write a per-bin profile table for the first trial of every cell.
    pub profiles: bool,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            include_timing: false,
            profiles: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    /// Also run the one-step flat-prior MMSE and the matched filter.
    pub baselines: bool,
    pub geometry: GeometryConfig,
    pub spectrum: SpectrumConfig,
    pub scene: SceneSettings,
    pub noise: NoiseSettings,
    pub estimator: RrmmseConfig,
    pub output: OutputSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 20,
            baselines: true,
            geometry: GeometryConfig::default(),
            spectrum: SpectrumConfig::default(),
            scene: SceneSettings::default(),
            noise: NoiseSettings::default(),
            estimator: RrmmseConfig::default(),
            output: OutputSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|source| Error::Toml {
            path: origin.to_owned(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text, path)?;
        if let Some(rel) = cfg.spectrum.support_file.take() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.spectrum.support_file = Some(if rel.is_absolute() { rel } else { base.join(rel) });
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Swaps in the full-size geometry (4000 lines, 401 bins).
    pub fn use_paper_scale(&mut self) {
        let carrier = self.geometry.carrier_hz;
        self.geometry = GeometryConfig::paper_scale();
        self.geometry.carrier_hz = carrier;
    }

    pub fn design_prior_variance(&self) -> f64 {
        self.spectrum.design_prior_variance.unwrap_or(self.estimator.prior_variance)
    }

    pub fn design_noise_variance(&self) -> f64 {
        self.spectrum
            .design_noise_variance
            .unwrap_or_else(|| self.design_prior_variance() / 10f64.powf(self.noise.snr_db / 10.0))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        let g = &self.geometry;
        if !(g.bandwidth_hz > 0.0 && g.bandwidth_hz.is_finite()) {
            return Err(Error::invalid("geometry.bandwidth_hz", "must be positive"));
        }
        if !(g.timewidth_s > 0.0 && g.timewidth_s.is_finite()) {
            return Err(Error::invalid("geometry.timewidth_s", "must be positive"));
        }
        if g.oversampling == 0 {
            return Err(Error::invalid("geometry.oversampling", "must be at least 1"));
        }
        if g.carrier_hz.is_some_and(|f| !(f > 0.0)) {
            return Err(Error::invalid("geometry.carrier_hz", "must be positive"));
        }
        if self.spectrum.support_file.is_none() && self.spectrum.occupancies.is_empty() {
            return Err(Error::invalid("spectrum.occupancies", "list at least one occupancy"));
        }
        if let Some(bad) = self.spectrum.occupancies.iter().find(|&&o| !(o > 0.0 && o <= 1.0)) {
            return Err(Error::invalid("spectrum.occupancies", format!("{bad} is outside (0, 1]")));
        }
        if self.spectrum.block_size == Some(0) {
            return Err(Error::invalid("spectrum.block_size", "must be at least 1"));
        }
        for (field, v) in [
            ("spectrum.design_prior_variance", self.spectrum.design_prior_variance),
            ("spectrum.design_noise_variance", self.spectrum.design_noise_variance),
        ] {
            if v.is_some_and(|x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::invalid(field, "must be positive and finite"));
            }
        }
        if self.scene.target_occupancies.is_empty() {
            return Err(Error::invalid("scene.target_occupancies", "list at least one value"));
        }
        if let Some(bad) = self.scene.target_occupancies.iter().find(|&&r| !(0.0..=1.0).contains(&r)) {
            return Err(Error::invalid("scene.target_occupancies", format!("{bad} is outside [0, 1]")));
        }
        let [lo, hi] = self.scene.magnitude_db;
        if !(lo < hi) {
            return Err(Error::invalid("scene.magnitude_db", "low must be below high"));
        }
        if self.scene.eligible_bins.as_ref().is_some_and(|b| b.contains(&0)) {
            return Err(Error::invalid("scene.eligible_bins", "bins are 1-based"));
        }
        if !self.noise.snr_db.is_finite() {
            return Err(Error::invalid("noise.snr_db", "must be finite"));
        }
        if !(self.noise.floor > 0.0) {
            return Err(Error::invalid("noise.floor", "must be positive"));
        }
        self.estimator.validate()
    }
}
