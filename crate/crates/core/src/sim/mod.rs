//! Monte-Carlo simulation harness: scenes, measurements, metrics and experiments.

pub mod config;
pub mod experiment;
pub mod measure;
pub mod metrics;
pub mod profile;
pub mod rng;
pub mod scene;

pub use config::ExperimentConfig;
pub use experiment::{report, run_experiment, CellSummary, ExperimentRecord, TrialRecord};
pub use measure::{simulate_measurement, simulate_measurement_at, simulate_measurement_with_floor, DEFAULT_NOISE_FLOOR};
pub use metrics::{mse_from_posterior, mse_ground_truth, support_metrics, SupportMetrics};
pub use profile::emit_profile_table;
pub use scene::{gaussian_scene, generate_scene, Scene, SceneConfig};
