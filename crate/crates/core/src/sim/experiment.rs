//! Monte-Carlo sweeps over spectral occupancy and scene sparsity.
//!
//! Every `(spectrum, ρ)` cell runs the configured number of trials. Scenes
//! depend only on `(seed, ρ, trial)`, so all spectra see the same scenes;
//! noise additionally depends on the spectrum.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::measure::simulate_measurement_with_floor;
use super::metrics::{mse_from_posterior, mse_ground_truth, support_metrics};
use super::profile::emit_profile_table;
use super::rng::{stream_seed, Stream};
use super::scene::{generate_scene, SceneConfig};
use crate::bayes::{matched_filter, mmse_estimate_via, DiagonalPrior, NoiseModel};
use crate::design::{BlockPartition, DesignProblem, MfiReport};
use crate::error::{Error, Result};
use crate::grid::{
    build_sensing_matrix, compute_coarray, gram_offdiag_stats, numerical_rank, Geometry, SensingMatrix, SpectrumSupport,
};
use crate::io::{fmt_f64, read_json, write_csv, write_json, write_text};
use crate::rrmmse::{run_rrmmse_with_rank, Termination, RANK_TOLERANCE};

/// One spectrum taking part in an experiment.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub label: String,
    pub support: SpectrumSupport,
    pub report: Option<MfiReport>,
}

/// Designs (or loads) every spectrum listed in the configuration.
pub fn prepare_spectra(cfg: &ExperimentConfig, geometry: &Geometry) -> Result<Vec<Spectrum>> {
    if let Some(path) = &cfg.spectrum.support_file {
        let support: SpectrumSupport = read_json(path)?;
        if support.line_count() != geometry.line_count() {
            return Err(Error::DimensionMismatch {
                what: "support line count",
                expected: geometry.line_count(),
                found: support.line_count(),
            });
        }
        return Ok(vec![Spectrum {
            label: "file".to_owned(),
            support,
            report: None,
        }]);
    }
    cfg.spectrum
        .occupancies
        .iter()
        .map(|&occ| {
            let (support, report) = design_for(cfg, geometry, occ)?;
            Ok(Spectrum {
                label: occupancy_label(occ),
                support,
                report: Some(report),
            })
        })
        .collect()
}

/// Greedy design at one target occupancy with the configured design prior and noise.
pub fn design_for(cfg: &ExperimentConfig, geometry: &Geometry, occupancy: f64) -> Result<(SpectrumSupport, MfiReport)> {
    let partition = match cfg.spectrum.block_size {
        Some(size) => BlockPartition::new(geometry.line_count(), size)?,
        None => BlockPartition::default_for(&geometry.frequencies),
    };
    let prior = DiagonalPrior::uniform(geometry.bin_count(), cfg.design_prior_variance())?;
    let noise = NoiseModel::new(cfg.design_noise_variance())?;
    DesignProblem::new(geometry.frequencies, geometry.ranges, prior, noise)?
        .with_noise_reference(cfg.spectrum.noise_reference)
        .with_condition_cap(cfg.estimator.condition_cap)
        .design(&partition, occupancy)
}

pub fn occupancy_label(occ: f64) -> String {
    format!("occ{:03}", (occ * 100.0).round() as u32)
}

pub fn rho_label(rho: f64) -> String {
    format!("rho{:03}", (rho * 100.0).round() as u32)
}

/// Static properties of one spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumInfo {
    pub label: String,
    pub occupancy: f64,
    pub preserved: usize,
    pub rank: usize,
    pub coarray_holes: usize,
    pub max_offdiag: f64,
    pub integrated_sidelobe: f64,
}

/// Metrics of one Monte-Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub spectrum: String,
    pub occupancy: f64,
    pub rho: f64,
    pub trial: usize,
    pub scene_seed: u64,
    pub noise_seed: u64,
    pub scatterers: usize,
    pub noise_variance: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub support_size: usize,
    pub rank_exceeded: bool,
    pub mse_ke: f64,
    pub mse_gt: f64,
    pub mmse_mse_ke: Option<f64>,
    pub mmse_mse_gt: Option<f64>,
    pub mf_mse_gt: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub precision_undefined: bool,
    pub wall_s: Option<f64>,
}

pub const TRIALS_HEADER: [&str; 21] = [
    "spectrum",
    "occupancy",
    "rho",
    "trial",
    "scene_seed",
    "noise_seed",
    "scatterers",
    "noise_variance",
    "iterations",
    "termination",
    "support_size",
    "rank_exceeded",
    "mse_ke",
    "mse_gt",
    "mmse_mse_ke",
    "mmse_mse_gt",
    "mf_mse_gt",
    "precision",
    "recall",
    "precision_undefined",
    "wall_s",
];

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

impl TrialRecord {
    fn csv_row(&self) -> Vec<String> {
        vec![
            self.spectrum.clone(),
            fmt_f64(self.occupancy),
            fmt_f64(self.rho),
            self.trial.to_string(),
            self.scene_seed.to_string(),
            self.noise_seed.to_string(),
            self.scatterers.to_string(),
            fmt_f64(self.noise_variance),
            self.iterations.to_string(),
            self.termination.as_str().to_owned(),
            self.support_size.to_string(),
            self.rank_exceeded.to_string(),
            fmt_f64(self.mse_ke),
            fmt_f64(self.mse_gt),
            opt(self.mmse_mse_ke),
            opt(self.mmse_mse_gt),
            opt(self.mf_mse_gt),
            fmt_f64(self.precision),
            fmt_f64(self.recall),
            self.precision_undefined.to_string(),
            opt(self.wall_s),
        ]
    }
}

/// Aggregates of one `(spectrum, ρ)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub spectrum: String,
    pub occupancy: f64,
    pub rho: f64,
    pub trials: usize,
    pub scatterers_mean: f64,
    pub iterations_mean: f64,
    pub plateau_fraction: f64,
    pub mse_gt_mean: f64,
    pub mse_gt_std: f64,
    pub mse_gt_db: f64,
    pub mse_ke_mean: f64,
    pub mse_ke_std: f64,
    pub mse_ke_db: f64,
    pub mmse_mse_gt_mean: Option<f64>,
    pub mmse_mse_ke_mean: Option<f64>,
    pub mf_mse_gt_mean: Option<f64>,
    pub precision_mean: f64,
    pub recall_mean: f64,
    pub wall_s_mean: Option<f64>,
}

pub const SUMMARY_HEADER: [&str; 19] = [
    "spectrum",
    "occupancy",
    "rho",
    "trials",
    "scatterers_mean",
    "iterations_mean",
    "plateau_fraction",
    "mse_gt_mean",
    "mse_gt_std",
    "mse_gt_db",
    "mse_ke_mean",
    "mse_ke_std",
    "mse_ke_db",
    "mmse_mse_gt_mean",
    "mmse_mse_ke_mean",
    "mf_mse_gt_mean",
    "precision_mean",
    "recall_mean",
    "wall_s_mean",
];

impl CellSummary {
    fn csv_row(&self) -> Vec<String> {
        vec![
            self.spectrum.clone(),
            fmt_f64(self.occupancy),
            fmt_f64(self.rho),
            self.trials.to_string(),
            fmt_f64(self.scatterers_mean),
            fmt_f64(self.iterations_mean),
            fmt_f64(self.plateau_fraction),
            fmt_f64(self.mse_gt_mean),
            fmt_f64(self.mse_gt_std),
            fmt_f64(self.mse_gt_db),
            fmt_f64(self.mse_ke_mean),
            fmt_f64(self.mse_ke_std),
            fmt_f64(self.mse_ke_db),
            opt(self.mmse_mse_gt_mean),
            opt(self.mmse_mse_ke_mean),
            opt(self.mf_mse_gt_mean),
            fmt_f64(self.precision_mean),
            fmt_f64(self.recall_mean),
            opt(self.wall_s_mean),
        ]
    }
}

/// Mean `MSE_GT` and `Tr(K_ε)/M` at each iteration index of one cell.
/// Trials that already stopped contribute their final values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationPoint {
    pub spectrum: String,
    pub rho: f64,
    pub iteration: usize,
    pub mse_gt_mean: f64,
    pub mse_ke_mean: f64,
    pub running: usize,
}

pub const CURVE_HEADER: [&str; 6] = ["spectrum", "rho", "iteration", "mse_gt_mean", "mse_ke_mean", "running"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryInfo {
    pub line_count: usize,
    pub bin_count: usize,
    pub line_spacing_hz: f64,
    pub nyquist_count: usize,
}

/// Everything an experiment produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config: ExperimentConfig,
    pub geometry: GeometryInfo,
    pub spectra: Vec<SpectrumInfo>,
    pub summary: Vec<CellSummary>,
    pub trials: Vec<TrialRecord>,
    pub curves: Vec<IterationPoint>,
}

fn mean(x: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = x.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x.iter().copied());
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

fn mean_opt(x: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = x.collect();
    v.filter(|v| !v.is_empty()).map(|v| mean(v.into_iter()))
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Groups trials by `(spectrum, ρ)` in first-appearance order.
pub fn summarize(trials: &[TrialRecord]) -> Vec<CellSummary> {
    let mut keys: Vec<(String, u64)> = Vec::new();
    for t in trials {
        let key = (t.spectrum.clone(), t.rho.to_bits());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(spectrum, rho_bits)| {
            let cell: Vec<&TrialRecord> = trials
                .iter()
                .filter(|t| t.spectrum == spectrum && t.rho.to_bits() == rho_bits)
                .collect();
            let gt: Vec<f64> = cell.iter().map(|t| t.mse_gt).collect();
            let ke: Vec<f64> = cell.iter().map(|t| t.mse_ke).collect();
            let mse_gt_mean = mean(gt.iter().copied());
            let mse_ke_mean = mean(ke.iter().copied());
            CellSummary {
                spectrum,
                occupancy: cell[0].occupancy,
                rho: cell[0].rho,
                trials: cell.len(),
                scatterers_mean: mean(cell.iter().map(|t| t.scatterers as f64)),
                iterations_mean: mean(cell.iter().map(|t| t.iterations as f64)),
                plateau_fraction: mean(cell.iter().map(|t| f64::from(u8::from(t.termination == Termination::Plateau)))),
                mse_gt_mean,
                mse_gt_std: std_dev(&gt),
                mse_gt_db: db(mse_gt_mean),
                mse_ke_mean,
                mse_ke_std: std_dev(&ke),
                mse_ke_db: db(mse_ke_mean),
                mmse_mse_gt_mean: mean_opt(cell.iter().map(|t| t.mmse_mse_gt)),
                mmse_mse_ke_mean: mean_opt(cell.iter().map(|t| t.mmse_mse_ke)),
                mf_mse_gt_mean: mean_opt(cell.iter().map(|t| t.mf_mse_gt)),
                precision_mean: mean(cell.iter().map(|t| t.precision)),
                recall_mean: mean(cell.iter().map(|t| t.recall)),
                wall_s_mean: mean_opt(cell.iter().map(|t| t.wall_s)),
            }
        })
        .collect()
}

fn spectrum_info(label: &str, support: &SpectrumSupport, h: &SensingMatrix, rank: usize) -> SpectrumInfo {
    let stats = gram_offdiag_stats(h);
    SpectrumInfo {
        label: label.to_owned(),
        occupancy: support.occupancy(),
        preserved: support.preserved_count(),
        rank,
        coarray_holes: compute_coarray(support).holes_within_span().len(),
        max_offdiag: stats.max_offdiag,
        integrated_sidelobe: stats.integrated_sidelobe,
    }
}

/// Runs the full grid of spectra and scene sparsities. When `out` is given,
/// all tables, supports and profiles are written below it.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentRecord> {
    cfg.validate()?;
    let geometry = cfg.geometry.build()?;
    let spectra = prepare_spectra(cfg, &geometry)?;
    // Artifacts name their own directory as ".", so identical runs written
    // to different places stay byte-identical.
    let mut recorded = cfg.clone();
    recorded.output.dir = PathBuf::from(".");
    if let Some(dir) = out {
        write_text(&dir.join("config.toml"), &recorded.to_toml())?;
        for s in &spectra {
            write_json(&dir.join("supports").join(format!("{}.json", s.label)), &s.support)?;
            if let Some(report) = &s.report {
                write_json(&dir.join("supports").join(format!("{}_design.json", s.label)), report)?;
            }
        }
    }

    let eligible = cfg
        .scene
        .eligible_bins
        .as_ref()
        .map(|bins| bins.iter().map(|b| b - 1).collect::<Vec<_>>());
    let mut estimator = cfg.estimator.clone();
    estimator.keep_snapshots = true;

    let mut infos = Vec::new();
    let mut trials = Vec::new();
    let mut curves = Vec::new();
    for (si, spectrum) in spectra.iter().enumerate() {
        let h = build_sensing_matrix(&spectrum.support, &geometry.frequencies, &geometry.ranges)?;
        let rank = numerical_rank(&h, RANK_TOLERANCE);
        infos.push(spectrum_info(&spectrum.label, &spectrum.support, &h, rank));
        log::info!(
            "spectrum {}: {} of {} lines, rank {rank}",
            spectrum.label,
            spectrum.support.preserved_count(),
            geometry.line_count()
        );

        for (ri, &rho) in cfg.scene.target_occupancies.iter().enumerate() {
            let mut gt_paths: Vec<Vec<f64>> = Vec::new();
            let mut ke_paths: Vec<Vec<f64>> = Vec::new();
            for t in 0..cfg.trials {
                let scene_seed = stream_seed(cfg.seed, Stream::Scene, &[ri as u64, t as u64]);
                let noise_seed = stream_seed(cfg.seed, Stream::Noise, &[si as u64, ri as u64, t as u64]);
                let scene_cfg = SceneConfig {
                    target_occupancy: rho,
                    magnitude_range_db: cfg.scene.magnitude_db,
                    seed: scene_seed,
                    eligible_bins: eligible.clone(),
                };
                let scene = generate_scene(&scene_cfg, &geometry.ranges)?;
                let (v, noise) = simulate_measurement_with_floor(&h, &scene, cfg.noise.snr_db, noise_seed, cfg.noise.floor)?;

                let started = Instant::now();
                let result = run_rrmmse_with_rank(&h, &v, noise, &estimator, rank)?;
                let wall = started.elapsed().as_secs_f64();

                let (mmse_ke, mmse_gt, mf_gt, matched) = if cfg.baselines {
                    let prior = DiagonalPrior::uniform(geometry.bin_count(), cfg.estimator.prior_variance)?;
                    let one_step = mmse_estimate_via(&h, &prior, noise, &v, cfg.estimator.route)?;
                    let mf = matched_filter(&h, &v)?;
                    (
                        Some(one_step.trace_per_bin),
                        Some(mse_ground_truth(&scene.gamma, &one_step.estimate)?),
                        Some(mse_ground_truth(&scene.gamma, &mf)?),
                        Some(mf),
                    )
                } else {
                    (None, None, None, None)
                };

                let mut gt_path = Vec::with_capacity(result.snapshots.len());
                for snap in &result.snapshots {
                    gt_path.push(mse_ground_truth(&scene.gamma, snap)?);
                }
                gt_paths.push(gt_path);
                ke_paths.push(result.history.iter().map(|r| r.trace_per_bin).collect());

                let sm = support_metrics(&scene.true_support, &result.support.sorted(), &scene.gamma, cfg.scene.detection_floor_db);
                let final_gt = mse_ground_truth(&scene.gamma, &result.estimate)?;
                if let (Some(dir), true, 0) = (out, cfg.output.profiles, t) {
                    let matched = match matched {
                        Some(mf) => mf,
                        None => matched_filter(&h, &v)?,
                    };
                    let path = dir
                        .join("profiles")
                        .join(format!("{}_{}.csv", spectrum.label, rho_label(rho)));
                    emit_profile_table(&scene, &matched, &result, &geometry.ranges, &path)?;
                }
                trials.push(TrialRecord {
                    spectrum: spectrum.label.clone(),
                    occupancy: spectrum.support.occupancy(),
                    rho,
                    trial: t,
                    scene_seed,
                    noise_seed,
                    scatterers: scene.scatterer_count(),
                    noise_variance: noise.variance(),
                    iterations: result.iterations(),
                    termination: result.termination,
                    support_size: result.support.len(),
                    rank_exceeded: result.rank_exceeded,
                    mse_ke: mse_from_posterior(&result.posterior_variance),
                    mse_gt: final_gt,
                    mmse_mse_ke: mmse_ke,
                    mmse_mse_gt: mmse_gt,
                    mf_mse_gt: mf_gt,
                    precision: sm.precision,
                    recall: sm.recall,
                    precision_undefined: sm.precision_undefined,
                    wall_s: cfg.output.include_timing.then_some(wall),
                });
                let last = trials.last().expect("just pushed");
                if let Some(p) = gt_paths.last_mut() {
                    p.push(last.mse_gt);
                }
                if let Some(p) = ke_paths.last_mut() {
                    p.push(last.mse_ke);
                }
            }
            curves.extend(iteration_curve(&spectrum.label, rho, &gt_paths, &ke_paths));
        }
    }

    let record = ExperimentRecord {
        config: recorded,
        geometry: GeometryInfo {
            line_count: geometry.line_count(),
            bin_count: geometry.bin_count(),
            line_spacing_hz: geometry.frequencies.line_spacing_hz(),
            nyquist_count: geometry.frequencies.nyquist_count(),
        },
        spectra: infos,
        summary: summarize(&trials),
        trials,
        curves,
    };
    if let Some(dir) = out {
        write_record(&record, dir)?;
    }
    Ok(record)
}

/// Per-iteration means. Each path holds one value per iteration followed by
/// the trial's final value, which is carried forward once the trial stops.
fn iteration_curve(label: &str, rho: f64, gt: &[Vec<f64>], ke: &[Vec<f64>]) -> Vec<IterationPoint> {
    let longest = gt.iter().map(|p| p.len()).max().unwrap_or(0);
    (0..longest)
        .map(|i| {
            let at = |p: &Vec<f64>| p[i.min(p.len() - 1)];
            IterationPoint {
                spectrum: label.to_owned(),
                rho,
                iteration: i + 1,
                mse_gt_mean: mean(gt.iter().map(at)),
                mse_ke_mean: mean(ke.iter().map(at)),
                running: gt.iter().filter(|p| p.len() > i + 1).count(),
            }
        })
        .collect()
}

/// Writes `trials.csv`, `summary.csv`, `mse_by_iteration.csv`, `spectra.csv` and `record.json`.
pub fn write_record(record: &ExperimentRecord, dir: &Path) -> Result<()> {
    let rows: Vec<_> = record.trials.iter().map(TrialRecord::csv_row).collect();
    write_csv(&dir.join("trials.csv"), &TRIALS_HEADER, &rows)?;
    write_summary(&record.summary, &dir.join("summary.csv"))?;
    let curve_rows: Vec<_> = record
        .curves
        .iter()
        .map(|c| {
            vec![
                c.spectrum.clone(),
                fmt_f64(c.rho),
                c.iteration.to_string(),
                fmt_f64(c.mse_gt_mean),
                fmt_f64(c.mse_ke_mean),
                c.running.to_string(),
            ]
        })
        .collect();
    write_csv(&dir.join("mse_by_iteration.csv"), &CURVE_HEADER, &curve_rows)?;
    let spectra_rows: Vec<_> = record
        .spectra
        .iter()
        .map(|s| {
            vec![
                s.label.clone(),
                fmt_f64(s.occupancy),
                s.preserved.to_string(),
                s.rank.to_string(),
                s.coarray_holes.to_string(),
                fmt_f64(s.max_offdiag),
                fmt_f64(s.integrated_sidelobe),
            ]
        })
        .collect();
    write_csv(
        &dir.join("spectra.csv"),
        &["spectrum", "occupancy", "preserved", "rank", "coarray_holes", "max_offdiag", "integrated_sidelobe"],
        &spectra_rows,
    )?;
    write_json(&dir.join("record.json"), record)
}

pub fn write_summary(summary: &[CellSummary], path: &Path) -> Result<()> {
    let rows: Vec<_> = summary.iter().map(CellSummary::csv_row).collect();
    write_csv(path, &SUMMARY_HEADER, &rows)
}

/// Reads a `trials.csv` written by [`write_record`].
pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    let csv_err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut out = Vec::new();
    for row in reader.deserialize::<TrialRow>() {
        out.push(row.map_err(csv_err)?.into());
    }
    Ok(out)
}

#[derive(Deserialize)]
struct TrialRow {
    spectrum: String,
    occupancy: f64,
    rho: f64,
    trial: usize,
    scene_seed: u64,
    noise_seed: u64,
    scatterers: usize,
    noise_variance: f64,
    iterations: usize,
    termination: Termination,
    support_size: usize,
    rank_exceeded: bool,
    mse_ke: f64,
    mse_gt: f64,
    mmse_mse_ke: Option<f64>,
    mmse_mse_gt: Option<f64>,
    mf_mse_gt: Option<f64>,
    precision: f64,
    recall: f64,
    precision_undefined: bool,
    wall_s: Option<f64>,
}

impl From<TrialRow> for TrialRecord {
    fn from(r: TrialRow) -> Self {
        Self {
            spectrum: r.spectrum,
            occupancy: r.occupancy,
            rho: r.rho,
            trial: r.trial,
            scene_seed: r.scene_seed,
            noise_seed: r.noise_seed,
            scatterers: r.scatterers,
            noise_variance: r.noise_variance,
            iterations: r.iterations,
            termination: r.termination,
            support_size: r.support_size,
            rank_exceeded: r.rank_exceeded,
            mse_ke: r.mse_ke,
            mse_gt: r.mse_gt,
            mmse_mse_ke: r.mmse_mse_ke,
            mmse_mse_gt: r.mmse_mse_gt,
            mf_mse_gt: r.mf_mse_gt,
            precision: r.precision,
            recall: r.recall,
            precision_undefined: r.precision_undefined,
            wall_s: r.wall_s,
        }
    }
}

/// Re-aggregates one or more `trials.csv` files into a summary table and a
/// plain-text report. Returns the paths written.
pub fn report(inputs: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    let mut trials = Vec::new();
    for input in inputs {
        let file = if input.is_dir() { input.join("trials.csv") } else { input.clone() };
        trials.extend(read_trials(&file)?);
    }
    if trials.is_empty() {
        return Err(Error::invalid("report inputs", "no trial rows found"));
    }
    let summary = summarize(&trials);
    let csv_path = out.join("report_summary.csv");
    write_summary(&summary, &csv_path)?;
    let text_path = out.join("report.txt");
    write_text(&text_path, &render_table(&summary))?;
    Ok(vec![csv_path, text_path])
}

/// Fixed-width text table of the headline metrics.
pub fn render_table(summary: &[CellSummary]) -> String {
    let mut s = format!(
        "{:<10} {:>6} {:>6} {:>8} {:>9} {:>11} {:>11} {:>10} {:>8}\n",
        "spectrum", "rho", "trials", "iters", "plateau", "MSE_GT dB", "MSE_Ke dB", "precision", "recall"
    );
    for c in summary {
        s.push_str(&format!(
            "{:<10} {:>6.3} {:>6} {:>8.2} {:>9.3} {:>11.3} {:>11.3} {:>10.3} {:>8.3}\n",
            c.spectrum,
            c.rho,
            c.trials,
            c.iterations_mean,
            c.plateau_fraction,
            c.mse_gt_db,
            c.mse_ke_db,
            c.precision_mean,
            c.recall_mean
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig {
            trials: 2,
            ..Default::default()
        };
        cfg.spectrum.occupancies = vec![1.0];
        cfg.scene.target_occupancies = vec![0.05];
        cfg
    }

    #[test]
    fn labels() {
        assert_eq!(occupancy_label(0.5), "occ050");
        assert_eq!(occupancy_label(1.0), "occ100");
        assert_eq!(rho_label(0.2), "rho020");
    }

    #[test]
    fn summary_statistics() {
        let base = TrialRecord {
            spectrum: "a".into(),
            occupancy: 1.0,
            rho: 0.2,
            trial: 0,
            scene_seed: 0,
            noise_seed: 0,
            scatterers: 2,
            noise_variance: 1.0,
            iterations: 3,
            termination: Termination::Plateau,
            support_size: 2,
            rank_exceeded: false,
            mse_ke: 1.0,
            mse_gt: 1.0,
            mmse_mse_ke: None,
            mmse_mse_gt: None,
            mf_mse_gt: None,
            precision: 1.0,
            recall: 1.0,
            precision_undefined: false,
            wall_s: None,
        };
        let mut b = base.clone();
        b.mse_gt = 3.0;
        b.termination = Termination::MaxIterations;
        let s = summarize(&[base, b]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].mse_gt_mean, 2.0);
        assert!((s[0].mse_gt_std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s[0].plateau_fraction, 0.5);
        assert_eq!(s[0].mmse_mse_gt_mean, None);
    }

    #[test]
    fn curves_carry_final_values_forward() {
        let gt = vec![vec![4.0, 2.0, 2.0], vec![6.0, 1.0]];
        let ke = gt.clone();
        let c = iteration_curve("x", 0.1, &gt, &ke);
        assert_eq!(c.len(), 3);
        assert_eq!(c[0].mse_gt_mean, 5.0);
        assert_eq!(c[2].mse_gt_mean, 1.5);
        assert_eq!(c[0].running, 2);
        assert_eq!(c[1].running, 1);
    }

    #[test]
    fn writes_and_reads_back_trials() {
        let dir = tempfile::tempdir().unwrap();
        let record = run_experiment(&tiny_config(), Some(dir.path())).unwrap();
        assert_eq!(record.trials.len(), 2);
        let back = read_trials(&dir.path().join("trials.csv")).unwrap();
        assert_eq!(back, record.trials);
        for f in ["summary.csv", "mse_by_iteration.csv", "record.json", "spectra.csv", "supports/occ100.json"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let profile = std::fs::read_to_string(dir.path().join("profiles/occ100_rho005.csv")).unwrap();
        assert_eq!(profile.lines().count(), 1 + 101);
        let paths = report(&[dir.path().to_owned()], dir.path()).unwrap();
        assert!(paths.iter().all(|p| p.exists()));
    }
}
