use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rrmmse_core::io::{read_json, write_json, write_text};
use rrmmse_core::sim::experiment::{design_for, occupancy_label, render_table};
use rrmmse_core::sim::rng::{stream_seed, Stream};
use rrmmse_core::sim::{self, ExperimentConfig, SceneConfig};
use rrmmse_core::{
    build_sensing_matrix, compute_coarray, matched_filter, mmse_estimate_via, run_rrmmse, DiagonalPrior, Error,
    ErrorKind, Geometry, Measurement, NoiseModel, SpectrumSupport,
};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "rrmmse", version, about = "Sparse radar spectrum design and RRMMSE range-profile estimation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the full-size geometry (4000 lines, 401 range bins).
    #[arg(long, global = true)]
    paper_scale: bool,
    /// More log output; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Design sparse spectra by greedy block removal.
    Design {
        /// Target occupancies; defaults to `spectrum.occupancies`.
        #[arg(long = "occupancy")]
        occupancies: Vec<f64>,
    },
    /// Draw a scene and a noisy measurement for a spectrum.
    Simulate {
        /// Support JSON; the full spectrum when omitted.
        #[arg(long)]
        support: Option<PathBuf>,
        /// Scene occupancy; defaults to the first `scene.target_occupancies` entry.
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Run one estimator on a measurement.
    Estimate {
        #[arg(long)]
        support: Option<PathBuf>,
        #[arg(long)]
        measurement: PathBuf,
        #[arg(long, value_enum, default_value = "rrmmse")]
        estimator: Estimator,
    },
    /// Monte-Carlo sweep over spectral occupancy and scene occupancy.
    Sweep,
    /// Aggregate `trials.csv` files (or directories holding them) into summary tables.
    Report {
        inputs: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    /// Matched filter `H^H v`.
    Mf,
    /// One-step MMSE under the flat prior.
    Mmse,
    /// Iterative reduced-rank MMSE.
    Rrmmse,
}

/// On-disk measurement: interleaved values plus the noise variance.
#[derive(Serialize, Deserialize)]
struct MeasurementFile {
    noise_variance: f64,
    #[serde(flatten)]
    measurement: Measurement,
}

/// On-disk scene with 1-based bins.
#[derive(Serialize)]
struct SceneFile<'a> {
    #[serde(with = "rrmmse_core::io::interleaved")]
    gamma: &'a [rrmmse_core::c64],
    true_support: Vec<usize>,
}

#[derive(Serialize)]
struct LinearEstimateFile {
    estimator: &'static str,
    #[serde(with = "rrmmse_core::io::interleaved")]
    estimate: Vec<rrmmse_core::c64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    posterior_variance: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_per_bin: Option<f64>,
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if common.paper_scale {
        cfg.use_paper_scale();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output.dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_support(path: Option<&Path>, geometry: &Geometry) -> Result<SpectrumSupport, Error> {
    let support = match path {
        Some(p) => read_json::<SpectrumSupport>(p)?,
        None => SpectrumSupport::full(geometry.line_count()),
    };
    if support.line_count() != geometry.line_count() {
        return Err(Error::DimensionMismatch {
            what: "support line count",
            expected: geometry.line_count(),
            found: support.line_count(),
        });
    }
    Ok(support)
}

fn run(cli: Cli) -> Result<(), Error> {
    let cfg = load_config(&cli.common)?;
    let out = cfg.output.dir.clone();
    let geometry = cfg.geometry.build()?;
    match cli.command {
        Command::Design { occupancies } => {
            let targets = if occupancies.is_empty() { cfg.spectrum.occupancies.clone() } else { occupancies };
            for occ in targets {
                let (support, report) = design_for(&cfg, &geometry, occ)?;
                let label = occupancy_label(occ);
                write_json(&out.join(format!("{label}.json")), &support)?;
                write_json(&out.join(format!("{label}_design.json")), &report)?;
                let holes = compute_coarray(&support).holes_within_span().len();
                println!(
                    "{label}: {} of {} lines kept, {} blocks removed, coarray holes {holes}",
                    support.preserved_count(),
                    support.line_count(),
                    report.removal_order.len()
                );
            }
        }
        Command::Simulate { support, rho } => {
            let support = load_support(support.as_deref(), &geometry)?;
            let h = build_sensing_matrix(&support, &geometry.frequencies, &geometry.ranges)?;
            let rho = rho.unwrap_or(cfg.scene.target_occupancies[0]);
            let scene_cfg = SceneConfig {
                target_occupancy: rho,
                magnitude_range_db: cfg.scene.magnitude_db,
                seed: stream_seed(cfg.seed, Stream::Scene, &[0, 0]),
                eligible_bins: cfg.scene.eligible_bins.as_ref().map(|b| b.iter().map(|x| x - 1).collect()),
            };
            let scene = sim::generate_scene(&scene_cfg, &geometry.ranges)?;
            let noise_seed = stream_seed(cfg.seed, Stream::Noise, &[0, 0, 0]);
            let (v, noise) =
                sim::simulate_measurement_with_floor(&h, &scene, cfg.noise.snr_db, noise_seed, cfg.noise.floor)?;
            write_json(
                &out.join("scene.json"),
                &SceneFile {
                    gamma: &scene.gamma,
                    true_support: scene.true_support.iter().map(|m| m + 1).collect(),
                },
            )?;
            write_json(
                &out.join("measurement.json"),
                &MeasurementFile {
                    noise_variance: noise.variance(),
                    measurement: v,
                },
            )?;
            println!(
                "{} scatterers, noise variance {:.6e}, {} measurements",
                scene.scatterer_count(),
                noise.variance(),
                support.preserved_count()
            );
        }
        Command::Estimate {
            support,
            measurement,
            estimator,
        } => {
            let support = load_support(support.as_deref(), &geometry)?;
            let h = build_sensing_matrix(&support, &geometry.frequencies, &geometry.ranges)?;
            let file: MeasurementFile = read_json(&measurement)?;
            let noise = NoiseModel::new(file.noise_variance)?;
            let v = file.measurement;
            let path = out.join("estimate.json");
            match estimator {
                Estimator::Mf => write_json(
                    &path,
                    &LinearEstimateFile {
                        estimator: "mf",
                        estimate: matched_filter(&h, &v)?,
                        posterior_variance: None,
                        trace_per_bin: None,
                    },
                )?,
                Estimator::Mmse => {
                    let prior = DiagonalPrior::uniform(geometry.bin_count(), cfg.estimator.prior_variance)?;
                    let s = mmse_estimate_via(&h, &prior, noise, &v, cfg.estimator.route)?;
                    write_json(
                        &path,
                        &LinearEstimateFile {
                            estimator: "mmse",
                            estimate: s.estimate,
                            posterior_variance: Some(s.error_variance),
                            trace_per_bin: Some(s.trace_per_bin),
                        },
                    )?;
                }
                Estimator::Rrmmse => {
                    let r = run_rrmmse(&h, &v, noise, &cfg.estimator)?;
                    let mut text = r.to_json(cfg.output.include_timing);
                    text.push('\n');
                    write_text(&path, &text)?;
                    println!(
                        "{} after {} iterations, {} bins in support",
                        r.termination.as_str(),
                        r.iterations(),
                        r.support.len()
                    );
                }
            }
        }
        Command::Sweep => {
            let record = sim::run_experiment(&cfg, Some(&out))?;
            print!("{}", render_table(&record.summary));
        }
        Command::Report { inputs } => {
            let inputs = if inputs.is_empty() { vec![out.clone()] } else { inputs };
            for p in sim::report(&inputs, &out)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 1,
        ErrorKind::Numerical => 2,
        ErrorKind::Io => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
