//! Iterative reduced-rank MMSE (RRMMSE) range-profile estimation.
//!
//! Starting from a flat prior `σ_γ² I`, every iteration
//!
//! 1. solves the linear MMSE problem under the current prior,
//! 2. scores every bin outside the support by the magnitude of its own
//!    coefficient, `σ_γ² h_m^H (H K_γ H^H + σ_n² I)^{-1} v`, and takes the
//!    strongest (lowest index on ties),
//! 3. records `Tr(K_ε)/M` under the current prior,
//! 4. rebuilds the prior: `|γ̂_m|² + [K_ε]_{mm}` on the support (including the
//!    new bin), `σ_γ²` elsewhere.
//!
//! The loop ends when `Tr(K_ε)/M` stops decreasing by more than a relative
//! tolerance (plateau) or when the iteration cap is reached. On a plateau the
//! bin picked in the last iteration never entered the prior, so it is not
//! part of the reported support.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bayes::{DiagonalPrior, Measurement, NoiseModel, PosteriorSolver, SolveRoute};
use crate::c64;
use crate::error::{Error, Result};
use crate::grid::{numerical_rank, SensingMatrix};
use crate::linalg::{self, HpdFactor, DEFAULT_CONDITION_CAP};

pub const DEFAULT_PRIOR_VARIANCE: f64 = 5e3;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RrmmseConfig {
    /// Flat prior variance `σ_γ²` for bins outside the support.
    pub prior_variance: f64,
    /// Relative decrease of `Tr(K_ε)/M` below which the iteration stops.
    pub tolerance: f64,
    /// Iteration cap; `None` means the number of preserved lines `K`.
    pub max_iterations: Option<usize>,
    pub route: SolveRoute,
    pub condition_cap: f64,
    /// Keep the estimate of every iteration in [`EstimationResult::snapshots`].
    #[serde(skip)]
    pub keep_snapshots: bool,
}

impl Default for RrmmseConfig {
    fn default() -> Self {
        Self {
            prior_variance: DEFAULT_PRIOR_VARIANCE,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: None,
            route: SolveRoute::Auto,
            condition_cap: DEFAULT_CONDITION_CAP,
            keep_snapshots: false,
        }
    }
}

impl RrmmseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.prior_variance > 0.0 && self.prior_variance.is_finite()) {
            return Err(Error::invalid("estimator.prior_variance", "must be positive and finite"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::invalid("estimator.tolerance", "must be positive and finite"));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::invalid("estimator.max_iterations", "must be at least 1"));
        }
        if !(self.condition_cap > 1.0) {
            return Err(Error::invalid("estimator.condition_cap", "must exceed 1"));
        }
        Ok(())
    }
}

/// Range bins hypothesised to hold scatterers, in insertion order (0-based).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SupportSet {
    order: Vec<usize>,
    member: Vec<bool>,
}

impl SupportSet {
    pub fn new(bins: usize) -> Self {
        Self {
            order: Vec::new(),
            member: vec![false; bins],
        }
    }

    pub fn from_bins(bins: usize, indices: &[usize]) -> Result<Self> {
        let mut s = Self::new(bins);
        for &m in indices {
            if m >= bins || s.member[m] {
                return Err(Error::invalid("support", format!("bin {m} is out of range or repeated")));
            }
            s.insert(m);
        }
        Ok(s)
    }

    /// Adds `m`; returns false if it was already present.
    pub fn insert(&mut self, m: usize) -> bool {
        if self.member[m] {
            return false;
        }
        self.member[m] = true;
        self.order.push(m);
        true
    }

    pub fn contains(&self, m: usize) -> bool {
        self.member.get(m).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn bin_count(&self) -> usize {
        self.member.len()
    }

    /// Bins in insertion order.
    pub fn indices(&self) -> &[usize] {
        &self.order
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.order.clone();
        v.sort_unstable();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Plateau,
    MaxIterations,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Plateau => "plateau",
            Termination::MaxIterations => "max_iterations",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Bin picked in this iteration (0-based).
    pub chosen_bin: usize,
    /// `|γ̂|` of the picked bin under the prior it was scored with.
    pub magnitude: f64,
    /// `Tr(K_ε)/M` under the prior in force during this iteration.
    pub trace_per_bin: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    /// MMSE estimate under the final prior, over all bins.
    pub estimate: Vec<c64>,
    pub support: SupportSet,
    pub posterior_variance: Vec<f64>,
    pub history: Vec<IterationRecord>,
    pub termination: Termination,
    /// `Tr(K_ε)/M` of the reported posterior.
    pub final_trace: f64,
    /// Set when the support grew beyond the numerical rank of `H`.
    pub rank_exceeded: bool,
    /// Estimate after each iteration, when requested.
    pub snapshots: Vec<Vec<c64>>,
}

impl EstimationResult {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    /// JSON form with complex vectors interleaved and bins 1-based.
    /// `with_timing` controls whether wall times are written.
    pub fn to_json(&self, with_timing: bool) -> String {
        let repr = ResultRepr {
            estimate: self.estimate.clone(),
            support: self.support.indices().iter().map(|m| m + 1).collect(),
            posterior_variance: self.posterior_variance.clone(),
            final_trace: self.final_trace,
            termination_reason: self.termination,
            rank_exceeded: self.rank_exceeded,
            history: self
                .history
                .iter()
                .enumerate()
                .map(|(i, r)| IterationRepr {
                    iteration: i + 1,
                    chosen_bin: r.chosen_bin + 1,
                    magnitude: r.magnitude,
                    trace_per_bin: r.trace_per_bin,
                    elapsed_s: with_timing.then_some(r.elapsed_s),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&repr).expect("result serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: ResultRepr =
            serde_json::from_str(text).map_err(|e| Error::invalid("estimation result", e.to_string()))?;
        let m = repr.estimate.len();
        let zero_based: Vec<usize> = repr
            .support
            .iter()
            .map(|&b| b.checked_sub(1).ok_or_else(|| Error::invalid("support", "bins are 1-based")))
            .collect::<Result<_>>()?;
        Ok(Self {
            support: SupportSet::from_bins(m, &zero_based)?,
            estimate: repr.estimate,
            posterior_variance: repr.posterior_variance,
            final_trace: repr.final_trace,
            termination: repr.termination_reason,
            rank_exceeded: repr.rank_exceeded,
            history: repr
                .history
                .into_iter()
                .map(|r| IterationRecord {
                    chosen_bin: r.chosen_bin.saturating_sub(1),
                    magnitude: r.magnitude,
                    trace_per_bin: r.trace_per_bin,
                    elapsed_s: r.elapsed_s.unwrap_or(0.0),
                })
                .collect(),
            snapshots: Vec::new(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ResultRepr {
    #[serde(with = "crate::io::interleaved")]
    estimate: Vec<c64>,
    support: Vec<usize>,
    posterior_variance: Vec<f64>,
    final_trace: f64,
    termination_reason: Termination,
    rank_exceeded: bool,
    history: Vec<IterationRepr>,
}

#[derive(Serialize, Deserialize)]
struct IterationRepr {
    iteration: usize,
    chosen_bin: usize,
    magnitude: f64,
    trace_per_bin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    elapsed_s: Option<f64>,
}

fn check_dims(h: &SensingMatrix, prior: &DiagonalPrior, v: &Measurement) -> Result<()> {
    if h.rows() == 0 {
        return Err(Error::EmptySpectrum);
    }
    if prior.len() != h.cols() {
        return Err(Error::DimensionMismatch {
            what: "prior length",
            expected: h.cols(),
            found: prior.len(),
        });
    }
    if v.len() != h.rows() {
        return Err(Error::DimensionMismatch {
            what: "measurement length",
            expected: h.rows(),
            found: v.len(),
        });
    }
    Ok(())
}

/// Strongest bin outside `support` given per-bin coefficients; magnitudes
/// equal up to rounding go to the lowest index.
fn argmax_outside(coefficients: &[c64], support: &SupportSet) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (m, g) in coefficients.iter().enumerate() {
        if support.contains(m) {
            continue;
        }
        let mag = g.norm();
        if best.is_none_or(|(_, b)| mag > b + crate::design::TIE_TOLERANCE * b) {
            best = Some((m, mag));
        }
    }
    best.ok_or(Error::NoCandidates)
}

/// Picks the next bin: `z = (H K_γ H^H + σ_n² I)^{-1} v` is solved once and
/// candidate `m` scores `|σ²_{γ,m} h_m^H z|`. Returns `(bin, magnitude)`.
pub fn score_candidates(
    h: &SensingMatrix,
    prior: &DiagonalPrior,
    noise: NoiseModel,
    v: &Measurement,
    support: &SupportSet,
) -> Result<(usize, f64)> {
    check_dims(h, prior, v)?;
    if support.len() >= h.cols() {
        return Err(Error::NoCandidates);
    }
    let c = crate::bayes::innovation_covariance(h, prior.variances(), noise.variance());
    let z = HpdFactor::new(&c, "innovation covariance", DEFAULT_CONDITION_CAP)?.solve_vec(v.values());
    let hz = linalg::adjoint_times(h.entries(), &z);
    let scores: Vec<c64> = hz.iter().zip(prior.variances()).map(|(a, p)| a * p).collect();
    argmax_outside(&scores, support)
}

/// Prior for the next iteration: `|γ̂_m|² + [K_ε]_{mm}` on the support,
/// `σ_γ²` elsewhere.
pub fn update_prior(
    support: &SupportSet,
    estimate: &[c64],
    posterior_diag: &[f64],
    prior_variance: f64,
) -> Result<DiagonalPrior> {
    let m = support.bin_count();
    if estimate.len() != m || posterior_diag.len() != m {
        return Err(Error::DimensionMismatch {
            what: "prior update vectors",
            expected: m,
            found: estimate.len().min(posterior_diag.len()),
        });
    }
    let floor = prior_variance * f64::EPSILON;
    let variances = (0..m)
        .map(|i| {
            if support.contains(i) {
                (estimate[i].norm_sqr() + posterior_diag[i].max(0.0)).max(floor)
            } else {
                prior_variance
            }
        })
        .collect();
    DiagonalPrior::new(variances)
}

/// Relative singular-value threshold used for the rank check.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Runs the iterative estimator on one measurement.
pub fn run_rrmmse(h: &SensingMatrix, v: &Measurement, noise: NoiseModel, config: &RrmmseConfig) -> Result<EstimationResult> {
    run_rrmmse_with_rank(h, v, noise, config, numerical_rank(h, RANK_TOLERANCE))
}

/// As [`run_rrmmse`] with the numerical rank of `H` supplied by the caller,
/// for loops that reuse one sensing matrix.
pub fn run_rrmmse_with_rank(
    h: &SensingMatrix,
    v: &Measurement,
    noise: NoiseModel,
    config: &RrmmseConfig,
    rank: usize,
) -> Result<EstimationResult> {
    config.validate()?;
    let (k, m) = (h.rows(), h.cols());
    let mut prior = DiagonalPrior::uniform(m, config.prior_variance)?;
    check_dims(h, &prior, v)?;

    let requested = config.max_iterations.unwrap_or(k);
    if requested > k {
        log::warn!("iteration cap {requested} exceeds the {k} preserved lines");
    }
    let cap = requested.min(m);
    let solver = PosteriorSolver::new(h, noise, config.route).with_condition_cap(config.condition_cap);

    let mut support = SupportSet::new(m);
    let mut history: Vec<IterationRecord> = Vec::with_capacity(cap);
    let mut snapshots = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut last: Option<(Vec<c64>, Vec<f64>)> = None;

    for i in 0..cap {
        let started = Instant::now();
        let (estimate, diag) = solver.solve(&prior, Some(v.values()))?;
        let estimate = estimate.expect("estimate requested");
        // Candidates carry the flat prior, so their own coefficients are the
        // shared-z scores σ_γ² h_m^H z.
        let (chosen, magnitude) = argmax_outside(&estimate, &support)?;
        let trace = crate::bayes::mean(&diag);
        history.push(IterationRecord {
            chosen_bin: chosen,
            magnitude,
            trace_per_bin: trace,
            elapsed_s: 0.0,
        });
        if config.keep_snapshots {
            snapshots.push(estimate.clone());
        }

        let plateau = i > 0 && {
            let prev = history[i - 1].trace_per_bin;
            (prev - trace) / prev < config.tolerance
        };
        if plateau {
            history[i].elapsed_s = started.elapsed().as_secs_f64();
            termination = Termination::Plateau;
            last = Some((estimate, diag));
            break;
        }

        support.insert(chosen);
        prior = update_prior(&support, &estimate, &diag, config.prior_variance)?;
        history[i].elapsed_s = started.elapsed().as_secs_f64();
    }

    let (estimate, posterior_variance) = match last {
        Some(done) => done,
        None => {
            let (estimate, diag) = solver.solve(&prior, Some(v.values()))?;
            (estimate.expect("estimate requested"), diag)
        }
    };
    let rank_exceeded = support.len() > rank;
    if rank_exceeded {
        log::warn!("support of {} bins exceeds the numerical rank {rank} of H", support.len());
    }
    Ok(EstimationResult {
        final_trace: crate::bayes::mean(&posterior_variance),
        estimate,
        support,
        posterior_variance,
        history,
        termination,
        rank_exceeded,
        snapshots,
    })
}

/// Operation counts of `G` iterations on a `K x M` problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Complexity {
    /// `G K³ + G² M K²`.
    pub full: u128,
    /// `G² M K²`.
    pub dominant: u128,
}

pub fn complexity_model(g: u64, m: u64, k: u64) -> Complexity {
    let (g, m, k) = (g as u128, m as u128, k as u128);
    let dominant = g * g * m * k * k;
    Complexity {
        full: g * k * k * k + dominant,
        dominant,
    }
}
