//! Linear-Gaussian posterior machinery for `v = H γ + n`.
//!
//! With a zero-mean circular Gaussian prior `γ ~ CN(0, K_γ)` (diagonal) and
//! white noise `n ~ CN(0, σ_n² I)`, the posterior error covariance has two
//! equivalent closed forms:
//!
//! * innovation form, through the `K x K` matrix `C = H K_γ H^H + σ_n² I`:
//!   `K_ε = K_γ − K_γ H^H C^{-1} H K_γ`
//! * information form, through the `M x M` Bayesian Fisher information
//!   `J_B = σ_n^{-2} H^H H + K_γ^{-1}`: `K_ε = J_B^{-1}`
//!
//! Both are implemented; [`SolveRoute`] picks which one backs a computation.
//! The diagonal of `J_B^{-1}` is also the per-bin Bayesian Cramér–Rao bound.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};
use crate::grid::SensingMatrix;
use crate::linalg::{self, HpdFactor, DEFAULT_CONDITION_CAP};

/// Per-bin prior variances of the reflection coefficients (the diagonal of `K_γ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiagonalPrior {
    variances: Vec<f64>,
}

impl DiagonalPrior {
    pub fn new(variances: Vec<f64>) -> Result<Self> {
        if let Some((m, v)) = variances.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("prior variance", format!("entry {m} is {v}, must be positive and finite")));
        }
        Ok(Self { variances })
    }

    pub fn uniform(bins: usize, variance: f64) -> Result<Self> {
        Self::new(vec![variance; bins])
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }
}

impl TryFrom<Vec<f64>> for DiagonalPrior {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiagonalPrior> for Vec<f64> {
    fn from(p: DiagonalPrior) -> Self {
        p.variances
    }
}

/// White measurement noise `K_n = σ_n² I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    variance: f64,
}

impl NoiseModel {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::invalid("noise variance", format!("{variance} must be positive and finite")));
        }
        Ok(Self { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Measurement vector at the preserved spectral lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    #[serde(with = "crate::io::interleaved")]
    values: Vec<c64>,
}

impl Measurement {
    pub fn new(values: Vec<c64>) -> Self {
        Self { values }
    }

    pub fn zeros(k: usize) -> Self {
        Self::new(vec![c64::new(0.0, 0.0); k])
    }

    pub fn values(&self) -> &[c64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// MMSE estimate with the diagonal of its error covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub estimate: Vec<c64>,
    pub error_variance: Vec<f64>,
    /// `Tr(K_ε) / M`.
    pub trace_per_bin: f64,
}

/// Which closed form backs a posterior computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveRoute {
    /// Innovation form when `K <= M`, information form otherwise.
    #[default]
    Auto,
    /// `K x K` innovation covariance.
    Innovation,
    /// `M x M` Bayesian information matrix.
    Information,
}

impl SolveRoute {
    pub fn resolve(self, rows: usize, cols: usize) -> SolveRoute {
        match self {
            SolveRoute::Auto if rows <= cols => SolveRoute::Innovation,
            SolveRoute::Auto => SolveRoute::Information,
            other => other,
        }
    }
}

/// Reusable posterior evaluator for one sensing matrix and noise level.
///
/// Caches `H^H H` when the information route is in use, so repeated
/// evaluations under changing priors cost `O(M^3)` each.
pub struct PosteriorSolver<'a> {
    h: &'a SensingMatrix,
    noise: NoiseModel,
    route: SolveRoute,
    condition_cap: f64,
    gram: Option<Mat<c64>>,
}

impl<'a> PosteriorSolver<'a> {
    pub fn new(h: &'a SensingMatrix, noise: NoiseModel, route: SolveRoute) -> Self {
        let route = route.resolve(h.rows(), h.cols());
        let gram = (route == SolveRoute::Information).then(|| h.gram());
        Self {
            h,
            noise,
            route,
            condition_cap: DEFAULT_CONDITION_CAP,
            gram,
        }
    }

    pub fn with_condition_cap(mut self, cap: f64) -> Self {
        self.condition_cap = cap;
        self
    }

    pub fn route(&self) -> SolveRoute {
        self.route
    }

    fn check(&self, prior: &DiagonalPrior, v: Option<&[c64]>) -> Result<()> {
        if prior.len() != self.h.cols() {
            return Err(Error::DimensionMismatch {
                what: "prior length",
                expected: self.h.cols(),
                found: prior.len(),
            });
        }
        if let Some(v) = v {
            if v.len() != self.h.rows() {
                return Err(Error::DimensionMismatch {
                    what: "measurement length",
                    expected: self.h.rows(),
                    found: v.len(),
                });
            }
        }
        Ok(())
    }

    /// Posterior variance diagonal and, when `v` is given, the MMSE estimate.
    pub fn solve(&self, prior: &DiagonalPrior, v: Option<&[c64]>) -> Result<(Option<Vec<c64>>, Vec<f64>)> {
        self.check(prior, v)?;
        let p = prior.variances();
        let s2 = self.noise.variance();
        let (estimate, mut diag) = match self.route {
            SolveRoute::Information => {
                let j = self.information_matrix(p);
                let f = HpdFactor::new(&j, "Bayesian information matrix", self.condition_cap)?;
                let diag = f.inverse_diag();
                let estimate = v.map(|v| {
                    let mut u = linalg::adjoint_times(self.h.entries(), v);
                    for z in &mut u {
                        *z /= s2;
                    }
                    f.solve_vec(&u)
                });
                (estimate, diag)
            }
            _ => {
                let c = innovation_covariance(self.h, p, s2);
                let f = HpdFactor::new(&c, "innovation covariance", self.condition_cap)?;
                let whitened = f.whiten(self.h.entries());
                let norms = linalg::column_norms_sqr(&whitened);
                let diag = p.iter().zip(&norms).map(|(pm, q)| pm - pm * pm * q).collect();
                let estimate = v.map(|v| {
                    let z = f.solve_vec(v);
                    let hz = linalg::adjoint_times(self.h.entries(), &z);
                    hz.iter().zip(p).map(|(a, pm)| a * pm).collect()
                });
                (estimate, diag)
            }
        };
        for (d, pm) in diag.iter_mut().zip(p) {
            *d = d.clamp(0.0, *pm);
        }
        Ok((estimate, diag))
    }

    /// `σ_n^{-2} H^H H + K_γ^{-1}`.
    fn information_matrix(&self, p: &[f64]) -> Mat<c64> {
        let s2 = self.noise.variance();
        let owned;
        let gram = match &self.gram {
            Some(g) => g,
            None => {
                owned = self.h.gram();
                &owned
            }
        };
        let mut j = Mat::from_fn(gram.nrows(), gram.ncols(), |r, c| gram[(r, c)] / s2);
        for (m, pm) in p.iter().enumerate() {
            j[(m, m)] += c64::new(1.0 / pm, 0.0);
        }
        j
    }
}

/// `H K_γ H^H + σ_n² I`.
pub(crate) fn innovation_covariance(h: &SensingMatrix, p: &[f64], noise_variance: f64) -> Mat<c64> {
    let hk = Mat::from_fn(h.rows(), h.cols(), |r, c| h.entries()[(r, c)] * p[c]);
    let mut c = &hk * h.entries().adjoint();
    for k in 0..c.nrows() {
        c[(k, k)] += c64::new(noise_variance, 0.0);
    }
    c
}

/// MMSE estimate `K_γ H^H (H K_γ H^H + K_n)^{-1} v` with its error-variance
/// diagonal, both through the `K x K` innovation covariance.
pub fn mmse_estimate(h: &SensingMatrix, prior: &DiagonalPrior, noise: NoiseModel, v: &Measurement) -> Result<PosteriorSummary> {
    mmse_estimate_via(h, prior, noise, v, SolveRoute::Innovation)
}

pub fn mmse_estimate_via(
    h: &SensingMatrix,
    prior: &DiagonalPrior,
    noise: NoiseModel,
    v: &Measurement,
    route: SolveRoute,
) -> Result<PosteriorSummary> {
    let (estimate, error_variance) = PosteriorSolver::new(h, noise, route).solve(prior, Some(v.values()))?;
    Ok(PosteriorSummary {
        estimate: estimate.expect("estimate requested"),
        trace_per_bin: mean(&error_variance),
        error_variance,
    })
}

/// Diagonal of `K_ε` through the innovation form:
/// `σ²_m − σ⁴_m h_m^H (H K_γ H^H + K_n)^{-1} h_m`.
pub fn posterior_covariance_diag(h: &SensingMatrix, prior: &DiagonalPrior, noise: NoiseModel) -> Result<Vec<f64>> {
    Ok(PosteriorSolver::new(h, noise, SolveRoute::Innovation).solve(prior, None)?.1)
}

/// Per-bin Bayesian CRLB, the diagonal of `(H^H K_n^{-1} H + K_γ^{-1})^{-1}`,
/// through the `M x M` information form.
pub fn bayesian_crlb_diag(h: &SensingMatrix, prior: &DiagonalPrior, noise: NoiseModel) -> Result<Vec<f64>> {
    Ok(PosteriorSolver::new(h, noise, SolveRoute::Information).solve(prior, None)?.1)
}

/// `Tr(K_ε) / M` through the requested route.
pub fn posterior_trace(h: &SensingMatrix, prior: &DiagonalPrior, noise: NoiseModel, route: SolveRoute) -> Result<f64> {
    Ok(mean(&PosteriorSolver::new(h, noise, route).solve(prior, None)?.1))
}

/// Full `K_ε = K_γ − K_γ H^H C^{-1} H K_γ`.
pub fn posterior_covariance_innovation_form(h: &SensingMatrix, prior: &DiagonalPrior, noise: NoiseModel) -> Result<Mat<c64>> {
    PosteriorSolver::new(h, noise, SolveRoute::Innovation).check(prior, None)?;
    let p = prior.variances();
    let c = innovation_covariance(h, p, noise.variance());
    let f = HpdFactor::new(&c, "innovation covariance", DEFAULT_CONDITION_CAP)?;
    let hk = Mat::from_fn(h.rows(), h.cols(), |r, col| h.entries()[(r, col)] * p[col]);
    let w = f.whiten(&hk);
    let reduction = w.adjoint() * &w;
    Ok(Mat::from_fn(h.cols(), h.cols(), |r, col| {
        let prior_entry = if r == col { c64::new(p[r], 0.0) } else { c64::new(0.0, 0.0) };
        prior_entry - reduction[(r, col)]
    }))
}

/// Full `K_ε = (H^H K_n^{-1} H + K_γ^{-1})^{-1}`.
pub fn posterior_covariance_information_form(h: &SensingMatrix, prior: &DiagonalPrior, noise: NoiseModel) -> Result<Mat<c64>> {
    let solver = PosteriorSolver::new(h, noise, SolveRoute::Information);
    solver.check(prior, None)?;
    let j = solver.information_matrix(prior.variances());
    Ok(HpdFactor::new(&j, "Bayesian information matrix", DEFAULT_CONDITION_CAP)?.inverse())
}

/// Back-projection `H^H v`.
pub fn matched_filter(h: &SensingMatrix, v: &Measurement) -> Result<Vec<c64>> {
    if v.len() != h.rows() {
        return Err(Error::DimensionMismatch {
            what: "measurement length",
            expected: h.rows(),
            found: v.len(),
        });
    }
    Ok(linalg::adjoint_times(h.entries(), v.values()))
}

/// Fixed linear MMSE map `W = K_γ H^H C^{-1}`, factored once and applied to
/// many measurements. Monte-Carlo loops over one geometry use this.
pub struct LinearMmse {
    weights: Mat<c64>,
    error_variance: Vec<f64>,
}

impl LinearMmse {
    pub fn new(h: &SensingMatrix, prior: &DiagonalPrior, noise: NoiseModel) -> Result<Self> {
        let solver = PosteriorSolver::new(h, noise, SolveRoute::Innovation);
        solver.check(prior, None)?;
        let p = prior.variances();
        let c = innovation_covariance(h, p, noise.variance());
        let f = HpdFactor::new(&c, "innovation covariance", DEFAULT_CONDITION_CAP)?;
        // W^H = C^{-1} H K_γ since C is Hermitian.
        let hk = Mat::from_fn(h.rows(), h.cols(), |r, col| h.entries()[(r, col)] * p[col]);
        let ch = f.inverse() * &hk;
        let weights = ch.adjoint().to_owned();
        let error_variance = solver.solve(prior, None)?.1;
        Ok(Self { weights, error_variance })
    }

    pub fn estimate(&self, v: &Measurement) -> Vec<c64> {
        linalg::times(&self.weights, v.values())
    }

    pub fn error_variance(&self) -> &[f64] {
        &self.error_variance
    }
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}
