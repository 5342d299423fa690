//! Sparse radar spectrum design and iterative reduced-rank MMSE range-profile
//! estimation.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: frequency/range grids, spectral supports, sensing matrices, coarrays
//! * [`bayes`]: linear-Gaussian MMSE estimation, posterior covariance, Bayesian CRLB
//! * [`design`]: greedy block-removal spectrum design driven by marginal Fisher information
//! * [`rrmmse`]: the iterative reduced-rank MMSE support-growing estimator
//! * [`sim`]: scenes, noisy measurements, metrics and Monte-Carlo experiments

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod design;
pub mod error;
pub mod grid;
pub mod io;
mod linalg;
pub mod rrmmse;
pub mod sim;

pub use faer::c64;

pub use bayes::{
    bayesian_crlb_diag, matched_filter, mmse_estimate, mmse_estimate_via, posterior_covariance_diag,
    posterior_covariance_information_form, posterior_covariance_innovation_form, posterior_trace, DiagonalPrior,
    LinearMmse, Measurement, NoiseModel, PosteriorSolver, PosteriorSummary, SolveRoute,
};
pub use design::{design_spectrum, mfi_of_removal, occupancy, BlockPartition, DesignProblem, MfiReport, NoiseReference};
pub use error::{Error, ErrorKind, Result};
pub use grid::{
    build_sensing_matrix, build_sensing_matrix_with_budget, compute_coarray, gram_offdiag_stats, numerical_rank,
    Coarray, FrequencyGrid, Geometry, GramStats, RangeGrid, SensingMatrix, SpectrumSupport,
};
pub use linalg::DEFAULT_CONDITION_CAP;
pub use rrmmse::{
    complexity_model, run_rrmmse, run_rrmmse_with_rank, score_candidates, update_prior, Complexity, EstimationResult, IterationRecord,
    RrmmseConfig, SupportSet, Termination,
};
