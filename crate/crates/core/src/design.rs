//! Greedy spectrum design by block removal.
//!
//! Starting from the full comb, blocks of adjacent lines are vacated one at a
//! time. Each step removes the block whose loss of Fisher information costs
//! least, measured as the increase of `Tr(K_ε)/M` (the mean Bayesian CRLB)
//! its removal causes. The process stops once the occupancy reaches the
//! target.
//!
//! With uniformly spaced delays the Gram matrix `H^H H` is Hermitian Toeplitz,
//! `[H^H H]_{m,m'} = (1/K) Σ_n exp(j ω_n (m'−m) Δτ)`, so every candidate
//! support is summarised by `M` lag sums. Per-block lag sums are computed once
//! and a candidate costs one `M x M` Cholesky factorization.
//!
//! Sensing-matrix columns are unit norm at every occupancy, so a fixed `σ_n²`
//! on the normalized matrix would credit a thinner spectrum with more energy
//! per line. By default the design therefore references the noise to the full
//! comb: a support of `K` lines is scored with `σ_n² N / K` on its normalized
//! matrix, which is the same as keeping the per-line SNR fixed. Vacating lines
//! then always loses information and every removal cost is nonnegative.

use std::ops::Range;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::bayes::{DiagonalPrior, NoiseModel};
use crate::c64;
use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, RangeGrid, SpectrumSupport};
use crate::linalg::{HpdFactor, DEFAULT_CONDITION_CAP};

/// Fraction of the grid covered by one block unless configured otherwise.
pub const DEFAULT_BLOCK_FRACTION: f64 = 0.0125;

/// Relative gap below which two candidate traces are treated as equal.
pub(crate) const TIE_TOLERANCE: f64 = 1e-12;

/// Split of `[0, N)` into consecutive blocks; the last one may be short.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    line_count: usize,
    block_size: usize,
}

impl BlockPartition {
    pub fn new(line_count: usize, block_size: usize) -> Result<Self> {
        if line_count == 0 {
            return Err(Error::invalid("line_count", "must be at least 1"));
        }
        if block_size == 0 || block_size > line_count {
            return Err(Error::invalid(
                "block_size",
                format!("{block_size} must lie in 1..={line_count}"),
            ));
        }
        Ok(Self { line_count, block_size })
    }

    /// `ceil(0.0125 N)` lines per block.
    pub fn default_for(grid: &FrequencyGrid) -> Self {
        let n = grid.line_count();
        let size = ((DEFAULT_BLOCK_FRACTION * n as f64).ceil() as usize).clamp(1, n);
        Self::new(n, size).expect("default block size is valid")
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn line_count(&self) -> usize {
        self.line_count
    }

    pub fn len(&self) -> usize {
        self.line_count.div_ceil(self.block_size)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block(&self, id: usize) -> Range<usize> {
        let start = id * self.block_size;
        start..(start + self.block_size).min(self.line_count)
    }

    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.len()).map(|b| self.block(b))
    }
}

/// Outcome of a greedy design run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfiReport {
    pub block_size: usize,
    /// Block ids in removal order.
    pub removal_order: Vec<usize>,
    /// Increase of `Tr(K_ε)/M` caused by each removal.
    pub mfi_values: Vec<f64>,
    /// `Tr(K_ε)/M` of the full spectrum.
    pub initial_trace: f64,
    /// `Tr(K_ε)/M` after each removal.
    pub trace_history: Vec<f64>,
    pub final_occupancy: f64,
}

/// Level at which the design noise variance is specified.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseReference {
    /// `σ_n²` applies to the full comb; a `K`-line support sees `σ_n² N / K`.
    #[default]
    FullComb,
    /// `σ_n²` applies to the normalized matrix of whatever support is scored.
    PreservedLines,
}

/// Geometry, prior and noise shared by all trace evaluations of a design.
pub struct DesignProblem {
    grid: FrequencyGrid,
    ranges: RangeGrid,
    prior: DiagonalPrior,
    noise: NoiseModel,
    condition_cap: f64,
    reference: NoiseReference,
}

impl DesignProblem {
    pub fn new(grid: FrequencyGrid, ranges: RangeGrid, prior: DiagonalPrior, noise: NoiseModel) -> Result<Self> {
        if prior.len() != ranges.bin_count() {
            return Err(Error::DimensionMismatch {
                what: "prior length",
                expected: ranges.bin_count(),
                found: prior.len(),
            });
        }
        Ok(Self {
            grid,
            ranges,
            prior,
            noise,
            condition_cap: DEFAULT_CONDITION_CAP,
            reference: NoiseReference::FullComb,
        })
    }

    pub fn with_noise_reference(mut self, reference: NoiseReference) -> Self {
        self.reference = reference;
        self
    }

    /// Noise variance seen by the normalized matrix of a `count`-line support.
    pub fn effective_noise_variance(&self, count: usize) -> f64 {
        match self.reference {
            NoiseReference::FullComb => self.noise.variance() * self.grid.line_count() as f64 / count as f64,
            NoiseReference::PreservedLines => self.noise.variance(),
        }
    }

    pub fn with_condition_cap(mut self, cap: f64) -> Self {
        self.condition_cap = cap;
        self
    }

    /// Phase advance per unit line index and unit lag.
    fn phase_step(&self) -> f64 {
        let dtau = if self.ranges.bin_count() > 1 { self.ranges.spacing_s() } else { 0.0 };
        self.grid.angular_spacing() * dtau
    }

    /// `Σ_{n ∈ lines} exp(j θ n d)` for lags `d = 0..M`.
    fn lag_sums<I: IntoIterator<Item = usize>>(&self, lines: I) -> Vec<c64> {
        let m = self.ranges.bin_count();
        let theta = self.phase_step();
        let mut sums = vec![c64::new(0.0, 0.0); m];
        for n in lines {
            for (d, s) in sums.iter_mut().enumerate() {
                *s += c64::from_polar(1.0, theta * (n * d) as f64);
            }
        }
        sums
    }

    /// `Tr(K_ε)/M` for a support with `count` lines whose lag sums are `sums`.
    fn trace_from_lag_sums(&self, sums: &[c64], count: usize) -> Result<f64> {
        if count == 0 {
            return Err(Error::EmptySpectrum);
        }
        let m = sums.len();
        let scale = 1.0 / (count as f64 * self.effective_noise_variance(count));
        let p = self.prior.variances();
        let j = Mat::from_fn(m, m, |r, c| {
            let g = if c >= r { sums[c - r] } else { sums[r - c].conj() };
            let mut e = g * scale;
            if r == c {
                e = c64::new(e.re + 1.0 / p[r], 0.0);
            }
            e
        });
        let f = HpdFactor::new(&j, "Bayesian information matrix", self.condition_cap)?;
        Ok(f.inverse_diag().iter().sum::<f64>() / m as f64)
    }

    /// `Tr(K_ε)/M` of a support.
    pub fn trace(&self, support: &SpectrumSupport) -> Result<f64> {
        self.check_support(support)?;
        let sums = self.lag_sums(support.preserved_indices().iter().copied());
        self.trace_from_lag_sums(&sums, support.preserved_count())
    }

    fn check_support(&self, support: &SpectrumSupport) -> Result<()> {
        if support.line_count() != self.grid.line_count() {
            return Err(Error::DimensionMismatch {
                what: "support line count",
                expected: self.grid.line_count(),
                found: support.line_count(),
            });
        }
        Ok(())
    }

    /// Trace increase caused by vacating `block` from `current`.
    pub fn mfi_of_removal(&self, current: &SpectrumSupport, block: Range<usize>) -> Result<f64> {
        self.check_support(current)?;
        if block.is_empty() || !block.clone().all(|n| current.contains(n)) {
            return Err(Error::BlockNotInSupport {
                start: block.start,
                end: block.end,
            });
        }
        let before = self.trace(current)?;
        let after = self.trace(&current.without(block))?;
        Ok(after - before)
    }

    /// Greedy removal from the full spectrum down to `target_occupancy`.
    pub fn design(&self, partition: &BlockPartition, target_occupancy: f64) -> Result<(SpectrumSupport, MfiReport)> {
        let n = self.grid.line_count();
        if partition.line_count() != n {
            return Err(Error::DimensionMismatch {
                what: "partition line count",
                expected: n,
                found: partition.line_count(),
            });
        }
        if !(target_occupancy > 0.0 && target_occupancy <= 1.0) {
            return Err(Error::invalid(
                "target_occupancy",
                format!("{target_occupancy} must lie in (0, 1]"),
            ));
        }
        let target_lines = target_occupancy * n as f64;
        let smallest = partition.blocks().map(|b| b.len()).min().unwrap_or(0);
        if target_lines + 1e-9 < smallest as f64 {
            return Err(Error::OccupancyTooSmall { target: target_occupancy });
        }

        let block_sums: Vec<Vec<c64>> = partition.blocks().map(|b| self.lag_sums(b)).collect();
        let block_len: Vec<usize> = partition.blocks().map(|b| b.len()).collect();
        let mut alive: Vec<bool> = vec![true; partition.len()];
        let mut count = n;

        let total = |alive: &[bool], skip: Option<usize>| -> Vec<c64> {
            let mut sums = vec![c64::new(0.0, 0.0); self.ranges.bin_count()];
            for (b, s) in block_sums.iter().enumerate() {
                if alive[b] && Some(b) != skip {
                    for (acc, x) in sums.iter_mut().zip(s) {
                        *acc += x;
                    }
                }
            }
            sums
        };

        let initial_trace = self.trace_from_lag_sums(&total(&alive, None), count)?;
        let mut current_trace = initial_trace;
        let mut report = MfiReport {
            block_size: partition.block_size(),
            removal_order: Vec::new(),
            mfi_values: Vec::new(),
            initial_trace,
            trace_history: Vec::new(),
            final_occupancy: 1.0,
        };

        while count as f64 > target_lines + 1e-9 {
            if alive.iter().filter(|&&a| a).count() <= 1 {
                return Err(Error::OccupancyTooSmall { target: target_occupancy });
            }
            let mut best: Option<(usize, f64)> = None;
            for b in (0..alive.len()).filter(|&b| alive[b]) {
                let t = self.trace_from_lag_sums(&total(&alive, Some(b)), count - block_len[b])?;
                // Costs equal up to rounding count as ties, which go to the lower index.
                if best.is_none_or(|(_, bt)| t < bt - TIE_TOLERANCE * bt.abs()) {
                    best = Some((b, t));
                }
            }
            let (b, t) = best.expect("at least two blocks alive");
            alive[b] = false;
            count -= block_len[b];
            report.removal_order.push(b);
            report.mfi_values.push(t - current_trace);
            report.trace_history.push(t);
            log::debug!("removed block {b}: trace {t:.6e}, {count} lines left");
            current_trace = t;
        }

        let mut mask = vec![false; n];
        for (b, range) in partition.blocks().enumerate() {
            if alive[b] {
                mask[range].fill(true);
            }
        }
        let support = SpectrumSupport::from_mask(mask);
        report.final_occupancy = support.occupancy();
        Ok((support, report))
    }
}

/// Increase of `Tr(K_ε)/M` caused by removing `block` from `current`.
pub fn mfi_of_removal(
    current: &SpectrumSupport,
    block: Range<usize>,
    grid: &FrequencyGrid,
    ranges: &RangeGrid,
    prior: &DiagonalPrior,
    noise: NoiseModel,
) -> Result<f64> {
    DesignProblem::new(*grid, *ranges, prior.clone(), noise)?.mfi_of_removal(current, block)
}

/// Greedy minimum-MFI block removal down to `target_occupancy`.
pub fn design_spectrum(
    grid: &FrequencyGrid,
    ranges: &RangeGrid,
    partition: &BlockPartition,
    target_occupancy: f64,
    prior: &DiagonalPrior,
    noise: NoiseModel,
) -> Result<(SpectrumSupport, MfiReport)> {
    DesignProblem::new(*grid, *ranges, prior.clone(), noise)?.design(partition, target_occupancy)
}

/// Fraction `K / N` of preserved lines.
pub fn occupancy(support: &SpectrumSupport) -> f64 {
    support.occupancy()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::{posterior_covariance_information_form, posterior_trace, SolveRoute};
    use crate::grid::build_sensing_matrix;

    fn small() -> (FrequencyGrid, RangeGrid) {
        // N = 16 lines, M = 8 bins.
        (FrequencyGrid::new(16, 100.0, 2).unwrap(), RangeGrid::new(8, 3.5e-3).unwrap())
    }

    fn problem(grid: FrequencyGrid, ranges: RangeGrid) -> DesignProblem {
        let prior = DiagonalPrior::uniform(ranges.bin_count(), 5.0).unwrap();
        DesignProblem::new(grid, ranges, prior, NoiseModel::new(0.1).unwrap()).unwrap()
    }

    fn brute_trace(support: &SpectrumSupport, grid: &FrequencyGrid, ranges: &RangeGrid) -> f64 {
        let h = build_sensing_matrix(support, grid, ranges).unwrap();
        let prior = DiagonalPrior::uniform(ranges.bin_count(), 5.0).unwrap();
        // noise referenced to the full 16-line comb
        let noise = NoiseModel::new(0.1 * 16.0 / support.preserved_count() as f64).unwrap();
        let k = posterior_covariance_information_form(&h, &prior, noise).unwrap();
        (0..k.nrows()).map(|i| k[(i, i)].re).sum::<f64>() / k.nrows() as f64
    }

    #[test]
    fn partition_covers_grid_with_short_tail() {
        let p = BlockPartition::new(10, 4).unwrap();
        let blocks: Vec<_> = p.blocks().collect();
        assert_eq!(blocks, vec![0..4, 4..8, 8..10]);
        assert_eq!(BlockPartition::default_for(&FrequencyGrid::new(800, 25.0, 8).unwrap()).block_size(), 10);
        assert_eq!(BlockPartition::default_for(&FrequencyGrid::new(4000, 5.0, 10).unwrap()).block_size(), 50);
        assert!(BlockPartition::new(10, 0).is_err());
    }

    #[test]
    fn lag_sum_trace_matches_dense_forms() {
        let (grid, ranges) = small();
        let pb = problem(grid, ranges);
        let support = SpectrumSupport::from_indices(16, &[0, 1, 4, 5, 6, 11, 15]).unwrap();
        let fast = pb.trace(&support).unwrap();
        let brute = brute_trace(&support, &grid, &ranges);
        let h = build_sensing_matrix(&support, &grid, &ranges).unwrap();
        let prior = DiagonalPrior::uniform(8, 5.0).unwrap();
        let noise = NoiseModel::new(0.1 * 16.0 / 7.0).unwrap();
        let innovation = posterior_trace(&h, &prior, noise, SolveRoute::Innovation).unwrap();
        assert!((fast - brute).abs() < 1e-10 * brute);
        assert!((fast - innovation).abs() < 1e-10 * brute);
    }

    #[test]
    fn mfi_matches_brute_force_difference() {
        let (grid, ranges) = small();
        let pb = problem(grid, ranges);
        let full = SpectrumSupport::full(16);
        for b in 0..8 {
            let block = 2 * b..2 * b + 2;
            let mfi = pb.mfi_of_removal(&full, block.clone()).unwrap();
            let expected = brute_trace(&full.without(block), &grid, &ranges) - brute_trace(&full, &grid, &ranges);
            assert!((mfi - expected).abs() < 1e-10, "block {b}: {mfi} vs {expected}");
            assert!(mfi >= -1e-12);
        }
    }

    #[test]
    fn duplicate_line_removal_is_free() {
        // Two lines at the same frequency: DC on a grid where both map to ω = 0.
        let grid = FrequencyGrid::new(2, 1e-12, 1).unwrap();
        let ranges = RangeGrid::new(3, 1e-3).unwrap();
        let renormalized = problem(grid, ranges).with_noise_reference(NoiseReference::PreservedLines);
        let mfi = renormalized.mfi_of_removal(&SpectrumSupport::full(2), 1..2).unwrap();
        assert!(mfi.abs() < 1e-10);
        // At a fixed per-line SNR the duplicate still carries energy.
        assert!(problem(grid, ranges).mfi_of_removal(&SpectrumSupport::full(2), 1..2).unwrap() > 0.0);
    }

    #[test]
    fn removal_outside_support_is_rejected() {
        let (grid, ranges) = small();
        let pb = problem(grid, ranges);
        let s = SpectrumSupport::full(16).without(0..2);
        assert!(matches!(pb.mfi_of_removal(&s, 1..3), Err(Error::BlockNotInSupport { .. })));
    }

    #[test]
    fn full_target_is_a_no_op() {
        let (grid, ranges) = small();
        let (support, report) = problem(grid, ranges).design(&BlockPartition::new(16, 2).unwrap(), 1.0).unwrap();
        assert_eq!(support, SpectrumSupport::full(16));
        assert!(report.removal_order.is_empty());
        assert_eq!(report.final_occupancy, 1.0);
    }

    #[test]
    fn tiny_target_is_rejected() {
        let (grid, ranges) = small();
        let pb = problem(grid, ranges);
        let part = BlockPartition::new(16, 2).unwrap();
        assert!(matches!(pb.design(&part, 0.05), Err(Error::OccupancyTooSmall { .. })));
        assert!(pb.design(&part, 0.0).is_err());
        assert!(pb.design(&part, 1.5).is_err());
    }

    #[test]
    fn greedy_steps_match_exhaustive_scan() {
        let (grid, ranges) = small();
        let pb = problem(grid, ranges);
        let part = BlockPartition::new(16, 2).unwrap();
        let (support, report) = pb.design(&part, 0.5).unwrap();
        assert_eq!(support.preserved_count(), 8);

        let mut current = SpectrumSupport::full(16);
        let mut removed = [false; 8];
        for (&chosen, &mfi) in report.removal_order.iter().zip(&report.mfi_values) {
            let base = brute_trace(&current, &grid, &ranges);
            let costs: Vec<(usize, f64)> = (0..8)
                .filter(|&b| !removed[b])
                .map(|b| (b, brute_trace(&current.without(part.block(b)), &grid, &ranges) - base))
                .collect();
            let min = costs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let oracle = costs.iter().find(|c| c.1 <= min + 1e-12).unwrap().0;
            assert_eq!(chosen, oracle);
            assert!((mfi - min).abs() < 1e-10);
            removed[chosen] = true;
            current = current.without(part.block(chosen));
        }
        assert_eq!(current, support);
    }

    #[test]
    fn report_telescopes_and_is_monotone() {
        let (grid, ranges) = small();
        let (support, report) = problem(grid, ranges).design(&BlockPartition::new(16, 2).unwrap(), 0.25).unwrap();
        let sum: f64 = report.mfi_values.iter().sum();
        let end_to_end = brute_trace(&support, &grid, &ranges) - brute_trace(&SpectrumSupport::full(16), &grid, &ranges);
        assert!((sum - end_to_end).abs() < 1e-8);
        let mut prev = report.initial_trace;
        for &t in &report.trace_history {
            assert!(t >= prev - 1e-12);
            prev = t;
        }
        assert!(report.mfi_values.iter().all(|&v| v >= 0.0));
        assert_eq!(occupancy(&support), 0.25);
    }
}
