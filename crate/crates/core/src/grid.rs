//! Frequency and range grids, spectral supports, and sensing-matrix construction.
//!
//! A transmit spectrum is a comb of `N` uniformly spaced lines. A sparse
//! spectrum keeps `K` of them, described by a binary mask. Each kept line
//! contributes one row of the sensing matrix `H`, whose `(k, m)` entry is the
//! phase `exp(j ω_k τ_m)` accumulated by a reflection from range bin `m` at
//! angular frequency `ω_k`. Columns are scaled to unit Euclidean norm so the
//! Gram diagonal is one at every occupancy.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};

/// Largest `K * M` the sensing-matrix builder will allocate by default
/// (16 bytes per entry, so 1 GiB).
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 26;

/// Uniformly spaced spectral lines covering the transmit bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    line_count: usize,
    line_spacing_hz: f64,
    oversampling_factor: usize,
}

impl FrequencyGrid {
    pub fn new(line_count: usize, line_spacing_hz: f64, oversampling_factor: usize) -> Result<Self> {
        if line_count == 0 {
            return Err(Error::invalid("line_count", "must be positive"));
        }
        if !(line_spacing_hz > 0.0 && line_spacing_hz.is_finite()) {
            return Err(Error::invalid("line_spacing_hz", "must be positive and finite"));
        }
        if oversampling_factor == 0 {
            return Err(Error::invalid("oversampling_factor", "must be at least 1"));
        }
        Ok(Self {
            line_count,
            line_spacing_hz,
            oversampling_factor,
        })
    }

    /// Grid for bandwidth `B` observed over a delay window `T_0`: the
    /// Nyquist count `2 B T_0` is multiplied by the oversampling factor.
    pub fn for_window(bandwidth_hz: f64, timewidth_s: f64, oversampling_factor: usize) -> Result<Self> {
        let nyquist = nyquist_count(bandwidth_hz, timewidth_s)?;
        let n = nyquist * oversampling_factor.max(1);
        Self::new(n, bandwidth_hz / n as f64, oversampling_factor)
    }

    pub fn line_count(&self) -> usize {
        self.line_count
    }

    pub fn line_spacing_hz(&self) -> f64 {
        self.line_spacing_hz
    }

    pub fn oversampling_factor(&self) -> usize {
        self.oversampling_factor
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.line_count as f64 * self.line_spacing_hz
    }

    /// Angular spacing `Δω = 2π Δf`.
    pub fn angular_spacing(&self) -> f64 {
        2.0 * PI * self.line_spacing_hz
    }

    /// Number of Nyquist samples, `N / oversampling_factor`. Reporting only.
    pub fn nyquist_count(&self) -> usize {
        self.line_count / self.oversampling_factor
    }

    /// Baseband angular frequency of line `n`.
    pub fn angular_frequency(&self, n: usize) -> f64 {
        self.angular_spacing() * n as f64
    }
}

fn nyquist_count(bandwidth_hz: f64, timewidth_s: f64) -> Result<usize> {
    if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
        return Err(Error::invalid("bandwidth_hz", "must be positive and finite"));
    }
    if !(timewidth_s > 0.0 && timewidth_s.is_finite()) {
        return Err(Error::invalid("timewidth_s", "must be positive and finite"));
    }
    let count = (2.0 * bandwidth_hz * timewidth_s).round();
    if count < 1.0 {
        return Err(Error::invalid("timewidth_s", "2·B·T_0 must be at least 1"));
    }
    Ok(count as usize)
}

/// Range resolution cells with uniformly spaced, known delays spanning `[0, T_0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeGrid {
    bin_count: usize,
    timewidth_s: f64,
}

impl RangeGrid {
    pub fn new(bin_count: usize, timewidth_s: f64) -> Result<Self> {
        if bin_count == 0 {
            return Err(Error::invalid("bin_count", "must be positive"));
        }
        if !(timewidth_s >= 0.0 && timewidth_s.is_finite()) {
            return Err(Error::invalid("timewidth_s", "must be non-negative and finite"));
        }
        if bin_count > 1 && timewidth_s == 0.0 {
            return Err(Error::invalid("timewidth_s", "must be positive when there is more than one bin"));
        }
        Ok(Self {
            bin_count,
            timewidth_s,
        })
    }

    /// `M = 2 B T_0 + 1` bins at the Nyquist spacing `1 / (2B)`.
    pub fn for_window(bandwidth_hz: f64, timewidth_s: f64) -> Result<Self> {
        let m = nyquist_count(bandwidth_hz, timewidth_s)? + 1;
        Self::new(m, timewidth_s)
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn timewidth_s(&self) -> f64 {
        self.timewidth_s
    }

    pub fn spacing_s(&self) -> f64 {
        if self.bin_count > 1 {
            self.timewidth_s / (self.bin_count - 1) as f64
        } else {
            0.0
        }
    }

    /// Delay of bin `m` (zero-based).
    pub fn delay(&self, m: usize) -> f64 {
        m as f64 * self.spacing_s()
    }

    pub fn delays(&self) -> Vec<f64> {
        (0..self.bin_count).map(|m| self.delay(m)).collect()
    }
}

/// Frequency and range grids of one radar configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub frequencies: FrequencyGrid,
    pub ranges: RangeGrid,
}

impl Geometry {
    /// Geometry implied by bandwidth, delay window and oversampling factor.
    pub fn from_window(bandwidth_hz: f64, timewidth_s: f64, oversampling_factor: usize) -> Result<Self> {
        Ok(Self {
            frequencies: FrequencyGrid::for_window(bandwidth_hz, timewidth_s, oversampling_factor)?,
            ranges: RangeGrid::for_window(bandwidth_hz, timewidth_s)?,
        })
    }

    /// Reduced grid used for quick experiments: 800 lines, 101 range bins.
    pub fn desk() -> Self {
        Self::from_window(20e3, 2.5e-3, 8).expect("desk geometry is valid")
    }

    /// Full-size grid: 4000 lines, 401 range bins.
    pub fn paper_scale() -> Self {
        Self::from_window(20e3, 10e-3, 10).expect("paper-scale geometry is valid")
    }

    pub fn line_count(&self) -> usize {
        self.frequencies.line_count()
    }

    pub fn bin_count(&self) -> usize {
        self.ranges.bin_count()
    }
}

/// Binary occupancy pattern over the frequency grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectrumSupport {
    mask: Vec<bool>,
    preserved: Vec<usize>,
}

/// On-disk form: `{"n": N, "preserved": [indices]}`.
#[derive(Serialize, Deserialize)]
struct SupportRepr {
    n: usize,
    preserved: Vec<usize>,
}

impl SpectrumSupport {
    pub fn full(n: usize) -> Self {
        Self::from_mask(vec![true; n])
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let preserved = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &w)| w.then_some(i))
            .collect();
        Self { mask, preserved }
    }

    /// Builds a support from preserved line indices, which may be unsorted
    /// but must be distinct and below `n`.
    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut mask = vec![false; n];
        for &i in indices {
            if i >= n {
                return Err(Error::invalid("preserved", format!("index {i} out of range for {n} lines")));
            }
            if mask[i] {
                return Err(Error::invalid("preserved", format!("duplicate index {i}")));
            }
            mask[i] = true;
        }
        Ok(Self::from_mask(mask))
    }

    pub fn line_count(&self) -> usize {
        self.mask.len()
    }

    pub fn preserved_count(&self) -> usize {
        self.preserved.len()
    }

    pub fn preserved_indices(&self) -> &[usize] {
        &self.preserved
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, n: usize) -> bool {
        self.mask.get(n).copied().unwrap_or(false)
    }

    /// Fraction `K / N` of preserved lines.
    pub fn occupancy(&self) -> f64 {
        if self.mask.is_empty() {
            0.0
        } else {
            self.preserved.len() as f64 / self.mask.len() as f64
        }
    }

    /// Copy with the lines in `lines` vacated.
    pub fn without(&self, lines: std::ops::Range<usize>) -> Self {
        let mut mask = self.mask.clone();
        for w in &mut mask[lines.start.min(self.mask.len())..lines.end.min(self.mask.len())] {
            *w = false;
        }
        Self::from_mask(mask)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SupportRepr {
            n: self.line_count(),
            preserved: self.preserved.clone(),
        })
        .expect("support serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Result<Self>> {
        let repr: SupportRepr = serde_json::from_str(text)?;
        Ok(Self::from_indices(repr.n, &repr.preserved))
    }
}

impl Serialize for SpectrumSupport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SupportRepr {
            n: self.line_count(),
            preserved: self.preserved.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectrumSupport {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SupportRepr::deserialize(d)?;
        Self::from_indices(repr.n, &repr.preserved).map_err(serde::de::Error::custom)
    }
}

/// `K x M` matrix of steering columns linking range bins to preserved lines.
#[derive(Debug, Clone)]
pub struct SensingMatrix {
    entries: Mat<c64>,
    frequencies: Vec<f64>,
    normalized: bool,
}

impl SensingMatrix {
    /// Wraps an arbitrary matrix. Used for synthetic test geometries; the
    /// `normalized` flag records whether every column already has unit norm.
    pub fn from_matrix(entries: Mat<c64>) -> Self {
        let normalized = (0..entries.ncols()).all(|j| {
            let n2: f64 = (0..entries.nrows()).map(|i| entries[(i, j)].norm_sqr()).sum();
            (n2.sqrt() - 1.0).abs() < 1e-12
        });
        Self {
            entries,
            frequencies: Vec::new(),
            normalized,
        }
    }

    pub fn entries(&self) -> &Mat<c64> {
        &self.entries
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// Preserved angular frequencies, one per row (empty for matrices built
    /// with [`SensingMatrix::from_matrix`]).
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn column(&self, m: usize) -> Vec<c64> {
        (0..self.rows()).map(|k| self.entries[(k, m)]).collect()
    }

    /// `H^H H`.
    pub fn gram(&self) -> Mat<c64> {
        self.entries.adjoint() * &self.entries
    }
}

/// Builds the normalized sensing matrix for the preserved lines of `support`.
pub fn build_sensing_matrix(support: &SpectrumSupport, grid: &FrequencyGrid, ranges: &RangeGrid) -> Result<SensingMatrix> {
    build_sensing_matrix_with_budget(support, grid, ranges, DEFAULT_MEMORY_BUDGET)
}

pub fn build_sensing_matrix_with_budget(
    support: &SpectrumSupport,
    grid: &FrequencyGrid,
    ranges: &RangeGrid,
    budget: usize,
) -> Result<SensingMatrix> {
    let k = support.preserved_count();
    let m = ranges.bin_count();
    if k == 0 {
        return Err(Error::EmptySpectrum);
    }
    if support.line_count() != grid.line_count() {
        return Err(Error::DimensionMismatch {
            what: "support line count",
            expected: grid.line_count(),
            found: support.line_count(),
        });
    }
    if k.checked_mul(m).is_none_or(|e| e > budget) {
        return Err(Error::MemoryBudget { rows: k, cols: m, budget });
    }
    let frequencies: Vec<f64> = support
        .preserved_indices()
        .iter()
        .map(|&n| grid.angular_frequency(n))
        .collect();
    let delays = ranges.delays();
    // Every entry has unit modulus before scaling, so each column norm is sqrt(K).
    let scale = 1.0 / (k as f64).sqrt();
    let entries = Mat::from_fn(k, m, |row, col| c64::from_polar(scale, frequencies[row] * delays[col]));
    Ok(SensingMatrix {
        entries,
        frequencies,
        normalized: true,
    })
}

/// Number of singular values of `H` above `rel_tol * sigma_max`.
pub fn numerical_rank(h: &SensingMatrix, rel_tol: f64) -> usize {
    if h.rows() == 0 || h.cols() == 0 {
        return 0;
    }
    let Ok(sv) = h.entries().singular_values() else {
        return h.rows().min(h.cols());
    };
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Lag-redundancy profile of a support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coarray {
    /// `c(l)` for `l = 0..N`.
    pub values: Vec<usize>,
    /// Lags `l >= 1` with `c(l) = 0`.
    pub hole_lags: Vec<usize>,
    /// Distance between the lowest and highest preserved line.
    pub span: usize,
}

impl Coarray {
    pub fn redundancy(&self) -> &[usize] {
        self.values.get(1..).unwrap_or(&[])
    }

    /// Holes at lags `1..=span`, i.e. lags the support could reach but does not.
    pub fn holes_within_span(&self) -> Vec<usize> {
        self.hole_lags.iter().copied().filter(|&l| l <= self.span).collect()
    }
}

/// `c(l) = sum_n w_n w_{n+l}`.
pub fn compute_coarray(support: &SpectrumSupport) -> Coarray {
    let w = support.mask();
    let n = w.len();
    let values: Vec<usize> = (0..n)
        .map(|l| (0..n - l).filter(|&i| w[i] && w[i + l]).count())
        .collect();
    let hole_lags = (1..n).filter(|&l| values[l] == 0).collect();
    let p = support.preserved_indices();
    let span = match (p.first(), p.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0,
    };
    Coarray { values, hole_lags, span }
}

/// Off-diagonal structure of the Gram matrix `H^H H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramStats {
    /// Largest `|[H^H H]_{m,m'}|` over `m != m'`.
    pub max_offdiag: f64,
    /// Off-diagonal energy `sum_{m' != m} |[H^H H]_{m,m'}|^2`, averaged over columns.
    pub integrated_sidelobe: f64,
}

pub fn gram_offdiag_stats(h: &SensingMatrix) -> GramStats {
    let g = h.gram();
    let m = g.ncols();
    let mut max_offdiag = 0.0_f64;
    let mut energy = 0.0;
    for j in 0..m {
        for i in 0..m {
            if i != j {
                let a = g[(i, j)].norm();
                max_offdiag = max_offdiag.max(a);
                energy += a * a;
            }
        }
    }
    GramStats {
        max_offdiag,
        integrated_sidelobe: if m > 0 { energy / m as f64 } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dft_geometry(n: usize) -> (FrequencyGrid, RangeGrid) {
        // Δf·Δτ = 1/n with N = M = n.
        let ranges = RangeGrid::new(n, (n - 1) as f64 * 1e-3).unwrap();
        let grid = FrequencyGrid::new(n, 1.0 / (n as f64 * 1e-3), 1).unwrap();
        (grid, ranges)
    }

    #[test]
    fn single_dc_line_gives_all_ones() {
        let geo = Geometry::desk();
        let support = SpectrumSupport::from_indices(geo.line_count(), &[0]).unwrap();
        let h = build_sensing_matrix(&support, &geo.frequencies, &geo.ranges).unwrap();
        assert_eq!((h.rows(), h.cols()), (1, 101));
        for m in 0..h.cols() {
            assert_eq!(h.entries()[(0, m)], c64::new(1.0, 0.0));
        }
    }

    #[test]
    fn critically_sampled_square_geometry_is_unitary() {
        let (grid, ranges) = dft_geometry(8);
        let h = build_sensing_matrix(&SpectrumSupport::full(8), &grid, &ranges).unwrap();
        // brute-force Gram product
        for a in 0..8 {
            for b in 0..8 {
                let mut acc = c64::new(0.0, 0.0);
                for k in 0..8 {
                    acc += h.entries()[(k, a)].conj() * h.entries()[(k, b)];
                }
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((acc - c64::new(expected, 0.0)).norm() < 1e-10, "({a},{b}) = {acc}");
            }
        }
    }

    #[test]
    fn paper_window_has_401_bins() {
        let geo = Geometry::paper_scale();
        assert_eq!(geo.bin_count(), 401);
        assert_eq!(geo.line_count(), 4000);
        assert_eq!(geo.frequencies.nyquist_count(), 400);
        assert!((geo.frequencies.bandwidth_hz() - 20e3).abs() < 1e-9);
        assert!((geo.ranges.spacing_s() - 1.0 / 40e3).abs() < 1e-15);
    }

    #[test]
    fn desk_geometry() {
        let geo = Geometry::desk();
        assert_eq!((geo.line_count(), geo.bin_count()), (800, 101));
    }

    #[test]
    fn empty_support_is_rejected() {
        let geo = Geometry::desk();
        let support = SpectrumSupport::from_mask(vec![false; 800]);
        assert!(matches!(
            build_sensing_matrix(&support, &geo.frequencies, &geo.ranges),
            Err(Error::EmptySpectrum)
        ));
    }

    #[test]
    fn memory_budget_is_enforced() {
        let geo = Geometry::desk();
        let err = build_sensing_matrix_with_budget(&SpectrumSupport::full(800), &geo.frequencies, &geo.ranges, 1000)
            .unwrap_err();
        assert!(matches!(err, Error::MemoryBudget { rows: 800, cols: 101, .. }));
    }

    #[test]
    fn columns_have_unit_norm_and_equal_magnitudes() {
        let geo = Geometry::desk();
        let support = SpectrumSupport::from_indices(800, &[3, 10, 11, 500, 799]).unwrap();
        let h = build_sensing_matrix(&support, &geo.frequencies, &geo.ranges).unwrap();
        assert!(h.is_normalized());
        for m in 0..h.cols() {
            let col = h.column(m);
            let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            for z in &col {
                assert!((z.norm() - 1.0 / 5f64.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_mask_coarray_is_triangular() {
        let c = compute_coarray(&SpectrumSupport::full(5));
        assert_eq!(c.values, vec![5, 4, 3, 2, 1]);
        assert!(c.hole_lags.is_empty());
        assert_eq!(c.span, 4);
    }

    #[test]
    fn single_line_coarray() {
        let c = compute_coarray(&SpectrumSupport::from_indices(6, &[2]).unwrap());
        assert_eq!(c.values, vec![1, 0, 0, 0, 0, 0]);
        assert_eq!(c.hole_lags, vec![1, 2, 3, 4, 5]);
        assert!(c.holes_within_span().is_empty());
    }

    #[test]
    fn orthonormal_gram_has_no_sidelobes() {
        let (grid, ranges) = dft_geometry(8);
        let h = build_sensing_matrix(&SpectrumSupport::full(8), &grid, &ranges).unwrap();
        let s = gram_offdiag_stats(&h);
        assert!(s.max_offdiag < 1e-10);
        assert!(s.integrated_sidelobe < 1e-20);
    }

    #[test]
    fn single_column_has_no_offdiagonals() {
        let h = SensingMatrix::from_matrix(Mat::from_fn(4, 1, |_, _| c64::new(0.5, 0.0)));
        assert!(h.is_normalized());
        assert_eq!(gram_offdiag_stats(&h), GramStats { max_offdiag: 0.0, integrated_sidelobe: 0.0 });
    }

    #[test]
    fn support_json_shape() {
        let s = SpectrumSupport::from_indices(10, &[7, 1, 4]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v, serde_json::json!({"n": 10, "preserved": [1, 4, 7]}));
        assert_eq!(SpectrumSupport::from_json(&s.to_json()).unwrap().unwrap(), s);
        assert!(SpectrumSupport::from_indices(10, &[1, 1]).is_err());
        assert!(SpectrumSupport::from_indices(10, &[10]).is_err());
    }

    #[test]
    fn occupancy_of_half_mask() {
        let s = SpectrumSupport::from_indices(10, &[0, 2, 4, 6, 8]).unwrap();
        assert_eq!(s.occupancy(), 0.5);
        assert_eq!(SpectrumSupport::full(10).occupancy(), 1.0);
    }
}
