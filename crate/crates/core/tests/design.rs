mod common;

use common::*;
use rrmmse_core::{
    build_sensing_matrix, compute_coarray, posterior_covariance_diag, BlockPartition, DesignProblem, DiagonalPrior,
    FrequencyGrid, Geometry, NoiseModel, NoiseReference, RangeGrid, SpectrumSupport,
};

const PRIOR: f64 = 5e3;
const NOISE: f64 = 5.0;

fn desk_problem() -> (Geometry, DesignProblem) {
    let geo = Geometry::desk();
    let prior = DiagonalPrior::uniform(geo.bin_count(), PRIOR).unwrap();
    let p = DesignProblem::new(geo.frequencies, geo.ranges, prior, NoiseModel::new(NOISE).unwrap()).unwrap();
    (geo, p)
}

/// `Tr(K_ε)/M` through the dense `K x K` innovation form with the comb-referenced noise.
fn dense_trace(support: &SpectrumSupport, grid: &FrequencyGrid, ranges: &RangeGrid, prior: f64, noise: f64) -> f64 {
    let h = build_sensing_matrix(support, grid, ranges).unwrap();
    let a = from_mat(h.entries());
    let m = ranges.bin_count();
    let s2 = noise * support.line_count() as f64 / support.preserved_count() as f64;
    let post = posterior_innovation(&a, &vec![prior; m], s2);
    (0..m).map(|i| post[i][i].re).sum::<f64>() / m as f64
}

#[test]
fn desk_half_design_telescopes_and_is_monotone() {
    let (geo, problem) = desk_problem();
    let partition = BlockPartition::default_for(&geo.frequencies);
    let (support, report) = problem.design(&partition, 0.5).unwrap();
    assert_eq!(support.occupancy(), 0.5);
    assert_eq!(report.final_occupancy, 0.5);

    let sum: f64 = report.mfi_values.iter().sum();
    let end_to_end = report.trace_history.last().unwrap() - report.initial_trace;
    assert!((sum - end_to_end).abs() <= 1e-8, "sum {sum} vs {end_to_end}");

    let mut prev = report.initial_trace;
    for &t in &report.trace_history {
        assert!(t >= prev, "trace fell from {prev} to {t}");
        prev = t;
    }
    assert!(report.mfi_values.iter().all(|&v| v >= 0.0));

    // Lag-sum traces agree with a direct K x K evaluation on the designed support.
    let h = build_sensing_matrix(&support, &geo.frequencies, &geo.ranges).unwrap();
    let prior = DiagonalPrior::uniform(geo.bin_count(), PRIOR).unwrap();
    let s2 = problem.effective_noise_variance(support.preserved_count());
    let direct = posterior_covariance_diag(&h, &prior, NoiseModel::new(s2).unwrap()).unwrap();
    let direct_trace = direct.iter().sum::<f64>() / direct.len() as f64;
    let last = *report.trace_history.last().unwrap();
    assert!((direct_trace - last).abs() <= 1e-8 * last, "{direct_trace} vs {last}");

    assert!(compute_coarray(&support).holes_within_span().is_empty());
}

#[test]
fn desk_three_quarter_design_has_full_coarray() {
    let (geo, problem) = desk_problem();
    let (support, report) = problem.design(&BlockPartition::default_for(&geo.frequencies), 0.75).unwrap();
    assert_eq!(support.occupancy(), 0.75);
    assert_eq!(report.removal_order.len(), 20);
    assert!(compute_coarray(&support).holes_within_span().is_empty());
}

#[test]
fn greedy_choice_matches_exhaustive_scan() {
    let grid = FrequencyGrid::new(16, 1000.0, 2).unwrap();
    let ranges = RangeGrid::new(8, 1e-3).unwrap();
    for (prior, noise) in [(1.0, 0.1), (PRIOR, NOISE), (10.0, 1.0)] {
        let problem =
            DesignProblem::new(grid, ranges, DiagonalPrior::uniform(8, prior).unwrap(), NoiseModel::new(noise).unwrap())
                .unwrap();
        let partition = BlockPartition::new(16, 2).unwrap();
        let (_, report) = problem.design(&partition, 0.5).unwrap();

        let mut current = SpectrumSupport::full(16);
        for (step, &chosen) in report.removal_order.iter().enumerate() {
            let mut best: Option<(usize, f64)> = None;
            for b in 0..partition.len() {
                let block = partition.block(b);
                if !block.clone().all(|n| current.contains(n)) {
                    continue;
                }
                let t = dense_trace(&current.without(block), &grid, &ranges, prior, noise);
                if best.is_none_or(|(_, bt)| t < bt - 1e-10 * bt.abs()) {
                    best = Some((b, t));
                }
            }
            let (b, t) = best.unwrap();
            assert_eq!(chosen, b, "step {step} (prior {prior}, noise {noise})");
            assert!((report.trace_history[step] - t).abs() <= 1e-9 * t);
            current = current.without(partition.block(b));
        }
    }
}

#[test]
fn full_target_is_a_no_op() {
    let (geo, problem) = desk_problem();
    let (support, report) = problem.design(&BlockPartition::default_for(&geo.frequencies), 1.0).unwrap();
    assert_eq!(support, SpectrumSupport::full(geo.line_count()));
    assert!(report.removal_order.is_empty() && report.mfi_values.is_empty());
}

#[test]
fn design_is_deterministic() {
    let (geo, problem) = desk_problem();
    let partition = BlockPartition::default_for(&geo.frequencies);
    let a = problem.design(&partition, 0.75).unwrap();
    let b = problem.design(&partition, 0.75).unwrap();
    assert_eq!(a, b);
}

#[test]
fn tiny_target_is_rejected() {
    let (geo, problem) = desk_problem();
    let partition = BlockPartition::default_for(&geo.frequencies);
    assert!(problem.design(&partition, 0.001).is_err());
}

#[test]
fn preserved_line_reference_keeps_noise_fixed() {
    let (_, problem) = desk_problem();
    let fixed = problem.with_noise_reference(NoiseReference::PreservedLines);
    assert_eq!(fixed.effective_noise_variance(400), NOISE);
    let (_, comb) = desk_problem();
    assert_eq!(comb.effective_noise_variance(400), 2.0 * NOISE);
}
