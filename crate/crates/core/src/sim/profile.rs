//! Per-bin range-profile tables.

use std::path::Path;

use super::metrics::power_db;
use super::scene::Scene;
use crate::c64;
use crate::error::{Error, Result};
use crate::grid::RangeGrid;
use crate::io::{fmt_f64, write_csv};
use crate::rrmmse::EstimationResult;

pub const PROFILE_HEADER: [&str; 7] = [
    "bin",
    "delay_s",
    "true_power_db",
    "matched_filter_db",
    "rrmmse_db",
    "posterior_variance",
    "in_support",
];

fn db_cell(z: c64) -> String {
    power_db(z).map(fmt_f64).unwrap_or_default()
}

/// Writes one row per range bin. Zero powers are left empty.
pub fn emit_profile_table(
    scene: &Scene,
    matched: &[c64],
    result: &EstimationResult,
    ranges: &RangeGrid,
    path: &Path,
) -> Result<()> {
    let m = ranges.bin_count();
    for (what, len) in [
        ("scene length", scene.gamma.len()),
        ("matched-filter length", matched.len()),
        ("estimate length", result.estimate.len()),
        ("posterior length", result.posterior_variance.len()),
    ] {
        if len != m {
            return Err(Error::DimensionMismatch {
                what,
                expected: m,
                found: len,
            });
        }
    }
    let rows: Vec<Vec<String>> = (0..m)
        .map(|b| {
            vec![
                (b + 1).to_string(),
                fmt_f64(ranges.delay(b)),
                db_cell(scene.gamma[b]),
                db_cell(matched[b]),
                db_cell(result.estimate[b]),
                fmt_f64(result.posterior_variance[b]),
                u8::from(result.support.contains(b)).to_string(),
            ]
        })
        .collect();
    write_csv(path, &PROFILE_HEADER, &rows)
}
