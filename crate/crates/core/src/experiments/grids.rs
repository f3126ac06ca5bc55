//! Default grids and grid validation.

use alloc::format;
use alloc::vec::Vec;

use super::{ExperimentError, Family, SweepSpec};

const SSB_LADDER: [usize; 14] = [10, 20, 30, 50, 75, 100, 150, 200, 300, 500, 750, 1000, 1500, 2000];
const DECOMPOSITION_LADDER: [usize; 10] = [10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000];

fn capped(ladder: &[usize], pool: usize, fraction: f64) -> Vec<f64> {
    let cap = libm::floor(fraction * pool as f64) as usize;
    ladder.iter().filter(|&&m| m <= cap).map(|&m| m as f64).collect()
}

/// Sizes 10 to 2000, keeping those within `fraction` of the pool.
pub fn ssb_size_grid(pool: usize, fraction: f64) -> Vec<f64> {
    capped(&SSB_LADDER, pool, fraction)
}

/// Sizes 10 to 10000, keeping those within `fraction` of the pool.
pub fn decomposition_size_grid(pool: usize, fraction: f64) -> Vec<f64> {
    capped(&DECOMPOSITION_LADDER, pool, fraction)
}

/// Protected-group shares: steps of 0.002 below 0.02 and above 0.98, steps of
/// 0.1 in between, plus the population share.
pub fn ratio_grid(population_ratio: f64) -> Vec<f64> {
    let per_mille = (1..20).step_by(2).chain((100..=900).step_by(100)).chain((980..999).step_by(2));
    let mut grid: Vec<f64> = per_mille.map(|i| i as f64 / 1000.0).collect();
    if !grid.contains(&population_ratio) {
        grid.push(population_ratio);
    }
    grid.sort_unstable_by(f64::total_cmp);
    grid
}

/// Collected counts 2, 4, ..., 100.
pub fn collect_grid() -> Vec<f64> {
    (2..=100).step_by(2).map(|n| n as f64).collect()
}

pub fn default_grid(spec: &SweepSpec, pool: usize, population_ratio: f64) -> Vec<f64> {
    match spec.family {
        Family::SsbSize => ssb_size_grid(pool, spec.max_pool_fraction),
        Family::Decomposition if !spec.ratio_grid() => decomposition_size_grid(pool, spec.max_pool_fraction),
        Family::UrbRatio | Family::Decomposition => ratio_grid(population_ratio),
        Family::Collect => collect_grid(),
    }
}

pub(super) fn check_grid(grid: &[f64], ratios: bool) -> Result<(), ExperimentError> {
    let invalid = |msg: alloc::string::String| Err(ExperimentError::InvalidSpec(msg));
    if grid.is_empty() {
        return invalid("grid is empty".into());
    }
    for w in grid.windows(2) {
        if !(w[0] < w[1]) {
            return invalid(format!("grid must be strictly increasing ({} then {})", w[0], w[1]));
        }
    }
    for &v in grid {
        if ratios {
            if !(v > 0.0 && v < 1.0) {
                return invalid(format!("ratio {v} outside (0, 1)"));
            }
        } else if !(v >= 1.0 && libm::trunc(v) == v && v <= 1e12) {
            return invalid(format!("grid size {v} is not a positive integer"));
        }
    }
    Ok(())
}
