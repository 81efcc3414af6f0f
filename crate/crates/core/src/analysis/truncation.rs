use serde::{Deserialize, Serialize};

use super::fit::mean_sd;
use super::mc::{map_paths, MCConfig};
use crate::error::{Error, Result};
use crate::noise::{sample, LevyNoiseSpec};
use crate::scheme::{run_with, CoefficientSpec, InitialCondition, SpectralSolver};
use crate::spectral::GridSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub cap: f64,
    /// Mean of `|u_N(t,x) - u_{N_max}(t,x)|` over paths.
    pub mean_discrepancy: f64,
    pub se: f64,
    /// Fraction of paths with no jump above `N` in `[0,t] × [0,1]`.
    pub exact_fraction: f64,
    /// Exact paths whose discrepancy is nevertheless non-zero.
    pub exact_violations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationReport {
    pub rows: Vec<TruncationRow>,
    pub paths: usize,
}

impl TruncationReport {
    pub fn exact_paths_agree(&self) -> bool {
        self.rows.iter().all(|r| r.exact_violations == 0)
    }

    pub fn exact_fraction_nondecreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].exact_fraction >= w[0].exact_fraction)
    }

    /// Mean discrepancy never rises by more than `k` standard errors.
    pub fn discrepancy_nonincreasing(&self, k: f64) -> bool {
        self.rows.windows(2).all(|w| {
            let slack = k * (w[0].se * w[0].se + w[1].se * w[1].se).sqrt();
            w[1].mean_discrepancy <= w[0].mean_discrepancy + slack
        })
    }
}

pub fn check_truncation_inputs(grid: &GridSpec, levels: &[f64], t: f64) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Configuration("empty truncation ladder".into()));
    }
    if levels.iter().any(|&n| !(n > 1.0 && n.is_finite())) {
        return Err(Error::InvalidParameter(format!("truncation levels {levels:?} must exceed 1")));
    }
    if !levels.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Configuration(format!("truncation levels {levels:?} must increase")));
    }
    grid.with_horizon(t)
        .map_err(|_| Error::Domain(format!("t = {t} is not a positive multiple of tau = {}", grid.tau())))?;
    Ok(())
}

/// Runs the scheme with the same jump stream truncated at every level of
/// `levels` and compares `u_N(t, x)` with the largest level.
#[allow(clippy::too_many_arguments)]
pub fn truncation_study(
    grid: &GridSpec,
    noise: &LevyNoiseSpec,
    levels: &[f64],
    coeff: &CoefficientSpec,
    u0: &InitialCondition,
    t: f64,
    x: f64,
    mc: &MCConfig,
) -> Result<TruncationReport> {
    mc.validate()?;
    noise.validate()?;
    check_truncation_inputs(grid, levels, t)?;
    let grid = grid.with_horizon(t)?;
    let specs: Vec<LevyNoiseSpec> = levels.iter().map(|&n| noise.truncate(n)).collect::<Result<_>>()?;
    let untruncated = LevyNoiseSpec {
        truncation: None,
        ..noise.clone()
    };
    let cell = grid.cell_index(x);

    // per path: (max |jump|, u_N(t, x) for every N)
    let per_path: Vec<(f64, Vec<f64>)> = map_paths(
        mc,
        || SpectralSolver::new(&grid),
        |solver, seed| {
            let full = sample(&grid, &untruncated, seed, true)?;
            let max_jump = full.max_jump().unwrap_or(0.0);
            let values = specs
                .iter()
                .map(|spec| {
                    let field = sample(&grid, spec, seed, false)?;
                    Ok(run_with(solver, &field, coeff, u0)?.last_row()[cell])
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((max_jump, values))
        },
    )?;

    let paths = per_path.len();
    let last = levels.len() - 1;
    let rows = levels
        .iter()
        .enumerate()
        .map(|(k, &cap)| {
            let diffs: Vec<f64> = per_path.iter().map(|(_, v)| (v[k] - v[last]).abs()).collect();
            let exact: Vec<bool> = per_path.iter().map(|(m, _)| *m <= cap).collect();
            let (mean, sd) = mean_sd(&diffs);
            TruncationRow {
                cap,
                mean_discrepancy: mean,
                se: sd / (paths as f64).sqrt(),
                exact_fraction: exact.iter().filter(|e| **e).count() as f64 / paths as f64,
                exact_violations: exact.iter().zip(&diffs).filter(|(e, d)| **e && **d != 0.0).count(),
            }
        })
        .collect();
    Ok(TruncationReport { rows, paths })
}
