use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fit::{bootstrap_rng, fit_with_replicates, log_slope, mean_sd, OrderFit};
use super::mc::{map_paths, MCConfig};
use super::sobolev::OscillationProduct;
use crate::error::{Error, Result};
use crate::noise::{sample, LevyNoiseSpec};
use crate::scheme::{run_with, CoefficientSpec, InitialCondition, SpectralSolver};
use crate::spectral::{amplification, GridSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathExponentEstimate {
    /// Fit of the mean oscillation product against `h`; the interval comes
    /// from resampling paths.
    pub fit: OrderFit,
    pub h: Vec<f64>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub paths: usize,
}

/// Default ladder `{2τ, 4τ, 8τ, 16τ}`.
pub fn default_h_ladder(tau: f64) -> Vec<f64> {
    [2.0, 4.0, 8.0, 16.0].iter().map(|k| k * tau).collect()
}

pub fn check_path_exponent_inputs(grid: &GridSpec, coeff: &CoefficientSpec, t: f64, h_ladder: &[f64], r: f64) -> Result<()> {
    if !coeff.is_bounded() {
        return Err(Error::Configuration(format!("path regularity needs a bounded coefficient, got {coeff:?}")));
    }
    if !(r < -0.5) {
        return Err(Error::Domain(format!("r = {r} must be below -1/2")));
    }
    if h_ladder.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 ladder points, got {}", h_ladder.len())));
    }
    let tau = grid.tau();
    for &h in h_ladder {
        if !(h > tau * (1.0 - 1e-12) && h < t.min(1.0)) {
            return Err(Error::Domain(format!("h = {h} is outside (τ, min(t, 1)) with τ = {tau}, t = {t}")));
        }
    }
    let h_max = h_ladder.iter().cloned().fold(0.0, f64::max);
    if t + h_max > grid.horizon() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "t + max h = {} exceeds the horizon {}",
            t + h_max,
            grid.horizon()
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of `E[osc_r(u(t+h),u(t))² osc_r(u(t),u(t-h))²]` on a
/// ladder of `h`, with a log-log fit.
#[allow(clippy::too_many_arguments)]
pub fn estimate_path_exponent(
    grid: &GridSpec,
    noise: &LevyNoiseSpec,
    coeff: &CoefficientSpec,
    u0: &InitialCondition,
    t: f64,
    h_ladder: &[f64],
    r: f64,
    mc: &MCConfig,
) -> Result<PathExponentEstimate> {
    mc.validate()?;
    check_path_exponent_inputs(grid, coeff, t, h_ladder, r)?;
    let spectral = amplification(grid);
    let per_path: Vec<Vec<f64>> = map_paths(
        mc,
        || (SpectralSolver::new(grid), OscillationProduct::new(&spectral, r)),
        |(solver, osc), seed| {
            let osc = osc.as_mut().map_err(|e| Error::Domain(e.to_string()))?;
            let field = sample(grid, noise, seed, false)?;
            let sol = run_with(solver, &field, coeff, u0)?;
            h_ladder.iter().map(|&h| osc.eval(&sol, t, h)).collect()
        },
    )?;

    let k = h_ladder.len();
    let column = |q: usize| per_path.iter().map(|row| row[q]).collect::<Vec<f64>>();
    let stats: Vec<(f64, f64)> = (0..k).map(|q| mean_sd(&column(q))).collect();
    if stats.iter().all(|&(_, sd)| sd == 0.0) {
        return Err(Error::Fit(
            "zero variance across paths at every h: the statistic does not depend on the noise".into(),
        ));
    }
    let means: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let std_errors: Vec<f64> = stats.iter().map(|s| s.1 / (mc.paths as f64).sqrt()).collect();

    let mut rng = bootstrap_rng(mc.base_seed);
    let paths = per_path.len();
    let mut reps = Vec::with_capacity(mc.resamples);
    let mut sums = vec![0.0; k];
    for _ in 0..mc.resamples {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for _ in 0..paths {
            let row = &per_path[rng.random_range(0..paths)];
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        reps.push(log_slope(h_ladder, &sums));
    }
    let points: Vec<(f64, f64)> = h_ladder.iter().cloned().zip(means.iter().cloned()).collect();
    let fit = fit_with_replicates(&points, reps)?;
    Ok(PathExponentEstimate {
        fit,
        h: h_ladder.to_vec(),
        means,
        std_errors,
        paths,
    })
}
