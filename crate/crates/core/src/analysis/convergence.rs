use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fit::{bootstrap_rng, fit_with_replicates, log_slope, OrderFit};
use super::mc::{map_paths, MCConfig};
use crate::error::{Error, Result};
use crate::noise::{moment_m_lambda, sample, LevyNoiseSpec};
use crate::scheme::{run_with, CoefficientSpec, InitialCondition, SpectralSolver};
use crate::spectral::{GridSpec, StabilityConstants};

/// A refinement study against the finest grid under coupled noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSetup {
    pub theta: f64,
    pub coeff: CoefficientSpec,
    pub u0: InitialCondition,
    pub noise: LevyNoiseSpec,
    /// Coarse levels `(n_k, τ_k)`.
    pub ladder: Vec<(usize, f64)>,
    /// Reference level `(n*, τ*)`.
    pub reference: (usize, f64),
    pub horizon: f64,
    /// Probe positions in `[0, 1)`.
    pub probes: Vec<f64>,
    pub mc: MCConfig,
    #[serde(default)]
    pub constants: StabilityConstants,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// `τ` fixed, fit against `1/n`.
    Space,
    /// `n` fixed, fit against `τ`.
    Time,
    /// Both refine, fit against `1/n`.
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelError {
    pub n: usize,
    pub tau: f64,
    pub scale: f64,
    pub error: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub axis: Axis,
    pub levels: Vec<LevelError>,
    /// `None` when some error is zero (e.g. a level equal to the reference).
    pub fit: Option<OrderFit>,
    pub paths: usize,
}

struct Level {
    grid: GridSpec,
    kt: usize,
    kx: usize,
}

fn ratio(big: f64, small: f64) -> Option<usize> {
    let r = big / small;
    let k = r.round();
    ((r - k).abs() <= 1e-9 * r.max(1.0) && k >= 1.0).then_some(k as usize)
}

fn build_levels(setup: &ConvergenceSetup) -> Result<(GridSpec, Vec<Level>, Axis)> {
    let (n_ref, tau_ref) = setup.reference;
    let reference = GridSpec::with_constants(n_ref, tau_ref, setup.theta, setup.horizon, setup.constants)
        .map_err(|e| relabel(e, "reference level"))?;
    if setup.ladder.is_empty() {
        return Err(Error::Configuration("empty ladder".into()));
    }
    let mut levels = Vec::new();
    for (k, &(n, tau)) in setup.ladder.iter().enumerate() {
        let grid = GridSpec::with_constants(n, tau, setup.theta, setup.horizon, setup.constants)
            .map_err(|e| relabel(e, &format!("ladder level {k} (n = {n}, tau = {tau})")))?;
        let kx = (n > 0 && n_ref % n == 0)
            .then_some(n_ref / n)
            .ok_or_else(|| Error::Alignment(format!("level {k}: n = {n} does not divide n* = {n_ref}")))?;
        let kt = ratio(tau, tau_ref)
            .ok_or_else(|| Error::Alignment(format!("level {k}: tau = {tau} is not a multiple of tau* = {tau_ref}")))?;
        levels.push(Level { grid, kt, kx });
    }
    let same_tau = levels.iter().all(|l| l.kt == 1);
    let same_n = levels.iter().all(|l| l.kx == 1);
    let axis = match (same_tau, same_n) {
        (true, _) => Axis::Space,
        (false, true) => Axis::Time,
        _ => Axis::Joint,
    };
    Ok((reference, levels, axis))
}

fn relabel(e: Error, what: &str) -> Error {
    match e {
        Error::Stability(m) => Error::Stability(format!("{what}: {m}")),
        Error::InvalidGrid(m) => Error::InvalidGrid(format!("{what}: {m}")),
        Error::InvalidParameter(m) => Error::InvalidParameter(format!("{what}: {m}")),
        other => other,
    }
}

/// Validates a setup without sampling anything.
pub fn check_convergence_setup(setup: &ConvergenceSetup) -> Result<Axis> {
    setup.mc.validate()?;
    setup.noise.validate()?;
    setup.coeff.validate()?;
    moment_m_lambda(&setup.noise.measure, 2.0)?;
    if setup.probes.is_empty() || setup.probes.iter().any(|x| !(0.0..1.0).contains(x)) {
        return Err(Error::InvalidParameter("probes must be a non-empty subset of [0, 1)".into()));
    }
    setup.u0.sample(setup.reference.0)?;
    for &(n, _) in &setup.ladder {
        setup.u0.sample(n)?;
    }
    Ok(build_levels(setup)?.2)
}

/// Runs every level on noise coarsened from one fine sample per path and
/// reports `max_x (Ê|u_k(T,x) - u_ref(T,x)|²)^{1/2}` per level.
pub fn convergence_study(setup: &ConvergenceSetup) -> Result<ConvergenceReport> {
    check_convergence_setup(setup)?;
    let (reference, levels, axis) = build_levels(setup)?;
    let np = setup.probes.len();
    let nl = levels.len();

    // per path: squared error for level k and probe q at index k·np + q
    let per_path: Vec<Vec<f64>> = map_paths(
        &setup.mc,
        || {
            (
                SpectralSolver::new(&reference),
                levels.iter().map(|l| SpectralSolver::new(&l.grid)).collect::<Vec<_>>(),
            )
        },
        |(ref_solver, solvers), seed| {
            let fine = sample(&reference, &setup.noise, seed, false)?;
            let fine_total = fine.total();
            let u_ref = run_with(ref_solver, &fine, &setup.coeff, &setup.u0)?;
            let mut out = Vec::with_capacity(nl * np);
            for (level, solver) in levels.iter().zip(solvers.iter_mut()) {
                let coarse = fine.coarsen(level.kt, level.kx)?;
                let total = coarse.total();
                if (total - fine_total).abs() > 1e-12 * (1.0 + fine_total.abs()) + 1e-12 * fine.increments().len() as f64 {
                    return Err(Error::Precision(format!(
                        "coarsened total {total} differs from the fine total {fine_total}"
                    )));
                }
                let u = run_with(solver, &coarse, &setup.coeff, &setup.u0)?;
                for &x in &setup.probes {
                    let a = u.last_row()[level.grid.cell_index(x)];
                    let b = u_ref.last_row()[reference.cell_index(x)];
                    out.push((a - b) * (a - b));
                }
            }
            Ok(out)
        },
    )?;

    let paths = per_path.len();
    let scale = |l: &Level| match axis {
        Axis::Time => l.grid.tau(),
        Axis::Space | Axis::Joint => 1.0 / l.grid.n() as f64,
    };
    let scales: Vec<f64> = levels.iter().map(scale).collect();
    let errors_from = |sums: &[f64], total: f64| -> Vec<f64> {
        (0..nl)
            .map(|k| {
                (0..np)
                    .map(|q| (sums[k * np + q] / total).sqrt())
                    .fold(0.0, f64::max)
            })
            .collect()
    };

    let mut sums = vec![0.0; nl * np];
    let mut sq_sums = vec![0.0; nl * np];
    for row in &per_path {
        for (i, v) in row.iter().enumerate() {
            sums[i] += v;
            sq_sums[i] += v * v;
        }
    }
    let mut level_errors = Vec::with_capacity(nl);
    for (k, level) in levels.iter().enumerate() {
        let (mut best, mut best_q) = (-1.0, 0);
        for q in 0..np {
            let e = (sums[k * np + q] / paths as f64).sqrt();
            if e > best {
                best = e;
                best_q = q;
            }
        }
        let i = k * np + best_q;
        let mean = sums[i] / paths as f64;
        let var = (sq_sums[i] / paths as f64 - mean * mean).max(0.0) * paths as f64 / (paths as f64 - 1.0);
        // delta method for the square root of a mean
        let se = if best > 0.0 { (var / paths as f64).sqrt() / (2.0 * best) } else { 0.0 };
        level_errors.push(LevelError {
            n: level.grid.n(),
            tau: level.grid.tau(),
            scale: scales[k],
            error: best,
            se,
        });
    }

    let fit = if level_errors.iter().all(|l| l.error > 0.0) && nl >= 3 {
        let mut rng = bootstrap_rng(setup.mc.base_seed);
        let mut reps = Vec::with_capacity(setup.mc.resamples);
        let mut boot = vec![0.0; nl * np];
        for _ in 0..setup.mc.resamples {
            boot.iter_mut().for_each(|s| *s = 0.0);
            for _ in 0..paths {
                let row = &per_path[rng.random_range(0..paths)];
                for (s, v) in boot.iter_mut().zip(row) {
                    *s += v;
                }
            }
            reps.push(log_slope(&scales, &errors_from(&boot, paths as f64)));
        }
        let points: Vec<(f64, f64)> = level_errors.iter().map(|l| (l.scale, l.error)).collect();
        Some(fit_with_replicates(&points, reps)?)
    } else {
        None
    };

    Ok(ConvergenceReport {
        axis,
        levels: level_errors,
        fit,
        paths,
    })
}
