use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fit::{bootstrap_rng, least_squares, summarize};
use super::mc::{map_paths, MCConfig};
use crate::error::{Error, Result};
use crate::noise::{moment_m_lambda, sample, LevyNoiseSpec};
use crate::scheme::{CoefficientSpec, InitialCondition, SpectralSolver};
use crate::spectral::GridSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub p: f64,
    pub times: Vec<f64>,
    /// `log sup_x Ê|u(t, x)|^p` at every recorded time.
    pub log_sup: Vec<f64>,
    /// `log inf_x Ê|u(t, x)|^p` at every recorded time.
    pub log_inf: Vec<f64>,
    /// Bootstrap standard error of `log_sup` at every recorded time.
    pub log_sup_se: Vec<f64>,
    pub window: (f64, f64),
    pub lower_slope: f64,
    pub upper_slope: f64,
    pub lower_se: f64,
    pub upper_se: f64,
    pub lower_ci: (f64, f64),
    pub upper_ci: (f64, f64),
    /// Intercept of the affine fit of `log_sup` over the window.
    pub upper_intercept: f64,
}

impl LyapunovEstimate {
    /// Lower slope positive at `k` standard errors.
    pub fn lower_positive(&self, k: f64) -> bool {
        self.lower_slope - k * self.lower_se > 0.0
    }

    /// `log_sup(t) ≤ affine fit(t) + k·SE(t)` at every time in the window.
    pub fn upper_bounded(&self, k: f64) -> bool {
        self.times
            .iter()
            .zip(&self.log_sup)
            .zip(&self.log_sup_se)
            .filter(|((t, _), _)| in_window(**t, self.window))
            .all(|((t, v), se)| *v <= self.upper_intercept + self.upper_slope * t + k * se)
    }
}

fn in_window(t: f64, w: (f64, f64)) -> bool {
    t >= w.0 - 1e-12 && t <= w.1 + 1e-12
}

/// Checks the intermittency preset: linear σ with `L_σ > 0` and `J_0 > 0`,
/// constant positive initial data and centered noise.
pub fn check_intermittency_preset(noise: &LevyNoiseSpec, coeff: &CoefficientSpec, u0: &InitialCondition) -> Result<()> {
    if !matches!(coeff, CoefficientSpec::Linear { .. }) {
        return Err(Error::Configuration(format!(
            "intermittency needs the linear coefficient family, got {coeff:?} (J0 = {})",
            coeff.j0()
        )));
    }
    if !(coeff.lipschitz() > 0.0 && coeff.j0() > 0.0) {
        return Err(Error::Configuration(format!(
            "intermittency needs L_sigma > 0 and J0 > 0, got {} and {}",
            coeff.lipschitz(),
            coeff.j0()
        )));
    }
    match u0 {
        InitialCondition::Constant { value } if *value > 0.0 => {}
        other => {
            return Err(Error::Configuration(format!(
                "intermittency needs constant positive initial data, got {other:?}"
            )))
        }
    }
    if !noise.is_centered() {
        return Err(Error::Configuration(format!(
            "intermittency needs centered noise: drift {} differs from the centering value",
            noise.drift
        )));
    }
    if noise.measure.is_zero() {
        return Err(Error::Configuration("intermittency needs a non-zero Lévy measure".into()));
    }
    Ok(())
}

/// Checks every precondition of [`estimate_lyapunov`] and returns the
/// fitting window.
pub fn check_lyapunov_inputs(
    grid: &GridSpec,
    noise: &LevyNoiseSpec,
    coeff: &CoefficientSpec,
    u0: &InitialCondition,
    p: f64,
    mc: &MCConfig,
    window: Option<(f64, f64)>,
) -> Result<(f64, f64)> {
    check_intermittency_preset(noise, coeff, u0)?;
    if !(p > 1.0 && p < 3.0) {
        return Err(Error::Domain(format!("p = {p} must lie in (1, 3)")));
    }
    moment_m_lambda(&noise.measure, p)?;
    mc.validate()?;
    let horizon = grid.horizon();
    let window = window.unwrap_or((horizon / 2.0, horizon));
    if !(window.0 >= 0.0 && window.0 < window.1 && window.1 <= horizon * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("window {window:?} is not inside [0, {horizon}]")));
    }
    Ok(window)
}

/// Estimates the upper and lower `p`-th moment Lyapunov exponents by affine
/// fits of `log sup_x Ê|u|^p` and `log inf_x Ê|u|^p` over `window`
/// (default `[T/2, T]`), recording every `stride`-th step.
#[allow(clippy::too_many_arguments)]
pub fn estimate_lyapunov(
    grid: &GridSpec,
    noise: &LevyNoiseSpec,
    coeff: &CoefficientSpec,
    u0: &InitialCondition,
    p: f64,
    mc: &MCConfig,
    window: Option<(f64, f64)>,
    stride: usize,
) -> Result<LyapunovEstimate> {
    let window = check_lyapunov_inputs(grid, noise, coeff, u0, p, mc, window)?;
    let stride = stride.max(1);
    let n = grid.n();
    let m = grid.steps();
    let recorded: Vec<usize> = (0..=m).filter(|i| i % stride == 0 || *i == m).collect();
    let times: Vec<f64> = recorded.iter().map(|&i| grid.time(i)).collect();
    if times.iter().filter(|t| in_window(**t, window)).count() < 3 {
        return Err(Error::Fit("fewer than 3 recorded times in the window".into()));
    }

    // per path: |u(t_i, x_j)|^p at recorded times, row-major
    let per_path: Vec<Vec<f64>> = map_paths(
        mc,
        || (SpectralSolver::new(grid), vec![0.0; n], vec![0.0; n]),
        |(solver, u, next), seed| {
            let field = sample(grid, noise, seed, false)?;
            u.copy_from_slice(&u0.sample(n)?);
            let mut out = Vec::with_capacity(recorded.len() * n);
            let mut slot = 0;
            for i in 0..=m {
                if slot < recorded.len() && recorded[slot] == i {
                    out.extend(u.iter().map(|v| v.abs().powf(p)));
                    slot += 1;
                }
                if i < m {
                    solver.step_into(i, u, field.row(i), coeff, next)?;
                    std::mem::swap(u, next);
                }
            }
            Ok(out)
        },
    )?;

    let nt = times.len();
    let paths = per_path.len();
    let curves = |weights: &dyn Fn(usize) -> f64, total: f64| -> (Vec<f64>, Vec<f64>) {
        let mut acc = vec![0.0; nt * n];
        for (k, row) in per_path.iter().enumerate() {
            let w = weights(k);
            if w != 0.0 {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += w * v;
                }
            }
        }
        let mut sup = Vec::with_capacity(nt);
        let mut inf = Vec::with_capacity(nt);
        for q in 0..nt {
            let row = &acc[q * n..(q + 1) * n];
            sup.push((row.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / total).ln());
            inf.push((row.iter().cloned().fold(f64::INFINITY, f64::min) / total).ln());
        }
        (sup, inf)
    };
    let windowed: Vec<usize> = (0..nt).filter(|&q| in_window(times[q], window)).collect();
    let wt: Vec<f64> = windowed.iter().map(|&q| times[q]).collect();
    let slope = |curve: &[f64]| -> (f64, f64) {
        let y: Vec<f64> = windowed.iter().map(|&q| curve[q]).collect();
        least_squares(&wt, &y).unwrap_or((f64::NAN, f64::NAN))
    };

    let (log_sup, log_inf) = curves(&|_| 1.0, paths as f64);
    let (upper_slope, upper_intercept) = slope(&log_sup);
    let (lower_slope, _) = slope(&log_inf);

    let mut rng = bootstrap_rng(mc.base_seed);
    let mut counts = vec![0u32; paths];
    let mut up_reps = Vec::with_capacity(mc.resamples);
    let mut low_reps = Vec::with_capacity(mc.resamples);
    let mut sup_reps: Vec<Vec<f64>> = vec![Vec::with_capacity(mc.resamples); nt];
    for _ in 0..mc.resamples {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..paths {
            counts[rng.random_range(0..paths)] += 1;
        }
        let (s, i) = curves(&|k| counts[k] as f64, paths as f64);
        up_reps.push(slope(&s).0);
        low_reps.push(slope(&i).0);
        for (q, v) in s.into_iter().enumerate() {
            sup_reps[q].push(v);
        }
    }
    let (upper_ci, upper_se) = summarize(up_reps);
    let (lower_ci, lower_se) = summarize(low_reps);
    let log_sup_se = sup_reps.into_iter().map(|r| summarize(r).1).collect();

    Ok(LyapunovEstimate {
        p,
        times,
        log_sup,
        log_inf,
        log_sup_se,
        window,
        lower_slope,
        upper_slope,
        lower_se,
        upper_se,
        lower_ci,
        upper_ci,
        upper_intercept,
    })
}
