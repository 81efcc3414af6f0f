use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Log-log regression `log error = slope · log scale + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// 95% bootstrap interval for the slope.
    pub ci: (f64, f64),
    /// Bootstrap standard error of the slope.
    pub se: f64,
}

impl OrderFit {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci.1 - self.ci.0)
    }

    pub fn covers(&self, s: f64) -> bool {
        self.ci.0 <= s && s <= self.ci.1
    }
}

/// Ordinary least squares; `None` when the abscissae are all equal.
pub fn least_squares(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 1e-300 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

pub(crate) fn check_points(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", points.len())));
    }
    for &(s, e) in points {
        if !(s > 0.0 && s.is_finite()) || !(e > 0.0 && e.is_finite()) {
            return Err(Error::Fit(format!("point ({s}, {e}) is not positive")));
        }
    }
    let increasing = points.windows(2).all(|w| w[1].0 > w[0].0);
    let decreasing = points.windows(2).all(|w| w[1].0 < w[0].0);
    if !(increasing || decreasing) {
        return Err(Error::Fit("scales must be strictly monotone".into()));
    }
    Ok(())
}

/// Percentile of an already sorted sample (linear interpolation).
pub(crate) fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub(crate) fn mean_sd(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let m = v.iter().sum::<f64>() / k;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k - 1.0).max(1.0);
    (m, var.sqrt())
}

/// 95% percentile interval and standard deviation of bootstrap replicates.
pub(crate) fn summarize(mut reps: Vec<f64>) -> ((f64, f64), f64) {
    reps.retain(|v| v.is_finite());
    if reps.len() < 2 {
        return ((f64::NAN, f64::NAN), f64::NAN);
    }
    let (_, sd) = mean_sd(&reps);
    reps.sort_by(f64::total_cmp);
    ((percentile(&reps, 0.025), percentile(&reps, 0.975)), sd)
}

pub(crate) fn bootstrap_rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed ^ 0x5DEE_CE66_D1CE_B00C)
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<OrderFit> {
    fit_power_law_with(points, 1000, 0)
}

/// Least squares on `(log scale, log error)` with a bootstrap interval from
/// resampling the points.
pub fn fit_power_law_with(points: &[(f64, f64)], resamples: usize, seed: u64) -> Result<OrderFit> {
    check_points(points)?;
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept) = least_squares(&x, &y).ok_or_else(|| Error::Fit("degenerate scales".into()))?;
    let k = points.len();
    let mut rng = bootstrap_rng(seed);
    let mut reps = Vec::with_capacity(resamples);
    let (mut bx, mut by) = (vec![0.0; k], vec![0.0; k]);
    let mut attempts = 0;
    while reps.len() < resamples && attempts < 100 * resamples.max(1) {
        attempts += 1;
        for q in 0..k {
            let i = rng.random_range(0..k);
            bx[q] = x[i];
            by[q] = y[i];
        }
        if let Some((s, _)) = least_squares(&bx, &by) {
            reps.push(s);
        }
    }
    let (ci, se) = summarize(reps);
    Ok(OrderFit {
        points: points.to_vec(),
        slope,
        intercept,
        ci,
        se,
    })
}

/// Fit whose interval comes from externally computed slope replicates.
pub(crate) fn fit_with_replicates(points: &[(f64, f64)], reps: Vec<f64>) -> Result<OrderFit> {
    check_points(points)?;
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept) = least_squares(&x, &y).ok_or_else(|| Error::Fit("degenerate scales".into()))?;
    let (ci, se) = summarize(reps);
    Ok(OrderFit {
        points: points.to_vec(),
        slope,
        intercept,
        ci,
        se,
    })
}

/// Slope of `log y` on `log x`, `NaN` if any value is non-positive.
pub(crate) fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    if y.iter().any(|v| !(*v > 0.0)) {
        return f64::NAN;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    least_squares(&lx, &ly).map_or(f64::NAN, |p| p.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125].iter().map(|&h: &f64| (h, 3.0 * h.powf(0.37))).collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.slope - 0.37).abs() < 1e-10);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn constant_error_has_zero_slope() {
        let f = fit_power_law(&[(1.0, 2.0), (2.0, 2.0), (4.0, 2.0)]).unwrap();
        assert!(f.slope.abs() < 1e-12);
    }

    #[test]
    fn invalid_points() {
        assert!(matches!(fit_power_law(&[(1.0, 1.0), (2.0, 2.0)]), Err(Error::Fit(_))));
        assert!(matches!(fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]), Err(Error::Fit(_))));
        assert!(matches!(fit_power_law(&[(1.0, 1.0), (-2.0, 1.0), (3.0, 1.0)]), Err(Error::Fit(_))));
        assert!(matches!(fit_power_law(&[(1.0, 1.0), (3.0, 1.0), (2.0, 1.0)]), Err(Error::Fit(_))));
    }

    #[test]
    fn synthetic_coverage() {
        // oracle: regenerate noisy data with a known slope and count how often
        // the interval covers it
        let scales: Vec<f64> = (0..16).map(|k| 2f64.powf(-(k as f64) / 2.0)).collect();
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2024);
        let mut covered = 0;
        for rep in 0..100 {
            let pts: Vec<(f64, f64)> = scales
                .iter()
                .map(|&h| (h, (0.5 * h.ln() + noise.sample(&mut rng)).exp()))
                .collect();
            let f = fit_power_law_with(&pts, 1000, rep).unwrap();
            if f.covers(0.5) {
                covered += 1;
            }
        }
        assert!(covered >= 90, "covered {covered}/100");
    }

    #[test]
    fn deterministic_given_seed() {
        let pts = [(1.0, 1.1), (2.0, 1.9), (4.0, 4.3), (8.0, 7.7)];
        assert_eq!(fit_power_law(&pts).unwrap(), fit_power_law(&pts).unwrap());
    }
}
