//! Grid bookkeeping and the eigenstructure of the periodic discrete Laplacian.
//!
//! On the grid `x_j = j/n` the periodic second difference
//! `Δ_n v_j = n²(v_{j+1} - 2v_j + v_{j-1})` is diagonalised by the Fourier
//! vectors `[f_l]_k = n^{-1/2} e^{2πi lk/n}` with eigenvalues
//! `λ_l = -4n² sin²(lπ/n)`. One θ-step multiplies mode `l` by
//! `a_l = R1_l · R2_l` where `R1_l = (1 - θτλ_l)^{-1}` and
//! `R2_l = 1 + (1-θ)τλ_l`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when snapping times and positions onto the grid.
pub(crate) const SNAP_TOL: f64 = 1e-9;

/// Free constants of the conditional stability regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityConstants {
    /// Bound `r` on `n²τ` for `θ < 1/2`. `None` selects `0.9 / (2 - 4θ)`.
    #[serde(default)]
    pub r_bound: Option<f64>,
    /// `ε` of the Crank–Nicolson regime, `n²τ ≤ 1/ε - 1/2`.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.1
}

impl Default for StabilityConstants {
    fn default() -> Self {
        Self {
            r_bound: None,
            epsilon: default_epsilon(),
        }
    }
}

impl StabilityConstants {
    pub fn r_bound_for(&self, theta: f64) -> f64 {
        self.r_bound
            .unwrap_or_else(|| default_r_bound(theta))
    }
}

/// Default admissible `r` for the explicit-leaning regime.
pub fn default_r_bound(theta: f64) -> f64 {
    if theta < 0.5 {
        0.9 / (2.0 - 4.0 * theta)
    } else {
        f64::INFINITY
    }
}

/// Outcome of [`stability_check`].
#[derive(Debug, Clone, PartialEq)]
pub enum Stability {
    Pass,
    Violation { condition: &'static str, detail: String },
}

impl Stability {
    pub fn is_pass(&self) -> bool {
        matches!(self, Stability::Pass)
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stability::Pass => write!(f, "pass"),
            Stability::Violation { condition, detail } => write!(f, "{condition}: {detail}"),
        }
    }
}

/// Checks the step-size coupling required for the θ-scheme to be well posed.
///
/// * `0 ≤ θ < 1/2`: `n²τ ≤ r < 1/(2 - 4θ)` (condition (i))
/// * `θ = 1/2`: `n²τ ≤ 1/ε - 1/2` with `ε ∈ (0, 1/2)` (condition (ii))
/// * `1/2 < θ ≤ 1`: unconditional (condition (iii))
pub fn stability_check(n: usize, tau: f64, theta: f64, r_bound: f64, epsilon: f64) -> Result<Stability> {
    if !(0.0..=1.0).contains(&theta) || !theta.is_finite() {
        return Err(Error::InvalidParameter(format!("theta = {theta} is outside [0, 1]")));
    }
    let n2tau = (n as f64).powi(2) * tau;
    if theta < 0.5 {
        let ceiling = 1.0 / (2.0 - 4.0 * theta);
        if !(r_bound < ceiling) {
            return Ok(Stability::Violation {
                condition: "condition (i): r < 1/(2-4θ)",
                detail: format!("r = {r_bound} is not below 1/(2-4θ) = {ceiling}"),
            });
        }
        if n2tau > r_bound {
            return Ok(Stability::Violation {
                condition: "condition (i): n²τ ≤ r",
                detail: format!("n²τ = {n2tau} exceeds r = {r_bound} (θ = {theta})"),
            });
        }
        Ok(Stability::Pass)
    } else if theta == 0.5 {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Ok(Stability::Violation {
                condition: "condition (ii): ε ∈ (0, 1/2)",
                detail: format!("ε = {epsilon}"),
            });
        }
        let ceiling = 1.0 / epsilon - 0.5;
        if n2tau > ceiling {
            return Ok(Stability::Violation {
                condition: "condition (ii): n²τ ≤ 1/ε - 1/2",
                detail: format!("n²τ = {n2tau} exceeds {ceiling}"),
            });
        }
        Ok(Stability::Pass)
    } else {
        Ok(Stability::Pass)
    }
}

/// Space-time discretisation: `n` cells of width `1/n`, time step `τ`,
/// scheme parameter `θ` and horizon `T = mτ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecRepr", into = "GridSpecRepr")]
pub struct GridSpec {
    n: usize,
    tau: f64,
    theta: f64,
    horizon: f64,
    constants: StabilityConstants,
}

#[derive(Serialize, Deserialize)]
struct GridSpecRepr {
    n: usize,
    tau: f64,
    theta: f64,
    horizon: f64,
    #[serde(default)]
    constants: StabilityConstants,
}

impl TryFrom<GridSpecRepr> for GridSpec {
    type Error = Error;

    fn try_from(r: GridSpecRepr) -> Result<Self> {
        GridSpec::with_constants(r.n, r.tau, r.theta, r.horizon, r.constants)
    }
}

impl From<GridSpec> for GridSpecRepr {
    fn from(g: GridSpec) -> Self {
        GridSpecRepr {
            n: g.n,
            tau: g.tau,
            theta: g.theta,
            horizon: g.horizon,
            constants: g.constants,
        }
    }
}

impl GridSpec {
    pub fn new(n: usize, tau: f64, theta: f64, horizon: f64) -> Result<Self> {
        Self::with_constants(n, tau, theta, horizon, StabilityConstants::default())
    }

    pub fn with_constants(
        n: usize,
        tau: f64,
        theta: f64,
        horizon: f64,
        constants: StabilityConstants,
    ) -> Result<Self> {
        let grid = Self::unchecked(n, tau, theta, horizon, constants)?;
        match grid.stability()? {
            Stability::Pass => Ok(grid),
            v => Err(Error::Stability(v.to_string())),
        }
    }

    /// Validates everything except the stability coupling.
    pub fn unchecked(
        n: usize,
        tau: f64,
        theta: f64,
        horizon: f64,
        constants: StabilityConstants,
    ) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(format!("n = {n} must be at least 3")));
        }
        if !(tau > 0.0 && tau < 0.5) {
            return Err(Error::InvalidGrid(format!("tau = {tau} must lie in (0, 1/2)")));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta = {theta} is outside [0, 1]")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!("horizon = {horizon} must be positive")));
        }
        let ratio = horizon / tau;
        if (ratio - ratio.round()).abs() * tau > SNAP_TOL * tau || ratio.round() < 1.0 {
            return Err(Error::InvalidGrid(format!(
                "horizon {horizon} is not an integer multiple of tau {tau}"
            )));
        }
        Ok(Self {
            n,
            tau,
            theta,
            horizon,
            constants,
        })
    }

    pub fn stability(&self) -> Result<Stability> {
        stability_check(
            self.n,
            self.tau,
            self.theta,
            self.constants.r_bound_for(self.theta),
            self.constants.epsilon,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn constants(&self) -> StabilityConstants {
        self.constants
    }

    /// Number of time steps `m = T/τ`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.tau).round() as usize
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.tau
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }

    /// `[t/τ]`, with `t` within rounding of a grid time snapped onto it.
    /// Negative times map to negative indices.
    pub fn step_index(&self, t: f64) -> i64 {
        floor_snapped(t / self.tau)
    }

    /// Index of the cell containing `x` (periodic), i.e. `n κ_n(x) mod n`.
    pub fn cell_index(&self, x: f64) -> usize {
        let k = floor_snapped(x * self.n as f64);
        k.rem_euclid(self.n as i64) as usize
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::with_constants(self.n, self.tau, self.theta, horizon, self.constants)
    }

    pub fn n2tau(&self) -> f64 {
        (self.n as f64).powi(2) * self.tau
    }
}

pub(crate) fn floor_snapped(v: f64) -> i64 {
    let r = v.round();
    if (v - r).abs() <= SNAP_TOL * v.abs().max(1.0) {
        r as i64
    } else {
        v.floor() as i64
    }
}

/// Eigenvalues `λ_l = -4n² sin²(lπ/n)` of the periodic second difference.
pub fn eigenvalues(n: usize) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::InvalidGrid(format!("n = {n} must be at least 3")));
    }
    let nf = n as f64;
    Ok((0..n)
        .map(|l| {
            // fold onto 0..=n/2 so that λ_{n-l} = λ_l holds bit for bit
            let k = l.min(n - l);
            if k == 0 {
                0.0
            } else {
                let s = (k as f64 * PI / nf).sin();
                -4.0 * nf * nf * s * s
            }
        })
        .collect())
}

/// Eigenvalues and amplification coefficients of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub lambda: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    /// Per-step amplification `a_l = R1_l R2_l`.
    pub amp: Vec<f64>,
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// `R3_l = (R1_l R2_l)^{-1} - 1`.
    pub fn r3(&self, l: usize) -> f64 {
        1.0 / self.amp[l] - 1.0
    }

    /// Largest `|a_l|` over the non-constant modes.
    pub fn max_nonconstant_amp(&self) -> f64 {
        self.amp[1..].iter().fold(0.0_f64, |m, a| m.max(a.abs()))
    }
}

pub fn amplification(grid: &GridSpec) -> SpectralData {
    let lambda = eigenvalues(grid.n()).expect("grid guarantees n >= 3");
    let (tau, theta) = (grid.tau(), grid.theta());
    let r1: Vec<f64> = lambda.iter().map(|&l| 1.0 / (1.0 - theta * tau * l)).collect();
    let r2: Vec<f64> = lambda.iter().map(|&l| 1.0 + (1.0 - theta) * tau * l).collect();
    let amp = r1.iter().zip(&r2).map(|(a, b)| a * b).collect();
    SpectralData { lambda, r1, r2, amp }
}

/// Periodic second difference `Δ_n v` with spacing `1/n`.
pub fn periodic_laplacian(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    periodic_laplacian_into(v, &mut out);
    out
}

pub(crate) fn periodic_laplacian_into(v: &[f64], out: &mut [f64]) {
    let n = v.len();
    let n2 = (n * n) as f64;
    for j in 0..n {
        let left = v[(j + n - 1) % n];
        let right = v[(j + 1) % n];
        out[j] = n2 * (right - 2.0 * v[j] + left);
    }
}

/// Unitary discrete Fourier transform of a fixed length, backed by cached
/// FFT plans.
#[derive(Clone)]
pub struct Dft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl fmt::Debug for Dft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dft").field("n", &self.n).finish()
    }
}

impl Dft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In place `ṽ_j = n^{-1/2} Σ_r v_r e^{-2πi jr/n}`.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
        buf.iter_mut().for_each(|c| *c *= self.scale);
    }

    /// In place inverse of [`Dft::forward_in_place`].
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        buf.iter_mut().for_each(|c| *c *= self.scale);
    }

    pub fn forward(&self, v: &[f64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n, "length mismatch");
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn inverse(&self, c: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(c.len(), self.n, "length mismatch");
        let mut buf = c.to_vec();
        self.inverse_in_place(&mut buf);
        buf
    }
}

/// Unitary DFT `ṽ_j = n^{-1/2} Σ_r v(x_r) e^{-2πi j x_r}`.
pub fn dft_forward(v: &[f64]) -> Vec<Complex64> {
    Dft::new(v.len()).forward(v)
}

/// Inverse of [`dft_forward`].
pub fn dft_inverse(c: &[Complex64]) -> Vec<Complex64> {
    Dft::new(c.len()).inverse(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_dft(v: &[f64]) -> Vec<Complex64> {
        let n = v.len();
        (0..n)
            .map(|j| {
                v.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (r, &x)| {
                    let phase = -2.0 * PI * (j * r) as f64 / n as f64;
                    acc + x * Complex64::from_polar(1.0, phase)
                }) / (n as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn eigenvalue_examples() {
        let l4 = eigenvalues(4).unwrap();
        assert_eq!(l4[0], 0.0);
        assert!((l4[2] + 64.0).abs() < 1e-12);
        let l3 = eigenvalues(3).unwrap();
        assert!((l3[1] + 27.0).abs() < 1e-12);
        assert!(matches!(eigenvalues(2), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn eigenvalue_symmetry_is_exact() {
        for n in 3..70 {
            let l = eigenvalues(n).unwrap();
            for k in 1..=n / 2 {
                assert_eq!(l[k], l[n - k]);
            }
        }
    }

    #[test]
    fn amplification_examples() {
        let g = GridSpec::new(4, 0.01, 0.5, 1.0).unwrap();
        let s = amplification(&g);
        let expected = (1.0 - 0.32) / (1.0 + 0.32);
        assert!((s.amp[2] - expected).abs() < 1e-14);
        assert_eq!(s.amp[0], 1.0);
        assert_eq!(s.r1[0], 1.0);
        assert_eq!(s.r2[0], 1.0);

        let explicit = amplification(&GridSpec::new(8, 0.005, 0.0, 1.0).unwrap());
        assert!(explicit.r1.iter().all(|&r| r == 1.0));
        let implicit = amplification(&GridSpec::new(8, 0.3, 1.0, 0.6).unwrap());
        assert!(implicit.r2.iter().all(|&r| r == 1.0));
        assert!((implicit.r3(1) - (1.0 / implicit.amp[1] - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn stability_examples() {
        assert!(stability_check(1000, 0.4, 1.0, f64::INFINITY, 0.1).unwrap().is_pass());
        let v = stability_check(10, 0.006, 0.0, 0.49, 0.1).unwrap();
        match v {
            Stability::Violation { condition, .. } => assert!(condition.contains("(i)")),
            Stability::Pass => panic!("expected violation"),
        }
        assert!(stability_check(10, 0.004, 0.0, 0.45, 0.1).unwrap().is_pass());
        assert!(stability_check(10, 0.004, 0.0, 0.5, 0.1).unwrap() != Stability::Pass);
        assert!(stability_check(100, 0.0009, 0.5, f64::INFINITY, 0.1).unwrap().is_pass());
        assert!(!stability_check(100, 0.001, 0.5, f64::INFINITY, 0.1).unwrap().is_pass());
        assert!(!stability_check(100, 0.0009, 0.5, f64::INFINITY, 0.2).unwrap().is_pass());
        assert!(matches!(
            stability_check(10, 0.001, 1.5, 0.4, 0.1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(GridSpec::new(2, 0.1, 1.0, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(GridSpec::new(8, 0.5, 1.0, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(GridSpec::new(8, 0.1, 1.0, 0.25), Err(Error::InvalidGrid(_))));
        assert!(matches!(GridSpec::new(10, 0.006, 0.0, 0.6), Err(Error::Stability(_))));
        let g = GridSpec::new(8, 0.1, 1.0, 0.3).unwrap();
        assert_eq!(g.steps(), 3);
        assert_eq!(g.step_index(g.time(3)), 3);
        assert_eq!(g.step_index(0.29999999999), 3);
        assert_eq!(g.step_index(0.25), 2);
        assert_eq!(g.step_index(-0.05), -1);
        assert_eq!(g.cell_index(3.0 / 8.0), 3);
        assert_eq!(g.cell_index(1.0), 0);
        assert_eq!(g.cell_index(0.999), 7);
    }

    #[test]
    fn grid_serde_round_trip_validates() {
        let g = GridSpec::new(16, 0.01, 1.0, 1.0).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: GridSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
        let bad = s.replace("\"n\":16", "\"n\":2");
        assert!(serde_json::from_str::<GridSpec>(&bad).is_err());
    }

    #[test]
    fn laplacian_diagonalised_by_fourier_vectors() {
        for n in 3..=64 {
            let lam = eigenvalues(n).unwrap();
            for l in 0..n {
                let re: Vec<f64> = (0..n)
                    .map(|k| (2.0 * PI * (l * k) as f64 / n as f64).cos())
                    .collect();
                let im: Vec<f64> = (0..n)
                    .map(|k| (2.0 * PI * (l * k) as f64 / n as f64).sin())
                    .collect();
                let scale = lam[l].abs().max(1.0);
                for (v, d) in [(&re, periodic_laplacian(&re)), (&im, periodic_laplacian(&im))] {
                    for k in 0..n {
                        assert!((d[k] - lam[l] * v[k]).abs() <= 1e-10 * scale, "n={n} l={l}");
                    }
                }
            }
        }
    }

    #[test]
    fn dft_examples() {
        let c = dft_forward(&[2.5; 6]);
        assert!((c[0].re - 6f64.sqrt() * 2.5).abs() < 1e-12);
        assert!(c[1..].iter().all(|z| z.norm() < 1e-12));

        // e_1 sampled on the grid has unitary coefficient √n at index 1
        let n = 4;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
            .collect();
        Dft::new(n).forward_in_place(&mut buf);
        assert!((buf[1] - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        for j in [0, 2, 3] {
            assert!(buf[j].norm() < 1e-12);
        }
    }

    #[test]
    fn fft_matches_direct_transform() {
        for n in [3, 5, 8, 12, 17, 64] {
            let v: Vec<f64> = (0..n).map(|k| ((k * 7 + 3) % 11) as f64 - 4.5).collect();
            let fast = dft_forward(&v);
            let slow = direct_dft(&v);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn stable_grids_contract_nonconstant_modes() {
        for &(n, tau, theta) in &[
            (10, 0.004, 0.0),
            (16, 0.001, 0.25),
            (32, 0.009, 0.5),
            (64, 0.2, 1.0),
            (9, 0.3, 0.75),
        ] {
            let s = amplification(&GridSpec::new(n, tau, theta, 10.0 * tau).unwrap());
            assert!(s.max_nonconstant_amp() < 1.0, "n={n} tau={tau} theta={theta}");
        }
    }
}
