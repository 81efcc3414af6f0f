//! Periodic heat kernel and the discrete Green functions of the θ-scheme.
//!
//! The exact kernel on the unit circle has the image representation
//! `G(t,x,y) = (4πt)^{-1/2} Σ_m exp(-(x-y-m)²/4t)` and the spectral one
//! `G(t,x,y) = Σ_m exp(-4π²m²t) e^{2πim(x-y)}`. The discrete kernels are
//!
//! ```text
//! G1(t,x,y) = Σ_l a_l^{[t/τ]}        e_l(κ_n x) ē_l(κ_n y)   (t ≥ 0)
//! G2(t,x,y) = Σ_l a_l^{[t/τ]} R1_l   e_l(κ_n x) ē_l(κ_n y)   (t ≥ 0)
//! ```
//!
//! The integrals over `y` of products of `G` with the cell-wise constant
//! functions `ē_l(κ_n y)` are exact: `∫ ē_m(y) e_l(κ_n y) dy = α_m 1{m ≡ l mod n}`
//! with `α_m = (e^{-2πim/n} - 1)/(-2πim/n)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::scheme::InitialCondition;
use crate::spectral::{amplification, Dft, GridSpec, SpectralData};

/// Truncation parameters for evaluating infinite kernel sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenEvalConfig {
    /// Absolute bound on the discarded tail of every truncated series.
    pub tol: f64,
    /// Below this time the image sum is used, above it the spectral sum.
    pub t_switch: f64,
    /// Cap on spectral terms.
    pub k_max: usize,
    /// Cap on image terms (heat kernel) or aliasing frequencies (integrals).
    pub m_max: usize,
}

impl Default for GreenEvalConfig {
    fn default() -> Self {
        Self {
            tol: 1e-15,
            t_switch: 1.0 / (4.0 * PI),
            k_max: 100_000,
            m_max: 50_000_000,
        }
    }
}

impl GreenEvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.t_switch > 0.0) || self.k_max < 1 || self.m_max < 1 {
            return Err(Error::InvalidParameter(format!("invalid Green evaluation config {self:?}")));
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")))
    }
}

/// Image-sum evaluation of the periodic heat kernel.
pub fn heat_green_image(t: f64, x: f64, y: f64, cfg: &GreenEvalConfig) -> Result<f64> {
    check_time(t)?;
    let d = (x - y).rem_euclid(1.0);
    let pref = 1.0 / (4.0 * PI * t).sqrt();
    let term = |m: f64| pref * (-(d - m) * (d - m) / (4.0 * t)).exp();
    // images at m = 0 and m = 1 are the nearest; walk outwards on both sides
    let mut sum = term(0.0) + term(1.0);
    for k in 1..=cfg.m_max {
        let left = term(-(k as f64));
        let right = term(1.0 + k as f64);
        sum += left + right;
        // both sides decay monotonically from here; the remaining tail is
        // dominated by a geometric series with ratio below the current one
        let ratio = (-(2.0 * k as f64 + 1.0) / (4.0 * t)).exp();
        if (left + right) / (1.0 - ratio).max(f64::MIN_POSITIVE) < cfg.tol {
            return Ok(sum);
        }
    }
    Err(Error::Precision(format!("image sum did not reach tol {} within {} terms", cfg.tol, cfg.m_max)))
}

/// Spectral evaluation `1 + 2 Σ_{m≥1} e^{-4π²m²t} cos(2πm(x-y))`.
pub fn heat_green_spectral(t: f64, x: f64, y: f64, cfg: &GreenEvalConfig) -> Result<f64> {
    check_time(t)?;
    let d = x - y;
    let w = 4.0 * PI * PI * t;
    let mut sum = 1.0;
    for m in 1..=cfg.k_max {
        let mf = m as f64;
        let decay = (-w * mf * mf).exp();
        sum += 2.0 * decay * (2.0 * PI * mf * d).cos();
        let next = (-w * (mf + 1.0) * (mf + 1.0)).exp();
        let ratio = (-w * (2.0 * mf + 3.0)).exp();
        if 2.0 * next / (1.0 - ratio) < cfg.tol {
            return Ok(sum);
        }
    }
    Err(Error::Precision(format!("spectral sum did not reach tol {} within {} terms", cfg.tol, cfg.k_max)))
}

/// Periodic heat kernel `G(t, x, y)`, switching representation at `t_switch`.
pub fn heat_green(t: f64, x: f64, y: f64, cfg: &GreenEvalConfig) -> Result<f64> {
    check_time(t)?;
    if t < cfg.t_switch {
        heat_green_image(t, x, y, cfg)
    } else {
        heat_green_spectral(t, x, y, cfg)
    }
}

/// Discrete Green functions of one grid with the spectral data cached.
#[derive(Debug, Clone)]
pub struct DiscreteGreen {
    grid: GridSpec,
    spectral: SpectralData,
    cos_table: Vec<f64>,
}

impl DiscreteGreen {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.n();
        Self {
            grid: *grid,
            spectral: amplification(grid),
            cos_table: (0..n).map(|r| (2.0 * PI * r as f64 / n as f64).cos()).collect(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    fn kernel(&self, steps: i64, cell_offset: usize, with_r1: bool) -> f64 {
        if steps < 0 {
            return 0.0;
        }
        let n = self.grid.n();
        let k = steps as i32;
        let mut acc = 0.0;
        for l in 0..n {
            let mut c = self.spectral.amp[l].powi(k);
            if with_r1 {
                c *= self.spectral.r1[l];
            }
            acc += c * self.cos_table[(l * cell_offset) % n];
        }
        acc
    }

    /// `G1` at grid time index `steps` between cells whose indices differ by
    /// `cell_offset` (mod n).
    pub fn g1_lag(&self, steps: i64, cell_offset: usize) -> f64 {
        self.kernel(steps, cell_offset % self.grid.n(), false)
    }

    pub fn g2_lag(&self, steps: i64, cell_offset: usize) -> f64 {
        self.kernel(steps, cell_offset % self.grid.n(), true)
    }

    fn offset(&self, x: f64, y: f64) -> usize {
        let n = self.grid.n();
        (self.grid.cell_index(x) + n - self.grid.cell_index(y)) % n
    }

    pub fn g1(&self, t: f64, x: f64, y: f64) -> f64 {
        self.kernel(self.grid.step_index(t), self.offset(x, y), false)
    }

    pub fn g2(&self, t: f64, x: f64, y: f64) -> f64 {
        self.kernel(self.grid.step_index(t), self.offset(x, y), true)
    }
}

pub fn discrete_green_g1(grid: &GridSpec, t: f64, x: f64, y: f64) -> f64 {
    DiscreteGreen::new(grid).g1(t, x, y)
}

pub fn discrete_green_g2(grid: &GridSpec, t: f64, x: f64, y: f64) -> f64 {
    DiscreteGreen::new(grid).g2(t, x, y)
}

/// `Re(α_m e^{2πimδ})` for `α_m = (e^{-2πim/n} - 1)/(-2πim/n)`.
fn alias_factor(m: i64, n: usize, delta: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let phi = 2.0 * PI * m as f64 / n as f64;
    let psi = 2.0 * PI * m as f64 * delta;
    let (sp, cp) = phi.sin_cos();
    let (ss, cs) = psi.sin_cos();
    (sp * cs - (cp - 1.0) * ss) / phi
}

/// Neumaier-compensated accumulator.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.c
    }
}

/// `∫_0^1 |G(t,x,y) - G2(t,x,y)|² dy` at one time `t > 0`, with the
/// `y`-integral evaluated exactly mode by mode and the aliasing sum
/// truncated at `|m| ≤ m_cut`.
pub fn green_l2_defect_at(grid: &GridSpec, x: f64, t: f64, m_cut: usize) -> Result<f64> {
    check_time(t)?;
    let n = grid.n();
    let s = amplification(grid);
    let k = grid.step_index(t) as i32;
    let delta = x - grid.cell_index(x) as f64 / n as f64;
    let c: Vec<f64> = (0..n).map(|l| s.amp[l].powi(k) * s.r1[l]).collect();
    let mut acc = Compensated::default();
    // constant modes cancel: 1 - 2·1 + 1
    for l in 1..n {
        acc.add(c[l] * c[l]);
    }
    for m in 1..=m_cut as i64 {
        let g = (-4.0 * PI * PI * (m * m) as f64 * t).exp();
        for mm in [m, -m] {
            let l = mm.rem_euclid(n as i64) as usize;
            acc.add(g * g - 2.0 * g * c[l] * alias_factor(mm, n, delta));
        }
    }
    Ok(acc.value())
}

/// `∫_0^∞ ∫_0^1 |G(t,x,y) - G2(t,x,y)|² dy dt`.
///
/// Both kernels are expanded in Fourier modes, so the `y`-integral is exact;
/// `G2` is constant on every time step, so the `t`-integral of each mode
/// product reduces to a geometric series that is summed in closed form. The
/// only truncation is the aliasing sum over frequencies `|m| ≤ M`, chosen from
/// an explicit tail bound.
pub fn green_l2_error(grid: &GridSpec, x: f64, cfg: &GreenEvalConfig) -> Result<f64> {
    cfg.validate()?;
    let n = grid.n();
    let tau = grid.tau();
    let s = amplification(grid);
    let a_max = s.max_nonconstant_amp();
    if a_max >= 1.0 {
        return Err(Error::Precision(format!(
            "non-constant mode with |a_l| = {a_max} does not decay; the time integral diverges"
        )));
    }
    let r1_max = s.r1.iter().cloned().fold(0.0, f64::max);

    // tail of the aliasing sum: |term| ≤ 2 R1 · n/(π|m|) · 1/(4π²m²) once
    // a_max·e^{-4π²m²τ} ≤ 1/2
    let mut m_cut = ((n as f64 * r1_max / (PI.powi(3) * cfg.tol)).sqrt()).ceil() as usize;
    while a_max * (-4.0 * PI * PI * (m_cut as f64).powi(2) * tau).exp() > 0.5 {
        m_cut *= 2;
    }
    if m_cut > cfg.m_max {
        return Err(Error::Precision(format!(
            "aliasing sum needs {m_cut} frequencies, above the cap {}",
            cfg.m_max
        )));
    }

    let delta = x - grid.cell_index(x) as f64 / n as f64;
    let mut cross = Compensated::default();
    for m in 1..=m_cut as i64 {
        let omega = 4.0 * PI * PI * (m * m) as f64;
        let decay = (-omega * tau).exp();
        let step_mass = -(-omega * tau).exp_m1() / omega;
        for mm in [m, -m] {
            let l = mm.rem_euclid(n as i64) as usize;
            let geometric = 1.0 / (1.0 - s.amp[l] * decay);
            cross.add(s.r1[l] * step_mass * geometric * alias_factor(mm, n, delta));
        }
    }
    let mut discrete = Compensated::default();
    for l in 1..n {
        discrete.add(s.r1[l] * s.r1[l] * tau / (1.0 - s.amp[l] * s.amp[l]));
    }
    // Σ_{m≠0} ∫ e^{-8π²m²t} dt = Σ_{m≠0} 1/(8π²m²) = 1/24
    let exact = 1.0 / 24.0;
    Ok(exact - 2.0 * cross.value() + discrete.value())
}

/// `|∫_0^1 (G - G1)(t,x,y) u0(κ_n y) dy|²` for `t ≥ τ`.
pub fn green_initial_error(
    grid: &GridSpec,
    u0: &InitialCondition,
    t: f64,
    x: f64,
    cfg: &GreenEvalConfig,
) -> Result<f64> {
    cfg.validate()?;
    if t < grid.tau() * (1.0 - 1e-12) {
        return Err(Error::Domain(format!("t = {t} is below tau = {}", grid.tau())));
    }
    let n = grid.n();
    let samples = u0.sample(n)?;
    // û_l = n^{-1} Σ_k u_k e^{-2πilk/n}
    let hat: Vec<Complex64> = Dft::new(n)
        .forward(&samples)
        .into_iter()
        .map(|c| c / (n as f64).sqrt())
        .collect();
    let s = amplification(grid);
    let k = grid.step_index(t) as i32;
    let j = grid.cell_index(x);
    let xk = j as f64 / n as f64;

    let mut discrete = Complex64::new(0.0, 0.0);
    for l in 0..n {
        discrete += s.amp[l].powi(k) * Complex64::from_polar(1.0, 2.0 * PI * l as f64 * xk) * hat[l];
    }

    let w = 4.0 * PI * PI * t;
    let m_cut = ((cfg.tol.recip().ln().max(1.0) / w).sqrt()).ceil() as usize + 1;
    if m_cut > cfg.m_max {
        return Err(Error::Precision(format!("need {m_cut} frequencies, cap is {}", cfg.m_max)));
    }
    let mut exact = hat[0];
    for m in 1..=m_cut as i64 {
        let g = (-w * (m * m) as f64).exp();
        for mm in [m, -m] {
            let l = mm.rem_euclid(n as i64) as usize;
            let phi = 2.0 * PI * mm as f64 / n as f64;
            let alpha = (Complex64::from_polar(1.0, -phi) - 1.0) / Complex64::new(0.0, -phi);
            exact += g * Complex64::from_polar(1.0, 2.0 * PI * mm as f64 * x) * alpha * hat[l];
        }
    }
    Ok((exact - discrete).norm_sqr())
}

/// `∫_0^∞ ∫_0^1 |G2(s,0,y)|^p e^{-βps} dy ds`.
///
/// `G2(s, 0, ·)` is constant on every space-time cell, so the integral is the
/// series `Σ_k w_k · n^{-1} Σ_j |G2(kτ, 0, x_j)|^p` with exact time weights
/// `w_k = ∫_{kτ}^{(k+1)τ} e^{-βps} ds`. Once the non-constant modes have
/// decayed below rounding the remainder is summed in closed form.
pub fn green_p_integral(grid: &GridSpec, p: f64, beta: f64) -> Result<f64> {
    if !(1.0..3.0).contains(&p) {
        return Err(Error::Domain(format!("p = {p} must lie in [1, 3)")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("beta = {beta} must be positive")));
    }
    let n = grid.n();
    let tau = grid.tau();
    let s = amplification(grid);
    let rate = beta * p;
    let dft = Dft::new(n);
    let root_n = (n as f64).sqrt();
    let step_weight = -(-rate * tau).exp_m1() / rate;

    let mut total = Compensated::default();
    let mut coeffs: Vec<f64> = s.r1.clone();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for k in 0usize.. {
        let decay = (-rate * tau * k as f64).exp();
        let spread: f64 = coeffs[1..].iter().map(|c| c.abs()).sum();
        if spread < 1e-17 {
            // G2 ≡ 1 from here on
            total.add(decay / rate);
            break;
        }
        let tail_bound = (1.0 + spread).powf(p) * decay / rate;
        if tail_bound < 1e-15 * total.value().max(1e-300) {
            break;
        }
        for (b, &c) in buf.iter_mut().zip(&coeffs) {
            *b = Complex64::new(c, 0.0);
        }
        dft.forward_in_place(&mut buf);
        let mean_p: f64 = buf.iter().map(|z| (z.re * root_n).abs().powf(p)).sum::<f64>() / n as f64;
        total.add(decay * step_weight * mean_p);
        for (c, a) in coeffs.iter_mut().zip(&s.amp) {
            *c *= a;
        }
        if k > 100_000_000 {
            return Err(Error::Precision("p-integral series did not converge".into()));
        }
    }
    Ok(total.value())
}

/// Exponent `p̃` in the integrability bound: `(3-p)/2` on `[2,3)`, `(2-p)/2` on `[1,2)`.
pub fn p_tilde(p: f64) -> f64 {
    if p >= 2.0 {
        (3.0 - p) / 2.0
    } else {
        (2.0 - p) / 2.0
    }
}

/// `C/(βp) + C Γ(p̃)(βp)^{-p̃}`.
pub fn green_p_bound(p: f64, beta: f64, c: f64) -> f64 {
    let bp = beta * p;
    let pt = p_tilde(p);
    let gamma_term = if pt > 0.0 { gamma(pt) * bp.powf(-pt) } else { 0.0 };
    c / bp + c * gamma_term
}

/// One level of a Green-error sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenErrorPoint {
    pub n: usize,
    pub tau: f64,
    pub error: f64,
}

/// `green_l2_error` over grids `(n, τ)` with scheme parameter `theta`.
pub fn green_l2_sweep(
    levels: &[(usize, f64)],
    theta: f64,
    x: f64,
    cfg: &GreenEvalConfig,
) -> Result<Vec<GreenErrorPoint>> {
    levels
        .iter()
        .map(|&(n, tau)| {
            let grid = GridSpec::new(n, tau, theta, tau)?;
            Ok(GreenErrorPoint {
                n,
                tau,
                error: green_l2_error(&grid, x, cfg)?,
            })
        })
        .collect()
}
