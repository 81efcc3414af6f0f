//! Lévy space-time white noise on the grid cells.
//!
//! The noise is `Λ(dt,dx) = b dt dx + ∫_{|z|≤1} z μ̃(dt,dx,dz) + ∫_{|z|>1} z μ(dt,dx,dz)`
//! with `μ` a Poisson random measure of intensity `dt dx λ(dz)`. Only
//! finite-activity measures are sampled exactly; the compensator of the small
//! jumps is applied per cell as a deterministic drift.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp, Poisson};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};
use crate::spectral::GridSpec;

/// A point mass of the Lévy measure: jumps of `size` arrive at `rate` per unit
/// space-time area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub size: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureKind {
    Atomic { atoms: Vec<Atom> },
    /// Density `rate/(2 scale) · exp(-|z|/scale)`.
    TwoSidedExponential { rate: f64, scale: f64 },
    /// No jumps at all. Only usable in deterministic mode.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyMeasureSpec {
    #[serde(flatten)]
    pub kind: MeasureKind,
    /// Jumps with `|z|` below this are not sampled; their (zero-mean
    /// compensated) contribution is dropped.
    #[serde(default)]
    pub small_jump_cutoff: f64,
}

impl LevyMeasureSpec {
    pub fn atomic(atoms: Vec<Atom>) -> Result<Self> {
        let m = Self {
            kind: MeasureKind::Atomic { atoms },
            small_jump_cutoff: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn two_sided_exponential(rate: f64, scale: f64) -> Result<Self> {
        let m = Self {
            kind: MeasureKind::TwoSidedExponential { rate, scale },
            small_jump_cutoff: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn zero() -> Self {
        Self {
            kind: MeasureKind::Zero,
            small_jump_cutoff: 0.0,
        }
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Result<Self> {
        self.small_jump_cutoff = cutoff;
        self.validate()?;
        Ok(self)
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            MeasureKind::Zero => true,
            MeasureKind::Atomic { atoms } => atoms.is_empty(),
            MeasureKind::TwoSidedExponential { .. } => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.small_jump_cutoff;
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::InvalidParameter(format!(
                "small-jump cutoff {eps} must lie in [0, 1)"
            )));
        }
        match &self.kind {
            MeasureKind::Atomic { atoms } => {
                for a in atoms {
                    if a.size == 0.0 || !a.size.is_finite() {
                        return Err(Error::InvalidParameter(format!(
                            "atom size {} must be finite and nonzero",
                            a.size
                        )));
                    }
                    if !(a.rate > 0.0 && a.rate.is_finite()) {
                        return Err(Error::InvalidParameter(format!(
                            "atom rate {} must be finite and positive",
                            a.rate
                        )));
                    }
                }
            }
            MeasureKind::TwoSidedExponential { rate, scale } => {
                if !(*rate > 0.0 && rate.is_finite() && *scale > 0.0 && scale.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "two-sided exponential needs positive finite rate and scale, got ({rate}, {scale})"
                    )));
                }
            }
            MeasureKind::Zero => {}
        }
        Ok(())
    }

    /// `∫_{lo ≤ |z| ≤ hi} |z|^p λ(dz)` over the full (uncut) measure.
    pub fn abs_moment_between(&self, p: f64, lo: f64, hi: f64) -> f64 {
        match &self.kind {
            MeasureKind::Zero => 0.0,
            MeasureKind::Atomic { atoms } => atoms
                .iter()
                .filter(|a| a.size.abs() >= lo && a.size.abs() <= hi)
                .map(|a| a.rate * a.size.abs().powf(p))
                .sum(),
            MeasureKind::TwoSidedExponential { rate, scale } => {
                let upper = |x: f64| {
                    if x <= 0.0 {
                        1.0
                    } else if x.is_infinite() {
                        0.0
                    } else {
                        gamma_ur(p + 1.0, x)
                    }
                };
                rate * scale.powf(p) * gamma(p + 1.0) * (upper(lo / scale) - upper(hi / scale))
            }
        }
    }

    /// Signed first moment `∫_{lo < |z| ≤ hi} z λ(dz)` of the full measure.
    pub fn signed_mean_between(&self, lo: f64, hi: f64) -> f64 {
        match &self.kind {
            MeasureKind::Atomic { atoms } => atoms
                .iter()
                .filter(|a| a.size.abs() > lo && a.size.abs() <= hi)
                .map(|a| a.rate * a.size)
                .sum(),
            // symmetric measures integrate odd functions to zero
            MeasureKind::TwoSidedExponential { .. } | MeasureKind::Zero => 0.0,
        }
    }

    /// Total rate of sampled jumps (those with `|z| ≥ cutoff`).
    pub fn activity(&self) -> f64 {
        let eps = self.small_jump_cutoff;
        match &self.kind {
            MeasureKind::Zero => 0.0,
            MeasureKind::Atomic { atoms } => atoms
                .iter()
                .filter(|a| a.size.abs() >= eps)
                .map(|a| a.rate)
                .sum(),
            MeasureKind::TwoSidedExponential { rate, scale } => rate * (-eps / scale).exp(),
        }
    }

    /// Mean of the sampled small jumps, `∫_{cutoff ≤ |z| ≤ 1} z λ(dz)`.
    pub fn small_jump_compensator(&self) -> f64 {
        let eps = self.small_jump_cutoff;
        match &self.kind {
            MeasureKind::Atomic { atoms } => atoms
                .iter()
                .filter(|a| a.size.abs() >= eps && a.size.abs() <= 1.0)
                .map(|a| a.rate * a.size)
                .sum(),
            MeasureKind::TwoSidedExponential { .. } | MeasureKind::Zero => 0.0,
        }
    }

    fn sampler(&self) -> JumpSampler {
        let eps = self.small_jump_cutoff;
        match &self.kind {
            MeasureKind::Zero => JumpSampler::None,
            MeasureKind::Atomic { atoms } => {
                let kept: Vec<Atom> = atoms.iter().copied().filter(|a| a.size.abs() >= eps).collect();
                if kept.is_empty() {
                    return JumpSampler::None;
                }
                let total: f64 = kept.iter().map(|a| a.rate).sum();
                let mut acc = 0.0;
                let cumulative = kept
                    .iter()
                    .map(|a| {
                        acc += a.rate / total;
                        acc
                    })
                    .collect();
                JumpSampler::Atomic {
                    sizes: kept.iter().map(|a| a.size).collect(),
                    cumulative,
                }
            }
            MeasureKind::TwoSidedExponential { scale, .. } => JumpSampler::Exponential {
                offset: eps,
                magnitude: Exp::new(1.0 / scale).expect("validated scale"),
            },
        }
    }
}

/// `m_λ(p) = ∫ |z|^p λ(dz)` for `p ∈ [1, 3)`.
pub fn moment_m_lambda(measure: &LevyMeasureSpec, p: f64) -> Result<f64> {
    if !(1.0..3.0).contains(&p) {
        return Err(Error::Domain(format!("moment order p = {p} must lie in [1, 3)")));
    }
    measure.validate()?;
    let m = measure.abs_moment_between(p, 0.0, f64::INFINITY);
    if m.is_finite() {
        Ok(m)
    } else {
        Err(Error::InfiniteMoment(format!("m_lambda({p}) is not finite")))
    }
}

/// Drift `b = -∫_{|z|>1} z λ(dz)` that makes the increments mean zero.
pub fn center_drift(measure: &LevyMeasureSpec) -> Result<f64> {
    measure.validate()?;
    let tail = measure.abs_moment_between(1.0, 1.0 + f64::EPSILON, f64::INFINITY);
    if !tail.is_finite() {
        return Err(Error::InfiniteMoment("tail mean ∫_{|z|>1} |z| λ(dz) is infinite".into()));
    }
    Ok(-measure.signed_mean_between(1.0, f64::INFINITY))
}

enum JumpSampler {
    None,
    Atomic { sizes: Vec<f64>, cumulative: Vec<f64> },
    Exponential { offset: f64, magnitude: Exp<f64> },
}

impl JumpSampler {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            JumpSampler::None => 0.0,
            JumpSampler::Atomic { sizes, cumulative } => {
                if sizes.len() == 1 {
                    return sizes[0];
                }
                let u: f64 = rng.random();
                let idx = cumulative.partition_point(|&c| c <= u).min(sizes.len() - 1);
                sizes[idx]
            }
            JumpSampler::Exponential { offset, magnitude } => {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * (offset + magnitude.sample(rng))
            }
        }
    }
}

/// Drift, Lévy measure and optional big-jump cap of the driving noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyNoiseSpec {
    pub drift: f64,
    pub measure: LevyMeasureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    /// Must be set to sample with the zero measure.
    #[serde(default)]
    pub deterministic: bool,
}

impl LevyNoiseSpec {
    pub fn new(drift: f64, measure: LevyMeasureSpec) -> Result<Self> {
        measure.validate()?;
        if !drift.is_finite() {
            return Err(Error::InvalidParameter(format!("drift {drift} is not finite")));
        }
        Ok(Self {
            drift,
            measure,
            truncation: None,
            deterministic: false,
        })
    }

    /// Noise with the centering drift `b = -∫_{|z|>1} z λ(dz)`.
    pub fn centered(measure: LevyMeasureSpec) -> Result<Self> {
        let b = center_drift(&measure)?;
        Self::new(b, measure)
    }

    /// Pure drift, no jumps.
    pub fn deterministic(drift: f64) -> Self {
        Self {
            drift,
            measure: LevyMeasureSpec::zero(),
            truncation: None,
            deterministic: true,
        }
    }

    pub fn is_centered(&self) -> bool {
        match center_drift(&self.measure) {
            Ok(b) => (self.drift - b).abs() <= 1e-12 * b.abs().max(1.0),
            Err(_) => false,
        }
    }

    /// Drops jumps with `|z| > cap` from the noise.
    pub fn truncate(&self, cap: f64) -> Result<Self> {
        if !(cap > 1.0) {
            return Err(Error::InvalidParameter(format!("truncation level {cap} must exceed 1")));
        }
        let mut out = self.clone();
        out.truncation = Some(cap);
        Ok(out)
    }

    fn cap(&self) -> f64 {
        self.truncation.unwrap_or(f64::INFINITY)
    }

    /// `b̃ = b + ∫_{1<|z|≤N} z λ(dz)`: the drift in the fully compensated
    /// representation, i.e. the mean of the noise per unit space-time area.
    pub fn effective_drift(&self) -> f64 {
        self.drift + self.measure.signed_mean_between(1.0, self.cap())
    }

    /// Variance of the noise per unit area, `∫_{cutoff ≤ |z| ≤ N} z² λ(dz)`.
    pub fn variance_rate(&self) -> f64 {
        self.measure
            .abs_moment_between(2.0, self.measure.small_jump_cutoff, self.cap())
    }

    /// Deterministic part of each cell's increment per unit area.
    pub fn cell_drift_rate(&self) -> f64 {
        self.drift - self.measure.small_jump_compensator()
    }

    pub fn validate(&self) -> Result<()> {
        self.measure.validate()?;
        if let Some(cap) = self.truncation {
            if !(cap > 1.0) {
                return Err(Error::InvalidParameter(format!("truncation level {cap} must exceed 1")));
            }
        }
        if self.measure.is_zero() && !self.deterministic {
            return Err(Error::Configuration(
                "the zero Lévy measure requires the deterministic opt-in".into(),
            ));
        }
        Ok(())
    }
}

/// One sampled jump, located inside cell `(step, cell)` at fractional offsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub step: usize,
    pub cell: usize,
    pub time_frac: f64,
    pub space_frac: f64,
    pub size: f64,
}

/// Per-cell increments `□Λ(t_i, x_j) = Λ([t_i, t_{i+1}) × [x_j, x_{j+1}))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseField {
    grid: GridSpec,
    spec: LevyNoiseSpec,
    seed: u64,
    increments: Vec<f64>,
    jump_log: Option<Vec<Jump>>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream key of cell `(i, j)`: sampling is independent of visiting order.
pub(crate) fn cell_key(seed: u64, i: usize, j: usize) -> u64 {
    let a = splitmix64(seed);
    let b = splitmix64(a ^ i as u64);
    splitmix64(b ^ (j as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Samples the noise on every cell of `grid`.
///
/// Each cell draws a Poisson number of jumps with mean `activity·τ/n`, then
/// for every jump a time offset, a space offset and a size, in that order.
/// Jumps above the truncation level are drawn and then discarded, so fields
/// sampled with the same seed at different truncation levels share one jump
/// stream.
pub fn sample(grid: &GridSpec, spec: &LevyNoiseSpec, seed: u64, keep_jump_log: bool) -> Result<NoiseField> {
    spec.validate()?;
    let n = grid.n();
    let m = grid.steps();
    let area = grid.tau() / n as f64;
    let base = spec.cell_drift_rate() * area;
    let mean_jumps = spec.measure.activity() * area;
    let cap = spec.cap();
    let sampler = spec.measure.sampler();
    let poisson = if mean_jumps > 0.0 {
        Some(Poisson::new(mean_jumps).map_err(|e| Error::InvalidParameter(e.to_string()))?)
    } else {
        None
    };

    let mut increments = vec![base; m * n];
    let mut log = keep_jump_log.then(Vec::new);
    if let Some(poisson) = poisson {
        for i in 0..m {
            for j in 0..n {
                let mut rng = Xoshiro256PlusPlus::seed_from_u64(cell_key(seed, i, j));
                let count = poisson.sample(&mut rng) as usize;
                let cell = &mut increments[i * n + j];
                for _ in 0..count {
                    let time_frac: f64 = rng.random();
                    let space_frac: f64 = rng.random();
                    let size = sampler.draw(&mut rng);
                    if size.abs() > cap {
                        continue;
                    }
                    *cell += size;
                    if let Some(log) = log.as_mut() {
                        log.push(Jump {
                            step: i,
                            cell: j,
                            time_frac,
                            space_frac,
                            size,
                        });
                    }
                }
            }
        }
    }
    Ok(NoiseField {
        grid: *grid,
        spec: spec.clone(),
        seed,
        increments,
        jump_log: log,
    })
}

#[derive(Serialize, Deserialize)]
struct NoiseHeader {
    format: String,
    grid: GridSpec,
    spec: LevyNoiseSpec,
    seed: u64,
}

const NOISE_FORMAT: &str = "levy-heat/noise-field/1";

impl NoiseField {
    /// Builds a field from explicit increments (row `i` = time step `i`).
    pub fn from_increments(grid: GridSpec, spec: LevyNoiseSpec, seed: u64, increments: Vec<f64>) -> Result<Self> {
        if increments.len() != grid.steps() * grid.n() {
            return Err(Error::InvalidParameter(format!(
                "expected {} increments, got {}",
                grid.steps() * grid.n(),
                increments.len()
            )));
        }
        if increments.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("increments must be finite".into()));
        }
        Ok(Self {
            grid,
            spec,
            seed,
            increments,
            jump_log: None,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn spec(&self) -> &LevyNoiseSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.increments[i * n..(i + 1) * n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.increments[i * self.n() + j]
    }

    pub fn jump_log(&self) -> Option<&[Jump]> {
        self.jump_log.as_deref()
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.increments)
    }

    /// Largest `|z|` among logged jumps (0 without jumps).
    pub fn max_jump(&self) -> Option<f64> {
        self.jump_log
            .as_ref()
            .map(|log| log.iter().fold(0.0_f64, |m, j| m.max(j.size.abs())))
    }

    /// Aggregates `kt × kx` blocks of fine cells into one coarse cell.
    ///
    /// Increments are summed (Λ is additive over disjoint cells); logged jumps
    /// are re-binned by their absolute coordinates.
    pub fn coarsen(&self, kt: usize, kx: usize) -> Result<NoiseField> {
        let (m, n) = (self.steps(), self.n());
        if kt == 0 || kx == 0 || m % kt != 0 || n % kx != 0 {
            return Err(Error::Alignment(format!(
                "factors (kt = {kt}, kx = {kx}) do not divide the fine grid (m = {m}, n = {n})"
            )));
        }
        let g = &self.grid;
        let grid = GridSpec::with_constants(n / kx, g.tau() * kt as f64, g.theta(), g.horizon(), g.constants())?;
        let (mc, nc) = (m / kt, n / kx);
        let mut increments = vec![0.0; mc * nc];
        for ic in 0..mc {
            for jc in 0..nc {
                let mut acc = 0.0;
                for i in ic * kt..(ic + 1) * kt {
                    let row = &self.increments[i * n + jc * kx..i * n + (jc + 1) * kx];
                    acc += row.iter().sum::<f64>();
                }
                increments[ic * nc + jc] = acc;
            }
        }
        let jump_log = self.jump_log.as_ref().map(|log| {
            log.iter()
                .map(|jmp| Jump {
                    step: jmp.step / kt,
                    cell: jmp.cell / kx,
                    time_frac: ((jmp.step % kt) as f64 + jmp.time_frac) / kt as f64,
                    space_frac: ((jmp.cell % kx) as f64 + jmp.space_frac) / kx as f64,
                    size: jmp.size,
                })
                .collect()
        });
        Ok(NoiseField {
            grid,
            spec: self.spec.clone(),
            seed: self.seed,
            increments,
            jump_log,
        })
    }

    /// Writes a JSON header line followed by the increments as CSV
    /// (17 significant digits, one row per time step).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = NoiseHeader {
            format: NOISE_FORMAT.into(),
            grid: self.grid,
            spec: self.spec.clone(),
            seed: self.seed,
        };
        writeln!(w, "{}", serde_json::to_string(&header).map_err(|e| Error::Parse(e.to_string()))?)?;
        write_csv_rows(&mut w, &self.increments, self.n())?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let head = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header line".into()))??;
        let header: NoiseHeader = serde_json::from_str(&head).map_err(|e| Error::Parse(e.to_string()))?;
        if header.format != NOISE_FORMAT {
            return Err(Error::Parse(format!("unexpected format tag {}", header.format)));
        }
        let values = read_csv_rows(lines, header.grid.n())?;
        Self::from_increments(header.grid, header.spec, header.seed, values)
    }
}

pub(crate) fn write_csv_rows<W: Write>(w: &mut W, values: &[f64], width: usize) -> Result<()> {
    for row in values.chunks(width) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub(crate) fn read_csv_rows<I>(lines: I, width: usize) -> Result<Vec<f64>>
where
    I: Iterator<Item = std::io::Result<String>>,
{
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let before = out.len();
        for field in line.split(',') {
            out.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {k}: {e}")))?,
            );
        }
        if out.len() - before != width {
            return Err(Error::Parse(format!("row {k} has {} fields, expected {width}", out.len() - before)));
        }
    }
    Ok(out)
}

/// Pairwise summation; the result does not depend on how work was split.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}
