//! The fully discrete θ-scheme
//!
//! ```text
//! (I - θτΔ_n) u_{i+1} = u_i + (1-θ)τΔ_n u_i + n σ(u_i) ⊙ □Λ_i
//! ```
//!
//! with periodic wrap, and the mild (convolution) form of the same recursion.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::green::DiscreteGreen;
use crate::noise::{read_csv_rows, write_csv_rows, NoiseField};
use crate::spectral::{amplification, periodic_laplacian_into, Dft, GridSpec, Stability};

/// Lipschitz families for the multiplicative coefficient σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum CoefficientSpec {
    /// `σ(u) = γ u`
    Linear { gamma: f64 },
    /// `σ(u) = β sin(u)`
    BoundedSin { beta: f64 },
    /// `σ(u) = β`
    Constant { beta: f64 },
    /// `σ(u) = clamp(intercept + slope·u, lo, hi)`; missing bounds are open.
    AffineClip {
        intercept: f64,
        slope: f64,
        #[serde(default)]
        lo: Option<f64>,
        #[serde(default)]
        hi: Option<f64>,
    },
}

impl CoefficientSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = match *self {
            CoefficientSpec::Linear { gamma } => gamma.is_finite(),
            CoefficientSpec::BoundedSin { beta } | CoefficientSpec::Constant { beta } => beta.is_finite(),
            CoefficientSpec::AffineClip { intercept, slope, lo, hi } => {
                intercept.is_finite()
                    && slope.is_finite()
                    && lo.is_none_or(f64::is_finite)
                    && hi.is_none_or(f64::is_finite)
                    && match (lo, hi) {
                        (Some(a), Some(b)) => a <= b,
                        _ => true,
                    }
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid coefficient {self:?}")))
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            CoefficientSpec::Linear { gamma } => gamma * u,
            CoefficientSpec::BoundedSin { beta } => beta * u.sin(),
            CoefficientSpec::Constant { beta } => beta,
            CoefficientSpec::AffineClip { intercept, slope, lo, hi } => {
                let mut v = intercept + slope * u;
                if let Some(lo) = lo {
                    v = v.max(lo);
                }
                if let Some(hi) = hi {
                    v = v.min(hi);
                }
                v
            }
        }
    }

    /// Lipschitz constant `L_σ`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            CoefficientSpec::Linear { gamma } => gamma.abs(),
            CoefficientSpec::BoundedSin { beta } => beta.abs(),
            CoefficientSpec::Constant { .. } => 0.0,
            CoefficientSpec::AffineClip { slope, lo, hi, .. } => {
                if matches!((lo, hi), (Some(a), Some(b)) if a == b) {
                    0.0
                } else {
                    slope.abs()
                }
            }
        }
    }

    /// `J_0 = inf_{u≠0} |σ(u)/u|`.
    pub fn j0(&self) -> f64 {
        match *self {
            CoefficientSpec::Linear { gamma } => gamma.abs(),
            CoefficientSpec::AffineClip {
                intercept,
                slope,
                lo: None,
                hi: None,
            } if intercept == 0.0 => slope.abs(),
            _ => 0.0,
        }
    }

    pub fn is_bounded(&self) -> bool {
        match *self {
            CoefficientSpec::Linear { gamma } => gamma == 0.0,
            CoefficientSpec::BoundedSin { .. } | CoefficientSpec::Constant { .. } => true,
            CoefficientSpec::AffineClip { slope, lo, hi, .. } => slope == 0.0 || (lo.is_some() && hi.is_some()),
        }
    }

    /// True when `σ ≡ 0`.
    pub fn is_zero(&self) -> bool {
        match *self {
            CoefficientSpec::Linear { gamma } => gamma == 0.0,
            CoefficientSpec::BoundedSin { beta } | CoefficientSpec::Constant { beta } => beta == 0.0,
            CoefficientSpec::AffineClip { intercept, slope, lo, hi } => {
                (intercept == 0.0 && slope == 0.0 && lo.is_none_or(|v| v <= 0.0) && hi.is_none_or(|v| v >= 0.0))
                    || (lo == Some(0.0) && hi == Some(0.0))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub l: usize,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Initial data, sampled at the nodes `x_j = j/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialCondition {
    Constant { value: f64 },
    /// `amplitude · cos(2πl x)`
    Mode { l: usize, amplitude: f64 },
    /// `constant + Σ cos_k cos(2πl_k x) + sin_k sin(2πl_k x)`
    Fourier { constant: f64, terms: Vec<FourierTerm> },
    Samples { values: Vec<f64> },
}

impl InitialCondition {
    pub fn sample(&self, n: usize) -> Result<Vec<f64>> {
        let x = |j: usize| j as f64 / n as f64;
        let v = match self {
            InitialCondition::Constant { value } => vec![*value; n],
            InitialCondition::Mode { l, amplitude } => (0..n)
                .map(|j| amplitude * (2.0 * PI * ((l * j) % n) as f64 / n as f64).cos())
                .collect(),
            InitialCondition::Fourier { constant, terms } => (0..n)
                .map(|j| {
                    constant
                        + terms
                            .iter()
                            .map(|t| {
                                let arg = 2.0 * PI * t.l as f64 * x(j);
                                t.cos * arg.cos() + t.sin * arg.sin()
                            })
                            .sum::<f64>()
                })
                .collect(),
            InitialCondition::Samples { values } => {
                if values.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "initial samples have length {}, grid has n = {n}",
                        values.len()
                    )));
                }
                values.clone()
            }
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("initial condition is not finite".into()));
        }
        Ok(v)
    }

    /// Short identifier recorded in solution provenance.
    pub fn id(&self) -> String {
        match self {
            InitialCondition::Samples { values } => {
                let mut h = Sha256::new();
                for v in values {
                    h.update(v.to_le_bytes());
                }
                format!("samples:{}", &hex(&h.finalize())[..16])
            }
            other => serde_json::to_string(other).unwrap_or_default(),
        }
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Stepper for one grid with cached FFT plans and spectral factors.
pub struct SpectralSolver {
    grid: GridSpec,
    r1: Vec<f64>,
    dft: Dft,
    buf: Vec<Complex64>,
    lap: Vec<f64>,
}

impl SpectralSolver {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.n();
        Self {
            grid: *grid,
            r1: amplification(grid).r1,
            dft: Dft::new(n),
            buf: vec![Complex64::new(0.0, 0.0); n],
            lap: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Overwrites `v` with the solution `w` of `(I - θτΔ_n) w = v`.
    pub fn solve_in_place(&mut self, v: &mut [f64]) {
        if self.grid.theta() == 0.0 {
            return;
        }
        for (b, &x) in self.buf.iter_mut().zip(v.iter()) {
            *b = Complex64::new(x, 0.0);
        }
        self.dft.forward_in_place(&mut self.buf);
        for (b, &r) in self.buf.iter_mut().zip(&self.r1) {
            *b *= r;
        }
        self.dft.inverse_in_place(&mut self.buf);
        for (x, b) in v.iter_mut().zip(&self.buf) {
            *x = b.re;
        }
    }

    /// One step from `u` (row `i`) using the noise row `dl`; `i` labels a
    /// divergence error.
    pub fn step_into(
        &mut self,
        i: usize,
        u: &[f64],
        dl: &[f64],
        coeff: &CoefficientSpec,
        out: &mut [f64],
    ) -> Result<()> {
        let n = self.grid.n();
        let explicit = (1.0 - self.grid.theta()) * self.grid.tau();
        periodic_laplacian_into(u, &mut self.lap);
        for j in 0..n {
            out[j] = u[j] + explicit * self.lap[j] + n as f64 * coeff.eval(u[j]) * dl[j];
        }
        self.solve_in_place(out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: i });
        }
        Ok(())
    }
}

/// Solves `(I - θτΔ_n) w = rhs`.
pub fn solve_implicit(rhs: &[f64], grid: &GridSpec) -> Result<Vec<f64>> {
    check_len(rhs.len(), grid.n(), "right-hand side")?;
    let mut w = rhs.to_vec();
    SpectralSolver::new(grid).solve_in_place(&mut w);
    Ok(w)
}

fn check_len(got: usize, n: usize, what: &str) -> Result<()> {
    if got == n {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} has length {got}, grid has n = {n}")))
    }
}

/// One step of the scheme.
pub fn step(u: &[f64], noise_row: &[f64], grid: &GridSpec, coeff: &CoefficientSpec) -> Result<Vec<f64>> {
    check_len(u.len(), grid.n(), "state")?;
    check_len(noise_row.len(), grid.n(), "noise row")?;
    let mut out = vec![0.0; grid.n()];
    SpectralSolver::new(grid).step_into(0, u, noise_row, coeff, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionProvenance {
    pub noise_seed: u64,
    pub coefficient: CoefficientSpec,
    pub initial_id: String,
}

/// `u^{n,τ}(t_i, x_j)` for `i = 0..=m`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    grid: GridSpec,
    values: Vec<f64>,
    provenance: SolutionProvenance,
}

/// Runs the scheme over the whole horizon of `grid`.
pub fn run(
    grid: &GridSpec,
    noise: &NoiseField,
    coeff: &CoefficientSpec,
    u0: &InitialCondition,
) -> Result<SolutionField> {
    let mut solver = SpectralSolver::new(grid);
    run_with(&mut solver, noise, coeff, u0)
}

/// [`run`] reusing a solver built for the same grid.
pub fn run_with(
    solver: &mut SpectralSolver,
    noise: &NoiseField,
    coeff: &CoefficientSpec,
    u0: &InitialCondition,
) -> Result<SolutionField> {
    let grid = *solver.grid();
    if let Stability::Violation { condition, detail } = grid.stability()? {
        return Err(Error::Stability(format!("{condition}: {detail}")));
    }
    if noise.n() != grid.n() || noise.steps() != grid.steps() || noise.grid().tau() != grid.tau() {
        return Err(Error::Alignment(format!(
            "noise is {}×{} with tau {}, grid is {}×{} with tau {}",
            noise.steps(),
            noise.n(),
            noise.grid().tau(),
            grid.steps(),
            grid.n(),
            grid.tau()
        )));
    }
    coeff.validate()?;
    let n = grid.n();
    let m = grid.steps();
    let mut values = vec![0.0; (m + 1) * n];
    values[..n].copy_from_slice(&u0.sample(n)?);
    for i in 0..m {
        let (done, rest) = values.split_at_mut((i + 1) * n);
        solver.step_into(i, &done[i * n..], noise.row(i), coeff, &mut rest[..n])?;
    }
    Ok(SolutionField {
        grid,
        values,
        provenance: SolutionProvenance {
            noise_seed: noise.seed(),
            coefficient: coeff.clone(),
            initial_id: u0.id(),
        },
    })
}

#[derive(Serialize, Deserialize)]
struct SolutionHeader {
    format: String,
    grid: GridSpec,
    provenance: SolutionProvenance,
}

const SOLUTION_FORMAT: &str = "levy-heat/solution-field/1";

impl SolutionField {
    pub fn new(grid: GridSpec, values: Vec<f64>, provenance: SolutionProvenance) -> Result<Self> {
        if values.len() != (grid.steps() + 1) * grid.n() {
            return Err(Error::InvalidParameter(format!(
                "{} values do not fill {} rows of width {}",
                values.len(),
                grid.steps() + 1,
                grid.n()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: k / grid.n() });
        }
        Ok(Self { grid, values, provenance })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn provenance(&self) -> &SolutionProvenance {
        &self.provenance
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.grid.n()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.n();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n() + j]
    }

    pub fn last_row(&self) -> &[f64] {
        self.row(self.rows() - 1)
    }

    /// Row holding `u(t, ·)`, piecewise constant in time.
    pub fn at_time(&self, t: f64) -> Result<&[f64]> {
        let i = self.grid.step_index(t);
        if i < 0 || i as usize >= self.rows() {
            return Err(Error::Domain(format!("t = {t} is outside [0, {}]", self.grid.horizon())));
        }
        Ok(self.row(i as usize))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = SolutionHeader {
            format: SOLUTION_FORMAT.into(),
            grid: self.grid,
            provenance: self.provenance.clone(),
        };
        writeln!(w, "{}", serde_json::to_string(&header).map_err(|e| Error::Parse(e.to_string()))?)?;
        write_csv_rows(&mut w, &self.values, self.grid.n())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let head = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header line".into()))??;
        let header: SolutionHeader = serde_json::from_str(&head).map_err(|e| Error::Parse(e.to_string()))?;
        if header.format != SOLUTION_FORMAT {
            return Err(Error::Parse(format!("unexpected format tag {}", header.format)));
        }
        let values = read_csv_rows(lines, header.grid.n())?;
        Self::new(header.grid, values, header.provenance)
    }

    /// SHA-256 of the serialized form, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut bytes = Vec::new();
        self.write_to(&mut bytes).expect("writing to memory");
        hex(&Sha256::digest(&bytes))
    }
}

/// Evaluates the mild form
///
/// ```text
/// u(t_i, x) = Σ_j G1(t_i, x, x_j) u0(x_j)/n
///           + Σ_{k<i} Σ_j G2(t_i - t_{k+1}, x, x_j) σ(u(t_k, x_j)) □Λ(t_k, x_j)
/// ```
///
/// using rows `0..i` of `solution` for the coefficient and row 0 as `u0`.
pub fn mild_evaluate(
    grid: &GridSpec,
    noise: &NoiseField,
    solution: &SolutionField,
    t: f64,
    x: f64,
) -> Result<f64> {
    MildEvaluator::new(grid).evaluate(noise, solution, t, x)
}

/// Mild-form evaluator with the kernel tables of one grid cached.
pub struct MildEvaluator {
    grid: GridSpec,
    green: DiscreteGreen,
    g1: Vec<Vec<f64>>,
    g2: Vec<Vec<f64>>,
}

impl MildEvaluator {
    pub fn new(grid: &GridSpec) -> Self {
        Self {
            grid: *grid,
            green: DiscreteGreen::new(grid),
            g1: Vec::new(),
            g2: Vec::new(),
        }
    }

    fn tables(&mut self, steps: usize) {
        let n = self.grid.n();
        while self.g1.len() <= steps {
            let k = self.g1.len() as i64;
            self.g1.push((0..n).map(|d| self.green.g1_lag(k, d)).collect());
            self.g2.push((0..n).map(|d| self.green.g2_lag(k, d)).collect());
        }
    }

    pub fn evaluate(&mut self, noise: &NoiseField, solution: &SolutionField, t: f64, x: f64) -> Result<f64> {
        let grid = self.grid;
        let tau = grid.tau();
        let i = grid.step_index(t);
        if i < 0 || ((t / tau) - i as f64).abs() > 1e-9 * (t / tau).abs().max(1.0) {
            return Err(Error::Domain(format!("t = {t} is not a non-negative multiple of tau = {tau}")));
        }
        let i = i as usize;
        if i >= solution.rows() || i > noise.steps() {
            return Err(Error::Domain(format!("t = {t} is beyond the available rows")));
        }
        if solution.grid().n() != grid.n() || noise.n() != grid.n() {
            return Err(Error::Alignment("solution, noise and grid disagree on n".into()));
        }
        self.tables(i);
        let n = grid.n();
        let cell = grid.cell_index(x);
        let sigma = &solution.provenance().coefficient;

        let u0 = solution.row(0);
        let g1 = &self.g1[i];
        let mut value: f64 = (0..n).map(|j| g1[(cell + n - j) % n] * u0[j]).sum::<f64>() / n as f64;
        for k in 0..i {
            let g2 = &self.g2[i - k - 1];
            let u = solution.row(k);
            let dl = noise.row(k);
            value += (0..n).map(|j| g2[(cell + n - j) % n] * sigma.eval(u[j]) * dl[j]).sum::<f64>();
        }
        Ok(value)
    }
}
