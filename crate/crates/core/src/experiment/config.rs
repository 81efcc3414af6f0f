use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::MCConfig;
use crate::error::{Error, Result};
use crate::noise::{center_drift, LevyMeasureSpec, LevyNoiseSpec};
use crate::scheme::{CoefficientSpec, InitialCondition};
use crate::spectral::{GridSpec, StabilityConstants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Converge,
    Intermittency,
    Pathreg,
    Greenerr,
    Truncate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Converge => "converge",
            Command::Intermittency => "intermittency",
            Command::Pathreg => "pathreg",
            Command::Greenerr => "greenerr",
            Command::Truncate => "truncate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub n: usize,
    pub tau: f64,
    pub theta: f64,
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl GridBlock {
    pub fn constants(&self) -> StabilityConstants {
        let mut c = StabilityConstants::default();
        c.r_bound = self.r_bound;
        if let Some(e) = self.epsilon {
            c.epsilon = e;
        }
        c
    }

    pub fn build(&self) -> Result<GridSpec> {
        GridSpec::with_constants(self.n, self.tau, self.theta, self.horizon, self.constants())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    /// Drift `b`; ignored when `centered` is set.
    #[serde(default)]
    pub drift: f64,
    /// Use the centering drift `b = -∫_{|z|>1} z λ(dz)`.
    #[serde(default)]
    pub centered: bool,
    /// Allow the zero measure.
    #[serde(default)]
    pub deterministic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    pub measure: LevyMeasureSpec,
}

impl NoiseBlock {
    pub fn build(&self) -> Result<LevyNoiseSpec> {
        self.measure.validate()?;
        let drift = if self.centered { center_drift(&self.measure)? } else { self.drift };
        if !drift.is_finite() {
            return Err(Error::InvalidParameter(format!("drift {drift} is not finite")));
        }
        let spec = LevyNoiseSpec {
            drift,
            measure: self.measure.clone(),
            truncation: None,
            deterministic: self.deterministic,
        };
        let spec = match self.truncation {
            Some(cap) => spec.truncate(cap)?,
            None => spec,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeBlock {
    /// Coarse levels `[n, τ]`; the grid block is the reference level.
    pub ladder: Vec<(usize, f64)>,
    #[serde(default = "default_probes")]
    pub probes: Vec<f64>,
    /// Acceptance band for the fitted slope; defaults by axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<(f64, f64)>,
}

fn default_probes() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntermittencyBlock {
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

impl Default for IntermittencyBlock {
    fn default() -> Self {
        Self {
            p: default_p(),
            window: None,
            stride: default_stride(),
        }
    }
}

fn default_p() -> f64 {
    2.0
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathregBlock {
    pub t: f64,
    /// Defaults to `{2τ, 4τ, 8τ, 16τ}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_ladder: Option<Vec<f64>>,
    #[serde(default = "default_r")]
    pub r: f64,
}

fn default_r() -> f64 {
    -0.6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenerrBlock {
    #[serde(default = "default_green_theta")]
    pub theta: f64,
    /// Space sweep at fixed `n²τ`.
    #[serde(default = "default_space_n")]
    pub space_n: Vec<usize>,
    #[serde(default = "default_n2tau")]
    pub n2tau: f64,
    /// Time sweep at fixed `n`.
    #[serde(default = "default_time_tau")]
    pub time_tau: Vec<f64>,
    #[serde(default = "default_time_n")]
    pub time_n: usize,
    #[serde(default)]
    pub x: f64,
    #[serde(default = "default_green_tol")]
    pub tol: f64,
    #[serde(default = "default_green_band")]
    pub band: (f64, f64),
}

impl Default for GreenerrBlock {
    fn default() -> Self {
        Self {
            theta: default_green_theta(),
            space_n: default_space_n(),
            n2tau: default_n2tau(),
            time_tau: default_time_tau(),
            time_n: default_time_n(),
            x: 0.0,
            tol: default_green_tol(),
            band: default_green_band(),
        }
    }
}

fn default_green_theta() -> f64 {
    1.0
}

fn default_space_n() -> Vec<usize> {
    vec![8, 16, 32, 64]
}

fn default_n2tau() -> f64 {
    0.01
}

fn default_time_tau() -> Vec<f64> {
    vec![0.04, 0.01, 0.0025, 0.000625]
}

fn default_time_n() -> usize {
    4096
}

fn default_green_tol() -> f64 {
    1e-11
}

fn default_green_band() -> (f64, f64) {
    (0.8, 1.2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncateBlock {
    pub levels: Vec<f64>,
    pub t: f64,
    #[serde(default)]
    pub x: f64,
}

/// Experiment configuration; every block is optional at parse time so that
/// missing blocks are reported by [`validate`](super::validate).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<CoefficientSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialCondition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<MCConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converge: Option<ConvergeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermittency: Option<IntermittencyBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pathreg: Option<PathregBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub greenerr: Option<GreenerrBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncate: Option<TruncateBlock>,
}

impl ExperimentConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }
}
