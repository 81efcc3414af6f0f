//! Fully discrete finite-difference / θ-scheme approximation of the stochastic
//! heat equation on the periodic unit interval, driven by pure-jump Lévy
//! space-time white noise.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: grids, eigenvalues of the periodic discrete Laplacian,
//!   amplification factors, stability regimes and the unitary DFT.
//! * [`noise`]: Lévy measures, per-cell noise sampling, truncation and
//!   refinement-consistent coarsening.
//! * [`green`]: the periodic heat kernel and the discrete Green functions,
//!   together with the error and integrability integrals built from them.
//! * [`scheme`]: the θ-scheme stepper and an independent mild-form evaluator.
//! * [`analysis`]: discrete Sobolev norms, oscillations, power-law fits and the
//!   Monte Carlo experiment drivers.
//! * [`experiment`]: configuration-driven experiment runner used by the
//!   `levy-heat` binary.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod green;
pub mod noise;
pub mod scheme;
pub mod spectral;

pub use error::{Error, Result};
pub use noise::{LevyMeasureSpec, LevyNoiseSpec, MeasureKind, NoiseField};
pub use scheme::{CoefficientSpec, InitialCondition, SolutionField};
pub use spectral::{GridSpec, SpectralData, StabilityConstants};
