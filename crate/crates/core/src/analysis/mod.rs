//! Sobolev norms, oscillation statistics, power-law fitting and the Monte
//! Carlo drivers built on top of the scheme.

mod convergence;
mod fit;
mod lyapunov;
mod mc;
mod pathreg;
mod sobolev;
mod truncation;

pub use convergence::{check_convergence_setup, convergence_study, Axis, ConvergenceReport, ConvergenceSetup, LevelError};
pub use fit::{fit_power_law, fit_power_law_with, least_squares, OrderFit};
pub use lyapunov::{check_intermittency_preset, check_lyapunov_inputs, estimate_lyapunov, LyapunovEstimate};
pub use mc::MCConfig;
pub use pathreg::{check_path_exponent_inputs, default_h_ladder, estimate_path_exponent, PathExponentEstimate};
pub use sobolev::{
    discrete_sobolev_norm, oscillation_product, step_function_sobolev_norm, OscillationProduct, SobolevNorm,
};
pub use truncation::{check_truncation_inputs, truncation_study, TruncationReport, TruncationRow};
