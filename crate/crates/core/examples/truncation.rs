//! Truncating large jumps: paths with no jump above N are reproduced
//! exactly, and the discrepancy to the untruncated solution shrinks with N.
//!
//!     cargo run --release --example truncation -- [paths]

use levy_heat::analysis::{truncation_study, MCConfig};
use levy_heat::noise::Atom;
use levy_heat::{CoefficientSpec, GridSpec, InitialCondition, LevyMeasureSpec, LevyNoiseSpec};

fn main() -> levy_heat::Result<()> {
    let paths: usize = std::env::args().nth(1).map(|a| a.parse().expect("paths")).unwrap_or(400);
    let grid = GridSpec::new(32, 1.0 / 256.0, 1.0, 0.5)?;
    let measure = LevyMeasureSpec::atomic(vec![
        Atom { size: 0.2, rate: 200.0 },
        Atom { size: -1.0, rate: 3.0 },
        Atom { size: 3.0, rate: 0.5 },
        Atom { size: -8.0, rate: 0.1 },
    ])?;
    let noise = LevyNoiseSpec::centered(measure)?;
    let levels = [1.5, 4.0, 10.0];

    let report = truncation_study(
        &grid,
        &noise,
        &levels,
        &CoefficientSpec::Linear { gamma: 0.5 },
        &InitialCondition::Constant { value: 1.0 },
        0.5,
        0.5,
        &MCConfig::new(paths, 5)?,
    )?;
    for r in &report.rows {
        println!(
            "  N = {:5.1}  exact {:.3}  E|u_N - u| = {:.4e} +- {:.1e}  violations {}",
            r.cap, r.exact_fraction, r.mean_discrepancy, r.se, r.exact_violations
        );
    }
    println!(
        "exact paths agree: {}  exact fraction nondecreasing: {}  discrepancy nonincreasing: {}",
        report.exact_paths_agree(),
        report.exact_fraction_nondecreasing(),
        report.discrepancy_nonincreasing(2.0)
    );
    Ok(())
}
