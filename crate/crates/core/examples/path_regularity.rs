//! Path regularity in a negative Sobolev norm: the mean oscillation product
//! over a symmetric window of width h scales faster than h.
//!
//!     cargo run --release --example path_regularity -- [paths] [jump rate] [jump scale]

use levy_heat::analysis::{default_h_ladder, estimate_path_exponent, MCConfig};
use levy_heat::{CoefficientSpec, GridSpec, InitialCondition, LevyMeasureSpec, LevyNoiseSpec};

fn main() -> levy_heat::Result<()> {
    let mut args = std::env::args().skip(1);
    let paths: usize = args.next().map(|p| p.parse().expect("paths")).unwrap_or(400);
    let rate: f64 = args.next().map(|p| p.parse().expect("rate")).unwrap_or(20000.0);
    let scale: f64 = args.next().map(|p| p.parse().expect("scale")).unwrap_or(0.007);
    let grid = GridSpec::new(32, 1.0 / 1024.0, 1.0, 0.5)?;
    let noise = LevyNoiseSpec::centered(LevyMeasureSpec::two_sided_exponential(rate, scale)?)?;
    let sigma = CoefficientSpec::BoundedSin { beta: 1.0 };
    let u0 = InitialCondition::Constant { value: std::f64::consts::FRAC_PI_2 };
    // sin(pi/2) = 1: the path starts where sigma is largest, so no dead stretches
    let h = default_h_ladder(grid.tau());

    let t0 = std::time::Instant::now();
    let est = estimate_path_exponent(&grid, &noise, &sigma, &u0, 0.25, &h, -0.6, &MCConfig::new(paths, 7)?)?;
    println!("{} paths, {:.1?}", est.paths, t0.elapsed());
    for q in 0..est.h.len() {
        println!("  h = {:.3e}  mean = {:.4e} +- {:.1e}", est.h[q], est.means[q], est.std_errors[q]);
    }
    let fit = &est.fit;
    println!("slope {:.3} (se {:.3})  95% CI [{:.3}, {:.3}]", fit.slope, fit.se, fit.ci.0, fit.ci.1);
    println!("slope >= 1 - half width: {}", fit.slope >= 1.0 - fit.half_width());
    Ok(())
}
