//! Negative Sobolev norms of grid functions and the oscillation product
//! along one simulated path.
//!
//!     cargo run --release --example sobolev -- [r]

use levy_heat::analysis::{discrete_sobolev_norm, oscillation_product, step_function_sobolev_norm};
use levy_heat::noise::sample;
use levy_heat::scheme::run;
use levy_heat::spectral::amplification;
use levy_heat::{CoefficientSpec, GridSpec, InitialCondition, LevyMeasureSpec, LevyNoiseSpec};

fn main() -> levy_heat::Result<()> {
    let r: f64 = std::env::args().nth(1).map(|a| a.parse().expect("r")).unwrap_or(-0.6);
    let grid = GridSpec::new(64, 1.0 / 1024.0, 1.0, 0.5)?;
    let spec = amplification(&grid);

    // higher modes are damped more in a negative norm
    for l in [1usize, 4, 16] {
        let v = InitialCondition::Mode { l, amplitude: 1.0 }.sample(64)?;
        println!(
            "mode {l:2}: discrete |v|_r = {:.4e}  step function |v|_r = {:.4e}",
            discrete_sobolev_norm(&v, r, &spec)?,
            step_function_sobolev_norm(&v, r, 4096)?
        );
    }

    let noise = LevyNoiseSpec::centered(LevyMeasureSpec::two_sided_exponential(20000.0, 0.007)?)?;
    let field = sample(&grid, &noise, 9, false)?;
    let sol = run(
        &grid,
        &field,
        &CoefficientSpec::BoundedSin { beta: 1.0 },
        &InitialCondition::Constant { value: std::f64::consts::FRAC_PI_2 },
    )?;
    for k in [1, 2, 4, 8, 16, 32] {
        let h = k as f64 * grid.tau();
        println!("  h = {h:.3e}  osc product = {:.4e}", oscillation_product(&sol, 0.25, h, r)?);
    }
    Ok(())
}
