//! Heat kernel, discrete Green functions and the L² distance between them.
//!
//!     cargo run --release --example green

use levy_heat::analysis::fit_power_law;
use levy_heat::green::{discrete_green_g1, green_l2_sweep, heat_green_image, heat_green_spectral, GreenEvalConfig};
use levy_heat::GridSpec;

fn main() -> levy_heat::Result<()> {
    let cfg = GreenEvalConfig::default();
    for t in [1e-3, 0.05, 0.5] {
        let a = heat_green_image(t, 0.1, 0.0, &cfg)?;
        let b = heat_green_spectral(t, 0.1, 0.0, &cfg)?;
        println!("G({t}, 0.1, 0): image {a:.15e}  spectral {b:.15e}");
    }

    let grid = GridSpec::new(16, 0.01, 1.0, 1.0)?;
    let mass: f64 = (0..16).map(|j| discrete_green_g1(&grid, 0.2, 0.0, j as f64 / 16.0)).sum::<f64>() / 16.0;
    println!("discrete G1 mass at t = 0.2: {mass:.15}");

    // error against the continuous kernel, refining one axis at a time
    let cfg = GreenEvalConfig { tol: 1e-11, ..cfg };
    let t0 = std::time::Instant::now();
    let space: Vec<(usize, f64)> = [8usize, 16, 32, 64].iter().map(|&n| (n, 0.01 / (n * n) as f64)).collect();
    let sp = green_l2_sweep(&space, 1.0, 0.0, &cfg)?;
    let time: Vec<(usize, f64)> = [0.04, 0.01, 0.0025, 0.000625].iter().map(|&t| (4096, t)).collect();
    let tp = green_l2_sweep(&time, 1.0, 0.0, &cfg)?;
    for p in sp.iter().chain(&tp) {
        println!("  n = {:5}  tau = {:.3e}  error = {:.6e}", p.n, p.tau, p.error);
    }
    let s = fit_power_law(&sp.iter().map(|p| (1.0 / p.n as f64, p.error)).collect::<Vec<_>>())?;
    let t = fit_power_law(&tp.iter().map(|p| (p.tau.sqrt(), p.error)).collect::<Vec<_>>())?;
    println!("slope vs 1/n {:.3}, slope vs sqrt(tau) {:.3} ({:.1?})", s.slope, t.slope, t0.elapsed());
    Ok(())
}
