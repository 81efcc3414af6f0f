//! Weak intermittency: with linear σ and constant positive initial data the
//! second moment grows exponentially in time, uniformly in space.
//!
//!     cargo run --release --example intermittency -- [paths] [gamma] [jump rate] [jump scale]

use levy_heat::analysis::{estimate_lyapunov, MCConfig};
use levy_heat::{CoefficientSpec, GridSpec, InitialCondition, LevyMeasureSpec, LevyNoiseSpec};

fn main() -> levy_heat::Result<()> {
    let mut args = std::env::args().skip(1);
    let paths: usize = args.next().map(|p| p.parse().expect("paths")).unwrap_or(400);
    let gamma: f64 = args.next().map(|p| p.parse().expect("gamma")).unwrap_or(1.0);
    let rate: f64 = args.next().map(|p| p.parse().expect("rate")).unwrap_or(400.0);
    let scale: f64 = args.next().map(|p| p.parse().expect("scale")).unwrap_or(0.05);

    let grid = GridSpec::new(32, 1.0 / 256.0, 1.0, 4.0)?;
    let noise = LevyNoiseSpec::centered(LevyMeasureSpec::two_sided_exponential(rate, scale)?)?;
    let sigma = CoefficientSpec::Linear { gamma };
    let u0 = InitialCondition::Constant { value: 1.0 };

    let t0 = std::time::Instant::now();
    let est = estimate_lyapunov(&grid, &noise, &sigma, &u0, 2.0, &MCConfig::new(paths, 11)?, None, 8)?;
    println!("{paths} paths, {:.1?}, window {:?}", t0.elapsed(), est.window);
    for q in (0..est.times.len()).step_by(16) {
        println!("  t = {:5.3}  log sup = {:8.4}  log inf = {:8.4}", est.times[q], est.log_sup[q], est.log_inf[q]);
    }
    println!("lower slope {:.3} (se {:.3}), upper slope {:.3} (se {:.3})", est.lower_slope, est.lower_se, est.upper_slope, est.upper_se);
    println!("lower > 0 at 2 se: {}", est.lower_positive(2.0));
    println!("moment curve under affine fit + 3 se: {}", est.upper_bounded(3.0));
    Ok(())
}
