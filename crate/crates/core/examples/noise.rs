//! Sampling the noise: per-cell increments, the compensator of a
//! non-centered measure, coarsening and truncation.
//!
//!     cargo run --release --example noise -- [seed]

use levy_heat::noise::{center_drift, moment_m_lambda, sample, Atom};
use levy_heat::{GridSpec, LevyMeasureSpec, LevyNoiseSpec};

fn main() -> levy_heat::Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|a| a.parse().expect("seed")).unwrap_or(3);
    let grid = GridSpec::new(64, 1.0 / 1024.0, 1.0, 1.0)?;

    let measure = LevyMeasureSpec::atomic(vec![
        Atom { size: 0.5, rate: 40.0 },
        Atom { size: -2.0, rate: 4.0 },
        Atom { size: 6.0, rate: 2.0 },
    ])?;
    for p in [1.0, 2.0] {
        println!("m_{p} = {:.4}", moment_m_lambda(&measure, p)?);
    }
    println!("centering drift {:+.4}", center_drift(&measure)?);

    let centered = LevyNoiseSpec::centered(measure.clone())?;
    let field = sample(&grid, &centered, seed, true)?;
    let jumps = field.jump_log().unwrap_or(&[]).len();
    println!("{jumps} jumps in [0,1]^2 (expected {:.1})", measure.activity());
    println!("L([0,1]^2) = {:+.4}  (mean 0, variance {:.2})", field.total(), centered.variance_rate());

    // coarsening sums blocks of cells, so the total is unchanged
    let coarse = field.coarsen(4, 2)?;
    println!("coarsened to n = {}, {} steps, total {:+.4}", coarse.n(), coarse.steps(), coarse.total());

    println!("largest jump {:.1}", field.max_jump().unwrap_or(0.0));
    // same seed, same uniforms: only jumps above the cap change
    let capped = sample(&grid, &centered.truncate(3.0)?, seed, false)?;
    let changed = field.increments().iter().zip(capped.increments()).filter(|(a, b)| a != b).count();
    println!("truncating at 3 changes {changed} of {} cells", field.increments().len());

    // a stream written to disk reads back bitwise
    let mut buf = Vec::new();
    field.write_to(&mut buf)?;
    let back = levy_heat::NoiseField::read_from(&buf[..])?;
    println!("round trip exact: {}", back.increments() == field.increments());
    Ok(())
}
