//! One path of the scheme: sample the noise, run, check the result against
//! the mild form at a few points, write the field to disk.
//!
//!     cargo run --release --example simulate -- [n] [tau] [theta] [seed]

use levy_heat::noise::sample;
use levy_heat::scheme::{run, MildEvaluator};
use levy_heat::{CoefficientSpec, GridSpec, InitialCondition, LevyMeasureSpec, LevyNoiseSpec};

fn main() -> levy_heat::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|a| a.parse().expect("n")).unwrap_or(32);
    let tau: f64 = args.next().map(|a| a.parse().expect("tau")).unwrap_or(1.0 / 512.0);
    let theta: f64 = args.next().map(|a| a.parse().expect("theta")).unwrap_or(0.5);
    let seed: u64 = args.next().map(|a| a.parse().expect("seed")).unwrap_or(1);

    let grid = GridSpec::new(n, tau, theta, 0.25)?;
    println!("n = {n}, tau = {tau}, theta = {theta}, n^2 tau = {:.3}: {:?}", grid.n2tau(), grid.stability()?);
    let noise = LevyNoiseSpec::centered(LevyMeasureSpec::two_sided_exponential(200.0, 0.1)?)?;
    let field = sample(&grid, &noise, seed, true)?;
    println!(
        "{} jumps, largest {:.3}",
        field.jump_log().map_or(0, |j| j.len()),
        field.max_jump().unwrap_or(0.0)
    );

    let sigma = CoefficientSpec::BoundedSin { beta: 1.0 };
    let u0 = InitialCondition::Mode { l: 1, amplitude: 1.0 };
    let sol = run(&grid, &field, &sigma, &u0)?;
    let last = sol.last_row();
    let (lo, hi) = last.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!("u(T, .) in [{lo:.4}, {hi:.4}], hash {}", &sol.content_hash()[..16]);

    // the scheme and its mild form agree up to rounding
    let mut mild = MildEvaluator::new(&grid);
    for &(t, x) in &[(0.125, 0.0), (0.25, 0.5), (0.25, 0.8)] {
        let i = grid.step_index(t) as usize;
        let j = grid.cell_index(x);
        let m = mild.evaluate(&field, &sol, t, x)?;
        println!("  t = {t}  x = {x}  scheme {:+.12}  mild {:+.12}", sol.get(i, j), m);
    }

    let path = std::env::temp_dir().join("levy-heat-solution.txt");
    sol.write_to(std::fs::File::create(&path)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
