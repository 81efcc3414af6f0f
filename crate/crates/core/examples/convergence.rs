//! Strong convergence under coupled noise: one fine noise sample per path,
//! coarsened to every ladder level, errors against the finest level.
//!
//!     cargo run --release --example convergence -- [space|time] [paths] [jump rate] [jump scale] [tau]

use levy_heat::analysis::{convergence_study, ConvergenceSetup, MCConfig};
use levy_heat::{CoefficientSpec, InitialCondition, LevyMeasureSpec, LevyNoiseSpec};

fn main() -> levy_heat::Result<()> {
    let mut args = std::env::args().skip(1);
    let axis = args.next().unwrap_or_else(|| "space".into());
    let paths: usize = args.next().map(|p| p.parse().expect("paths")).unwrap_or(200);
    let rate: f64 = args.next().map(|p| p.parse().expect("rate")).unwrap_or(2000.0);
    let scale: f64 = args.next().map(|p| p.parse().expect("scale")).unwrap_or(0.02);

    // many small jumps: the L² error is then not dominated by rare events
    let noise = LevyNoiseSpec::centered(LevyMeasureSpec::two_sided_exponential(rate, scale)?)?;
    let step: f64 = args.next().map(|p| p.parse().expect("tau")).unwrap_or(f64::NAN);
    let (ladder, reference, horizon) = match axis.as_str() {
        "space" => {
            let tau = if step.is_nan() { 1.0 / 1048576.0 } else { step };
            (vec![(8, tau), (16, tau), (32, tau), (64, tau)], (128, tau), 1.0 / 64.0)
        }
        "time" => {
            let tau0 = if step.is_nan() { 1.0 / 64.0 } else { step };
            let ladder = (0..4).map(|k| (64, tau0 / (1 << k) as f64)).collect();
            (ladder, (64, tau0 / 32.0), 0.25)
        }
        other => panic!("unknown axis {other}"),
    };
    let setup = ConvergenceSetup {
        theta: 1.0,
        coeff: CoefficientSpec::Linear { gamma: 1.0 },
        u0: InitialCondition::Constant { value: 1.0 },
        noise,
        ladder,
        reference,
        horizon,
        probes: vec![0.0, 0.25, 0.5, 0.75],
        mc: MCConfig::new(paths, 1)?,
        constants: Default::default(),
    };
    let t0 = std::time::Instant::now();
    let report = convergence_study(&setup)?;
    println!("{:?} sweep, {} paths, {:.1?}", report.axis, report.paths, t0.elapsed());
    for l in &report.levels {
        println!("  n = {:4}  tau = {:.3e}  error = {:.5e} +- {:.1e}", l.n, l.tau, l.error, l.se);
    }
    if let Some(fit) = &report.fit {
        println!("slope {:.3}  95% CI [{:.3}, {:.3}]", fit.slope, fit.ci.0, fit.ci.1);
    }
    Ok(())
}
