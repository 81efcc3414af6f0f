use levy_heat::analysis::{
    check_lyapunov_inputs, convergence_study, default_h_ladder, estimate_lyapunov, estimate_path_exponent,
    truncation_study, ConvergenceSetup, MCConfig,
};
use levy_heat::noise::Atom;
use levy_heat::{CoefficientSpec, Error, GridSpec, InitialCondition, LevyMeasureSpec, LevyNoiseSpec};
use std::f64::consts::FRAC_PI_2;

fn small_jumps(rate: f64, scale: f64) -> LevyNoiseSpec {
    LevyNoiseSpec::centered(LevyMeasureSpec::two_sided_exponential(rate, scale).unwrap()).unwrap()
}

fn setup(ladder: Vec<(usize, f64)>, reference: (usize, f64), paths: usize) -> ConvergenceSetup {
    ConvergenceSetup {
        theta: 1.0,
        coeff: CoefficientSpec::Linear { gamma: 1.0 },
        u0: InitialCondition::Constant { value: 1.0 },
        noise: small_jumps(2000.0, 0.02),
        ladder,
        reference,
        horizon: 1.0 / 16.0,
        probes: vec![0.0, 0.5],
        mc: MCConfig::new(paths, 3).unwrap(),
        constants: Default::default(),
    }
}

#[test]
fn level_equal_to_the_reference_has_zero_error() {
    let tau = 1.0 / 1024.0;
    let report = convergence_study(&setup(vec![(16, tau), (32, tau)], (32, tau), 100)).unwrap();
    assert!(report.levels[0].error > 0.0);
    assert_eq!(report.levels[1].error, 0.0);
    assert!(report.fit.is_none());
}

#[test]
fn convergence_study_is_bitwise_reproducible() {
    let tau = 1.0 / 1024.0;
    let s = setup(vec![(8, tau), (16, tau)], (32, tau), 100);
    let a = convergence_study(&s).unwrap();
    let b = convergence_study(&s).unwrap();
    for (x, y) in a.levels.iter().zip(&b.levels) {
        assert_eq!(x.error.to_bits(), y.error.to_bits());
        assert_eq!(x.se.to_bits(), y.se.to_bits());
    }
    assert_eq!(a.fit, b.fit);
}

#[test]
fn misaligned_ladder_is_rejected_before_sampling() {
    let tau = 1.0 / 1024.0;
    assert!(convergence_study(&setup(vec![(12, tau)], (32, tau), 100)).is_err());
    assert!(convergence_study(&setup(vec![(32, tau * 3.0)], (32, tau * 2.0), 100)).is_err());
}

#[test]
fn lyapunov_rejects_degenerate_inputs() {
    let grid = GridSpec::new(16, 1.0 / 64.0, 1.0, 1.0).unwrap();
    let noise = small_jumps(400.0, 0.05);
    let u0 = InitialCondition::Constant { value: 1.0 };
    let mc = MCConfig::new(100, 1).unwrap();
    let linear = |gamma| CoefficientSpec::Linear { gamma };
    assert!(check_lyapunov_inputs(&grid, &noise, &linear(0.5), &u0, 2.0, &mc, None).is_ok());
    assert!(check_lyapunov_inputs(&grid, &noise, &linear(0.0), &u0, 2.0, &mc, None).is_err());
    assert!(check_lyapunov_inputs(&grid, &noise, &CoefficientSpec::BoundedSin { beta: 1.0 }, &u0, 2.0, &mc, None).is_err());
    let negative = InitialCondition::Constant { value: -1.0 };
    assert!(check_lyapunov_inputs(&grid, &noise, &linear(0.5), &negative, 2.0, &mc, None).is_err());
    assert!(check_lyapunov_inputs(&grid, &noise, &linear(0.5), &u0, 3.0, &mc, None).is_err());
    assert!(check_lyapunov_inputs(&grid, &noise, &linear(0.5), &u0, 2.0, &mc, Some((0.5, 2.0))).is_err());
}

#[test]
fn lyapunov_estimate_is_reproducible_and_ordered() {
    let grid = GridSpec::new(16, 1.0 / 64.0, 1.0, 1.0).unwrap();
    let noise = small_jumps(400.0, 0.05);
    let coeff = CoefficientSpec::Linear { gamma: 0.5 };
    let u0 = InitialCondition::Constant { value: 1.0 };
    let mc = MCConfig::new(200, 4).unwrap();
    let a = estimate_lyapunov(&grid, &noise, &coeff, &u0, 2.0, &mc, None, 4).unwrap();
    let b = estimate_lyapunov(&grid, &noise, &coeff, &u0, 2.0, &mc, None, 4).unwrap();
    assert_eq!(a.log_sup, b.log_sup);
    assert_eq!(a.lower_slope.to_bits(), b.lower_slope.to_bits());
    for (s, i) in a.log_sup.iter().zip(&a.log_inf) {
        assert!(s >= i);
    }
}

fn pathreg_grid() -> GridSpec {
    GridSpec::new(16, 1.0 / 1024.0, 1.0, 0.5).unwrap()
}

#[test]
fn path_exponent_interval_shrinks_like_root_paths() {
    let grid = pathreg_grid();
    let noise = small_jumps(20000.0, 0.007);
    let sigma = CoefficientSpec::BoundedSin { beta: 1.0 };
    let u0 = InitialCondition::Constant { value: FRAC_PI_2 };
    let h = default_h_ladder(grid.tau());
    let width = |paths| {
        let mc = MCConfig::new(paths, 1).unwrap();
        estimate_path_exponent(&grid, &noise, &sigma, &u0, 0.25, &h, -0.6, &mc).unwrap().fit.half_width()
    };
    let ratio = width(2000) / width(1000);
    // 1/sqrt(2) = 0.707 within a relative 30%
    assert!((0.495..=0.919).contains(&ratio), "ratio {ratio}");
}

#[test]
fn path_exponent_without_noise_coefficient_is_a_fit_error() {
    let grid = pathreg_grid();
    let noise = small_jumps(400.0, 0.05);
    let h = default_h_ladder(grid.tau());
    let u0 = InitialCondition::Constant { value: 1.0 };
    let mc = MCConfig::new(100, 1).unwrap();
    let r = estimate_path_exponent(&grid, &noise, &CoefficientSpec::Constant { beta: 0.0 }, &u0, 0.25, &h, -0.6, &mc);
    assert!(matches!(r, Err(Error::Fit(_))), "{r:?}");
}

#[test]
fn path_exponent_input_checks() {
    let grid = pathreg_grid();
    let noise = small_jumps(400.0, 0.05);
    let u0 = InitialCondition::Constant { value: 1.0 };
    let mc = MCConfig::new(100, 1).unwrap();
    let sin = CoefficientSpec::BoundedSin { beta: 1.0 };
    let h = default_h_ladder(grid.tau());
    let run = |c: &CoefficientSpec, t, h: &[f64], r| estimate_path_exponent(&grid, &noise, c, &u0, t, h, r, &mc);
    assert!(run(&CoefficientSpec::Linear { gamma: 1.0 }, 0.25, &h, -0.6).is_err());
    assert!(run(&sin, 0.25, &h, -0.4).is_err());
    assert!(run(&sin, 0.25, &h[..2], -0.6).is_err());
    assert!(run(&sin, 0.49, &h, -0.6).is_err());
    assert!(run(&sin, 0.25, &[grid.tau() / 2.0, 0.01, 0.02], -0.6).is_err());
}

#[test]
fn truncation_study_properties() {
    let grid = GridSpec::new(16, 1.0 / 128.0, 1.0, 0.25).unwrap();
    let noise = LevyNoiseSpec::centered(
        LevyMeasureSpec::atomic(vec![
            Atom { size: 0.3, rate: 100.0 },
            Atom { size: -2.0, rate: 2.0 },
            Atom { size: 5.0, rate: 1.0 },
        ])
        .unwrap(),
    )
    .unwrap();
    let report = truncation_study(
        &grid,
        &noise,
        &[1.5, 3.0, 6.0],
        &CoefficientSpec::Linear { gamma: 0.5 },
        &InitialCondition::Constant { value: 1.0 },
        0.25,
        0.5,
        &MCConfig::new(300, 2).unwrap(),
    )
    .unwrap();
    assert!(report.exact_paths_agree());
    assert!(report.exact_fraction_nondecreasing());
    let last = report.rows.last().unwrap();
    assert_eq!(last.exact_fraction, 1.0);
    assert_eq!(last.mean_discrepancy, 0.0);
    // P(no jump of size 5 in [0, 1/4] x [0, 1]) = exp(-1/4)
    let first = &report.rows[0];
    let p = (-0.75f64).exp();
    assert!((first.exact_fraction - p).abs() < 4.0 * (p * (1.0 - p) / 300.0).sqrt(), "{}", first.exact_fraction);
    assert!(first.mean_discrepancy > 0.0);
}
