mod common;

use gzk_core::wave::{
    self, alpha, energy_floor, period_of_b, solve_wave, turning_points, wave_residual, Branch, PeriodMap, WaveParams,
    WaveSolver,
};
use gzk_core::Error;

use common::{shooting_period, upper_turning_point};

#[test]
fn turning_points_positive_orbit() {
    let (b1, b2) = turning_points(1.0f64, 1.0, -0.5).unwrap();
    assert!(0.0 < b1 && b1 < 2.0 && 2.0 < b2, "{b1} {b2}");
    // roots of -h^3/3 + h^2 + 2B
    for h in [b1, b2] {
        assert!((-h.powi(3) / 3.0 + h * h - 1.0).abs() < 1e-14);
    }
}

#[test]
fn turning_points_collapse_at_center() {
    let b0 = energy_floor(1.0f64, 1.0);
    let (b1, b2) = turning_points(1.0, 1.0, b0 * (1.0 - 1e-10)).unwrap();
    assert!((b1 - 2.0).abs() < 1e-4 && (b2 - 2.0).abs() < 1e-4);
}

#[test]
fn turning_points_sign_changing_symmetric() {
    let (b1, b2) = turning_points(2.0f64, 1.0, 0.1).unwrap();
    assert!(b1 < 0.0 && b2 > 0.0);
    assert_eq!(b1, -b2);
    assert!((b2 - upper_turning_point(2.0, 1.0, 0.1)).abs() < 1e-12);
}

#[test]
fn period_limits() {
    let b0 = energy_floor(1.0f64, 1.0);
    let near_center = period_of_b(1.0, 1.0, b0 * (1.0 - 1e-8)).unwrap();
    assert!((near_center - 2.0 * std::f64::consts::PI).abs() < 1e-4, "{near_center}");
    let near_sep = period_of_b(1.0, 1.0, -1e-6).unwrap();
    assert!(near_sep > 15.0, "{near_sep}");
    // sign-changing family shrinks to zero period as B grows
    let l1 = period_of_b(2.0f64, 1.0, 1e2).unwrap();
    let l2 = period_of_b(2.0f64, 1.0, 1e6).unwrap();
    let l3 = period_of_b(2.0f64, 1.0, 1e10).unwrap();
    assert!(l1 > l2 && l2 > l3 && l3 < 0.05, "{l1} {l2} {l3}");
}

#[test]
fn quadrature_agrees_with_shooting() {
    for &p in &[1.0f64, 2.0, 4.0] {
        let c = 1.0;
        let b0 = energy_floor(p, c);
        for frac in [0.95, 0.8, 0.5, 0.2, 0.05] {
            let b = b0 * frac;
            let lq = period_of_b(p, c, b).unwrap();
            let (_, b2) = turning_points(p, c, b).unwrap();
            let ls = shooting_period(p, c, b2, 1e-3);
            assert!(((lq - ls) / ls).abs() < 1e-6, "p={p} B={b}: {lq} vs {ls}");
        }
    }
}

#[test]
fn period_increases_towards_separatrix() {
    let b0 = energy_floor(1.0f64, 1.0);
    let mut last = 0.0;
    for i in 1..40 {
        let b = b0 * (1.0 - i as f64 / 40.0);
        let l = period_of_b(1.0, 1.0, b).unwrap();
        assert!(l > last, "not increasing at B = {b}");
        last = l;
    }
}

#[test]
fn positive_wave_p1() {
    let w = solve_wave(1.0f64, 1.0, 7.0, Branch::Positive).unwrap();
    let (b1, b2) = w.extrema;
    assert!(0.0 < b1 && b1 < 2.0 && 2.0 < b2);
    assert!(w.residual < 1e-10);
    assert!((wave_residual(&w) - w.residual).abs() < 1e-15);
    let l = period_of_b(1.0, 1.0, w.params.energy).unwrap();
    assert!(((l - 7.0) / 7.0).abs() < 1e-8);
    // matches the energy read off the profile
    let (t1, t2) = turning_points(1.0, 1.0, w.params.energy).unwrap();
    assert!((t2 - b2).abs() < 1e-9 && (t1 - b1).abs() < 1e-9);
    // shooting oracle from the computed maximum
    let ls = shooting_period(1.0, 1.0, b2, 1e-3);
    assert!(((ls - 7.0) / 7.0).abs() < 1e-6);
    // even about x = 0
    let n = w.len();
    for j in 1..n {
        assert!((w.grid[j] - w.grid[n - j]).abs() < 1e-12);
    }
}

#[test]
fn period_at_alpha_has_no_wave() {
    let err = solve_wave(1.0f64, 1.0, 2.0 * std::f64::consts::PI, Branch::Positive).unwrap_err();
    match err {
        Error::NoWaveForPeriod { reason, .. } => assert!(reason.contains("period below α(c)")),
        other => panic!("unexpected {other}"),
    }
    assert!(solve_wave(1.0f64, 1.0, 6.0, Branch::Positive).is_err());
}

#[test]
fn sign_changing_wave_p2() {
    let w = solve_wave(2.0f64, 1.0, 2.0 * std::f64::consts::PI, Branch::SignChanging).unwrap();
    assert!(w.mean().abs() < 1e-10);
    assert!(w.residual < 1e-10);
    assert!(w.params.energy > 0.0);
    let (b1, b2) = w.extrema;
    assert!((b1 + b2).abs() < 1e-9);
    let ls = shooting_period(2.0, 1.0, b2, 1e-3);
    assert!(((ls - 2.0 * std::f64::consts::PI) / ls).abs() < 1e-6);
}

#[test]
fn sign_changing_needs_even_power() {
    assert!(matches!(solve_wave(3.0f64, 1.0, 5.0, Branch::SignChanging), Err(Error::InvalidParams(_))));
}

#[test]
fn translation_quotient() {
    let solver = WaveSolver::<f64>::default();
    let w = solver.solve(2.0, 1.0, 8.0, Branch::Positive).unwrap();
    // start from a shifted, perturbed copy
    let shifted = w.shifted(1.7);
    let guess: Vec<f64> =
        shifted.grid.iter().enumerate().map(|(j, v)| v * (1.0 + 0.01 * (j as f64 * 0.37).sin())).collect();
    let w2 = solver.solve_from_guess(w.params, &guess).unwrap();
    // Both land at the canonical phase, maximum at x = 0.
    let fine = w.resampled(w2.len());
    let gap = fine.iter().zip(&w2.grid).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-8, "{gap}");
    assert!((w2.params.energy - w.params.energy).abs() < 1e-9);
}

#[test]
fn large_period_needs_no_more_than_default_grid() {
    let w = solve_wave(1.0f64, 1.0, 50.0, Branch::Positive).unwrap();
    assert!(w.residual < 1e-10);
    assert!(w.params.energy < 0.0 && w.params.energy > -1e-15);
    let l = PeriodMap::default().period(1.0, 1.0, w.params.energy).unwrap();
    assert!(((l - 50.0) / 50.0).abs() < 1e-8);
}

#[test]
fn constant_equilibrium_wave() {
    let w = wave::PeriodicWave::equilibrium(2.0f64, 1.5, 4.0, 64).unwrap();
    assert_eq!(w.params.branch, Branch::Positive);
    assert!(wave_residual(&w) < 1e-13);
    assert!(WaveParams::new(2.0, 1.5, 4.0, Branch::Positive, energy_floor(2.0, 1.5)).is_ok());
    assert!(alpha(2.0f64, 1.5) > 0.0);
}

#[test]
fn single_precision_wave() {
    let w = solve_wave(1.0f32, 1.0, 8.0, Branch::Positive).unwrap();
    assert!(w.residual < 1e-2);
    let wd = solve_wave(1.0f64, 1.0, 8.0, Branch::Positive).unwrap();
    assert!((w.extrema.1 as f64 - wd.extrema.1).abs() < 1e-3);
}
