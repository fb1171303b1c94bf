use gzk_core::instability::*;
use gzk_core::spectral::{eigenvector, spectrum, Linearization};
use gzk_core::wave::{alpha, solve_wave, Branch, PeriodicWave};
use gzk_core::Error;
use nalgebra::DVector;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn positive(p: f64, factor: f64) -> PeriodicWave<f64> {
    solve_wave(p, 1.0, factor * alpha(p, 1.0), Branch::Positive).unwrap()
}

fn lin(wave: &PeriodicWave<f64>) -> Linearization<f64> {
    Linearization::new(wave, wave.len()).unwrap()
}

#[test]
fn f_obeys_the_shift_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lin = lin(&positive(2.0, 2.0));
    let f0 = f_of_k(&lin, 0.0).unwrap();
    assert!(f0 < 0.0);
    for _ in 0..10 {
        let k: f64 = rng.random_range(0.0..3.0);
        assert!((f_of_k(&lin, k).unwrap() - f0 - k * k).abs() < 1e-10);
    }
}

#[test]
fn constant_profile_at_resonance_has_zero_f() {
    let wave = PeriodicWave::equilibrium(1.0, 1.0, 2.0 * PI, 32).unwrap();
    let lin = lin(&wave);
    assert!(f_of_k(&lin, 0.0).unwrap().abs() < 1e-12);
    assert!(matches!(find_k0(&lin), Err(Error::NotApplicable(_))));
}

#[test]
fn stable_constant_profile_has_no_cutoff() {
    // (2 pi / 2)^2 > p c, so QL is positive definite
    let wave = PeriodicWave::equilibrium(1.0, 1.0, 2.0, 32).unwrap();
    let lin = lin(&wave);
    assert!(f_of_k(&lin, 0.0).unwrap() > 0.0);
    assert!(matches!(find_k0(&lin), Err(Error::NotApplicable(_))));
}

#[test]
fn cutoff_is_a_simple_root() {
    for p in [1.0, 2.0, 4.0] {
        for factor in [1.2, 2.0, 4.0] {
            let lin = lin(&positive(p, factor));
            let cut = find_k0(&lin).unwrap();
            assert_eq!(cut.k0, (-f_of_k(&lin, 0.0).unwrap()).sqrt());
            assert!(cut.f_at_k0.abs() < 1e-8 * cut.scale);
            assert_eq!((cut.kernel_r, cut.kernel_p), (1, 1));
            assert!(cut.gap > 0.0);
            for t in [0.0, 0.3, 0.9, 0.99] {
                assert!(f_of_k(&lin, t * cut.k0).unwrap() < 0.0);
            }
            for t in [1.01, 1.5, 2.0] {
                assert!(f_of_k(&lin, t * cut.k0).unwrap() > 0.0);
            }
        }
    }
}

#[test]
fn transverse_spectrum_across_the_cutoff() {
    let lin = lin(&positive(1.0, 2.0));
    let k0 = find_k0(&lin).unwrap().k0;
    let scale = lin.spectral_scale().unwrap();
    let at_zero = transverse_spectrum(&lin, 0.0).unwrap();
    assert!(at_zero.eigenvalues.iter().any(|z| z.norm() <= at_zero.zero_tol));
    let below = transverse_spectrum(&lin, 0.9 * k0).unwrap();
    let nu = below.rightmost();
    assert!(nu.re > 1e-4 * scale && nu.im.abs() < 1e-8 * scale);
    assert!(below.eigenvalues.iter().any(|z| (z + nu).norm() < 1e-8 * scale));
    for t in [1.1, 1.5, 2.0] {
        assert!(transverse_spectrum(&lin, t * k0).unwrap().max_re() < 1e-6 * scale);
    }
}

#[test]
fn eigenpairs_satisfy_the_generalized_problem() {
    let wave = positive(2.0, 2.0);
    let lin = lin(&wave);
    let scale = lin.spectral_scale().unwrap();
    let k0 = find_k0(&lin).unwrap().k0;
    for k in [0.2 * k0, 0.7 * k0, 1.3 * k0] {
        let op = lin.assemble_transverse(k);
        let report = spectrum(&op, None).unwrap();
        for &lambda in report.eigenvalues.iter().rev().take(6) {
            if lambda.norm() <= report.zero_tol {
                continue;
            }
            let w = eigenvector(&op, lambda).unwrap();
            assert!(generalized_check(&lin, k, lambda, &w, scale).is_ok(), "k = {k}, {lambda}");
        }
    }
    // kernel case: QL phi' = 0
    let dphi = lin.zero_mean.analyze(&wave.derivative());
    let w = dphi.map(|x| Complex::new(x, 0.0));
    assert!(generalized_check(&lin, 0.0, Complex::new(0.0, 0.0), &w, scale).is_ok());
    // a generic vector is not an eigenvector
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v = DVector::from_fn(lin.zero_mean.dim(), |_, _| Complex::new(rng.random_range(-1.0..1.0), 0.0));
    assert!(matches!(generalized_check(&lin, 0.5, Complex::new(1.0, 0.0), &v, scale), Err(Error::Mismatch { .. })));
}

#[test]
fn growth_curve_invariants() {
    for p in [1.0, 2.0, 4.0] {
        let lin = lin(&positive(p, 2.0));
        let k0 = find_k0(&lin).unwrap().k0;
        let scale = lin.spectral_scale().unwrap();
        let ks = KGrid::default().samples(k0);
        assert_eq!(ks.len(), 53);
        let g = growth_curve(&lin, k0, &ks).unwrap();
        assert!(g.max_below_cutoff() > 1e-4 * scale);
        assert!(g.max_beyond_cutoff().unwrap() <= 1e-6 * scale);
        assert!(g.k_at_max > 0.0 && g.k_at_max < k0);
        // the unstable branch closes up at the cutoff
        let nearest = g.k_samples.iter().position(|&k| k == k0 * (1.0 - 1e-4)).unwrap();
        assert!(g.max_re_lambda[nearest] < 0.05 * g.lambda_at_max.re);
        for k in [0.3 * k0, 0.8 * k0] {
            let r = transverse_spectrum(&lin, k).unwrap();
            for z in &r.eigenvalues {
                for image in [z.conj(), -z] {
                    let d = r.eigenvalues.iter().map(|w| (w - image).norm()).fold(f64::MAX, f64::min);
                    assert!(d < 1e-8 * r.max_abs());
                }
            }
        }
    }
}

#[test]
fn evolution_from_the_cutoff_kernel_grows_at_the_eigenvalue_rate() {
    let wave = positive(2.0, 2.0);
    let lin = lin(&wave);
    let k0 = find_k0(&lin).unwrap().k0;
    let r = spectrum(&lin.assemble_r(k0), None).unwrap();
    let kernel = r.eigvectors.as_ref().unwrap().column(0).into_owned();
    let mut w0 = lin.zero_mean.synthesize(&kernel);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bump = DVector::from_fn(lin.zero_mean.dim(), |_, _| rng.random_range(-1e-3..1e-3));
    for (a, b) in w0.iter_mut().zip(lin.zero_mean.synthesize(&bump)) {
        *a += b;
    }
    let k = 0.8 * k0;
    let expected = transverse_spectrum(&lin, k).unwrap().max_re();
    assert!(expected > 1e-3);
    let ev = evolve_linearized(&lin, k, &w0, default_horizon(expected), None).unwrap();
    assert!((ev.rate - expected).abs() < 0.02 * expected, "{} vs {expected}", ev.rate);
}

#[test]
fn evolution_of_an_eigenvector_is_exponential() {
    let lin = lin(&positive(4.0, 2.0));
    let k0 = find_k0(&lin).unwrap().k0;
    let (lambda, mode) = growing_mode(&lin, 0.5 * k0).unwrap();
    let ev = evolve_linearized(&lin, 0.5 * k0, &mode, default_horizon(lambda.re), None).unwrap();
    assert!((ev.rate - lambda.re).abs() < 0.01 * lambda.re);
    assert_eq!(ev.times.len(), ev.steps + 1);
}

#[test]
fn evolution_beyond_the_cutoff_does_not_grow() {
    let lin = lin(&positive(1.0, 2.0));
    let k0 = find_k0(&lin).unwrap().k0;
    // smooth data: the conserved energy is (R(k) w, w), so the L^2 norm of
    // rough data can swing by the condition number of R(k)
    let x = |j: usize| 2.0 * PI * j as f64 / lin.n as f64;
    let w0: Vec<f64> = (0..lin.n).map(|j| x(j).cos() + 0.5 * (2.0 * x(j)).sin()).collect();
    let ev = evolve_linearized(&lin, 1.5 * k0, &w0, 400.0, None).unwrap();
    assert!(ev.rate.abs() < 1e-3, "rate {}", ev.rate);
}

#[test]
fn evolution_rejects_bad_input() {
    let lin = lin(&positive(1.0, 2.0));
    let w0 = vec![1.0; lin.n];
    assert!(matches!(evolve_linearized(&lin, 0.1, &w0, 1.0, None), Err(Error::InvalidParams(_))));
    let (_, mode) = growing_mode(&lin, 0.1).unwrap();
    let dt = 2.0 * evolution_dt_bound(&lin);
    assert!(matches!(evolve_linearized(&lin, 0.1, &mode, 1.0, Some(dt)), Err(Error::IntegratorStability { .. })));
}

#[test]
fn positive_waves_are_unstable_by_theorem() {
    let settings = VerdictSettings::default();
    for p in [1.0, 2.0, 4.0] {
        let wave = positive(p, 2.0);
        let v = verdict(&wave, wave.len(), &settings).unwrap();
        assert_eq!(v.verdict, Verdict::UnstableByTheorem, "p = {p}");
        assert_eq!(v.criterion, Criterion::PositiveWave);
        assert_eq!(v.n_r0, 1);
        assert!(v.k0 > 0.0);
        assert!(v.dmass_dc.is_none());
    }
}

#[test]
fn sign_changing_verdicts_follow_the_threshold() {
    let settings = VerdictSettings::default();
    let below = solve_wave(2.0, 1.0, 2.0 * PI, Branch::SignChanging).unwrap();
    let v = verdict(&below, below.len(), &settings).unwrap();
    assert_eq!(v.verdict, Verdict::UnstableByTheorem);
    assert_eq!(v.criterion, Criterion::SignChangingSimple);
    let above = solve_wave(2.0, 1.6, 2.0 * PI, Branch::SignChanging).unwrap();
    let v = verdict(&above, above.len(), &settings).unwrap();
    assert_ne!(v.verdict, Verdict::UnstableByTheorem);
    assert_eq!(v.criterion, Criterion::K0Scan);
    assert_eq!(v.n_r0, 2);
    assert!(v.dmass_dc.unwrap() > 0.0);
    assert_eq!(v.growth.k_samples[0], 0.0);
}
