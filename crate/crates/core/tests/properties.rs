use gzk_core::fourier::{resample, shift, Transform};
use gzk_core::instability::{f_of_k, find_k0};
use gzk_core::spectral::{spectrum, Linearization};
use gzk_core::wave::{alpha, energy_floor, period_of_b, solve_wave, turning_points, Branch};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn power() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(4.0)]
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn shift_law_holds(p in power(), factor in 1.2f64..4.0, k in 0.0f64..3.0) {
        let wave = solve_wave(p, 1.0, factor * alpha(p, 1.0), Branch::Positive).unwrap();
        let lin = Linearization::new(&wave, wave.len()).unwrap();
        let f0 = f_of_k(&lin, 0.0).unwrap();
        prop_assert!((f_of_k(&lin, k).unwrap() - f0 - k * k).abs() < 1e-10);
    }

    #[test]
    fn p_and_r_share_their_spectrum(p in power(), factor in 1.2f64..4.0, t in 0.0f64..1.5) {
        let wave = solve_wave(p, 1.0, factor * alpha(p, 1.0), Branch::Positive).unwrap();
        let lin = Linearization::new(&wave, wave.len()).unwrap();
        let k = t * find_k0(&lin).unwrap().k0;
        let r = spectrum(&lin.assemble_r(k), None).unwrap();
        let q = spectrum(&lin.assemble_p(k), Some(r.zero_tol)).unwrap();
        for (a, b) in r.eigenvalues.iter().zip(&q.eigenvalues) {
            prop_assert!((a - b).norm() < 1e-8 * r.max_abs());
        }
        prop_assert_eq!(r.kernel_dim, q.kernel_dim);
    }

    #[test]
    fn solved_waves_meet_their_period(p in power(), c in 0.5f64..3.0, factor in 1.1f64..5.0) {
        let period = factor * alpha(p, c);
        let wave = solve_wave(p, c, period, Branch::Positive).unwrap();
        prop_assert!(wave.residual < 1e-10);
        let l = period_of_b(p, c, wave.params.energy).unwrap();
        prop_assert!((l - period).abs() < 1e-8 * period);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn turning_points_are_roots(p in power(), c in 0.2f64..5.0, frac in 0.01f64..0.99) {
        let b = energy_floor(p, c) * frac;
        let (b1, b2) = turning_points(p, c, b).unwrap();
        prop_assert!(b1 < b2);
        for h in [b1, b2] {
            let g = -2.0 * h.powf(p + 2.0) / ((p + 1.0) * (p + 2.0)) + c * h * h + 2.0 * b;
            prop_assert!(g.abs() < 1e-10 * (c * h * h).max(1.0));
        }
    }

    #[test]
    fn fft_round_trip_and_shift(values in prop::collection::vec(-1.0f64..1.0, 16), dx in -3.0f64..3.0) {
        let tr = Transform::new(values.len());
        let back = tr.inverse(&tr.forward(&values));
        for (a, b) in back.iter().zip(&values) {
            prop_assert!((a - b).abs() < 1e-13);
        }
        // shifting there and back is the identity, apart from the Nyquist mode
        let smooth = resample(&resample(&values, 8), 16);
        let there = shift(&smooth, 2.0, dx);
        let home = shift(&there, 2.0, -dx);
        for (a, b) in home.iter().zip(&smooth) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
