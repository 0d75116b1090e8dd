use langevin_bounce::analytic::{self, ModelParams};
use langevin_bounce::ladder::LadderTable;
use langevin_bounce::path::{self, PathConfig};
use langevin_bounce::skeleton::{self, ChainConfig};
use langevin_bounce::{rng, stats};
use proptest::prelude::*;

fn quick_path(seed: u64) -> PathConfig {
    PathConfig {
        dt: 1e-3,
        horizon: 2.0,
        seed,
        ..PathConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn k_solves_moment_equation(c in 0.01f64..0.16) {
        let k = analytic::k_of_c(c).unwrap();
        prop_assert!(k > 0.0 && k < 0.25);
        prop_assert!(analytic::k_residual(c, k).abs() < 1e-10);
        prop_assert!((analytic::c_of_k(k) - c).abs() < 1e-9 * c.max(1e-3));
    }

    #[test]
    fn k_decreases_in_c(c in 0.01f64..0.15, dc in 1e-3f64..0.01) {
        prop_assert!(analytic::k_of_c(c + dc).unwrap() < analytic::k_of_c(c).unwrap());
    }

    #[test]
    fn chains_are_reproducible_and_ordered(seed in any::<u64>(), u0 in 1e-3f64..1e3) {
        let cfg = ChainConfig::default();
        let c = ModelParams::reference().c;
        let a = skeleton::simulate_chain(&mut rng::stream(seed, 0), c, u0, &cfg).unwrap();
        let b = skeleton::simulate_chain(&mut rng::stream(seed, 0), c, u0, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.times.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(a.speeds.iter().all(|&v| v > 0.0));
        prop_assert!(a.truncated_weight < cfg.truncation_epsilon || a.cap_reached);
    }

    #[test]
    fn chain_scales_with_start_speed(seed in any::<u64>(), a in 0.1f64..10.0) {
        let cfg = ChainConfig::default();
        let c = ModelParams::reference().c;
        let one = skeleton::simulate_chain(&mut rng::stream(seed, 0), c, 1.0, &cfg).unwrap();
        let scaled = skeleton::simulate_chain(&mut rng::stream(seed, 0), c, a, &cfg).unwrap();
        prop_assert_eq!(one.speeds.len(), scaled.speeds.len());
        for (s, t) in one.times.iter().zip(&scaled.times) {
            prop_assert!((a * a * s - t).abs() <= 1e-9 * t.abs().max(1e-300));
        }
    }

    #[test]
    fn paths_stay_above_the_wall(seed in any::<u64>(), x0 in 0.0f64..2.0, u0 in -2.0f64..2.0) {
        prop_assume!(x0 > 0.0 || u0 > 0.0);
        let c = ModelParams::reference().c;
        let cfg = quick_path(seed);
        let p = path::integrate_sor(&mut rng::stream(seed, 0), c, x0, u0, &cfg).unwrap();
        prop_assert!(p.x.iter().all(|&x| x >= -1e-12));
        for b in &p.bounces {
            prop_assert!(b.v_in < 0.0);
            prop_assert!((b.v_out + c * b.v_in).abs() <= 1e-12 * b.v_in.abs());
        }
        prop_assert_eq!(path::reconstruct_w(&p), p.w.clone());
        prop_assert!(p.w_jump_fraction(6.0) < 1e-6);
    }

    #[test]
    fn ks_statistic_in_unit_interval(xs in prop::collection::vec(-5.0f64..5.0, 20..200)) {
        let r = stats::ks_test(&xs, stats::normal_cdf).unwrap();
        prop_assert!(r.statistic >= 0.0 && r.statistic <= 1.0);
        prop_assert!(r.p_value >= 0.0 && r.p_value <= 1.0);
    }

    #[test]
    fn median_of_means_of_constant(x in -1e6f64..1e6, n in 32usize..500) {
        let m = stats::median_of_means(&vec![x; n], stats::MOM_BLOCKS);
        prop_assert!((m - x).abs() <= 1e-9 * x.abs().max(1.0));
    }

    #[test]
    fn degenerate_table_has_uniform_overshoot(h in 0.1f64..10.0, seed in any::<u64>()) {
        let table = LadderTable::from_increments(vec![h; 64]).unwrap();
        let mut r = rng::stream(seed, 0);
        for _ in 0..50 {
            prop_assert_eq!(table.sample_size_biased(&mut r), h);
            let o = table.sample_overshoot(&mut r);
            prop_assert!((0.0..=h).contains(&o));
        }
    }
}
