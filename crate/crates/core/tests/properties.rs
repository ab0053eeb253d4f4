use gaussfpt::montecarlo::{
    compare_densities, detect_crossings, histogram, simulate_stationary_fpt, Binning, CrossingRule, FptSampleSet,
    SimulationConfig,
};
use gaussfpt::sim::{build_filter, simulate_ensemble, spectral_density_expcos, spectral_factorize, EvenRational};
use gaussfpt::{BoundarySpec, DensityGrid, DensityMethod};
use proptest::prelude::*;

fn small_config(seed: u64, rule: CrossingRule) -> SimulationConfig {
    SimulationConfig {
        paths: 400,
        dt: 0.01,
        horizon: 4.0,
        seed,
        rule,
        threads: Some(2),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn factorization_reproduces_the_spectrum(beta in 0.05f64..3.0, alpha in 0.0f64..3.0) {
        let s = spectral_factorize(&EvenRational::exp_cos(beta, alpha).unwrap()).unwrap();
        for k in 0..200 {
            let w = k as f64 * 0.25;
            let exact = spectral_density_expcos(beta, alpha, w).unwrap();
            prop_assert!((s.density(w) - exact).abs() <= 1e-10 * exact);
        }
    }

    #[test]
    fn filter_has_exact_second_moments(beta in 0.05f64..3.0, alpha in 0.0f64..3.0, dt in 0.001f64..0.2) {
        let s = spectral_factorize(&EvenRational::exp_cos(beta, alpha).unwrap()).unwrap();
        let f = build_filter(&s, dt).unwrap();
        prop_assert!((f.stationary_variance() - 1.0).abs() < 1e-9);
        for k in [1usize, 7, 50] {
            let lag = k as f64 * dt;
            let exact = (-beta * lag).exp() * (alpha * lag).cos();
            prop_assert!((f.lag_autocovariance(k) - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn histogram_mass_accounts_for_every_path(seed in 0u64..1000, alpha in 0.0f64..1.0, bins in 1usize..200) {
        let samples = simulate_stationary_fpt(
            &EvenRational::exp_cos(0.5, alpha).unwrap(),
            0.0,
            &BoundarySpec::soglia(0.5, 0.5).unwrap(),
            &small_config(seed, CrossingRule::Bridge),
        )
        .unwrap();
        let h = histogram(&samples, Binning::Count(bins)).unwrap();
        let n = samples.total() as f64;
        prop_assert!((h.density.total_mass() + samples.censored() as f64 / n - 1.0).abs() < 1e-12);
        prop_assert_eq!(h.counts.iter().sum::<u64>() as usize, samples.crossed());
    }

    #[test]
    fn raising_the_boundary_never_hastens_a_crossing(seed in 0u64..1000, alpha in 0.0f64..1.0, bridge in any::<bool>()) {
        let (low, high) = (BoundarySpec::soglia(0.5, 0.25).unwrap(), BoundarySpec::soglia(0.5, 0.5).unwrap());
        let rule = if bridge { CrossingRule::Bridge } else { CrossingRule::Interpolation };
        let s = spectral_factorize(&EvenRational::exp_cos(0.5, alpha).unwrap()).unwrap();
        let f = build_filter(&s, 0.01).unwrap();
        let e = simulate_ensemble(&f, 0.0, 200, 400, seed, Some(2)).unwrap();
        for k in 0..=400 {
            prop_assert!(high.value(e.time(k)) >= low.value(e.time(k)));
        }
        let (a, b) = (detect_crossings(&e, &low, rule).unwrap(), detect_crossings(&e, &high, rule).unwrap());
        for (x, y) in a.times.iter().zip(&b.times) {
            match (x, y) {
                (Some(x), Some(y)) => prop_assert!(y >= x),
                (None, Some(_)) => prop_assert!(false, "only the higher boundary was crossed"),
                _ => {}
            }
        }
    }

    #[test]
    fn metrics_are_nonnegative_and_vanish_on_self(values in proptest::collection::vec(0.0f64..5.0, 2..60)) {
        let knots: Vec<f64> = (0..values.len()).map(|k| k as f64 * 0.1).collect();
        let g = DensityGrid::new(knots, values.clone(), DensityMethod::Tabulated).unwrap();
        let same = compare_densities(&g, &g).unwrap();
        prop_assert_eq!((same.l1, same.sup, same.ks), (0.0, 0.0, 0.0));
        let shifted: Vec<f64> = values.iter().map(|v| v + 0.5).collect();
        let h = DensityGrid::new(g.knots().to_vec(), shifted, DensityMethod::Tabulated).unwrap();
        let c = compare_densities(&g, &h).unwrap();
        prop_assert!(c.l1 > 0.0 && (c.sup - 0.5).abs() < 1e-12 && c.ks > 0.0);
    }
}

#[test]
fn finer_steps_do_not_miss_crossings() {
    // a differentiable process and a rough one
    let boundary = BoundarySpec::constant(1.0);
    for spectrum in [
        EvenRational::damped_linear(1.0).unwrap(),
        EvenRational::exp_cos(0.5, 0.5).unwrap(),
    ] {
        let fraction = |dt: f64| -> f64 {
            let config = SimulationConfig {
                paths: 20_000,
                dt,
                horizon: 3.0,
                seed: 9,
                rule: CrossingRule::Interpolation,
                threads: None,
            };
            simulate_stationary_fpt(&spectrum, 0.0, &boundary, &config)
                .unwrap()
                .crossing_fraction()
        };
        let (coarse, fine) = (fraction(0.02), fraction(0.01));
        let sigma = (coarse * (1.0 - coarse) / 20_000.0).sqrt();
        assert!(fine >= coarse - 3.0 * sigma, "coarse {coarse}, fine {fine}");
    }
}

#[test]
fn sample_sets_round_trip_through_csv_layout() {
    let s = FptSampleSet::from_times(vec![Some(0.5), None, Some(1.25)], 2.0);
    let csv = s.to_csv();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "path_id,crossing_time,censored");
    assert_eq!(rows[2], "1,,1");
    assert!(rows[1].starts_with("0,5") && rows[1].ends_with(",0"));
}
