use g0stat::distances::{distance, distances, DistanceKind, EvalMethod};
use g0stat::estimation::fit_ml;
use g0stat::exec::Execution;
use g0stat::image::{window_indices, Raster, RegionLabel};
use g0stat::model::{g0_log_pdf, sample_g0, G0Params};
use g0stat::montecarlo::{run_experiment, ScenarioSpec};
use g0stat::special::{digamma, ln_gamma, reg_upper_gamma};
use g0stat::testing::p_value;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = G0Params> {
    (1.2f64..12.0, 0.2f64..20.0, 1.0f64..8.0).prop_map(|(a, g, l)| G0Params::new(-a, g, l).unwrap())
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_and_digamma_recurrences(x in 0.05f64..60.0) {
        prop_assert!(close(ln_gamma(x + 1.0).unwrap(), ln_gamma(x).unwrap() + x.ln(), 1e-12)
            || (ln_gamma(x + 1.0).unwrap() - ln_gamma(x).unwrap() - x.ln()).abs() < 1e-13);
        prop_assert!((digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x).abs() < 1e-12 * (1.0 + 1.0 / x));
    }

    #[test]
    fn upper_gamma_with_unit_shape_is_exponential(x in 0.0f64..80.0) {
        prop_assert!(close(reg_upper_gamma(1.0, x).unwrap(), (-x).exp(), 1e-12));
    }

    #[test]
    fn log_density_changes_by_log_jacobian_under_scaling(p in params(), z in 0.01f64..50.0, c in 0.01f64..100.0) {
        let lhs = g0_log_pdf(c * z, &p.scaled(c).unwrap()).unwrap();
        let rhs = g0_log_pdf(z, &p).unwrap() - c.ln();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn distances_are_symmetric_nonnegative_and_scale_free(p1 in params(), p2 in params(), c in 0.01f64..100.0) {
        let kinds = DistanceKind::all(0.95);
        let d12 = distances(&kinds, &p1, &p2, EvalMethod::Auto);
        let d21 = distances(&kinds, &p2, &p1, EvalMethod::Auto);
        let dc = distances(&kinds, &p1.scaled(c).unwrap(), &p2.scaled(c).unwrap(), EvalMethod::Auto);
        for ((a, b), s) in d12.iter().zip(&d21).zip(&dc) {
            let (a, b, s) = (*a.as_ref().unwrap(), *b.as_ref().unwrap(), *s.as_ref().unwrap());
            prop_assert!(a >= 0.0);
            prop_assert!(close(a, b, 1e-7));
            prop_assert!(close(a, s, 1e-7));
        }
    }

    #[test]
    fn distance_identities(p1 in params(), p2 in params()) {
        let kinds = [DistanceKind::Hellinger, DistanceKind::Bhattacharyya, DistanceKind::Triangular, DistanceKind::HarmonicMean];
        let d: Vec<f64> = distances(&kinds, &p1, &p2, EvalMethod::Auto).into_iter().map(|r| r.unwrap()).collect();
        prop_assert!((d[1] + (1.0 - d[0]).ln()).abs() < 1e-10);
        prop_assert!((d[3] + (1.0 - d[2] / 2.0).ln()).abs() < 1e-10);
        prop_assert!(d[0] <= 1.0 && d[2] <= 2.0);
    }

    #[test]
    fn identical_laws_are_at_distance_zero(p in params()) {
        for kind in DistanceKind::all(0.95) {
            prop_assert_eq!(distance(kind, &p, &p, EvalMethod::Auto).unwrap(), 0.0);
        }
    }

    #[test]
    fn p_values_are_probabilities_and_decreasing(s in 0.0f64..200.0, ds in 0.001f64..10.0) {
        let (p, q) = (p_value(s, 2).unwrap(), p_value(s + ds, 2).unwrap());
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(q < p || p == 0.0);
    }

    #[test]
    fn window_partition_is_disjoint_and_inside(h in 1usize..40, w in 1usize..40, r0 in 0usize..10, c0 in 0usize..10, side in 1usize..9) {
        let raster = Raster::new(50, 50, 1.0, vec![1.0; 2500]).unwrap();
        let region = RegionLabel { name: "a".into(), row0: r0, col0: c0, height: h, width: w };
        match window_indices(&raster, &region, side) {
            Ok(windows) => {
                prop_assert_eq!(windows.len(), (h / side) * (w / side));
                let mut seen = std::collections::HashSet::new();
                for win in &windows {
                    prop_assert_eq!(win.len(), side * side);
                    for &i in win {
                        prop_assert!(seen.insert(i));
                        let (row, col) = (i / 50, i % 50);
                        prop_assert!(row >= r0 && row < r0 + h && col >= c0 && col < c0 + w);
                    }
                }
            }
            Err(_) => prop_assert!(h < side || w < side),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fits_are_scale_equivariant(p in params(), seed in 0u64..1000, c in prop::sample::select(vec![0.5, 10.0])) {
        let s = sample_g0(&p, 400, seed).unwrap();
        let f = fit_ml(&s).unwrap();
        let fc = fit_ml(&s.scaled(c).unwrap()).unwrap();
        prop_assume!(f.converged && fc.converged && f.params.alpha() > -40.0);
        prop_assert!((f.params.alpha() - fc.params.alpha()).abs() <= 1e-4 * (1.0 + f.params.alpha().abs()));
        prop_assert!((f.params.gamma() * c - fc.params.gamma()).abs() <= 1e-4 * c * (1.0 + f.params.gamma()));
    }

    #[test]
    fn experiments_are_deterministic_and_nested(seed in any::<u64>(), ratio in 1.2f64..4.0) {
        let spec = ScenarioSpec::equal_alpha(-3.0, ratio, 1.0, seed).unwrap().with_reps(40, None);
        let kinds = DistanceKind::all(0.95);
        let a = run_experiment(&spec, &kinds, Execution::Parallel).unwrap();
        let b = run_experiment(&spec, &kinds, Execution::Sequential).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.valid_reps <= a.attempted_reps && a.attempted_reps <= 40);
        for k in kinds {
            prop_assert!(a.cell(k, 0.01).unwrap().rejections <= a.cell(k, 0.05).unwrap().rejections);
        }
    }
}
