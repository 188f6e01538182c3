use approx::assert_relative_eq;
use proptest::prelude::*;
use realps::diagnostics::{mode_occupancy, projected_chain, ProjectionRates};
use realps::learning::rebalance_levels;
use realps::math::log_sum_exp;
use realps::quadrature::QuadratureGrid;
use realps::record::{Sample, SampleBatch};
use realps::target::{make_gaussian_mixture, GaussianMixtureSpec, Point};
use realps::tilting::log_tilt;
use realps::{TemperatureLadder, TemperingScheme, WarmStartSet};

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, dim)
}

fn centers(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(point(dim), 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translations_compose_and_invert(cs in centers(2), x in point(2)) {
        let ws = WarmStartSet::new(cs.into_iter().map(Point).collect()).unwrap();
        let direct = ws.teleport(0, 2, &x);
        let composed = ws.teleport(1, 2, &ws.teleport(0, 1, &x));
        let back = ws.teleport(1, 0, &ws.teleport(0, 1, &x));
        for d in 0..2 {
            assert_relative_eq!(direct[d], composed[d], epsilon = 1e-9);
            assert_relative_eq!(back[d], x[d], epsilon = 1e-9);
        }
        prop_assert_eq!(ws.teleport(1, 1, &x), x);
    }

    #[test]
    fn tilt_is_translation_equivariant(cs in centers(2), x in point(2), beta in 0.0..50.0f64) {
        let ws = WarmStartSet::new(cs.into_iter().map(Point).collect()).unwrap();
        let y = ws.teleport(0, 2, &x);
        assert_relative_eq!(
            log_tilt(beta, &y, ws.center(2)),
            log_tilt(beta, &x, ws.center(0)),
            epsilon = 1e-9,
            max_relative = 1e-9
        );
    }

    #[test]
    fn log_sum_exp_shifts(v in prop::collection::vec(-700.0..700.0f64, 1..20), c in -100.0..100.0f64) {
        let base = log_sum_exp(v.iter().copied());
        let shifted = log_sum_exp(v.iter().map(|x| x + c));
        assert_relative_eq!(shifted, base + c, epsilon = 1e-9, max_relative = 1e-12);
        prop_assert!(base >= v.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }

    #[test]
    fn mode_occupancy_is_a_distribution(xs in prop::collection::vec(-10.0..10.0f64, 1..200)) {
        let ws = WarmStartSet::new(vec![Point(vec![-3.0]), Point(vec![0.5]), Point(vec![4.0])]).unwrap();
        let mut batch = SampleBatch::new(0);
        batch.samples = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| Sample { t: i as f64, level: 1, x: vec![x], event: None })
            .collect();
        let occ = mode_occupancy(&batch, &ws, 1).unwrap();
        assert_relative_eq!(occ.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        prop_assert!(occ.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn rebalancing_is_scale_free(counts in prop::collection::vec(1usize..1000, 2..6), c in 0.01..100.0f64) {
        let r: Vec<f64> = (0..counts.len()).map(|i| 1.0 + i as f64).collect();
        let scaled: Vec<f64> = r.iter().map(|v| v * c).collect();
        let a = rebalance_levels(&counts, &r).unwrap();
        let b = rebalance_levels(&counts, &scaled).unwrap();
        let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        for i in 0..a.len() {
            assert_relative_eq!(a[i] / sa, b[i] / sb, max_relative = 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn projected_chain_rows_are_stochastic(
        sep in 2.0..8.0f64,
        var in 0.3..3.0f64,
        b0 in 2.0..20.0f64,
        frac in 0.05..0.9f64,
    ) {
        let target = make_gaussian_mixture(&GaussianMixtureSpec {
            means: vec![vec![-sep], vec![sep]],
            covariances: vec![vec![vec![1.0]], vec![vec![var]]],
            weights: vec![0.5, 0.5],
        })
        .unwrap();
        let scheme = TemperingScheme::uniform(
            TemperatureLadder::new(vec![b0, b0 * frac, 0.0]).unwrap(),
            WarmStartSet::new(target.component_means()).unwrap(),
        );
        let grid = QuadratureGrid::cube(1, -30.0, 30.0, 1201).unwrap();
        let rates = ProjectionRates { lambda_swap: 1.0, gamma_leap: 0.5 };
        let chain = projected_chain(&scheme, &target, &grid, rates).unwrap();
        let p = &chain.transition;
        for i in 0..p.nrows() {
            assert_relative_eq!(p.row(i).sum(), 1.0, epsilon = 1e-9);
            prop_assert!(p.row(i).iter().all(|v| *v >= -1e-15));
        }
        assert_relative_eq!(chain.stationary.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }
}
