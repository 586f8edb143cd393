use drci::sensitivity::{shift_feasibility, tv_att_bound, tv_att_bound_lp, MarginalFloor};
use drci::{
    atc_bound, att_bound, ks, min_shift_ks, shift_grid, Dataset, Direction, KsMode, Model, SensitivityConfig,
    WeightedEcdf,
};
use drci::distributions::{shifted_ks_exact, shifted_ks_grid};
use proptest::collection::vec;
use proptest::prelude::*;

fn outcomes(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-5.0f64..5.0, 1..=max_len)
}

/// Outcomes on a coarse lattice, so ties and shared atoms are common.
fn lattice(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    vec((0i32..8).prop_map(|k| k as f64 * 0.5), 1..=max_len)
}

fn weighted() -> impl Strategy<Value = WeightedEcdf> {
    vec((0i32..10, 0.0f64..1.0), 1..8).prop_filter_map("positive mass", |pairs| {
        let (v, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().map(|(a, b)| (a as f64, b)).unzip();
        WeightedEcdf::new(&v, &w).ok()
    })
}

fn arms() -> impl Strategy<Value = Dataset> {
    (lattice(7), lattice(7)).prop_map(|(t, c)| Dataset::from_arms(&t, &c).unwrap())
}

fn config() -> impl Strategy<Value = SensitivityConfig> {
    (1.0f64..6.0, 0.0f64..1.0, 1usize..6, 0.0f64..1.0, any::<bool>()).prop_map(|(g, d, m, l, exact)| {
        SensitivityConfig::default()
            .with_gamma(g)
            .with_delta(d)
            .with_m(m)
            .with_lambda_tv(l)
            .with_ks_mode(if exact { KsMode::ExactAtoms } else { KsMode::Grid })
    })
}

const MODELS: [Model; 3] = [Model::Marginal, Model::Tv, Model::Distributional];

proptest! {
    #[test]
    fn ecdf_is_a_right_continuous_cdf(f in weighted(), y in -1.0f64..11.0, p in 0.001f64..1.0) {
        prop_assert!((f.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(f.atoms().windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(f.cdf(f.max()), 1.0);
        prop_assert_eq!(f.cdf(f.min() - 1e-9), 0.0);
        prop_assert!(f.cdf(y) <= f.cdf(y + 0.25));
        for &a in f.atoms() {
            prop_assert!((f.cdf(a) - f.cdf(a - 1e-9) - f.mass_at(a)).abs() < 1e-12);
        }
        let q = f.quantile(p);
        prop_assert!(f.cdf(q) >= p - 1e-12);
        prop_assert!(f.cdf(q - 1e-9) < p);
    }

    #[test]
    fn ks_is_a_symmetric_distance(f in weighted(), g in weighted()) {
        let d = ks(&f, &g);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks(&g, &f));
        prop_assert_eq!(ks(&f, &f), 0.0);
    }

    #[test]
    fn exact_shift_ks_dominates_grid(f in outcomes(8), g in outcomes(8), m in 1usize..8) {
        let pooled: Vec<f64> = f.iter().chain(&g).copied().collect();
        let grid = shift_grid(&pooled, m).unwrap();
        let (f, g) = (WeightedEcdf::uniform(&f).unwrap(), WeightedEcdf::uniform(&g).unwrap());
        for (j, &c) in grid.shifts.iter().enumerate() {
            prop_assert!(shifted_ks_exact(&f, &g, c) >= shifted_ks_grid(&f, &g, &grid, j) - 1e-12);
        }
        let (exact, _) = min_shift_ks(&f, &g, &grid, KsMode::ExactAtoms);
        let (coarse, _) = min_shift_ks(&f, &g, &grid, KsMode::Grid);
        prop_assert!(exact >= coarse - 1e-12);
    }

    #[test]
    fn location_shift_is_recovered(f in lattice(6), s in -6i32..=6) {
        let c = s as f64 * 0.5;
        let g: Vec<f64> = f.iter().map(|v| v + c).collect();
        let pooled: Vec<f64> = f.iter().chain(&g).copied().collect();
        let lo = pooled.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(hi > lo);
        let grid = shift_grid(&pooled, ((hi - lo) / 0.5) as usize).unwrap();
        let (fe, ge) = (WeightedEcdf::uniform(&f).unwrap(), WeightedEcdf::uniform(&g).unwrap());
        let (d, shift) = min_shift_ks(&fe, &ge, &grid, KsMode::ExactAtoms);
        prop_assert_eq!((d, shift), (0.0, c));
    }

    #[test]
    fn bounds_are_ordered_and_weights_valid(data in arms(), cfg in config()) {
        let n0 = data.n0() as f64;
        for model in MODELS {
            let lo = att_bound(&data, model, &cfg).unwrap();
            let hi = att_bound(&data, model, &cfg.clone().with_direction(Direction::Upper)).unwrap();
            prop_assert_eq!(lo.is_optimal(), hi.is_optimal());
            if !lo.is_optimal() {
                continue;
            }
            prop_assert!(lo.estimate <= hi.estimate + 1e-9, "{:?}", model);
            for r in [&lo, &hi] {
                let w = r.weight_vec();
                prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(w.iter().all(|&v| v >= -1e-12));
                if model != Model::Tv {
                    prop_assert!(w.iter().all(|&v| v <= cfg.gamma / n0 + 1e-9));
                }
                let implied = data.treated_mean() - r.counterfactual_mean;
                prop_assert!((implied - r.estimate).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn atc_is_att_with_arms_swapped(data in arms(), cfg in config()) {
        for model in MODELS {
            let atc = atc_bound(&data, model, &cfg).unwrap();
            let flipped = att_bound(&data.swap_treatment(), model, &cfg.clone().with_direction(Direction::Upper)).unwrap();
            prop_assert_eq!(atc.is_optimal(), flipped.is_optimal());
            if atc.is_optimal() {
                prop_assert!((atc.estimate + flipped.estimate).abs() < 1e-9, "{:?}", model);
            }
        }
    }

    #[test]
    fn feasibility_follows_min_ks(data in arms(), cfg in config()) {
        let outcomes = shift_feasibility(&data, &cfg).unwrap();
        let r = att_bound(&data, Model::Distributional, &cfg).unwrap();
        prop_assert_eq!(r.is_optimal(), outcomes.iter().any(|o| o.feasible));
        for o in &outcomes {
            prop_assert!(o.min_ks <= 1.0 + 1e-12);
            if o.min_ks < cfg.delta - 1e-9 {
                prop_assert!(o.feasible);
            }
            if o.min_ks > cfg.delta + 1e-9 {
                prop_assert!(!o.feasible);
            }
        }
        let threshold = outcomes.iter().map(|o| o.min_ks).fold(f64::INFINITY, f64::min);
        let above = att_bound(&data, Model::Distributional, &cfg.clone().with_delta((threshold + 1e-6).min(1.0))).unwrap();
        prop_assert!(above.is_optimal());
        if threshold > 1e-6 {
            let below = att_bound(&data, Model::Distributional, &cfg.clone().with_delta(threshold - 1e-6)).unwrap();
            prop_assert!(!below.is_optimal());
        }
    }

    #[test]
    fn distributional_nests_marginal_at_full_delta(data in arms(), gamma in 1.0f64..6.0) {
        for floor in [MarginalFloor::Zero, MarginalFloor::Reciprocal] {
            let cfg = SensitivityConfig::default().with_gamma(gamma).with_delta(1.0).with_m(4).with_marginal_floor(floor);
            let dist = att_bound(&data, Model::Distributional, &cfg).unwrap();
            let marg = att_bound(&data, Model::Marginal, &cfg).unwrap();
            prop_assert!(dist.estimate <= marg.estimate + 1e-9);
        }
    }

    #[test]
    fn tv_closed_form_matches_lp(data in arms(), lambda in 0.0f64..1.0) {
        for dir in [Direction::Lower, Direction::Upper] {
            let a = tv_att_bound(&data, lambda, dir).unwrap();
            let b = tv_att_bound_lp(&data, lambda, dir).unwrap();
            prop_assert!((a.estimate - b.estimate).abs() < 1e-9);
        }
    }
}
