use drci::{generate_scenario, run_monte_carlo, true_att, Model, MonteCarloConfig, Scenario};

fn tables(replications: usize) -> Vec<drci::BiasTable> {
    (1..=3)
        .map(|k| {
            let config = MonteCarloConfig {
                replications,
                ..MonteCarloConfig::default()
            };
            run_monte_carlo(&Scenario::reference(k).unwrap(), &config).unwrap()
        })
        .collect()
}

#[test]
fn both_models_are_conservative_and_distributional_less_so() {
    for (k, table) in tables(300).iter().enumerate() {
        for model in [Model::Distributional, Model::Marginal] {
            let biases: Vec<f64> = [2.0, 3.0, 5.0]
                .iter()
                .map(|&g| table.get(model, g).unwrap().bias)
                .collect();
            assert!(biases.iter().all(|&b| b < 0.0), "scenario {}: {model:?} {biases:?}", k + 1);
            assert!(biases.windows(2).all(|w| w[1] < w[0]), "scenario {}: {model:?} {biases:?}", k + 1);
        }
        let dist = table.get(Model::Distributional, 5.0).unwrap().bias;
        let marg = table.get(Model::Marginal, 5.0).unwrap().bias;
        assert!(dist.abs() < marg.abs(), "scenario {}: {dist} vs {marg}", k + 1);
    }
}

#[test]
fn same_seed_same_table() {
    let scenario = Scenario::reference(2).unwrap();
    let config = MonteCarloConfig {
        replications: 40,
        seed: 9,
        ..MonteCarloConfig::default()
    };
    let a = run_monte_carlo(&scenario, &config).unwrap();
    assert_eq!(a, run_monte_carlo(&scenario, &config).unwrap());
    assert_eq!(a.to_csv(), run_monte_carlo(&scenario, &config).unwrap().to_csv());
    let other = MonteCarloConfig { seed: 10, ..config };
    assert_ne!(a, run_monte_carlo(&scenario, &other).unwrap());
}

#[test]
fn generated_samples_follow_the_design() {
    let s = Scenario::new(2.0, 3.0, 0.0).unwrap();
    assert_eq!(true_att(&s), 2.0);
    let data = generate_scenario(&s, 20_000, 3).unwrap();
    assert_eq!(data.n(), 20_000);
    let share = data.n1() as f64 / data.n() as f64;
    assert!((share - 0.2).abs() < 0.02, "treated share {share}");

    // With no heterogeneity the arms differ only by the effect.
    let flat = Scenario::new(0.0, 0.0, 1.0).unwrap();
    let data = generate_scenario(&flat, 20_000, 4).unwrap();
    let gap = data.treated_mean() - data.control_mean();
    assert!(gap.abs() < 0.1, "gap {gap}");
}
