//! Sharp bounds on average treatment effects when the counterfactual outcome
//! distribution is only known to lie in an ambiguity set around the observed
//! data.
//!
//! ```
//! use drci::{att_bound, Dataset, Model, SensitivityConfig};
//!
//! let data = Dataset::from_arms(&[2.0, 3.0], &[0.0, 1.0, 2.0]).unwrap();
//! let config = SensitivityConfig::default().with_gamma(2.0);
//! let lower = att_bound(&data, Model::Marginal, &config).unwrap();
//! assert!((lower.estimate - 1.0).abs() < 1e-12);
//! ```

pub mod data;
pub mod distributions;
pub mod error;
pub mod extensions;
pub mod lp;
pub mod sensitivity;
pub mod synthetic;

pub use data::{Dataset, StrataCounts, Unit};
pub use distributions::{
    cic_target_cdf, d0, ks, min_shift_ks, shift_grid, GammaRegime, KsMode, ShiftGrid, WeightedEcdf,
};
pub use error::{Error, Result};
pub use extensions::{cic_att_bound, did_att_bound, iv_att_bound, DidTargets};
pub use lp::{solve_lp, LpProblem, LpSolution, LpStatus, Sense};
pub use sensitivity::{
    atc_bound, att_bound, BoundResult, BoundStatus, Direction, Estimand, Model, SensitivityConfig,
};
pub use synthetic::{generate_scenario, run_monte_carlo, true_att, BiasTable, MonteCarloConfig, Scenario};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/box_models.md")]
    mod box_models {}
    #[doc = include_str!("../../../book/src/distributional.md")]
    mod distributional {}
    #[doc = include_str!("../../../book/src/extensions.md")]
    mod extensions {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
}
