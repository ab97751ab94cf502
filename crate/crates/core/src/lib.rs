//! Growth-optimal (Kelly) portfolios on a binomial market, with and without a
//! rolling-strike European put, and the convex mixture of two put-hedged
//! portfolios that stays growth-optimal when the up-factor is misjudged.
//!
//! * [`market`]: believed and realized binomial parameters, put pricing,
//!   the rolling strike and seeded price paths.
//! * [`kelly_core`]: stock/bond Kelly fraction, constrained and unconstrained.
//! * [`kelly_option`]: stock/put/bond Kelly portfolio in the `(g, c)` chart.
//! * [`convex`]: the two-portfolio mixture and its log-sum-exp bounds.
//! * [`simulation`]: Monte Carlo experiments and misspecification sweeps.
//! * [`verify`]: randomised checks of the closed-form identities.

pub mod convex;
pub mod error;
pub mod kelly_core;
pub mod kelly_option;
pub mod market;
pub mod simulation;
pub mod verify;

pub use convex::{jensen_reference, koc_asymptotic_growth, koc_log_wealth, koc_wealth, KocConfig};
pub use error::{KellyError, Result};
pub use kelly_core::{ks_constrained_fraction, ks_growth_rate, ks_optimal_fraction, KsSolution};
pub use kelly_option::{hedge_pivot, ko_growth_rate, ko_optimal_g, KoParams, KoSolution};
pub use market::{MarketParams, Move, OptionContract, PricePath, RealizedMarket};
pub use simulation::{
    convergence_study, misspecification_sweep, run_experiment, ExperimentConfig, OptionTerms,
    StrategySpec, SweepResult, SweepRow,
};
