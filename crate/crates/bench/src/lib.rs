//! Shared fixtures for the benchmarks.

use kelly_opt::{
    ExperimentConfig, KoParams, MarketParams, OptionTerms, RealizedMarket, StrategySpec,
};

/// `u = 2, d = 1/2, p = 1/2, R = 1.05`.
pub fn market() -> MarketParams {
    MarketParams::new(2.0, 0.5, 0.5, 1.05).expect("valid market")
}

/// Put struck at 110 on a spot of 100.
pub fn ko_params() -> KoParams {
    KoParams::from_strike(&market(), 100.0, 110.0).expect("valid strike")
}

/// KS, two KO hedges and their mixture under a realized up-factor of `u_m`.
pub fn experiment(u_m: f64, steps: usize, paths: usize) -> ExperimentConfig {
    ExperimentConfig {
        believed: market(),
        realized: RealizedMarket::symmetric(u_m).expect("u_m > 1"),
        option: Some(OptionTerms {
            s0: 100.0,
            k0: 110.0,
        }),
        strategies: vec![
            StrategySpec::Ks { f: None },
            StrategySpec::Ko { c: 0.0 },
            StrategySpec::Ko { c: 0.9 },
            StrategySpec::Koc {
                c1: 0.0,
                c2: 0.9,
                a: 0.5,
            },
        ],
        steps,
        paths,
        seed: 42,
    }
}
