//! Monte Carlo engine for KS, KO and KOc wealth under possibly misspecified
//! up/down factors.
//!
//! Strategy weights always come from the believed market; the simulated stock
//! moves by the realized factors. Path `i` of an experiment is drawn from
//! stream `i` of the generator keyed by the experiment seed, so paths can be
//! simulated in any order and on any number of threads. Aggregation walks
//! the paths in index order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::{koc_log_wealth, KocConfig};
use crate::error::{KellyError, Result};
use crate::kelly_core::{ks_optimal_fraction, ks_payoff};
use crate::kelly_option::{hedge_pivot, ko_optimal_g, ko_realized_payoff, KoParams};
use crate::market::{
    generate_path_stream, MarketParams, OptionContract, PricePath, RealizedMarket,
};

/// Spot and strike of the put; the premium is priced from the believed market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionTerms {
    pub s0: f64,
    pub k0: f64,
}

/// Strategy descriptor as it appears in a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StrategySpec {
    /// Constant stock fraction; `None` means the Kelly-optimal `f*`.
    Ks {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f: Option<f64>,
    },
    /// Kelly with option at hedge `c`, option fraction `g*(c)`.
    Ko { c: f64 },
    /// Mixture `a KO(c1) + (1-a) KO(c2)`.
    Koc { c1: f64, c2: f64, a: f64 },
    /// Everything in the bond.
    Bond,
    /// Everything in the stock.
    Stock,
}

impl StrategySpec {
    pub fn label(&self) -> String {
        match self {
            StrategySpec::Ks { f: None } => "KS".to_string(),
            StrategySpec::Ks { f: Some(f) } => format!("KS(f={f})"),
            StrategySpec::Ko { c } => format!("KO(c={c})"),
            StrategySpec::Koc { c1, c2, a } => format!("KOc(c1={c1};c2={c2};a={a})"),
            StrategySpec::Bond => "Bond".to_string(),
            StrategySpec::Stock => "Stock".to_string(),
        }
    }
}

/// One Monte Carlo experiment: `paths` independent paths of `steps` periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub believed: MarketParams,
    pub realized: RealizedMarket,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option: Option<OptionTerms>,
    pub strategies: Vec<StrategySpec>,
    /// Periods per path (`n`).
    pub steps: usize,
    /// Number of paths (`N`).
    pub paths: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.paths == 0 {
            return Err(KellyError::Config(format!(
                "steps and paths must be at least 1, got steps={}, paths={}",
                self.steps, self.paths
            )));
        }
        if self.strategies.is_empty() {
            return Err(KellyError::Config("no strategies configured".into()));
        }
        self.ko_params()?;
        for s in &self.strategies {
            ResolvedStrategy::resolve(self, s)?;
        }
        Ok(())
    }

    /// Option parameters on the believed market, if an option is configured.
    pub fn ko_params(&self) -> Result<Option<KoParams>> {
        self.option
            .map(|t| {
                let contract = OptionContract::new(&self.believed, t.s0, t.k0)?;
                Ok(KoParams::new(&self.believed, &contract))
            })
            .transpose()
    }

    /// Non-fatal remarks, e.g. a KOc whose hedges do not straddle `ĉ`.
    pub fn warnings(&self) -> Vec<String> {
        let Ok(Some(ko)) = self.ko_params() else {
            return Vec::new();
        };
        let c_hat = hedge_pivot(&ko);
        self.strategies
            .iter()
            .filter_map(|s| match *s {
                StrategySpec::Koc { c1, c2, a } => {
                    let cfg = KocConfig { c1, c2, a };
                    (!cfg.straddles(c_hat)).then(|| {
                        format!(
                            "{}: hedges do not satisfy c1 < ĉ={c_hat:.6} < c2",
                            s.label()
                        )
                    })
                }
                _ => None,
            })
            .collect()
    }

    fn with_realized(&self, realized: RealizedMarket) -> Self {
        ExperimentConfig {
            realized,
            ..self.clone()
        }
    }
}

/// A constant-weight portfolio resolved against the believed market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Portfolio {
    /// Stock fraction `f`, rest in the bond.
    Fraction { f: f64, r: f64 },
    /// Option fraction `g` at hedge `c`.
    Option { g: f64, c: f64, ko: KoParams },
}

impl Portfolio {
    /// One-period relative payoff when the stock moves by `x`.
    pub fn multiplier(&self, x: f64) -> f64 {
        match self {
            Portfolio::Fraction { f, r } => ks_payoff(*f, x, *r),
            Portfolio::Option { g, c, ko } => ko_realized_payoff(*g, *c, x, ko),
        }
    }

    fn ko(c: f64, ko: &KoParams) -> Result<Self> {
        let sol = ko_optimal_g(c, ko)?;
        Ok(Portfolio::Option {
            g: sol.g_star,
            c,
            ko: *ko,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Holding {
    Single(Portfolio),
    Mixture {
        first: Portfolio,
        second: Portfolio,
        a: f64,
    },
}

/// Strategy with its weights fixed from the believed market.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedStrategy {
    pub spec: StrategySpec,
    pub label: String,
    /// Hedge parameter, when a single portfolio has one (`c = f` for KS).
    pub c: Option<f64>,
    pub g_star: Option<f64>,
    /// Stock fraction (`c + (S0/P0) g*` for KO).
    pub f: Option<f64>,
    holding: Holding,
}

impl ResolvedStrategy {
    pub fn resolve(cfg: &ExperimentConfig, spec: &StrategySpec) -> Result<Self> {
        let r = cfg.believed.r();
        let ko = cfg.ko_params()?;
        let need_ko = || {
            ko.ok_or_else(|| {
                KellyError::Config(format!(
                    "strategy {} requires an [option] section",
                    spec.label()
                ))
            })
        };
        let fraction = |f: f64| -> Result<Self> {
            if !f.is_finite() {
                return Err(KellyError::InvalidParams(format!(
                    "stock fraction {f} is not finite"
                )));
            }
            Ok(ResolvedStrategy {
                spec: *spec,
                label: spec.label(),
                c: Some(f),
                g_star: Some(0.0),
                f: Some(f),
                holding: Holding::Single(Portfolio::Fraction { f, r }),
            })
        };
        match *spec {
            StrategySpec::Ks { f: None } => fraction(ks_optimal_fraction(&cfg.believed).f_star),
            StrategySpec::Ks { f: Some(f) } => fraction(f),
            StrategySpec::Bond => fraction(0.0),
            StrategySpec::Stock => fraction(1.0),
            StrategySpec::Ko { c } => {
                let ko = need_ko()?;
                let sol = ko_optimal_g(c, &ko)?;
                Ok(ResolvedStrategy {
                    spec: *spec,
                    label: spec.label(),
                    c: Some(c),
                    g_star: Some(sol.g_star),
                    f: Some(sol.f_stock),
                    holding: Holding::Single(Portfolio::ko(c, &ko)?),
                })
            }
            StrategySpec::Koc { c1, c2, a } => {
                KocConfig::new(c1, c2, a)?;
                let ko = need_ko()?;
                Ok(ResolvedStrategy {
                    spec: *spec,
                    label: spec.label(),
                    c: None,
                    g_star: None,
                    f: None,
                    holding: Holding::Mixture {
                        first: Portfolio::ko(c1, &ko)?,
                        second: Portfolio::ko(c2, &ko)?,
                        a,
                    },
                })
            }
        }
    }

    /// Compounds the strategy along `path`, moving the stock by the realized factors.
    pub fn simulate(&self, realized: &RealizedMarket, path: &PricePath) -> WealthPath {
        match self.holding {
            Holding::Single(p) => compound(&p, realized, path),
            Holding::Mixture { first, second, a } => {
                let w1 = compound(&first, realized, path);
                let w2 = compound(&second, realized, path);
                let mut max_correction = 0.0f64;
                let log_wealth: Vec<f64> = w1
                    .log_wealth
                    .iter()
                    .zip(&w2.log_wealth)
                    .map(|(&l1, &l2)| {
                        let v = koc_log_wealth(l1, l2, a);
                        max_correction = max_correction.max(v.correction());
                        v.value
                    })
                    .collect();
                let ruined_at = match (w1.ruined_at, w2.ruined_at) {
                    (Some(t1), Some(t2)) => Some(t1.max(t2)),
                    _ => None,
                };
                let n = path.len() as f64;
                let growth = log_wealth[path.len()] / n;
                WealthPath {
                    log_wealth,
                    ruined_at,
                    growth,
                    components: vec![w1, w2],
                    max_correction,
                }
            }
        }
    }
}

fn compound(p: &Portfolio, realized: &RealizedMarket, path: &PricePath) -> WealthPath {
    let mut log_wealth = Vec::with_capacity(path.len() + 1);
    log_wealth.push(0.0);
    let mut level = 0.0;
    let mut mean = 0.0;
    let mut ruined_at = None;
    for (t, mv) in path.moves.iter().enumerate() {
        if ruined_at.is_none() {
            let m = p.multiplier(realized.factor(*mv));
            if m > 0.0 {
                let step = m.ln();
                level += step;
                // running mean is exact when every step is identical
                mean += (step - mean) / (t + 1) as f64;
            } else {
                ruined_at = Some(t + 1);
                level = f64::NEG_INFINITY;
            }
        }
        log_wealth.push(level);
    }
    WealthPath {
        log_wealth,
        ruined_at,
        growth: if ruined_at.is_some() {
            f64::NEG_INFINITY
        } else {
            mean
        },
        components: Vec::new(),
        max_correction: 0.0,
    }
}

/// Log-wealth trajectory of one strategy on one path, `W_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthPath {
    /// `log W_t` for `t = 0..=n`; `-inf` from the ruin step on.
    pub log_wealth: Vec<f64>,
    /// First step whose relative payoff was not positive. For a mixture, the
    /// step at which the last component was ruined.
    pub ruined_at: Option<usize>,
    growth: f64,
    /// The two sub-portfolios of a mixture; empty otherwise.
    pub components: Vec<WealthPath>,
    /// Largest rounding correction applied to the mixture log-wealth.
    pub max_correction: f64,
}

impl WealthPath {
    pub fn steps(&self) -> usize {
        self.log_wealth.len() - 1
    }

    pub fn wealth(&self, t: usize) -> f64 {
        self.log_wealth[t].exp()
    }

    pub fn final_log_wealth(&self) -> f64 {
        self.log_wealth[self.steps()]
    }

    /// `G_n = (1/n) log W_n`, `None` if ruined.
    pub fn growth(&self) -> Option<f64> {
        self.ruined_at.is_none().then_some(self.growth)
    }

    pub fn is_ruined(&self) -> bool {
        self.ruined_at.is_some()
    }

    /// Some but not all components ruined.
    pub fn partially_ruined(&self) -> bool {
        !self.is_ruined() && self.components.iter().any(WealthPath::is_ruined)
    }
}

/// Simulates one strategy on one path.
pub fn simulate_wealth(
    cfg: &ExperimentConfig,
    strategy: &StrategySpec,
    path: &PricePath,
) -> Result<WealthPath> {
    let resolved = ResolvedStrategy::resolve(cfg, strategy)?;
    Ok(resolved.simulate(&cfg.realized, path))
}

/// Final state of one strategy on one path.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutcome {
    pub growth: Option<f64>,
    pub final_log_wealth: f64,
    /// Final log-wealth of the mixture components, if any.
    pub component_log_wealth: Vec<f64>,
    pub partially_ruined: bool,
    pub max_correction: f64,
}

/// All strategies evaluated on path `index`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub index: u64,
    pub up_moves: usize,
    pub strategies: Vec<StrategyOutcome>,
}

/// Runs every configured strategy on every path and returns per-path outcomes
/// in path order. Strategies share the same paths.
pub fn simulate_paths(cfg: &ExperimentConfig) -> Result<Vec<PathOutcome>> {
    cfg.validate()?;
    let resolved = resolve_all(cfg)?;
    (0..cfg.paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = generate_path_stream(&cfg.believed, cfg.steps, cfg.seed, i)?;
            let strategies = resolved
                .iter()
                .map(|s| {
                    let w = s.simulate(&cfg.realized, &path);
                    StrategyOutcome {
                        growth: w.growth(),
                        final_log_wealth: w.final_log_wealth(),
                        component_log_wealth: w
                            .components
                            .iter()
                            .map(WealthPath::final_log_wealth)
                            .collect(),
                        partially_ruined: w.partially_ruined(),
                        max_correction: w.max_correction,
                    }
                })
                .collect();
            Ok(PathOutcome {
                index: i,
                up_moves: path.up_count(),
                strategies,
            })
        })
        .collect()
}

fn resolve_all(cfg: &ExperimentConfig) -> Result<Vec<ResolvedStrategy>> {
    cfg.strategies
        .iter()
        .map(|s| ResolvedStrategy::resolve(cfg, s))
        .collect()
}

/// Aggregated growth statistics of one strategy at one realized market.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub u_m: f64,
    pub spec: StrategySpec,
    pub strategy: String,
    pub c: Option<f64>,
    pub g_star: Option<f64>,
    pub f: Option<f64>,
    pub n: usize,
    pub paths: usize,
    /// Mean of `G_n` over surviving paths; NaN if every path was ruined.
    pub mean_growth: f64,
    /// Unbiased sample standard deviation over `sqrt(survivors)`; NaN below two survivors.
    pub stderr: f64,
    pub ruin_count: usize,
    /// Mixture paths on which exactly one component was ruined.
    pub partial_ruin_count: usize,
    pub seed: u64,
}

impl SweepRow {
    pub fn all_ruined(&self) -> bool {
        self.ruin_count == self.paths
    }
}

/// Running mean and variance, updated in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    fn stderr(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let var = self.m2 / (self.count - 1) as f64;
        (var / self.count as f64).sqrt()
    }
}

/// Runs `cfg.paths` paths and aggregates `G_n` per strategy.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let outcomes = simulate_paths(cfg)?;
    let resolved = resolve_all(cfg)?;
    Ok(aggregate(cfg, &resolved, &outcomes))
}

/// Aggregates per-path outcomes (in path order) into one row per strategy.
pub fn aggregate(
    cfg: &ExperimentConfig,
    resolved: &[ResolvedStrategy],
    outcomes: &[PathOutcome],
) -> Vec<SweepRow> {
    resolved
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut stats = Welford::default();
            let mut ruin_count = 0;
            let mut partial_ruin_count = 0;
            for o in outcomes {
                let so = &o.strategies[k];
                match so.growth {
                    Some(g) => stats.push(g),
                    None => ruin_count += 1,
                }
                partial_ruin_count += usize::from(so.partially_ruined);
            }
            SweepRow {
                u_m: cfg.realized.u_m(),
                spec: s.spec,
                strategy: s.label.clone(),
                c: s.c,
                g_star: s.g_star,
                f: s.f,
                n: cfg.steps,
                paths: cfg.paths,
                mean_growth: stats.mean(),
                stderr: stats.stderr(),
                ruin_count,
                partial_ruin_count,
                seed: cfg.seed,
            }
        })
        .collect()
}

/// Rows of a sweep, grouped by realized up-factor and horizon in run order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn find(&self, n: usize, u_m: f64, spec: &StrategySpec) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.u_m == u_m && r.spec == *spec)
    }

    pub fn any_all_ruined(&self) -> bool {
        self.rows.iter().any(SweepRow::all_ruined)
    }
}

/// `u_m` from 1.1 to 3.0 in steps of 0.05.
pub fn default_u_m_grid() -> Vec<f64> {
    (0..=38).map(|i| (110 + 5 * i) as f64 / 100.0).collect()
}

/// Reruns the experiment at each `u_m` with `d_m = 1/u_m`, weights fixed
/// from the believed market. Every grid point reuses the same seed.
pub fn misspecification_sweep(base: &ExperimentConfig, u_m_grid: &[f64]) -> Result<SweepResult> {
    if u_m_grid.is_empty() {
        return Err(KellyError::Config("empty u_m grid".into()));
    }
    if let Some(bad) = u_m_grid.iter().find(|&&u| !(u > 1.0 && u.is_finite())) {
        return Err(KellyError::Config(format!(
            "u_m grid values must exceed 1, got {bad}"
        )));
    }
    let mut rows = Vec::new();
    for &u_m in u_m_grid {
        let cfg = base.with_realized(RealizedMarket::symmetric(u_m)?);
        rows.extend(run_experiment(&cfg)?);
    }
    Ok(SweepResult { rows })
}

/// KOc mean growth against the better of its two components at one `(n, u_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceGap {
    pub n: usize,
    pub u_m: f64,
    pub mixture: StrategySpec,
    pub koc_mean: f64,
    pub koc_stderr: f64,
    pub best_component_mean: f64,
    /// `koc_mean - best_component_mean`.
    pub gap: f64,
    /// `|log min(a, 1-a)| / n`.
    pub mixing_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub sweep: SweepResult,
    pub gaps: Vec<ConvergenceGap>,
}

/// Runs the misspecification sweep at each horizon in `n_grid` and reports
/// how far each KOc mixture trails its better component.
///
/// KO strategies for every mixture hedge are added to the run when missing.
pub fn convergence_study(
    base: &ExperimentConfig,
    u_m_grid: &[f64],
    n_grid: &[usize],
) -> Result<ConvergenceStudy> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(KellyError::Config(format!(
            "horizon grid must be non-empty and strictly ascending, got {n_grid:?}"
        )));
    }
    let mut cfg = base.clone();
    let mixtures: Vec<StrategySpec> = cfg
        .strategies
        .iter()
        .copied()
        .filter(|s| matches!(s, StrategySpec::Koc { .. }))
        .collect();
    if mixtures.is_empty() {
        return Err(KellyError::Config(
            "convergence study needs at least one koc strategy".into(),
        ));
    }
    for m in &mixtures {
        if let StrategySpec::Koc { c1, c2, .. } = *m {
            for c in [c1, c2] {
                let ko = StrategySpec::Ko { c };
                if !cfg.strategies.contains(&ko) {
                    cfg.strategies.push(ko);
                }
            }
        }
    }

    let mut sweep = SweepResult::default();
    let mut gaps = Vec::new();
    for &n in n_grid {
        cfg.steps = n;
        let part = misspecification_sweep(&cfg, u_m_grid)?;
        for &u_m in u_m_grid {
            for m in &mixtures {
                let StrategySpec::Koc { c1, c2, a } = *m else {
                    continue;
                };
                let row = |spec: &StrategySpec| {
                    part.find(n, u_m, spec)
                        .expect("every configured strategy has a row")
                };
                let koc = row(m);
                let best = row(&StrategySpec::Ko { c: c1 })
                    .mean_growth
                    .max(row(&StrategySpec::Ko { c: c2 }).mean_growth);
                gaps.push(ConvergenceGap {
                    n,
                    u_m,
                    mixture: *m,
                    koc_mean: koc.mean_growth,
                    koc_stderr: koc.stderr,
                    best_component_mean: best,
                    gap: koc.mean_growth - best,
                    mixing_bound: a.min(1.0 - a).ln().abs() / n as f64,
                });
            }
        }
        sweep.rows.extend(part.rows);
    }
    Ok(ConvergenceStudy { sweep, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Move;
    use approx::assert_relative_eq;

    fn misspecified(u_m: f64) -> ExperimentConfig {
        ExperimentConfig {
            believed: MarketParams::new(2.0, 0.5, 0.5, 1.05).unwrap(),
            realized: RealizedMarket::symmetric(u_m).unwrap(),
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
                StrategySpec::Bond,
                StrategySpec::Stock,
            ],
            steps: 60,
            paths: 40,
            seed: 7,
        }
    }

    #[test]
    fn bond_compounds_at_r() {
        let cfg = misspecified(2.5);
        let path = generate_path_stream(&cfg.believed, 50, 3, 0).unwrap();
        let w = simulate_wealth(&cfg, &StrategySpec::Bond, &path).unwrap();
        assert_relative_eq!(w.wealth(50), 1.05f64.powi(50), max_relative = 1e-12);
        assert_eq!(w.growth(), Some(1.05f64.ln()));
    }

    #[test]
    fn stock_tracks_realized_price() {
        let cfg = misspecified(2.5);
        let path = generate_path_stream(&cfg.believed, 40, 11, 2).unwrap();
        let k = path.up_count() as i32;
        let w = simulate_wealth(&cfg, &StrategySpec::Stock, &path).unwrap();
        let expected = 2.5f64.powi(k) * 0.4f64.powi(40 - k);
        assert_relative_eq!(w.wealth(40), expected, max_relative = 1e-12);
    }

    #[test]
    fn ko_replicates_ks_when_well_specified() {
        let cfg = misspecified(2.0);
        let path = generate_path_stream(&cfg.believed, 300, 5, 9).unwrap();
        let ks = simulate_wealth(&cfg, &StrategySpec::Ks { f: None }, &path).unwrap();
        for c in [-0.5, 0.0, 0.4, 0.9, 1.5] {
            let ko = simulate_wealth(&cfg, &StrategySpec::Ko { c }, &path).unwrap();
            for t in 0..=300 {
                let rel = (ko.wealth(t) - ks.wealth(t)).abs() / ks.wealth(t);
                assert!(rel <= 1e-10, "c={c} t={t} rel={rel}");
            }
        }
    }

    #[test]
    fn missing_option_is_a_config_error() {
        let mut cfg = misspecified(2.0);
        cfg.option = None;
        let path = generate_path_stream(&cfg.believed, 5, 1, 0).unwrap();
        assert!(matches!(
            simulate_wealth(&cfg, &StrategySpec::Ko { c: 0.0 }, &path),
            Err(KellyError::Config(_))
        ));
        assert!(matches!(cfg.validate(), Err(KellyError::Config(_))));
    }

    #[test]
    fn ruin_zeroes_wealth() {
        let cfg = misspecified(3.0);
        // heavy leverage: a single realized down move of 1/3 wipes it out
        let spec = StrategySpec::Ks { f: Some(5.0) };
        let path = PricePath {
            moves: vec![Move::Up, Move::Down, Move::Up],
            seed: 0,
            stream: 0,
        };
        let w = simulate_wealth(&cfg, &spec, &path).unwrap();
        assert_eq!(w.ruined_at, Some(2));
        assert_eq!(w.wealth(2), 0.0);
        assert_eq!(w.wealth(3), 0.0);
        assert_eq!(w.growth(), None);
    }

    #[test]
    fn order_independent_and_reproducible() {
        let cfg = misspecified(1.5);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        let outcomes = simulate_paths(&cfg).unwrap();
        let resolved = resolve_all(&cfg).unwrap();
        // recompute path 17 on its own
        let path = generate_path_stream(&cfg.believed, cfg.steps, cfg.seed, 17).unwrap();
        for (k, s) in resolved.iter().enumerate() {
            let w = s.simulate(&cfg.realized, &path);
            assert_eq!(w.growth(), outcomes[17].strategies[k].growth);
        }
    }

    #[test]
    fn bond_row_is_exact() {
        let rows = run_experiment(&misspecified(1.5)).unwrap();
        let bond = rows.iter().find(|r| r.spec == StrategySpec::Bond).unwrap();
        assert_eq!(bond.mean_growth, 1.05f64.ln());
        assert_eq!(bond.stderr, 0.0);
        assert_eq!(bond.ruin_count, 0);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let cfg = misspecified(2.0);
        assert!(misspecification_sweep(&cfg, &[]).is_err());
        assert!(misspecification_sweep(&cfg, &[0.9]).is_err());
        assert!(convergence_study(&cfg, &[2.0], &[300, 5]).is_err());
    }

    #[test]
    fn default_grid_shape() {
        let g = default_u_m_grid();
        assert_eq!(g.len(), 39);
        assert_eq!(g[0], 1.1);
        assert_eq!(*g.last().unwrap(), 3.0);
    }

    #[test]
    fn convergence_adds_components() {
        let mut cfg = misspecified(2.0);
        cfg.strategies = vec![StrategySpec::Koc {
            c1: 0.0,
            c2: 0.9,
            a: 0.5,
        }];
        cfg.paths = 20;
        let study = convergence_study(&cfg, &[1.5, 2.5], &[5, 50]).unwrap();
        assert_eq!(study.gaps.len(), 4);
        assert_eq!(study.sweep.rows.len(), 2 * 2 * 3);
        for g in &study.gaps {
            // path-wise lower sandwich bound carries over to the means
            assert!(g.gap >= -g.mixing_bound - 1e-12, "{g:?}");
        }
    }
}
