//! Randomised checks of the closed-form identities, run on seeded parameter
//! draws and summarised as a report.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::convex::log_sum_exp_bounds;
use crate::kelly_core::{ks_growth_derivative, ks_optimal_fraction};
use crate::kelly_option::{
    feasibility_bounds, hedge_pivot, ko_optimal_g, ko_optimal_g_affine, ko_optimal_g_closed_form,
    replication_check, KoParams,
};
use crate::market::MarketParams;

/// A market together with a valid put on it.
#[derive(Debug, Clone, Copy)]
pub struct Draw {
    pub market: MarketParams,
    pub ko: KoParams,
}

/// Draws `u ∈ [1.05, 3]`, `d ∈ [0.2, 0.95]`, `R` strictly between them,
/// `p ∈ [0.05, 0.95]`, `S0 ∈ [10, 1000]` and a strike in the central 96% of
/// `(d S0, u S0)`.
pub fn random_draw<R: Rng>(rng: &mut R) -> Draw {
    loop {
        let u = rng.random_range(1.05..3.0);
        let d = rng.random_range(0.2..0.95);
        let r = d + rng.random_range(0.05..0.95) * (u - d);
        let p = rng.random_range(0.05..0.95);
        let s0 = rng.random_range(10.0..1000.0);
        let k0 = d * s0 + rng.random_range(0.02..0.98) * (u - d) * s0;
        if let Ok(market) = MarketParams::new(u, d, p, r) {
            if let Ok(ko) = KoParams::from_strike(&market, s0, k0) {
                return Draw { market, ko };
            }
        }
    }
}

/// Outcome of one randomised check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub draws: usize,
    pub failures: usize,
    /// Largest observed residual (or violation margin).
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(CheckResult::pass)
    }
}

struct Tally {
    result: CheckResult,
}

impl Tally {
    fn new(name: &'static str, draws: usize, tolerance: f64) -> Self {
        Tally {
            result: CheckResult {
                name,
                draws,
                failures: 0,
                worst: 0.0,
                tolerance,
            },
        }
    }

    /// Records a residual that must not exceed the tolerance.
    fn residual(&mut self, value: f64) {
        let r = &mut self.result;
        if value.is_nan() || value > r.tolerance {
            r.failures += 1;
        }
        if value.is_nan() || value > r.worst {
            r.worst = value;
        }
    }

    /// Records a predicate; `margin` is reported when it fails.
    fn holds(&mut self, ok: bool, margin: f64) {
        if !ok {
            self.result.failures += 1;
            self.result.worst = self.result.worst.max(margin.abs());
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Runs every check on `draws` random markets from `seed`.
pub fn run_verification(draws: usize, seed: u64) -> VerificationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut foc = Tally::new("KS first-order condition |G'(f*)|", draws, 1e-10);
    let mut replication = Tally::new(
        "KO(g*(c), c) payoffs equal KS(f*) payoffs (relative)",
        draws,
        1e-10,
    );
    let mut implied = Tally::new(
        "replicating fraction c + g*(ũ-R)/(u-R) equals f*",
        draws,
        1e-10,
    );
    let mut pivot = Tally::new("pivot hedge ĉ equals f*", draws, 1e-10);
    let mut affine = Tally::new("closed-form g*(c) equals its affine form", draws, 1e-12);
    let mut ratio = Tally::new("(R-ũ)/(R-u) = (R-d̃)/(R-d) > 0 (relative)", draws, 1e-12);
    let mut ordering = Tally::new("c_u(g) < c_d(g), both decreasing in g", draws, 0.0);
    let mut strikes = Tally::new("optimal KO growth independent of strike", draws, 1e-12);
    let mut containment = Tally::new(
        "feasible g>1 implies c<c_d(1); feasible g<0 implies c>c_u(0)",
        draws,
        0.0,
    );
    let mut lse = Tally::new("max x + log min λ <= log Σ λ e^x <= max x", draws, 0.0);

    for _ in 0..draws {
        let Draw { market, ko } = random_draw(&mut rng);
        let ks = ks_optimal_fraction(&market);
        foc.residual(ks_growth_derivative(ks.f_star, &market).abs());

        let c = rng.random_range(-2.0..3.0);
        let rep = replication_check(c, &ko);
        replication.residual(rep.residual_up.max(rep.residual_down));
        match ko_optimal_g(c, &ko) {
            Ok(sol) => {
                implied.residual((sol.f_replicating - ks.f_star).abs() / ks.f_star.abs().max(1.0))
            }
            Err(_) => implied.residual(f64::NAN),
        }
        pivot.residual((hedge_pivot(&ko) - ks.f_star).abs());
        let g_cf = ko_optimal_g_closed_form(c, &ko);
        affine.residual((g_cf - ko_optimal_g_affine(c, &ko)).abs() / g_cf.abs().max(1.0));

        let (lhs, rhs) = ko.ratio_identity();
        ratio.residual(rel(lhs, rhs));
        ratio.holds(lhs > 0.0, lhs);

        let g1 = rng.random_range(-5.0..5.0);
        let g2 = g1 + rng.random_range(0.01..5.0);
        let (cu1, cd1) = feasibility_bounds(g1, &ko);
        let (cu2, cd2) = feasibility_bounds(g2, &ko);
        ordering.holds(cu1 < cd1 && cu2 < cd2, cd1 - cu1);
        ordering.holds(cu1 > cu2 && cd1 > cd2, cu1 - cu2);

        let s0 = ko.contract().s0();
        let k_other =
            market.d() * s0 + rng.random_range(0.02..0.98) * (market.u() - market.d()) * s0;
        if let Ok(other) = KoParams::from_strike(&market, s0, k_other) {
            let c2 = rng.random_range(-2.0..3.0);
            match (ko_optimal_g(c, &ko), ko_optimal_g(c2, &other)) {
                (Ok(a), Ok(b)) => strikes.residual((a.growth - b.growth).abs()),
                _ => strikes.residual(f64::NAN),
            }
        }

        let (_, cd_one) = feasibility_bounds(1.0, &ko);
        let (cu_zero, _) = feasibility_bounds(0.0, &ko);
        let g_lev = 1.0 + rng.random_range(1e-6..9.0);
        let (lo, hi) = feasibility_bounds(g_lev, &ko);
        let c_lev = lo + rng.random_range(0.0..1.0) * (hi - lo);
        containment.holds(c_lev < cd_one, c_lev - cd_one);
        let g_short = -rng.random_range(1e-6..10.0);
        let (lo, hi) = feasibility_bounds(g_short, &ko);
        let c_short = lo + rng.random_range(0.0..1.0) * (hi - lo);
        containment.holds(c_short > cu_zero, cu_zero - c_short);

        let len = rng.random_range(1..6usize);
        let xs: Vec<f64> = (0..len).map(|_| rng.random_range(-200.0..200.0)).collect();
        let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let lambdas: Vec<f64> = raw.iter().map(|w| w / total).collect();
        match log_sum_exp_bounds(&xs, &lambdas) {
            Ok(b) => lse.holds(b.lower <= b.value && b.value <= b.upper, b.value - b.upper),
            Err(_) => lse.holds(false, f64::NAN),
        }
    }

    let mut notes = Vec::new();
    if let Ok(ko) =
        MarketParams::new(2.0, 0.5, 0.5, 1.05).and_then(|m| KoParams::from_strike(&m, 100.0, 110.0))
    {
        let (cu0, _) = feasibility_bounds(0.0, &ko);
        let (_, cd1) = feasibility_bounds(1.0, &ko);
        notes.push(format!(
            "u=2, d=0.5, p=0.5, R=1.05, S0=100, K0=110: c_d(1) = {cd1:.6}; c_u(0) = {cu0:.6} (|c_u(0)| = {:.6}); ĉ = {:.6}",
            cu0.abs(),
            hedge_pivot(&ko)
        ));
    }

    VerificationReport {
        seed,
        checks: [
            foc,
            replication,
            implied,
            pivot,
            affine,
            ratio,
            ordering,
            strikes,
            containment,
            lse,
        ]
        .into_iter()
        .map(|t| t.result)
        .collect(),
        notes,
    }
}
