//! Kelly with a rolling-strike put.
//!
//! The portfolio holds fractions `f` in stock, `g` in puts and `1 - f - g` in
//! the bond, reparametrised by the hedge `c = f - (S0/P0) g`. Its relative
//! payoff is `g ũ + (1-g) R + c (u-R)` on an up move and
//! `g d̃ + (1-g) R + c (d-R)` on a down move, with `ũ = (u-R) S0/P0` and
//! `d̃ = (K0 - R S0)/P0`.
//!
//! Everything here is computed from the believed market. Realized factors only
//! enter through [`ko_realized_payoff`].

use crate::error::{KellyError, Result};
use crate::kelly_core::{self, grid_argmax, ks_optimal_fraction, shrink};
use crate::market::{MarketParams, Move, OptionContract};

/// Transformed payoffs of the put-plus-stock leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KoParams {
    market: MarketParams,
    contract: OptionContract,
    u_tilde: f64,
    d_tilde: f64,
}

impl KoParams {
    pub fn new(market: &MarketParams, contract: &OptionContract) -> Self {
        let r = market.r();
        let spot = contract.spot_per_premium();
        KoParams {
            market: *market,
            contract: *contract,
            u_tilde: (market.u() - r) * spot,
            d_tilde: contract.strike_per_premium() - r * spot,
        }
    }

    /// Builds the contract from `(S0, K0)` and prices it on `market`.
    pub fn from_strike(market: &MarketParams, s0: f64, k0: f64) -> Result<Self> {
        Ok(Self::new(market, &OptionContract::new(market, s0, k0)?))
    }

    pub fn market(&self) -> &MarketParams {
        &self.market
    }

    pub fn contract(&self) -> &OptionContract {
        &self.contract
    }

    pub fn u_tilde(&self) -> f64 {
        self.u_tilde
    }

    pub fn d_tilde(&self) -> f64 {
        self.d_tilde
    }

    fn tilde(&self, mv: Move) -> f64 {
        match mv {
            Move::Up => self.u_tilde,
            Move::Down => self.d_tilde,
        }
    }

    /// Both sides of `(R - ũ)/(R - u) = (R - d̃)/(R - d)`.
    pub fn ratio_identity(&self) -> (f64, f64) {
        let (u, d, r) = (self.market.u(), self.market.d(), self.market.r());
        ((r - self.u_tilde) / (r - u), (r - self.d_tilde) / (r - d))
    }
}

/// Optimal option fraction for a given hedge `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KoSolution {
    pub c: f64,
    pub g_star: f64,
    /// Fraction of wealth held in the stock itself, `c + (S0/P0) g*`.
    pub f_stock: f64,
    /// Stock fraction of the stock/bond portfolio paying the same on both
    /// branches, `c + g* (ũ-R)/(u-R)`. Equals the KS `f*`.
    pub f_replicating: f64,
    pub growth: f64,
}

/// Relative payoff `π_{g,c}` on the believed tree.
pub fn ko_payoff(g: f64, c: f64, mv: Move, ko: &KoParams) -> f64 {
    let r = ko.market.r();
    g * ko.tilde(mv) + (1.0 - g) * r + c * (ko.market.factor(mv) - r)
}

/// Relative payoff when the stock actually moves by `x`, with the put settled
/// at `(K_{t-1} - S_t)^+` and the strike rolled with the realized price.
///
/// Equals [`ko_payoff`] when `x` is one of the believed factors.
pub fn ko_realized_payoff(g: f64, c: f64, x: f64, ko: &KoParams) -> f64 {
    let r = ko.market.r();
    let spot = ko.contract.spot_per_premium();
    g * (ko.contract.settle_per_premium(x) + (x - r) * spot) + (1.0 - g) * r + c * (x - r)
}

/// `G(g, c) = p log π_{g,c}(u) + (1-p) log π_{g,c}(d)`.
pub fn ko_growth_rate(g: f64, c: f64, ko: &KoParams) -> Result<f64> {
    let up = ko_payoff(g, c, Move::Up, ko);
    let down = ko_payoff(g, c, Move::Down, ko);
    if !(up > 0.0 && down > 0.0) {
        return Err(KellyError::Infeasible(format!(
            "(g={g}, c={c}) gives payoffs up={up}, down={down}"
        )));
    }
    let p = ko.market.p();
    Ok(p * up.ln() + (1.0 - p) * down.ln())
}

/// Closed-form first-order solution
/// `g* = (p(R-ũ)(R+c(d-R)) + (1-p)(R-d̃)(R+c(u-R))) / ((d̃-R)(ũ-R))`.
pub fn ko_optimal_g_closed_form(c: f64, ko: &KoParams) -> f64 {
    let (u, d, p, r) = (ko.market.u(), ko.market.d(), ko.market.p(), ko.market.r());
    let (ut, dt) = (ko.u_tilde, ko.d_tilde);
    (p * (r - ut) * (r + c * (d - r)) + (1.0 - p) * (r - dt) * (r + c * (u - r)))
        / ((dt - r) * (ut - r))
}

/// The same optimum written as an affine function of `c`:
/// `g* = -c(u-R)/(ũ-R) - pR/(d̃-R) - (1-p)R/(ũ-R)`.
pub fn ko_optimal_g_affine(c: f64, ko: &KoParams) -> f64 {
    let (u, p, r) = (ko.market.u(), ko.market.p(), ko.market.r());
    let (ut, dt) = (ko.u_tilde, ko.d_tilde);
    -c * (u - r) / (ut - r) - p * r / (dt - r) - (1.0 - p) * r / (ut - r)
}

/// Slope `dg*/dc = -(u-R)/(ũ-R)`.
pub fn ko_optimal_g_slope(ko: &KoParams) -> f64 {
    -(ko.market.u() - ko.market.r()) / (ko.u_tilde - ko.market.r())
}

/// Optimal option fraction for hedge `c`.
pub fn ko_optimal_g(c: f64, ko: &KoParams) -> Result<KoSolution> {
    let g_star = ko_optimal_g_closed_form(c, ko);
    let growth = ko_growth_rate(g_star, c, ko)?;
    Ok(KoSolution {
        c,
        g_star,
        f_stock: c + ko.contract.spot_per_premium() * g_star,
        f_replicating: replicating_fraction(g_star, c, ko),
        growth,
    })
}

/// Stock fraction `f` with `π_f = π_{g,c}` on both branches of the believed tree.
pub fn replicating_fraction(g: f64, c: f64, ko: &KoParams) -> f64 {
    let (u, r) = (ko.market.u(), ko.market.r());
    c + g * (ko.u_tilde - r) / (u - r)
}

/// Hedge `ĉ` at which `g*(c) = 0`, solved exactly from the affine form.
pub fn hedge_pivot(ko: &KoParams) -> f64 {
    let (u, p, r) = (ko.market.u(), ko.market.p(), ko.market.r());
    let (ut, dt) = (ko.u_tilde, ko.d_tilde);
    -(p * r * (ut - r) / (dt - r) + (1.0 - p) * r) / (u - r)
}

/// `(c_u(g), c_d(g))` with `c_u(g) = -(gũ+(1-g)R)/(u-R)` and
/// `c_d(g) = -(gd̃+(1-g)R)/(d-R)`. Both payoffs are positive exactly for
/// `c_u(g) < c < c_d(g)`.
pub fn feasibility_bounds(g: f64, ko: &KoParams) -> (f64, f64) {
    let (u, d, r) = (ko.market.u(), ko.market.d(), ko.market.r());
    let c_u = -(g * ko.u_tilde + (1.0 - g) * r) / (u - r);
    let c_d = -(g * ko.d_tilde + (1.0 - g) * r) / (d - r);
    (c_u, c_d)
}

/// Open interval of option fractions `g` with both payoffs positive at fixed `c`.
pub fn feasible_g_interval(c: f64, ko: &KoParams) -> (f64, f64) {
    let (u, d, r) = (ko.market.u(), ko.market.d(), ko.market.r());
    let lo = -(r + c * (u - r)) / (ko.u_tilde - r);
    let hi = (r + c * (d - r)) / (r - ko.d_tilde);
    (lo, hi)
}

/// Branch-by-branch comparison of a KO portfolio against the optimal KS one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationReport {
    pub c: f64,
    pub g: f64,
    pub ko_up: f64,
    pub ko_down: f64,
    pub ks_up: f64,
    pub ks_down: f64,
    /// Relative residual on the up branch.
    pub residual_up: f64,
    /// Relative residual on the down branch.
    pub residual_down: f64,
    pub pass: bool,
}

/// Relative tolerance of [`replication_check`].
pub const REPLICATION_TOL: f64 = 1e-10;

/// Checks that the optimal KO portfolio at hedge `c` pays exactly what the
/// optimal KS portfolio pays on both branches.
pub fn replication_check(c: f64, ko: &KoParams) -> ReplicationReport {
    replication_check_at(ko_optimal_g_closed_form(c, ko), c, ko)
}

/// As [`replication_check`] but at an arbitrary option fraction `g`.
pub fn replication_check_at(g: f64, c: f64, ko: &KoParams) -> ReplicationReport {
    let f_star = ks_optimal_fraction(&ko.market).f_star;
    let ko_up = ko_payoff(g, c, Move::Up, ko);
    let ko_down = ko_payoff(g, c, Move::Down, ko);
    let ks_up = kelly_core::ks_branch_payoff(f_star, Move::Up, &ko.market);
    let ks_down = kelly_core::ks_branch_payoff(f_star, Move::Down, &ko.market);
    let residual_up = ((ko_up - ks_up) / ks_up).abs();
    let residual_down = ((ko_down - ks_down) / ks_down).abs();
    ReplicationReport {
        c,
        g,
        ko_up,
        ko_down,
        ks_up,
        ks_down,
        residual_up,
        residual_down,
        pass: residual_up <= REPLICATION_TOL && residual_down <= REPLICATION_TOL,
    }
}

/// Brute-force argmax of [`ko_growth_rate`] over `g` at fixed `c`, on a grid
/// spanning [`feasible_g_interval`].
pub fn ko_grid_oracle(c: f64, ko: &KoParams, resolution: usize) -> Result<f64> {
    if resolution < 1_000 {
        return Err(KellyError::InvalidParams(format!(
            "grid oracle needs at least 1000 points, got {resolution}"
        )));
    }
    let (lo, hi) = feasible_g_interval(c, ko);
    let (lo, hi) = shrink(lo, hi);
    grid_argmax(lo, hi, resolution, |g| ko_growth_rate(g, c, ko).ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kelly_core::{grid_spacing, ks_growth_rate};
    use approx::assert_relative_eq;

    fn reference_market() -> MarketParams {
        MarketParams::new(2.0, 0.5, 0.5, 1.05).unwrap()
    }

    fn ko(k0: f64) -> KoParams {
        KoParams::from_strike(&reference_market(), 100.0, k0).unwrap()
    }

    const F_STAR: f64 = 0.21 / 0.5225;

    #[test]
    fn transformed_payoffs() {
        let k = ko(110.0);
        assert_relative_eq!(k.u_tilde(), 2.625, epsilon = 1e-12);
        assert_relative_eq!(k.d_tilde(), 0.138157894736842, epsilon = 1e-12);
        assert!(k.u_tilde() > 1.05 && k.d_tilde() < 1.05);
        let (a, b) = k.ratio_identity();
        assert_relative_eq!(a, b, max_relative = 1e-12);
        assert!(a > 0.0);
    }

    #[test]
    fn payoff_examples() {
        let k = ko(110.0);
        let m = reference_market();
        for mv in [Move::Up, Move::Down] {
            assert_eq!(
                ko_payoff(0.0, 0.3, mv, &k),
                kelly_core::ks_branch_payoff(0.3, mv, &m)
            );
        }
        assert_relative_eq!(
            ko_payoff(0.0, F_STAR, Move::Up, &k),
            1.431818181818,
            epsilon = 1e-10
        );
        assert_relative_eq!(ko_payoff(1.0, 0.0, Move::Up, &k), 2.625, epsilon = 1e-12);
    }

    #[test]
    fn realized_payoff_reduces_to_tree_payoff() {
        let k = ko(110.0);
        for (g, c) in [(0.3, 0.1), (-1.0, 0.9), (2.0, -0.5)] {
            assert_relative_eq!(
                ko_realized_payoff(g, c, 2.0, &k),
                ko_payoff(g, c, Move::Up, &k),
                max_relative = 1e-13
            );
            assert_relative_eq!(
                ko_realized_payoff(g, c, 0.5, &k),
                ko_payoff(g, c, Move::Down, &k),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn optimal_g_examples() {
        let k = ko(110.0);
        let c_hat = hedge_pivot(&k);
        assert_relative_eq!(c_hat, F_STAR, epsilon = 1e-12);
        assert!(ko_optimal_g(c_hat, &k).unwrap().g_star.abs() < 1e-10);

        // -pR/(d̃-R) - (1-p)R/(ũ-R) evaluated by hand: 0.525/0.911842 - 0.525/1.575
        let g0 = ko_optimal_g(0.0, &k).unwrap();
        assert_relative_eq!(g0.g_star, 0.242424242424, epsilon = 1e-10);
        assert_relative_eq!(g0.f_replicating, F_STAR, epsilon = 1e-12);
        // the put carries stock exposure, so the literal stock weight differs
        assert_relative_eq!(
            g0.f_stock,
            0.242424242424 * 100.0 / 36.190476190476,
            epsilon = 1e-9
        );

        let (c1, c2) = (-0.7, 1.3);
        let diff = ko_optimal_g_closed_form(c1, &k) - ko_optimal_g_closed_form(c2, &k);
        assert_relative_eq!(
            diff,
            -(c1 - c2) * 0.95 / (2.625 - 1.05),
            max_relative = 1e-12
        );
    }

    #[test]
    fn closed_form_matches_affine_form() {
        for k0 in [60.0, 91.0, 110.0, 190.0] {
            let k = ko(k0);
            for c in [-2.0, -0.3, 0.0, 0.4, 0.9, 3.0] {
                let a = ko_optimal_g_closed_form(c, &k);
                let b = ko_optimal_g_affine(c, &k);
                assert!(
                    (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                    "k0={k0} c={c}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn growth_matches_kelly() {
        let m = reference_market();
        let ks = ks_growth_rate(F_STAR, &m).unwrap();
        assert_eq!(ko_growth_rate(0.0, F_STAR, &ko(110.0)).unwrap(), ks);
        for k0 in [110.0, 91.0] {
            let k = ko(k0);
            for c in [-1.0, 0.0, 0.5, 0.9] {
                let s = ko_optimal_g(c, &k).unwrap();
                assert!((s.growth - ks).abs() <= 1e-12, "k0={k0} c={c}");
            }
        }
    }

    #[test]
    fn feasibility_bound_examples() {
        let k = ko(110.0);
        let (_, cd1) = feasibility_bounds(1.0, &k);
        assert_relative_eq!(cd1, 0.251196172249, epsilon = 1e-10);
        let (cu0, cd0) = feasibility_bounds(0.0, &k);
        assert_relative_eq!(cu0, -1.05 / 0.95, epsilon = 1e-12);
        let (cu1, _) = feasibility_bounds(1.0, &k);
        assert!(cu0 > cu1 && cd0 > cd1);
    }

    #[test]
    fn replication_examples() {
        let k = ko(110.0);
        assert!(replication_check(0.0, &k).pass);
        let pivot = replication_check(hedge_pivot(&k), &k);
        assert!(pivot.pass);
        assert!(pivot.residual_up < 1e-15 && pivot.residual_down < 1e-15);

        let off = replication_check_at(ko_optimal_g_closed_form(0.0, &k) + 0.1, 0.0, &k);
        assert!(!off.pass);
        // 0.1 (ũ - R) / π(u) and 0.1 (d̃ - R) / π(d)
        assert_relative_eq!(
            off.residual_up,
            0.1575 / 1.431818181818,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            off.residual_down,
            0.0911842105263 / 0.8289473684210,
            max_relative = 1e-9
        );
    }

    #[test]
    fn grid_oracle_examples() {
        let k = ko(110.0);
        let g = ko_grid_oracle(0.0, &k, 1_000_000).unwrap();
        assert!((g - 0.242424242424).abs() < 1e-5);

        let c_hat = hedge_pivot(&k);
        let (lo, hi) = feasible_g_interval(c_hat, &k);
        let g = ko_grid_oracle(c_hat, &k, 1_000_000).unwrap();
        assert!(g.abs() <= grid_spacing(lo, hi, 1_000_000));

        let g = ko_grid_oracle(0.9, &k, 1_000_000).unwrap();
        assert!((g - ko_optimal_g_closed_form(0.9, &k)).abs() < 1e-5);
    }

    #[test]
    fn boundary_hedge_is_infeasible() {
        let k = ko(110.0);
        let (c_u, c_d) = feasibility_bounds(1.0, &k);
        assert!(ko_payoff(1.0, c_d, Move::Down, &k).abs() < 1e-14);
        assert!(ko_payoff(1.0, c_u, Move::Up, &k).abs() < 1e-14);
        assert!(ko_growth_rate(1.0, c_d + 1e-9, &k).is_err());
        assert!(ko_growth_rate(1.0, c_u - 1e-9, &k).is_err());
        assert!(ko_growth_rate(1.0, 0.5 * (c_u + c_d), &k).is_ok());
    }

    #[test]
    fn leverage_hedge_bound_is_not_sufficient() {
        // c just below c_d(1), but g = 2 drives the down payoff negative;
        // only the containment direction holds (see property tests)
        let k = ko(110.0);
        let (_, cd1) = feasibility_bounds(1.0, &k);
        assert!(ko_payoff(2.0, cd1 - 1e-3, Move::Down, &k) < 0.0);
    }
}
