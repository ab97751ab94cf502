//! Classical Kelly strategy: a constant fraction `f` in the stock and `1 - f`
//! in the bond, compounding `W_t = W_{t-1} (f X_t + (1 - f) R)`.

use crate::error::{KellyError, Result};
use crate::market::{MarketParams, Move};

/// Optimal stock fraction together with its asymptotic growth rate (nats/period).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsSolution {
    pub f_star: f64,
    pub growth: f64,
}

/// Relative payoff `f x + (1 - f) R` for a stock relative `x`.
pub fn ks_payoff(f: f64, x: f64, r: f64) -> f64 {
    f * (x - r) + r
}

/// Relative payoff on the believed tree.
pub fn ks_branch_payoff(f: f64, mv: Move, mkt: &MarketParams) -> f64 {
    ks_payoff(f, mkt.factor(mv), mkt.r())
}

/// `G(f) = p log(f(u-R)+R) + (1-p) log(f(d-R)+R)`.
///
/// Fails with [`KellyError::Infeasible`] when either branch payoff is not
/// strictly positive.
pub fn ks_growth_rate(f: f64, mkt: &MarketParams) -> Result<f64> {
    let up = ks_branch_payoff(f, Move::Up, mkt);
    let down = ks_branch_payoff(f, Move::Down, mkt);
    if !(up > 0.0 && down > 0.0) {
        return Err(KellyError::Infeasible(format!(
            "fraction f={f} gives payoffs up={up}, down={down}"
        )));
    }
    Ok(mkt.p() * up.ln() + (1.0 - mkt.p()) * down.ln())
}

/// `G'(f) = p(u-R)/(R+f(u-R)) + (1-p)(d-R)/(R+f(d-R))`.
pub fn ks_growth_derivative(f: f64, mkt: &MarketParams) -> f64 {
    let (u, d, p, r) = (mkt.u(), mkt.d(), mkt.p(), mkt.r());
    p * (u - r) / (r + f * (u - r)) + (1.0 - p) * (d - r) / (r + f * (d - r))
}

/// Open interval of fractions with both payoffs positive: `(-R/(u-R), R/(R-d))`.
pub fn ks_feasible_interval(mkt: &MarketParams) -> (f64, f64) {
    let (u, d, r) = (mkt.u(), mkt.d(), mkt.r());
    (-r / (u - r), r / (r - d))
}

/// Unconstrained closed-form optimum
/// `f* = (p(R-u)R + (1-p)(R-d)R) / ((u-R)(d-R))`.
pub fn ks_optimal_fraction(mkt: &MarketParams) -> KsSolution {
    let f_star = unconstrained_fraction(mkt);
    // no-arbitrage puts f* strictly inside the feasible interval
    let growth = ks_growth_rate(f_star, mkt)
        .expect("closed-form Kelly fraction lies inside the feasible interval");
    KsSolution { f_star, growth }
}

fn unconstrained_fraction(mkt: &MarketParams) -> f64 {
    let (u, d, p, r) = (mkt.u(), mkt.d(), mkt.p(), mkt.r());
    (p * (r - u) * r + (1.0 - p) * (r - d) * r) / ((u - r) * (d - r))
}

/// Optimal fraction restricted to `[0, 1]` (no leverage, no short selling).
///
/// Case table on `E[X/R]` and `E[R/X]`; ties fall to the interior branch.
pub fn ks_constrained_fraction(mkt: &MarketParams) -> Result<KsSolution> {
    let excess = mkt.expected_excess_ratio();
    let inverse = mkt.expected_inverse_ratio();
    let f_star = if excess >= 1.0 && inverse >= 1.0 {
        unconstrained_fraction(mkt)
    } else if excess > 1.0 && inverse < 1.0 {
        1.0
    } else if excess < 1.0 && inverse > 1.0 {
        0.0
    } else {
        return Err(KellyError::InvariantViolation(format!(
            "constrained Kelly case table not exhaustive: E[X/R]={excess}, E[R/X]={inverse}"
        )));
    };
    Ok(KsSolution {
        f_star,
        growth: ks_growth_rate(f_star, mkt)?,
    })
}

/// Brute-force argmax of [`ks_growth_rate`] on a uniform grid of `resolution`
/// points spanning the feasible interval, each end pulled in by `1e-9` of its
/// width.
pub fn ks_grid_oracle(mkt: &MarketParams, resolution: usize) -> Result<f64> {
    if resolution < 1_000 {
        return Err(KellyError::InvalidParams(format!(
            "grid oracle needs at least 1000 points, got {resolution}"
        )));
    }
    let (lo, hi) = ks_feasible_interval(mkt);
    let (lo, hi) = shrink(lo, hi);
    grid_argmax(lo, hi, resolution, |f| ks_growth_rate(f, mkt).ok())
}

pub(crate) fn shrink(lo: f64, hi: f64) -> (f64, f64) {
    let w = hi - lo;
    (lo + 1e-9 * w, hi - 1e-9 * w)
}

/// Grid spacing used by the oracles.
pub fn grid_spacing(lo: f64, hi: f64, resolution: usize) -> f64 {
    let (lo, hi) = shrink(lo, hi);
    (hi - lo) / (resolution - 1) as f64
}

pub(crate) fn grid_argmax<F>(lo: f64, hi: f64, resolution: usize, objective: F) -> Result<f64>
where
    F: Fn(f64) -> Option<f64>,
{
    let step = (hi - lo) / (resolution - 1) as f64;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..resolution {
        let x = lo + step * i as f64;
        if let Some(v) = objective(x) {
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((x, v));
            }
        }
    }
    best.map(|(x, _)| x)
        .ok_or_else(|| KellyError::Infeasible(format!("no feasible grid point in ({lo}, {hi})")))
}
