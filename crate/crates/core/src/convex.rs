//! Buy-and-hold mixture of two Kelly-with-option portfolios.
//!
//! `W^KOc_n = a W^(1)_n + (1 - a) W^(2)_n`, each component compounding on its
//! own. In log space the mixture obeys
//!
//! ```text
//! a log W1 + (1-a) log W2  <=  log W^KOc  <=  max(log W1, log W2)
//! max(log W1, log W2) + log min(a, 1-a)  <=  log W^KOc
//! ```
//!
//! so its growth rate converges to the better component's for any `a`.

use serde::{Deserialize, Serialize};

use crate::error::{KellyError, Result};

/// Hedges of the two components and the mixing weight of the first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KocConfig {
    pub c1: f64,
    pub c2: f64,
    pub a: f64,
}

impl KocConfig {
    pub fn new(c1: f64, c2: f64, a: f64) -> Result<Self> {
        let cfg = KocConfig { c1, c2, a };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_weight(self.a)?;
        if !(self.c1.is_finite() && self.c2.is_finite()) {
            return Err(KellyError::InvalidParams(format!(
                "hedges must be finite, got c1={}, c2={}",
                self.c1, self.c2
            )));
        }
        Ok(())
    }

    /// Whether `c1 < ĉ < c2`. Other placements are allowed but lose the
    /// two-sided protection.
    pub fn straddles(&self, c_hat: f64) -> bool {
        self.c1 < c_hat && c_hat < self.c2
    }
}

fn check_weight(a: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(KellyError::Domain(format!(
            "mixing weight must lie in (0, 1), got {a}"
        )));
    }
    Ok(())
}

/// `a w1 + (1 - a) w2`.
pub fn koc_wealth(w1: f64, w2: f64, a: f64) -> Result<f64> {
    check_weight(a)?;
    if !(w1 > 0.0 && w2 > 0.0) {
        return Err(KellyError::Domain(format!(
            "component wealth must be positive, got w1={w1}, w2={w2}"
        )));
    }
    Ok(a * w1 + (1.0 - a) * w2)
}

/// `a log W1 + (1 - a) log W2`, evaluated as `M - w (M - m)` with `M` the
/// larger log-wealth, `m` the smaller and `w` the smaller one's weight, so the
/// result never exceeds `M` in floating point.
pub fn jensen_log_wealth(log_w1: f64, log_w2: f64, a: f64) -> f64 {
    let (hi, lo, w_lo) = if log_w1 >= log_w2 {
        (log_w1, log_w2, 1.0 - a)
    } else {
        (log_w2, log_w1, a)
    };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi - w_lo * (hi - lo)
}

/// Per-period Jensen reference `(a log W1 + (1 - a) log W2) / n`.
pub fn jensen_reference(log_w1: f64, log_w2: f64, a: f64, n: usize) -> f64 {
    jensen_log_wealth(log_w1, log_w2, a) / n as f64
}

/// Analytic bracket `(max + log min(a, 1-a), max)` on `log W^KOc`.
pub fn sandwich_bounds(log_w1: f64, log_w2: f64, a: f64) -> (f64, f64) {
    let hi = log_w1.max(log_w2);
    (hi + a.min(1.0 - a).ln(), hi)
}

/// Mixture log-wealth with the rounding-level discrepancy it was corrected by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KocLogWealth {
    /// `log(a W1 + (1-a) W2)`, kept inside the analytic bracket.
    pub value: f64,
    /// Max-shifted evaluation before projection onto the bracket.
    pub raw: f64,
}

impl KocLogWealth {
    pub fn correction(&self) -> f64 {
        if self.value == self.raw {
            0.0
        } else {
            (self.value - self.raw).abs()
        }
    }
}

/// `log(a e^{log_w1} + (1 - a) e^{log_w2})` without overflow.
///
/// A component at `-inf` (ruined) contributes nothing. The shifted evaluation
/// can land an ulp outside the analytic bracket
/// `[max(jensen, max + log min(a,1-a)), max]`; the returned value is clamped
/// to it and [`KocLogWealth::raw`] keeps the unclamped number.
pub fn koc_log_wealth(log_w1: f64, log_w2: f64, a: f64) -> KocLogWealth {
    let (hi, lo, w_hi, w_lo) = if log_w1 >= log_w2 {
        (log_w1, log_w2, a, 1.0 - a)
    } else {
        (log_w2, log_w1, 1.0 - a, a)
    };
    if hi == f64::NEG_INFINITY {
        return KocLogWealth {
            value: f64::NEG_INFINITY,
            raw: f64::NEG_INFINITY,
        };
    }
    let raw = hi + (w_hi + w_lo * (lo - hi).exp()).ln();
    let (lower, upper) = sandwich_bounds(log_w1, log_w2, a);
    let lower = lower.max(jensen_log_wealth(log_w1, log_w2, a));
    KocLogWealth {
        value: raw.clamp(lower, upper),
        raw,
    }
}

/// `(lower, value, upper)` of the bound
/// `max x + log min λ <= log Σ λ_i e^{x_i} <= max x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LseBounds {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

/// Evaluates the weighted log-sum-exp with max shifting, alongside its bounds.
///
/// Weights must be positive and sum to one within `1e-12`. Rounding is kept
/// inside the bounds as in [`koc_log_wealth`].
pub fn log_sum_exp_bounds(xs: &[f64], lambdas: &[f64]) -> Result<LseBounds> {
    if xs.is_empty() || xs.len() != lambdas.len() {
        return Err(KellyError::Domain(format!(
            "need matching non-empty inputs, got {} values and {} weights",
            xs.len(),
            lambdas.len()
        )));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
        return Err(KellyError::Domain("weights must lie in (0, 1]".into()));
    }
    let total: f64 = lambdas.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(KellyError::Domain(format!("weights sum to {total}, not 1")));
    }
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_weight = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let lower = max + min_weight.ln();
    let shifted: f64 = xs
        .iter()
        .zip(lambdas)
        .map(|(&x, &l)| l * (x - max).exp())
        .sum();
    let value = (max + shifted.ln()).clamp(lower, max);
    Ok(LseBounds {
        lower,
        value,
        upper: max,
    })
}

/// Asymptotic growth of the mixture: the larger component growth.
pub fn koc_asymptotic_growth(g1: f64, g2: f64) -> f64 {
    g1.max(g2)
}
