//! Binomial market: parameters, one-period put pricing, the rolling strike
//! and seeded price paths.
//!
//! Two parameter sets coexist. [`MarketParams`] holds the investor's beliefs
//! and drives every optimisation and every option price. [`RealizedMarket`]
//! holds the factors the simulated stock actually moves by. They coincide in
//! the well-specified case.

use rand::distr::{Bernoulli, Distribution};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KellyError, Result};

/// Believed one-period binomial market `(u, d, p, R)`.
///
/// Construction enforces `0 < d < R < u` and `0 < p < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMarket", into = "RawMarket")]
pub struct MarketParams {
    u: f64,
    d: f64,
    p: f64,
    r: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawMarket {
    u: f64,
    d: f64,
    p: f64,
    #[serde(rename = "R")]
    r: f64,
}

impl TryFrom<RawMarket> for MarketParams {
    type Error = KellyError;

    fn try_from(raw: RawMarket) -> Result<Self> {
        MarketParams::new(raw.u, raw.d, raw.p, raw.r)
    }
}

impl From<MarketParams> for RawMarket {
    fn from(m: MarketParams) -> Self {
        RawMarket {
            u: m.u,
            d: m.d,
            p: m.p,
            r: m.r,
        }
    }
}

impl MarketParams {
    pub fn new(u: f64, d: f64, p: f64, r: f64) -> Result<Self> {
        if !(u.is_finite() && d.is_finite() && p.is_finite() && r.is_finite()) {
            return Err(KellyError::InvalidParams(format!(
                "non-finite market parameter (u={u}, d={d}, p={p}, R={r})"
            )));
        }
        if !(d > 0.0 && d < u) {
            return Err(KellyError::InvalidParams(format!(
                "require 0 < d < u, got d={d}, u={u}"
            )));
        }
        if !(d < r && r < u) {
            return Err(KellyError::InvalidParams(format!(
                "no-arbitrage requires d < R < u, got d={d}, R={r}, u={u}"
            )));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(KellyError::InvalidParams(format!(
                "up-probability must lie in (0, 1), got p={p}"
            )));
        }
        Ok(MarketParams { u, d, p, r })
    }

    /// Market with `d = 1/u`.
    pub fn symmetric(u: f64, p: f64, r: f64) -> Result<Self> {
        Self::new(u, 1.0 / u, p, r)
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Gross one-period bond return.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Stock relative for a move under these parameters.
    pub fn factor(&self, mv: Move) -> f64 {
        match mv {
            Move::Up => self.u,
            Move::Down => self.d,
        }
    }

    /// `E[X/R]`.
    pub fn expected_excess_ratio(&self) -> f64 {
        (self.p * self.u + (1.0 - self.p) * self.d) / self.r
    }

    /// `E[R/X]`.
    pub fn expected_inverse_ratio(&self) -> f64 {
        self.p * self.r / self.u + (1.0 - self.p) * self.r / self.d
    }
}

/// Factors the stock really moves by in a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRealized", into = "RawRealized")]
pub struct RealizedMarket {
    u_m: f64,
    d_m: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawRealized {
    u_m: f64,
    d_m: f64,
}

impl TryFrom<RawRealized> for RealizedMarket {
    type Error = KellyError;

    fn try_from(raw: RawRealized) -> Result<Self> {
        RealizedMarket::new(raw.u_m, raw.d_m)
    }
}

impl From<RealizedMarket> for RawRealized {
    fn from(m: RealizedMarket) -> Self {
        RawRealized {
            u_m: m.u_m,
            d_m: m.d_m,
        }
    }
}

impl RealizedMarket {
    pub fn new(u_m: f64, d_m: f64) -> Result<Self> {
        if !(u_m.is_finite() && d_m.is_finite() && d_m > 0.0 && d_m < u_m) {
            return Err(KellyError::InvalidParams(format!(
                "realized factors require 0 < d_m < u_m, got d_m={d_m}, u_m={u_m}"
            )));
        }
        Ok(RealizedMarket { u_m, d_m })
    }

    /// Realized market with `d_m = 1/u_m`, as used in the misspecification sweeps.
    pub fn symmetric(u_m: f64) -> Result<Self> {
        Self::new(u_m, 1.0 / u_m)
    }

    /// The realized market that matches the believed one.
    pub fn matching(mkt: &MarketParams) -> Self {
        RealizedMarket {
            u_m: mkt.u(),
            d_m: mkt.d(),
        }
    }

    pub fn u_m(&self) -> f64 {
        self.u_m
    }

    pub fn d_m(&self) -> f64 {
        self.d_m
    }

    pub fn factor(&self, mv: Move) -> f64 {
        match mv {
            Move::Up => self.u_m,
            Move::Down => self.d_m,
        }
    }
}

/// One-period European put price on the believed tree:
/// `P0 = (1/R) (u - R)/(u - d) (K0 - d S0)`.
///
/// Accepts `K0 = d S0` (price zero); rejects strikes outside `[d S0, u S0)`.
pub fn put_price(mkt: &MarketParams, s0: f64, k0: f64) -> Result<f64> {
    if !(s0.is_finite() && s0 > 0.0) {
        return Err(KellyError::Domain(format!(
            "spot must be positive, got {s0}"
        )));
    }
    let (lo, hi) = (mkt.d() * s0, mkt.u() * s0);
    if !(k0 >= lo && k0 < hi) {
        return Err(KellyError::Domain(format!(
            "strike {k0} outside [{lo}, {hi}): the put would be trivially always or never exercised"
        )));
    }
    let (u, d, r) = (mkt.u(), mkt.d(), mkt.r());
    Ok((u - r) / (u - d) * (k0 - d * s0) / r)
}

/// Put written at time zero with its arbitrage-free premium on the believed tree.
///
/// Under the rolling strike the ratios `K_t/S_t` and `S_t/P_t` stay at their
/// initial values, so the contract is summarised by the two ratios below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionContract {
    s0: f64,
    k0: f64,
    p0: f64,
}

impl OptionContract {
    /// Requires `d S0 < K0 < u S0`.
    pub fn new(mkt: &MarketParams, s0: f64, k0: f64) -> Result<Self> {
        let p0 = put_price(mkt, s0, k0)?;
        if p0 <= 0.0 {
            return Err(KellyError::Domain(format!(
                "strike {k0} must exceed d*S0 = {} for a positive premium",
                mkt.d() * s0
            )));
        }
        Ok(OptionContract { s0, k0, p0 })
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// `S0/P0`, shares per unit of premium.
    pub fn spot_per_premium(&self) -> f64 {
        self.s0 / self.p0
    }

    /// `K0/P0`.
    pub fn strike_per_premium(&self) -> f64 {
        self.k0 / self.p0
    }

    /// Payoff `(K_{t-1} - S_t)^+ / P_{t-1}` of one unit of premium when the
    /// stock moves by the relative `x`, strike and premium rolled from `t-1`.
    pub fn settle_per_premium(&self, x: f64) -> f64 {
        (self.k0 - self.s0 * x).max(0.0) / self.p0
    }
}

/// Rolls the strike along the believed tree: `K_t = K_{t-1} u` on an up move,
/// `K_{t-1} d` on a down move.
pub fn roll_strike(k_prev: f64, mv: Move, mkt: &MarketParams) -> f64 {
    k_prev * mkt.factor(mv)
}

/// Explicit spot/strike/premium state of a rolled put.
///
/// The strike follows the realized price (`K_t = K0 S_t/S0`) and the premium
/// is re-priced each period from the believed tree. The simulation engine
/// uses the equivalent ratio form in [`OptionContract::settle_per_premium`];
/// this type exists to check that equivalence on concrete paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollingPut {
    pub spot: f64,
    pub strike: f64,
    pub premium: f64,
}

impl RollingPut {
    pub fn start(contract: &OptionContract) -> Self {
        RollingPut {
            spot: contract.s0(),
            strike: contract.k0(),
            premium: contract.p0(),
        }
    }

    /// Advances one period with realized stock relative `x`; returns the put
    /// payoff per unit of the premium paid at the start of the period.
    pub fn step(&mut self, x: f64, believed: &MarketParams) -> Result<f64> {
        let new_spot = self.spot * x;
        let payoff = (self.strike - new_spot).max(0.0) / self.premium;
        self.strike *= x;
        self.spot = new_spot;
        self.premium = put_price(believed, self.spot, self.strike)?;
        Ok(payoff)
    }
}

/// A single binomial outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    Up,
    Down,
}

/// Sequence of i.i.d. Bernoulli(p) moves, reproducible from `(seed, stream)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PricePath {
    pub moves: Vec<Move>,
    pub seed: u64,
    pub stream: u64,
}

impl PricePath {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn up_count(&self) -> usize {
        self.moves.iter().filter(|m| **m == Move::Up).count()
    }
}

/// Draws `n` moves from stream 0 of the generator keyed by `seed`.
pub fn generate_path(mkt: &MarketParams, n: usize, seed: u64) -> Result<PricePath> {
    generate_path_stream(mkt, n, seed, 0)
}

/// Draws `n` moves from stream `stream` of a ChaCha8 generator keyed by `seed`.
///
/// Each stream is independent, so path `i` of a batch can be regenerated
/// without producing paths `0..i`.
pub fn generate_path_stream(
    mkt: &MarketParams,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<PricePath> {
    if n == 0 {
        return Err(KellyError::InvalidParams(
            "path length must be at least 1".into(),
        ));
    }
    let coin = Bernoulli::new(mkt.p())
        .map_err(|e| KellyError::InvalidParams(format!("up-probability: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let moves = (0..n)
        .map(|_| {
            if coin.sample(&mut rng) {
                Move::Up
            } else {
                Move::Down
            }
        })
        .collect();
    Ok(PricePath {
        moves,
        seed,
        stream,
    })
}
