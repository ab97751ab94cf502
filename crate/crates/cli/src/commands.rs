use std::fmt::{self, Write as _};
use std::io::Write;

use kelly_opt::kelly_core::{grid_spacing, ks_feasible_interval, ks_grid_oracle};
use kelly_opt::kelly_option::{feasible_g_interval, ko_grid_oracle};
use kelly_opt::simulation::{misspecification_sweep, ConvergenceGap};
use kelly_opt::verify::{run_verification, VerificationReport};
use kelly_opt::{
    convergence_study, hedge_pivot, ko_growth_rate, ko_optimal_g, ks_constrained_fraction,
    ks_optimal_fraction, run_experiment, KellyError, KoParams, MarketParams, StrategySpec,
    SweepResult,
};

use crate::config::SweepConfig;
use crate::output::{num, OutputRow, Unit};

/// Points used by the brute-force oracles.
pub const ORACLE_RESOLUTION: usize = 1_000_001;

/// A failure discovered while running, as opposed to bad input.
#[derive(Debug)]
pub struct RuntimeFailure(pub String);

impl fmt::Display for RuntimeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for RuntimeFailure {}

/// Some `verify` check failed.
#[derive(Debug)]
pub struct ChecksFailed(pub usize);

impl fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} verification check(s) failed", self.0)
    }
}

impl std::error::Error for ChecksFailed {}

/// 3 for runtime infeasibility, 1 for failed checks, 2 for anything
/// rejected as input.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<RuntimeFailure>() {
            return 3;
        }
        if cause.is::<ChecksFailed>() {
            return 1;
        }
        if let Some(KellyError::Infeasible(_) | KellyError::InvariantViolation(_)) =
            cause.downcast_ref::<KellyError>()
        {
            return 3;
        }
    }
    2
}

pub fn optimize_ks(
    mkt: &MarketParams,
    constrained: bool,
    oracle: bool,
    unit: Unit,
) -> anyhow::Result<OutputRow> {
    let sol = if constrained {
        ks_constrained_fraction(mkt)?
    } else {
        ks_optimal_fraction(mkt)
    };
    let mut row = OutputRow::new(if constrained {
        "optimize ks --constrained"
    } else {
        "optimize ks"
    });
    row.number("u", mkt.u())
        .number("d", mkt.d())
        .number("p", mkt.p())
        .number("R", mkt.r())
        .number("f_star", sol.f_star)
        .number("growth", unit.scale(sol.growth));
    if oracle {
        let f = ks_grid_oracle(mkt, ORACLE_RESOLUTION)?;
        let (lo, hi) = ks_feasible_interval(mkt);
        row.number("oracle_f", f)
            .number(
                "oracle_residual",
                (f - ks_optimal_fraction(mkt).f_star).abs(),
            )
            .number("oracle_spacing", grid_spacing(lo, hi, ORACLE_RESOLUTION));
    }
    Ok(row)
}

pub fn optimize_ko(
    mkt: &MarketParams,
    s0: f64,
    k0: f64,
    c: f64,
    oracle: bool,
    unit: Unit,
) -> anyhow::Result<OutputRow> {
    let ko = KoParams::from_strike(mkt, s0, k0)?;
    let sol = ko_optimal_g(c, &ko)?;
    let mut row = OutputRow::new("optimize ko");
    row.number("u", mkt.u())
        .number("d", mkt.d())
        .number("p", mkt.p())
        .number("R", mkt.r())
        .number("S0", s0)
        .number("K0", k0)
        .number("P0", ko.contract().p0())
        .number("u_tilde", ko.u_tilde())
        .number("d_tilde", ko.d_tilde())
        .number("c", c)
        .number("g_star", sol.g_star)
        .number("f_stock", sol.f_stock)
        .number("f_replicating", sol.f_replicating)
        .number("c_hat", hedge_pivot(&ko))
        .number("growth", unit.scale(sol.growth))
        .number("ks_growth", unit.scale(ks_optimal_fraction(mkt).growth));
    if oracle {
        let g = ko_grid_oracle(c, &ko, ORACLE_RESOLUTION)?;
        let (lo, hi) = feasible_g_interval(c, &ko);
        row.number("oracle_g", g)
            .number("oracle_residual", (g - sol.g_star).abs())
            .number("oracle_spacing", grid_spacing(lo, hi, ORACLE_RESOLUTION));
    }
    Ok(row)
}

/// Rectangular `(g, c)` grid, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceGrid {
    pub g_min: f64,
    pub g_max: f64,
    pub g_points: usize,
    pub c_min: f64,
    pub c_max: f64,
    pub c_points: usize,
}

impl Default for SurfaceGrid {
    fn default() -> Self {
        SurfaceGrid {
            g_min: -0.5,
            g_max: 1.0,
            g_points: 301,
            c_min: -1.0,
            c_max: 1.5,
            c_points: 501,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCell {
    pub g: f64,
    pub c: f64,
    /// `None` where a payoff is non-positive.
    pub growth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthSurface {
    pub cells: Vec<SurfaceCell>,
    /// `(c, g*(c), growth)` at each grid `c` where the optimum is feasible.
    pub locus: Vec<SurfaceCell>,
    pub ks_growth: f64,
}

impl GrowthSurface {
    pub fn best(&self) -> Option<SurfaceCell> {
        self.cells
            .iter()
            .filter(|c| c.growth.is_some())
            .copied()
            .max_by(|a, b| a.growth.partial_cmp(&b.growth).expect("finite growth"))
    }

    pub fn write<W: Write>(&self, out: W, unit: Unit) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "g", "c", "growth"])?;
        for (kind, cells) in [("grid", &self.cells), ("locus", &self.locus)] {
            for cell in cells {
                let growth = cell
                    .growth
                    .map(|x| num(unit.scale(x)))
                    .unwrap_or_else(|| "INFEASIBLE".to_string());
                w.write_record([kind.to_string(), num(cell.g), num(cell.c), growth])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn growth_surface(
    mkt: &MarketParams,
    s0: f64,
    k0: f64,
    grid: &SurfaceGrid,
) -> anyhow::Result<GrowthSurface> {
    if grid.g_points == 0
        || grid.c_points == 0
        || grid.g_min > grid.g_max
        || grid.c_min > grid.c_max
    {
        return Err(KellyError::InvalidParams(format!("degenerate surface grid {grid:?}")).into());
    }
    let ko = KoParams::from_strike(mkt, s0, k0)?;
    let mut cells = Vec::with_capacity(grid.g_points * grid.c_points);
    for g in linspace(grid.g_min, grid.g_max, grid.g_points) {
        for c in linspace(grid.c_min, grid.c_max, grid.c_points) {
            cells.push(SurfaceCell {
                g,
                c,
                growth: ko_growth_rate(g, c, &ko).ok(),
            });
        }
    }
    let locus = linspace(grid.c_min, grid.c_max, grid.c_points)
        .filter_map(|c| ko_optimal_g(c, &ko).ok())
        .map(|s| SurfaceCell {
            g: s.g_star,
            c: s.c,
            growth: Some(s.growth),
        })
        .collect();
    Ok(GrowthSurface {
        cells,
        locus,
        ks_growth: ks_optimal_fraction(mkt).growth,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub result: SweepResult,
    pub gaps: Vec<ConvergenceGap>,
    pub warnings: Vec<String>,
}

impl SweepOutput {
    pub fn check_ruin(&self) -> anyhow::Result<()> {
        let ruined: Vec<String> = self
            .result
            .rows
            .iter()
            .filter(|r| r.all_ruined())
            .map(|r| format!("{} at u_m={}, n={}", r.strategy, r.u_m, r.n))
            .collect();
        if ruined.is_empty() {
            Ok(())
        } else {
            Err(RuntimeFailure(format!("every path ruined for {}", ruined.join(", "))).into())
        }
    }
}

/// Runs the configured sweep over `u_m` and horizon grids. With a KOc
/// strategy present the run also measures each mixture's gap to its better
/// component (adding the component KO rows when missing).
pub fn run_sweep(cfg: &SweepConfig) -> anyhow::Result<SweepOutput> {
    let base = &cfg.experiment;
    base.validate()?;
    let u_grid = cfg.u_m_grid();
    let n_grid = cfg.n_grid();
    let has_mixture = base
        .strategies
        .iter()
        .any(|s| matches!(s, StrategySpec::Koc { .. }));
    let (result, gaps) = if has_mixture {
        let study = convergence_study(base, &u_grid, &n_grid)?;
        (study.sweep, study.gaps)
    } else {
        if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(KellyError::Config(format!(
                "horizon grid must be non-empty and strictly ascending, got {n_grid:?}"
            ))
            .into());
        }
        let mut all = SweepResult::default();
        for &n in &n_grid {
            let mut e = base.clone();
            e.steps = n;
            all.rows.extend(misspecification_sweep(&e, &u_grid)?.rows);
        }
        (all, Vec::new())
    };
    Ok(SweepOutput {
        result,
        gaps,
        warnings: base.warnings(),
    })
}

/// One experiment at the configured realized market.
pub fn run_simulate(cfg: &SweepConfig) -> anyhow::Result<SweepOutput> {
    let e = &cfg.experiment;
    e.validate()?;
    Ok(SweepOutput {
        result: SweepResult {
            rows: run_experiment(e)?,
        },
        gaps: Vec::new(),
        warnings: e.warnings(),
    })
}

/// Strategy ranking at each `(n, u_m)`, best first, then mixture gaps.
pub fn summary(out: &SweepOutput, unit: Unit) -> String {
    let mut s = String::new();
    for w in &out.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    let rows = &out.result.rows;
    let mut start = 0;
    while start < rows.len() {
        let (n, u_m) = (rows[start].n, rows[start].u_m);
        let end = start
            + rows[start..]
                .iter()
                .take_while(|r| r.n == n && r.u_m == u_m)
                .count();
        let mut group: Vec<_> = rows[start..end].iter().collect();
        group.sort_by(|a, b| b.mean_growth.total_cmp(&a.mean_growth));
        let ranking: Vec<String> = group
            .iter()
            .map(|r| {
                let ruin = if r.ruin_count > 0 {
                    format!(" [{} ruined]", r.ruin_count)
                } else {
                    String::new()
                };
                format!("{} {:.6}{ruin}", r.strategy, unit.scale(r.mean_growth))
            })
            .collect();
        let _ = writeln!(s, "n={n} u_m={u_m}: {}", ranking.join(" > "));
        start = end;
    }
    for g in &out.gaps {
        let _ = writeln!(
            s,
            "n={} u_m={} {}: gap to best component {:.6} (mixing bound {:.6}, stderr {:.6})",
            g.n,
            g.u_m,
            g.mixture.label(),
            unit.scale(g.gap),
            unit.scale(g.mixing_bound),
            unit.scale(g.koc_stderr)
        );
    }
    let _ = writeln!(s, "growth rates in {}", unit.name());
    s
}

pub fn verify(draws: usize, seed: u64) -> VerificationReport {
    run_verification(draws, seed)
}

pub fn format_report(report: &VerificationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "seed {}", report.seed);
    for c in &report.checks {
        let _ = writeln!(
            s,
            "[{}] {} ({} draws, {} failures, worst {:.3e}, tolerance {:.1e})",
            if c.pass() { "PASS" } else { "FAIL" },
            c.name,
            c.draws,
            c.failures,
            c.worst,
            c.tolerance
        );
    }
    for n in &report.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_market() -> MarketParams {
        MarketParams::new(2.0, 0.5, 0.5, 1.05).unwrap()
    }

    #[test]
    fn ks_row_reports_optimum_and_oracle() {
        let mkt = MarketParams::new(1.5, 0.6667, 0.5, 1.05).unwrap();
        let row = optimize_ks(&mkt, false, true, Unit::Nats).unwrap();
        let f: f64 = row.get("f_star").unwrap().parse().unwrap();
        assert!((f - 0.2029).abs() < 1e-3);
        let resid: f64 = row.get("oracle_residual").unwrap().parse().unwrap();
        assert!(resid < 1e-5);
    }

    #[test]
    fn ko_at_pivot_holds_no_option() {
        let ko = KoParams::from_strike(&reference_market(), 100.0, 110.0).unwrap();
        let row = optimize_ko(
            &reference_market(),
            100.0,
            110.0,
            hedge_pivot(&ko),
            false,
            Unit::Nats,
        )
        .unwrap();
        let g: f64 = row.get("g_star").unwrap().parse().unwrap();
        assert!(g.abs() < 1e-12);
    }

    #[test]
    fn exit_codes_separate_input_from_runtime() {
        let err =
            optimize_ko(&reference_market(), 100.0, 300.0, 0.0, false, Unit::Nats).unwrap_err();
        assert_eq!(exit_code(&err), 2);
        let err: anyhow::Error = KellyError::Infeasible("x".into()).into();
        assert_eq!(exit_code(&err.context("while running")), 3);
        assert_eq!(exit_code(&RuntimeFailure("ruined".into()).into()), 3);
    }

    #[test]
    fn surface_marks_infeasible_cells() {
        let grid = SurfaceGrid {
            g_min: -5.0,
            g_max: 5.0,
            g_points: 11,
            c_min: -5.0,
            c_max: 5.0,
            c_points: 11,
        };
        let s = growth_surface(&reference_market(), 100.0, 110.0, &grid).unwrap();
        assert!(s.cells.iter().any(|c| c.growth.is_none()));
        let mut buf = Vec::new();
        s.write(&mut buf, Unit::Nats).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("INFEASIBLE"));
    }

    #[test]
    fn bits_rescale_growth() {
        let mkt = reference_market();
        let nats = optimize_ks(&mkt, false, false, Unit::Nats).unwrap();
        let bits = optimize_ks(&mkt, false, false, Unit::Bits).unwrap();
        let n: f64 = nats.get("growth").unwrap().parse().unwrap();
        let b: f64 = bits.get("growth").unwrap().parse().unwrap();
        assert!((b * std::f64::consts::LN_2 - n).abs() < 1e-12);
    }
}
