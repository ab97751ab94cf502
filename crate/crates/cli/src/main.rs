use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use kelly_opt::{MarketParams, RealizedMarket};
use kelly_opt_cli::commands::{self, exit_code, ChecksFailed, SurfaceGrid, SweepOutput};
use kelly_opt_cli::{Overrides, SweepConfig, Unit};

/// Kelly portfolios with and without a rolling-strike put on a binomial market.
///
/// Exit codes: 0 success, 1 failed verification checks, 2 invalid input,
/// 3 infeasible portfolio or every path ruined.
#[derive(Parser)]
#[command(name = "kelly-opt", version)]
struct Cli {
    /// Report growth rates in bits instead of nats.
    #[arg(long, global = true)]
    log2: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form optimal portfolios.
    #[command(subcommand)]
    Optimize(Optimize),
    /// Growth rate over a (g, c) grid plus the optimal line g*(c), as CSV.
    GrowthSurface(SurfaceArgs),
    /// Misspecification sweep over realized up-factors and horizons.
    Sweep(RunArgs),
    /// One Monte Carlo experiment at the configured realized market.
    Simulate(SimulateArgs),
    /// Randomised checks of the closed-form identities.
    Verify {
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum Optimize {
    /// Stock/bond Kelly fraction f*.
    Ks {
        #[command(flatten)]
        market: MarketArgs,
        /// Clamp f* to [0, 1].
        #[arg(long)]
        constrained: bool,
        /// Cross-check against a brute-force grid search.
        #[arg(long)]
        oracle: bool,
    },
    /// Optimal option fraction g*(c) for a hedge c.
    Ko {
        #[command(flatten)]
        market: MarketArgs,
        #[command(flatten)]
        option: OptionArgs,
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Args)]
struct MarketArgs {
    #[arg(long)]
    u: f64,
    /// Defaults to 1/u.
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    p: f64,
    /// Gross bond return per period.
    #[arg(long = "R")]
    r: f64,
}

impl MarketArgs {
    fn market(&self) -> kelly_opt::Result<MarketParams> {
        MarketParams::new(self.u, self.d.unwrap_or(1.0 / self.u), self.p, self.r)
    }
}

#[derive(Args)]
struct OptionArgs {
    #[arg(long)]
    s0: f64,
    #[arg(long)]
    k0: f64,
}

#[derive(Args)]
struct SurfaceArgs {
    #[command(flatten)]
    market: MarketArgs,
    #[command(flatten)]
    option: OptionArgs,
    #[arg(long, allow_negative_numbers = true, default_value_t = SurfaceGrid::default().g_min)]
    g_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = SurfaceGrid::default().g_max)]
    g_max: f64,
    #[arg(long, default_value_t = SurfaceGrid::default().g_points)]
    g_points: usize,
    #[arg(long, allow_negative_numbers = true, default_value_t = SurfaceGrid::default().c_min)]
    c_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = SurfaceGrid::default().c_max)]
    c_max: f64,
    #[arg(long, default_value_t = SurfaceGrid::default().c_points)]
    c_points: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Single horizon, replacing any horizon grid in the file.
    #[arg(long)]
    steps: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    dump_config: bool,
}

impl RunArgs {
    fn load(&self) -> anyhow::Result<SweepConfig> {
        let mut cfg = SweepConfig::load(&self.config)?;
        cfg.apply(Overrides {
            seed: self.seed,
            paths: self.paths,
            steps: self.steps,
        });
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Realized up-factor (down-factor 1/u_m), replacing `[realized]`.
    #[arg(long)]
    u_m: Option<f64>,
}

fn open_out(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_sweep(out: &SweepOutput, path: Option<&Path>, unit: Unit) -> anyhow::Result<()> {
    let mut w = open_out(path)?;
    kelly_opt_cli::output::write_sweep(&mut w, &out.result.rows, unit)?;
    w.flush()?;
    let summary = commands::summary(out, unit);
    if path.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    out.check_ruin()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let unit = if cli.log2 { Unit::Bits } else { Unit::Nats };
    match cli.command {
        Command::Optimize(Optimize::Ks {
            market,
            constrained,
            oracle,
        }) => {
            let row = commands::optimize_ks(&market.market()?, constrained, oracle, unit)?;
            row.write(io::stdout().lock())?;
        }
        Command::Optimize(Optimize::Ko {
            market,
            option,
            c,
            oracle,
        }) => {
            let row =
                commands::optimize_ko(&market.market()?, option.s0, option.k0, c, oracle, unit)?;
            row.write(io::stdout().lock())?;
        }
        Command::GrowthSurface(a) => {
            let grid = SurfaceGrid {
                g_min: a.g_min,
                g_max: a.g_max,
                g_points: a.g_points,
                c_min: a.c_min,
                c_max: a.c_max,
                c_points: a.c_points,
            };
            let surface =
                commands::growth_surface(&a.market.market()?, a.option.s0, a.option.k0, &grid)?;
            let mut w = open_out(a.out.as_deref())?;
            surface.write(&mut w, unit)?;
            w.flush()?;
            if let Some(best) = surface.best() {
                eprintln!(
                    "grid maximum {:.9} at g={:.6}, c={:.6}; KS optimum {:.9} ({})",
                    unit.scale(best.growth.unwrap_or(f64::NAN)),
                    best.g,
                    best.c,
                    unit.scale(surface.ks_growth),
                    unit.name()
                );
            }
        }
        Command::Sweep(a) => {
            let cfg = a.load()?;
            if a.dump_config {
                print!("{}", cfg.to_toml()?);
                return Ok(());
            }
            let out = commands::run_sweep(&cfg)?;
            emit_sweep(&out, a.out.as_deref(), unit)?;
        }
        Command::Simulate(a) => {
            let mut cfg = a.run.load()?;
            if let Some(u_m) = a.u_m {
                cfg.experiment.realized = RealizedMarket::symmetric(u_m)?;
            }
            if a.run.dump_config {
                print!("{}", cfg.to_toml()?);
                return Ok(());
            }
            let out = commands::run_simulate(&cfg)?;
            emit_sweep(&out, a.run.out.as_deref(), unit)?;
        }
        Command::Verify { draws, seed } => {
            let report = commands::verify(draws, seed);
            print!("{}", commands::format_report(&report));
            let failed = report.checks.iter().filter(|c| !c.pass()).count();
            if failed > 0 {
                return Err(ChecksFailed(failed).into());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
