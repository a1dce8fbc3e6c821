use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Contracting games between an electrolyzer owner and a network operator.
#[derive(Debug, Parser)]
#[command(
    name = "gridpact",
    version,
    about,
    after_help = "Exit codes: 0 success, 1 bad flags or other errors, 2 infeasible, 3 time or node limit reached.\n\
                  The solver backend resolves as --backend, then GRIDPACT_SOLVER, then --config, then bnb."
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario document (JSON). Defaults to the bundled three-hour toy.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Hourly series CSV overriding the scenario's series.
    #[arg(long, global = true)]
    pub series: Option<PathBuf>,
    /// Use the synthetic reference year built from --seed instead of a file.
    #[arg(long, global = true, conflicts_with = "scenario")]
    pub synthetic: bool,
    /// Keep hours START..START+LEN only; annual costs are rescaled.
    #[arg(long, global = true, value_name = "START:LEN", value_parser = parse_slice)]
    pub slice: Option<(usize, usize)>,
    /// Output file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutFormat>,
    /// Relative optimality gap, in (0, 0.5). Default 0.001.
    #[arg(long, global = true, value_parser = parse_gap)]
    pub gap: Option<f64>,
    /// Wall-clock limit per solve in seconds.
    #[arg(long = "time-limit", global = true)]
    pub time_limit: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long = "budget-mode", global = true, value_enum)]
    pub budget_mode: Option<BudgetModeArg>,
    /// Solver backend (bnb, bnb-indicator); GRIDPACT_SOLVER also sets it.
    #[arg(long, global = true)]
    pub backend: Option<String>,
    /// TOML configuration file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum BudgetModeArg {
    PinCrc,
    PinCrcPlus,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum CaseArg {
    Game1,
    Game2,
    ElyHpr,
    NoHpr,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum LinearizationArg {
    Sos1,
    Bigm,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum LayoutArg {
    Tidy,
    Gnuplot,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one case and write its summary row.
    Solve {
        #[arg(long, value_enum)]
        case: CaseArg,
        /// Complementarity linearization for the games.
        #[arg(long, value_enum, default_value = "sos1")]
        linearization: LinearizationArg,
        /// Big-M for --linearization bigm (defaults from the scenario).
        #[arg(long = "big-m")]
        big_m: Option<f64>,
        /// Skip the strong-duality cut.
        #[arg(long = "no-strong-duality")]
        no_strong_duality: bool,
    },
    /// Sweep a parameter across cases and write a tidy table.
    Sweep {
        /// crc-plus, h2 or theta.
        #[arg(long)]
        axis: String,
        #[arg(long, requires_all = ["to", "step"], conflicts_with = "values")]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Explicit comma-separated values instead of a range.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// Comma-separated cases.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "game1,game2,ely-hpr,no-hpr")]
        cases: Vec<CaseArg>,
        /// Worker threads (default: logical cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_enum, default_value = "tidy")]
        layout: LayoutArg,
        /// Report the first value where FIELD satisfies PRED for CASE,
        /// written CASE:FIELD:PRED (PRED: positive, decreasing, increasing,
        /// >X, <X).
        #[arg(long = "find-switch")]
        find_switch: Vec<String>,
    },
    /// Compare the reformulated games with brute-force enumeration.
    OracleCheck {
        /// Grid steps in MW; several values report the refinement sequence.
        #[arg(long = "grid-step", value_delimiter = ',', default_value = "0.25")]
        grid_step: Vec<f64>,
        /// Largest enumerated capacity in MW.
        #[arg(long, default_value_t = 2.0)]
        ceiling: f64,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "game1,game2")]
        cases: Vec<CaseArg>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Write the per-point oracle report of the finest step here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a synthetic scenario and its series file.
    GenData {
        #[arg(long, default_value_t = 8760)]
        hours: usize,
        #[arg(long, default_value_t = 63.0)]
        peak: f64,
        #[arg(long, default_value_t = 0.3)]
        depth: f64,
        #[arg(long = "congestion-hours", default_value_t = 4)]
        congestion_hours: usize,
        #[arg(long = "start-hour", default_value_t = 16)]
        start_hour: usize,
        #[arg(long = "price-level", default_value_t = 60.0)]
        price_level: f64,
        #[arg(long = "price-volatility", default_value_t = 20.0)]
        price_volatility: f64,
        #[arg(long, default_value_t = 1800.0)]
        demand: f64,
        /// Series CSV path; the scenario document links to it.
        #[arg(long = "series-out")]
        series_out: Option<PathBuf>,
    },
    /// Validate a scenario and print its derived parameters.
    Validate,
}

fn parse_gap(s: &str) -> Result<f64, String> {
    let g: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if g > 0.0 && g < 0.5 {
        Ok(g)
    } else {
        Err(format!("gap must lie in (0, 0.5), got {g}"))
    }
}

fn parse_slice(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected START:LEN")?;
    let start = a.trim().parse().map_err(|_| format!("bad start `{a}`"))?;
    let len: usize = b.trim().parse().map_err(|_| format!("bad length `{b}`"))?;
    if len == 0 {
        return Err("slice length must be positive".into());
    }
    Ok((start, len))
}
