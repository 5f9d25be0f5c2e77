use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use garnier_core::backlund::MapName;
use garnier_core::charts::ChartName;
use garnier_core::exactalg::{RationalExpr, Scalar};
use garnier_core::model::{build_system, HamiltonianSystem, ParameterSet};
use garnier_core::singular::{BoundaryName, LocusName};

mod commands;
mod integrate;
mod report;

use report::Report;

/// Rejected input; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "garnier", version, about = "Verification reports for the two-time Garnier-type Hamiltonian system")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Keep all six parameters free instead of eliminating a0 through the relation.
    #[arg(long, global = true)]
    no_relation: bool,
    /// Numeric parameters a0..a5, comma separated rationals. Must satisfy the relation.
    #[arg(long, global = true, value_name = "A0,..,A5")]
    alpha: Option<String>,
    /// Numeric value for eta (a rational other than 0 and 1).
    #[arg(long, global = true)]
    eta: Option<String>,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that every chart turns H1 and H2 into polynomials.
    VerifyHolomorphy {
        #[arg(long, default_value = "all", value_parser = parse_chart)]
        chart: ChartChoice,
    },
    /// Check the birational maps as symmetries of the system.
    VerifyBacklund {
        #[arg(long, default_value = "all", value_parser = parse_map)]
        map: MapChoice,
    },
    /// Check the invariant divisors under their triggering relations.
    VerifyDivisors,
    /// Check the relations among the generators.
    GroupRelations,
    /// Compatibility of the two Hamiltonians.
    Frobenius,
    /// Accessible singular loci on the boundary charts.
    Singularities {
        #[arg(long, value_parser = BoundaryName::from_str)]
        chart: Option<BoundaryName>,
    },
    /// Linear part and local index at a singular locus.
    LocalIndex {
        #[arg(long, value_parser = LocusName::from_str)]
        locus: LocusName,
        #[arg(long, default_value = "X3", value_parser = BoundaryName::from_str)]
        chart: BoundaryName,
    },
    /// Resolve a locus by blowing up and compare with its chart.
    BlowUp {
        #[arg(long, value_parser = LocusName::from_str)]
        locus: LocusName,
        /// Include the composite change of variables.
        #[arg(long)]
        emit_chart: bool,
    },
    /// Integrate the flows along a configured path.
    Integrate {
        #[arg(long)]
        config: PathBuf,
        /// Write the sampled trajectory as whitespace-separated columns.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// The full symbolic suite.
    VerifyAll,
}

#[derive(Debug, Clone)]
enum ChartChoice {
    All,
    One(ChartName),
}

#[derive(Debug, Clone)]
enum MapChoice {
    All,
    One(MapName),
}

fn parse_chart(s: &str) -> Result<ChartChoice, String> {
    if s == "all" {
        return Ok(ChartChoice::All);
    }
    match ChartName::from_str(s) {
        Ok(ChartName::Identity) | Err(_) => Err(format!("unknown chart `{s}` (expected r0..r5 or all)")),
        Ok(c) => Ok(ChartChoice::One(c)),
    }
}

fn parse_map(s: &str) -> Result<MapChoice, String> {
    if s == "all" {
        return Ok(MapChoice::All);
    }
    MapName::from_str(s).map(MapChoice::One).map_err(|_| format!("unknown map `{s}` (expected s1, s2, pi1..pi5 or all)"))
}

fn parse_scalar(s: &str) -> Result<Scalar> {
    Scalar::from_str(s.trim()).map_err(|e| UsageError(format!("bad rational `{s}`: {e}")).into())
}

/// Parameters for symbolic runs. Numeric input is checked against the
/// relation before anything is computed.
fn parameters(c: &Common) -> Result<ParameterSet> {
    let eta = c.eta.as_deref().map(parse_scalar).transpose()?;
    if let Some(e) = &eta {
        if e.is_zero() || e.is_one() {
            return Err(UsageError("eta must differ from 0 and 1".into()).into());
        }
    }
    let mut p = match &c.alpha {
        Some(list) => {
            let vals: Vec<Scalar> = list.split(',').map(parse_scalar).collect::<Result<_>>()?;
            let arr: [Scalar; 6] =
                vals.try_into().map_err(|_| UsageError("--alpha needs six values a0..a5".into()))?;
            let eta = eta.clone().unwrap_or_else(|| Scalar::from_int(2));
            ParameterSet::numeric(arr, eta).map_err(|e| UsageError(format!("parameters rejected: {e}")))?
        }
        None if c.no_relation => ParameterSet::symbolic(),
        None => ParameterSet::with_relation(0),
    };
    if let Some(e) = eta {
        p.eta = RationalExpr::constant(e);
    }
    Ok(p)
}

fn system(c: &Common) -> Result<HamiltonianSystem> {
    Ok(build_system(&parameters(c)?)?)
}

fn run(cli: &Cli) -> Result<Report> {
    let c = &cli.common;
    // Reject bad parameters before any work, including commands that ignore them.
    parameters(c)?;
    match &cli.command {
        Command::VerifyHolomorphy { chart } => {
            let charts = match chart {
                ChartChoice::All => ChartName::ALL.to_vec(),
                ChartChoice::One(n) => vec![*n],
            };
            Ok(commands::holomorphy(&system(c)?, &charts))
        }
        Command::VerifyBacklund { map } => {
            let maps = match map {
                MapChoice::All => MapName::ALL.to_vec(),
                MapChoice::One(m) => vec![*m],
            };
            Ok(commands::backlund(&system(c)?, &maps))
        }
        Command::VerifyDivisors => Ok(commands::divisors()),
        Command::GroupRelations => Ok(commands::relations()),
        Command::Frobenius => commands::frobenius(&system(c)?, true),
        Command::Singularities { chart } => {
            let charts = chart.map_or(BoundaryName::ALL.to_vec(), |b| vec![b]);
            commands::singularities(&system(c)?, &charts)
        }
        Command::LocalIndex { locus, chart } => commands::local_index(&system(c)?, *chart, *locus),
        Command::BlowUp { locus, emit_chart } => commands::blow_up(&system(c)?, *locus, *emit_chart),
        Command::Integrate { config, trajectory } => {
            let text = fs::read_to_string(config)
                .map_err(|e| UsageError(format!("cannot read {}: {e}", config.display())))?;
            let (rep, traj) = integrate::run(&integrate::load(&text)?)?;
            if let Some(path) = trajectory {
                fs::write(path, traj).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(rep)
        }
        Command::VerifyAll => commands::verify_all(&system(c)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("internal error: {e:#}");
            return ExitCode::from(3);
        }
    };
    let text = if cli.common.json { report.to_json() } else { report.to_text() };
    match &cli.common.output {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                eprintln!("internal error: writing {}: {e}", path.display());
                return ExitCode::from(3);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(if report.passed { 0 } else { 1 })
}
