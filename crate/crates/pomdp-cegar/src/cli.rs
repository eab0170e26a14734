//! Command-line front end: `check`, `cegar`, `quotient`, `simcheck`.
//!
//! Exit codes: 0 = satisfied / proved / simulated, 1 = violated /
//! disproved / not simulated, 2 = any error. Reports go to stdout,
//! diagnostics to stderr.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::abstraction::check_safe_simulation;
use crate::cegar::{iteration_contexts, run_cegar, CegarConfig, CegarOutcome};
use crate::checker::{model_check, CheckConfig};
use crate::error::{Error, Result};
use crate::logic::parse_spec;
use crate::model::Waz;
use crate::parse::{parse_model, parse_partition, write_waz};
use crate::report;

#[derive(Parser)]
#[command(name = "pomdp-cegar", version, about = "Finite-horizon safety verification of POMDPs by counterexample-guided abstraction refinement")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Plain-text report with fractions and decimals.
    Human,
    /// A single JSON document with exact fractions only.
    Structured,
}

#[derive(Args)]
struct ModelArgs {
    /// Model file (POMDP or weighted automaton).
    #[arg(long)]
    model: PathBuf,
    /// Bounded-until specification, e.g. 'P<=0.45 [ true U<=20 "fail" ]'.
    #[arg(long)]
    spec: String,
    /// Cap on distinct (belief, depth) memo entries in the checker.
    #[arg(long, default_value_t = 1_000_000)]
    memo_budget: usize,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model directly against the spec, without abstraction.
    Check(ModelArgs),
    /// Run the full abstraction-refinement loop.
    Cegar {
        #[command(flatten)]
        common: ModelArgs,
        /// Assert per iteration that the quotient simulates the concrete
        /// system (correctness oracle).
        #[arg(long)]
        verify_simulation: bool,
    },
    /// Emit the quotient of the model under a partition, in model format.
    Quotient {
        /// Model file (POMDP or weighted automaton).
        #[arg(long)]
        model: PathBuf,
        /// Partition file: one `name: member member ...` line per block.
        #[arg(long)]
        partition: PathBuf,
    },
    /// Check that the second model safely simulates the first.
    Simcheck {
        /// The simulated (smaller) model.
        #[arg(long)]
        model: PathBuf,
        /// The simulating (larger) model.
        #[arg(long)]
        against: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
}

fn load_waz(path: &Path) -> Result<Waz> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_model(&text)?.into_waz())
}

fn budget_config(memo_budget: usize) -> Result<CheckConfig> {
    if memo_budget == 0 {
        return Err(Error::Model("--memo-budget must be positive".into()));
    }
    Ok(CheckConfig { memo_budget, ..CheckConfig::default() })
}

fn cmd_check(args: &ModelArgs) -> Result<i32> {
    let system = load_waz(&args.model)?;
    let spec = parse_spec(&args.spec)?;
    let config = budget_config(args.memo_budget)?;
    let verdict = model_check(&system, &spec, &config)?;
    let rendered = match args.format {
        Format::Human => report::check_human(&system, &verdict),
        Format::Structured => report::check_structured(&system, &verdict) + "\n",
    };
    print!("{rendered}");
    Ok(if verdict.is_satisfied() { 0 } else { 1 })
}

fn cmd_cegar(args: &ModelArgs, verify_simulation: bool) -> Result<i32> {
    let text = std::fs::read_to_string(&args.model)?;
    let model = parse_model(&text)?;
    let pomdp = model.as_pomdp().ok_or_else(|| {
        Error::UnsupportedFragment("the cegar subcommand needs a POMDP model".into())
    })?;
    let spec = parse_spec(&args.spec)?;
    budget_config(args.memo_budget)?;
    let config = CegarConfig {
        memo_budget: args.memo_budget,
        verify_simulation,
        ..CegarConfig::default()
    };
    let outcome = run_cegar(pomdp, &spec, &config)?;
    let concrete = crate::model::corresponding_waz(pomdp);
    let (partitions, quotients) = iteration_contexts(&concrete, &outcome)?;
    let ctx = report::CegarContext { quotients, partitions };
    let rendered = match args.format {
        Format::Human => report::cegar_human(&outcome, &ctx, &concrete),
        Format::Structured => report::cegar_structured(&outcome, &ctx, &concrete) + "\n",
    };
    print!("{rendered}");
    Ok(match outcome {
        CegarOutcome::Proved { .. } => 0,
        CegarOutcome::Disproved { .. } => 1,
    })
}

fn cmd_quotient(model: &Path, partition: &Path) -> Result<i32> {
    let system = load_waz(model)?;
    let text = std::fs::read_to_string(partition)?;
    let (partition, _) = parse_partition(&text, &system)?;
    let quot = crate::abstraction::quotient(&system, &partition)?;
    print!("{}", write_waz(&quot));
    Ok(0)
}

fn cmd_simcheck(model: &Path, against: &Path, format: Format) -> Result<i32> {
    let sys1 = load_waz(model)?;
    let sys2 = load_waz(against)?;
    let relation = check_safe_simulation(&sys1, &sys2)?;
    let rendered = match format {
        Format::Human => report::simcheck_human(relation.as_ref(), &sys1, &sys2),
        Format::Structured => report::simcheck_structured(relation.as_ref(), &sys1, &sys2) + "\n",
    };
    print!("{rendered}");
    Ok(if relation.is_some() { 0 } else { 1 })
}

/// Runs the CLI on the given arguments; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // clap handles --help/--version with code 0 itself
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Cegar { common, verify_simulation } => cmd_cegar(common, *verify_simulation),
        Command::Quotient { model, partition } => cmd_quotient(model, partition),
        Command::Simcheck { model, against, format } => cmd_simcheck(model, against, *format),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}
