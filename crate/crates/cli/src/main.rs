//! `entrecover`: sweeps, optimal strategies, Monte-Carlo validation and NLA
//! tables for entanglement recovery at a repeater node.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod error;
mod format;
mod settings;

use commands::{OptimizeParams, SweepParams, ValidateParams};
use entrecover::optimize::{OutcomePolicy, Scenario};
use entrecover::RepeaterModel;
use error::CliError;
use settings::{check_damping, parse_damping, pick, ConfigFile, DRange, ModelArg, PolicyArg, Reversing};

#[derive(Debug, Parser)]
#[command(name = "entrecover", version, about = "Entanglement recovery by weak-measurement reversal")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Concurrence, probabilities and cost over a damping range (CSV).
    Sweep(SweepArgs),
    /// Optimal (or fixed-R) strategy at one damping strength.
    Optimize(OptimizeArgs),
    /// Monte-Carlo check of the analytic probabilities.
    Validate(ValidateArgs),
    /// Quantum-scissors realization of the single-pair optimum (CSV).
    Nla(NlaArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat key = value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StrategyArgs {
    /// two-way, one-way or single.
    #[arg(long)]
    model: Option<ModelArg>,
    /// phi, psi or all.
    #[arg(long)]
    policy: Option<PolicyArg>,
    /// A value in [0, 1], `optimal`, or `grid` (0 to 0.99 in steps of 0.01).
    #[arg(long)]
    reversing: Option<Reversing>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    strategy: StrategyArgs,
    /// A single damping strength.
    #[arg(long, value_parser = parse_damping, conflicts_with = "damping_range")]
    damping: Option<f64>,
    /// start:stop:step.
    #[arg(long)]
    damping_range: Option<DRange>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    strategy: StrategyArgs,
    #[arg(long, value_parser = parse_damping)]
    damping: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Trials per grid point (at least 10000).
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, hide = true, allow_hyphen_values = true)]
    bias: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct NlaArgs {
    #[arg(long, value_parser = parse_damping, conflicts_with = "damping_range")]
    damping: Option<f64>,
    #[arg(long)]
    damping_range: Option<DRange>,
    #[command(flatten)]
    common: Common,
}

const DEFAULT_SWEEP_RANGE: DRange = DRange {
    start: 0.0,
    stop: 1.0,
    step: 0.01,
};
const DEFAULT_NLA_RANGE: DRange = DRange {
    start: 0.0,
    stop: 0.95,
    step: 0.05,
};
const DEFAULT_TRIALS: u64 = 1_000_000;
const DEFAULT_SEED: u64 = 42;

fn load_config(common: &Common) -> Result<Option<ConfigFile>, CliError> {
    common.config.as_deref().map(ConfigFile::load).transpose()
}

struct Strategy {
    scenario: Scenario,
    policy: OutcomePolicy,
    reversing: Reversing,
}

fn strategy(a: StrategyArgs, cfg: Option<&ConfigFile>) -> Result<Strategy, CliError> {
    Ok(Strategy {
        scenario: pick(a.model, cfg, "model")?
            .map(|m| m.0)
            .unwrap_or(Scenario::Repeater(RepeaterModel::TwoWay)),
        policy: pick(a.policy, cfg, "policy")?.map(|p| p.0).unwrap_or(OutcomePolicy::PhiOnly),
        reversing: pick(a.reversing, cfg, "reversing")?.unwrap_or(Reversing::Optimal),
    })
}

fn range(damping: Option<f64>, range: Option<DRange>, cfg: Option<&ConfigFile>, default: DRange) -> Result<DRange, CliError> {
    if let Some(d) = damping {
        return Ok(DRange::single(d));
    }
    if let Some(r) = range {
        return Ok(r);
    }
    if let Some(d) = pick::<f64>(None, cfg, "damping")? {
        return Ok(DRange::single(check_damping(d)?));
    }
    Ok(pick(None, cfg, "damping-range")?.unwrap_or(default))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn out_path(common: &Common, cfg: Option<&ConfigFile>) -> Result<Option<PathBuf>, CliError> {
    pick(common.out.clone(), cfg, "out")
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep(a) => {
            let cfg = load_config(&a.common)?;
            let cfg = cfg.as_ref();
            let s = strategy(a.strategy, cfg)?;
            let params = SweepParams {
                scenario: s.scenario,
                policy: s.policy,
                range: range(a.damping, a.damping_range, cfg, DEFAULT_SWEEP_RANGE)?,
                reversing: s.reversing,
            };
            emit(&commands::sweep(&params)?, out_path(&a.common, cfg)?.as_deref())
        }
        Command::Optimize(a) => {
            let cfg = load_config(&a.common)?;
            let cfg = cfg.as_ref();
            let s = strategy(a.strategy, cfg)?;
            let d = pick(a.damping, cfg, "damping")?.ok_or_else(|| CliError::usage("optimize needs --damping"))?;
            let d = check_damping(d)?;
            let (text, csv) = commands::optimize(&OptimizeParams {
                scenario: s.scenario,
                policy: s.policy,
                d,
                reversing: s.reversing,
            })?;
            emit(&text, None)?;
            match out_path(&a.common, cfg)? {
                Some(path) => emit(&csv, Some(&path)),
                None => Ok(()),
            }
        }
        Command::Validate(a) => {
            let cfg = load_config(&a.common)?;
            let cfg = cfg.as_ref();
            let params = ValidateParams {
                trials: pick(a.trials, cfg, "trials")?.unwrap_or(DEFAULT_TRIALS),
                seed: pick(a.seed, cfg, "seed")?.unwrap_or(DEFAULT_SEED),
                bias: a.bias.unwrap_or(0.0),
            };
            let (report, pass) = commands::validate(&params)?;
            emit(&report, out_path(&a.common, cfg)?.as_deref())?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Validation("a cell exceeded its tolerance".to_string()))
            }
        }
        Command::Nla(a) => {
            let cfg = load_config(&a.common)?;
            let cfg = cfg.as_ref();
            let r = range(a.damping, a.damping_range, cfg, DEFAULT_NLA_RANGE)?;
            emit(&commands::nla(r)?, out_path(&a.common, cfg)?.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("entrecover: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
