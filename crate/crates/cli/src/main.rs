use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tanglemap::config::RunConfig;
use tanglemap::error::CliError;
use tanglemap::{commands, error};

/// Entanglement-aware grasp planning from depth images.
#[derive(Parser)]
#[command(name = "tanglemap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Flat `module.key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::Args)]
struct PlanKnobs {
    /// Overrides planner.rank_alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Overrides planner.writhe_gate.
    #[arg(long)]
    gate: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Plan grasps on a 16-bit millimeter depth PNG.
    Plan {
        depth: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        knobs: PlanKnobs,
        /// Output directory.
        #[arg(long, default_value = "tanglemap_out")]
        out: PathBuf,
    },
    /// Generate synthetic scenes with ground truth.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Evaluate the planner on a generated corpus.
    Eval {
        corpus: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        knobs: PlanKnobs,
        /// Report path; latency goes to the matching `.timing.json`.
        #[arg(long, default_value = "eval_report.json")]
        out: PathBuf,
    },
    /// Print every config key with its default value.
    Defaults,
}

fn load(common: &Common, knobs: Option<&PlanKnobs>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(k) = knobs {
        if let Some(a) = k.alpha {
            cfg.set("planner.rank_alpha", &a.to_string())?;
        }
        if let Some(g) = k.gate {
            cfg.set("planner.writhe_gate", &g.to_string())?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Plan {
            depth,
            common,
            knobs,
            out,
        } => {
            let cfg = load(&common, Some(&knobs))?;
            commands::cmd_plan(&depth, &cfg, &out).map(|_| ())
        }
        Command::Gen { common, out, count } => {
            let cfg = load(&common, None)?;
            commands::cmd_gen(&cfg, &out, count)
        }
        Command::Eval {
            corpus,
            common,
            knobs,
            out,
        } => {
            let cfg = load(&common, Some(&knobs))?;
            commands::cmd_eval(&corpus, &cfg, &out).map(|_| ())
        }
        Command::Defaults => {
            print!("{}", RunConfig::default().render());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TANGLEMAP_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(error::EXIT_OK as u8),
        Err(e) => {
            eprintln!("tanglemap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
