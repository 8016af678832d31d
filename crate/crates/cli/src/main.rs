mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, Ctx};
use config::RunConfig;
use respace_core::types::MapKind;

/// Career-path analytics: build a field proximity map from a publication
/// corpus, classify activity states, predict field entries, and evaluate
/// the predictions against observed transitions.
#[derive(Parser)]
#[command(name = "respace", version, about, max_term_width = 100)]
struct Cli {
    /// Configuration file (defaults to ./respace.toml when present).
    #[arg(long, global = true, env = "RESPACE_CONFIG", value_name = "FILE")]
    config: Option<PathBuf>,

    /// Directory artifacts are written to and read back from.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out_dir: PathBuf,

    /// Worker threads (0 or omitted picks the machine default).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted block structure.
    Synth {
        /// Generator seed, overriding the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the proximity matrix from scholar careers over the
    /// training window.
    BuildSpace,
    /// Compute activity states for both evaluation windows.
    States {
        /// Aggregation level: author, organization, or country.
        #[arg(long)]
        level: Option<String>,
    },
    /// Score candidate fields by relatedness density.
    Predict {
        /// Proximity map to score with: research-space or external.
        #[arg(long, default_value = "research-space")]
        map: String,
        #[arg(long)]
        level: Option<String>,
        /// Transition to predict: inactive_to_active,
        /// nascent_to_developed, or intermediate_to_developed.
        #[arg(long)]
        transition: Option<String>,
    },
    /// Score predictions against observed transitions (per-entity AUC).
    Evaluate {
        #[arg(long)]
        level: Option<String>,
        #[arg(long)]
        transition: Option<String>,
        /// Also evaluate a shuffled-map baseline with this seed.
        #[arg(long)]
        baseline_seed: Option<u64>,
    },
    /// Export the spanning-tree plus threshold backbone of the map.
    ExportBackbone {
        /// Color nodes by this entity's activity states.
        #[arg(long)]
        entity: Option<String>,
        /// Override the edge-weight threshold.
        #[arg(long)]
        tau: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };

    if let Some(n) = cli.threads {
        if n > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .ok();
        }
    }

    let mut cfg = match RunConfig::resolve(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(64);
        }
    };
    match apply_overrides(&mut cfg, &cli.command) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(64);
        }
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(64);
    }

    let ctx = Ctx {
        cfg,
        out_dir: cli.out_dir,
    };
    let result = match &cli.command {
        Command::Synth { .. } => commands::cmd_synth(&ctx),
        Command::BuildSpace => commands::cmd_build_space(&ctx),
        Command::States { .. } => commands::cmd_states(&ctx),
        Command::Predict { map, .. } => match map.parse::<MapKind>() {
            Ok(kind) => commands::cmd_predict(&ctx, kind),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(64);
            }
        },
        Command::Evaluate { baseline_seed, .. } => commands::cmd_evaluate(&ctx, *baseline_seed),
        Command::ExportBackbone { entity, tau } => {
            commands::cmd_export_backbone(&ctx, entity.as_deref(), *tau)
        }
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::MissingArtifact(path)) => {
            eprintln!("error: missing artifact: {}", path.display());
            ExitCode::from(2)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(64)
        }
        Err(CliError::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(70)
        }
    }
}

/// Folds command-line flags into the resolved config so downstream code has
/// one source of truth. Values are validated here so a typo exits with a
/// usage error before any artifact is touched.
fn apply_overrides(cfg: &mut RunConfig, command: &Command) -> Result<(), String> {
    let set_level = |cfg: &mut RunConfig, level: &Option<String>| -> Result<(), String> {
        if let Some(level) = level {
            level
                .parse::<respace_core::types::AggregationLevel>()
                .map_err(|e| e.to_string())?;
            cfg.params.level = level.clone();
        }
        Ok(())
    };
    let set_transition = |cfg: &mut RunConfig, t: &Option<String>| -> Result<(), String> {
        if let Some(t) = t {
            t.parse::<respace_core::predict::TransitionKind>()
                .map_err(|e| e.to_string())?;
            cfg.params.transition = t.clone();
        }
        Ok(())
    };
    match command {
        Command::Synth { seed } => {
            if let Some(seed) = seed {
                cfg.synth.seed = *seed;
            }
        }
        Command::BuildSpace => {}
        Command::States { level } => set_level(cfg, level)?,
        Command::Predict {
            level, transition, ..
        }
        | Command::Evaluate {
            level, transition, ..
        } => {
            set_level(cfg, level)?;
            set_transition(cfg, transition)?;
        }
        Command::ExportBackbone { tau, .. } => {
            if let Some(tau) = tau {
                if !tau.is_finite() || *tau < 0.0 {
                    return Err(format!("--tau must be finite and non-negative, got {tau}"));
                }
            }
        }
    }
    Ok(())
}
