use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use cfisac_core::check::run_invariant_suite;
use cfisac_core::experiment::{emit_csv, emit_trace_csv, run_pd_sweep, ExperimentConfig, VariantRegistry};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cfisac", version, about = "Cell-free RIS-assisted ISAC detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Paper,
}

impl Preset {
    fn name(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Detection probability versus RCS variance for one or more variants.
    Sweep {
        /// TOML experiment config; keys not given fall back to the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Run only this variant (overrides the config's list).
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Base preset; overrides a `preset` key in the config.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Progress logging, plus AO traces in `<out>.trace.csv`.
        #[arg(long)]
        verbose: bool,
    },
    /// Runs the invariant suite at desk scale.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Lists the registered design variants.
    Variants,
}

fn trace_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".trace.csv");
    out.with_file_name(name)
}

fn sweep(
    config: Option<PathBuf>,
    out: PathBuf,
    variant: Option<String>,
    seed: Option<u64>,
    preset: Option<Preset>,
    verbose: bool,
) -> anyhow::Result<()> {
    let preset = preset.map(Preset::name);
    let mut cfg = match &config {
        Some(path) => ExperimentConfig::from_file(path, preset).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::preset(preset.unwrap_or("desk"))?,
    };
    if let Some(v) = variant {
        cfg.variants = vec![v];
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let registry = VariantRegistry::builtin();
    let result = run_pd_sweep(&cfg, &registry)?;
    emit_csv(&result, &out).with_context(|| format!("writing {}", out.display()))?;
    log::info!("wrote {}", out.display());
    if verbose {
        let path = trace_path(&out);
        emit_trace_csv(&result, &path)?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn check(seed: u64) -> anyhow::Result<bool> {
    let outcomes = run_invariant_suite(seed)?;
    for o in &outcomes {
        println!("{o}");
    }
    Ok(outcomes.iter().all(|o| o.passed))
}

fn exit_code(err: &anyhow::Error) -> ExitCode {
    match err.downcast_ref::<cfisac_core::Error>() {
        Some(e) if e.is_infeasibility() => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verbose = matches!(cli.command, Command::Sweep { verbose: true, .. });
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if verbose { "info" } else { "warn" })).init();

    let result = match cli.command {
        Command::Sweep { config, out, variant, seed, preset, verbose } => sweep(config, out, variant, seed, preset, verbose),
        Command::Check { seed } => match check(seed) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
        Command::Variants => {
            let registry = VariantRegistry::builtin();
            for name in registry.names() {
                println!("{name}\t{}", registry.get(name).map(|v| v.description()).unwrap_or_default());
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
