use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use camoval::commands::{
    cmd_controls, cmd_eval_cod, cmd_eval_gen, cmd_fuse, cmd_retrieve, cmd_validate, ControlsOptions, EvalCodOptions,
    EvalGenOptions, FuseOptions, RetrieveOptions, DEFAULT_K, WORKERS_ENV,
};
use camoval::divergence::{HistogramConfig, DEFAULT_BINS, DEFAULT_EPSILON};
use camoval::featstats::KernelConfig;
use camoval::{Mode, Result};

#[derive(Parser)]
#[command(name = "camoval", version, about = "Camouflage generation and detection evaluation toolkit")]
struct Cli {
    /// Worker threads (default: logical cores). CAMOVAL_WORKERS takes precedence.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// KL_BF, SSIM, FID and KID over a manifest
    EvalGen(EvalGenArgs),
    /// Detection metrics for a directory of predictions
    EvalCod(EvalCodArgs),
    /// Top-k background retrieval from a knowledge base
    Retrieve(RetrieveArgs),
    /// Fuse target and retrieved token grids
    Fuse(FuseArgs),
    /// Write contrast controls and an extended manifest
    Controls(ControlsArgs),
    /// Check that every manifest entry decodes
    Validate(ValidateArgs),
}

#[derive(Args)]
struct EvalGenArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, requires = "features_gen")]
    features_real: Option<PathBuf>,
    #[arg(long, requires = "features_real")]
    features_gen: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// KID block sampling seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalCodArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    pred_dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RetrieveArgs {
    /// CEMB with the target token grid
    #[arg(long)]
    target: PathBuf,
    #[arg(long, default_value_t = 0)]
    record: usize,
    /// Foreground mask for masked pooling of the target
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Knowledge-base CEMB with a sidecar .idx
    #[arg(long)]
    base: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FuseArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    retrieved: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    mode: Mode,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, requires_all = ["class_token", "prompt_out"])]
    text: Option<PathBuf>,
    #[arg(long)]
    class_token: Option<PathBuf>,
    #[arg(long)]
    prompt_out: Option<PathBuf>,
}

#[derive(Args)]
struct ControlsArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    mode: Mode,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn workers(flag: Option<usize>) -> Option<usize> {
    std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()).or(flag)
}

/// Number of failed rows; the process exits non-zero when it is positive.
fn run(cli: Cli) -> Result<usize> {
    let workers = workers(cli.workers);
    match cli.command {
        Command::EvalGen(a) => {
            let opts = EvalGenOptions {
                manifest: a.manifest,
                features_real: a.features_real,
                features_gen: a.features_gen,
                out: a.out,
                histogram: HistogramConfig {
                    bins: a.bins,
                    epsilon: a.epsilon,
                },
                kernel: KernelConfig {
                    seed: a.seed,
                    ..KernelConfig::default()
                },
                workers,
            };
            Ok(cmd_eval_gen(&opts)?.body.failed_rows())
        }
        Command::EvalCod(a) => {
            let opts = EvalCodOptions {
                manifest: a.manifest,
                pred_dir: a.pred_dir,
                out: a.out,
                workers,
            };
            Ok(cmd_eval_cod(&opts)?.body.failed_rows())
        }
        Command::Retrieve(a) => {
            let report = cmd_retrieve(&RetrieveOptions {
                target: a.target,
                target_record: a.record,
                mask: a.mask,
                base: a.base,
                k: a.k,
                out: a.out,
            })?;
            for c in &report.body.result.ranked {
                println!("{}\t{:.6}", c.id, c.score);
            }
            Ok(0)
        }
        Command::Fuse(a) => {
            let out = cmd_fuse(&FuseOptions {
                target: a.target,
                retrieved: a.retrieved,
                mask: a.mask,
                mode: a.mode,
                out: a.out,
                text: a.text,
                class_token: a.class_token,
                prompt_out: a.prompt_out,
            })?;
            println!("{}", out.display());
            Ok(0)
        }
        Command::Controls(a) => {
            let report = cmd_controls(&ControlsOptions {
                manifest: a.manifest,
                mode: a.mode,
                out_dir: a.out_dir,
                workers,
            })?;
            Ok(report.body.rows.iter().filter(|r| !r.ok).count())
        }
        Command::Validate(a) => {
            let report = cmd_validate(&a.manifest, a.out.as_deref(), workers)?;
            let v = &report.body;
            println!("{} of {} entries valid", v.valid, v.total);
            for f in &v.failures {
                println!("{}\t{}", f.id, f.reason);
            }
            Ok(v.failures.len())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("{failed} failed row(s)");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
