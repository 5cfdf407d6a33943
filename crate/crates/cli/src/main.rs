//! `irnn` binary: argument parsing, output printing, and exit-code mapping.
//!
//! Exit codes: 0 success, 2 usage/configuration error, 3 data error,
//! 4 numerical abort (non-finite values, divergent solver).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use irnn_cli::commands::{
    cmd_ablate, cmd_eval, cmd_gradcheck, cmd_prepare, cmd_synth_lti, cmd_synth_surrogate,
    cmd_train, EvalArgs, GradcheckArgs, PrepareArgs,
};
use irnn_cli::config::RunConfig;
use irnn_core::cells::CellKind;
use irnn_core::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(
    name = "irnn",
    about = "Innovation-driven recurrent forecasting: prepare data, train, evaluate, ablate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment, split, and normalize a CSV series; write a dataset manifest.
    Prepare(PrepareCli),
    /// Train a model from a TOML run config.
    Train(ConfigCli),
    /// Evaluate a checkpoint on a prepared split, with the naive baseline.
    Eval(EvalCli),
    /// Train the base mask plus single-module mask variants and compare.
    Ablate(AblateCli),
    /// Compare analytic gradients against finite differences.
    Gradcheck(GradcheckCli),
    /// Generate synthetic datasets and oracle reports.
    #[command(subcommand)]
    Synth(SynthCli),
}

#[derive(Args)]
struct PrepareCli {
    /// Source CSV with a header row.
    #[arg(long)]
    csv: PathBuf,
    /// Name of the (strictly increasing) timestamp column, if any.
    #[arg(long)]
    timestamp_column: Option<String>,
    /// Comma-separated input column names.
    #[arg(long, value_delimiter = ',')]
    input_columns: Vec<String>,
    /// Comma-separated target column names.
    #[arg(long, value_delimiter = ',')]
    target_columns: Vec<String>,
    /// Warmup length per window.
    #[arg(long, default_value_t = 24)]
    t_p: usize,
    /// Prediction horizon per window.
    #[arg(long, default_value_t = 5)]
    t_f: usize,
    /// Window stride; defaults to T_p + T_f (disjoint partition).
    #[arg(long)]
    stride: Option<usize>,
    /// Train/val/test ratios, comma-separated, summing to 1.
    #[arg(long, value_delimiter = ',', default_values_t = [0.6, 0.2, 0.2])]
    ratios: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output manifest path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConfigCli {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct EvalCli {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    csv: PathBuf,
    /// train, val, or test.
    #[arg(long, default_value = "test")]
    split: String,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct AblateCli {
    #[arg(long)]
    config: PathBuf,
    /// Mask variants, e.g. `without:candidate,only:forget`.
    #[arg(long, value_delimiter = ',')]
    variants: Vec<String>,
}

#[derive(Args)]
struct GradcheckCli {
    /// Cell kind to check.
    #[arg(long)]
    kind: String,
    /// Mask specs to check, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = ["full".to_string(), "empty".to_string()])]
    masks: Vec<String>,
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// Central finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    h: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum SynthCli {
    /// Deterministic transformer-like surrogate series.
    Surrogate {
        #[arg(long, default_value_t = 17420)]
        len: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scalar stochastic LTI benchmark plus its Kalman oracle report.
    Lti {
        #[arg(long, default_value_t = 0.9)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 60000)]
        len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        oracle_out: Option<PathBuf>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::NonFinite { .. } | Error::RiccatiDiverged { .. } => EXIT_NUMERIC,
        _ => EXIT_DATA,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Prepare(p) => {
            if p.ratios.len() != 3 {
                return Err(Error::InvalidArgument(
                    "--ratios needs exactly three values".into(),
                ));
            }
            let summary = cmd_prepare(&PrepareArgs {
                csv: p.csv,
                timestamp_column: p.timestamp_column,
                input_columns: p.input_columns,
                target_columns: p.target_columns,
                t_p: p.t_p,
                t_f: p.t_f,
                stride: p.stride,
                ratios: [p.ratios[0], p.ratios[1], p.ratios[2]],
                seed: p.seed,
                out: p.out,
            })?;
            println!(
                "prepared {} rows -> {} segments, split {:?} -> {}",
                summary.series_len,
                summary.segments,
                summary.split_sizes,
                summary.manifest_path.display()
            );
        }
        Command::Train(c) => {
            let cfg = RunConfig::load(&c.config)?;
            let outcome = cmd_train(&cfg)?;
            println!(
                "trained {} for {} epochs; best val MSE {:.6} at epoch {}; artifacts in {}",
                outcome.kind,
                outcome.report.stopping_epoch,
                outcome.report.best_val_mse,
                outcome.report.best_epoch,
                outcome.out_dir.display()
            );
        }
        Command::Eval(e) => {
            let report = cmd_eval(&EvalArgs {
                checkpoint: e.checkpoint,
                manifest: e.manifest,
                csv: e.csv,
                split: e.split,
                out_dir: e.out_dir.clone(),
            })?;
            for row in &report.rows {
                println!(
                    "{:>8} split={} per-step={:?} average={:.6}",
                    row.model, report.split, row.per_step, row.average
                );
            }
        }
        Command::Ablate(a) => {
            let cfg = RunConfig::load(&a.config)?;
            let report = cmd_ablate(&cfg, &a.variants)?;
            for row in &report.rows {
                println!(
                    "{:>20} [{}] best_val={:.6} test_avg={:.6}",
                    row.variant, row.mask, row.best_val_mse, row.test_average
                );
            }
        }
        Command::Gradcheck(g) => {
            let summary = cmd_gradcheck(&GradcheckArgs {
                kind: CellKind::parse(&g.kind)?,
                masks: g.masks,
                instances: g.instances,
                h: g.h,
                seed: g.seed,
            })?;
            for row in &summary.rows {
                println!(
                    "{} mask={} instances={} max_rel_error={:.3e}",
                    summary.kind, row.mask, row.instances, row.max_rel_error
                );
            }
            if !summary.pass {
                return Err(Error::NonFinite {
                    context: format!(
                        "gradient check failed: max relative error {:.3e} >= {:.0e}",
                        summary.max_rel_error, summary.tolerance
                    ),
                    at_step: None,
                });
            }
            println!("gradcheck PASS (tolerance {:.0e})", summary.tolerance);
        }
        Command::Synth(s) => match s {
            SynthCli::Surrogate { len, seed, out } => {
                let summary = cmd_synth_surrogate(len, seed, &out)?;
                println!(
                    "surrogate series: {} rows (seed {}) -> {}",
                    summary.len,
                    summary.seed,
                    summary.csv_path.display()
                );
            }
            SynthCli::Lti {
                a,
                q,
                r,
                len,
                seed,
                out,
                oracle_out,
            } => {
                let summary =
                    cmd_synth_lti(a, q, r, len, seed, &out, oracle_out.as_deref())?;
                println!(
                    "lti series: {} rows -> {}; oracle P={:.5} K={:.5} S={:.5} one-step MSE={:.5}",
                    len,
                    summary.csv_path.display(),
                    summary.p,
                    summary.k,
                    summary.s,
                    summary.oracle_one_step_mse
                );
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
