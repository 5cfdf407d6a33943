//! Command implementations. Each returns a serializable outcome; the binary
//! is responsible only for argument parsing, printing, and exit codes, so
//! integration tests can drive commands in-process.

use std::path::{Path, PathBuf};

use serde::Serialize;

use irnn_core::bptt::{grad_check, gradcheck_instance, InnovationSource, Trajectory};
use irnn_core::cells::{init_weights, CellKind};
use irnn_core::checkpoint;
use irnn_core::data::{
    load_csv, materialize, prepare, save_csv, DatasetManifest, PreparedData,
};
use irnn_core::numerics::Vector;
use irnn_core::predictor::{evaluate, naive_baseline, StepMseTable};
use irnn_core::synthetic::{kf_predict, riccati_gain, simulate, transformer_surrogate, LtiSystem};
use irnn_core::trainer::{fit, TrainReport};
use irnn_core::{Error, Result};

use crate::config::{parse_activation, parse_mask, RunConfig};

pub const LOSS_CURVE_SCHEMA: &str = "irnn-loss-curve-v1";
pub const EVAL_SCHEMA: &str = "irnn-eval-v1";
pub const ABLATION_SCHEMA: &str = "irnn-ablation-v1";

fn fmt(v: f64) -> String {
    // `{:?}` prints the shortest representation that parses back exactly.
    format!("{v:?}")
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

// ---------------------------------------------------------------- prepare --

#[derive(Debug, Clone)]
pub struct PrepareArgs {
    pub csv: PathBuf,
    pub timestamp_column: Option<String>,
    pub input_columns: Vec<String>,
    pub target_columns: Vec<String>,
    pub t_p: usize,
    pub t_f: usize,
    pub stride: Option<usize>,
    pub ratios: [f64; 3],
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrepareSummary {
    pub manifest_path: PathBuf,
    pub series_len: usize,
    pub segments: usize,
    pub split_sizes: (usize, usize, usize),
}

pub fn cmd_prepare(args: &PrepareArgs) -> Result<PrepareSummary> {
    let series = load_csv(
        &args.csv,
        args.timestamp_column.as_deref(),
        &args.input_columns,
        &args.target_columns,
    )?;
    let prepared = prepare(
        &series,
        &args.csv.display().to_string(),
        args.timestamp_column.clone(),
        args.input_columns.clone(),
        args.target_columns.clone(),
        args.t_p,
        args.t_f,
        args.stride,
        args.ratios,
        args.seed,
    )?;
    if let Some(parent) = args.out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    prepared.manifest.save(&args.out)?;
    Ok(PrepareSummary {
        manifest_path: args.out.clone(),
        series_len: series.len(),
        segments: prepared.manifest.segments.len(),
        split_sizes: (
            prepared.train.len(),
            prepared.val.len(),
            prepared.test.len(),
        ),
    })
}

/// Loads the manifest named by the config and rebuilds the exact prepared
/// splits from the CSV it describes.
pub fn load_prepared(manifest_path: &Path, csv_path: &Path) -> Result<PreparedData> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let series = load_csv(
        csv_path,
        manifest.timestamp_column.as_deref(),
        &manifest.input_columns,
        &manifest.target_columns,
    )?;
    materialize(&series, &manifest)
}

// ------------------------------------------------------------------ train --

#[derive(Debug)]
pub struct TrainOutcome {
    pub out_dir: PathBuf,
    pub kind: CellKind,
    pub report: TrainReport,
    pub checkpoint: PathBuf,
}

fn loss_curve_csv(report: &TrainReport) -> String {
    let mut out = format!("# schema: {LOSS_CURVE_SCHEMA}\nepoch,train_mse,val_mse,refreshed\n");
    for r in &report.records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.epoch,
            fmt(r.train_mse),
            fmt(r.val_mse),
            r.refreshed
        ));
    }
    out
}

pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    let kind = cfg.kind()?;
    let mask = parse_mask(kind, &cfg.model.mask)?;
    let activation = parse_activation(&cfg.model.activation)?;
    if cfg.model.hidden == 0 {
        return Err(Error::InvalidArgument("hidden size must be >= 1".into()));
    }

    let mut prepared = load_prepared(&cfg.data.manifest, &cfg.data.csv)?;
    let manifest = &prepared.manifest;
    let (n_u, n_y) = (
        manifest.input_columns.len(),
        manifest.target_columns.len(),
    );
    let w0 = init_weights(
        kind,
        cfg.model.hidden,
        n_u,
        n_y,
        mask,
        activation,
        cfg.model.init_seed,
    )?;
    let train_cfg = cfg.train_config(kind, manifest.t_p, manifest.t_f)?;
    let report = fit(&w0, &mut prepared.train, &mut prepared.val, &train_cfg)?;

    let out_dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&out_dir)?;
    write_file(
        &out_dir.join("config.resolved.toml"),
        &toml::to_string_pretty(cfg)
            .map_err(|e| Error::InvalidArgument(format!("cannot serialize config: {e}")))?,
    )?;
    write_json(&out_dir.join("report.json"), &report)?;
    write_file(&out_dir.join("loss_curve.csv"), &loss_curve_csv(&report))?;
    let ckpt = out_dir.join("best.ckpt");
    checkpoint::save(&report.best_weights, &ckpt)?;
    Ok(TrainOutcome {
        out_dir,
        kind,
        report,
        checkpoint: ckpt,
    })
}

// ------------------------------------------------------------------- eval --

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub checkpoint: PathBuf,
    pub manifest: PathBuf,
    pub csv: PathBuf,
    pub split: String,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalRow {
    pub model: String,
    pub per_step: Vec<f64>,
    pub average: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub schema: String,
    pub split: String,
    pub rows: Vec<EvalRow>,
}

fn split_trajectories<'a>(prepared: &'a PreparedData, split: &str) -> Result<&'a [Trajectory]> {
    match split {
        "train" => Ok(&prepared.train),
        "val" => Ok(&prepared.val),
        "test" => Ok(&prepared.test),
        other => Err(Error::InvalidArgument(format!(
            "unknown split '{other}' (expected train, val, or test)"
        ))),
    }
}

fn eval_row(model: &str, table: &StepMseTable) -> EvalRow {
    EvalRow {
        model: model.to_string(),
        per_step: table.per_step.clone(),
        average: table.average,
    }
}

fn eval_csv(report: &EvalReport) -> String {
    let horizon = report.rows.first().map_or(0, |r| r.per_step.len());
    let mut out = format!("# schema: {EVAL_SCHEMA}\nmodel");
    for k in 1..=horizon {
        out.push_str(&format!(",mse_{k}"));
    }
    out.push_str(",average\n");
    for row in &report.rows {
        out.push_str(&row.model);
        for v in &row.per_step {
            out.push(',');
            out.push_str(&fmt(*v));
        }
        out.push(',');
        out.push_str(&fmt(row.average));
        out.push('\n');
    }
    out
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    let w = checkpoint::load(&args.checkpoint)?;
    let prepared = load_prepared(&args.manifest, &args.csv)?;
    let set = split_trajectories(&prepared, &args.split)?;
    let model_table = evaluate(&w, set)?;
    let naive_table = naive_baseline(set)?;
    let report = EvalReport {
        schema: EVAL_SCHEMA.to_string(),
        split: args.split.clone(),
        rows: vec![
            eval_row(w.kind.as_str(), &model_table),
            eval_row("naive", &naive_table),
        ],
    };
    std::fs::create_dir_all(&args.out_dir)?;
    write_json(&args.out_dir.join("eval.json"), &report)?;
    write_file(&args.out_dir.join("eval.csv"), &eval_csv(&report))?;
    Ok(report)
}

// ----------------------------------------------------------------- ablate --

#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub variant: String,
    pub mask: String,
    pub best_val_mse: f64,
    pub test_per_step: Vec<f64>,
    pub test_average: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub schema: String,
    pub rows: Vec<AblationRow>,
}

/// Trains the base mask plus each variant mask under otherwise identical
/// settings and evaluates every trained model on the test split.
pub fn cmd_ablate(cfg: &RunConfig, variants: &[String]) -> Result<AblationReport> {
    let kind = cfg.kind()?;
    if !kind.has_innovation() {
        return Err(Error::InvalidArgument(format!(
            "ablation requires an innovation-driven kind, got '{kind}'"
        )));
    }
    let activation = parse_activation(&cfg.model.activation)?;
    let prepared = load_prepared(&cfg.data.manifest, &cfg.data.csv)?;
    let manifest = prepared.manifest.clone();
    let (n_u, n_y) = (manifest.input_columns.len(), manifest.target_columns.len());
    let train_cfg = cfg.train_config(kind, manifest.t_p, manifest.t_f)?;

    let mut specs: Vec<(String, String)> =
        vec![("base".to_string(), cfg.model.mask.clone())];
    for v in variants {
        specs.push((v.clone(), v.clone()));
    }

    let mut rows = Vec::with_capacity(specs.len());
    for (name, spec) in &specs {
        let mask = parse_mask(kind, spec)?;
        let described = mask.describe(kind);
        let w0 = init_weights(
            kind,
            cfg.model.hidden,
            n_u,
            n_y,
            mask,
            activation,
            cfg.model.init_seed,
        )?;
        let mut train = prepared.train.clone();
        let mut val = prepared.val.clone();
        let report = fit(&w0, &mut train, &mut val, &train_cfg)?;
        let table = evaluate(&report.best_weights, &prepared.test)?;
        rows.push(AblationRow {
            variant: name.clone(),
            mask: described,
            best_val_mse: report.best_val_mse,
            test_per_step: table.per_step.clone(),
            test_average: table.average,
        });
    }
    let report = AblationReport {
        schema: ABLATION_SCHEMA.to_string(),
        rows,
    };

    let out_dir = &cfg.output.dir;
    std::fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("ablation.json"), &report)?;
    let horizon = report.rows.first().map_or(0, |r| r.test_per_step.len());
    let mut csv = format!("# schema: {ABLATION_SCHEMA}\nvariant,mask,best_val_mse");
    for k in 1..=horizon {
        csv.push_str(&format!(",test_mse_{k}"));
    }
    csv.push_str(",test_average\n");
    for row in &report.rows {
        csv.push_str(&format!(
            "{},{},{}",
            row.variant,
            row.mask.replace(',', ";"),
            fmt(row.best_val_mse)
        ));
        for v in &row.test_per_step {
            csv.push(',');
            csv.push_str(&fmt(*v));
        }
        csv.push(',');
        csv.push_str(&fmt(row.test_average));
        csv.push('\n');
    }
    write_file(&out_dir.join("ablation.csv"), &csv)?;
    Ok(report)
}

// -------------------------------------------------------------- gradcheck --

#[derive(Debug, Clone)]
pub struct GradcheckArgs {
    pub kind: CellKind,
    pub masks: Vec<String>,
    pub instances: usize,
    pub h: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckRow {
    pub mask: String,
    pub instances: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckSummary {
    pub kind: String,
    pub tolerance: f64,
    pub rows: Vec<GradcheckRow>,
    pub max_rel_error: f64,
    pub pass: bool,
}

pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

pub fn cmd_gradcheck(args: &GradcheckArgs) -> Result<GradcheckSummary> {
    if args.instances == 0 {
        return Err(Error::InvalidArgument("need at least one instance".into()));
    }
    let mut rows = Vec::new();
    let mut overall: f64 = 0.0;
    for spec in &args.masks {
        let mask = parse_mask(args.kind, spec)?;
        let mut worst: f64 = 0.0;
        for i in 0..args.instances {
            let (w, traj) = gradcheck_instance(
                args.kind,
                mask.clone(),
                4,
                2,
                1,
                4,
                3,
                args.seed.wrapping_add(i as u64),
            )?;
            let report = grad_check(&w, &traj, InnovationSource::Stored, args.h)?;
            worst = worst.max(report.max_rel_error);
        }
        overall = overall.max(worst);
        rows.push(GradcheckRow {
            mask: spec.clone(),
            instances: args.instances,
            max_rel_error: worst,
        });
    }
    Ok(GradcheckSummary {
        kind: args.kind.as_str().to_string(),
        tolerance: GRADCHECK_TOLERANCE,
        rows,
        max_rel_error: overall,
        pass: overall < GRADCHECK_TOLERANCE,
    })
}

// ------------------------------------------------------------------ synth --

#[derive(Debug, Clone, Serialize)]
pub struct SurrogateSummary {
    pub csv_path: PathBuf,
    pub len: usize,
    pub seed: u64,
}

/// Generates the deterministic transformer-like surrogate series and writes
/// it as CSV with columns `date,load1..load6,oil_temp`.
pub fn cmd_synth_surrogate(len: usize, seed: u64, out: &Path) -> Result<SurrogateSummary> {
    let series = transformer_surrogate(len, seed)?;
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let inputs: Vec<String> = (1..=6).map(|j| format!("load{j}")).collect();
    save_csv(&series, out, "date", &inputs, &["oil_temp".to_string()])?;
    Ok(SurrogateSummary {
        csv_path: out.to_path_buf(),
        len,
        seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LtiOracleSummary {
    pub p: f64,
    pub k: f64,
    pub s: f64,
    pub riccati_iterations: usize,
    /// Mean squared one-step innovation of the oracle on the emitted data.
    pub oracle_one_step_mse: f64,
    pub csv_path: PathBuf,
}

/// Simulates the scalar LTI benchmark, writes the series as CSV
/// (`date,u1,y1`), and reports the steady-state Kalman oracle quantities.
pub fn cmd_synth_lti(
    a: f64,
    q: f64,
    r: f64,
    len: usize,
    seed: u64,
    out: &Path,
    oracle_out: Option<&Path>,
) -> Result<LtiOracleSummary> {
    let sys = LtiSystem::scalar(a, q, r)?;
    let u = vec![Vector::zeros(1); len];
    let mut series = simulate(&sys, &u, seed)?;
    series.timestamps = Some((0..len).map(|t| format!("t{t:08}")).collect());
    let oracle = riccati_gain(&sys)?;
    let (_, innovations) = kf_predict(&oracle, &sys, &series)?;
    let mse = innovations.iter().map(|e| e.get(0).powi(2)).sum::<f64>() / len as f64;
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    save_csv(
        &series,
        out,
        "date",
        &["u1".to_string()],
        &["y1".to_string()],
    )?;
    let summary = LtiOracleSummary {
        p: oracle.p.get(0, 0),
        k: oracle.k.get(0, 0),
        s: oracle.s.get(0, 0),
        riccati_iterations: oracle.iterations,
        oracle_one_step_mse: mse,
        csv_path: out.to_path_buf(),
    };
    if let Some(path) = oracle_out {
        write_json(path, &summary)?;
    }
    Ok(summary)
}
