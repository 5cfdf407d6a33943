//! Declarative run configuration (TOML) and its translation into core types.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use irnn_core::bptt::InnovationSource;
use irnn_core::cells::{CellKind, InnovationMask};
use irnn_core::numerics::Activation;
use irnn_core::trainer::TrainConfig;
use irnn_core::{Error, Result};

/// One training run, fully specified: model shape, optimizer settings, data
/// locations, output directory. Everything that affects the result lives
/// here, so a run is reproducible from its config alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelSection,
    pub train: TrainSection,
    pub data: DataSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSection {
    /// One of `rnn`, `irnn`, `gru`, `igru`, `lstm`, `ilstm`.
    pub kind: String,
    pub hidden: usize,
    /// Hidden activation: `tanh` (default) or `sigmoid`.
    #[serde(default = "default_activation")]
    pub activation: String,
    /// Innovation mask: `full` (default), `empty`, `without:<module>`, or
    /// `only:<module>`. Ignored for vanilla kinds.
    #[serde(default = "default_mask")]
    pub mask: String,
    #[serde(default)]
    pub init_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSection {
    /// Defaults to 6e-4 for the RNN family and 3e-4 for gated families.
    #[serde(default)]
    pub learning_rate: Option<f64>,
    pub epochs: usize,
    /// Refresh stored innovations every N epochs.
    #[serde(default = "default_interval")]
    pub innovation_interval: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_patience")]
    pub early_stop_tolerance: usize,
    #[serde(default)]
    pub seed: u64,
    /// `stored` (default) or `in-pass`.
    #[serde(default = "default_source")]
    pub innovation_source: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataSection {
    pub manifest: PathBuf,
    pub csv: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSection {
    pub dir: PathBuf,
}

fn default_activation() -> String {
    "tanh".into()
}

fn default_mask() -> String {
    "full".into()
}

fn default_interval() -> usize {
    1
}

fn default_batch() -> usize {
    64
}

fn default_patience() -> usize {
    5
}

fn default_source() -> String {
    "stored".into()
}

pub fn parse_activation(s: &str) -> Result<Activation> {
    match s.to_ascii_lowercase().as_str() {
        "tanh" => Ok(Activation::Tanh),
        "sigmoid" => Ok(Activation::Sigmoid),
        other => Err(Error::InvalidArgument(format!(
            "unknown activation '{other}' (expected tanh or sigmoid)"
        ))),
    }
}

pub fn parse_source(s: &str) -> Result<InnovationSource> {
    match s.to_ascii_lowercase().as_str() {
        "stored" => Ok(InnovationSource::Stored),
        "in-pass" | "in_pass" => Ok(InnovationSource::InPassDetached),
        other => Err(Error::InvalidArgument(format!(
            "unknown innovation source '{other}' (expected stored or in-pass)"
        ))),
    }
}

/// Parses a mask spec against a cell kind. Vanilla kinds always get the
/// empty mask.
pub fn parse_mask(kind: CellKind, spec: &str) -> Result<InnovationMask> {
    if !kind.has_innovation() {
        return Ok(InnovationMask::empty(kind));
    }
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("full") {
        return Ok(InnovationMask::full(kind));
    }
    if spec.eq_ignore_ascii_case("empty") {
        return Ok(InnovationMask::empty(kind));
    }
    if let Some(module) = spec.strip_prefix("without:") {
        return InnovationMask::without(kind, module.trim());
    }
    if let Some(module) = spec.strip_prefix("only:") {
        return InnovationMask::only(kind, module.trim());
    }
    Err(Error::InvalidArgument(format!(
        "bad mask spec '{spec}' (expected full, empty, without:<module>, or only:<module>)"
    )))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("bad config {}: {e}", path.display())))
    }

    pub fn kind(&self) -> Result<CellKind> {
        CellKind::parse(&self.model.kind)
    }

    /// Learning rate after the per-family default is applied.
    pub fn learning_rate(&self, kind: CellKind) -> f64 {
        self.train.learning_rate.unwrap_or(match kind.vanilla() {
            CellKind::Rnn => 6e-4,
            _ => 3e-4,
        })
    }

    /// Builds the core training configuration; window sizes come from the
    /// dataset manifest.
    pub fn train_config(&self, kind: CellKind, t_p: usize, t_f: usize) -> Result<TrainConfig> {
        let base = match kind.vanilla() {
            CellKind::Rnn => TrainConfig::rnn_defaults(),
            _ => TrainConfig::gated_defaults(),
        };
        let cfg = TrainConfig {
            learning_rate: self.learning_rate(kind),
            epochs: self.train.epochs,
            innovation_interval: self.train.innovation_interval,
            batch_size: self.train.batch_size,
            early_stop_tolerance: self.train.early_stop_tolerance,
            t_p,
            t_f,
            seed: self.train.seed,
            innovation_source: parse_source(&self.train.innovation_source)?,
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let text = r#"
            [model]
            kind = "igru"
            hidden = 32

            [train]
            epochs = 30

            [data]
            manifest = "m.json"
            csv = "d.csv"

            [output]
            dir = "runs/x"
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        let kind = cfg.kind().unwrap();
        assert_eq!(kind, CellKind::Igru);
        assert_eq!(cfg.learning_rate(kind), 3e-4);
        let tc = cfg.train_config(kind, 24, 5).unwrap();
        assert_eq!(tc.batch_size, 64);
        assert_eq!(tc.innovation_interval, 1);
        assert_eq!(tc.early_stop_tolerance, 5);
    }

    #[test]
    fn mask_specs() {
        let kind = CellKind::Igru;
        assert_eq!(parse_mask(kind, "full").unwrap(), InnovationMask::full(kind));
        assert_eq!(parse_mask(kind, "empty").unwrap(), InnovationMask::empty(kind));
        assert_eq!(
            parse_mask(kind, "without:candidate").unwrap(),
            InnovationMask::without(kind, "candidate").unwrap()
        );
        assert!(parse_mask(kind, "without:bogus").is_err());
        assert!(parse_mask(kind, "sideways").is_err());
        // Vanilla kinds ignore the spec entirely.
        assert_eq!(
            parse_mask(CellKind::Gru, "full").unwrap(),
            InnovationMask::empty(CellKind::Gru)
        );
    }

    #[test]
    fn rnn_family_learning_rate_default() {
        let text = r#"
            [model]
            kind = "irnn"
            hidden = 16
            [train]
            epochs = 5
            [data]
            manifest = "m.json"
            csv = "d.csv"
            [output]
            dir = "runs/y"
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.learning_rate(cfg.kind().unwrap()), 6e-4);
    }
}
