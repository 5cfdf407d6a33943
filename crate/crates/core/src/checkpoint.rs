//! Binary weight checkpoints with a stable, documented byte layout.
//!
//! Layout (all multi-byte integers little-endian):
//!
//! | offset        | bytes | content                                      |
//! |---------------|-------|----------------------------------------------|
//! | 0             | 8     | magic `b"IRNNCKPT"`                          |
//! | 8             | 4     | format version (`u32`, currently 1)          |
//! | 12            | 4     | header length `H` (`u32`)                    |
//! | 16            | H     | JSON header (see [`CheckpointHeader`])       |
//! | 16 + H        | 8·P   | `P` parameters as `f64` little-endian, in    |
//! |               |       | `flat-v1` order ([`WeightSet::flatten`])     |
//!
//! The header pins the cell kind, dimensions, innovation mask, activation,
//! parameter count, and the layout tag, so a checkpoint can be validated and
//! rebuilt without any out-of-band information. Writing the same weights
//! twice produces byte-identical files.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cells::{CellKind, InnovationMask, WeightSet};
use crate::error::{Error, Result};
use crate::numerics::Activation;

const MAGIC: &[u8; 8] = b"IRNNCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const PARAM_LAYOUT: &str = "flat-v1";

/// JSON header embedded in every checkpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub kind: CellKind,
    pub n_x: usize,
    pub n_u: usize,
    pub n_y: usize,
    pub mask: Vec<bool>,
    pub hidden_activation: Activation,
    pub layout: String,
    pub param_count: usize,
}

impl CheckpointHeader {
    fn describe(w: &WeightSet) -> Self {
        CheckpointHeader {
            kind: w.kind,
            n_x: w.n_x,
            n_u: w.n_u,
            n_y: w.n_y,
            mask: w.mask.flags().to_vec(),
            hidden_activation: w.hidden_activation,
            layout: PARAM_LAYOUT.to_string(),
            param_count: w.param_count(),
        }
    }
}

fn ckpt_err(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

/// Writes the weights to `path` in the layout documented at module level.
pub fn save(w: &WeightSet, path: &Path) -> Result<()> {
    let header = CheckpointHeader::describe(w);
    let header_json = serde_json::to_vec(&header)?;
    let params = w.flatten();

    let mut buf = Vec::with_capacity(16 + header_json.len() + 8 * params.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header_json);
    for p in &params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Reads and validates a checkpoint, rebuilding the full [`WeightSet`].
pub fn load(path: &Path) -> Result<WeightSet> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(ckpt_err(format!(
            "{} is not a checkpoint (bad magic)",
            path.display()
        )));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(ckpt_err(format!(
            "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let header_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let params_at = 16 + header_len;
    if bytes.len() < params_at {
        return Err(ckpt_err("truncated checkpoint header"));
    }
    let header: CheckpointHeader = serde_json::from_slice(&bytes[16..params_at])
        .map_err(|e| ckpt_err(format!("corrupt checkpoint header: {e}")))?;
    if header.layout != PARAM_LAYOUT {
        return Err(ckpt_err(format!(
            "unknown parameter layout {:?} (expected {PARAM_LAYOUT:?})",
            header.layout
        )));
    }

    let mask = InnovationMask::from_flags(header.kind, header.mask.clone())?;
    let mut w = WeightSet::zeros(
        header.kind,
        header.n_x,
        header.n_u,
        header.n_y,
        mask,
        header.hidden_activation,
    )?;
    if w.param_count() != header.param_count {
        return Err(ckpt_err(format!(
            "header claims {} parameters but the described shape has {}",
            header.param_count,
            w.param_count()
        )));
    }
    let payload = &bytes[params_at..];
    if payload.len() != 8 * header.param_count {
        return Err(ckpt_err(format!(
            "parameter payload is {} bytes, expected {}",
            payload.len(),
            8 * header.param_count
        )));
    }
    let mut params = Vec::with_capacity(header.param_count);
    for chunk in payload.chunks_exact(8) {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(ckpt_err("non-finite parameter in checkpoint"));
        }
        params.push(v);
    }
    w.assign_flat(&params)?;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::init_weights;

    fn sample_weights() -> WeightSet {
        init_weights(
            CellKind::Igru,
            5,
            3,
            2,
            InnovationMask::full(CellKind::Igru),
            Activation::Tanh,
            1234,
        )
        .unwrap()
    }

    #[test]
    fn save_load_round_trips_exactly() {
        let w = sample_weights();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.ckpt");
        save(&w, &path).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(loaded.kind, w.kind);
        assert_eq!(
            loaded.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            w.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn identical_weights_produce_identical_bytes() {
        let w = sample_weights();
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.ckpt"), dir.path().join("b.ckpt"));
        save(&w, &p1).unwrap();
        save(&w, &p2).unwrap();
        assert_eq!(std::fs::read(p1).unwrap(), std::fs::read(p2).unwrap());
    }

    #[test]
    fn bad_magic_and_truncation_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, b"not a checkpoint at all").unwrap();
        assert!(load(&path).is_err());

        let w = sample_weights();
        let good = dir.path().join("good.ckpt");
        save(&w, &good).unwrap();
        let mut bytes = std::fs::read(&good).unwrap();
        bytes.truncate(bytes.len() - 5);
        let cut = dir.path().join("cut.ckpt");
        std::fs::write(&cut, bytes).unwrap();
        assert!(load(&cut).is_err());
    }

    #[test]
    fn partial_mask_round_trips() {
        let mask = InnovationMask::only(CellKind::Ilstm, "output").unwrap();
        let w = init_weights(CellKind::Ilstm, 4, 2, 1, mask, Activation::Tanh, 7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save(&w, &path).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(loaded.mask, w.mask);
        assert_eq!(loaded.param_count(), w.param_count());
    }
}
