//! Model checkpoints.
//!
//! ```text
//! magic       8 bytes  "RAUGCKPT"
//! version     u32 LE   1
//! count       u64 LE   number of parameters
//! params      count × f64 LE
//! meta_len    u64 LE
//! meta        meta_len bytes of JSON (CheckpointMeta)
//! ```

use std::fs;
use std::path::Path;

use robustaug_core::model::{LossConfig, Model, TrainConfig, TrainHistory, PARAM_COUNT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::Provenance;

pub const MAGIC: &[u8; 8] = b"RAUGCKPT";
pub const VERSION: u32 = 1;

/// What produced the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub provenance: Provenance,
    pub run_id: String,
    pub train: TrainConfig,
    pub loss: LossConfig,
    pub history: Option<TrainHistory>,
}

pub fn encode(model: &Model, meta: &CheckpointMeta) -> Result<Vec<u8>> {
    let params = model.params();
    let json = serde_json::to_vec(meta)?;
    let mut out = Vec::with_capacity(28 + 8 * params.len() + json.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<(Model, CheckpointMeta)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic, not a checkpoint".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}, expected {VERSION}")));
    }
    let count = r.u64()?;
    if count != PARAM_COUNT as u64 {
        return Err(Error::Checkpoint(format!("{count} parameters, the model has {PARAM_COUNT}")));
    }
    let params =
        r.take(8 * PARAM_COUNT)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let meta_len = usize::try_from(r.u64()?).map_err(|_| Error::Checkpoint("metadata too large".into()))?;
    let meta: CheckpointMeta = serde_json::from_slice(r.take(meta_len)?)?;
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok((Model::from_params(params)?, meta))
}

pub fn save(path: &Path, model: &Model, meta: &CheckpointMeta) -> Result<()> {
    fs::write(path, encode(model, meta)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(Model, CheckpointMeta)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated: needed {n} bytes at offset {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use robustaug_core::Rng;

    fn meta() -> CheckpointMeta {
        CheckpointMeta {
            provenance: Provenance::new("ab".repeat(32), 5),
            run_id: "train-test".into(),
            train: TrainConfig::default(),
            loss: LossConfig::default(),
            history: None,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let model = Model::init(&mut Rng::new(3));
        let bytes = encode(&model, &meta()).unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        let (back, m) = decode(&bytes).unwrap();
        assert_eq!(back.params(), model.params());
        assert_eq!(m, meta());
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = encode(&Model::zeros(), &meta()).unwrap();
        let mut magic = bytes.clone();
        magic[0] = b'X';
        let mut version = bytes.clone();
        version[8] = 2;
        let mut count = bytes.clone();
        count[12] = 0;
        let mut trailing = bytes.clone();
        trailing.push(0);
        for (bad, what) in [
            (magic, "magic"),
            (version, "version"),
            (count, "parameters"),
            (bytes[..bytes.len() - 1].to_vec(), "truncated"),
            (bytes[..100].to_vec(), "truncated"),
            (trailing, "trailing"),
        ] {
            let err = decode(&bad).unwrap_err();
            assert!(err.to_string().contains(what), "{err}");
        }
    }
}
