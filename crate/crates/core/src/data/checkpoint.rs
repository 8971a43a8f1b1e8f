//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "SURFPARC"
//! version    u32      1
//! config     u64 length + compact JSON of the model configuration
//! hash       32 bytes SHA-256 of that JSON
//! seed       u64
//! stage      u8       0 = coarse, 1 = refine
//! optimizer  u64 length + JSON of the learning-rate state
//! count      u32      number of tensors
//! tensor     u32 name length, UTF-8 name, u32 rank, u64 per dim,
//!            then the values as f64
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use super::config::config_hash;
use crate::diff::Parameterized;
use crate::error::{ConfigError, DataError, Error, Result};
use crate::mesh::io::write_atomic;
use crate::network::{ModelConfig, OptimizerState, ParcellationModel, Stage};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SURFPARC";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    out.extend_from_slice(&(b.len() as u64).to_le_bytes());
    out.extend_from_slice(b);
}

pub fn encode_checkpoint(model: &mut ParcellationModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let config = serde_json::to_vec(model.config()).expect("config serializes");
    put_bytes(&mut out, &config);
    out.extend_from_slice(&config_hash(model.config()));
    out.extend_from_slice(&model.seed().to_le_bytes());
    out.push(match model.stage {
        Stage::Coarse => 0,
        Stage::Refine => 1,
    });
    put_bytes(&mut out, &serde_json::to_vec(&model.optimizer).expect("optimizer serializes"));

    let mut tensors = Vec::new();
    model.visit_params("", &mut |p| tensors.push((p.name, p.shape, p.value.to_vec())));
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, (r, c), values) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&2u32.to_le_bytes());
        out.extend_from_slice(&(r as u64).to_le_bytes());
        out.extend_from_slice(&(c as u64).to_le_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ConfigError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            ConfigError::Checkpoint(format!("truncated at byte {} (needed {n} more)", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ConfigError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, ConfigError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len_prefixed(&mut self) -> Result<&'a [u8], ConfigError> {
        let n = self.u64()?;
        self.take(usize::try_from(n).map_err(|_| ConfigError::Checkpoint("length overflow".into()))?)
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ParcellationModel> {
    let bad = |m: String| Error::Config(ConfigError::Checkpoint(m));
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(bad("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let config_json = r.len_prefixed()?;
    let config: ModelConfig =
        serde_json::from_slice(config_json).map_err(|e| bad(format!("config: {e}")))?;
    let hash = r.take(32)?;
    if hash != config_hash(&config) {
        return Err(bad("configuration hash mismatch".into()));
    }
    let seed = r.u64()?;
    let stage = match r.take(1)?[0] {
        0 => Stage::Coarse,
        1 => Stage::Refine,
        s => return Err(bad(format!("unknown stage tag {s}"))),
    };
    let optimizer: OptimizerState =
        serde_json::from_slice(r.len_prefixed()?).map_err(|e| bad(format!("optimizer: {e}")))?;

    let count = r.u32()?;
    let mut tensors = BTreeMap::new();
    for _ in 0..count {
        let n = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(n)?).map_err(|_| bad("tensor name is not UTF-8".into()))?;
        let rank = r.u32()?;
        let dims = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let len: usize = dims.iter().product();
        let raw = r.take(len.checked_mul(8).ok_or_else(|| bad("tensor too large".into()))?)?;
        let values: Vec<f64> =
            raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        if tensors.insert(name.to_string(), (dims, values)).is_some() {
            return Err(bad(format!("duplicate tensor `{name}`")));
        }
    }
    if r.pos != bytes.len() {
        return Err(bad(format!("{} trailing bytes", bytes.len() - r.pos)));
    }

    let mut model = ParcellationModel::new(config, seed)?;
    model.stage = stage;
    model.optimizer = optimizer;
    let mut problem = None;
    model.visit_params("", &mut |p| match tensors.remove(&p.name) {
        Some((dims, values)) if dims == [p.shape.0, p.shape.1] => p.value.copy_from_slice(&values),
        Some((dims, _)) => {
            problem.get_or_insert(format!("tensor `{}` has dims {dims:?}, expected {:?}", p.name, p.shape));
        }
        None => {
            problem.get_or_insert(format!("missing tensor `{}`", p.name));
        }
    });
    if let Some(m) = problem {
        return Err(bad(m));
    }
    if let Some(name) = tensors.keys().next() {
        return Err(bad(format!("unexpected tensor `{name}`")));
    }
    Ok(model)
}

pub fn save_checkpoint(path: &Path, model: &mut ParcellationModel) -> Result<(), DataError> {
    write_atomic(path, &encode_checkpoint(model))
}

pub fn load_checkpoint(path: &Path) -> Result<ParcellationModel> {
    let bytes = std::fs::read(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    decode_checkpoint(&bytes).map_err(|e| match e {
        Error::Config(ConfigError::Checkpoint(m)) => {
            Error::Config(ConfigError::Checkpoint(format!("{}: {m}", path.display())))
        }
        other => other,
    })
}
