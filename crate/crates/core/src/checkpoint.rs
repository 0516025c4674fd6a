//! Binary model checkpoints.
//!
//! Layout: the 5-byte magic `HYQN1`, then qubits, depth, feature dimension
//! and class count as little-endian `u32`, then every parameter block as
//! little-endian `f64` in row-major order: pre-net weights (q×D), pre-net
//! bias (q), rotation angles (d×q), post-net weights (C×q), post-net bias (C).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::hybridnet::HybridModel;
use crate::varcircuit::CircuitSpec;

pub const MAGIC: &[u8; 5] = b"HYQN1";

pub fn write_model(model: &HybridModel, mut w: impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    let spec = model.spec();
    for v in [
        spec.qubits(),
        spec.depth(),
        model.feature_dim(),
        model.num_classes(),
    ] {
        let v = u32::try_from(v)
            .map_err(|_| Error::Checkpoint(format!("dimension {v} exceeds u32")))?;
        w.write_all(&v.to_le_bytes())?;
    }
    for p in model.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_model(mut r: impl Read) -> Result<HybridModel> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Checkpoint("file too short for magic".into()))?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!("bad magic {magic:?}")));
    }
    let mut dims = [0usize; 4];
    for d in &mut dims {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)
            .map_err(|_| Error::Checkpoint("truncated header".into()))?;
        *d = u32::from_le_bytes(b) as usize;
    }
    let [q, depth, features, classes] = dims;
    let spec = CircuitSpec::new(q, depth)?;
    let mut model = HybridModel::zeros(spec, features, classes)?;
    let mut params = Vec::with_capacity(model.num_params());
    let mut b = [0u8; 8];
    for i in 0..model.num_params() {
        r.read_exact(&mut b).map_err(|_| {
            Error::Checkpoint(format!(
                "truncated after {i} of {} parameters",
                model.num_params()
            ))
        })?;
        params.push(f64::from_le_bytes(b));
    }
    if r.read(&mut b)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after parameters".into()));
    }
    model = HybridModel::from_params(spec, features, classes, params)?;
    Ok(model)
}

pub fn save(model: &HybridModel, path: impl AsRef<Path>) -> Result<()> {
    write_model(model, BufWriter::new(File::create(path)?))
}

pub fn load(path: impl AsRef<Path>) -> Result<HybridModel> {
    read_model(BufReader::new(File::open(path)?))
}
