use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use vrp_core::VariantFlags;

use crate::error::PolicyError;
use crate::params::{PolicyConfig, PolicyParams};

const MAGIC: &[u8; 8] = b"VRPPOL1\0";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorMeta {
    name: String,
    rows: usize,
    cols: usize,
    dtype: String,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    config: PolicyConfig,
    trained_on: VariantFlags,
    tensors: Vec<TensorMeta>,
}

/// Writes a checkpoint: magic, JSON header (config, variant, tensor
/// directory), then raw little-endian f64 data. The round trip is bitwise
/// lossless.
pub fn save_checkpoint(params: &PolicyParams, path: &Path) -> Result<(), PolicyError> {
    let mut tensors: Vec<(String, &Array2<f64>)> = params.trainable_tensors();
    tensors.extend(params.stat_tensors());
    let header = Header {
        version: VERSION,
        config: params.config,
        trained_on: params.trained_on,
        tensors: tensors
            .iter()
            .map(|(name, t)| TensorMeta {
                name: name.clone(),
                rows: t.nrows(),
                cols: t.ncols(),
                dtype: "f64".into(),
            })
            .collect(),
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| PolicyError::Checkpoint(format!("header encode: {e}")))?;
    let file = std::fs::File::create(path)
        .map_err(|e| PolicyError::Checkpoint(format!("{}: {e}", path.display())))?;
    let mut out = std::io::BufWriter::new(file);
    let write = |out: &mut std::io::BufWriter<std::fs::File>, bytes: &[u8]| {
        out.write_all(bytes)
            .map_err(|e| PolicyError::Checkpoint(format!("write: {e}")))
    };
    write(&mut out, MAGIC)?;
    write(&mut out, &(header_json.len() as u32).to_le_bytes())?;
    write(&mut out, &header_json)?;
    for (_, tensor) in &tensors {
        for v in tensor.iter() {
            write(&mut out, &v.to_le_bytes())?;
        }
    }
    out.flush()
        .map_err(|e| PolicyError::Checkpoint(format!("flush: {e}")))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<PolicyParams, PolicyError> {
    let file = std::fs::File::open(path)
        .map_err(|e| PolicyError::Checkpoint(format!("{}: {e}", path.display())))?;
    let mut input = std::io::BufReader::new(file);
    let mut magic = [0u8; 8];
    input
        .read_exact(&mut magic)
        .map_err(|e| PolicyError::Checkpoint(format!("read magic: {e}")))?;
    if &magic != MAGIC {
        return Err(PolicyError::Checkpoint("bad magic bytes".into()));
    }
    let mut len_bytes = [0u8; 4];
    input
        .read_exact(&mut len_bytes)
        .map_err(|e| PolicyError::Checkpoint(format!("read header length: {e}")))?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_json = vec![0u8; header_len];
    input
        .read_exact(&mut header_json)
        .map_err(|e| PolicyError::Checkpoint(format!("read header: {e}")))?;
    let header: Header = serde_json::from_slice(&header_json)
        .map_err(|e| PolicyError::Checkpoint(format!("header decode: {e}")))?;
    if header.version != VERSION {
        return Err(PolicyError::Checkpoint(format!(
            "unsupported checkpoint version {}",
            header.version
        )));
    }
    header.config.validate()?;

    let mut params = PolicyParams::init(header.config, header.trained_on, 0);
    let mut pending: std::collections::HashMap<String, Array2<f64>> = std::collections::HashMap::new();
    for meta in &header.tensors {
        if meta.dtype != "f64" {
            return Err(PolicyError::Checkpoint(format!(
                "tensor {} has unsupported dtype {}",
                meta.name, meta.dtype
            )));
        }
        let count = meta.rows * meta.cols;
        let mut data = vec![0.0f64; count];
        let mut buf = [0u8; 8];
        for slot in data.iter_mut() {
            input
                .read_exact(&mut buf)
                .map_err(|e| PolicyError::Checkpoint(format!("read tensor {}: {e}", meta.name)))?;
            *slot = f64::from_le_bytes(buf);
        }
        let tensor = Array2::from_shape_vec((meta.rows, meta.cols), data)
            .map_err(|e| PolicyError::Checkpoint(format!("tensor {}: {e}", meta.name)))?;
        pending.insert(meta.name.clone(), tensor);
    }

    let mut fill = |slots: Vec<(String, &mut Array2<f64>)>| -> Result<(), PolicyError> {
        for (name, slot) in slots {
            let tensor = pending
                .remove(&name)
                .ok_or_else(|| PolicyError::Checkpoint(format!("missing tensor {name}")))?;
            if tensor.raw_dim() != slot.raw_dim() {
                return Err(PolicyError::Checkpoint(format!(
                    "tensor {name} has shape {:?}, expected {:?}",
                    tensor.raw_dim(),
                    slot.raw_dim()
                )));
            }
            *slot = tensor;
        }
        Ok(())
    };
    fill(params.trainable_tensors_mut())?;
    fill(params.stat_tensors_mut())?;
    if let Some(extra) = pending.keys().next() {
        return Err(PolicyError::Checkpoint(format!("unexpected tensor {extra}")));
    }
    Ok(params)
}
