//! `hgcnn-ckpt v1` container.
//!
//! ```text
//! hgcnn-ckpt v1\n
//! <u64 LE: header length in bytes>
//! <header JSON: {"config": ArchitectureConfig, "tensors": [{name, shape, offset}]}>
//! <tensor data: little-endian f64, offsets in bytes from the start of this section>
//! ```

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ArchitectureConfig;
use super::network::Hgcnn;
use crate::error::{Error, Result};
use crate::nn::Parameterized;

pub const MAGIC: &[u8] = b"hgcnn-ckpt v1\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub config: ArchitectureConfig,
    pub tensors: Vec<TensorEntry>,
}

pub fn save_checkpoint<W: Write>(model: &Hgcnn, mut out: W) -> Result<()> {
    let mut model = model.clone();
    let mut tensors = Vec::new();
    let mut data: Vec<u8> = Vec::new();
    model.visit("", &mut |p| {
        tensors.push(TensorEntry {
            name: p.name,
            shape: p.shape,
            offset: data.len() as u64,
        });
        for v in p.value.iter() {
            data.extend_from_slice(&v.to_le_bytes());
        }
    });
    let header = serde_json::to_vec(&CheckpointHeader {
        config: model.config.clone(),
        tensors,
    })?;
    out.write_all(MAGIC)?;
    out.write_all(&(header.len() as u64).to_le_bytes())?;
    out.write_all(&header)?;
    out.write_all(&data)?;
    Ok(())
}

pub fn load_checkpoint<R: Read>(mut input: R) -> Result<Hgcnn> {
    let mut magic = vec![0u8; MAGIC.len()];
    input.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::Checkpoint("bad magic; not an hgcnn-ckpt v1 file".into()));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let mut header = vec![0u8; u64::from_le_bytes(len) as usize];
    input.read_exact(&mut header)?;
    let header: CheckpointHeader = serde_json::from_slice(&header)?;
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;

    // Values are overwritten below; the seed only fixes the shapes.
    let mut model = Hgcnn::new(header.config.clone(), &mut ChaCha8Rng::seed_from_u64(0))?;
    let mut idx = 0;
    let mut err = None;
    model.visit("", &mut |p| {
        if err.is_some() {
            return;
        }
        let Some(entry) = header.tensors.get(idx) else {
            err = Some(format!("checkpoint has no tensor for {}", p.name));
            return;
        };
        idx += 1;
        if entry.name != p.name || entry.shape != p.shape {
            err = Some(format!(
                "tensor {} {:?} does not match {} {:?} from the config",
                entry.name, entry.shape, p.name, p.shape
            ));
            return;
        }
        let start = entry.offset as usize;
        let end = start + 8 * p.value.len();
        let Some(bytes) = data.get(start..end) else {
            err = Some(format!("tensor {} runs past the end of the data", entry.name));
            return;
        };
        for (v, chunk) in p.value.iter_mut().zip(bytes.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().unwrap());
        }
    });
    if let Some(e) = err {
        return Err(Error::Checkpoint(e));
    }
    if idx != header.tensors.len() {
        return Err(Error::Checkpoint(format!(
            "checkpoint has {} tensors, config expects {idx}",
            header.tensors.len()
        )));
    }
    Ok(model)
}

pub fn save_checkpoint_file(model: &Hgcnn, path: &std::path::Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    save_checkpoint(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint_file(path: &std::path::Path) -> Result<Hgcnn> {
    let f = std::fs::File::open(path)?;
    load_checkpoint(std::io::BufReader::new(f))
}
