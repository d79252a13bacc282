//! Tensor file format: magic `QCAMTNS1`, u64 LE header length, a JSON
//! header naming each tensor and its shape, then every tensor's values as
//! little-endian f64 in header order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Network, NetworkSpec, Tensor};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"QCAMTNS1";

#[derive(Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
}

pub(crate) fn write_tensor_file(path: &Path, mut header: serde_json::Value, tensors: &[(String, Tensor)]) -> Result<()> {
    let entries: Vec<Entry> =
        tensors.iter().map(|(name, t)| Entry { name: name.clone(), shape: t.shape().to_vec() }).collect();
    header["tensors"] = serde_json::to_value(entries)?;
    let json = serde_json::to_vec(&header)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(MAGIC)?;
    f.write_all(&(json.len() as u64).to_le_bytes())?;
    f.write_all(&json)?;
    for (_, t) in tensors {
        for v in t.data() {
            f.write_all(&v.to_le_bytes())?;
        }
    }
    f.flush()?;
    Ok(())
}

pub(crate) fn read_tensor_file(path: &Path) -> Result<(serde_json::Value, Vec<(String, Tensor)>)> {
    let bad = |reason: &str| Error::Format { path: path.to_owned(), reason: reason.to_owned() };
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    if buf.len() < 16 || &buf[..8] != MAGIC {
        return Err(bad("missing QCAMTNS1 magic"));
    }
    let hlen = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
    let json = buf.get(16..16 + hlen).ok_or_else(|| bad("truncated header"))?;
    let header: serde_json::Value = serde_json::from_slice(json)?;
    let entries: Vec<Entry> = serde_json::from_value(header["tensors"].clone())?;
    let mut pos = 16 + hlen;
    let mut tensors = Vec::with_capacity(entries.len());
    for e in entries {
        let n: usize = e.shape.iter().product();
        let bytes = buf.get(pos..pos + 8 * n).ok_or_else(|| bad("truncated payload"))?;
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        tensors.push((e.name, Tensor::new(e.shape, data)?));
        pos += 8 * n;
    }
    if pos != buf.len() {
        return Err(bad("trailing bytes after payload"));
    }
    Ok((header, tensors))
}

impl Network {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let header = serde_json::json!({ "kind": "network", "spec": self.spec(), "seed": self.seed() });
        let tensors: Vec<(String, Tensor)> = self.names().iter().cloned().zip(self.params().iter().cloned()).collect();
        write_tensor_file(path.as_ref(), header, &tensors)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (header, tensors) = read_tensor_file(path)?;
        let spec: NetworkSpec = serde_json::from_value(header["spec"].clone())?;
        let seed = header["seed"].as_u64().unwrap_or(0);
        for ((name, _), (expect, _)) in tensors.iter().zip(spec.param_shapes()?) {
            if *name != expect {
                return Err(Error::Format { path: path.to_owned(), reason: format!("tensor {name}, expected {expect}") });
            }
        }
        Network::from_params(spec, tensors.into_iter().map(|(_, t)| t).collect(), seed)
    }
}
