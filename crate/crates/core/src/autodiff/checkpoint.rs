//! Named-parameter checkpoint archive.
//!
//! Layout: magic, version, a shape table (name, dims, trainable flag), then
//! one raw little-endian f64 payload per parameter in table order. Writing
//! is canonical (parameters sorted by name), so identical stores produce
//! byte-identical files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::params::ParamStore;
use super::tensor::Tensor;

const MAGIC: &[u8; 4] = b"DLTC";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path} is not a checkpoint (bad magic header)")]
    BadMagic { path: String },
    #[error("{path} has unsupported checkpoint version {found} (expected {VERSION})")]
    UnsupportedVersion { path: String, found: u32 },
    #[error("{path} is truncated or corrupt: {message}")]
    Corrupt { path: String, message: String },
    #[error("checkpoint parameter {name:?} has shape {found:?}, store expects {expected:?}")]
    ShapeMismatch {
        name: String,
        found: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("checkpoint is missing parameter {0:?}")]
    MissingParameter(String),
}

pub fn save_checkpoint(store: &ParamStore, path: &Path) -> Result<(), CheckpointError> {
    let io_err = |source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut sorted: Vec<_> = store.iter().map(|(_, p)| p).collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));

    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    let mut run = || -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(sorted.len() as u64).to_le_bytes())?;
        for p in &sorted {
            w.write_all(&(p.name.len() as u32).to_le_bytes())?;
            w.write_all(p.name.as_bytes())?;
            w.write_all(&(p.value.shape().len() as u32).to_le_bytes())?;
            for &d in p.value.shape() {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            w.write_all(&[p.trainable as u8])?;
        }
        for p in &sorted {
            for v in p.value.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()
    };
    run().map_err(io_err)
}

/// Reads a checkpoint as `(name, tensor, trainable)` triples in file order.
pub fn read_checkpoint(path: &Path) -> Result<Vec<(String, Tensor, bool)>, CheckpointError> {
    let file = File::open(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut r = BufReader::new(file);
    let pathname = path.display().to_string();
    let corrupt = |message: String| CheckpointError::Corrupt {
        path: pathname.clone(),
        message,
    };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| corrupt(e.to_string()))?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic { path: pathname });
    }
    let version = read_u32(&mut r).map_err(|e| corrupt(e.to_string()))?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion {
            path: pathname,
            found: version,
        });
    }
    let count = read_u64(&mut r).map_err(|e| corrupt(e.to_string()))? as usize;
    let mut table = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let name_len = read_u32(&mut r).map_err(|e| corrupt(e.to_string()))? as usize;
        if name_len > (1 << 20) {
            return Err(corrupt(format!("parameter name length {name_len} out of range")));
        }
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name).map_err(|e| corrupt(e.to_string()))?;
        let name = String::from_utf8(name).map_err(|e| corrupt(e.to_string()))?;
        let rank = read_u32(&mut r).map_err(|e| corrupt(e.to_string()))? as usize;
        if rank > 8 {
            return Err(corrupt(format!("parameter rank {rank} out of range")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u64(&mut r).map_err(|e| corrupt(e.to_string()))? as usize);
        }
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag).map_err(|e| corrupt(e.to_string()))?;
        table.push((name, shape, flag[0] != 0));
    }
    let mut out = Vec::with_capacity(table.len());
    for (name, shape, trainable) in table {
        let len: usize = shape.iter().product();
        let mut data = vec![0.0f64; len];
        let mut buf = [0u8; 8];
        for slot in &mut data {
            r.read_exact(&mut buf).map_err(|e| corrupt(e.to_string()))?;
            *slot = f64::from_le_bytes(buf);
        }
        out.push((name, Tensor::new(shape, data), trainable));
    }
    Ok(out)
}

/// Loads checkpoint values into an existing store. Every store parameter
/// must be present with a matching shape; extra checkpoint entries are an
/// error too, so a load is an exact restore.
pub fn load_checkpoint_into(store: &mut ParamStore, path: &Path) -> Result<(), CheckpointError> {
    let entries = read_checkpoint(path)?;
    let mut loaded = std::collections::HashSet::new();
    for (name, tensor, _trainable) in entries {
        let Some(id) = store.id(&name) else {
            return Err(CheckpointError::MissingParameter(format!(
                "{name} (present in file, absent in store)"
            )));
        };
        let expected = store.get(id).value.shape().to_vec();
        if tensor.shape() != expected.as_slice() {
            return Err(CheckpointError::ShapeMismatch {
                name,
                found: tensor.shape().to_vec(),
                expected,
            });
        }
        store.get_mut(id).value = tensor;
        loaded.insert(name);
    }
    for (_, p) in store.iter() {
        if !loaded.contains(&p.name) {
            return Err(CheckpointError::MissingParameter(p.name.clone()));
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_store() -> ParamStore {
        let mut store = ParamStore::new();
        store.add("b.vec", Tensor::vector(vec![1.5, -2.5]), true);
        store.add("a.mat", Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]), false);
        store
    }

    #[test]
    fn round_trip_restores_values_and_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("c1.bin");
        let p2 = dir.path().join("c2.bin");
        let store = sample_store();
        save_checkpoint(&store, &p1).unwrap();

        let mut other = sample_store();
        other.get_mut(other.id("b.vec").unwrap()).value.fill(0.0);
        load_checkpoint_into(&mut other, &p1).unwrap();
        assert_eq!(
            other.get(other.id("b.vec").unwrap()).value.data(),
            &[1.5, -2.5]
        );
        save_checkpoint(&other, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        save_checkpoint(&sample_store(), &path).unwrap();
        let mut other = ParamStore::new();
        other.add("b.vec", Tensor::vector(vec![0.0, 0.0, 0.0]), true);
        other.add("a.mat", Tensor::matrix(2, 2, vec![0.0; 4]), false);
        assert!(matches!(
            load_checkpoint_into(&mut other, &path),
            Err(CheckpointError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"XXXX\x01\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00").unwrap();
        assert!(matches!(
            read_checkpoint(&path),
            Err(CheckpointError::BadMagic { .. })
        ));
        let mut bytes = b"DLTC".to_vec();
        bytes.extend_from_slice(&99u32.to_le_bytes());
        bytes.extend_from_slice(&0u64.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_checkpoint(&path),
            Err(CheckpointError::UnsupportedVersion { found: 99, .. })
        ));
    }
}
