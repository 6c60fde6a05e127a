//! Files: atomic writes, the `f32` weight format and network export.
//!
//! A weight file is a flat little-endian `f32` array in row-major order. Its
//! shape lives in a JSON sidecar with the same stem, `{"rows": R, "cols": C}`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use levyprop_core::{Matrix, Network, NetworkSpec};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_vec_pretty(value)?;
    s.push(b'\n');
    write_atomic(path, &s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_shape(path: &Path) -> Result<Shape> {
    let side = sidecar_path(path);
    let bytes = read(&side)?;
    serde_json::from_slice(&bytes).map_err(|e| {
        // serde_json reports line/column; convert to a byte offset
        let offset = bytes
            .split_inclusive(|&b| b == b'\n')
            .take(e.line().saturating_sub(1))
            .map(|l| l.len())
            .sum::<usize>()
            + e.column().saturating_sub(1);
        Error::malformed(&side, offset as u64, e.to_string())
    })
}

/// Values of a weight file, checked against its sidecar.
pub fn read_weight_values(path: &Path) -> Result<(Shape, Vec<f64>)> {
    let shape = read_shape(path)?;
    let bytes = read(path)?;
    if bytes.is_empty() {
        return Err(Error::malformed(path, 0, "empty weight file"));
    }
    let expected = shape
        .rows
        .checked_mul(shape.cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::malformed(sidecar_path(path), 0, "shape overflows"))?;
    if bytes.len() % 4 != 0 {
        let offset = bytes.len() - bytes.len() % 4;
        return Err(Error::malformed(path, offset as u64, "truncated f32 value"));
    }
    if bytes.len() != expected {
        let offset = bytes.len().min(expected);
        return Err(Error::malformed(
            path,
            offset as u64,
            format!(
                "expected {expected} bytes for {}x{}, found {}",
                shape.rows,
                shape.cols,
                bytes.len()
            ),
        ));
    }
    let mut values = Vec::with_capacity(expected / 4);
    for (k, chunk) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() {
            return Err(Error::malformed(path, 4 * k as u64, "non-finite value"));
        }
        values.push(f64::from(v));
    }
    Ok((shape, values))
}

pub fn read_weights(path: &Path) -> Result<Matrix> {
    let (shape, values) = read_weight_values(path)?;
    Ok(Matrix::from_vec(shape.rows, shape.cols, values)?)
}

pub fn write_weight_values(path: &Path, shape: Shape, values: &[f64]) -> Result<()> {
    if values.len() != shape.rows * shape.cols {
        return Err(Error::Core(levyprop_core::Error::Shape {
            expected: shape.rows * shape.cols,
            got: values.len(),
        }));
    }
    let bytes: Vec<u8> = values
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect();
    write_atomic(path, &bytes)?;
    write_json(&sidecar_path(path), &shape)
}

pub fn write_weights(path: &Path, m: &Matrix) -> Result<()> {
    let shape = Shape {
        rows: m.rows(),
        cols: m.cols(),
    };
    write_weight_values(path, shape, m.as_slice())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkManifest {
    pub spec: NetworkSpec,
    pub seed: u64,
    /// Per layer, relative to the manifest directory.
    pub weights: Vec<String>,
    pub biases: Vec<String>,
}

pub const NETWORK_MANIFEST: &str = "network.json";

/// One weight file and one bias file per layer, plus `network.json`.
pub fn export_network(dir: &Path, net: &Network) -> Result<()> {
    let depth = net.spec().depth;
    let mut weights = Vec::with_capacity(depth);
    let mut biases = Vec::with_capacity(depth);
    for l in 1..=depth {
        let w = format!("layer{l:02}_weight.f32");
        let b = format!("layer{l:02}_bias.f32");
        write_weights(&dir.join(&w), net.weight(l))?;
        let bias = net.bias(l);
        write_weight_values(
            &dir.join(&b),
            Shape {
                rows: 1,
                cols: bias.len(),
            },
            bias,
        )?;
        weights.push(w);
        biases.push(b);
    }
    write_json(
        &dir.join(NETWORK_MANIFEST),
        &NetworkManifest {
            spec: *net.spec(),
            seed: net.seed(),
            weights,
            biases,
        },
    )
}

pub fn import_network(dir: &Path) -> Result<Network> {
    let path = dir.join(NETWORK_MANIFEST);
    let bytes = read(&path)?;
    let manifest: NetworkManifest =
        serde_json::from_slice(&bytes).map_err(|e| Error::malformed(&path, 0, e.to_string()))?;
    let weights = manifest
        .weights
        .iter()
        .map(|w| read_weights(&dir.join(w)))
        .collect::<Result<Vec<_>>>()?;
    let biases = manifest
        .biases
        .iter()
        .map(|b| read_weight_values(&dir.join(b)).map(|(_, v)| v))
        .collect::<Result<Vec<_>>>()?;
    Ok(Network::from_parts(
        manifest.spec,
        manifest.seed,
        weights,
        biases,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.f32");
        let m = Matrix::from_fn(3, 4, |i, j| i as f64 - 0.5 * j as f64);
        write_weights(&p, &m).unwrap();
        assert_eq!(read_weights(&p).unwrap(), m);
        assert_eq!(fs::read(&p).unwrap().len(), 48);
    }

    #[test]
    fn malformed_offsets() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.f32");
        write_json(&sidecar_path(&p), &Shape { rows: 2, cols: 2 }).unwrap();
        fs::write(&p, []).unwrap();
        assert!(matches!(
            read_weights(&p),
            Err(Error::Malformed { offset: 0, .. })
        ));
        fs::write(&p, [0u8; 10]).unwrap();
        assert!(matches!(
            read_weights(&p),
            Err(Error::Malformed { offset: 8, .. })
        ));
        fs::write(&p, [0u8; 12]).unwrap();
        assert!(matches!(
            read_weights(&p),
            Err(Error::Malformed { offset: 12, .. })
        ));
        let mut bytes = vec![0u8; 16];
        bytes[8..12].copy_from_slice(&f32::NAN.to_le_bytes());
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(
            read_weights(&p),
            Err(Error::Malformed { offset: 8, .. })
        ));
        fs::write(sidecar_path(&p), b"{\"rows\": 2,\n \"cols\": x}").unwrap();
        match read_weights(&p) {
            Err(Error::Malformed { offset, .. }) => assert_eq!(offset, 21),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_sidecar_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.f32");
        fs::write(&p, [0u8; 4]).unwrap();
        assert!(matches!(read_weights(&p), Err(Error::Io { .. })));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
