//! Model persistence: a versioned JSON header followed by the flat
//! little-endian float64 weight payload. Round-trips are bitwise exact
//! for `f64` models.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::surrogate::layer::GmmConvLayer;
use crate::surrogate::model::SurrogateModel;

const MAGIC: &[u8; 4] = b"SOPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct LayerHeader {
    in_dim: usize,
    out_dim: usize,
    kernels: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    version: u32,
    sinusoids: usize,
    dropout_rate: f64,
    seed: u64,
    strict_center_transform: bool,
    #[serde(default = "one")]
    out_scale: f64,
    #[serde(default)]
    out_shift: f64,
    layers: Vec<LayerHeader>,
    weight_count: usize,
}

fn one() -> f64 {
    1.0
}

fn weight_count(layers: &[LayerHeader]) -> usize {
    layers.iter().map(|l| l.kernels * (l.out_dim * l.in_dim + 6)).sum()
}

pub fn save_model<T: Scalar>(model: &SurrogateModel<T>, path: &Path) -> Result<()> {
    let header = ModelHeader {
        version: FORMAT_VERSION,
        sinusoids: model.sinusoids,
        dropout_rate: model.dropout_rate.as_f64(),
        seed: model.seed,
        strict_center_transform: model.strict_center_transform,
        out_scale: model.out_scale.as_f64(),
        out_shift: model.out_shift.as_f64(),
        layers: model
            .layers
            .iter()
            .map(|l| LayerHeader { in_dim: l.in_dim, out_dim: l.out_dim, kernels: l.kernels })
            .collect(),
        weight_count: model
            .layers
            .iter()
            .map(|l| l.theta.len() + l.mu.len() + l.log_var.len())
            .sum(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut bytes =
        Vec::with_capacity(12 + header_bytes.len() + 8 * header.weight_count);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(header_bytes.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&header_bytes);
    for layer in &model.layers {
        for block in [&layer.theta, &layer.mu, &layer.log_var] {
            for &w in block.iter() {
                bytes.extend_from_slice(&w.as_f64().to_le_bytes());
            }
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<SurrogateModel<T>> {
    let bytes = fs::read(path)?;
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(Error::CorruptFile(format!("{}: bad magic", path.display())));
    }
    let header_len = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes")) as usize;
    let payload_start = 12 + header_len;
    if bytes.len() < payload_start {
        return Err(Error::CorruptFile(format!("{}: truncated header", path.display())));
    }
    let header: ModelHeader = serde_json::from_slice(&bytes[12..payload_start])
        .map_err(|e| Error::CorruptFile(format!("{}: {e}", path.display())))?;
    if header.version != FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: header.version, expected: FORMAT_VERSION });
    }
    let expected = weight_count(&header.layers);
    if header.weight_count != expected || bytes.len() != payload_start + 8 * expected {
        return Err(Error::CorruptFile(format!(
            "{}: payload has {} bytes, expected {}",
            path.display(),
            bytes.len() - payload_start,
            8 * expected
        )));
    }
    let mut cursor = payload_start;
    let mut next = |n: usize| -> Vec<T> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let v = f64::from_le_bytes(bytes[cursor..cursor + 8].try_into().expect("8 bytes"));
            out.push(T::from_f64(v));
            cursor += 8;
        }
        out
    };
    let layers = header
        .layers
        .iter()
        .map(|lh| GmmConvLayer {
            in_dim: lh.in_dim,
            out_dim: lh.out_dim,
            kernels: lh.kernels,
            edge_dim: 3,
            theta: next(lh.kernels * lh.out_dim * lh.in_dim),
            mu: next(lh.kernels * 3),
            log_var: next(lh.kernels * 3),
        })
        .collect();
    Ok(SurrogateModel {
        layers,
        sinusoids: header.sinusoids,
        dropout_rate: T::from_f64(header.dropout_rate),
        seed: header.seed,
        strict_center_transform: header.strict_center_transform,
        out_scale: T::from_f64(header.out_scale),
        out_shift: T::from_f64(header.out_shift),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_features, circle_contour};
    use crate::rng::stream_rng;
    use crate::surrogate::layer::GraphCache;
    use crate::surrogate::model::ModelConfig;

    fn model() -> SurrogateModel<f64> {
        let cfg =
            ModelConfig { depth: 3, hidden_dim: 8, kernels: 2, sinusoids: 2, ..Default::default() };
        SurrogateModel::init(&cfg, 0.1, 21).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.sopt");
        let m = model();
        save_model(&m, &path).unwrap();
        let loaded: SurrogateModel<f64> = load_model(&path).unwrap();
        assert_eq!(m, loaded);

        let mut mesh = circle_contour::<f64>(12, 0.5);
        build_features(&mut mesh, 2).unwrap();
        let graph = GraphCache::build(&mesh).unwrap();
        let feats = m.features_of(&mesh).unwrap();
        let mut rng = stream_rng(0, 0);
        let a = m.forward(&graph, &feats, false, &mut rng).unwrap();
        let b = loaded.forward(&graph, &feats, false, &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.sopt");
        save_model(&model(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 16]).unwrap();
        assert!(matches!(load_model::<f64>(&path), Err(Error::CorruptFile(_))));
    }

    #[test]
    fn version_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.sopt");
        save_model(&model(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        // Bump the version field inside the JSON header.
        let json_end = 12 + u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
        let json = String::from_utf8(bytes[12..json_end].to_vec()).unwrap();
        let patched = json.replace("\"version\":1", "\"version\":9");
        assert_ne!(json, patched);
        bytes.splice(12..json_end, patched.into_bytes());
        std::fs::write(&path, &bytes).unwrap();
        match load_model::<f64>(&path) {
            Err(Error::VersionMismatch { found: 9, expected: 1 }) => {}
            other => panic!("expected version mismatch, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.sopt");
        std::fs::write(&path, b"NOPE12345678").unwrap();
        assert!(matches!(load_model::<f64>(&path), Err(Error::CorruptFile(_))));
    }
}
