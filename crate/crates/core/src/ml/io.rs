//! Model files: `AIGSAGE1` magic, u64 little-endian header length, JSON
//! header (format version, config, tensor manifest), little-endian f32
//! tensor data, and a CRC32 of everything before it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{Model, ModelConfig, Params};

pub const MAGIC: &[u8; 8] = b"AIGSAGE1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a model file (bad magic)")]
    Magic,
    #[error("model file truncated")]
    Truncated,
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("unsupported model format version {0}")]
    Version(u32),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("model config does not match the expected config")]
    ConfigMismatch,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: ModelConfig,
    tensors: Vec<TensorEntry>,
}

pub fn model_to_bytes(model: &Model) -> Vec<u8> {
    let names = model.params.names();
    let mut tensors = Vec::new();
    let mut data: Vec<u8> = Vec::new();
    let mut name = names.iter();
    for d in model.params.tensors() {
        for (shape, values) in [(vec![d.out, d.inp], &d.w), (vec![d.out], &d.b)] {
            tensors.push(TensorEntry {
                name: name.next().unwrap().clone(),
                shape,
                offset: data.len(),
            });
            for v in values {
                data.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let header = serde_json::to_vec(&Header {
        format_version: FORMAT_VERSION,
        config: model.config.clone(),
        tensors,
    })
    .expect("header serializes");
    let mut out = Vec::with_capacity(8 + 8 + header.len() + data.len() + 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&data);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<Model, ModelIoError> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(ModelIoError::Magic);
    }
    if bytes.len() < 8 + 8 + 4 {
        return Err(ModelIoError::Truncated);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(ModelIoError::Checksum { stored, computed });
    }
    let hlen = u64::from_le_bytes(body[8..16].try_into().unwrap()) as usize;
    let data_start = 16usize.checked_add(hlen).ok_or(ModelIoError::Truncated)?;
    if data_start > body.len() {
        return Err(ModelIoError::Truncated);
    }
    #[derive(Deserialize)]
    struct VersionOnly {
        format_version: u32,
    }
    let v: VersionOnly = serde_json::from_slice(&body[16..data_start])
        .map_err(|e| ModelIoError::Header(e.to_string()))?;
    if v.format_version != FORMAT_VERSION {
        return Err(ModelIoError::Version(v.format_version));
    }
    let header: Header = serde_json::from_slice(&body[16..data_start])
        .map_err(|e| ModelIoError::Header(e.to_string()))?;
    header
        .config
        .validate()
        .map_err(|e| ModelIoError::Header(e.to_string()))?;
    let data = &body[data_start..];
    let mut params = Params::<f32>::zeros(&header.config);
    let names = params.names();
    if header.tensors.len() != names.len() {
        return Err(ModelIoError::Header(
            "tensor count does not match config".into(),
        ));
    }
    let mut entries = header.tensors.iter().zip(&names);
    let mut expected_end = 0;
    for d in params.tensors_mut() {
        let shapes = [vec![d.out, d.inp], vec![d.out]];
        for (shape, values) in shapes.iter().zip([&mut d.w, &mut d.b]) {
            let (entry, name) = entries.next().unwrap();
            if &entry.name != name || &entry.shape != shape {
                return Err(ModelIoError::Header(format!(
                    "unexpected tensor {}",
                    entry.name
                )));
            }
            let end = entry.offset + 4 * values.len();
            if end > data.len() {
                return Err(ModelIoError::Truncated);
            }
            for (v, chunk) in values
                .iter_mut()
                .zip(data[entry.offset..end].chunks_exact(4))
            {
                *v = f32::from_le_bytes(chunk.try_into().unwrap());
            }
            expected_end = expected_end.max(end);
        }
    }
    if expected_end != data.len() {
        return Err(ModelIoError::Header("trailing tensor data".into()));
    }
    Ok(Model {
        config: header.config,
        params,
    })
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<(), ModelIoError> {
    std::fs::write(path, model_to_bytes(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model, ModelIoError> {
    model_from_bytes(&std::fs::read(path)?)
}

/// Loads a model and rejects it unless its config equals `expected`.
pub fn load_model_expecting(
    path: impl AsRef<Path>,
    expected: &ModelConfig,
) -> Result<Model, ModelIoError> {
    let m = load_model(path)?;
    if &m.config != expected {
        return Err(ModelIoError::ConfigMismatch);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let mut cfg = ModelConfig::shallow();
        cfg.seed = 9;
        let m = Model::new(cfg).unwrap();
        let bytes = model_to_bytes(&m);
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(model_from_bytes(&bytes).unwrap(), m);
        assert_eq!(model_to_bytes(&model_from_bytes(&bytes).unwrap()), bytes);

        let mut bad = bytes.clone();
        let mid = bad.len() / 2;
        bad[mid] ^= 1;
        assert!(matches!(
            model_from_bytes(&bad),
            Err(ModelIoError::Checksum { .. })
        ));
        assert!(matches!(
            model_from_bytes(&bytes[..bytes.len() - 9]),
            Err(ModelIoError::Checksum { .. })
        ));
        assert!(matches!(
            model_from_bytes(b"NOTAMODEL"),
            Err(ModelIoError::Magic)
        ));
    }

    #[test]
    fn version_and_config_checks() {
        let m = Model::new(ModelConfig::shallow()).unwrap();
        let bytes = model_to_bytes(&m);
        let text = String::from_utf8_lossy(&bytes).into_owned();
        let pos = text.find("\"format_version\":1").unwrap();
        let mut edited = bytes[..bytes.len() - 4].to_vec();
        edited[pos + "\"format_version\":".len()] = b'7';
        let crc = crc32fast::hash(&edited);
        edited.extend_from_slice(&crc.to_le_bytes());
        assert!(matches!(
            model_from_bytes(&edited),
            Err(ModelIoError::Version(7))
        ));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        save_model(&m, &path).unwrap();
        assert!(load_model_expecting(&path, &ModelConfig::shallow()).is_ok());
        assert!(matches!(
            load_model_expecting(&path, &ModelConfig::deep()),
            Err(ModelIoError::ConfigMismatch)
        ));
    }
}
