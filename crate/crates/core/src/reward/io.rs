//! `.lrm` model files.
//!
//! ```text
//! magic "LRM1" | header_len u32 | header (key=value lines, UTF-8)
//! per parameter, canonical order:
//!   name_len u16 | name | count u64 | count x f64
//! ```
//! All integers and floats little-endian.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::model::{ModelConfig, Parameters, RewardModel};

pub const MAGIC: [u8; 4] = *b"LRM1";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("bad magic {0:?}, expected \"LRM1\"")]
    BadMagic([u8; 4]),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("parameter block {index}: expected {expected_name} ({expected_len} values), found {found_name} ({found_len} values)")]
    ParameterMismatch {
        index: usize,
        expected_name: String,
        expected_len: usize,
        found_name: String,
        found_len: u64,
    },
    #[error("non-finite value in parameter {0}")]
    NonFinite(String),
    #[error("trailing bytes after the last parameter block")]
    TrailingBytes,
    #[error("truncated model file")]
    Truncated,
    #[error(transparent)]
    Io(io::Error),
}

impl From<io::Error> for ModelFileError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            ModelFileError::Truncated
        } else {
            ModelFileError::Io(e)
        }
    }
}

fn header_text(cfg: &ModelConfig) -> String {
    format!(
        "input_dim={}\nmodel_dim={}\nblocks={}\nheads={}\nffn_multiplier={}\nhead_hidden={}\nseed={}\npositional_encoding={}\n",
        cfg.input_dim,
        cfg.model_dim,
        cfg.blocks,
        cfg.heads,
        cfg.ffn_multiplier,
        cfg.head_hidden,
        cfg.seed,
        cfg.positional_encoding,
    )
}

fn parse_header(text: &str) -> Result<ModelConfig, ModelFileError> {
    let mut kv = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ModelFileError::Header(format!("line without '=': {line:?}")))?;
        kv.insert(k.trim(), v.trim());
    }
    let get = |key: &str| {
        kv.get(key)
            .copied()
            .ok_or_else(|| ModelFileError::Header(format!("missing {key}")))
    };
    let num = |key: &str| -> Result<usize, ModelFileError> {
        get(key)?
            .parse()
            .map_err(|_| ModelFileError::Header(format!("{key} is not an integer")))
    };
    let cfg = ModelConfig {
        input_dim: num("input_dim")?,
        model_dim: num("model_dim")?,
        blocks: num("blocks")?,
        heads: num("heads")?,
        ffn_multiplier: num("ffn_multiplier")?,
        head_hidden: num("head_hidden")?,
        seed: get("seed")?
            .parse()
            .map_err(|_| ModelFileError::Header("seed is not an integer".into()))?,
        positional_encoding: match kv.get("positional_encoding") {
            None => true,
            Some(v) => v
                .parse()
                .map_err(|_| ModelFileError::Header("positional_encoding is not a bool".into()))?,
        },
    };
    cfg.validate()
        .map_err(|e| ModelFileError::Header(e.to_string()))?;
    Ok(cfg)
}

pub fn write_model<W: Write>(model: &RewardModel, mut sink: W) -> Result<u64, ModelFileError> {
    let header = header_text(&model.config);
    let mut written = 0u64;
    sink.write_all(&MAGIC)?;
    sink.write_all(&(header.len() as u32).to_le_bytes())?;
    sink.write_all(header.as_bytes())?;
    written += 8 + header.len() as u64;
    for (name, values) in model.params.named() {
        sink.write_all(&(name.len() as u16).to_le_bytes())?;
        sink.write_all(name.as_bytes())?;
        sink.write_all(&(values.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(values.len() * 8);
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        sink.write_all(&buf)?;
        written += 2 + name.len() as u64 + 8 + buf.len() as u64;
    }
    sink.flush()?;
    Ok(written)
}

pub fn read_model<R: Read>(mut source: R) -> Result<RewardModel, ModelFileError> {
    let mut magic = [0u8; 4];
    source.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(ModelFileError::BadMagic(magic));
    }
    let mut u32buf = [0u8; 4];
    source.read_exact(&mut u32buf)?;
    let mut header = vec![0u8; u32::from_le_bytes(u32buf) as usize];
    source.read_exact(&mut header)?;
    let header = String::from_utf8(header)
        .map_err(|_| ModelFileError::Header("header is not UTF-8".into()))?;
    let config = parse_header(&header)?;

    let mut params = Parameters::zeros(&config);
    let names: Vec<String> = params.named().into_iter().map(|(n, _)| n).collect();
    for (index, (expected, dst)) in names.iter().zip(params.arrays_mut()).enumerate() {
        let mut u16buf = [0u8; 2];
        source.read_exact(&mut u16buf)?;
        let mut name = vec![0u8; u16::from_le_bytes(u16buf) as usize];
        source.read_exact(&mut name)?;
        let name = String::from_utf8_lossy(&name).into_owned();
        let mut u64buf = [0u8; 8];
        source.read_exact(&mut u64buf)?;
        let count = u64::from_le_bytes(u64buf);
        if &name != expected || count != dst.len() as u64 {
            return Err(ModelFileError::ParameterMismatch {
                index,
                expected_name: expected.clone(),
                expected_len: dst.len(),
                found_name: name,
                found_len: count,
            });
        }
        let mut raw = vec![0u8; dst.len() * 8];
        source.read_exact(&mut raw)?;
        for (d, b) in dst.iter_mut().zip(raw.chunks_exact(8)) {
            *d = f64::from_le_bytes(b.try_into().unwrap());
        }
        if dst.iter().any(|v| !v.is_finite()) {
            return Err(ModelFileError::NonFinite(name));
        }
    }
    let mut extra = [0u8; 1];
    if source.read(&mut extra)? != 0 {
        return Err(ModelFileError::TrailingBytes);
    }
    Ok(RewardModel { config, params })
}

pub fn save_model(model: &RewardModel, path: impl AsRef<Path>) -> Result<u64, ModelFileError> {
    write_model(
        model,
        BufWriter::new(File::create(path).map_err(ModelFileError::Io)?),
    )
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RewardModel, ModelFileError> {
    read_model(BufReader::new(
        File::open(path).map_err(ModelFileError::Io)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::init_model;

    fn model() -> RewardModel {
        let cfg = ModelConfig {
            model_dim: 8,
            head_hidden: 6,
            blocks: 2,
            seed: 3,
            ..ModelConfig::new(5)
        };
        init_model(cfg).unwrap()
    }

    #[test]
    fn roundtrip_is_exact() {
        let m = model();
        let mut bytes = Vec::new();
        let n = write_model(&m, &mut bytes).unwrap();
        assert_eq!(n as usize, bytes.len());
        assert_eq!(read_model(bytes.as_slice()).unwrap(), m);
    }

    #[test]
    fn header_is_readable_text() {
        let mut bytes = Vec::new();
        write_model(&model(), &mut bytes).unwrap();
        let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let text = std::str::from_utf8(&bytes[8..8 + len]).unwrap();
        assert!(text.contains("model_dim=8\n") && text.contains("blocks=2\n"));
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let mut bytes = Vec::new();
        write_model(&model(), &mut bytes).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_model(bad.as_slice()),
            Err(ModelFileError::BadMagic(_))
        ));
        assert!(matches!(
            read_model(&bytes[..bytes.len() - 3]),
            Err(ModelFileError::Truncated)
        ));
        bytes.push(0);
        assert!(matches!(
            read_model(bytes.as_slice()),
            Err(ModelFileError::TrailingBytes)
        ));
    }

    #[test]
    fn rejects_header_param_mismatch() {
        let mut bytes = Vec::new();
        write_model(&model(), &mut bytes).unwrap();
        // header claims a wider head than the stored arrays
        let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let header = std::str::from_utf8(&bytes[8..8 + len])
            .unwrap()
            .replace("head_hidden=6", "head_hidden=7");
        let mut edited = bytes[..4].to_vec();
        edited.extend_from_slice(&(header.len() as u32).to_le_bytes());
        edited.extend_from_slice(header.as_bytes());
        edited.extend_from_slice(&bytes[8 + len..]);
        assert!(matches!(
            read_model(edited.as_slice()),
            Err(ModelFileError::ParameterMismatch { .. })
        ));
    }
}
