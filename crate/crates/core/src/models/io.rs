//! Binary model container.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "IMPM"
//! 4       2           format version (u16 LE)
//! 6       4           metadata length L (u32 LE)
//! 10      L           JSON metadata (UTF-8)
//! 10+L    8·τ·n·n     transition tables, step-major, row-major (f64 LE)
//!         8·n         initial belief (f64 LE)
//!         8·n or 0    per-bin PoD (f64 LE), absent for non-inspectable components
//! end-4   4           CRC32 of every preceding byte (u32 LE)
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::discretization::Discretization;
use super::inspection::{InspectionModel, PodCurve};
use super::transition::{ModelMetadata, TransitionModel};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"IMPM";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    n_bins: usize,
    tau_max: usize,
    /// finite bin edges; the last bin extends to infinity
    edges: Vec<f64>,
    pod_curve: Option<PodCurve>,
    metadata: ModelMetadata,
}

/// Serialise a model to bytes.
pub fn encode_model(model: &TransitionModel) -> Result<Vec<u8>> {
    let header = Header {
        n_bins: model.n_bins(),
        tau_max: model.tau_max(),
        edges: model.discretization().edges().to_vec(),
        pod_curve: model.inspection().map(|i| i.curve),
        metadata: model.metadata.clone(),
    };
    let meta = serde_json::to_vec(&header)?;
    let meta_len = u32::try_from(meta.len()).map_err(|_| Error::Format("metadata too large".into()))?;

    let mut buf = Vec::with_capacity(14 + meta.len() + 8 * (model.raw_tables().len() + 2 * model.n_bins()));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&meta_len.to_le_bytes());
    buf.extend_from_slice(&meta);
    let floats = model
        .raw_tables()
        .iter()
        .chain(model.initial_probs())
        .chain(model.inspection().map(|i| i.pod.as_slice()).unwrap_or(&[]));
    for v in floats {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

/// Parse a model from bytes produced by [`encode_model`].
pub fn decode_model(bytes: &[u8]) -> Result<TransitionModel> {
    if bytes.len() < 14 {
        return Err(Error::Checksum);
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(Error::Checksum);
    }

    let meta_len = u32::from_le_bytes(body[6..10].try_into().unwrap()) as usize;
    let meta_end = 10usize
        .checked_add(meta_len)
        .filter(|&e| e <= body.len())
        .ok_or_else(|| Error::Format("metadata length exceeds file".into()))?;
    let header: Header = serde_json::from_slice(&body[10..meta_end])?;
    let n = header.n_bins;
    let payload = &body[meta_end..];
    if payload.len() % 8 != 0 {
        return Err(Error::Format("payload is not a whole number of f64 values".into()));
    }
    let floats: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let n_tables = header.tau_max * n * n;
    let n_pod = if header.pod_curve.is_some() { n } else { 0 };
    if floats.len() != n_tables + n + n_pod {
        return Err(Error::Format(format!(
            "expected {} values, found {}",
            n_tables + n + n_pod,
            floats.len()
        )));
    }
    let disc = Discretization::new(header.edges)?;
    if disc.n_bins() != n {
        return Err(Error::Format("bin count disagrees with edges".into()));
    }
    let inspection = match header.pod_curve {
        Some(curve) => Some(InspectionModel::from_pod(curve, floats[n_tables + n..].to_vec())?),
        None => None,
    };
    TransitionModel::from_parts(
        floats[..n_tables].to_vec(),
        header.tau_max,
        floats[n_tables..n_tables + n].to_vec(),
        disc,
        inspection,
        header.metadata,
    )
}

pub fn save_model(model: &TransitionModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_model(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TransitionModel> {
    decode_model(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{generate_component, ComponentKind, MIN_SAMPLES};

    fn model() -> TransitionModel {
        generate_component(ComponentKind::WindUpper, 4, MIN_SAMPLES, 9).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let back = decode_model(&encode_model(&m).unwrap()).unwrap();
        assert_eq!(m, back);
        let mud = generate_component(ComponentKind::WindMudline, 2, MIN_SAMPLES, 9).unwrap();
        assert_eq!(mud, decode_model(&encode_model(&mud).unwrap()).unwrap());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.impm");
        let m = model();
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }

    #[test]
    fn truncated_is_checksum_error() {
        let bytes = encode_model(&model()).unwrap();
        for cut in [bytes.len() - 1, bytes.len() / 2, 12] {
            assert!(matches!(decode_model(&bytes[..cut]), Err(Error::Checksum)), "cut {cut}");
        }
    }

    #[test]
    fn flipped_payload_is_checksum_error() {
        let mut bytes = encode_model(&model()).unwrap();
        let mid = bytes.len() - 100;
        bytes[mid] ^= 0x01;
        assert!(matches!(decode_model(&bytes), Err(Error::Checksum)));
    }

    #[test]
    fn wrong_version_is_version_error() {
        let mut bytes = encode_model(&model()).unwrap();
        bytes[4] = 7;
        assert!(matches!(decode_model(&bytes), Err(Error::Version { found: 7, .. })));
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_model(&model()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode_model(&bytes), Err(Error::Format(_))));
    }
}
