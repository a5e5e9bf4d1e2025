//! Binary value-field files.
//!
//! Layout: the 4-byte magic `HJVF`, a little-endian `u32` format version, a
//! little-endian `u64` header length, the UTF-8 JSON header, then one
//! little-endian `f64` per node with the first state dimension varying
//! fastest.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ActuationBounds, ConstraintBox};
use crate::error::{Error, Result};
use crate::grid::{Grid, ValueField};

pub const MAGIC: &[u8; 4] = b"HJVF";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub format_version: u32,
    pub byte_order: String,
    pub layout: String,
    pub grid: Grid,
    pub scenario_hash: String,
    pub tau: f64,
    pub iterations: usize,
    pub converged: bool,
    pub model: String,
    pub bounds: ActuationBounds,
    pub constraint_box: ConstraintBox,
}

impl FieldHeader {
    pub fn new(
        field: &ValueField,
        scenario_hash: String,
        converged: bool,
        model: &str,
        bounds: ActuationBounds,
        constraint_box: ConstraintBox,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            byte_order: "little".into(),
            layout: "first_dimension_fastest".into(),
            grid: field.grid.clone(),
            scenario_hash,
            tau: field.tau,
            iterations: field.iterations,
            converged,
            model: model.into(),
            bounds,
            constraint_box,
        }
    }
}

pub fn encode_field(header: &FieldHeader, field: &ValueField) -> Result<Vec<u8>> {
    if header.grid != field.grid {
        return Err(Error::Format("header grid differs from field grid".into()));
    }
    let json = serde_json::to_vec(header).map_err(|e| Error::Format(e.to_string()))?;
    let mut out = Vec::with_capacity(16 + json.len() + 8 * field.values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&header.format_version.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in &field.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_field(bytes: &[u8]) -> Result<(FieldHeader, ValueField)> {
    let mut r = bytes;
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::Format("truncated preamble".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic; not a value field file".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(|_| Error::Format("truncated preamble".into()))?;
    let version = u32::from_le_bytes(word);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| Error::Format("truncated preamble".into()))?;
    let len = usize::try_from(u64::from_le_bytes(len)).map_err(|_| Error::Format("header too large".into()))?;
    if r.len() < len {
        return Err(Error::Format("truncated header".into()));
    }
    let (json, payload) = r.split_at(len);
    let header: FieldHeader = serde_json::from_slice(json).map_err(|e| Error::Format(format!("header: {e}")))?;
    if header.byte_order != "little" {
        return Err(Error::Format(format!("unsupported byte order '{}'", header.byte_order)));
    }
    header.grid.validate()?;
    let n = header.grid.len();
    if payload.len() != 8 * n {
        return Err(Error::Format(format!("expected {} value bytes, found {}", 8 * n, payload.len())));
    }
    let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let mut field = ValueField::new(header.grid.clone(), values).map_err(|e| Error::Format(e.to_string()))?;
    field.tau = header.tau;
    field.iterations = header.iterations;
    Ok((header, field))
}

pub fn write_field(path: &Path, header: &FieldHeader, field: &ValueField) -> Result<()> {
    let bytes = encode_field(header, field)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<(FieldHeader, ValueField)> {
    decode_field(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header_for(field: &ValueField) -> FieldHeader {
        FieldHeader::new(field, "ab".repeat(32), true, "extreme", ActuationBounds::default(), ConstraintBox::default())
    }

    #[test]
    fn rejects_corruption() {
        let g = Grid::new(vec![3, 3], vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let f = ValueField::from_fn(g, |z| z[0] - z[1]).unwrap();
        let bytes = encode_field(&header_for(&f), &f).unwrap();
        assert!(decode_field(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_field(&bad).is_err());
        let mut bad = bytes;
        bad[4] = 9;
        assert!(decode_field(&bad).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(values in prop::collection::vec(-1e6..1e6f64, 12), tau in 0.0..30.0f64,
                                   iterations in 0usize..10_000) {
            let g = Grid::new(vec![4, 3], vec![-1.0, 0.5], vec![2.0, 7.25]).unwrap();
            let mut f = ValueField::new(g, values).unwrap();
            f.tau = tau;
            f.iterations = iterations;
            let h = header_for(&f);
            let (h2, f2) = decode_field(&encode_field(&h, &f).unwrap()).unwrap();
            prop_assert_eq!(h2, h);
            prop_assert_eq!(f2.tau.to_bits(), f.tau.to_bits());
            prop_assert!(f2.values.iter().zip(&f.values).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(f2, f);
        }
    }
}
