//! Flat binary and JSON layouts.
//!
//! Binary: `b"CUBE"`, format version (`u32` LE), `n` (`u32` LE), then `2^n`
//! little-endian IEEE-754 doubles. JSON: `{"n": .., "values": [..]}` for
//! functions and `{"n": .., "coeffs": [..]}` for spectra.

use super::{check_table, CubeFunction, Spectrum};
use crate::error::{Error, Result};

pub const FORMAT_MAGIC: &[u8; 4] = b"CUBE";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 12;

fn encode(n: usize, data: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * data.len());
    out.extend_from_slice(FORMAT_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode(bytes: &[u8]) -> Result<(usize, Vec<f64>)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != FORMAT_MAGIC {
        return Err(Error::Format("bad magic, expected \"CUBE\"".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if n == 0 || n > super::MAX_DIM {
        return Err(Error::Format(format!("dimension {n} out of range")));
    }
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8usize << n {
        return Err(Error::Format(format!(
            "payload is {} bytes, expected {}",
            body.len(),
            8usize << n
        )));
    }
    let data: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    check_table(n, &data)?;
    Ok((n, data))
}

impl CubeFunction {
    pub fn to_bytes(&self) -> Vec<u8> {
        encode(self.n, &self.values)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (n, values) = decode(bytes)?;
        CubeFunction::new(n, values)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite values always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))
    }
}

impl Spectrum {
    pub fn to_bytes(&self) -> Vec<u8> {
        encode(self.n, &self.coeffs)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (n, coeffs) = decode(bytes)?;
        Spectrum::new(n, coeffs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite values always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))
    }
}
