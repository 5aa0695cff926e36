//! Binary checkpoint.
//!
//! Layout (little-endian): 8-byte magic `GIGVAD01`; `C`, `d`, `k`, `p` as u64;
//! φ1 weight, φ1 bias, φ2 weight, φ2 bias as f64 in row-major order; a u64
//! checksum equal to the wrapping sum of every preceding byte.

use std::path::Path;

use crate::error::{Error, Result};
use crate::gig::{AffineHead, HeadParams};
use crate::io::write_atomic;
use crate::numerics::Tensor;

pub const MAGIC: &[u8; 8] = b"GIGVAD01";
pub const HEADER_LEN: usize = 8 + 4 * 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub k: usize,
    pub p: usize,
    pub params: HeadParams,
}

/// Number of f64 values after the header for `C` classes over `d` channels.
pub fn payload_floats(classes: usize, channels: usize) -> usize {
    2 * (1 + classes) * channels + 2 * (1 + classes)
}

pub fn encoded_len(classes: usize, channels: usize) -> usize {
    HEADER_LEN + 8 * payload_floats(classes, channels) + 8
}

fn checksum(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0u64, |acc, &b| acc.wrapping_add(u64::from(b)))
}

impl Checkpoint {
    pub fn classes(&self) -> usize {
        self.params.classes()
    }

    pub fn channels(&self) -> usize {
        self.params.channels()
    }

    pub fn encode(&self) -> Vec<u8> {
        let (c, d) = (self.classes(), self.channels());
        let mut out = Vec::with_capacity(encoded_len(c, d));
        out.extend_from_slice(MAGIC);
        for v in [c, d, self.k, self.p] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        for t in self.params.tensors() {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let sum = checksum(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let corrupt = |what: &str| Error::CorruptCheckpoint(what.to_string());
        if bytes.len() < HEADER_LEN + 8 {
            return Err(corrupt("size mismatch: shorter than the header"));
        }
        if &bytes[..8] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let word = |i: usize| {
            let off = 8 + 8 * i;
            u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap())
        };
        let fields = [word(0), word(1), word(2), word(3)];
        let [c, d, k, p] = fields.map(|v| usize::try_from(v).unwrap_or(usize::MAX));
        if c == 0 || d == 0 || c == usize::MAX || d == usize::MAX {
            return Err(corrupt("size mismatch: implausible class or channel count"));
        }
        let expected = (1 + c)
            .checked_mul(d)
            .and_then(|n| n.checked_mul(16))
            .and_then(|n| n.checked_add(16 * (1 + c) + HEADER_LEN + 8));
        if expected != Some(bytes.len()) {
            return Err(corrupt(&format!(
                "size mismatch: {} bytes for C={c}, d={d}",
                bytes.len()
            )));
        }
        let body = bytes.len() - 8;
        let stored = u64::from_le_bytes(bytes[body..].try_into().unwrap());
        if checksum(&bytes[..body]) != stored {
            return Err(corrupt("checksum failure"));
        }
        if k == 0 || p == 0 {
            return Err(corrupt("k and p must be positive"));
        }

        let mut floats = bytes[HEADER_LEN..body]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()));
        let mut take = |shape: Vec<usize>| -> Result<Tensor> {
            let n = shape.iter().product();
            let data: Vec<f64> = floats.by_ref().take(n).collect();
            Tensor::new(shape, data).map_err(|_| corrupt("non-finite parameter"))
        };
        let phi1 = AffineHead {
            weight: take(vec![1 + c, d])?,
            bias: take(vec![1 + c])?,
        };
        let phi2 = AffineHead {
            weight: take(vec![1 + c, d])?,
            bias: take(vec![1 + c])?,
        };
        Ok(Checkpoint {
            k,
            p,
            params: HeadParams::new(phi1, phi2)?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.encode())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::decode(&bytes)
    }
}
