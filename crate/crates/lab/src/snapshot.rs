//! Binary field snapshots.
//!
//! Layout, all little-endian: magic `CSSF`, `u32` version (= 1), `u32 n`,
//! then `f64` length, t, beta, gamma, eps, then `n * n` samples as
//! `(re f64, im f64)` pairs in row-major order.

use std::fs;
use std::path::Path;

use css_core::{make_grid, ComplexField2D};
use num_complex::Complex64;

use crate::error::{LabError, Result};

pub const MAGIC: [u8; 4] = *b"CSSF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 4 + 5 * 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub n: u32,
    pub length: f64,
    pub t: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eps: f64,
    pub values: Vec<Complex64>,
}

impl Snapshot {
    pub fn from_field(field: &ComplexField2D, t: f64, beta: f64, gamma: f64, eps: f64) -> Self {
        Snapshot {
            n: field.grid().n() as u32,
            length: field.grid().length(),
            t,
            beta,
            gamma,
            eps,
            values: field.values().to_vec(),
        }
    }

    pub fn to_field(&self) -> std::result::Result<ComplexField2D, css_core::CoreError> {
        let grid = make_grid(self.n as usize, self.length)?;
        ComplexField2D::new(&grid, self.values.clone())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * self.values.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        for v in [self.length, self.t, self.beta, self.gamma, self.eps] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for z in &self.values {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    /// Parses a snapshot; the error string says what is wrong.
    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < HEADER_LEN {
            return Err(format!("{} bytes is shorter than the header", bytes.len()));
        }
        if bytes[..4] != MAGIC {
            return Err("bad magic".into());
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let version = u32_at(4);
        if version != VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let n = u32_at(8);
        let count = (n as usize)
            .checked_mul(n as usize)
            .ok_or_else(|| format!("grid size {n} overflows"))?;
        let expected = count
            .checked_mul(16)
            .and_then(|p| p.checked_add(HEADER_LEN))
            .ok_or_else(|| format!("grid size {n} overflows"))?;
        if bytes.len() != expected {
            return Err(format!(
                "payload for n = {n} needs {expected} bytes in total, found {}",
                bytes.len()
            ));
        }
        let values = bytes[HEADER_LEN..]
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Ok(Snapshot {
            n,
            length: f64_at(12),
            t: f64_at(20),
            beta: f64_at(28),
            gamma: f64_at(36),
            eps: f64_at(44),
            values,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| LabError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| LabError::io(path, e))?;
        Snapshot::from_bytes(&bytes).map_err(|reason| LabError::Snapshot {
            path: path.to_path_buf(),
            reason,
        })
    }
}
