//! PCF1 field snapshots: a 64-byte little-endian header followed by the
//! node values as little-endian `f64`, in node order.
//!
//! | bytes  | content                     |
//! |--------|-----------------------------|
//! | 0..4   | magic `PCF1`                |
//! | 4..8   | backend code (`u32`)        |
//! | 8..12  | complex dimension (`u32`)   |
//! | 12..16 | resolution (`u32`)          |
//! | 16..24 | value count (`u64`)         |
//! | 24..32 | time (`f64`)                |
//! | 32..64 | zero                        |

use std::io::{self, Read, Write};

use crate::geometry::{Backend, ScalarField};

pub const MAGIC: &[u8; 4] = b"PCF1";
pub const HEADER_LEN: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub backend: Backend,
    pub complex_dim: u32,
    pub resolution: u32,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn from_field(field: &ScalarField, t: f64) -> Self {
        let spec = field.grid().spec();
        Self {
            backend: spec.backend,
            complex_dim: spec.complex_dim as u32,
            resolution: spec.resolution as u32,
            t,
            values: field.values().to_vec(),
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        let mut header = [0u8; HEADER_LEN];
        header[0..4].copy_from_slice(MAGIC);
        header[4..8].copy_from_slice(&self.backend.code().to_le_bytes());
        header[8..12].copy_from_slice(&self.complex_dim.to_le_bytes());
        header[12..16].copy_from_slice(&self.resolution.to_le_bytes());
        header[16..24].copy_from_slice(&(self.values.len() as u64).to_le_bytes());
        header[24..32].copy_from_slice(&self.t.to_le_bytes());
        w.write_all(&header)?;
        let mut body = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            body.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&body)
    }

    pub fn read_from(mut r: impl Read) -> io::Result<Self> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)?;
        if &header[0..4] != MAGIC {
            return Err(bad("not a PCF1 snapshot"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
        let backend = Backend::from_code(u32_at(4)).ok_or_else(|| bad("unknown backend code"))?;
        let count = u64::from_le_bytes(header[16..24].try_into().unwrap()) as usize;
        let t = f64::from_le_bytes(header[24..32].try_into().unwrap());
        let mut body = vec![0u8; 8 * count];
        r.read_exact(&mut body)?;
        let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self { backend, complex_dim: u32_at(8), resolution: u32_at(12), t, values })
    }
}
