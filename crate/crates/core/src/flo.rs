//! Middlebury `.flo` flow-field interchange.
//!
//! Layout: the float 202021.25 as a 4-byte little-endian magic (the bytes
//! spell "PIEH"), then width and height as little-endian i32, then
//! row-major interleaved (u1, u2) pairs as little-endian f32.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

pub const FLO_MAGIC: f32 = 202021.25;

/// Largest width/height accepted when reading; guards against garbage
/// headers asking for absurd allocations.
const MAX_DIM: i32 = 1 << 20;

pub fn read_flo(path: impl AsRef<Path>) -> Result<Field> {
    let path = path.as_ref();
    let mut file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.len() < 12 {
        return Err(Error::TruncatedFlo {
            path: path.to_path_buf(),
            expected: 12,
            got: bytes.len(),
        });
    }
    let magic = f32::from_le_bytes(bytes[0..4].try_into().unwrap());
    if magic != FLO_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            got: magic,
        });
    }
    let width = i32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let height = i32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if width <= 0 || height <= 0 || width > MAX_DIM || height > MAX_DIM {
        return Err(Error::FloDimensions {
            path: path.to_path_buf(),
            width,
            height,
        });
    }
    let (w, h) = (width as usize, height as usize);
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(8))
        .ok_or(Error::FloDimensions {
            path: path.to_path_buf(),
            width,
            height,
        })?;
    let payload = &bytes[12..];
    if payload.len() < expected {
        return Err(Error::TruncatedFlo {
            path: path.to_path_buf(),
            expected,
            got: payload.len(),
        });
    }
    let mut fx = Grid::zeros(w, h);
    let mut fy = Grid::zeros(w, h);
    for i in 0..w * h {
        let off = 12 + i * 8;
        let u1 = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let u2 = f32::from_le_bytes(bytes[off + 4..off + 8].try_into().unwrap());
        fx.data_mut()[i] = u1 as f64;
        fy.data_mut()[i] = u2 as f64;
    }
    Ok(Field::new(fx, fy))
}

/// Write a flow field, casting components to f32. Reading it back is
/// bit-exact whenever the stored values are f32-representable (as every
/// field loaded from a `.flo` is).
pub fn write_flo(path: impl AsRef<Path>, flow: &Field) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (flow.width(), flow.height());
    let mut bytes = Vec::with_capacity(12 + w * h * 8);
    bytes.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    bytes.extend_from_slice(&(w as i32).to_le_bytes());
    bytes.extend_from_slice(&(h as i32).to_le_bytes());
    for i in 0..w * h {
        bytes.extend_from_slice(&(flow.x.data()[i] as f32).to_le_bytes());
        bytes.extend_from_slice(&(flow.y.data()[i] as f32).to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(&bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
