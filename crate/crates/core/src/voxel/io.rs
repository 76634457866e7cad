//! Binary grid file format.
//!
//! Little-endian layout, 24-byte header followed by the raw payload:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `VGRD`                            |
//! | 4      | 1    | version, currently 1                    |
//! | 5      | 1    | dtype: 0 = occupancy u8, 1 = scalar f32 |
//! | 6      | 2    | reserved, written as 0                  |
//! | 8      | 12   | dims, three u32 (n_i, n_j, n_k)         |
//! | 20     | 4    | truncation bound f32, NaN when unset    |
//! | 24     | ...  | payload, row-major with k fastest       |
//!
//! Parse failures report the byte offset they occurred at.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::voxel::{GridKind, VoxelGrid};

const MAGIC: &[u8; 4] = b"VGRD";
const VERSION: u8 = 1;
const DTYPE_OCCUPANCY: u8 = 0;
const DTYPE_SCALAR: u8 = 1;
const HEADER_LEN: usize = 24;

/// Serializes a grid into the on-disk byte layout.
pub fn encode_grid(grid: &VoxelGrid) -> Vec<u8> {
    let [ni, nj, nk] = grid.dims();
    let payload_len = match grid.kind() {
        GridKind::Occupancy => grid.values().len(),
        GridKind::Scalar => grid.values().len() * 4,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + payload_len);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(match grid.kind() {
        GridKind::Occupancy => DTYPE_OCCUPANCY,
        GridKind::Scalar => DTYPE_SCALAR,
    });
    out.extend_from_slice(&0u16.to_le_bytes());
    for d in [ni, nj, nk] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&grid.trunc().unwrap_or(f32::NAN).to_le_bytes());
    match grid.kind() {
        GridKind::Occupancy => {
            out.extend(grid.values().iter().map(|&v| v as u8));
        }
        GridKind::Scalar => {
            for &v in grid.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

/// Parses the on-disk byte layout back into a grid.
pub fn decode_grid(bytes: &[u8]) -> Result<VoxelGrid> {
    let take = |offset: usize, len: usize| -> Result<&[u8]> {
        bytes.get(offset..offset + len).ok_or_else(|| {
            Error::format(
                bytes.len() as u64,
                format!("truncated: need {} bytes at offset {offset}", len),
            )
        })
    };

    let magic = take(0, 4)?;
    if magic != MAGIC {
        return Err(Error::format(0, format!("bad magic {magic:?}")));
    }
    let version = take(4, 1)?[0];
    if version != VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let dtype = take(5, 1)?[0];
    if dtype != DTYPE_OCCUPANCY && dtype != DTYPE_SCALAR {
        return Err(Error::format(5, format!("unknown dtype {dtype}")));
    }

    let mut dims = [0usize; 3];
    for (n, d) in dims.iter_mut().enumerate() {
        let off = 8 + 4 * n;
        let raw = u32::from_le_bytes(take(off, 4)?.try_into().unwrap());
        if raw == 0 {
            return Err(Error::format(off as u64, "zero dimension"));
        }
        *d = raw as usize;
    }
    let volume = dims[0]
        .checked_mul(dims[1])
        .and_then(|p| p.checked_mul(dims[2]))
        .ok_or_else(|| Error::format(8, format!("dimensions {dims:?} overflow")))?;

    let trunc_raw = f32::from_le_bytes(take(20, 4)?.try_into().unwrap());
    let trunc = if trunc_raw.is_nan() {
        None
    } else {
        Some(trunc_raw)
    };

    let cell_size = if dtype == DTYPE_OCCUPANCY { 1 } else { 4 };
    let expected = volume * cell_size;
    let payload = take(HEADER_LEN, expected)?;
    if bytes.len() > HEADER_LEN + expected {
        return Err(Error::format(
            (HEADER_LEN + expected) as u64,
            format!("{} trailing bytes", bytes.len() - HEADER_LEN - expected),
        ));
    }

    if dtype == DTYPE_OCCUPANCY {
        if trunc.is_some() {
            return Err(Error::format(20, "occupancy grid with truncation bound"));
        }
        for (n, &b) in payload.iter().enumerate() {
            if b > 1 {
                return Err(Error::format(
                    (HEADER_LEN + n) as u64,
                    format!("occupancy value {b} is not 0 or 1"),
                ));
            }
        }
        Ok(VoxelGrid::new_occupancy(dims, payload).expect("validated occupancy payload"))
    } else {
        if let Some(tau) = trunc {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::format(
                    20,
                    format!("truncation bound {tau} must be finite and positive"),
                ));
            }
        }
        let mut values = Vec::with_capacity(volume);
        for n in 0..volume {
            let off = HEADER_LEN + 4 * n;
            let v = f32::from_le_bytes(payload[4 * n..4 * n + 4].try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::format(off as u64, "non-finite scalar value"));
            }
            if let Some(tau) = trunc {
                if v.abs() > tau {
                    return Err(Error::format(
                        off as u64,
                        format!("scalar value {v} exceeds truncation bound {tau}"),
                    ));
                }
            }
            values.push(v);
        }
        Ok(VoxelGrid::new_scalar(dims, values, trunc).expect("validated scalar payload"))
    }
}

pub fn write_grid(grid: &VoxelGrid, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_grid(grid))?;
    Ok(())
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<VoxelGrid> {
    let bytes = fs::read(path)?;
    decode_grid(&bytes)
}
