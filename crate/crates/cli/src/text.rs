//! Plain-text grid codec.
//!
//! Header line `occ N_i N_j N_k` or `sdf N_i N_j N_k [tau]`, followed by
//! whitespace-separated cell values in row-major order with k fastest.
//! Occupancy values are the integers 0/1; scalar values print with
//! Rust's shortest round-trip float formatting, so a text round trip
//! reproduces the binary payload bit for bit. The `offset` carried by a
//! parse error counts whitespace-separated tokens, not bytes.

use std::fmt::Write as _;

use carve3d::voxel::{GridKind, VoxelGrid};
use carve3d::{Error, Result};

pub fn encode_text(grid: &VoxelGrid) -> String {
    let [ni, nj, nk] = grid.dims();
    let mut out = String::new();
    match grid.kind() {
        GridKind::Occupancy => {
            let _ = writeln!(out, "occ {ni} {nj} {nk}");
        }
        GridKind::Scalar => match grid.trunc() {
            Some(tau) => {
                let _ = writeln!(out, "sdf {ni} {nj} {nk} {tau}");
            }
            None => {
                let _ = writeln!(out, "sdf {ni} {nj} {nk}");
            }
        },
    }
    for i in 0..ni {
        for j in 0..nj {
            for k in 0..nk {
                if k > 0 {
                    out.push(' ');
                }
                let v = grid.at(i, j, k);
                match grid.kind() {
                    GridKind::Occupancy => {
                        let _ = write!(out, "{}", v as u8);
                    }
                    GridKind::Scalar => {
                        let _ = write!(out, "{v}");
                    }
                }
            }
            out.push('\n');
        }
    }
    out
}

pub fn decode_text(input: &str) -> Result<VoxelGrid> {
    let mut tokens = input.split_whitespace().enumerate();
    let mut next = |what: &str| -> Result<(u64, &str)> {
        tokens
            .next()
            .map(|(pos, tok)| (pos as u64, tok))
            .ok_or_else(|| Error::format(0, format!("missing {what}")))
    };

    let (_, kind_tok) = next("kind tag")?;
    let kind = match kind_tok {
        "occ" => GridKind::Occupancy,
        "sdf" => GridKind::Scalar,
        other => {
            return Err(Error::format(
                0,
                format!("unknown kind {other:?}, expected \"occ\" or \"sdf\""),
            ))
        }
    };
    let mut dims = [0usize; 3];
    for (d, name) in dims.iter_mut().zip(["n_i", "n_j", "n_k"]) {
        let (pos, tok) = next(name)?;
        *d = tok
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                Error::format(
                    pos,
                    format!("{name} must be a positive integer, got {tok:?}"),
                )
            })?;
    }
    let volume = dims[0]
        .checked_mul(dims[1])
        .and_then(|p| p.checked_mul(dims[2]))
        .ok_or_else(|| Error::format(1, format!("dimensions {dims:?} overflow")))?;

    let rest: Vec<(u64, &str)> = tokens.map(|(pos, tok)| (pos as u64, tok)).collect();
    let (tau, cells) = match kind {
        GridKind::Occupancy => (None, rest.as_slice()),
        GridKind::Scalar if rest.len() == volume + 1 => {
            let (pos, tok) = rest[0];
            let tau = tok
                .parse::<f32>()
                .ok()
                .ok_or_else(|| Error::format(pos, format!("bad truncation bound {tok:?}")))?;
            (Some(tau), &rest[1..])
        }
        GridKind::Scalar => (None, rest.as_slice()),
    };
    if cells.len() != volume {
        return Err(Error::format(
            4,
            format!("expected {volume} cell values, found {}", cells.len()),
        ));
    }

    match kind {
        GridKind::Occupancy => {
            let mut bits = Vec::with_capacity(volume);
            for &(pos, tok) in cells {
                match tok {
                    "0" => bits.push(0u8),
                    "1" => bits.push(1u8),
                    other => {
                        return Err(Error::format(
                            pos,
                            format!("occupancy value must be 0 or 1, got {other:?}"),
                        ))
                    }
                }
            }
            VoxelGrid::new_occupancy(dims, &bits)
        }
        GridKind::Scalar => {
            let mut values = Vec::with_capacity(volume);
            for &(pos, tok) in cells {
                let v = tok
                    .parse::<f32>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::format(pos, format!("bad scalar value {tok:?}")))?;
                values.push(v);
            }
            VoxelGrid::new_scalar(dims, values, tau)
        }
    }
}
