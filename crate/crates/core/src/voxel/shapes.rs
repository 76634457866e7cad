//! Synthetic occupancy fixtures used by tests and the `gen` subcommand.
//!
//! All shapes are centered in a cubic `side^3` grid. Boxes center by
//! integer division, `start = (side - extent) / 2`. Round shapes use the
//! integer center cell `c = (side - 1) / 2`, so odd sides are exactly
//! mirror-symmetric while even sides sit half a cell low.

use crate::error::{Error, Result};
use crate::voxel::VoxelGrid;

/// Shape primitive plus its parameters, all in cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShapeKind {
    /// Solid axis-aligned box with the given extents.
    Box { extents: [usize; 3] },
    /// Solid cylinder: disk of `radius` in the (i, k) plane, `height` along j.
    Cylinder { radius: usize, height: usize },
    /// Solid ball; radius 0 is a single voxel.
    Sphere { radius: usize },
    /// Box with an L profile in the (i, j) plane, extruded along k:
    /// occupied where the local i or j coordinate is below `thickness`.
    LBracket {
        extents: [usize; 3],
        thickness: usize,
    },
    /// Cylinder of `radius`/`height` with a cavity of radius
    /// `radius - thickness` opening upward; the bottom wall is
    /// `thickness` cells.
    Cup {
        radius: usize,
        height: usize,
        thickness: usize,
    },
}

/// A primitive placed in a cubic grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeSpec {
    pub side: usize,
    pub kind: ShapeKind,
}

fn check_extent(extent: usize, side: usize, what: &str) -> Result<()> {
    if extent < 1 || extent > side {
        return Err(Error::Shape(format!(
            "{what} {extent} does not fit in side {side}"
        )));
    }
    Ok(())
}

fn check_radius(radius: usize, side: usize) -> Result<()> {
    let c = (side - 1) / 2;
    if radius > c.min(side - 1 - c) {
        return Err(Error::Shape(format!(
            "radius {radius} does not fit in side {side}"
        )));
    }
    Ok(())
}

#[inline]
fn sq(d: isize) -> isize {
    d * d
}

/// Rasterizes the spec into an occupancy grid.
pub fn make_shape(spec: &ShapeSpec) -> Result<VoxelGrid> {
    let side = spec.side;
    if side == 0 {
        return Err(Error::Shape("grid side must be at least 1".into()));
    }
    let c = ((side - 1) / 2) as isize;
    let occupied: Box<dyn Fn(usize, usize, usize) -> bool> = match &spec.kind {
        ShapeKind::Box { extents } => {
            for (&e, what) in extents.iter().zip(["extent i", "extent j", "extent k"]) {
                check_extent(e, side, what)?;
            }
            let start = extents.map(|e| (side - e) / 2);
            let extents = *extents;
            Box::new(move |i, j, k| {
                [i, j, k]
                    .iter()
                    .zip(start.iter().zip(extents.iter()))
                    .all(|(&p, (&s, &e))| p >= s && p < s + e)
            })
        }
        ShapeKind::Cylinder { radius, height } => {
            check_radius(*radius, side)?;
            check_extent(*height, side, "height")?;
            let r2 = sq(*radius as isize);
            let j0 = (side - height) / 2;
            let j1 = j0 + height;
            Box::new(move |i, j, k| {
                j >= j0 && j < j1 && sq(i as isize - c) + sq(k as isize - c) <= r2
            })
        }
        ShapeKind::Sphere { radius } => {
            check_radius(*radius, side)?;
            let r2 = sq(*radius as isize);
            Box::new(move |i, j, k| {
                sq(i as isize - c) + sq(j as isize - c) + sq(k as isize - c) <= r2
            })
        }
        ShapeKind::LBracket { extents, thickness } => {
            for (&e, what) in extents.iter().zip(["extent i", "extent j", "extent k"]) {
                check_extent(e, side, what)?;
            }
            let t = *thickness;
            if t < 1 || t > extents[0].min(extents[1]) {
                return Err(Error::Shape(format!(
                    "thickness {t} must be in 1..={}",
                    extents[0].min(extents[1])
                )));
            }
            let start = extents.map(|e| (side - e) / 2);
            let extents = *extents;
            Box::new(move |i, j, k| {
                let inside = [i, j, k]
                    .iter()
                    .zip(start.iter().zip(extents.iter()))
                    .all(|(&p, (&s, &e))| p >= s && p < s + e);
                inside && (i - start[0] < t || j - start[1] < t)
            })
        }
        ShapeKind::Cup {
            radius,
            height,
            thickness,
        } => {
            check_radius(*radius, side)?;
            check_extent(*height, side, "height")?;
            let t = *thickness;
            if t < 1 || t > *radius {
                return Err(Error::Shape(format!(
                    "thickness {t} must be in 1..={radius}"
                )));
            }
            let outer2 = sq(*radius as isize);
            let inner2 = sq((*radius - t) as isize);
            let hollow = t < *radius;
            let j0 = (side - height) / 2;
            let j1 = j0 + height;
            Box::new(move |i, j, k| {
                let d2 = sq(i as isize - c) + sq(k as isize - c);
                let in_outer = j >= j0 && j < j1 && d2 <= outer2;
                // The cavity starts above the bottom wall and is open on top.
                let in_cavity = hollow && j >= j0 + t && d2 <= inner2;
                in_outer && !in_cavity
            })
        }
    };

    let mut data = Vec::with_capacity(side * side * side);
    for i in 0..side {
        for j in 0..side {
            for k in 0..side {
                data.push(if occupied(i, j, k) { 1u8 } else { 0u8 });
            }
        }
    }
    VoxelGrid::new_occupancy([side, side, side], &data)
}

/// Builds a truncated signed-distance grid of a centered solid box,
/// negative inside, clamped to `[-tau, tau]`. The zero level set passes
/// half a cell outside the occupied cells, so sign thresholding recovers
/// exactly the box of [`make_shape`].
pub fn make_box_tsdf(side: usize, extents: [usize; 3], tau: f32) -> Result<VoxelGrid> {
    for (&e, what) in extents.iter().zip(["extent i", "extent j", "extent k"]) {
        check_extent(e, side, what)?;
    }
    let start = extents.map(|e| (side - e) / 2);
    let center: Vec<f64> = (0..3)
        .map(|a| start[a] as f64 + (extents[a] as f64 - 1.0) / 2.0)
        .collect();
    let half: Vec<f64> = extents.iter().map(|&e| e as f64 / 2.0).collect();

    let mut data = Vec::with_capacity(side * side * side);
    for i in 0..side {
        for j in 0..side {
            for k in 0..side {
                let q: Vec<f64> = [i, j, k]
                    .iter()
                    .enumerate()
                    .map(|(a, &p)| (p as f64 - center[a]).abs() - half[a])
                    .collect();
                let outside: f64 = q.iter().map(|&v| v.max(0.0).powi(2)).sum::<f64>().sqrt();
                let inside = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max).min(0.0);
                let d = (outside + inside).clamp(-tau as f64, tau as f64);
                data.push(d as f32);
            }
        }
    }
    VoxelGrid::new_scalar([side, side, side], data, Some(tau))
}
