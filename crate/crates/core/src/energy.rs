//! Gradient-magnitude energy: how much a cell's value changes toward the
//! next layer. Seams are routed through low-energy cells so that removing
//! or duplicating them disturbs the shape least.
//!
//! The stencil is a forward difference along each axis with the final
//! layer set to zero, so energies have the same dims as the grid. For the
//! search along the cutting (third) axis the field is also flattened into
//! 2D maps by summing over one of the first two axes.

use serde::{Deserialize, Serialize};

use crate::beam::Seam;
use crate::error::{Error, Result};
use crate::voxel::{Axis, VoxelGrid};

/// Which derivatives contribute to a cell's energy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyKind {
    /// Gradient along the cutting (third) axis only.
    #[default]
    Axial,
    /// Sum of forward-difference magnitudes along all three axes.
    Full,
}

/// Per-cell energy, same dims and layout as the grid it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyField {
    dims: [usize; 3],
    values: Vec<f64>,
}

impl EnergyField {
    pub fn new(dims: [usize; 3], values: Vec<f64>) -> Result<Self> {
        if dims[0] * dims[1] * dims[2] != values.len() {
            return Err(Error::Precondition(format!(
                "field dimensions {dims:?} do not match {} values",
                values.len()
            )));
        }
        Ok(EnergyField { dims, values })
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        debug_assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2]);
        self.values[(i * self.dims[1] + j) * self.dims[2] + k]
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// 2D energy map with axes (main, cutting); `w` spans the cutting axis.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMap2D {
    h: usize,
    w: usize,
    values: Vec<f64>,
}

impl EnergyMap2D {
    pub fn new(h: usize, w: usize, values: Vec<f64>) -> Result<Self> {
        if h * w != values.len() {
            return Err(Error::Precondition(format!(
                "map size {h}x{w} does not match {} values",
                values.len()
            )));
        }
        Ok(EnergyMap2D { h, w, values })
    }

    #[inline]
    pub fn h(&self) -> usize {
        self.h
    }

    #[inline]
    pub fn w(&self) -> usize {
        self.w
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.h && y < self.w);
        self.values[x * self.w + y]
    }

    /// Cost of a full-height path: sum of the map values it visits.
    pub fn path_cost(&self, path: &[usize]) -> f64 {
        debug_assert_eq!(path.len(), self.h);
        path.iter().enumerate().map(|(x, &y)| self.at(x, y)).sum()
    }
}

/// Per-cell forward-difference energy of a grid.
pub fn compute_energy(grid: &VoxelGrid, kind: EnergyKind) -> EnergyField {
    let [ni, nj, nk] = grid.dims();
    let mut values = vec![0.0f64; ni * nj * nk];
    let diff = |a: f32, b: f32| (b as f64 - a as f64).abs();

    let mut pos = 0;
    for i in 0..ni {
        for j in 0..nj {
            for k in 0..nk {
                let g = grid.at(i, j, k);
                let mut e = if k + 1 < nk {
                    diff(g, grid.at(i, j, k + 1))
                } else {
                    0.0
                };
                if kind == EnergyKind::Full {
                    if i + 1 < ni {
                        e += diff(g, grid.at(i + 1, j, k));
                    }
                    if j + 1 < nj {
                        e += diff(g, grid.at(i, j + 1, k));
                    }
                }
                values[pos] = e;
                pos += 1;
            }
        }
    }
    EnergyField {
        dims: [ni, nj, nk],
        values,
    }
}

/// Sums the field over the given first-or-second axis, leaving a 2D map
/// whose rows span the remaining main axis and whose columns span the
/// cutting axis. Reducing over the cutting axis itself is an error.
pub fn reduce_over_axis(field: &EnergyField, axis: Axis) -> Result<EnergyMap2D> {
    let [ni, nj, nk] = field.dims;
    match axis {
        Axis::X => {
            let mut values = vec![0.0f64; nj * nk];
            for i in 0..ni {
                for j in 0..nj {
                    for k in 0..nk {
                        values[j * nk + k] += field.at(i, j, k);
                    }
                }
            }
            EnergyMap2D::new(nj, nk, values)
        }
        Axis::Y => {
            let mut values = vec![0.0f64; ni * nk];
            for i in 0..ni {
                for j in 0..nj {
                    for k in 0..nk {
                        values[i * nk + k] += field.at(i, j, k);
                    }
                }
            }
            EnergyMap2D::new(ni, nk, values)
        }
        Axis::Z => Err(Error::Precondition(
            "cannot reduce over the cutting axis".into(),
        )),
    }
}

/// Total and mean energy of the cells a seam passes through.
pub fn seam_cost(field: &EnergyField, seam: &Seam) -> Result<(f64, f64)> {
    let [ni, nj, nk] = field.dims;
    if seam.shape() != (ni, nj) {
        return Err(Error::Precondition(format!(
            "seam shape {:?} does not match field dims {:?}",
            seam.shape(),
            field.dims
        )));
    }
    let mut total = 0.0f64;
    for i in 0..ni {
        for j in 0..nj {
            let z = seam.at(i, j);
            if z >= nk {
                return Err(Error::OutOfBounds(format!(
                    "seam depth {z} at ({i}, {j}) exceeds cutting extent {nk}"
                )));
            }
            total += field.at(i, j, z);
        }
    }
    Ok((total, total / (ni * nj) as f64))
}

/// Mean energy over all cells.
pub fn mean_energy(field: &EnergyField) -> f64 {
    field.values.iter().sum::<f64>() / field.values.len() as f64
}

/// Activation level above which the seam filter scales with mean energy.
pub const FILTER_ACTIVATION: f64 = 4e-4;
/// Fraction of the mean energy a seam may cost once the filter is active.
pub const FILTER_SCALE: f64 = 0.25;
/// Absolute ceiling used for very low-energy grids.
pub const FILTER_FLOOR: f64 = 1e-4;

/// Maximum acceptable mean seam cost for a grid with the given mean energy.
pub fn seam_filter_threshold(e_avg: f64) -> f64 {
    if e_avg > FILTER_ACTIVATION {
        e_avg * FILTER_SCALE
    } else {
        FILTER_FLOOR
    }
}
