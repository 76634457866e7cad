//! Dense voxel grids: the container every other module operates on.
//!
//! Layout is row-major with the first index slowest and the third fastest,
//! i.e. `index(i, j, k) = (i * n_j + j) * n_k + k`. All indexing is
//! zero-based. Carving always happens along the third (fastest) index; to
//! carve a different axis the grid is permuted so that axis becomes the
//! third index, then permuted back. The two permutations are pairwise index
//! swaps and therefore involutions.

pub mod io;
pub mod obj;
pub mod shapes;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What the cell values of a grid mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// Binary occupancy; values are exactly 0.0 or 1.0.
    Occupancy,
    /// Truncated signed distance in voxel units, negative inside the shape.
    Scalar,
}

/// A grid axis, naming the first, second, or third index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// All axes in fixed X, Y, Z order.
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Position of this axis in the `dims` array.
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        f.write_str(s)
    }
}

/// Dense 3D voxel grid holding occupancy bits or truncated signed distances.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    kind: GridKind,
    trunc: Option<f32>,
    data: Vec<f32>,
}

impl VoxelGrid {
    /// Builds an occupancy grid from bytes that must all be 0 or 1.
    pub fn new_occupancy(dims: [usize; 3], cells: &[u8]) -> Result<Self> {
        Self::check_dims(dims, cells.len())?;
        let mut data = Vec::with_capacity(cells.len());
        for (pos, &b) in cells.iter().enumerate() {
            if b > 1 {
                return Err(Error::Precondition(format!(
                    "occupancy value {b} at cell {pos} is not 0 or 1"
                )));
            }
            data.push(b as f32);
        }
        Ok(VoxelGrid {
            dims,
            kind: GridKind::Occupancy,
            trunc: None,
            data,
        })
    }

    /// Builds a scalar grid. With `trunc = Some(tau)` every value must
    /// already lie within `[-tau, tau]`; values must be finite either way.
    pub fn new_scalar(dims: [usize; 3], values: Vec<f32>, trunc: Option<f32>) -> Result<Self> {
        Self::check_dims(dims, values.len())?;
        if let Some(tau) = trunc {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::Precondition(format!(
                    "truncation bound {tau} must be finite and positive"
                )));
            }
        }
        for (pos, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Precondition(format!(
                    "scalar value at cell {pos} is not finite"
                )));
            }
            if let Some(tau) = trunc {
                if v.abs() > tau {
                    return Err(Error::Precondition(format!(
                        "scalar value {v} at cell {pos} exceeds truncation bound {tau}"
                    )));
                }
            }
        }
        Ok(VoxelGrid {
            dims,
            kind: GridKind::Scalar,
            trunc,
            data: values,
        })
    }

    /// All-empty occupancy grid.
    pub fn empty_occupancy(dims: [usize; 3]) -> Result<Self> {
        let len = Self::check_volume(dims)?;
        Ok(VoxelGrid {
            dims,
            kind: GridKind::Occupancy,
            trunc: None,
            data: vec![0.0; len],
        })
    }

    /// Internal constructor for data produced by operations that preserve
    /// the grid invariants (carving, permutation, resampling).
    pub(crate) fn from_parts(
        dims: [usize; 3],
        kind: GridKind,
        trunc: Option<f32>,
        data: Vec<f32>,
    ) -> Self {
        debug_assert_eq!(dims[0] * dims[1] * dims[2], data.len());
        VoxelGrid {
            dims,
            kind,
            trunc,
            data,
        }
    }

    fn check_volume(dims: [usize; 3]) -> Result<usize> {
        if dims.contains(&0) {
            return Err(Error::Precondition(format!(
                "grid dimensions {dims:?} must all be at least 1"
            )));
        }
        dims[0]
            .checked_mul(dims[1])
            .and_then(|p| p.checked_mul(dims[2]))
            .ok_or_else(|| Error::Precondition(format!("grid dimensions {dims:?} overflow")))
    }

    fn check_dims(dims: [usize; 3], len: usize) -> Result<()> {
        let volume = Self::check_volume(dims)?;
        if volume != len {
            return Err(Error::Precondition(format!(
                "grid dimensions {dims:?} require {volume} cells, got {len}"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Truncation bound for scalar grids, if one was declared.
    #[inline]
    pub fn trunc(&self) -> Option<f32> {
        self.trunc
    }

    /// Linear index of cell `(i, j, k)`; the third index is fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2]);
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f32 {
        self.data[self.index(i, j, k)]
    }

    #[inline]
    pub fn values(&self) -> &[f32] {
        &self.data
    }

    /// Occupancy test: nonzero for occupancy grids, `g <= 0` for scalar
    /// grids (negative-inside convention; the zero level set is occupied).
    #[inline]
    pub fn is_occupied(&self, i: usize, j: usize, k: usize) -> bool {
        match self.kind {
            GridKind::Occupancy => self.at(i, j, k) != 0.0,
            GridKind::Scalar => self.at(i, j, k) <= 0.0,
        }
    }

    pub fn occupied_count(&self) -> usize {
        match self.kind {
            GridKind::Occupancy => self.data.iter().filter(|&&v| v != 0.0).count(),
            GridKind::Scalar => self.data.iter().filter(|&&v| v <= 0.0).count(),
        }
    }

    /// Swaps the given axis with the third index so it becomes the cutting
    /// axis. `X` swaps indices (0, 2), `Y` swaps (1, 2), `Z` is the
    /// identity; each is its own inverse.
    pub fn permute_for_axis(&self, axis: Axis) -> VoxelGrid {
        let [ni, nj, nk] = self.dims;
        match axis {
            Axis::Z => self.clone(),
            Axis::X => {
                // out(a, b, c) = in(c, b, a), out dims (n_k, n_j, n_i)
                let mut data = Vec::with_capacity(self.data.len());
                for a in 0..nk {
                    for b in 0..nj {
                        for c in 0..ni {
                            data.push(self.data[(c * nj + b) * nk + a]);
                        }
                    }
                }
                VoxelGrid::from_parts([nk, nj, ni], self.kind, self.trunc, data)
            }
            Axis::Y => {
                // out(a, b, c) = in(a, c, b), out dims (n_i, n_k, n_j)
                let mut data = Vec::with_capacity(self.data.len());
                for a in 0..ni {
                    for b in 0..nk {
                        for c in 0..nj {
                            data.push(self.data[(a * nj + c) * nk + b]);
                        }
                    }
                }
                VoxelGrid::from_parts([ni, nk, nj], self.kind, self.trunc, data)
            }
        }
    }
}

/// Thresholds a scalar grid into occupancy: cells with `g <= 0` become 1.
/// Invariant under positive rescaling of the values.
pub fn occupancy_from_scalar(grid: &VoxelGrid) -> Result<VoxelGrid> {
    if grid.kind != GridKind::Scalar {
        return Err(Error::Precondition(
            "occupancy_from_scalar requires a scalar grid".into(),
        ));
    }
    let data = grid
        .data
        .iter()
        .map(|&v| if v <= 0.0 { 1.0 } else { 0.0 })
        .collect();
    Ok(VoxelGrid::from_parts(
        grid.dims,
        GridKind::Occupancy,
        None,
        data,
    ))
}
