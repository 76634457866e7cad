//! Mirror-symmetry detection and seam mirroring.
//!
//! A shape that is (approximately) mirror-symmetric about an axis offers a
//! shortcut: once a seam is found, its mirror image is also a plausible
//! seam, and sometimes a cheaper one. Detection compares each cell with
//! its mirror partner (index `N-1-i` along the tested axis) and scores the
//! disagreement separately inside and outside the shape, so a thin shape
//! in a mostly-empty grid cannot hide behind the agreeing background.

use crate::beam::Seam;
use crate::energy::{seam_cost, EnergyField};
use crate::error::{Error, Result};
use crate::voxel::{Axis, VoxelGrid};

/// Mismatch score below which an axis counts as symmetric (strict).
pub const SYMMETRY_THRESHOLD: f64 = 0.05;

/// Mirror-mismatch score for one axis: the harmonic mean of the mismatch
/// rate among occupied cells and the rate among unoccupied cells. 0 means
/// perfectly symmetric, 1 maximally asymmetric. An empty class (no
/// occupied or no unoccupied cells) contributes rate 0, so uniform grids
/// score 0. Scalar grids are read through their sign.
pub fn mismatch_rate(grid: &VoxelGrid, axis: Axis) -> f64 {
    let [ni, nj, nk] = grid.dims();
    let mut occupied = 0u64;
    let mut unoccupied = 0u64;
    let mut miss_occupied = 0u64;
    let mut miss_unoccupied = 0u64;
    for i in 0..ni {
        for j in 0..nj {
            for k in 0..nk {
                let here = grid.is_occupied(i, j, k);
                let there = match axis {
                    Axis::X => grid.is_occupied(ni - 1 - i, j, k),
                    Axis::Y => grid.is_occupied(i, nj - 1 - j, k),
                    Axis::Z => grid.is_occupied(i, j, nk - 1 - k),
                };
                let miss = here != there;
                if here {
                    occupied += 1;
                    miss_occupied += miss as u64;
                } else {
                    unoccupied += 1;
                    miss_unoccupied += miss as u64;
                }
            }
        }
    }
    let rate_occ = if occupied == 0 {
        0.0
    } else {
        miss_occupied as f64 / occupied as f64
    };
    let rate_un = if unoccupied == 0 {
        0.0
    } else {
        miss_unoccupied as f64 / unoccupied as f64
    };
    if rate_occ + rate_un == 0.0 {
        0.0
    } else {
        2.0 * rate_occ * rate_un / (rate_occ + rate_un)
    }
}

/// Axes whose mismatch score falls strictly below `threshold`, in X, Y, Z
/// order.
pub fn symmetric_axes(grid: &VoxelGrid, threshold: f64) -> Vec<Axis> {
    Axis::ALL
        .into_iter()
        .filter(|&axis| mismatch_rate(grid, axis) < threshold)
        .collect()
}

/// Reflects a seam about the center plane of `axis` for a grid of `dims`.
/// Mirroring across the cutting axis flips the depth values themselves;
/// across the other axes it rearranges the surface. Cost figures are
/// carried over verbatim — they are exact only when the energy field is
/// itself symmetric, so callers comparing variants should re-score (as
/// [`best_mirror_variant`] does).
pub fn mirror_seam(seam: &Seam, dims: [usize; 3], axis: Axis) -> Result<Seam> {
    let (ni, nj) = seam.shape();
    if ni != dims[0] || nj != dims[1] {
        return Err(Error::Precondition(format!(
            "seam shape ({ni}, {nj}) does not match grid dims {dims:?}"
        )));
    }
    let nk = dims[2];
    if let Some(&z) = seam.depths().iter().find(|&&z| z >= nk) {
        return Err(Error::OutOfBounds(format!(
            "seam depth {z} exceeds cutting extent {nk}"
        )));
    }
    let mut z = vec![0usize; ni * nj];
    for i in 0..ni {
        for j in 0..nj {
            z[i * nj + j] = match axis {
                Axis::X => seam.at(ni - 1 - i, j),
                Axis::Y => seam.at(i, nj - 1 - j),
                Axis::Z => nk - 1 - seam.at(i, j),
            };
        }
    }
    Ok(Seam::new((ni, nj), z)?.with_costs(seam.cost_total(), seam.cost_mean()))
}

/// Every subset of `axes` (deduplicated), ordered by size and then by the
/// axes themselves, so the empty subset — the original seam — comes first.
fn axis_subsets(axes: &[Axis]) -> Vec<Vec<Axis>> {
    let mut unique: Vec<Axis> = Vec::new();
    for &axis in axes {
        if !unique.contains(&axis) {
            unique.push(axis);
        }
    }
    unique.sort();
    let mut subsets: Vec<Vec<Axis>> = (0..1u32 << unique.len())
        .map(|mask| {
            unique
                .iter()
                .enumerate()
                .filter(|&(bit, _)| mask >> bit & 1 == 1)
                .map(|(_, &axis)| axis)
                .collect()
        })
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets
}

/// Tries every mirror combination over the given symmetry axes and keeps
/// the cheapest under the field, re-scored from scratch. Ties keep the
/// earlier variant in subset order, so the unmirrored seam wins exact
/// ties. Returns the winning seam and the axes that produced it.
pub fn best_mirror_variant(
    field: &EnergyField,
    seam: &Seam,
    axes: &[Axis],
) -> Result<(Seam, Vec<Axis>)> {
    let dims = field.dims();
    let mut best: Option<(Seam, Vec<Axis>, f64)> = None;
    for subset in axis_subsets(axes) {
        let mut variant = seam.clone();
        for &axis in &subset {
            variant = mirror_seam(&variant, dims, axis)?;
        }
        let (total, mean) = seam_cost(field, &variant)?;
        let variant = variant.with_costs(total, mean);
        match &best {
            Some((_, _, best_total)) if total >= *best_total => {}
            _ => best = Some((variant, subset, total)),
        }
    }
    let (seam, subset, _) = best.expect("subset list always contains the empty set");
    Ok((seam, subset))
}
