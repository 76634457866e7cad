//! Content-blind augmenters used for comparison: independent per-axis
//! rescaling and piecewise-linear coordinate warping.
//!
//! Both resample with nearest-neighbor lookups so occupancy grids stay
//! binary; scalar grids get the same treatment so the two families are
//! comparable. Warping keeps the grid extents fixed — the sampled
//! factors are renormalized so the warp maps [−1, 1] onto [−1, 1] —
//! which keeps "warp" and "scale" orthogonal knobs.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::voxel::VoxelGrid;

/// Uniform sampling range for per-axis scale factors.
pub const SCALE_MIN: f64 = 0.75;
pub const SCALE_MAX: f64 = 1.25;

/// Standard deviation of the normal underlying the log-normal warp
/// factors, and the number of even sub-intervals of [−1, 1] they apply
/// to.
pub const WARP_SIGMA: f64 = 0.25;
pub const WARP_INTERVALS: usize = 6;

/// Per-axis scale factors drawn uniformly from
/// [[`SCALE_MIN`], [`SCALE_MAX`]], in x, y, z order.
pub fn sample_scale_factors(rng: &mut impl Rng) -> [f64; 3] {
    let fx = rng.gen_range(SCALE_MIN..=SCALE_MAX);
    let fy = rng.gen_range(SCALE_MIN..=SCALE_MAX);
    let fz = rng.gen_range(SCALE_MIN..=SCALE_MAX);
    [fx, fy, fz]
}

/// Rescales each axis independently: output extents are `round(N · f)`
/// (at least 1) and each output cell copies its nearest source cell.
pub fn axis_scale(grid: &VoxelGrid, factors: [f64; 3]) -> Result<VoxelGrid> {
    for f in factors {
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::Precondition(format!(
                "scale factor {f} must be finite and positive"
            )));
        }
    }
    let dims_in = grid.dims();
    let mut dims_out = [0usize; 3];
    for d in 0..3 {
        dims_out[d] = ((dims_in[d] as f64 * factors[d]).round() as usize).max(1);
    }
    let src = |o: usize, n_in: usize, n_out: usize| -> usize {
        let x = ((o as f64 + 0.5) * n_in as f64 / n_out as f64).floor() as usize;
        x.min(n_in - 1)
    };
    let mut data = Vec::with_capacity(dims_out[0] * dims_out[1] * dims_out[2]);
    for i in 0..dims_out[0] {
        let si = src(i, dims_in[0], dims_out[0]);
        for j in 0..dims_out[1] {
            let sj = src(j, dims_in[1], dims_out[1]);
            for k in 0..dims_out[2] {
                let sk = src(k, dims_in[2], dims_out[2]);
                data.push(grid.at(si, sj, sk));
            }
        }
    }
    Ok(VoxelGrid::from_parts(
        dims_out,
        grid.kind(),
        grid.trunc(),
        data,
    ))
}

/// Per-axis piecewise-linear warp of the normalized coordinate [−1, 1]:
/// the interval splits into even sub-intervals, each stretched by a
/// positive factor, and the result is renormalized so −1 and 1 stay
/// fixed. Positive factors make the warp strictly increasing. The x and
/// z factor lists are palindromes (mirrored sub-intervals share a
/// factor), which makes those warps odd — they preserve mirror symmetry
/// about the grid center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WarpSpec {
    factors: [Vec<f64>; 3],
}

impl WarpSpec {
    /// Builds a spec from explicit per-axis factor lists (x, y, z
    /// order). All three lists must share one even, nonzero length and
    /// contain only positive finite values.
    pub fn new(factors: [Vec<f64>; 3]) -> Result<Self> {
        let len = factors[0].len();
        if len == 0 || !len.is_multiple_of(2) {
            return Err(Error::Precondition(format!(
                "warp needs an even, nonzero number of intervals, got {len}"
            )));
        }
        for axis in &factors {
            if axis.len() != len {
                return Err(Error::Precondition(format!(
                    "all axes must use {len} intervals, got {}",
                    axis.len()
                )));
            }
            if let Some(&f) = axis.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
                return Err(Error::Precondition(format!(
                    "warp factor {f} must be finite and positive"
                )));
            }
        }
        Ok(WarpSpec { factors })
    }

    /// The all-ones spec: warps nothing.
    pub fn identity(intervals: usize) -> Result<Self> {
        let ones = vec![1.0; intervals];
        WarpSpec::new([ones.clone(), ones.clone(), ones])
    }

    /// Factor lists in x, y, z order.
    pub fn factors(&self) -> &[Vec<f64>; 3] {
        &self.factors
    }

    pub fn intervals(&self) -> usize {
        self.factors[0].len()
    }
}

/// Draws a [`WarpSpec`] with log-normal factors: `exp(N(0, sigma))` per
/// free sub-interval. The x and z axes get `intervals / 2` free draws
/// each (mirrored into palindromes); y gets `intervals` free draws.
/// Draw order is x, then y, then z.
pub fn sample_warp(rng: &mut impl Rng, sigma: f64, intervals: usize) -> Result<WarpSpec> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Precondition(format!(
            "warp sigma {sigma} must be finite and positive"
        )));
    }
    if intervals == 0 || !intervals.is_multiple_of(2) {
        return Err(Error::Precondition(format!(
            "warp needs an even, nonzero number of intervals, got {intervals}"
        )));
    }
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::Precondition(format!("bad warp distribution: {e}")))?;
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| normal.sample(rng).exp()).collect() };
    let mirrored = |free: Vec<f64>| -> Vec<f64> {
        let mut full = free.clone();
        full.extend(free.into_iter().rev());
        full
    };
    let x = mirrored(draw(intervals / 2));
    let y = draw(intervals);
    let z = mirrored(draw(intervals / 2));
    WarpSpec::new([x, y, z])
}

/// Output index → source index along one axis of length `n`: push the
/// output cell's normalized center through the inverse warp, then take
/// the nearest source cell.
fn index_map(factors: &[f64], n: usize) -> Vec<usize> {
    let m = factors.len();
    let total: f64 = factors.iter().sum();
    // Warped images of the sub-interval boundaries, pinned to ±1.
    let mut bounds = Vec::with_capacity(m + 1);
    bounds.push(-1.0);
    let mut acc = 0.0;
    for &f in factors {
        acc += f;
        bounds.push(-1.0 + 2.0 * acc / total);
    }
    bounds[m] = 1.0;
    (0..n)
        .map(|o| {
            let t_out = 2.0 * (o as f64 + 0.5) / n as f64 - 1.0;
            let d = match bounds[..m]
                .binary_search_by(|b| b.partial_cmp(&t_out).expect("finite bounds"))
            {
                Ok(d) => d,
                Err(ins) => ins - 1,
            };
            let u = (t_out - bounds[d]) / (bounds[d + 1] - bounds[d]);
            let t_in = -1.0 + (d as f64 + u) * 2.0 / m as f64;
            let x = (t_in + 1.0) / 2.0 * n as f64 - 0.5;
            (x.round().max(0.0) as usize).min(n - 1)
        })
        .collect()
}

/// Warps the grid in place of its own extents: every output cell reads
/// the input at the inverse-warped position of its center, nearest
/// neighbor. Dimensions never change.
pub fn piecewise_warp(grid: &VoxelGrid, spec: &WarpSpec) -> VoxelGrid {
    let [ni, nj, nk] = grid.dims();
    let maps = [
        index_map(&spec.factors[0], ni),
        index_map(&spec.factors[1], nj),
        index_map(&spec.factors[2], nk),
    ];
    let mut data = Vec::with_capacity(ni * nj * nk);
    for i in 0..ni {
        for j in 0..nj {
            for k in 0..nk {
                data.push(grid.at(maps[0][i], maps[1][j], maps[2][k]));
            }
        }
    }
    VoxelGrid::from_parts(grid.dims(), grid.kind(), grid.trunc(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::mismatch_rate;
    use crate::voxel::shapes::{make_shape, ShapeKind, ShapeSpec};
    use crate::voxel::Axis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn boxed(side: usize, extent: usize) -> VoxelGrid {
        make_shape(&ShapeSpec {
            side,
            kind: ShapeKind::Box {
                extents: [extent; 3],
            },
        })
        .unwrap()
    }

    fn noisy_scalar(dims: [usize; 3], seed: u64) -> VoxelGrid {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let data: Vec<f32> = (0..dims[0] * dims[1] * dims[2])
            .map(|_| (next() % 17) as f32 - 8.0)
            .collect();
        VoxelGrid::new_scalar(dims, data, None).unwrap()
    }

    #[test]
    fn unit_factors_scale_to_the_same_grid() {
        let grid = noisy_scalar([5, 6, 7], 3);
        let out = axis_scale(&grid, [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(out.dims(), grid.dims());
        assert_eq!(out.values(), grid.values());
    }

    #[test]
    fn halving_every_axis_matches_a_directly_built_half_box() {
        let big = boxed(32, 16);
        let out = axis_scale(&big, [0.5, 0.5, 0.5]).unwrap();
        let expected = boxed(16, 8);
        assert_eq!(out.dims(), expected.dims());
        assert_eq!(out.values(), expected.values());
    }

    #[test]
    fn halving_one_axis_halves_the_box_extent_on_that_axis() {
        let big = boxed(32, 16);
        let out = axis_scale(&big, [1.0, 1.0, 0.5]).unwrap();
        assert_eq!(out.dims(), [32, 32, 16]);
        for i in 0..32 {
            for j in 0..32 {
                for k in 0..16 {
                    let expect =
                        (8..24).contains(&i) && (8..24).contains(&j) && (4..12).contains(&k);
                    assert_eq!(out.is_occupied(i, j, k), expect, "at ({i},{j},{k})");
                }
            }
        }
    }

    #[test]
    fn scaled_extents_round_and_never_reach_zero() {
        let grid = noisy_scalar([4, 8, 10], 1);
        let out = axis_scale(&grid, [0.1, 1.25, 0.75]).unwrap();
        assert_eq!(out.dims(), [1, 10, 8]);
    }

    #[test]
    fn scaling_rejects_nonpositive_or_nonfinite_factors() {
        let grid = noisy_scalar([3, 3, 3], 2);
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(
                matches!(
                    axis_scale(&grid, [bad, 1.0, 1.0]),
                    Err(Error::Precondition(_))
                ),
                "factor {bad} accepted"
            );
        }
    }

    #[test]
    fn composing_scales_multiplies_extents_within_rounding() {
        let grid = noisy_scalar([20, 20, 20], 4);
        let once = axis_scale(&grid, [0.8, 1.1, 1.25]).unwrap();
        let twice = axis_scale(&once, [1.25, 0.9, 0.8]).unwrap();
        for (d, (&out, target)) in twice
            .dims()
            .iter()
            .zip([20.0 * 0.8 * 1.25, 20.0 * 1.1 * 0.9, 20.0 * 1.25 * 0.8])
            .enumerate()
        {
            assert!(
                (out as f64 - target).abs() <= 1.0,
                "axis {d}: {out} vs {target}"
            );
        }
    }

    #[test]
    fn sampled_scale_factors_stay_in_range_and_reproduce() {
        for seed in 0..500u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let factors = sample_scale_factors(&mut rng);
            for f in factors {
                assert!((SCALE_MIN..=SCALE_MAX).contains(&f), "seed {seed}: {f}");
            }
            let mut rng2 = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(factors, sample_scale_factors(&mut rng2));
        }
    }

    #[test]
    fn identity_spec_warps_nothing() {
        let spec = WarpSpec::identity(WARP_INTERVALS).unwrap();
        let grid = noisy_scalar([7, 9, 11], 5);
        let out = piecewise_warp(&grid, &spec);
        assert_eq!(out.values(), grid.values());
    }

    #[test]
    fn tiny_sigma_degenerates_to_the_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = sample_warp(&mut rng, 1e-9, WARP_INTERVALS).unwrap();
        let grid = noisy_scalar([13, 8, 21], 6);
        let out = piecewise_warp(&grid, &spec);
        assert_eq!(out.values(), grid.values());
    }

    #[test]
    fn sampled_specs_are_reproducible_positive_and_mirrored() {
        for seed in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = sample_warp(&mut rng, WARP_SIGMA, WARP_INTERVALS).unwrap();
            let mut rng2 = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(
                spec,
                sample_warp(&mut rng2, WARP_SIGMA, WARP_INTERVALS).unwrap()
            );
            for axis in spec.factors() {
                assert_eq!(axis.len(), WARP_INTERVALS);
                assert!(axis.iter().all(|&f| f > 0.0 && f.is_finite()));
            }
            for axis in [0, 2] {
                let f = &spec.factors()[axis];
                for d in 0..WARP_INTERVALS / 2 {
                    assert_eq!(f[d], f[WARP_INTERVALS - 1 - d], "seed {seed} axis {axis}");
                }
            }
        }
    }

    #[test]
    fn warping_preserves_dimensions_and_the_value_set() {
        let grid = noisy_scalar([10, 12, 14], 7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = sample_warp(&mut rng, 0.5, WARP_INTERVALS).unwrap();
        let out = piecewise_warp(&grid, &spec);
        assert_eq!(out.dims(), grid.dims());
        for &v in out.values() {
            assert!(grid.values().contains(&v), "minted value {v}");
        }
    }

    #[test]
    fn index_maps_are_monotone_and_stay_in_bounds() {
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = sample_warp(&mut rng, 0.6, WARP_INTERVALS).unwrap();
            for axis in spec.factors() {
                for n in [1usize, 2, 5, 17, 64] {
                    let map = index_map(axis, n);
                    assert_eq!(map.len(), n);
                    assert!(map.windows(2).all(|w| w[0] <= w[1]), "seed {seed}");
                    assert!(map.iter().all(|&s| s < n));
                }
            }
        }
    }

    #[test]
    fn mirrored_factor_lists_produce_odd_warps() {
        // A palindromic factor list must warp -t to -warp(t); probe via
        // the index map on an even-length axis, whose cells pair up
        // around the center.
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = sample_warp(&mut rng, 0.6, WARP_INTERVALS).unwrap();
            for axis in [0, 2] {
                let map = index_map(&spec.factors()[axis], 40);
                for o in 0..40 {
                    assert_eq!(map[39 - o], 39 - map[o], "seed {seed} axis {axis} cell {o}");
                }
            }
        }
    }

    #[test]
    fn symmetric_shapes_stay_symmetric_under_mirrored_warps() {
        let grid = boxed(20, 12);
        assert_eq!(mismatch_rate(&grid, Axis::X), 0.0);
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = sample_warp(&mut rng, 0.4, WARP_INTERVALS).unwrap();
            let out = piecewise_warp(&grid, &spec);
            assert_eq!(mismatch_rate(&out, Axis::X), 0.0, "seed {seed}");
            assert_eq!(mismatch_rate(&out, Axis::Z), 0.0, "seed {seed}");
            assert!(out.values().iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }

    #[test]
    fn spec_construction_rejects_bad_shapes_and_factors() {
        assert!(WarpSpec::new([vec![1.0; 5], vec![1.0; 5], vec![1.0; 5]]).is_err());
        assert!(WarpSpec::new([vec![], vec![], vec![]]).is_err());
        assert!(WarpSpec::new([vec![1.0; 6], vec![1.0; 4], vec![1.0; 6]]).is_err());
        let with_zero = vec![1.0, 1.0, 1.0, 1.0, 1.0, 0.0];
        assert!(WarpSpec::new([with_zero, vec![1.0; 6], vec![1.0; 6]]).is_err());
        assert!(sample_warp(&mut ChaCha8Rng::seed_from_u64(0), 0.0, 6).is_err());
        assert!(sample_warp(&mut ChaCha8Rng::seed_from_u64(0), 0.25, 5).is_err());
        assert!(sample_warp(&mut ChaCha8Rng::seed_from_u64(0), 0.25, 0).is_err());
    }
}
