//! Seam removal/insertion and the augmentation pipeline.
//!
//! One *carve step* resizes a grid by a single layer along its third
//! (cutting) axis: compute the energy field, pick an anchor, search a
//! seam from each reduced map, keep the cheaper one, try its mirror
//! variants on symmetric axes, and accept it only if its mean energy
//! passes the quality filter — otherwise retry from a fresh anchor, and
//! after too many failures leave the grid untouched.
//!
//! A full *augmentation* visits the axes in X, Y, Z order, rotates the
//! grid so the visited axis becomes the cutting axis, draws a signed
//! layer budget bounded by the scaling factor, runs that many steps, and
//! rotates back. Everything downstream of the seed is deterministic; per
//! axis pass the generator is consumed in a fixed order (layer budget,
//! anchor model build, run-state draw, then per-step anchor draws), so a
//! (grid, config, seed) triple always reproduces the same output.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anchors::{self, AnchorModel, AnchorParams, RunState};
use crate::beam::{beam_search_2d, lift_to_seam_3d, BeamParams, Seam};
use crate::energy::{
    compute_energy, mean_energy, reduce_over_axis, seam_filter_threshold, EnergyKind,
};
use crate::error::{Error, Result};
use crate::symmetry::{best_mirror_variant, symmetric_axes, SYMMETRY_THRESHOLD};
use crate::voxel::{Axis, GridKind, VoxelGrid};

/// Whether a step removes a layer or inserts one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Insert,
    Remove,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Insert => "insert",
            Direction::Remove => "remove",
        })
    }
}

/// Value written into an inserted layer. Occupancy grids always
/// replicate regardless of configuration; averaging two binary cells
/// could mint values that are neither 0 nor 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InsertPolicy {
    Replicate,
    Average,
}

/// Tunables for [`augment`]. The defaults match the library's intended
/// out-of-the-box behavior; everything is also reachable from the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Maximum per-axis scaling factor; each axis changes by at most
    /// ⌊N·s_max⌋ layers.
    pub s_max: f64,
    pub beam: BeamParams,
    pub anchors: AnchorParams,
    /// Mismatch score below which an axis counts as symmetric.
    pub symmetry_threshold: f64,
    pub energy_kind: EnergyKind,
    /// Anchors tried per step before the step becomes a no-op.
    pub retries: usize,
    /// Insertion value policy for scalar grids.
    pub insertion_policy: InsertPolicy,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            s_max: 0.25,
            beam: BeamParams::default(),
            anchors: AnchorParams::default(),
            symmetry_threshold: SYMMETRY_THRESHOLD,
            energy_kind: EnergyKind::default(),
            retries: 5,
            insertion_policy: InsertPolicy::Average,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.s_max) {
            return Err(Error::Precondition(format!(
                "s_max {} must lie in [0, 1)",
                self.s_max
            )));
        }
        if self.retries == 0 {
            return Err(Error::Precondition("retries must be at least 1".into()));
        }
        if self.symmetry_threshold.is_nan() || self.symmetry_threshold < 0.0 {
            return Err(Error::Precondition(format!(
                "symmetry threshold {} must be non-negative",
                self.symmetry_threshold
            )));
        }
        BeamParams::new(self.beam.width, self.beam.tie_tol)?;
        self.anchors.validate()
    }
}

/// Record of one carve step, accepted or not. Carries the seam itself
/// (depths plus the shape it applies to), so continuity and the filter
/// inequality can be audited from logs alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    /// Original-grid axis this pass resizes.
    pub axis: Axis,
    pub direction: Direction,
    /// Anchor cell in the rotated frame (cutting axis third).
    pub anchor: [usize; 3],
    /// Seam surface shape in the rotated frame.
    pub seam_shape: [usize; 2],
    /// Seam depths, row-major over `seam_shape`.
    pub seam_depths: Vec<usize>,
    /// Cutting-axis extent the seam was carved from.
    pub cutting_extent: usize,
    pub seam_total: f64,
    pub seam_mean: f64,
    /// Acceptance threshold derived from the grid's mean energy.
    pub threshold: f64,
    /// Mirror axes applied by the symmetry shortcut (empty = original).
    pub mirror_axes: Vec<Axis>,
    pub accepted: bool,
    /// Anchors tried (1 = first anchor worked; equals the configured
    /// retry budget when the step was rejected).
    pub attempts: usize,
}

/// Deletes the seam layer: output is one layer thinner along the cutting
/// axis; cells below each seam cell stay, cells above shift down.
pub fn remove_seam(grid: &VoxelGrid, seam: &Seam) -> Result<VoxelGrid> {
    let [ni, nj, nk] = grid.dims();
    check_seam_applies(grid, seam)?;
    if nk < 2 {
        return Err(Error::Precondition(
            "cannot remove a layer from a single-layer grid".into(),
        ));
    }
    let mut data = Vec::with_capacity(ni * nj * (nk - 1));
    for i in 0..ni {
        for j in 0..nj {
            let z = seam.at(i, j);
            for k in 0..nk {
                if k != z {
                    data.push(grid.at(i, j, k));
                }
            }
        }
    }
    Ok(VoxelGrid::from_parts(
        [ni, nj, nk - 1],
        grid.kind(),
        grid.trunc(),
        data,
    ))
}

/// Inserts one layer right above the seam: output is one layer thicker;
/// the new cell at `z+1` takes the seam cell's value (Replicate) or the
/// mean of the seam cell and its upper neighbor (Average, scalar grids
/// only), clamped to the truncation bound when one is set.
pub fn insert_seam(grid: &VoxelGrid, seam: &Seam, policy: InsertPolicy) -> Result<VoxelGrid> {
    let [ni, nj, nk] = grid.dims();
    check_seam_applies(grid, seam)?;
    if policy == InsertPolicy::Average && grid.kind() == GridKind::Occupancy {
        return Err(Error::Precondition(
            "averaged insertion is undefined for occupancy grids".into(),
        ));
    }
    let mut data = Vec::with_capacity(ni * nj * (nk + 1));
    for i in 0..ni {
        for j in 0..nj {
            let z = seam.at(i, j);
            let fresh = match policy {
                InsertPolicy::Replicate => grid.at(i, j, z),
                InsertPolicy::Average => {
                    let a = grid.at(i, j, z);
                    let b = grid.at(i, j, (z + 1).min(nk - 1));
                    let mid = (a + b) / 2.0;
                    match grid.trunc() {
                        Some(tau) => mid.clamp(-tau, tau),
                        None => mid,
                    }
                }
            };
            for k in 0..=z {
                data.push(grid.at(i, j, k));
            }
            data.push(fresh);
            for k in (z + 1)..nk {
                data.push(grid.at(i, j, k));
            }
        }
    }
    Ok(VoxelGrid::from_parts(
        [ni, nj, nk + 1],
        grid.kind(),
        grid.trunc(),
        data,
    ))
}

fn check_seam_applies(grid: &VoxelGrid, seam: &Seam) -> Result<()> {
    let [ni, nj, nk] = grid.dims();
    if seam.shape() != (ni, nj) {
        return Err(Error::Precondition(format!(
            "seam shape {:?} does not match grid dims {:?}",
            seam.shape(),
            grid.dims()
        )));
    }
    if let Some(&z) = seam.depths().iter().find(|&&z| z >= nk) {
        return Err(Error::OutOfBounds(format!(
            "seam depth {z} exceeds cutting extent {nk}"
        )));
    }
    Ok(())
}

/// Per-axis-pass search context: the clustered anchor model, the
/// clusters this run samples from, and the axes found symmetric when the
/// pass began.
#[derive(Debug, Clone)]
pub struct PassState {
    pub model: AnchorModel,
    pub run: RunState,
    pub symmetric: Vec<Axis>,
}

impl PassState {
    /// Builds the pass context on the rotated grid. Draws from `rng` in a
    /// fixed order: clustering, scoring, then the run-state clusters.
    pub fn build(grid: &VoxelGrid, config: &AugmentConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let field = compute_energy(grid, config.energy_kind);
        let cells = anchors::candidate_cells(grid, &field, config.anchors.epsilon)?;
        let model = if cells.is_empty() {
            AnchorModel::empty()
        } else {
            let clustered = anchors::cluster_candidates(&cells, &config.anchors, rng)?;
            let map_x = reduce_over_axis(&field, Axis::X)?;
            let map_y = reduce_over_axis(&field, Axis::Y)?;
            anchors::score_clusters(
                clustered,
                (&map_x, &map_y),
                &config.anchors,
                &config.beam,
                rng,
            )?
        };
        let run = RunState::draw(&model, &config.anchors, rng);
        let symmetric = symmetric_axes(grid, config.symmetry_threshold);
        Ok(PassState {
            model,
            run,
            symmetric,
        })
    }

    /// Keeps the model aligned with the current grid: re-extracts
    /// candidates, rebuilds the model (and re-draws the run state) when
    /// more than a quarter of them vanished, otherwise just re-buckets
    /// them onto the existing centroids.
    fn refresh(
        &mut self,
        grid: &VoxelGrid,
        field: &crate::energy::EnergyField,
        maps: (&crate::energy::EnergyMap2D, &crate::energy::EnergyMap2D),
        config: &AugmentConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<()> {
        let cells = anchors::candidate_cells(grid, field, config.anchors.epsilon)?;
        let built_from = self.model.built_from();
        if built_from == 0 {
            return Ok(());
        }
        if (cells.len() as f64) < 0.75 * built_from as f64 {
            self.model = if cells.is_empty() {
                AnchorModel::empty()
            } else {
                let clustered = anchors::cluster_candidates(&cells, &config.anchors, rng)?;
                anchors::score_clusters(clustered, maps, &config.anchors, &config.beam, rng)?
            };
            self.run = RunState::draw(&self.model, &config.anchors, rng);
        } else {
            self.model.reassign(&cells);
        }
        Ok(())
    }
}

/// One seam operation on a rotated grid (cutting axis third). Returns
/// the next grid — unchanged if every anchor's seam failed the filter —
/// and a log of what happened. `axis` only labels the log.
pub fn carve_step(
    grid: &VoxelGrid,
    config: &AugmentConfig,
    rng: &mut ChaCha8Rng,
    direction: Direction,
    state: &mut PassState,
    axis: Axis,
) -> Result<(VoxelGrid, StepLog)> {
    if config.retries == 0 {
        return Err(Error::Precondition("retries must be at least 1".into()));
    }
    let [ni, nj, nk] = grid.dims();
    let field = compute_energy(grid, config.energy_kind);
    let map_x = reduce_over_axis(&field, Axis::X)?;
    let map_y = reduce_over_axis(&field, Axis::Y)?;
    state.refresh(grid, &field, (&map_x, &map_y), config, rng)?;
    let threshold = seam_filter_threshold(mean_energy(&field));

    let mut last: Option<(Seam, [usize; 3], Vec<Axis>)> = None;
    let mut attempts = 0;
    let mut accepted = false;
    while attempts < config.retries {
        attempts += 1;
        let anchor = anchors::sample_anchor(&state.model, &state.run, grid, &field, rng)?;
        let path_x = beam_search_2d(&map_x, (anchor[1], anchor[2]), &config.beam)?;
        let seam_x = lift_to_seam_3d(&field, &path_x, anchor[0], Axis::X, &config.beam)?;
        let path_y = beam_search_2d(&map_y, (anchor[0], anchor[2]), &config.beam)?;
        let seam_y = lift_to_seam_3d(&field, &path_y, anchor[1], Axis::Y, &config.beam)?;
        // Both seams cover the same cell count, so comparing means and
        // comparing totals agree; ties go to the X seam.
        let seam = if seam_y.cost_mean() < seam_x.cost_mean() {
            seam_y
        } else {
            seam_x
        };
        let (seam, mirrors) = best_mirror_variant(&field, &seam, &state.symmetric)?;
        let pass = seam.cost_mean() <= threshold;
        last = Some((seam, anchor, mirrors));
        if pass {
            accepted = true;
            break;
        }
    }
    let (seam, anchor, mirror_axes) = last.expect("at least one attempt always runs");

    let next = if accepted {
        match direction {
            Direction::Remove => remove_seam(grid, &seam)?,
            Direction::Insert => {
                let policy = if grid.kind() == GridKind::Occupancy {
                    InsertPolicy::Replicate
                } else {
                    config.insertion_policy
                };
                insert_seam(grid, &seam, policy)?
            }
        }
    } else {
        grid.clone()
    };
    let log = StepLog {
        axis,
        direction,
        anchor,
        seam_shape: [ni, nj],
        seam_depths: seam.depths().to_vec(),
        cutting_extent: nk,
        seam_total: seam.cost_total(),
        seam_mean: seam.cost_mean(),
        threshold,
        mirror_axes,
        accepted,
        attempts,
    };
    Ok((next, log))
}

/// Augments a grid: for each axis in X, Y, Z order, rotates the axis
/// into cutting position, draws a layer budget uniformly from
/// [−⌊N·s_max⌋, ⌊N·s_max⌋], applies that many insertions (positive) or
/// removals (negative), and rotates back. Returns the new grid plus one
/// log per step. Deterministic in (grid, config, seed).
pub fn augment(
    grid: &VoxelGrid,
    config: &AugmentConfig,
    seed: u64,
) -> Result<(VoxelGrid, Vec<StepLog>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = grid.clone();
    let mut logs = Vec::new();
    for axis in Axis::ALL {
        let mut rotated = current.permute_for_axis(axis);
        let extent = rotated.dims()[2];
        let bound = (extent as f64 * config.s_max).floor() as i64;
        let delta = if bound == 0 {
            0
        } else {
            rng.gen_range(-bound..=bound)
        };
        if delta != 0 {
            let direction = if delta > 0 {
                Direction::Insert
            } else {
                Direction::Remove
            };
            let mut state = PassState::build(&rotated, config, &mut rng)?;
            for _ in 0..delta.unsigned_abs() {
                let (next, log) =
                    carve_step(&rotated, config, &mut rng, direction, &mut state, axis)?;
                rotated = next;
                logs.push(log);
            }
        }
        current = rotated.permute_for_axis(axis);
    }
    Ok((current, logs))
}

/// Runs [`augment`] for seeds `base_seed..base_seed+count`, in parallel,
/// returning the grids in seed order. A failing run is reported with its
/// index (the first failing index in seed order).
pub fn augment_batch(
    grid: &VoxelGrid,
    config: &AugmentConfig,
    count: usize,
    base_seed: u64,
) -> Result<Vec<VoxelGrid>> {
    if count == 0 {
        return Err(Error::Precondition("batch count must be at least 1".into()));
    }
    config.validate()?;
    let results: Vec<Result<VoxelGrid>> = (0..count)
        .into_par_iter()
        .map(|index| {
            augment(grid, config, base_seed.wrapping_add(index as u64))
                .map(|(out, _)| out)
                .map_err(|source| Error::Run {
                    index,
                    source: Box::new(source),
                })
        })
        .collect();
    results.into_iter().collect()
}
