//! Anchor selection: where seam searches start.
//!
//! Good anchors sit inside the shape in low-gradient regions. Candidate
//! cells (occupied, energy below a threshold) are clustered with
//! mini-batch k-means; each cluster is scored by running a few trial 2D
//! searches from randomly drawn members, and the best-scoring third of
//! the clusters is retained. Each augmentation run then draws a handful
//! of retained clusters up front and samples its per-step anchors from
//! them, which spreads consecutive seams across the shape instead of
//! letting them pile onto one spot.
//!
//! All randomized steps consume a caller-provided seeded generator in a
//! fixed documented order, so every model and every anchor sequence is a
//! pure function of (inputs, seed).

use rand::Rng;

use serde::{Deserialize, Serialize};

use crate::beam::{beam_search_2d, BeamParams};
use crate::energy::{EnergyField, EnergyMap2D};
use crate::error::{Error, Result};
use crate::voxel::VoxelGrid;

/// Knobs for candidate extraction, clustering, scoring, and sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorParams {
    /// Energy threshold for candidate cells (strict).
    pub epsilon: f64,
    /// Cluster count requested from k-means.
    pub k: usize,
    /// Mini-batch size per refinement round.
    pub batch: usize,
    /// Refinement rounds.
    pub iters: usize,
    /// Trial searches per cluster when scoring.
    pub sims: usize,
    /// Clusters drawn per augmentation run.
    pub clusters_per_run: usize,
}

impl Default for AnchorParams {
    fn default() -> Self {
        AnchorParams {
            epsilon: 1e-3,
            k: 12,
            batch: 256,
            iters: 30,
            sims: 3,
            clusters_per_run: 2,
        }
    }
}

impl AnchorParams {
    /// Number of clusters retained after scoring.
    pub fn retain_count(&self) -> usize {
        self.k.div_ceil(3)
    }

    /// Pipeline-level validation. Individual operations accept smaller
    /// cluster counts (useful in isolation and in tests); a full
    /// augmentation requires enough clusters for retention to mean
    /// something.
    pub fn validate(&self) -> Result<()> {
        if self.k < 3 {
            return Err(Error::Precondition(format!(
                "cluster count {} must be at least 3",
                self.k
            )));
        }
        if self.batch == 0 || self.iters == 0 || self.sims == 0 || self.clusters_per_run == 0 {
            return Err(Error::Precondition(
                "batch, iters, sims, and clusters_per_run must all be at least 1".into(),
            ));
        }
        if self.clusters_per_run > self.retain_count() {
            return Err(Error::Precondition(format!(
                "clusters_per_run {} exceeds the {} retained clusters",
                self.clusters_per_run,
                self.retain_count()
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Precondition(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// One cluster of candidate cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub centroid: [f64; 3],
    pub members: Vec<[usize; 3]>,
}

/// Clustered candidate cells with per-cluster scores and the retained
/// (best-scoring) cluster indices.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorModel {
    clusters: Vec<Cluster>,
    scores: Vec<f64>,
    retained: Vec<usize>,
    built_from: usize,
}

impl AnchorModel {
    /// Model with no candidates at all; sampling falls back to the
    /// minimum-energy occupied cell.
    pub fn empty() -> Self {
        AnchorModel {
            clusters: Vec::new(),
            scores: Vec::new(),
            retained: Vec::new(),
            built_from: 0,
        }
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    /// Number of candidate cells the model was built from; staleness
    /// checks compare fresh extractions against this.
    pub fn built_from(&self) -> usize {
        self.built_from
    }

    /// Re-buckets a fresh candidate list onto the existing centroids
    /// (nearest centroid, ties to the lower cluster index). Clusters may
    /// end up empty; sampling skips them. Scores and retention are kept —
    /// the point is to avoid a full rebuild after every carve step.
    pub fn reassign(&mut self, cells: &[[usize; 3]]) {
        for cluster in &mut self.clusters {
            cluster.members.clear();
        }
        if self.clusters.is_empty() {
            return;
        }
        for &cell in cells {
            let nearest = nearest_centroid(&self.clusters, cell);
            self.clusters[nearest].members.push(cell);
        }
    }
}

/// The clusters one augmentation run samples anchors from.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    clusters: Vec<usize>,
}

impl RunState {
    /// Draws up to `clusters_per_run` distinct retained clusters.
    pub fn draw(model: &AnchorModel, params: &AnchorParams, rng: &mut impl Rng) -> Self {
        let amount = params.clusters_per_run.min(model.retained.len());
        let clusters = if amount == 0 {
            Vec::new()
        } else {
            rand::seq::index::sample(rng, model.retained.len(), amount)
                .into_iter()
                .map(|pos| model.retained[pos])
                .collect()
        };
        RunState { clusters }
    }

    pub fn clusters(&self) -> &[usize] {
        &self.clusters
    }
}

/// Cells that are occupied and lie strictly below the energy threshold,
/// in row-major order. Scalar grids are read through their sign.
pub fn candidate_cells(
    grid: &VoxelGrid,
    field: &EnergyField,
    epsilon: f64,
) -> Result<Vec<[usize; 3]>> {
    if grid.dims() != field.dims() {
        return Err(Error::Precondition(format!(
            "grid dims {:?} do not match field dims {:?}",
            grid.dims(),
            field.dims()
        )));
    }
    let [ni, nj, nk] = grid.dims();
    let mut cells = Vec::new();
    for i in 0..ni {
        for j in 0..nj {
            for k in 0..nk {
                if grid.is_occupied(i, j, k) && field.at(i, j, k) < epsilon {
                    cells.push([i, j, k]);
                }
            }
        }
    }
    Ok(cells)
}

#[inline]
fn dist2(centroid: [f64; 3], cell: [usize; 3]) -> f64 {
    let mut acc = 0.0;
    for d in 0..3 {
        let delta = centroid[d] - cell[d] as f64;
        acc += delta * delta;
    }
    acc
}

fn nearest_centroid(clusters: &[Cluster], cell: [usize; 3]) -> usize {
    let mut best = 0;
    let mut best_d = dist2(clusters[0].centroid, cell);
    for (idx, cluster) in clusters.iter().enumerate().skip(1) {
        let d = dist2(cluster.centroid, cell);
        if d < best_d {
            best = idx;
            best_d = d;
        }
    }
    best
}

fn nearest_of(centroids: &[[f64; 3]], cell: [usize; 3]) -> usize {
    let mut best = 0;
    let mut best_d = dist2(centroids[0], cell);
    for (idx, &c) in centroids.iter().enumerate().skip(1) {
        let d = dist2(c, cell);
        if d < best_d {
            best = idx;
            best_d = d;
        }
    }
    best
}

/// Seeding in the k-means++ style: first centroid uniform, each further
/// centroid drawn with probability proportional to squared distance from
/// the nearest one chosen so far. Stops early once every cell coincides
/// with a centroid.
fn seed_centroids(cells: &[[usize; 3]], k: usize, rng: &mut impl Rng) -> Vec<[f64; 3]> {
    let as_coords = |c: [usize; 3]| [c[0] as f64, c[1] as f64, c[2] as f64];
    let mut centroids = vec![as_coords(cells[rng.gen_range(0..cells.len())])];
    let mut d2: Vec<f64> = cells.iter().map(|&c| dist2(centroids[0], c)).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let r = rng.gen::<f64>() * total;
        let mut chosen = None;
        let mut last_positive = None;
        let mut acc = 0.0;
        for (idx, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            last_positive = Some(idx);
            acc += w;
            if r < acc {
                chosen = Some(idx);
                break;
            }
        }
        let pick = chosen.or(last_positive).expect("total weight is positive");
        let centroid = as_coords(cells[pick]);
        for (idx, &cell) in cells.iter().enumerate() {
            d2[idx] = d2[idx].min(dist2(centroid, cell));
        }
        centroids.push(centroid);
    }
    centroids
}

/// Sum of squared distances from each cell to its nearest centroid.
fn objective(centroids: &[[f64; 3]], cells: &[[usize; 3]]) -> f64 {
    cells
        .iter()
        .map(|&c| dist2(centroids[nearest_of(centroids, c)], c))
        .sum()
}

/// Clusters candidate cells with mini-batch k-means: k-means++ seeding,
/// `iters` rounds of mini-batch updates with per-centroid learning rate
/// 1/count, then a full assignment pass. If refinement somehow worsened
/// the seeding (possible with tiny batches), the seeded centroids are
/// kept instead, so the result never regresses. Empty clusters are
/// dropped.
pub fn cluster_candidates(
    cells: &[[usize; 3]],
    params: &AnchorParams,
    rng: &mut impl Rng,
) -> Result<AnchorModel> {
    if cells.is_empty() {
        return Err(Error::Precondition("no candidate cells to cluster".into()));
    }
    if params.k == 0 || params.batch == 0 || params.iters == 0 {
        return Err(Error::Precondition(
            "k, batch, and iters must all be at least 1".into(),
        ));
    }

    let seeded = seed_centroids(cells, params.k, rng);
    let mut centroids = seeded.clone();
    let mut counts = vec![0u64; centroids.len()];
    for _ in 0..params.iters {
        if params.batch >= cells.len() {
            for &cell in cells.iter() {
                update_centroid(&mut centroids, &mut counts, cell);
            }
        } else {
            for idx in rand::seq::index::sample(rng, cells.len(), params.batch) {
                update_centroid(&mut centroids, &mut counts, cells[idx]);
            }
        }
    }
    if objective(&centroids, cells) > objective(&seeded, cells) {
        centroids = seeded;
    }

    let mut members: Vec<Vec<[usize; 3]>> = vec![Vec::new(); centroids.len()];
    for &cell in cells {
        members[nearest_of(&centroids, cell)].push(cell);
    }
    let clusters: Vec<Cluster> = centroids
        .into_iter()
        .zip(members)
        .filter(|(_, members)| !members.is_empty())
        .map(|(centroid, members)| Cluster { centroid, members })
        .collect();
    Ok(AnchorModel {
        scores: vec![0.0; clusters.len()],
        retained: Vec::new(),
        built_from: cells.len(),
        clusters,
    })
}

#[inline]
fn update_centroid(centroids: &mut [[f64; 3]], counts: &mut [u64], cell: [usize; 3]) {
    let idx = nearest_of(centroids, cell);
    counts[idx] += 1;
    let lr = 1.0 / counts[idx] as f64;
    for d in 0..3 {
        centroids[idx][d] += lr * (cell[d] as f64 - centroids[idx][d]);
    }
}

/// Scores each cluster by the mean cost of trial 2D searches from
/// randomly drawn members — each member is projected onto both reduced
/// maps ((i,j,k) → (j,k) and (i,k)) and the cheaper path counts — then
/// retains the best-scoring third (ascending score, ties by cluster
/// index).
pub fn score_clusters(
    mut model: AnchorModel,
    maps: (&EnergyMap2D, &EnergyMap2D),
    params: &AnchorParams,
    beam: &BeamParams,
    rng: &mut impl Rng,
) -> Result<AnchorModel> {
    if model.clusters.is_empty() {
        return Err(Error::Precondition("cannot score an empty model".into()));
    }
    if params.sims == 0 {
        return Err(Error::Precondition("sims must be at least 1".into()));
    }
    let (map_x, map_y) = maps;
    for (ci, cluster) in model.clusters.iter().enumerate() {
        let mut total = 0.0;
        for _ in 0..params.sims {
            let cell = cluster.members[rng.gen_range(0..cluster.members.len())];
            let px = beam_search_2d(map_x, (cell[1], cell[2]), beam)?;
            let py = beam_search_2d(map_y, (cell[0], cell[2]), beam)?;
            let cost_x = map_x.path_cost(px.values());
            let cost_y = map_y.path_cost(py.values());
            total += cost_x.min(cost_y);
        }
        model.scores[ci] = total / params.sims as f64;
    }
    let mut order: Vec<usize> = (0..model.clusters.len()).collect();
    order.sort_by(|&a, &b| model.scores[a].total_cmp(&model.scores[b]));
    order.truncate(params.retain_count().min(model.clusters.len()));
    model.retained = order;
    Ok(model)
}

/// Minimum-energy occupied cell in row-major order (first on ties); the
/// anchor of last resort when no candidate cell exists.
pub fn fallback_anchor(grid: &VoxelGrid, field: &EnergyField) -> Result<[usize; 3]> {
    if grid.dims() != field.dims() {
        return Err(Error::Precondition(format!(
            "grid dims {:?} do not match field dims {:?}",
            grid.dims(),
            field.dims()
        )));
    }
    let [ni, nj, nk] = grid.dims();
    let mut best: Option<([usize; 3], f64)> = None;
    for i in 0..ni {
        for j in 0..nj {
            for k in 0..nk {
                if !grid.is_occupied(i, j, k) {
                    continue;
                }
                let e = field.at(i, j, k);
                match best {
                    Some((_, b)) if e >= b => {}
                    _ => best = Some(([i, j, k], e)),
                }
            }
        }
    }
    best.map(|(cell, _)| cell).ok_or(Error::NoAnchor)
}

/// Draws an anchor: uniformly one of the run's clusters (skipping any
/// that have gone empty), then uniformly one of its members. Falls back
/// to the minimum-energy occupied cell when nothing is drawable.
pub fn sample_anchor(
    model: &AnchorModel,
    run_state: &RunState,
    grid: &VoxelGrid,
    field: &EnergyField,
    rng: &mut impl Rng,
) -> Result<[usize; 3]> {
    let live: Vec<usize> = run_state
        .clusters
        .iter()
        .copied()
        .filter(|&c| c < model.clusters.len() && !model.clusters[c].members.is_empty())
        .collect();
    if live.is_empty() {
        return fallback_anchor(grid, field);
    }
    let cluster = live[rng.gen_range(0..live.len())];
    let members = &model.clusters[cluster].members;
    Ok(members[rng.gen_range(0..members.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{compute_energy, reduce_over_axis, EnergyKind};
    use crate::voxel::shapes::{make_shape, ShapeKind, ShapeSpec};
    use crate::voxel::Axis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn solid_box_8() -> VoxelGrid {
        make_shape(&ShapeSpec {
            side: 8,
            kind: ShapeKind::Box { extents: [4, 4, 4] },
        })
        .unwrap()
    }

    #[test]
    fn candidates_are_the_low_energy_occupied_cells() {
        let grid = solid_box_8();
        let field = compute_energy(&grid, EnergyKind::Axial);
        let cells = candidate_cells(&grid, &field, 1e-3).unwrap();
        // Naive re-derivation: occupied and forward difference below
        // threshold, straight from the definitions.
        let mut expected = Vec::new();
        for i in 0..8 {
            for j in 0..8 {
                for k in 0..8 {
                    let occ = grid.at(i, j, k);
                    let above = if k + 1 < 8 { grid.at(i, j, k + 1) } else { 0.0 };
                    let e = (above as f64 - occ as f64).abs();
                    if occ != 0.0 && e < 1e-3 {
                        expected.push([i, j, k]);
                    }
                }
            }
        }
        assert_eq!(cells, expected);
        // The box spans 2..6 on each axis; its top layer (k = 5) has
        // energy 1, so three of the four k-layers qualify.
        assert_eq!(cells.len(), 4 * 4 * 3);
        assert!(cells.iter().all(|c| (2..5).contains(&c[2])));
    }

    #[test]
    fn empty_grid_has_no_candidates() {
        let grid = VoxelGrid::empty_occupancy([4, 4, 4]).unwrap();
        let field = compute_energy(&grid, EnergyKind::Axial);
        assert!(candidate_cells(&grid, &field, 1e-3).unwrap().is_empty());
    }

    #[test]
    fn a_lone_voxel_is_its_own_energy_spike() {
        let mut cells = vec![0u8; 27];
        cells[13] = 1; // (1, 1, 1) of a 3x3x3 grid
        let grid = VoxelGrid::new_occupancy([3, 3, 3], &cells).unwrap();
        let field = compute_energy(&grid, EnergyKind::Axial);
        assert_eq!(field.at(1, 1, 1), 1.0);
        assert!(candidate_cells(&grid, &field, 1e-3).unwrap().is_empty());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let grid = VoxelGrid::empty_occupancy([4, 4, 4]).unwrap();
        let field = EnergyField::new([3, 3, 3], vec![0.0; 27]).unwrap();
        assert!(matches!(
            candidate_cells(&grid, &field, 1e-3),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn single_cluster_centroid_is_the_mean_position() {
        let grid = solid_box_8();
        let field = compute_energy(&grid, EnergyKind::Axial);
        let cells = candidate_cells(&grid, &field, 1e-3).unwrap();
        let params = AnchorParams {
            k: 1,
            ..AnchorParams::default()
        };
        let model = cluster_candidates(&cells, &params, &mut rng(7)).unwrap();
        assert_eq!(model.clusters().len(), 1);
        assert_eq!(model.clusters()[0].members.len(), cells.len());
        let mut mean = [0.0f64; 3];
        for c in &cells {
            for d in 0..3 {
                mean[d] += c[d] as f64;
            }
        }
        for (d, m) in mean.iter_mut().enumerate() {
            *m /= cells.len() as f64;
            assert!(
                (model.clusters()[0].centroid[d] - *m).abs() < 1e-9,
                "axis {d}: {} vs {}",
                model.clusters()[0].centroid[d],
                *m
            );
        }
    }

    fn two_blobs() -> Vec<[usize; 3]> {
        let mut cells = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    cells.push([i, j, k]);
                    cells.push([i + 20, j + 20, k + 20]);
                }
            }
        }
        cells.sort();
        cells
    }

    /// Full-batch Lloyd iterations from given starting centroids, run to
    /// a fixed point. The reference the mini-batch version is checked
    /// against.
    fn lloyd(cells: &[[usize; 3]], mut centroids: Vec<[f64; 3]>) -> Vec<[f64; 3]> {
        loop {
            let mut sums = vec![[0.0f64; 3]; centroids.len()];
            let mut counts = vec![0usize; centroids.len()];
            for &cell in cells {
                let idx = nearest_of(&centroids, cell);
                counts[idx] += 1;
                for d in 0..3 {
                    sums[idx][d] += cell[d] as f64;
                }
            }
            let mut next = centroids.clone();
            for idx in 0..centroids.len() {
                if counts[idx] > 0 {
                    for d in 0..3 {
                        next[idx][d] = sums[idx][d] / counts[idx] as f64;
                    }
                }
            }
            if next == centroids {
                return centroids;
            }
            centroids = next;
        }
    }

    #[test]
    fn two_far_blobs_become_two_clusters() {
        let cells = two_blobs();
        let params = AnchorParams {
            k: 2,
            batch: 64,
            ..AnchorParams::default()
        };
        let model = cluster_candidates(&cells, &params, &mut rng(3)).unwrap();
        assert_eq!(model.clusters().len(), 2);
        for cluster in model.clusters() {
            let low = cluster.members.iter().all(|c| c[0] < 10);
            let high = cluster.members.iter().all(|c| c[0] >= 10);
            assert!(
                low || high,
                "cluster mixes the blobs: {:?}",
                cluster.members
            );
            assert_eq!(cluster.members.len(), 8);
        }
        // Against the full-batch reference started from the same seeding.
        let seeded = seed_centroids(&cells, 2, &mut rng(3));
        let reference = lloyd(&cells, seeded);
        for cluster in model.clusters() {
            let closest = reference
                .iter()
                .map(|r| {
                    (0..3)
                        .map(|d| (r[d] - cluster.centroid[d]).powi(2))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(
                closest < 0.25,
                "centroid {:?} far from reference {reference:?}",
                cluster.centroid
            );
        }
    }

    #[test]
    fn clustering_is_deterministic_for_a_fixed_seed() {
        let cells = two_blobs();
        let params = AnchorParams {
            k: 3,
            ..AnchorParams::default()
        };
        let a = cluster_candidates(&cells, &params, &mut rng(11)).unwrap();
        let b = cluster_candidates(&cells, &params, &mut rng(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn refinement_never_regresses_behind_the_seeding() {
        for seed in 0..20u64 {
            let mut cells = Vec::new();
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            for _ in 0..60 {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                cells.push([
                    (state % 17) as usize,
                    ((state >> 8) % 13) as usize,
                    ((state >> 16) % 11) as usize,
                ]);
            }
            let params = AnchorParams {
                k: 4,
                batch: 16,
                iters: 5,
                ..AnchorParams::default()
            };
            let seeded = seed_centroids(&cells, params.k, &mut rng(seed));
            let model = cluster_candidates(&cells, &params, &mut rng(seed)).unwrap();
            let final_centroids: Vec<[f64; 3]> =
                model.clusters().iter().map(|c| c.centroid).collect();
            assert!(
                objective(&final_centroids, &cells) <= objective(&seeded, &cells) + 1e-9,
                "seed {seed} regressed"
            );
        }
    }

    #[test]
    fn clustering_rejects_an_empty_candidate_list() {
        assert!(matches!(
            cluster_candidates(&[], &AnchorParams::default(), &mut rng(0)),
            Err(Error::Precondition(_))
        ));
    }

    fn scored_model_on_zero_maps(k: usize, seed: u64) -> AnchorModel {
        let cells = two_blobs();
        let params = AnchorParams {
            k,
            ..AnchorParams::default()
        };
        let model = cluster_candidates(&cells, &params, &mut rng(seed)).unwrap();
        let map_x = EnergyMap2D::new(24, 24, vec![0.0; 24 * 24]).unwrap();
        let map_y = EnergyMap2D::new(24, 24, vec![0.0; 24 * 24]).unwrap();
        score_clusters(
            model,
            (&map_x, &map_y),
            &params,
            &BeamParams::default(),
            &mut rng(seed + 1),
        )
        .unwrap()
    }

    #[test]
    fn zero_maps_score_zero_and_retain_the_first_clusters() {
        let model = scored_model_on_zero_maps(6, 5);
        assert!(model.scores().iter().all(|&s| s == 0.0));
        let expect: Vec<usize> = (0..2.min(model.clusters().len())).collect();
        assert_eq!(model.retained(), expect.as_slice());
    }

    #[test]
    fn low_energy_band_outranks_high_energy_band() {
        // Two blobs of cells, one near the origin and one near (20,20,20).
        // The y-projection map is free in columns below 10 and expensive
        // above, so paths anchored in the low blob cost nothing while the
        // high blob cannot escape its expensive columns. The x-projection
        // map is moderately expensive everywhere, so the cheaper-of-two
        // rule must pick the y projection for the low blob.
        let cells = two_blobs();
        let params = AnchorParams {
            k: 2,
            sims: 3,
            ..AnchorParams::default()
        };
        let model = cluster_candidates(&cells, &params, &mut rng(3)).unwrap();
        assert_eq!(model.clusters().len(), 2);
        let low_cluster = if model.clusters()[0].members[0][0] < 10 {
            0
        } else {
            1
        };
        let mut map_y_vals = vec![0.0f64; 24 * 24];
        for x in 0..24 {
            for y in 10..24 {
                map_y_vals[x * 24 + y] = 9.0;
            }
        }
        let map_x = EnergyMap2D::new(24, 24, vec![5.0; 24 * 24]).unwrap();
        let map_y = EnergyMap2D::new(24, 24, map_y_vals).unwrap();
        let scored = score_clusters(
            model,
            (&map_x, &map_y),
            &params,
            &BeamParams::default(),
            &mut rng(9),
        )
        .unwrap();
        assert_eq!(scored.retained().len(), 1);
        assert_eq!(scored.retained()[0], low_cluster);
        assert_eq!(scored.scores()[low_cluster], 0.0);
        assert!(scored.scores()[1 - low_cluster] >= 9.0);
    }

    #[test]
    fn scoring_is_reproducible_for_a_fixed_seed() {
        let a = scored_model_on_zero_maps(4, 21);
        let b = scored_model_on_zero_maps(4, 21);
        assert_eq!(a.scores(), b.scores());
        assert_eq!(a.retained(), b.retained());
    }

    #[test]
    fn forced_draw_returns_the_single_member() {
        let model = AnchorModel {
            clusters: vec![Cluster {
                centroid: [1.0, 2.0, 3.0],
                members: vec![[1, 2, 3]],
            }],
            scores: vec![0.0],
            retained: vec![0],
            built_from: 1,
        };
        let run = RunState { clusters: vec![0] };
        let grid = solid_box_8();
        let field = compute_energy(&grid, EnergyKind::Axial);
        let mut r = rng(2);
        for _ in 0..10 {
            assert_eq!(
                sample_anchor(&model, &run, &grid, &field, &mut r).unwrap(),
                [1, 2, 3]
            );
        }
    }

    #[test]
    fn empty_model_falls_back_to_the_min_energy_occupied_cell() {
        let grid = solid_box_8();
        let field = compute_energy(&grid, EnergyKind::Axial);
        let run = RunState { clusters: vec![] };
        let cell = sample_anchor(&AnchorModel::empty(), &run, &grid, &field, &mut rng(0)).unwrap();
        // Row-major first zero-energy occupied cell of the 2..6 box.
        assert_eq!(cell, [2, 2, 2]);
        assert_eq!(field.at(2, 2, 2), 0.0);
    }

    #[test]
    fn no_occupied_cells_means_no_anchor() {
        let grid = VoxelGrid::empty_occupancy([4, 4, 4]).unwrap();
        let field = compute_energy(&grid, EnergyKind::Axial);
        assert!(matches!(
            fallback_anchor(&grid, &field),
            Err(Error::NoAnchor)
        ));
        let run = RunState { clusters: vec![] };
        assert!(matches!(
            sample_anchor(&AnchorModel::empty(), &run, &grid, &field, &mut rng(0)),
            Err(Error::NoAnchor)
        ));
    }

    #[test]
    fn anchors_come_from_run_state_clusters() {
        let grid = solid_box_8();
        let field = compute_energy(&grid, EnergyKind::Axial);
        let cells = candidate_cells(&grid, &field, 1e-3).unwrap();
        let params = AnchorParams {
            k: 4,
            ..AnchorParams::default()
        };
        for seed in 0..10u64 {
            let model = cluster_candidates(&cells, &params, &mut rng(seed)).unwrap();
            let map = reduce_over_axis(&field, Axis::X).unwrap();
            let map_y = reduce_over_axis(&field, Axis::Y).unwrap();
            let model = score_clusters(
                model,
                (&map, &map_y),
                &params,
                &BeamParams::default(),
                &mut rng(seed),
            )
            .unwrap();
            let mut r = rng(seed + 100);
            let run = RunState::draw(&model, &params, &mut r);
            assert!(run.clusters().len() <= params.clusters_per_run);
            for _ in 0..8 {
                let cell = sample_anchor(&model, &run, &grid, &field, &mut r).unwrap();
                let member_of_run = run
                    .clusters()
                    .iter()
                    .any(|&c| model.clusters()[c].members.contains(&cell));
                assert!(member_of_run, "seed {seed}: {cell:?} outside run clusters");
            }
        }
    }

    #[test]
    fn run_state_takes_everything_when_retained_is_small() {
        let model = scored_model_on_zero_maps(6, 5);
        let params = AnchorParams {
            k: 6,
            clusters_per_run: 10,
            ..AnchorParams::default()
        };
        let run = RunState::draw(&model, &params, &mut rng(1));
        let mut sorted = run.clusters().to_vec();
        sorted.sort_unstable();
        let mut expected = model.retained().to_vec();
        expected.sort_unstable();
        assert_eq!(sorted, expected);
    }

    #[test]
    fn reassignment_rebuckets_without_touching_retention() {
        let cells = two_blobs();
        let params = AnchorParams {
            k: 2,
            ..AnchorParams::default()
        };
        let mut model = cluster_candidates(&cells, &params, &mut rng(3)).unwrap();
        let retained_before = model.retained().to_vec();
        // Keep only the low blob; the high cluster must drain.
        let low: Vec<[usize; 3]> = cells.iter().copied().filter(|c| c[0] < 10).collect();
        model.reassign(&low);
        assert_eq!(model.retained(), retained_before.as_slice());
        let sizes: Vec<usize> = model.clusters().iter().map(|c| c.members.len()).collect();
        assert!(sizes.contains(&8) && sizes.contains(&0), "sizes {sizes:?}");
        for cluster in model.clusters() {
            for member in &cluster.members {
                assert!(low.contains(member));
            }
        }
    }

    #[test]
    fn params_validation_catches_bad_configs() {
        assert!(AnchorParams::default().validate().is_ok());
        assert!(AnchorParams {
            k: 2,
            ..AnchorParams::default()
        }
        .validate()
        .is_err());
        assert!(AnchorParams {
            clusters_per_run: 5,
            ..AnchorParams::default()
        }
        .validate()
        .is_err());
        assert!(AnchorParams {
            epsilon: 0.0,
            ..AnchorParams::default()
        }
        .validate()
        .is_err());
        assert!(AnchorParams {
            sims: 0,
            ..AnchorParams::default()
        }
        .validate()
        .is_err());
    }
}
