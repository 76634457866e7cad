//! Anchored beam search for low-energy seams.
//!
//! A 2D search walks a path through an energy map, one column index per
//! row, pinned to an anchor cell and continuous between rows (steps of at
//! most one column). Rows are filled outward from the anchor: first down
//! to row 0, then up to the last row. Each row expansion offers the
//! offsets 0, -1, +1 from the adjacent assigned row, clamped at the map
//! edge, and the candidate set is then pruned back to the beam width.
//!
//! Pruning is diversity-aware rather than purely greedy: candidates that
//! are strictly cheaper than the width-th best always survive, and the
//! remaining slots are filled from the cost ties by mutual L1 distance,
//! so the beam keeps structurally different alternatives alive instead of
//! n near-copies of the same path.
//!
//! The 3D lift turns a 2D path into a seam surface: the path is placed at
//! its slice and extended slice-by-slice in both directions, each new
//! slice produced by a constrained inner search (per-column moves limited
//! to one step from the previous slice and from the neighboring column),
//! with the same diversity pruning applied across surface candidates.

use std::cmp::Ordering;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::energy::{seam_cost, EnergyField, EnergyMap2D};
use crate::error::{Error, Result};
use crate::voxel::Axis;

/// Beam width and cost tie tolerance.
///
/// Costs within `tie_tol` of the width-th best are treated as tied during
/// pruning. Zero is exact (right for occupancy grids, whose costs are
/// small integers); scalar grids want a small tolerance like 1e-6.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    pub width: usize,
    pub tie_tol: f64,
}

impl BeamParams {
    pub fn new(width: usize, tie_tol: f64) -> Result<Self> {
        if width == 0 {
            return Err(Error::Precondition("beam width must be at least 1".into()));
        }
        if tie_tol.is_nan() || tie_tol < 0.0 {
            return Err(Error::Precondition(format!(
                "tie tolerance {tie_tol} must be non-negative"
            )));
        }
        Ok(BeamParams { width, tie_tol })
    }
}

impl Default for BeamParams {
    fn default() -> Self {
        BeamParams {
            width: 4,
            tie_tol: 0.0,
        }
    }
}

/// A full-height column path through a 2D map, pinned at `anchor`.
/// `values[x]` is the column chosen in row `x`; consecutive rows differ by
/// at most one column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path2D {
    values: Vec<usize>,
    anchor: (usize, usize),
}

impl Path2D {
    pub fn new(values: Vec<usize>, anchor: (usize, usize)) -> Result<Self> {
        let (xa, ya) = anchor;
        if xa >= values.len() || values[xa] != ya {
            return Err(Error::Precondition(format!(
                "anchor {anchor:?} is not on the path"
            )));
        }
        if !is_unit_step(&values) {
            return Err(Error::Precondition(
                "path rows must differ by at most one column".into(),
            ));
        }
        Ok(Path2D { values, anchor })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[usize] {
        &self.values
    }

    #[inline]
    pub fn anchor(&self) -> (usize, usize) {
        self.anchor
    }
}

fn is_unit_step(values: &[usize]) -> bool {
    values.windows(2).all(|w| w[0].abs_diff(w[1]) <= 1)
}

/// L1 distance between two equal-length paths.
pub fn path_distance(a: &Path2D, b: &Path2D) -> Result<u64> {
    if a.len() != b.len() {
        return Err(Error::Precondition(format!(
            "path lengths {} and {} differ",
            a.len(),
            b.len()
        )));
    }
    Ok(l1(a.values(), b.values()))
}

#[inline]
fn l1(a: &[usize], b: &[usize]) -> u64 {
    a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y) as u64).sum()
}

/// A seam surface: one cutting-axis depth per `(i, j)` column, with unit
/// steps between neighboring columns in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Seam {
    shape: (usize, usize),
    z: Vec<usize>,
    cost_total: f64,
    cost_mean: f64,
}

impl Seam {
    pub fn new(shape: (usize, usize), z: Vec<usize>) -> Result<Self> {
        if shape.0 * shape.1 != z.len() {
            return Err(Error::Precondition(format!(
                "seam shape {shape:?} does not match {} depths",
                z.len()
            )));
        }
        let seam = Seam {
            shape,
            z,
            cost_total: 0.0,
            cost_mean: 0.0,
        };
        if !seam.is_continuous() {
            return Err(Error::Precondition(
                "seam depths must differ by at most one between neighboring columns".into(),
            ));
        }
        Ok(seam)
    }

    /// Attaches cost figures (normally from [`seam_cost`]).
    pub fn with_costs(mut self, total: f64, mean: f64) -> Self {
        self.cost_total = total;
        self.cost_mean = mean;
        self
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.shape.0 && j < self.shape.1);
        self.z[i * self.shape.1 + j]
    }

    #[inline]
    pub fn depths(&self) -> &[usize] {
        &self.z
    }

    pub fn cost_total(&self) -> f64 {
        self.cost_total
    }

    pub fn cost_mean(&self) -> f64 {
        self.cost_mean
    }

    /// Unit-step continuity along both surface directions.
    pub fn is_continuous(&self) -> bool {
        let (ni, nj) = self.shape;
        for i in 0..ni {
            for j in 0..nj {
                let z = self.at(i, j);
                if i + 1 < ni && z.abs_diff(self.at(i + 1, j)) > 1 {
                    return false;
                }
                if j + 1 < nj && z.abs_diff(self.at(i, j + 1)) > 1 {
                    return false;
                }
            }
        }
        true
    }
}

/// Candidate column values reachable from `base`: offsets 0, -1, +1 in
/// preference order, clamped to `[0, w)` with duplicates dropped.
#[inline]
fn neighbor_values(base: usize, w: usize) -> impl Iterator<Item = usize> {
    let mut out = [base; 3];
    let mut count = 1;
    if base > 0 {
        out[count] = base - 1;
        count += 1;
    }
    if base + 1 < w {
        out[count] = base + 1;
        count += 1;
    }
    out.into_iter().take(count)
}

/// Core of the diversity rule. Selects up to `n` candidate indices given
/// their costs and callbacks for pairwise distance and lexicographic
/// order. With `T` the n-th cheapest cost, everything strictly below
/// `T - tie_tol` is kept outright; the remaining slots are drawn from the
/// ties within `tie_tol` of `T`: by medoid (smallest total distance) when
/// one slot is left, by farthest-point spread when several are. Ties in
/// either rule go to the lexicographically smaller candidate.
fn select_diverse(
    costs: &[f64],
    n: usize,
    tie_tol: f64,
    dist: &mut dyn FnMut(usize, usize) -> u64,
    lex: &mut dyn FnMut(usize, usize) -> Ordering,
) -> Vec<usize> {
    debug_assert!(n >= 1 && costs.len() > n);
    let mut by_cost: Vec<usize> = (0..costs.len()).collect();
    by_cost.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
    let t = costs[by_cost[n - 1]];

    let mut selected: Vec<usize> = Vec::with_capacity(n);
    let mut ties: Vec<usize> = Vec::new();
    for (idx, &cost) in costs.iter().enumerate() {
        if cost < t - tie_tol {
            selected.push(idx);
        } else if (cost - t).abs() <= tie_tol {
            ties.push(idx);
        }
    }
    if selected.len() >= n {
        // Unreachable with T defined as the n-th cheapest; kept for safety.
        selected.truncate(n);
        return selected;
    }
    let need = n - selected.len();

    if need == 1 {
        let total = |b: usize, dist: &mut dyn FnMut(usize, usize) -> u64| -> u64 {
            ties.iter()
                .map(|&o| if o == b { 0 } else { dist(b, o) })
                .sum()
        };
        let mut best = ties[0];
        let mut best_total = total(best, dist);
        for &b in &ties[1..] {
            let tot = total(b, dist);
            if tot < best_total || (tot == best_total && lex(b, best) == Ordering::Less) {
                best = b;
                best_total = tot;
            }
        }
        selected.push(best);
        return selected;
    }

    if ties.len() <= need {
        // Not enough ties to choose among: take them all, then fall back
        // to the cheapest of whatever is left.
        selected.extend_from_slice(&ties);
        let missing = n - selected.len();
        if missing > 0 {
            let mut rest: Vec<usize> = (0..costs.len())
                .filter(|idx| !selected.contains(idx))
                .collect();
            rest.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then_with(|| lex(a, b)));
            selected.extend_from_slice(&rest[..missing]);
        }
        return selected;
    }

    // Farthest-point spread over the ties: seed with the element farthest
    // from the whole tie set, then repeatedly add the element with the
    // largest minimum distance to those already chosen.
    let mut seed = ties[0];
    let mut seed_total = 0u64;
    for (pos, &b) in ties.iter().enumerate() {
        let tot: u64 = ties
            .iter()
            .map(|&o| if o == b { 0 } else { dist(b, o) })
            .sum();
        if pos == 0 {
            seed_total = tot;
        } else if tot > seed_total || (tot == seed_total && lex(b, seed) == Ordering::Less) {
            seed = b;
            seed_total = tot;
        }
    }
    selected.push(seed);
    let mut remaining: Vec<usize> = ties.iter().copied().filter(|&b| b != seed).collect();
    let mut min_dist: Vec<u64> = remaining.iter().map(|&b| dist(b, seed)).collect();
    for _ in 1..need {
        let mut pick = 0;
        for pos in 1..remaining.len() {
            if min_dist[pos] > min_dist[pick]
                || (min_dist[pos] == min_dist[pick]
                    && lex(remaining[pos], remaining[pick]) == Ordering::Less)
            {
                pick = pos;
            }
        }
        let chosen = remaining.swap_remove(pick);
        min_dist.swap_remove(pick);
        selected.push(chosen);
        for (pos, &b) in remaining.iter().enumerate() {
            min_dist[pos] = min_dist[pos].min(dist(b, chosen));
        }
    }
    selected
}

/// Prunes `(path, cost)` candidates to at most `n` survivors: every
/// candidate strictly cheaper than the ties at the n-th best cost, plus a
/// spread of the ties themselves. Paths must share one length.
pub fn prune_with_diversity(
    candidates: Vec<(Vec<usize>, f64)>,
    n: usize,
    tie_tol: f64,
) -> Vec<(Vec<usize>, f64)> {
    if candidates.len() <= n {
        return candidates;
    }
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(candidates.windows(2).all(|w| w[0].0.len() == w[1].0.len()));
    let costs: Vec<f64> = candidates.iter().map(|c| c.1).collect();
    let picked = select_diverse(
        &costs,
        n,
        tie_tol,
        &mut |a, b| l1(&candidates[a].0, &candidates[b].0),
        &mut |a, b| candidates[a].0.cmp(&candidates[b].0),
    );
    take_indices(candidates, &picked)
}

fn take_indices<T>(items: Vec<T>, indices: &[usize]) -> Vec<T> {
    let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
    indices
        .iter()
        .map(|&idx| slots[idx].take().expect("selection indices are unique"))
        .collect()
}

struct PathCand {
    values: Vec<usize>,
    cost: f64,
}

/// Anchored beam search over a 2D energy map. Returns the cheapest
/// surviving full path through `anchor`; exact cost ties go to the
/// lexicographically smallest survivor.
pub fn beam_search_2d(
    map: &EnergyMap2D,
    anchor: (usize, usize),
    params: &BeamParams,
) -> Result<Path2D> {
    BeamParams::new(params.width, params.tie_tol)?;
    let (h, w) = (map.h(), map.w());
    let (xa, ya) = anchor;
    if xa >= h || ya >= w {
        return Err(Error::OutOfBounds(format!(
            "anchor {anchor:?} outside {h}x{w} map"
        )));
    }

    let mut beam = vec![PathCand {
        values: vec![ya; h],
        cost: map.at(xa, ya),
    }];

    let expand = |beam: Vec<PathCand>, x: usize, adjacent: usize, lo: usize, hi: usize| {
        let mut cands: Vec<PathCand> = Vec::with_capacity(beam.len() * 3);
        for parent in &beam {
            let base = parent.values[adjacent];
            for v in neighbor_values(base, w) {
                let mut values = parent.values.clone();
                values[x] = v;
                cands.push(PathCand {
                    values,
                    cost: parent.cost + map.at(x, v),
                });
            }
        }
        if cands.len() <= params.width {
            return cands;
        }
        let costs: Vec<f64> = cands.iter().map(|c| c.cost).collect();
        let picked = select_diverse(
            &costs,
            params.width,
            params.tie_tol,
            &mut |a, b| l1(&cands[a].values[lo..=hi], &cands[b].values[lo..=hi]),
            &mut |a, b| cands[a].values[lo..=hi].cmp(&cands[b].values[lo..=hi]),
        );
        take_indices(cands, &picked)
    };

    for x in (0..xa).rev() {
        beam = expand(beam, x, x + 1, x, xa);
    }
    for x in (xa + 1)..h {
        beam = expand(beam, x, x - 1, 0, x);
    }

    let mut best = 0;
    for idx in 1..beam.len() {
        match beam[idx].cost.total_cmp(&beam[best].cost) {
            Ordering::Less => best = idx,
            Ordering::Equal => {
                if beam[idx].values < beam[best].values {
                    best = idx;
                }
            }
            Ordering::Greater => {}
        }
    }
    Path2D::new(beam.swap_remove(best).values, anchor)
}

/// Maximum map extent accepted by [`exhaustive_min_path`].
pub const EXHAUSTIVE_LIMIT: usize = 16;

/// Exact minimum-cost anchored path by dynamic programming, for checking
/// the beam search. Guarded to maps of at most 16x16.
pub fn exhaustive_min_path(map: &EnergyMap2D, anchor: (usize, usize)) -> Result<Path2D> {
    let (h, w) = (map.h(), map.w());
    if h > EXHAUSTIVE_LIMIT || w > EXHAUSTIVE_LIMIT {
        return Err(Error::Precondition(format!(
            "exhaustive search limited to {EXHAUSTIVE_LIMIT}x{EXHAUSTIVE_LIMIT}, got {h}x{w}"
        )));
    }
    let (xa, ya) = anchor;
    if xa >= h || ya >= w {
        return Err(Error::OutOfBounds(format!(
            "anchor {anchor:?} outside {h}x{w} map"
        )));
    }

    let mut values = vec![ya; h];

    // Best completion tables away from the anchor. `toward[x][y]` is the
    // cheapest cost of rows between x and the anchor (exclusive) plus row
    // x at column y, honoring unit steps including the step to the anchor.
    let neighbors_min = |row: &[f64], y: usize| -> f64 {
        let mut m = row[y];
        if y > 0 {
            m = m.min(row[y - 1]);
        }
        if y + 1 < w {
            m = m.min(row[y + 1]);
        }
        m
    };

    // Offset-preference argmin among unit-step neighbors of y.
    let pick_neighbor = |row: &[f64], y: usize| -> usize {
        let mut best = y;
        if y > 0 && row[y - 1] < row[best] {
            best = y - 1;
        }
        if y + 1 < w && row[y + 1] < row[best] {
            best = y + 1;
        }
        best
    };

    if xa > 0 {
        let mut tables: Vec<Vec<f64>> = vec![Vec::new(); xa];
        tables[xa - 1] = (0..w)
            .map(|y| {
                if y.abs_diff(ya) <= 1 {
                    map.at(xa - 1, y)
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        for x in (0..xa.saturating_sub(1)).rev() {
            let next = tables[x + 1].clone();
            tables[x] = (0..w)
                .map(|y| map.at(x, y) + neighbors_min(&next, y))
                .collect();
        }
        let mut y = (0..w)
            .min_by(|&a, &b| tables[0][a].total_cmp(&tables[0][b]))
            .unwrap();
        values[0] = y;
        for x in 1..xa {
            y = pick_neighbor(&tables[x], y);
            values[x] = y;
        }
    }

    if xa + 1 < h {
        let mut tables: Vec<Vec<f64>> = vec![Vec::new(); h];
        tables[xa + 1] = (0..w)
            .map(|y| {
                if y.abs_diff(ya) <= 1 {
                    map.at(xa + 1, y)
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        for x in (xa + 2)..h {
            let prev = tables[x - 1].clone();
            tables[x] = (0..w)
                .map(|y| map.at(x, y) + neighbors_min(&prev, y))
                .collect();
        }
        let mut y = (0..w)
            .min_by(|&a, &b| tables[h - 1][a].total_cmp(&tables[h - 1][b]))
            .unwrap();
        values[h - 1] = y;
        for x in ((xa + 1)..(h - 1)).rev() {
            y = pick_neighbor(&tables[x], y);
            values[x] = y;
        }
    }

    Path2D::new(values, anchor)
}

/// One partial seam surface during the lift: a chain of slice paths.
struct SurfaceNode {
    slice: usize,
    path: Vec<usize>,
    parent: Option<Rc<SurfaceNode>>,
}

struct SurfaceCand {
    node: Rc<SurfaceNode>,
    cost: f64,
}

/// Pairwise bookkeeping across the surface beam so candidate distances
/// and orderings build incrementally instead of rescanning whole
/// surfaces.
struct PairState {
    dist: Vec<u64>,
    ord: Vec<Ordering>,
    len: usize,
}

impl PairState {
    fn single() -> Self {
        PairState {
            dist: vec![0],
            ord: vec![Ordering::Equal],
            len: 1,
        }
    }

    #[inline]
    fn dist(&self, a: usize, b: usize) -> u64 {
        self.dist[a * self.len + b]
    }

    #[inline]
    fn ord(&self, a: usize, b: usize) -> Ordering {
        self.ord[a * self.len + b]
    }
}

/// Constrained per-slice search: each column may move at most one step
/// from the previous slice's column and from its in-slice neighbor.
/// Plain stable top-n pruning; returns the final candidate set sorted
/// cheapest-first, generation order breaking exact ties.
#[allow(clippy::needless_range_loop)] // t indexes prev, paths, and energy_at together
fn inner_slice_search(
    prev: &[usize],
    energy_at: &dyn Fn(usize, usize) -> f64,
    w: usize,
    n: usize,
) -> Vec<(Vec<usize>, f64)> {
    struct SliceCand {
        path: Vec<usize>,
        cost: f64,
    }
    let h = prev.len();
    let mut beam: Vec<SliceCand> = neighbor_values(prev[0], w)
        .map(|v| SliceCand {
            path: vec![v],
            cost: energy_at(0, v),
        })
        .collect();
    sort_truncate(&mut beam, n, |c| c.cost);

    for t in 1..h {
        let mut cands: Vec<SliceCand> = Vec::with_capacity(beam.len() * 3);
        for parent in &beam {
            let last = parent.path[t - 1];
            for v in neighbor_values(prev[t], w) {
                if v.abs_diff(last) > 1 {
                    continue;
                }
                let mut path = parent.path.clone();
                path.push(v);
                cands.push(SliceCand {
                    path,
                    cost: parent.cost + energy_at(t, v),
                });
            }
        }
        debug_assert!(!cands.is_empty(), "slice search must always extend");
        sort_truncate(&mut cands, n, |c| c.cost);
        beam = cands;
    }
    beam.into_iter().map(|c| (c.path, c.cost)).collect()
}

fn sort_truncate<T>(items: &mut Vec<T>, n: usize, cost: impl Fn(&T) -> f64) {
    // Stable: exact cost ties keep generation order.
    items.sort_by(|a, b| cost(a).total_cmp(&cost(b)));
    items.truncate(n);
}

/// Lifts an anchored 2D path into a full seam surface across the reducing
/// axis. The path is placed at `start_slice` and extended toward slice 0,
/// then toward the last slice. Cost fields of the result come from
/// [`seam_cost`] over the full field.
pub fn lift_to_seam_3d(
    field: &EnergyField,
    anchor_path: &Path2D,
    start_slice: usize,
    reducing: Axis,
    params: &BeamParams,
) -> Result<Seam> {
    BeamParams::new(params.width, params.tie_tol)?;
    let [ni, nj, nk] = field.dims();
    let (slices, main) = match reducing {
        Axis::X => (ni, nj),
        Axis::Y => (nj, ni),
        Axis::Z => {
            return Err(Error::Precondition(
                "cannot lift along the cutting axis".into(),
            ))
        }
    };
    if anchor_path.len() != main {
        return Err(Error::Precondition(format!(
            "anchor path length {} does not match main extent {main}",
            anchor_path.len()
        )));
    }
    if start_slice >= slices {
        return Err(Error::OutOfBounds(format!(
            "start slice {start_slice} outside {slices} slices"
        )));
    }
    if let Some(&depth) = anchor_path.values().iter().find(|&&v| v >= nk) {
        return Err(Error::OutOfBounds(format!(
            "anchor path depth {depth} exceeds cutting extent {nk}"
        )));
    }

    // field energy at (slice, main, depth) for the current orientation
    let energy = |s: usize, t: usize, v: usize| -> f64 {
        match reducing {
            Axis::X => field.at(s, t, v),
            _ => field.at(t, s, v),
        }
    };

    let n = params.width;
    let root = Rc::new(SurfaceNode {
        slice: start_slice,
        path: anchor_path.values().to_vec(),
        parent: None,
    });
    let root_cost: f64 = (0..main)
        .map(|t| energy(start_slice, t, root.path[t]))
        .sum();
    let mut beam = vec![SurfaceCand {
        node: root,
        cost: root_cost,
    }];
    let mut pairs = PairState::single();

    let extend = |beam: &mut Vec<SurfaceCand>, pairs: &mut PairState, s: usize, down: bool| {
        let slice_energy = |t: usize, v: usize| energy(s, t, v);
        // One inner search per surviving surface; each returns up to n
        // slice extensions, so up to n^2 surface candidates compete.
        struct Ext {
            parent: usize,
            path: Vec<usize>,
            cost: f64,
        }
        let mut cands: Vec<Ext> = Vec::with_capacity(beam.len() * n);
        for (pi, surf) in beam.iter().enumerate() {
            // The chain head is the neighboring slice except on the first
            // upward step, where the neighbor is the shared root at
            // `start_slice` (the head is then the slice-0 end of the down
            // phase).
            let prev: &[usize] = if !down && s == start_slice + 1 {
                anchor_path.values()
            } else {
                &surf.node.path
            };
            for (path, cost) in inner_slice_search(prev, &slice_energy, nk, n) {
                cands.push(Ext {
                    parent: pi,
                    path,
                    cost: surf.cost + cost,
                });
            }
        }

        let picked: Vec<usize> = if cands.len() <= n {
            (0..cands.len()).collect()
        } else {
            let costs: Vec<f64> = cands.iter().map(|c| c.cost).collect();
            // New slices sit before the parent range going down and after
            // it going up; lexicographic order follows ascending slices.
            select_diverse(
                &costs,
                n,
                params.tie_tol,
                &mut |a, b| {
                    pairs.dist(cands[a].parent, cands[b].parent)
                        + l1(&cands[a].path, &cands[b].path)
                },
                &mut |a, b| {
                    let slice_ord = cands[a].path.cmp(&cands[b].path);
                    let parent_ord = pairs.ord(cands[a].parent, cands[b].parent);
                    if down {
                        slice_ord.then(parent_ord)
                    } else {
                        parent_ord.then(slice_ord)
                    }
                },
            )
        };

        let len = picked.len();
        let mut dist = vec![0u64; len * len];
        let mut ord = vec![Ordering::Equal; len * len];
        for (ra, &a) in picked.iter().enumerate() {
            for (rb, &b) in picked.iter().enumerate() {
                dist[ra * len + rb] = pairs.dist(cands[a].parent, cands[b].parent)
                    + l1(&cands[a].path, &cands[b].path);
                let slice_ord = cands[a].path.cmp(&cands[b].path);
                let parent_ord = pairs.ord(cands[a].parent, cands[b].parent);
                ord[ra * len + rb] = if down {
                    slice_ord.then(parent_ord)
                } else {
                    parent_ord.then(slice_ord)
                };
            }
        }
        *pairs = PairState { dist, ord, len };

        let mut next: Vec<SurfaceCand> = Vec::with_capacity(picked.len());
        for idx in picked {
            let Ext { parent, path, cost } = std::mem::replace(
                &mut cands[idx],
                Ext {
                    parent: 0,
                    path: Vec::new(),
                    cost: 0.0,
                },
            );
            next.push(SurfaceCand {
                node: Rc::new(SurfaceNode {
                    slice: s,
                    path,
                    parent: Some(beam[parent].node.clone()),
                }),
                cost,
            });
        }
        *beam = next;
    };

    for s in (0..start_slice).rev() {
        extend(&mut beam, &mut pairs, s, true);
    }
    for s in (start_slice + 1)..slices {
        extend(&mut beam, &mut pairs, s, false);
    }

    // Materialize the survivors and pick the cheapest, breaking exact
    // ties by lexicographic order over ascending slices.
    let materialize = |surf: &SurfaceCand| -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); slices];
        let mut node = Some(surf.node.clone());
        while let Some(cur) = node {
            out[cur.slice] = cur.path.clone();
            node = cur.parent.clone();
        }
        out
    };
    let mut best: Option<(Vec<Vec<usize>>, f64)> = None;
    for surf in &beam {
        let grid = materialize(surf);
        let replace = match &best {
            None => true,
            Some((best_grid, best_cost)) => match surf.cost.total_cmp(best_cost) {
                Ordering::Less => true,
                Ordering::Equal => grid < *best_grid,
                Ordering::Greater => false,
            },
        };
        if replace {
            best = Some((grid, surf.cost));
        }
    }
    let (surface, _) = best.expect("surface beam is never empty");

    let mut z = vec![0usize; ni * nj];
    for i in 0..ni {
        for j in 0..nj {
            z[i * nj + j] = match reducing {
                Axis::X => surface[i][j],
                _ => surface[j][i],
            };
        }
    }
    let seam = Seam::new((ni, nj), z)?;
    let (total, mean) = seam_cost(field, &seam)?;
    Ok(seam.with_costs(total, mean))
}
