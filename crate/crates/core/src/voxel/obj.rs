//! Wavefront OBJ export: one unit cube per occupied voxel with interior
//! faces culled, so the mesh is exactly the occupancy boundary. A face is
//! emitted wherever an occupied cell meets an empty neighbor or the grid
//! edge. Vertices are deduplicated in first-use order, which makes the
//! output deterministic for a given grid.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::voxel::VoxelGrid;

/// Mesh size summary returned by the exporters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjStats {
    pub vertices: usize,
    pub faces: usize,
}

/// Corner offsets for each cube face, wound counter-clockwise seen from
/// outside. Order: -x, +x, -y, +y, -z, +z.
const FACES: [([isize; 3], [[usize; 3]; 4]); 6] = [
    ([-1, 0, 0], [[0, 0, 0], [0, 0, 1], [0, 1, 1], [0, 1, 0]]),
    ([1, 0, 0], [[1, 0, 0], [1, 1, 0], [1, 1, 1], [1, 0, 1]]),
    ([0, -1, 0], [[0, 0, 0], [1, 0, 0], [1, 0, 1], [0, 0, 1]]),
    ([0, 1, 0], [[0, 1, 0], [0, 1, 1], [1, 1, 1], [1, 1, 0]]),
    ([0, 0, -1], [[0, 0, 0], [0, 1, 0], [1, 1, 0], [1, 0, 0]]),
    ([0, 0, 1], [[0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]]),
];

fn occupied_at(grid: &VoxelGrid, p: [isize; 3]) -> bool {
    let [ni, nj, nk] = grid.dims();
    p[0] >= 0
        && p[1] >= 0
        && p[2] >= 0
        && (p[0] as usize) < ni
        && (p[1] as usize) < nj
        && (p[2] as usize) < nk
        && grid.is_occupied(p[0] as usize, p[1] as usize, p[2] as usize)
}

/// Writes the boundary mesh as ASCII OBJ (1-based quad faces).
pub fn write_obj(grid: &VoxelGrid, out: &mut impl Write) -> Result<ObjStats> {
    let [ni, nj, nk] = grid.dims();
    let mut vertex_ids: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices: Vec<[usize; 3]> = Vec::new();
    let mut faces: Vec<[usize; 4]> = Vec::new();

    for i in 0..ni {
        for j in 0..nj {
            for k in 0..nk {
                if !grid.is_occupied(i, j, k) {
                    continue;
                }
                for (normal, corners) in &FACES {
                    let neighbor = [
                        i as isize + normal[0],
                        j as isize + normal[1],
                        k as isize + normal[2],
                    ];
                    if occupied_at(grid, neighbor) {
                        continue;
                    }
                    let mut quad = [0usize; 4];
                    for (slot, corner) in quad.iter_mut().zip(corners) {
                        let v = [i + corner[0], j + corner[1], k + corner[2]];
                        let next_id = vertices.len();
                        let id = *vertex_ids.entry(v).or_insert_with(|| {
                            vertices.push(v);
                            next_id
                        });
                        *slot = id;
                    }
                    faces.push(quad);
                }
            }
        }
    }

    for v in &vertices {
        writeln!(out, "v {} {} {}", v[0], v[1], v[2])?;
    }
    for f in &faces {
        writeln!(out, "f {} {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1, f[3] + 1)?;
    }
    Ok(ObjStats {
        vertices: vertices.len(),
        faces: faces.len(),
    })
}

/// Writes the boundary mesh to a file.
pub fn export_obj(grid: &VoxelGrid, path: impl AsRef<Path>) -> Result<ObjStats> {
    let mut out = BufWriter::new(File::create(path)?);
    let stats = write_obj(grid, &mut out)?;
    out.flush()?;
    Ok(stats)
}
