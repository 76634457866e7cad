//! Content-aware resizing of voxelized 3D shapes.
//!
//! A shape lives on a dense voxel grid (binary occupancy or a truncated
//! signed-distance field). To grow or shrink the shape along an axis, the
//! library finds a *seam surface*: one cell per column along the cutting
//! axis, continuous between neighboring columns, chosen to pass through
//! low-gradient regions. Removing the seam shrinks the grid by one layer;
//! duplicating alongside it grows the grid by one. Repeating the process a
//! random number of times per axis yields plausible shape variants while
//! preserving sharp features, which is the point of the whole exercise.
//!
//! Pipeline pieces, one module each:
//!
//! - [`voxel`]: grid container, axis permutation, file formats, synthetic
//!   fixtures, OBJ export.
//! - [`energy`]: gradient-magnitude energy fields and their 2D reductions.
//! - [`beam`]: anchored beam search for 2D paths, the lift to 3D seam
//!   surfaces, and diversity-aware pruning.
//! - [`anchors`]: where seams start; clustering of low-energy cells and
//!   seeded sampling.
//! - [`symmetry`]: mirror-mismatch rates and seam mirroring.
//! - [`carve`]: seam removal/insertion and the top-level augmentation loop.
//! - [`baselines`]: axis scaling and piecewise warping for comparison.

pub mod anchors;
pub mod baselines;
pub mod beam;
pub mod carve;
pub mod energy;
pub mod error;
pub mod symmetry;
pub mod voxel;

pub use anchors::{AnchorModel, AnchorParams};
pub use baselines::{axis_scale, piecewise_warp, sample_scale_factors, sample_warp, WarpSpec};
pub use beam::{BeamParams, Path2D, Seam};
pub use carve::{augment, augment_batch, AugmentConfig, Direction, InsertPolicy, StepLog};
pub use energy::{EnergyField, EnergyKind, EnergyMap2D};
pub use error::{Error, Result};
pub use voxel::{Axis, GridKind, VoxelGrid};
