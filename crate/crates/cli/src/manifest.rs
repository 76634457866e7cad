//! Run manifests: everything needed to reproduce a batch bit for bit
//! (input, settings, seeds), plus a per-output summary of what happened.

use carve3d::voxel::Axis;
use carve3d::{AugmentConfig, Direction, StepLog, WarpSpec};
use serde::Serialize;

pub const TOOL: &str = "carve3d";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input: String,
    pub out_dir: String,
    pub count: usize,
    pub base_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<AugmentConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineSettings>,
    pub outputs: Vec<OutputEntry>,
}

#[derive(Debug, Serialize)]
pub struct BaselineSettings {
    pub method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intervals: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub seed: u64,
    pub dims: [usize; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<StepSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_factors: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warp: Option<WarpSpec>,
}

/// Compact per-step record for the manifest; the full seam geometry
/// lives in steps.jsonl when requested.
#[derive(Debug, Serialize)]
pub struct StepSummary {
    pub axis: Axis,
    pub direction: Direction,
    pub accepted: bool,
    pub attempts: usize,
    pub seam_mean: f64,
    pub threshold: f64,
    pub mirror_axes: Vec<Axis>,
}

impl From<&StepLog> for StepSummary {
    fn from(log: &StepLog) -> Self {
        StepSummary {
            axis: log.axis,
            direction: log.direction,
            accepted: log.accepted,
            attempts: log.attempts,
            seam_mean: log.seam_mean,
            threshold: log.threshold,
            mirror_axes: log.mirror_axes.clone(),
        }
    }
}

/// One line of steps.jsonl: which output and step the log belongs to.
#[derive(Debug, Serialize)]
pub struct StepRecord<'a> {
    pub output: usize,
    pub seed: u64,
    pub step: usize,
    #[serde(flatten)]
    pub log: &'a StepLog,
}
