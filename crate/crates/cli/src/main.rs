//! Batch frontend for the voxel augmentation library.
//!
//! Subcommands: `augment` (content-aware seam carving), `baseline`
//! (axis scaling / piecewise warping), `info`, `convert`, `export-obj`,
//! and `gen`. Machine-readable output is JSON; batches write a
//! `manifest.json` that pins input, settings, and seeds, so any output
//! can be reproduced bit for bit. Exit codes: 0 success, 2 bad
//! arguments, 3 IO or format failure, 4 augmentation failure. Set
//! `CARVE3D_LOG=info` (or `debug`) for progress on stderr.

mod manifest;
mod text;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use carve3d::anchors::AnchorParams;
use carve3d::energy::{compute_energy, mean_energy, EnergyKind};
use carve3d::symmetry::{mismatch_rate, symmetric_axes};
use carve3d::voxel::io::{decode_grid, encode_grid, write_grid};
use carve3d::voxel::obj::export_obj;
use carve3d::voxel::shapes::{make_box_tsdf, make_shape, ShapeKind, ShapeSpec};
use carve3d::voxel::{Axis, GridKind, VoxelGrid};
use carve3d::{
    augment, axis_scale, piecewise_warp, sample_scale_factors, sample_warp, AugmentConfig,
    BeamParams, Error, InsertPolicy, StepLog,
};

use manifest::{BaselineSettings, OutputEntry, RunManifest, StepRecord, StepSummary};

#[derive(Parser)]
#[command(
    name = "carve3d",
    version,
    about = "Content-aware voxel shape augmentation",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Augment a grid by carving/inserting low-energy seam surfaces
    Augment(AugmentArgs),
    /// Content-blind augmentation: axis scaling or piecewise warping
    Baseline(BaselineArgs),
    /// Print grid facts (dims, kind, occupancy, energy, symmetry) as JSON
    Info(InfoArgs),
    /// Convert between the binary format and plain text
    Convert(ConvertArgs),
    /// Export the occupied surface as a Wavefront OBJ mesh
    ExportObj(ExportObjArgs),
    /// Generate a procedural fixture shape
    Gen(GenArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EnergyArg {
    Axial,
    Full,
}

impl From<EnergyArg> for EnergyKind {
    fn from(arg: EnergyArg) -> Self {
        match arg {
            EnergyArg::Axial => EnergyKind::Axial,
            EnergyArg::Full => EnergyKind::Full,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Replicate,
    Average,
}

impl From<PolicyArg> for InsertPolicy {
    fn from(arg: PolicyArg) -> Self {
        match arg {
            PolicyArg::Replicate => InsertPolicy::Replicate,
            PolicyArg::Average => InsertPolicy::Average,
        }
    }
}

#[derive(Args)]
struct AugmentArgs {
    /// Input grid file
    #[arg(long)]
    input: PathBuf,
    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
    /// Number of augmented variants to produce
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Base seed; variant k uses seed + k
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum per-axis scaling factor
    #[arg(long, default_value_t = AugmentConfig::default().s_max)]
    smax: f64,
    /// Beam width
    #[arg(long, default_value_t = BeamParams::default().width)]
    beam: usize,
    /// Cost window treated as a tie during beam pruning
    #[arg(long, default_value_t = BeamParams::default().tie_tol)]
    tie_tol: f64,
    /// Anchors tried per step before it becomes a no-op
    #[arg(long, default_value_t = AugmentConfig::default().retries)]
    retries: usize,
    /// Energy definition
    #[arg(long, value_enum, default_value_t = EnergyArg::Axial)]
    energy: EnergyArg,
    /// Insertion value policy for scalar grids
    #[arg(long, value_enum, default_value_t = PolicyArg::Average)]
    insert_policy: PolicyArg,
    /// Mismatch score below which an axis counts as symmetric
    #[arg(long, default_value_t = AugmentConfig::default().symmetry_threshold)]
    symmetry_threshold: f64,
    /// Energy bound for anchor candidate cells
    #[arg(long, default_value_t = AnchorParams::default().epsilon)]
    epsilon: f64,
    /// Anchor clusters (k)
    #[arg(long, default_value_t = AnchorParams::default().k)]
    clusters: usize,
    /// Mini-batch size for the clustering refinement
    #[arg(long, default_value_t = AnchorParams::default().batch)]
    batch: usize,
    /// Clustering refinement rounds
    #[arg(long, default_value_t = AnchorParams::default().iters)]
    iters: usize,
    /// Trial paths per cluster when scoring
    #[arg(long, default_value_t = AnchorParams::default().sims)]
    sims: usize,
    /// Retained clusters sampled per run
    #[arg(long, default_value_t = AnchorParams::default().clusters_per_run)]
    clusters_per_run: usize,
    /// Worker threads for the batch (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write steps.jsonl with full per-step seam geometry
    #[arg(long)]
    steps: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaselineMethod {
    Scale,
    Warp,
}

#[derive(Args)]
struct BaselineArgs {
    /// Input grid file
    #[arg(long)]
    input: PathBuf,
    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    method: BaselineMethod,
    /// Number of variants to produce
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Base seed; variant k uses seed + k
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Log-std of the warp factors (warp method only)
    #[arg(long, default_value_t = carve3d::baselines::WARP_SIGMA)]
    sigma: f64,
    /// Warp sub-intervals of [-1, 1] (warp method only)
    #[arg(long, default_value_t = carve3d::baselines::WARP_INTERVALS)]
    intervals: usize,
    /// Worker threads for the batch (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct InfoArgs {
    /// Grid file, binary or text
    input: PathBuf,
}

#[derive(Args)]
struct ConvertArgs {
    /// Source file; binary inputs convert to text and vice versa
    input: PathBuf,
    /// Destination file
    output: PathBuf,
}

#[derive(Args)]
struct ExportObjArgs {
    /// Grid file, binary or text
    input: PathBuf,
    /// Mesh destination (.obj)
    output: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ShapeArg {
    Box,
    Cylinder,
    Sphere,
    LBracket,
    Cup,
    BoxTsdf,
}

#[derive(Args)]
struct GenArgs {
    /// Destination grid file
    out: PathBuf,
    #[arg(long, value_enum)]
    shape: ShapeArg,
    /// Cubic grid side length
    #[arg(long)]
    side: usize,
    /// Box extents, comma separated (box, l-bracket, box-tsdf)
    #[arg(long, value_delimiter = ',')]
    extents: Option<Vec<usize>>,
    /// Radius in cells (cylinder, sphere, cup)
    #[arg(long)]
    radius: Option<usize>,
    /// Height in cells (cylinder, cup)
    #[arg(long)]
    height: Option<usize>,
    /// Wall thickness in cells (l-bracket, cup)
    #[arg(long)]
    thickness: Option<usize>,
    /// Truncation bound (box-tsdf)
    #[arg(long, default_value_t = 3.0)]
    tau: f32,
}

/// Failure paths mapped onto the exit-code taxonomy. Clap handles its
/// own usage errors and also exits with 2.
enum Failure {
    Usage(String),
    Io(String),
    Run(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
            Failure::Run(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Run(m) => m,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure::Io(e.to_string())
}

fn run_failure(e: impl std::fmt::Display) -> Failure {
    Failure::Run(e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CARVE3D_LOG", "error"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Augment(args) => cmd_augment(args),
        Command::Baseline(args) => cmd_baseline(args),
        Command::Info(args) => cmd_info(args),
        Command::Convert(args) => cmd_convert(args),
        Command::ExportObj(args) => cmd_export_obj(args),
        Command::Gen(args) => cmd_gen(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

/// Reads a grid, accepting either the binary format (by magic) or the
/// text format.
fn read_any_grid(path: &Path) -> Result<VoxelGrid, Failure> {
    let bytes = fs::read(path).map_err(|e| io_failure(format!("{}: {e}", path.display())))?;
    if bytes.starts_with(b"VGRD") {
        decode_grid(&bytes).map_err(|e| io_failure(format!("{}: {e}", path.display())))
    } else {
        let text = String::from_utf8(bytes).map_err(|_| {
            io_failure(format!("{}: neither binary nor UTF-8 text", path.display()))
        })?;
        text::decode_text(&text).map_err(|e| io_failure(format!("{}: {e}", path.display())))
    }
}

fn file_stem(path: &Path) -> Result<&str, Failure> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| usage(format!("cannot derive a file stem from {}", path.display())))
}

fn build_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| run_failure(format!("cannot build worker pool: {e}")))
}

fn write_manifest(out_dir: &Path, manifest: &RunManifest) -> CmdResult {
    let path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| run_failure(format!("cannot serialize manifest: {e}")))?;
    fs::write(&path, json).map_err(|e| io_failure(format!("{}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn cmd_augment(args: AugmentArgs) -> CmdResult {
    if args.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    let config = AugmentConfig {
        s_max: args.smax,
        beam: BeamParams {
            width: args.beam,
            tie_tol: args.tie_tol,
        },
        anchors: AnchorParams {
            epsilon: args.epsilon,
            k: args.clusters,
            batch: args.batch,
            iters: args.iters,
            sims: args.sims,
            clusters_per_run: args.clusters_per_run,
        },
        symmetry_threshold: args.symmetry_threshold,
        energy_kind: args.energy.into(),
        retries: args.retries,
        insertion_policy: args.insert_policy.into(),
    };
    config.validate().map_err(usage)?;
    let grid = read_any_grid(&args.input)?;
    debug!("input {:?} cells, config {config:?}", grid.dims());
    fs::create_dir_all(&args.out)
        .map_err(|e| io_failure(format!("{}: {e}", args.out.display())))?;
    let stem = file_stem(&args.input)?;

    let pool = build_pool(args.jobs)?;
    let runs: Vec<Result<(VoxelGrid, Vec<StepLog>), Error>> = pool.install(|| {
        (0..args.count)
            .into_par_iter()
            .map(|k| augment(&grid, &config, args.seed.wrapping_add(k as u64)))
            .collect()
    });

    let mut outputs = Vec::with_capacity(args.count);
    let mut all_logs = Vec::with_capacity(args.count);
    for (k, run) in runs.into_iter().enumerate() {
        let (out_grid, logs) = run.map_err(|e| run_failure(format!("variant {k}: {e}")))?;
        let file = format!("{stem}_aug{k}.vgrid");
        let path = args.out.join(&file);
        write_grid(&out_grid, &path).map_err(|e| io_failure(format!("{}: {e}", path.display())))?;
        info!(
            "wrote {} ({:?}, {} steps)",
            path.display(),
            out_grid.dims(),
            logs.len()
        );
        outputs.push(OutputEntry {
            file,
            seed: args.seed.wrapping_add(k as u64),
            dims: out_grid.dims(),
            steps: Some(logs.iter().map(StepSummary::from).collect()),
            scale_factors: None,
            warp: None,
        });
        all_logs.push(logs);
    }

    if args.steps {
        let path = args.out.join("steps.jsonl");
        let mut body = String::new();
        for (k, logs) in all_logs.iter().enumerate() {
            for (s, log) in logs.iter().enumerate() {
                let record = StepRecord {
                    output: k,
                    seed: args.seed.wrapping_add(k as u64),
                    step: s,
                    log,
                };
                body.push_str(
                    &serde_json::to_string(&record)
                        .map_err(|e| run_failure(format!("cannot serialize step log: {e}")))?,
                );
                body.push('\n');
            }
        }
        fs::write(&path, body).map_err(|e| io_failure(format!("{}: {e}", path.display())))?;
        info!("wrote {}", path.display());
    }

    write_manifest(
        &args.out,
        &RunManifest {
            tool: manifest::TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command: "augment",
            input: args.input.display().to_string(),
            out_dir: args.out.display().to_string(),
            count: args.count,
            base_seed: args.seed,
            config: Some(config),
            baseline: None,
            outputs,
        },
    )
}

fn cmd_baseline(args: BaselineArgs) -> CmdResult {
    if args.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    if args.method == BaselineMethod::Warp {
        // Surface bad warp settings as usage errors before any work.
        sample_warp(
            &mut ChaCha8Rng::seed_from_u64(0),
            args.sigma,
            args.intervals,
        )
        .map_err(usage)?;
    }
    let grid = read_any_grid(&args.input)?;
    fs::create_dir_all(&args.out)
        .map_err(|e| io_failure(format!("{}: {e}", args.out.display())))?;
    let stem = file_stem(&args.input)?;

    enum Applied {
        Scale([f64; 3]),
        Warp(carve3d::WarpSpec),
    }

    let pool = build_pool(args.jobs)?;
    let runs: Vec<Result<(VoxelGrid, Applied), Error>> = pool.install(|| {
        (0..args.count)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(k as u64));
                match args.method {
                    BaselineMethod::Scale => {
                        let factors = sample_scale_factors(&mut rng);
                        axis_scale(&grid, factors).map(|g| (g, Applied::Scale(factors)))
                    }
                    BaselineMethod::Warp => {
                        let spec = sample_warp(&mut rng, args.sigma, args.intervals)?;
                        let out = piecewise_warp(&grid, &spec);
                        Ok((out, Applied::Warp(spec)))
                    }
                }
            })
            .collect()
    });

    let mut outputs = Vec::with_capacity(args.count);
    for (k, run) in runs.into_iter().enumerate() {
        let (out_grid, applied) = run.map_err(|e| run_failure(format!("variant {k}: {e}")))?;
        let file = format!("{stem}_aug{k}.vgrid");
        let path = args.out.join(&file);
        write_grid(&out_grid, &path).map_err(|e| io_failure(format!("{}: {e}", path.display())))?;
        info!("wrote {} ({:?})", path.display(), out_grid.dims());
        let (scale_factors, warp) = match applied {
            Applied::Scale(f) => (Some(f), None),
            Applied::Warp(spec) => (None, Some(spec)),
        };
        outputs.push(OutputEntry {
            file,
            seed: args.seed.wrapping_add(k as u64),
            dims: out_grid.dims(),
            steps: None,
            scale_factors,
            warp,
        });
    }

    write_manifest(
        &args.out,
        &RunManifest {
            tool: manifest::TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command: "baseline",
            input: args.input.display().to_string(),
            out_dir: args.out.display().to_string(),
            count: args.count,
            base_seed: args.seed,
            config: None,
            baseline: Some(BaselineSettings {
                method: match args.method {
                    BaselineMethod::Scale => "scale",
                    BaselineMethod::Warp => "warp",
                },
                sigma: (args.method == BaselineMethod::Warp).then_some(args.sigma),
                intervals: (args.method == BaselineMethod::Warp).then_some(args.intervals),
            }),
            outputs,
        },
    )
}

fn cmd_info(args: InfoArgs) -> CmdResult {
    let grid = read_any_grid(&args.input)?;
    let field = compute_energy(&grid, EnergyKind::default());
    let rates: Vec<f64> = Axis::ALL
        .iter()
        .map(|&axis| mismatch_rate(&grid, axis))
        .collect();
    let report = serde_json::json!({
        "path": args.input.display().to_string(),
        "dims": grid.dims(),
        "kind": match grid.kind() {
            GridKind::Occupancy => "occupancy",
            GridKind::Scalar => "scalar",
        },
        "trunc": grid.trunc(),
        "occupied": grid.occupied_count(),
        "mean_energy": mean_energy(&field),
        "mismatch_rates": { "x": rates[0], "y": rates[1], "z": rates[2] },
        "symmetric_axes": symmetric_axes(&grid, carve3d::symmetry::SYMMETRY_THRESHOLD),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(())
}

fn cmd_convert(args: ConvertArgs) -> CmdResult {
    let bytes =
        fs::read(&args.input).map_err(|e| io_failure(format!("{}: {e}", args.input.display())))?;
    if bytes.starts_with(b"VGRD") {
        let grid = decode_grid(&bytes)
            .map_err(|e| io_failure(format!("{}: {e}", args.input.display())))?;
        fs::write(&args.output, text::encode_text(&grid))
            .map_err(|e| io_failure(format!("{}: {e}", args.output.display())))?;
    } else {
        let textual = String::from_utf8(bytes).map_err(|_| {
            io_failure(format!(
                "{}: neither binary nor UTF-8 text",
                args.input.display()
            ))
        })?;
        let grid = text::decode_text(&textual)
            .map_err(|e| io_failure(format!("{}: {e}", args.input.display())))?;
        fs::write(&args.output, encode_grid(&grid))
            .map_err(|e| io_failure(format!("{}: {e}", args.output.display())))?;
    }
    info!("wrote {}", args.output.display());
    Ok(())
}

fn cmd_export_obj(args: ExportObjArgs) -> CmdResult {
    let grid = read_any_grid(&args.input)?;
    let stats = export_obj(&grid, &args.output)
        .map_err(|e| io_failure(format!("{}: {e}", args.output.display())))?;
    println!(
        "{}",
        serde_json::json!({
            "path": args.output.display().to_string(),
            "vertices": stats.vertices,
            "faces": stats.faces,
        })
    );
    Ok(())
}

fn cmd_gen(args: GenArgs) -> CmdResult {
    let need = |opt: Option<usize>, flag: &str| {
        opt.ok_or_else(|| usage(format!("--{flag} is required for this shape")))
    };
    let need_extents = |opt: &Option<Vec<usize>>| -> Result<[usize; 3], Failure> {
        match opt.as_deref() {
            Some([a, b, c]) => Ok([*a, *b, *c]),
            Some(other) => Err(usage(format!(
                "--extents needs exactly three values, got {}",
                other.len()
            ))),
            None => Err(usage("--extents is required for this shape")),
        }
    };
    let grid = match args.shape {
        ShapeArg::BoxTsdf => {
            make_box_tsdf(args.side, need_extents(&args.extents)?, args.tau).map_err(usage)?
        }
        _ => {
            let kind = match args.shape {
                ShapeArg::Box => ShapeKind::Box {
                    extents: need_extents(&args.extents)?,
                },
                ShapeArg::Cylinder => ShapeKind::Cylinder {
                    radius: need(args.radius, "radius")?,
                    height: need(args.height, "height")?,
                },
                ShapeArg::Sphere => ShapeKind::Sphere {
                    radius: need(args.radius, "radius")?,
                },
                ShapeArg::LBracket => ShapeKind::LBracket {
                    extents: need_extents(&args.extents)?,
                    thickness: need(args.thickness, "thickness")?,
                },
                ShapeArg::Cup => ShapeKind::Cup {
                    radius: need(args.radius, "radius")?,
                    height: need(args.height, "height")?,
                    thickness: need(args.thickness, "thickness")?,
                },
                ShapeArg::BoxTsdf => unreachable!("handled above"),
            };
            make_shape(&ShapeSpec {
                side: args.side,
                kind,
            })
            .map_err(usage)?
        }
    };
    write_grid(&grid, &args.out).map_err(|e| io_failure(format!("{}: {e}", args.out.display())))?;
    info!(
        "wrote {} ({:?}, {} occupied)",
        args.out.display(),
        grid.dims(),
        grid.occupied_count()
    );
    Ok(())
}
