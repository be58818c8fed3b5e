//! Pipeline driver for the prosplat toolkit.
//!
//! Every subcommand is a thin shell over library calls: load a scene, run
//! one stage, write deterministic artifacts. Errors print as one JSON object
//! on stderr (`{"error": <kind>, "message": <text>}`) with exit status 1.
//! The environment variable `PROSPLAT_THREADS` caps the worker pool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use prosplat::attention::{
    epipolar_cross_attention, fuse_and_inject, AttentionConfig, DenoisingBackend, IdentityBackend,
    NormScope, ProjectionWeights,
};
use prosplat::error::{Error, Result};
use prosplat::geometry::{epipolar_distance_map, DistanceMapOptions, FundamentalForm};
use prosplat::metrics::{psnr, ssim};
use prosplat::scene::{
    curate_pairs, generate_scene, load_image, load_mask, load_primitives, load_scene_manifest,
    save_image, SceneManifest, SyntheticConfig,
};
use prosplat::select::{score_candidates, select_reference, SelectionConfig};
use prosplat::splat::{render_view, RenderSettings};
use prosplat::sweep::{build_cost_volume, sample_depth_candidates, DepthSpacing};
use prosplat::FeatureGrid;

#[derive(Parser)]
#[command(name = "prosplat", version, about = "Wide-baseline novel-view synthesis pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic scene (manifest, poses, images,
    /// primitives).
    Synth(SynthArgs),
    /// Rasterize the scene's primitives into every target view.
    Render(RenderArgs),
    /// Score every input view against every target and pick references.
    SelectRef(SelectRefArgs),
    /// Export epipolar distance maps (target center cell vs. the chosen
    /// reference view) as grayscale PNGs.
    Epimap(EpimapArgs),
    /// Build plane-sweep cost volumes over each input view and export the
    /// depth slices as grayscale PNGs.
    Costvol(CostvolArgs),
    /// Run distance-modulated cross attention per target and write the
    /// enhanced latents as pseudo-images.
    Fuse(FuseArgs),
    /// Compare rendered target views against ground truth (PSNR/SSIM JSON).
    Eval(EvalArgs),
    /// Select curated target/reference pairs and write their records.
    Curate(CurateArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory (created if absent).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    width: u32,
    #[arg(long, default_value_t = 48)]
    height: u32,
    /// Total number of views (inputs + targets).
    #[arg(long, default_value_t = 3)]
    views: usize,
    /// Number of Gaussian primitives in the cloud.
    #[arg(long, default_value_t = 40)]
    primitives: usize,
}

#[derive(Args)]
struct RenderArgs {
    /// Scene manifest path.
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Spherical-harmonics truncation degree (0..=3).
    #[arg(long, default_value_t = 0)]
    sh_degree: usize,
}

#[derive(Args)]
struct SelectRefArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EpimapArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Downsampling factor from image to feature grid (1, 2, 4, or 8).
    #[arg(long, default_value_t = 8)]
    latent_scale: usize,
    /// Evaluate the alternative (left-inverse) fundamental-matrix form.
    #[arg(long)]
    literal_fmatrix: bool,
}

#[derive(Args)]
struct CostvolArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Number of inverse-depth candidates between the manifest's near/far.
    #[arg(long, default_value_t = 8)]
    depth_candidates: usize,
    /// Downsampling factor from image to feature grid (1, 2, 4, or 8).
    #[arg(long, default_value_t = 8)]
    latent_scale: usize,
}

#[derive(Args)]
struct FuseArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Downsampling factor from image to feature grid (1, 2, 4, or 8).
    #[arg(long, default_value_t = 8)]
    latent_scale: usize,
    /// Skip the row softmax on raw attention scores.
    #[arg(long)]
    no_softmax: bool,
    /// Skip the logistic gate on modulated attention weights.
    #[arg(long)]
    no_sigmoid: bool,
    /// Evaluate the alternative (left-inverse) fundamental-matrix form.
    #[arg(long)]
    literal_fmatrix: bool,
    /// Seed for the deterministic projection weights.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Directory holding rendered target views (`view_NNNN.png`).
    #[arg(long)]
    renders: PathBuf,
    /// Output JSON report path.
    #[arg(long)]
    out: PathBuf,
    /// Optional mask image restricting both metrics.
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args)]
struct CurateArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Directory holding rendered target views (`view_NNNN.png`).
    #[arg(long)]
    renders: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_thread_pool();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}

fn init_thread_pool() {
    if let Some(n) = std::env::var("PROSPLAT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // Ignore failure: the pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => cmd_synth(a),
        Command::Render(a) => cmd_render(a),
        Command::SelectRef(a) => cmd_select_ref(a),
        Command::Epimap(a) => cmd_epimap(a),
        Command::Costvol(a) => cmd_costvol(a),
        Command::Fuse(a) => cmd_fuse(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Curate(a) => cmd_curate(a),
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

/// Global-index reference view for a target: the input with the highest
/// overlap score.
fn reference_for_target(scene: &SceneManifest, target: usize) -> Result<usize> {
    let (winner, _) = select_reference(
        &scene.views[target].camera,
        &scene.input_cameras(),
        &SelectionConfig::default(),
    )?;
    Ok(scene.input_indices[winner])
}

fn latent_dims(scene: &SceneManifest, latent_scale: usize) -> (usize, usize) {
    (
        (scene.height as usize / latent_scale).max(1),
        (scene.width as usize / latent_scale).max(1),
    )
}

/// Ground-truth image of a view, resampled to latent resolution.
fn load_latent(scene: &SceneManifest, view: usize, dims: (usize, usize)) -> Result<FeatureGrid> {
    let image = load_image(&scene.views[view].image_path)?;
    if image.dims() == dims {
        return Ok(image);
    }
    Ok(image.resample_bilinear(dims.0, dims.1))
}

/// Min-max rescale to [0, 1] for visualization; constant grids become zeros.
fn normalize_unit(grid: &FeatureGrid) -> FeatureGrid {
    let Some((lo, hi)) = grid.min_max() else {
        return grid.clone();
    };
    let span = hi - lo;
    let mut out = grid.clone();
    for v in out.data_mut() {
        *v = if span == 0.0 { 0.0 } else { (*v - lo) / span };
    }
    out
}

fn fundamental_form(literal: bool) -> FundamentalForm {
    if literal { FundamentalForm::Literal } else { FundamentalForm::Validated }
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    ensure_dir(&args.out)?;
    let cfg = SyntheticConfig {
        seed: args.seed,
        width: args.width,
        height: args.height,
        view_count: args.views,
        primitive_count: args.primitives,
        ..SyntheticConfig::default()
    };
    let manifest = generate_scene(&args.out, &cfg)?;
    println!("{}", manifest.display());
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<()> {
    let scene = load_scene_manifest(&args.scene)?;
    let primitives_path = scene.primitives_path.clone().ok_or_else(|| Error::MissingFile {
        path: args.scene.with_file_name("primitives.json"),
    })?;
    let primitives = load_primitives(&primitives_path)?;
    ensure_dir(&args.out)?;
    let settings = RenderSettings { sh_degree: args.sh_degree, ..RenderSettings::default() };
    for &t in &scene.target_indices {
        let frame = render_view(&primitives, &scene.views[t].camera, &settings)?;
        save_image(&frame.to_grid(), &args.out.join(format!("view_{t:04}.png")))?;
    }
    println!("rendered {} target views", scene.target_indices.len());
    Ok(())
}

fn cmd_select_ref(args: SelectRefArgs) -> Result<()> {
    let scene = load_scene_manifest(&args.scene)?;
    let inputs = scene.input_cameras();
    ensure_dir(&args.out)?;
    let mut tsv = String::from("target_index\tinput_index\tdist\tangle\tscore\tselected\n");
    let cfg = SelectionConfig::default();
    for &t in &scene.target_indices {
        let scores = score_candidates(&scene.views[t].camera, &inputs, &cfg);
        let (winner, _) = select_reference(&scene.views[t].camera, &inputs, &cfg)?;
        for s in &scores {
            tsv.push_str(&format!(
                "{t}\t{}\t{}\t{}\t{}\t{}\n",
                scene.input_indices[s.view_index],
                s.dist,
                s.angle,
                s.score,
                u8::from(s.view_index == winner),
            ));
        }
    }
    let path = args.out.join("mori.tsv");
    write_text(&path, &tsv)?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_epimap(args: EpimapArgs) -> Result<()> {
    let scene = load_scene_manifest(&args.scene)?;
    ensure_dir(&args.out)?;
    let dims = latent_dims(&scene, args.latent_scale);
    let options = DistanceMapOptions {
        form: fundamental_form(args.literal_fmatrix),
        sentinel: None,
    };
    for &t in &scene.target_indices {
        let reference = reference_for_target(&scene, t)?;
        let dmap = epipolar_distance_map(
            &scene.views[t].camera,
            &scene.views[reference].camera,
            dims,
            dims,
            options,
        )?;
        // Visualize the center target cell's distance row over the
        // reference grid.
        let center = (dims.0 / 2) * dims.1 + dims.1 / 2;
        let row = dmap.row(center);
        let grid = FeatureGrid::from_vec(dims.0, dims.1, 1, row.to_vec())?;
        save_image(&normalize_unit(&grid), &args.out.join(format!("epimap_{t:04}.png")))?;
    }
    println!("wrote {} distance maps", scene.target_indices.len());
    Ok(())
}

fn cmd_costvol(args: CostvolArgs) -> Result<()> {
    let scene = load_scene_manifest(&args.scene)?;
    ensure_dir(&args.out)?;
    let dims = latent_dims(&scene, args.latent_scale);
    let depths = sample_depth_candidates(
        scene.near,
        scene.far,
        args.depth_candidates,
        DepthSpacing::InverseDepth,
    )?;
    let features: Vec<FeatureGrid> = scene
        .input_indices
        .iter()
        .map(|&i| load_latent(&scene, i, dims))
        .collect::<Result<_>>()?;
    let mut slices = 0usize;
    for (pos, &i) in scene.input_indices.iter().enumerate() {
        let others: Vec<(&FeatureGrid, &prosplat::geometry::CameraView)> = scene
            .input_indices
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != pos)
            .map(|(q, &view)| (&features[q], &scene.views[view].camera))
            .collect();
        let volume = build_cost_volume(&features[pos], &scene.views[i].camera, &others, &depths)?;
        // One normalization per volume keeps its slices comparable.
        let (lo, hi) = volume
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        for m in 0..volume.depth_count() {
            let mut slice = volume.slice(m);
            for v in slice.data_mut() {
                *v = (*v - lo) / span;
            }
            save_image(&slice, &args.out.join(format!("costvol_{i:04}_d{m:02}.png")))?;
            slices += 1;
        }
    }
    println!("wrote {slices} cost-volume slices");
    Ok(())
}

fn cmd_fuse(args: FuseArgs) -> Result<()> {
    let scene = load_scene_manifest(&args.scene)?;
    ensure_dir(&args.out)?;
    let dims = latent_dims(&scene, args.latent_scale);
    // Latents are RGB images here, so channels = 3; dk = 3 keeps the
    // attention output addable to the target latent by the default backend.
    let weights = ProjectionWeights::seeded(3, 3, args.seed);
    weights.save(&args.out.join("weights.pswb"))?;
    let config = AttentionConfig {
        dk: 3,
        apply_softmax: !args.no_softmax,
        apply_sigmoid: !args.no_sigmoid,
        latent_scale: args.latent_scale,
        norm_scope: NormScope::PerRow,
    };
    config.validate()?;
    let options = DistanceMapOptions {
        form: fundamental_form(args.literal_fmatrix),
        sentinel: None,
    };
    for &t in &scene.target_indices {
        let reference = reference_for_target(&scene, t)?;
        let target_latent = load_latent(&scene, t, dims)?;
        let reference_latent = load_latent(&scene, reference, dims)?;
        let dmap = epipolar_distance_map(
            &scene.views[t].camera,
            &scene.views[reference].camera,
            dims,
            dims,
            options,
        )?;
        let attended =
            epipolar_cross_attention(&target_latent, &reference_latent, &dmap, &weights, &config)?;
        let injections = fuse_and_inject(&attended, &weights)?;
        let enhanced = IdentityBackend.enhance(&target_latent, &injections, 0)?;
        save_image(&normalize_unit(&enhanced), &args.out.join(format!("fused_{t:04}.png")))?;
    }
    println!("fused {} target views", scene.target_indices.len());
    Ok(())
}

#[derive(Serialize)]
struct ViewReport {
    view_index: usize,
    /// Absent when the images are identical (infinite ratio).
    psnr_db: Option<f64>,
    psnr_infinite: bool,
    ssim: f64,
}

#[derive(Serialize)]
struct EvalAggregate {
    /// Mean over finite entries only; absent when none are finite.
    psnr_db_mean_finite: Option<f64>,
    infinite_psnr_count: usize,
    ssim_mean: f64,
}

#[derive(Serialize)]
struct EvalReport {
    scene_id: String,
    max_value: f64,
    views: Vec<ViewReport>,
    aggregate: EvalAggregate,
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let scene = load_scene_manifest(&args.scene)?;
    let mask = args.mask.as_deref().map(load_mask).transpose()?;
    let mut views = Vec::new();
    for &t in &scene.target_indices {
        let rendered_path = args.renders.join(format!("view_{t:04}.png"));
        if !rendered_path.exists() {
            return Err(Error::MissingFile { path: rendered_path });
        }
        let rendered = load_image(&rendered_path)?;
        let truth = load_image(&scene.views[t].image_path)?;
        let p = psnr(&rendered, &truth, 1.0, mask.as_ref())?;
        let s = ssim(&rendered, &truth, 1.0, mask.as_ref())?;
        views.push(ViewReport {
            view_index: t,
            psnr_db: p.is_finite().then_some(p),
            psnr_infinite: p.is_infinite(),
            ssim: s,
        });
    }
    if views.is_empty() {
        return Err(Error::NoTargets);
    }
    let finite: Vec<f64> = views.iter().filter_map(|v| v.psnr_db).collect();
    let aggregate = EvalAggregate {
        psnr_db_mean_finite: (!finite.is_empty())
            .then(|| finite.iter().sum::<f64>() / finite.len() as f64),
        infinite_psnr_count: views.iter().filter(|v| v.psnr_infinite).count(),
        ssim_mean: views.iter().map(|v| v.ssim).sum::<f64>() / views.len() as f64,
    };
    let report = EvalReport { scene_id: scene.scene_id.clone(), max_value: 1.0, views, aggregate };
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    write_text(&args.out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    println!("{}", args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct CameraRecord {
    width: u32,
    height: u32,
    /// fx, fy, cx, cy normalized by image width/height.
    intrinsics_normalized: [f64; 4],
    /// World-to-camera rotation rows.
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl CameraRecord {
    fn from_view(view: &prosplat::geometry::CameraView) -> Self {
        let k = &view.intrinsics;
        let r = view.extrinsics.rotation();
        let t = view.extrinsics.translation();
        CameraRecord {
            width: k.width(),
            height: k.height(),
            intrinsics_normalized: [
                k.fx() / k.width() as f64,
                k.fy() / k.height() as f64,
                k.cx() / k.width() as f64,
                k.cy() / k.height() as f64,
            ],
            rotation: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            translation: [t.x, t.y, t.z],
        }
    }
}

#[derive(Serialize)]
struct PairRecord {
    target_index: usize,
    reference_index: usize,
    /// File names (rendered lives under the `--renders` dir, ground truth
    /// next to the manifest).
    rendered: String,
    ground_truth: String,
    target_camera: CameraRecord,
    reference_camera: CameraRecord,
}

#[derive(Serialize)]
struct CurationReport {
    scene_id: String,
    below_range: bool,
    pairs: Vec<PairRecord>,
}

fn cmd_curate(args: CurateArgs) -> Result<()> {
    let scene = load_scene_manifest(&args.scene)?;
    let result = curate_pairs(&scene, &args.renders, &SelectionConfig::default())?;
    for pair in &result.pairs {
        if !pair.rendered_path.exists() {
            return Err(Error::MissingFile { path: pair.rendered_path.clone() });
        }
    }
    ensure_dir(&args.out)?;
    let file_name = |p: &Path| {
        p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
    };
    let pairs = result
        .pairs
        .iter()
        .map(|p| PairRecord {
            target_index: p.target_index,
            reference_index: p.reference_index,
            rendered: file_name(&p.rendered_path),
            ground_truth: file_name(&p.ground_truth_path),
            target_camera: CameraRecord::from_view(&p.target_camera),
            reference_camera: CameraRecord::from_view(&p.reference_camera),
        })
        .collect();
    let report = CurationReport {
        scene_id: scene.scene_id.clone(),
        below_range: result.below_range,
        pairs,
    };
    let path = args.out.join("curated_pairs.json");
    write_text(&path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    println!("{}", path.display());
    Ok(())
}
