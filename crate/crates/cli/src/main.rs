use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use vessel_centerline::phantom::{CorruptionSpec, TreeParams};
use vessel_centerline::pipeline::{
    run_all, run_evaluate, run_extract, run_label, run_phantom, run_skeletonize, HeatmapSource, Manifest, PhantomJob,
    PipelineConfig, SeedSource,
};
use vessel_centerline::Error;

#[derive(Parser)]
#[command(
    name = "vessel-centerline",
    version,
    about = "Vessel centerline extraction from binary segmentation masks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic vessel tree, optionally corrupted.
    Phantom {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        phantom: PhantomArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Thin a mask to a labeled-component skeleton CSV.
    Skeletonize {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Propagate seed labels over a skeleton.
    Label {
        #[arg(long)]
        skeleton: PathBuf,
        /// Volume header giving the skeleton's grid.
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        seeds: SeedArgs,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Skeletonize, label, reconnect and trace centerlines.
    Extract {
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        seeds: SeedArgs,
        /// Precomputed f32 heatmap volume.
        #[arg(long, conflicts_with = "reference")]
        heatmap: Option<PathBuf>,
        /// Centerlines JSON to compute the heatmap from.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        no_bridging: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score centerlines against a phantom's ground truth.
    Evaluate {
        /// Phantom directory holding mask.json and centerlines.json.
        #[arg(long)]
        phantom: PathBuf,
        #[arg(long)]
        extracted: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Phantom, extraction and evaluation in one go.
    RunAll {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        phantom: PhantomArgs,
        #[arg(long)]
        no_bridging: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Manifest or config JSON to start from; explicit flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    resample_n: Option<usize>,
    #[arg(long)]
    low_value: Option<f64>,
    #[arg(long)]
    combine_skeleton_value: Option<f64>,
    #[arg(long)]
    match_threshold_mm: Option<f64>,
    #[arg(long)]
    clinical_radius_mm: Option<f64>,
    #[arg(long)]
    rng_seed: Option<u64>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SeedArgs {
    /// Seed CSV with columns x,y,z,label.
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Phantom directory: one seed per branch root plus blob seeds.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
}

#[derive(Args)]
struct PhantomArgs {
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    spacing: Option<Vec<f64>>,
    #[arg(long)]
    branches: Option<usize>,
    #[arg(long)]
    tortuosity: Option<f64>,
    #[arg(long)]
    radius_min_mm: Option<f64>,
    #[arg(long)]
    radius_max_mm: Option<f64>,
    #[arg(long)]
    gaps: Option<usize>,
    #[arg(long)]
    gap_length_min: Option<usize>,
    #[arg(long)]
    gap_length_max: Option<usize>,
    #[arg(long)]
    blobs: Option<usize>,
    #[arg(long)]
    blob_radius_min: Option<usize>,
    #[arg(long)]
    blob_radius_max: Option<usize>,
}

fn load_base(path: Option<&Path>) -> anyhow::Result<(PipelineConfig, serde_json::Value)> {
    let Some(path) = path else {
        return Ok((PipelineConfig::default(), serde_json::Value::Null));
    };
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
    if value.get("config").is_some() {
        let m: Manifest = serde_json::from_value(value).map_err(Error::from)?;
        Ok((m.config, m.parameters))
    } else {
        Ok((
            serde_json::from_value(value).map_err(Error::from)?,
            serde_json::Value::Null,
        ))
    }
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<(PipelineConfig, serde_json::Value)> {
        let (mut c, params) = load_base(self.config.as_deref())?;
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(
            lambda,
            k,
            resample_n,
            low_value,
            combine_skeleton_value,
            match_threshold_mm,
            clinical_radius_mm,
            rng_seed
        );
        c.validate()?;
        Ok((c, params))
    }
}

impl SeedArgs {
    fn path(&self) -> &Path {
        self.seeds
            .as_deref()
            .or(self.ground_truth.as_deref())
            .expect("clap enforces one seed source")
    }

    fn source(&self) -> SeedSource {
        match (&self.seeds, &self.ground_truth) {
            (Some(p), _) => SeedSource::File(p.clone()),
            (None, Some(d)) => SeedSource::GroundTruth(d.clone()),
            (None, None) => unreachable!("clap enforces one seed source"),
        }
    }
}

impl PhantomArgs {
    fn job(&self, saved: &serde_json::Value) -> anyhow::Result<PhantomJob> {
        let saved = saved.get("job").unwrap_or(saved);
        let mut job = serde_json::from_value::<PhantomJob>(saved.clone()).unwrap_or_else(|_| PhantomJob {
            tree: TreeParams::default(),
            corruption: CorruptionSpec::default(),
        });
        let (t, c) = (&mut job.tree, &mut job.corruption);
        if let Some(d) = &self.dims {
            t.dims = triple(d, "--dims")?;
        }
        if let Some(s) = &self.spacing {
            t.spacing = triple(s, "--spacing")?;
        }
        if let Some(v) = self.branches {
            t.branch_count = v;
        }
        if let Some(v) = self.tortuosity {
            t.tortuosity = v;
        }
        if let Some(v) = self.radius_min_mm {
            t.radius_range_mm.0 = v;
        }
        if let Some(v) = self.radius_max_mm {
            t.radius_range_mm.1 = v;
        }
        if let Some(v) = self.gaps {
            c.gap_count = v;
        }
        if let Some(v) = self.gap_length_min {
            c.gap_length_voxels.0 = v;
        }
        if let Some(v) = self.gap_length_max {
            c.gap_length_voxels.1 = v;
        }
        if let Some(v) = self.blobs {
            c.fp_blob_count = v;
        }
        if let Some(v) = self.blob_radius_min {
            c.fp_blob_radius_voxels.0 = v;
        }
        if let Some(v) = self.blob_radius_max {
            c.fp_blob_radius_voxels.1 = v;
        }
        Ok(job)
    }
}

fn triple<T: Copy>(v: &[T], flag: &str) -> anyhow::Result<[T; 3]> {
    match v {
        &[a, b, c] => Ok([a, b, c]),
        _ => Err(Error::Config(format!("{flag} takes three comma-separated values, got {}", v.len())).into()),
    }
}

/// Missing inputs are reported with their path and count as I/O errors.
fn require(paths: &[&Path]) -> anyhow::Result<()> {
    for p in paths {
        if !p.exists() {
            let e = std::io::Error::new(std::io::ErrorKind::NotFound, format!("{}: no such file", p.display()));
            return Err(Error::from(e).into());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Phantom { out, phantom, config } => {
            let (cfg, saved) = config.resolve()?;
            let (p, report) = run_phantom(&phantom.job(&saved)?, &cfg, &out)?;
            println!(
                "phantom: {} branches, {} mask voxels, {} gaps, {} blobs -> {}",
                p.centerlines.len(),
                p.mask.count(),
                report.gaps.len(),
                report.blobs.len(),
                out.display()
            );
        }
        Command::Skeletonize { mask, out } => {
            require(&[&mask])?;
            let s = run_skeletonize(&mask, &out)?;
            println!(
                "skeleton: {} points, {} components -> {}",
                s.len(),
                s.component_count(),
                out.display()
            );
        }
        Command::Label {
            skeleton,
            mask,
            seeds,
            out,
            config,
        } => {
            require(&[&skeleton, &mask, seeds.path()])?;
            let (cfg, _) = config.resolve()?;
            let s = run_label(&skeleton, &mask, &seeds.source(), &cfg, &out)?;
            println!("labeled {} points -> {}", s.len(), out.display());
        }
        Command::Extract {
            mask,
            seeds,
            heatmap,
            reference,
            no_bridging,
            out,
            config,
        } => {
            require(&[&mask, seeds.path()])?;
            require(
                &[heatmap.as_deref(), reference.as_deref()]
                    .into_iter()
                    .flatten()
                    .collect::<Vec<_>>(),
            )?;
            let (cfg, _) = config.resolve()?;
            let source = seeds.source();
            let heat = match (heatmap, reference, &source) {
                (Some(h), _, _) => HeatmapSource::Volume(h),
                (None, Some(r), _) => HeatmapSource::Centerlines(r),
                (None, None, SeedSource::GroundTruth(dir)) => HeatmapSource::Centerlines(dir.join("centerlines.json")),
                (None, None, SeedSource::File(_)) => HeatmapSource::Flat,
            };
            let (_, summary) = run_extract(&mask, &heat, &source, &cfg, !no_bridging, &out)?;
            println!(
                "extract: {} skeleton points, {} false-positive points removed, {} bridges, {} paths -> {}",
                summary.skeleton_points,
                summary.removed_false_positive_points,
                summary.bridges,
                summary.paths,
                out.display()
            );
        }
        Command::Evaluate {
            phantom,
            extracted,
            out,
            config,
        } => {
            require(&[&phantom, &extracted])?;
            let (cfg, _) = config.resolve()?;
            let report = run_evaluate(&phantom, &extracted, &cfg, &out)?;
            print!("{}", report.to_table());
        }
        Command::RunAll {
            out,
            phantom,
            no_bridging,
            config,
        } => {
            let (cfg, saved) = config.resolve()?;
            let job = phantom.job(&saved)?;
            let summary =
                run_all(&job, &cfg, !no_bridging, &out).with_context(|| format!("run-all into {}", out.display()))?;
            println!("labeling accuracy: {:.3}", summary.labeling_accuracy);
            print!("{}", summary.report.to_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let input = e
                .chain()
                .any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_input_error));
            ExitCode::from(if input { 2 } else { 1 })
        }
    }
}
