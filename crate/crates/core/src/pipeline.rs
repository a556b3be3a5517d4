//! End-to-end orchestration: phantom generation, skeletonization, labeling,
//! reconnection and evaluation, with file-based interchange between stages.
//!
//! Every stage that writes files also writes a `manifest.json` holding the
//! configuration, SHA-256 digests of its inputs and the tool version.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{distance_mm, l2, to_mm, voxel_to_f64};
use crate::grouping::{labeling_accuracy, propagate_labels, remove_false_positives, GroupingConfig};
use crate::metrics::{evaluate_polylines, EvalConfig, ExtractedLine, MatchMode, MatchRule, OverlapReport};
use crate::pathfind::{connect_segments_with, write_paths, CenterlinePath, ConnectOptions, Connection};
use crate::phantom::{
    corrupt, generate_tree, read_centerlines, Centerline, CorruptionReport, CorruptionSpec, TreeParams, VesselPhantom,
};
use crate::skeleton::{resample, thin, SkeletonPointSet, FALSE_POSITIVE};
use crate::volume::{
    build_cost_map, build_heatmap, nearest_centerline_field, read_mask, read_scalar, write_volume, HeatmapParams, Mask,
    ScalarVolume, Volume, VolumeHeader,
};

pub const TOOL_NAME: &str = "vessel-centerline";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub lambda: f64,
    pub k: usize,
    pub resample_n: usize,
    pub low_value: f64,
    pub combine_skeleton_value: f64,
    pub match_threshold_mm: f64,
    pub clinical_radius_mm: f64,
    pub rng_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lambda: 0.3,
            k: 8,
            resample_n: 3000,
            low_value: 0.05,
            combine_skeleton_value: 2.0,
            match_threshold_mm: 1.0,
            clinical_radius_mm: 0.75,
            rng_seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.grouping().validate()?;
        self.heatmap().validate()?;
        if self.resample_n == 0 {
            return Err(Error::Config("resample_n must be at least 1".into()));
        }
        if self.match_threshold_mm.is_nan() || self.match_threshold_mm < 0.0 {
            return Err(Error::Config("match_threshold_mm must be >= 0".into()));
        }
        if self.clinical_radius_mm.is_nan() || self.clinical_radius_mm < 0.0 {
            return Err(Error::Config("clinical_radius_mm must be >= 0".into()));
        }
        Ok(())
    }

    pub fn grouping(&self) -> GroupingConfig {
        GroupingConfig {
            lambda: self.lambda,
            k: self.k,
            seeds: Vec::new(),
        }
    }

    pub fn heatmap(&self) -> HeatmapParams {
        HeatmapParams {
            low_value: self.low_value,
            combine_skeleton_value: self.combine_skeleton_value,
        }
    }

    pub fn eval(&self) -> EvalConfig {
        EvalConfig {
            rule: MatchRule::FixedMm(self.match_threshold_mm),
            clinical_radius_mm: self.clinical_radius_mm,
            mode: MatchMode::Auto,
        }
    }

    /// Independent sub-seeds derived from the single configured seed.
    pub fn sub_seed(&self, stream: u64) -> u64 {
        self.rng_seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
    }
}

pub const SEED_TREE: u64 = 1;
pub const SEED_CORRUPTION: u64 = 2;
pub const SEED_RESAMPLE: u64 = 3;

/// A seed location in voxel coordinates and its class.
pub type SeedPoint = ([f64; 3], u32);

/// One seed per ground-truth branch at its root, plus a false-positive seed
/// at the center of every injected blob.
///
/// A child branch's root is its first sample lying outside the parent's
/// lumen, so the seed lands on the child's own skeleton.
pub fn ground_truth_seeds(
    centerlines: &[Centerline],
    report: Option<&CorruptionReport>,
    spacing: [f64; 3],
) -> Vec<SeedPoint> {
    let mut seeds = Vec::new();
    for line in centerlines {
        let Some(&first) = line.points.first() else { continue };
        let parent = line.parent.and_then(|p| centerlines.iter().find(|c| c.label == p));
        let root = match parent {
            None => first,
            Some(parent) => {
                let r_own = line.radii.first().copied().unwrap_or(0.0);
                line.points
                    .iter()
                    .copied()
                    .find(|&p| {
                        parent
                            .points
                            .iter()
                            .zip(&parent.radii)
                            .all(|(&q, &rq)| distance_mm(p, q, spacing) > rq + r_own)
                    })
                    .unwrap_or(first)
            }
        };
        seeds.push((root, line.label));
    }
    if let Some(report) = report {
        for blob in &report.blobs {
            seeds.push((voxel_to_f64(blob.center), FALSE_POSITIVE));
        }
    }
    seeds
}

/// Index of the point nearest to each seed location (ties by voxel order).
pub fn snap_seeds(skel: &SkeletonPointSet, seeds: &[SeedPoint]) -> Vec<(usize, u32)> {
    if skel.is_empty() {
        return Vec::new();
    }
    seeds
        .iter()
        .map(|&(loc, label)| {
            let target = to_mm(loc, skel.spacing());
            let best = (0..skel.len())
                .min_by(|&a, &b| {
                    l2(skel.point_mm(a), target)
                        .total_cmp(&l2(skel.point_mm(b), target))
                        .then(skel.points()[a].cmp(&skel.points()[b]))
                })
                .expect("non-empty");
            (best, label)
        })
        .collect()
}

pub fn read_seeds(path: &Path) -> Result<Vec<SeedPoint>> {
    #[derive(Deserialize)]
    struct Row {
        x: f64,
        y: f64,
        z: f64,
        label: u32,
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize::<Row>()
        .map(|row| row.map(|r| ([r.x, r.y, r.z], r.label)).map_err(Error::from))
        .collect()
}

pub fn write_seeds(seeds: &[SeedPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "z", "label"])?;
    for (p, l) in seeds {
        w.write_record([p[0].to_string(), p[1].to_string(), p[2].to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Thins the mask and labels the skeleton's 26-connected components.
pub fn skeletonize(mask: &Mask) -> SkeletonPointSet {
    SkeletonPointSet::from_mask(&thin(mask))
}

/// Labels a full skeleton: resample to `resample_n` points, propagate the
/// seeds over the geometry-aware graph, then copy each component's label
/// back to every point of that component.
pub fn label_skeleton(skel: &SkeletonPointSet, seeds: &[SeedPoint], cfg: &PipelineConfig) -> Result<SkeletonPointSet> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(Error::UnlabeledProblem);
    }
    if skel.is_empty() {
        return Ok(skel.clone());
    }
    let sample = resample(skel, cfg.resample_n, cfg.sub_seed(SEED_RESAMPLE));
    let grouping = cfg.grouping().with_seeds(snap_seeds(&sample, seeds));
    let labeled = propagate_labels(&sample, &grouping)?;
    let mut by_component: BTreeMap<u32, Option<u32>> = BTreeMap::new();
    for (&c, &l) in labeled.component_ids().iter().zip(labeled.labels()) {
        by_component.insert(c, l);
    }
    let labels = skel
        .component_ids()
        .iter()
        .map(|c| by_component.get(c).copied().flatten())
        .collect();
    skel.clone().with_labels(labels)
}

/// Heatmap computed from reference centerlines instead of a regression net.
pub fn analytic_heatmap(
    dims: [usize; 3],
    spacing: [f64; 3],
    centerlines: &[Centerline],
    params: &HeatmapParams,
) -> Result<ScalarVolume> {
    let polylines: Vec<Vec<[f64; 3]>> = centerlines.iter().map(|c| c.points.clone()).collect();
    let field = nearest_centerline_field(dims, spacing, &polylines)?;
    let radius: Vec<f32> = field
        .nearest
        .iter()
        .map(|&(l, i)| centerlines[l as usize].radii.get(i as usize).copied().unwrap_or(0.0) as f32)
        .collect();
    let radius = Volume::from_vec(dims, spacing, radius)?;
    build_heatmap(&field.distance, &radius, params)
}

/// Everything produced by one extraction run.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub skeleton: SkeletonPointSet,
    pub retained: SkeletonPointSet,
    pub connection: Connection,
}

pub fn extract(
    mask: &Mask,
    heatmap: &ScalarVolume,
    seeds: &[SeedPoint],
    cfg: &PipelineConfig,
    bridging: bool,
) -> Result<Extraction> {
    if !mask.same_grid(heatmap) {
        return Err(Error::Dimension("mask and heatmap grids differ".into()));
    }
    let skeleton = label_skeleton(&skeletonize(mask), seeds, cfg)?;
    let retained = remove_false_positives(&skeleton);
    let cost = build_cost_map(heatmap, &retained, &cfg.heatmap())?;
    let opts = ConnectOptions {
        bridging,
        skeleton_affinity: cfg.combine_skeleton_value as f32,
    };
    let connection = connect_segments_with(&retained, &cost, &opts)?;
    Ok(Extraction {
        skeleton,
        retained,
        connection,
    })
}

/// Reference label of every skeleton point: class 0 inside injected blobs,
/// otherwise the label of the nearest ground-truth sample.
pub fn ground_truth_labels(
    skel: &SkeletonPointSet,
    centerlines: &[Centerline],
    report: Option<&CorruptionReport>,
) -> Vec<Option<u32>> {
    skel.points()
        .iter()
        .map(|&v| {
            if let Some(report) = report {
                let in_blob = report.blobs.iter().any(|b| {
                    let d2: i64 = (0..3).map(|a| ((v[a] - b.center[a]) as i64).pow(2)).sum();
                    d2 <= (b.radius_voxels as i64).pow(2)
                });
                if in_blob {
                    return Some(FALSE_POSITIVE);
                }
            }
            let p = voxel_to_f64(v);
            centerlines
                .iter()
                .flat_map(|c| c.points.iter().map(move |&q| (l2(p, q), c.label)))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(_, l)| l)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// file-level stages

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: PipelineConfig,
    #[serde(default)]
    pub parameters: serde_json::Value,
    /// File name to SHA-256 hex digest.
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, config: &PipelineConfig) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            config: config.clone(),
            parameters: serde_json::Value::Null,
            inputs: BTreeMap::new(),
        }
    }

    pub fn with_parameters<T: Serialize>(mut self, params: &T) -> Result<Self> {
        self.parameters = serde_json::to_value(params)?;
        Ok(self)
    }

    /// Records the digest of `path` (and of its `.raw` payload for volume
    /// headers), keyed by parent directory and file name.
    pub fn digest_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(input_key(path), file_digest(path)?);
        let raw = path.with_extension("raw");
        if path.extension().is_some_and(|e| e == "json") && raw.exists() {
            self.inputs.insert(input_key(&raw), file_digest(&raw)?);
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

fn input_key(path: &Path) -> String {
    let name = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned());
    match (path.parent().and_then(name), name(path)) {
        (Some(dir), Some(file)) => format!("{dir}/{file}"),
        (None, Some(file)) => file,
        _ => path.display().to_string(),
    }
}

pub fn file_digest(path: &Path) -> Result<String> {
    let digest = Sha256::digest(fs::read(path)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn read_header(path: &Path) -> Result<VolumeHeader> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomJob {
    pub tree: TreeParams,
    pub corruption: CorruptionSpec,
}

/// Generates a phantom (tree and corruption seeds derived from
/// `cfg.rng_seed`) and writes it with its corrupted mask
/// (`segmentation.json`) and the `corruption.json` sidecar.
pub fn run_phantom(job: &PhantomJob, cfg: &PipelineConfig, out: &Path) -> Result<(VesselPhantom, CorruptionReport)> {
    let tree = TreeParams {
        rng_seed: cfg.sub_seed(SEED_TREE),
        ..job.tree.clone()
    };
    let spec = CorruptionSpec {
        rng_seed: cfg.sub_seed(SEED_CORRUPTION),
        ..job.corruption.clone()
    };
    let phantom = generate_tree(&tree)?;
    let corrupted = corrupt(&phantom, &spec)?;
    fs::create_dir_all(out)?;
    phantom.write(out)?;
    write_volume(&corrupted.mask, &out.join("segmentation.json"))?;
    corrupted.report.write(&out.join("corruption.json"))?;
    Manifest::new("phantom", cfg)
        .with_parameters(&PhantomJob { tree, corruption: spec })?
        .write(out)?;
    Ok((phantom, corrupted.report))
}

pub fn run_skeletonize(mask_path: &Path, out_csv: &Path) -> Result<SkeletonPointSet> {
    let skel = skeletonize(&read_mask(mask_path)?);
    skel.write_csv(out_csv)?;
    Ok(skel)
}

/// Where seeds come from for the `label` and `extract` stages.
#[derive(Debug, Clone)]
pub enum SeedSource {
    File(PathBuf),
    /// A phantom directory: roots of its centerlines plus its blob sidecar.
    GroundTruth(PathBuf),
}

impl SeedSource {
    pub fn load(&self, spacing: [f64; 3]) -> Result<Vec<SeedPoint>> {
        match self {
            SeedSource::File(p) => read_seeds(p),
            SeedSource::GroundTruth(dir) => {
                let lines = read_centerlines(&dir.join("centerlines.json"))?;
                let sidecar = dir.join("corruption.json");
                let report = if sidecar.exists() {
                    Some(CorruptionReport::read(&sidecar)?)
                } else {
                    None
                };
                Ok(ground_truth_seeds(&lines, report.as_ref(), spacing))
            }
        }
    }

    fn inputs(&self) -> Vec<PathBuf> {
        match self {
            SeedSource::File(p) => vec![p.clone()],
            SeedSource::GroundTruth(dir) => {
                let mut v = vec![dir.join("centerlines.json")];
                if dir.join("corruption.json").exists() {
                    v.push(dir.join("corruption.json"));
                }
                v
            }
        }
    }
}

pub fn run_label(
    skeleton_csv: &Path,
    mask_header: &Path,
    seeds: &SeedSource,
    cfg: &PipelineConfig,
    out_csv: &Path,
) -> Result<SkeletonPointSet> {
    let header = read_header(mask_header)?;
    let skel = SkeletonPointSet::read_csv(skeleton_csv, header.dims, header.spacing)?;
    let labeled = label_skeleton(&skel, &seeds.load(header.spacing)?, cfg)?;
    labeled.write_csv(out_csv)?;
    Ok(labeled)
}

/// Heatmap source for `extract`.
#[derive(Debug, Clone)]
pub enum HeatmapSource {
    /// A precomputed `f32` volume.
    Volume(PathBuf),
    /// Computed analytically from a centerlines file.
    Centerlines(PathBuf),
    /// Constant `low_value`: path search falls back to plain geometry.
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub skeleton_points: usize,
    pub skeleton_components: usize,
    pub removed_false_positive_points: usize,
    pub bridges: usize,
    pub skipped_pairs: usize,
    pub paths: usize,
}

pub fn run_extract(
    mask_path: &Path,
    heatmap: &HeatmapSource,
    seeds: &SeedSource,
    cfg: &PipelineConfig,
    bridging: bool,
    out: &Path,
) -> Result<(Extraction, ExtractSummary)> {
    cfg.validate()?;
    let mask = read_mask(mask_path)?;
    let heat = match heatmap {
        HeatmapSource::Volume(p) => read_scalar(p)?,
        HeatmapSource::Centerlines(p) => {
            analytic_heatmap(mask.dims(), mask.spacing(), &read_centerlines(p)?, &cfg.heatmap())?
        }
        HeatmapSource::Flat => Volume::filled(mask.dims(), mask.spacing(), cfg.low_value as f32)?,
    };
    let seed_points = seeds.load(mask.spacing())?;
    let result = extract(&mask, &heat, &seed_points, cfg, bridging)?;
    let summary = ExtractSummary {
        skeleton_points: result.skeleton.len(),
        skeleton_components: result.skeleton.component_count(),
        removed_false_positive_points: result.skeleton.len() - result.retained.len(),
        bridges: result.connection.bridges.len(),
        skipped_pairs: result.connection.skipped.len(),
        paths: result.connection.paths.len(),
    };

    fs::create_dir_all(out)?;
    result.skeleton.write_csv(&out.join("skeleton.csv"))?;
    write_paths(&result.connection.paths, &out.join("centerlines.json"))?;
    fs::write(
        out.join("bridges.json"),
        serde_json::to_string_pretty(&result.connection.bridges)?,
    )?;
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    crate::pathfind::write_vtk(&result.connection.paths, mask.spacing(), &out.join("centerlines.vtk"))?;

    let mut manifest = Manifest::new("extract", cfg).with_parameters(&serde_json::json!({ "bridging": bridging }))?;
    manifest.digest_input(mask_path)?;
    match heatmap {
        HeatmapSource::Volume(p) | HeatmapSource::Centerlines(p) => manifest.digest_input(p)?,
        HeatmapSource::Flat => {}
    }
    for p in seeds.inputs() {
        manifest.digest_input(&p)?;
    }
    manifest.write(out)?;
    Ok((result, summary))
}

/// Reads polylines to score: either extracted paths or a ground-truth
/// centerlines file (for self-evaluation).
pub fn read_extracted(path: &Path) -> Result<Vec<ExtractedLine>> {
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let is_reference = value
        .as_array()
        .and_then(|a| a.first())
        .is_some_and(|first| first.get("bridged_spans").is_none());
    if is_reference {
        let lines: Vec<Centerline> = serde_json::from_value(value)?;
        return Ok(lines
            .into_iter()
            .map(|c| ExtractedLine {
                label: Some(c.label),
                points: c.points,
            })
            .collect());
    }
    let paths: Vec<CenterlinePath> = serde_json::from_value(value)?;
    Ok(paths
        .into_iter()
        .map(|p| ExtractedLine {
            label: p.label,
            points: p.points.iter().map(|&v| voxel_to_f64(v)).collect(),
        })
        .collect())
}

/// Scores extracted centerlines against a phantom directory's ground truth.
pub fn run_evaluate(phantom_dir: &Path, extracted: &Path, cfg: &PipelineConfig, out: &Path) -> Result<OverlapReport> {
    cfg.validate()?;
    let header = read_header(&phantom_dir.join("mask.json"))?;
    let reference = read_centerlines(&phantom_dir.join("centerlines.json"))?;
    let lines = read_extracted(extracted)?;
    let report = evaluate_polylines(&reference, &lines, header.spacing, &cfg.eval())?;
    fs::create_dir_all(out)?;
    report.write(&out.join("report.json"), &out.join("report.txt"))?;
    let mut manifest = Manifest::new("evaluate", cfg);
    manifest.digest_input(&phantom_dir.join("centerlines.json"))?;
    manifest.digest_input(extracted)?;
    manifest.write(out)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAllSummary {
    pub extraction: ExtractSummary,
    pub labeling_accuracy: f64,
    pub report: OverlapReport,
}

/// phantom -> extract (ground-truth seeds, analytic heatmap) -> evaluate.
pub fn run_all(job: &PhantomJob, cfg: &PipelineConfig, bridging: bool, out: &Path) -> Result<RunAllSummary> {
    cfg.validate()?;
    let phantom_dir = out.join("phantom");
    let extract_dir = out.join("extract");
    let eval_dir = out.join("evaluate");
    let (phantom, report) = run_phantom(job, cfg, &phantom_dir)?;
    let (extraction, summary) = run_extract(
        &phantom_dir.join("segmentation.json"),
        &HeatmapSource::Centerlines(phantom_dir.join("centerlines.json")),
        &SeedSource::GroundTruth(phantom_dir.clone()),
        cfg,
        bridging,
        &extract_dir,
    )?;
    let overlap = run_evaluate(&phantom_dir, &extract_dir.join("centerlines.json"), cfg, &eval_dir)?;
    let truth = ground_truth_labels(&extraction.skeleton, &phantom.centerlines, Some(&report));
    let accuracy = labeling_accuracy(extraction.skeleton.labels(), &truth)?;
    let all = RunAllSummary {
        extraction: summary,
        labeling_accuracy: accuracy,
        report: overlap,
    };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&all)?)?;
    Manifest::new("run-all", cfg)
        .with_parameters(&serde_json::json!({ "job": job, "bridging": bridging }))?
        .write(out)?;
    Ok(all)
}
