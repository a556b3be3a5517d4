//! Synthetic vascular trees with ground truth, and a corruption step that
//! reproduces typical segmentation failures: missing stretches of vessel and
//! spurious blobs.

mod corrupt;
mod spline;

pub use corrupt::{corrupt, BlobRecord, Corruption, CorruptionReport, CorruptionSpec, GapRecord};
pub use spline::{polyline_length, resample_by_arc_length, sample_curve};

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance_mm, l2, to_mm};
use crate::skeleton::FALSE_POSITIVE;
use crate::volume::{nearest_centerline_field, read_mask, read_scalar, write_volume, Mask, ScalarVolume, Volume};

/// Spacing of centerline samples along each branch, in voxel units.
pub const SAMPLE_PITCH: f64 = 0.5;

const ATTEMPTS_PER_BRANCH: usize = 200;

/// One ground-truth vessel branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centerline {
    pub label: u32,
    #[serde(default)]
    pub name: String,
    /// Label of the branch this one splits from.
    #[serde(default)]
    pub parent: Option<u32>,
    /// Sample index on the parent where this branch starts.
    #[serde(default)]
    pub parent_index: Option<usize>,
    /// Samples in voxel coordinates, root to tip.
    pub points: Vec<[f64; 3]>,
    /// Lumen radius in mm at each sample.
    #[serde(default)]
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VesselPhantom {
    pub mask: Mask,
    /// Radius (mm) of the nearest centerline sample, for every voxel.
    pub radius_field: ScalarVolume,
    pub centerlines: Vec<Centerline>,
    pub labels: BTreeMap<u32, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub branch_count: usize,
    /// Control-point jitter in `[0, 1]`; 0 gives straight branches.
    pub tortuosity: f64,
    /// `(min, max)` lumen radius in mm; radii taper from max at the root.
    pub radius_range_mm: (f64, f64),
    pub rng_seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            dims: [64, 64, 64],
            spacing: [1.0, 1.0, 1.0],
            branch_count: 3,
            tortuosity: 0.3,
            radius_range_mm: (1.0, 2.5),
            rng_seed: 0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d < 16) {
            return Err(Error::Config(format!(
                "phantom dims must be at least 16^3, got {:?}",
                self.dims
            )));
        }
        if self.spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::Config(format!(
                "spacing must be positive, got {:?}",
                self.spacing
            )));
        }
        if self.branch_count == 0 {
            return Err(Error::Config("branch_count must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.tortuosity) {
            return Err(Error::Config(format!(
                "tortuosity must lie in [0, 1], got {}",
                self.tortuosity
            )));
        }
        let (lo, hi) = self.radius_range_mm;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!("invalid radius range ({lo}, {hi})")));
        }
        Ok(())
    }
}

impl VesselPhantom {
    pub fn dims(&self) -> [usize; 3] {
        self.mask.dims()
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.mask.spacing()
    }

    pub fn centerline(&self, label: u32) -> Option<&Centerline> {
        self.centerlines.iter().find(|c| c.label == label)
    }

    pub fn polylines(&self) -> Vec<Vec<[f64; 3]>> {
        self.centerlines.iter().map(|c| c.points.clone()).collect()
    }

    /// Writes `mask`, `radius` volumes plus `centerlines.json` and
    /// `labels.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_volume(&self.mask, &dir.join("mask.json"))?;
        write_volume(&self.radius_field, &dir.join("radius.json"))?;
        write_centerlines(&self.centerlines, &dir.join("centerlines.json"))?;
        fs::write(dir.join("labels.json"), serde_json::to_string_pretty(&self.labels)?)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let mask = read_mask(&dir.join("mask.json"))?;
        let radius_field = read_scalar(&dir.join("radius.json"))?;
        if !mask.same_grid(&radius_field) {
            return Err(Error::Format("mask and radius volumes differ in shape".into()));
        }
        let centerlines = read_centerlines(&dir.join("centerlines.json"))?;
        let labels = serde_json::from_str(&fs::read_to_string(dir.join("labels.json"))?)?;
        Ok(Self {
            mask,
            radius_field,
            centerlines,
            labels,
        })
    }
}

pub fn write_centerlines(lines: &[Centerline], path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(lines)?)?;
    Ok(())
}

pub fn read_centerlines(path: &Path) -> Result<Vec<Centerline>> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Allowed region for samples, keeping a radius-plus-one margin to every face.
struct Bounds {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl Bounds {
    fn new(params: &TreeParams) -> Result<Self> {
        let r = params.radius_range_mm.1;
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..3 {
            let margin = (r / params.spacing[a]).ceil() + 2.0;
            lo[a] = margin;
            hi[a] = params.dims[a] as f64 - 1.0 - margin;
            if hi[a] - lo[a] < 4.0 {
                return Err(Error::PhantomDoesNotFit(format!(
                    "radius {r} mm leaves no room along axis {a} of {:?}",
                    params.dims
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }

    fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|a| p[a].clamp(self.lo[a], self.hi[a]))
    }

    fn extent(&self, a: usize) -> f64 {
        self.hi[a] - self.lo[a]
    }

    fn random_point<R: Rng>(&self, rng: &mut R) -> [f64; 3] {
        [0, 1, 2].map(|a| rng.gen_range(self.lo[a]..=self.hi[a]))
    }
}

/// Samples a branch from `start` to `end`, jittering interior control points.
fn branch_curve<R: Rng>(
    start: [f64; 3],
    end: [f64; 3],
    tortuosity: f64,
    bounds: &Bounds,
    rng: &mut R,
) -> Vec<[f64; 3]> {
    let length = l2(start, end);
    let amplitude = 0.15 * tortuosity * length;
    let mut control = vec![start];
    for i in 1..4 {
        let t = i as f64 / 4.0;
        let base = [0, 1, 2].map(|a| start[a] + (end[a] - start[a]) * t);
        let jitter = [0, 1, 2].map(|_| {
            if amplitude > 0.0 {
                rng.gen_range(-amplitude..=amplitude)
            } else {
                0.0
            }
        });
        control.push(bounds.clamp([0, 1, 2].map(|a| base[a] + jitter[a])));
    }
    control.push(end);
    let per_segment = (length * 4.0).ceil().max(8.0) as usize;
    resample_by_arc_length(&sample_curve(&control, per_segment), SAMPLE_PITCH)
}

fn taper(n: usize, from: f64, to: f64) -> Vec<f64> {
    if n <= 1 {
        return vec![from; n];
    }
    (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect()
}

/// Deterministic random vascular tree.
///
/// Branch 1 runs across the volume along z; every further branch splits off
/// an existing branch between 30% and 70% of its length and heads to a random
/// target, staying clear of all other branches.
pub fn generate_tree(params: &TreeParams) -> Result<VesselPhantom> {
    params.validate()?;
    let bounds = Bounds::new(params)?;
    let spacing = params.spacing;
    let (r_min, r_max) = params.radius_range_mm;
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut lines: Vec<Centerline> = Vec::new();

    // root
    let inset = |a: usize, rng: &mut ChaCha8Rng| {
        let mid = 0.5 * (bounds.lo[a] + bounds.hi[a]);
        let half = 0.25 * bounds.extent(a);
        rng.gen_range(mid - half..=mid + half)
    };
    let start = [inset(0, &mut rng), inset(1, &mut rng), bounds.lo[2]];
    let end = [inset(0, &mut rng), inset(1, &mut rng), bounds.hi[2]];
    let points = branch_curve(start, end, params.tortuosity, &bounds, &mut rng);
    let radii = taper(points.len(), r_max, r_min);
    lines.push(Centerline {
        label: 1,
        name: "branch_1".into(),
        parent: None,
        parent_index: None,
        points,
        radii,
    });

    let min_len = 0.35 * (0..3).map(|a| bounds.extent(a)).fold(f64::INFINITY, f64::min);
    for label in 2..=params.branch_count as u32 {
        let mut placed = None;
        for _ in 0..ATTEMPTS_PER_BRANCH {
            let parent = &lines[rng.gen_range(0..lines.len())];
            let n = parent.points.len();
            let idx = rng.gen_range((n * 3 / 10)..=(n * 7 / 10).max(n * 3 / 10));
            let origin = parent.points[idx];
            let target = bounds.random_point(&mut rng);
            if l2(origin, target) < min_len.max(6.0) {
                continue;
            }
            let points = branch_curve(origin, target, params.tortuosity, &bounds, &mut rng);
            if !points.iter().all(|&p| bounds.contains(p)) {
                continue;
            }
            let start_r = (0.8 * parent.radii[idx]).max(r_min);
            let radii = taper(points.len(), start_r, r_min);
            if clear_of_others(&points, &radii, &lines, parent.label, spacing) {
                placed = Some(Centerline {
                    label,
                    name: format!("branch_{label}"),
                    parent: Some(parent.label),
                    parent_index: Some(idx),
                    points,
                    radii,
                });
                break;
            }
        }
        match placed {
            Some(c) => lines.push(c),
            None => {
                return Err(Error::PhantomDoesNotFit(format!(
                    "could not place branch {label} of {} in {:?}",
                    params.branch_count, params.dims
                )))
            }
        }
    }

    let (mask, radius_field) = rasterize(params.dims, spacing, &lines)?;
    let mut labels = BTreeMap::new();
    labels.insert(FALSE_POSITIVE, "false_positive".to_string());
    for c in &lines {
        labels.insert(c.label, c.name.clone());
    }
    Ok(VesselPhantom {
        mask,
        radius_field,
        centerlines: lines,
        labels,
    })
}

/// A new branch may touch only its parent, and only near the split point.
fn clear_of_others(points: &[[f64; 3]], radii: &[f64], lines: &[Centerline], parent: u32, spacing: [f64; 3]) -> bool {
    let gap = 2.0 * spacing.iter().cloned().fold(0.0, f64::max);
    let origin = to_mm(points[0], spacing);
    let leave = radii[0] * 2.0 + gap;
    for (p, &r) in points.iter().zip(radii) {
        let pm = to_mm(*p, spacing);
        let near_origin = l2(pm, origin) < leave + r;
        for line in lines {
            for (q, &rq) in line.points.iter().zip(&line.radii) {
                if line.label == parent && near_origin {
                    continue;
                }
                if distance_mm(*p, *q, spacing) < r + rq + gap {
                    return false;
                }
            }
        }
    }
    true
}

/// Marks every voxel within the local radius of some sample (plus the voxel
/// holding each sample) and records the nearest sample's radius everywhere.
pub fn rasterize(dims: [usize; 3], spacing: [f64; 3], lines: &[Centerline]) -> Result<(Mask, ScalarVolume)> {
    let mut mask = Mask::empty_mask(dims, spacing)?;
    for line in lines {
        if line.radii.len() != line.points.len() {
            return Err(Error::SizeMismatch {
                left: line.radii.len(),
                right: line.points.len(),
            });
        }
        for (p, &r) in line.points.iter().zip(&line.radii) {
            let lo = [0, 1, 2].map(|a| (p[a] - r / spacing[a]).floor() as i32);
            let hi = [0, 1, 2].map(|a| (p[a] + r / spacing[a]).ceil() as i32);
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        let v = [x, y, z];
                        if mask.contains(v) && distance_mm([x as f64, y as f64, z as f64], *p, spacing) <= r {
                            mask.set(v, 1);
                        }
                    }
                }
            }
            mask.set([0, 1, 2].map(|a| p[a].round() as i32), 1);
        }
    }
    let polylines: Vec<Vec<[f64; 3]>> = lines.iter().map(|c| c.points.clone()).collect();
    let field = nearest_centerline_field(dims, spacing, &polylines)?;
    let radius = field
        .nearest
        .iter()
        .map(|&(l, i)| lines[l as usize].radii[i as usize] as f32)
        .collect();
    Ok((mask, Volume::from_vec(dims, spacing, radius)?))
}
