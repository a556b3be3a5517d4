use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{VesselPhantom, SAMPLE_PITCH};
use crate::error::{Error, Result};
use crate::geometry::{offset, Voxel, NEIGHBORS_26};
use crate::volume::{nearest_centerline_field, Mask};

const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub gap_count: usize,
    /// Inclusive range of gap lengths, in voxels along the centerline.
    pub gap_length_voxels: (usize, usize),
    pub fp_blob_count: usize,
    /// Inclusive range of blob radii in voxels.
    pub fp_blob_radius_voxels: (usize, usize),
    pub rng_seed: u64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        Self {
            gap_count: 0,
            gap_length_voxels: (5, 5),
            fp_blob_count: 0,
            fp_blob_radius_voxels: (2, 3),
            rng_seed: 0,
        }
    }
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        let (g0, g1) = self.gap_length_voxels;
        let (b0, b1) = self.fp_blob_radius_voxels;
        if g0 == 0 || g0 > g1 {
            return Err(Error::Config(format!("invalid gap length range ({g0}, {g1})")));
        }
        if b0 == 0 || b0 > b1 {
            return Err(Error::Config(format!("invalid blob radius range ({b0}, {b1})")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub label: u32,
    /// Sample index range `[first, last]` removed from the branch.
    pub sample_span: [usize; 2],
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub length_voxels: usize,
    pub deleted_voxels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobRecord {
    pub center: Voxel,
    pub radius_voxels: usize,
    pub voxel_count: usize,
}

/// Sidecar describing where the corruption was applied.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorruptionReport {
    pub gaps: Vec<GapRecord>,
    pub blobs: Vec<BlobRecord>,
}

impl CorruptionReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corruption {
    pub mask: Mask,
    pub report: CorruptionReport,
}

/// Sample-index intervals of each branch where a gap may not start or reach.
fn protected_spans(phantom: &VesselPhantom, label: u32, margin: usize) -> Vec<(usize, usize)> {
    let Some(line) = phantom.centerline(label) else {
        return Vec::new();
    };
    let last = line.points.len().saturating_sub(1);
    let mut spans = vec![(0, margin), (last.saturating_sub(margin), last)];
    for child in &phantom.centerlines {
        if child.parent == Some(label) {
            if let Some(i) = child.parent_index {
                spans.push((i.saturating_sub(margin), i + margin));
            }
        }
    }
    spans
}

/// Removes gaps from the phantom's mask and adds false-positive blobs.
///
/// A gap deletes every mask voxel whose nearest centerline sample lies in a
/// stretch of `length` voxels, away from branch ends and split points. Blobs
/// are balls that neither overlap nor touch (26-adjacency) the vessel mask or
/// each other, so each adds exactly one component.
pub fn corrupt(phantom: &VesselPhantom, spec: &CorruptionSpec) -> Result<Corruption> {
    spec.validate()?;
    let mut out = phantom.mask.clone();
    let mut report = CorruptionReport::default();
    if spec.gap_count == 0 && spec.fp_blob_count == 0 {
        return Ok(Corruption { mask: out, report });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let per_voxel = (1.0 / SAMPLE_PITCH).round() as usize;

    if spec.gap_count > 0 {
        let field = nearest_centerline_field(phantom.dims(), phantom.spacing(), &phantom.polylines())?;
        let max_r_vox = phantom
            .centerlines
            .iter()
            .flat_map(|c| c.radii.iter())
            .cloned()
            .fold(0.0, f64::max)
            / phantom.spacing().iter().cloned().fold(f64::INFINITY, f64::min);
        let margin = ((max_r_vox * 2.0).ceil() as usize + 4) * per_voxel;
        let mut taken: Vec<(usize, usize, usize)> = Vec::new();

        for g in 0..spec.gap_count {
            let mut placed = None;
            for _ in 0..MAX_ATTEMPTS {
                let line_idx = rng.gen_range(0..phantom.centerlines.len());
                let line = &phantom.centerlines[line_idx];
                let length = rng.gen_range(spec.gap_length_voxels.0..=spec.gap_length_voxels.1);
                let span = length * per_voxel;
                if line.points.len() <= span + 1 {
                    continue;
                }
                let first = rng.gen_range(0..line.points.len() - span);
                let last = first + span;
                let mut blocked = protected_spans(phantom, line.label, margin);
                blocked.extend(
                    taken
                        .iter()
                        .filter(|t| t.0 == line_idx)
                        .map(|t| (t.1.saturating_sub(margin), t.2 + margin)),
                );
                if blocked.iter().any(|&(a, b)| first <= b && last >= a) {
                    continue;
                }
                placed = Some((line_idx, first, last, length));
                break;
            }
            let Some((line_idx, first, last, length)) = placed else {
                return Err(Error::CorruptionInfeasible(format!(
                    "could not place gap {} of {}",
                    g + 1,
                    spec.gap_count
                )));
            };
            taken.push((line_idx, first, last));
            let mut deleted = 0;
            for (i, &(l, s)) in field.nearest.iter().enumerate() {
                let (l, s) = (l as usize, s as usize);
                if l == line_idx && (first..=last).contains(&s) && out.data()[i] == 1 {
                    out.data_mut()[i] = 0;
                    deleted += 1;
                }
            }
            let line = &phantom.centerlines[line_idx];
            report.gaps.push(GapRecord {
                label: line.label,
                sample_span: [first, last],
                start: line.points[first],
                end: line.points[last],
                length_voxels: length,
                deleted_voxels: deleted,
            });
        }
    }

    let dims = phantom.dims();
    let mut occupied = phantom.mask.clone();
    for b in 0..spec.fp_blob_count {
        let mut placed = None;
        for _ in 0..MAX_ATTEMPTS {
            let r = rng.gen_range(spec.fp_blob_radius_voxels.0..=spec.fp_blob_radius_voxels.1) as i32;
            if dims.iter().any(|&d| (d as i32) < 2 * r + 3) {
                continue;
            }
            let center = [0, 1, 2].map(|a| rng.gen_range(r + 1..=dims[a] as i32 - 2 - r));
            let ball = ball_voxels(center, r);
            let touches = ball
                .iter()
                .any(|&v| occupied.is_set(v) || NEIGHBORS_26.iter().any(|&d| occupied.is_set(offset(v, d))));
            if !touches {
                placed = Some((center, r, ball));
                break;
            }
        }
        let Some((center, r, ball)) = placed else {
            return Err(Error::CorruptionInfeasible(format!(
                "could not place blob {} of {}",
                b + 1,
                spec.fp_blob_count
            )));
        };
        for &v in &ball {
            occupied.set(v, 1);
            out.set(v, 1);
        }
        report.blobs.push(BlobRecord {
            center,
            radius_voxels: r as usize,
            voxel_count: ball.len(),
        });
    }
    Ok(Corruption { mask: out, report })
}

fn ball_voxels(center: Voxel, r: i32) -> Vec<Voxel> {
    let mut out = Vec::new();
    for dz in -r..=r {
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy + dz * dz <= r * r {
                    out.push([center[0] + dx, center[1] + dy, center[2] + dz]);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_tree, TreeParams};
    use crate::skeleton::{count_components, thin};

    fn tube() -> VesselPhantom {
        generate_tree(&TreeParams {
            dims: [32, 32, 48],
            spacing: [1.0; 3],
            branch_count: 1,
            tortuosity: 0.0,
            radius_range_mm: (2.0, 2.0),
            rng_seed: 2,
        })
        .unwrap()
    }

    #[test]
    fn zero_corruption_is_identity() {
        let p = tube();
        let c = corrupt(&p, &CorruptionSpec::default()).unwrap();
        assert_eq!(c.mask, p.mask);
        assert_eq!(c.report, CorruptionReport::default());
    }

    #[test]
    fn one_gap_splits_the_skeleton() {
        let p = tube();
        let spec = CorruptionSpec {
            gap_count: 1,
            rng_seed: 4,
            ..Default::default()
        };
        let c = corrupt(&p, &spec).unwrap();
        assert_eq!(c.report.gaps.len(), 1);
        assert!(c.report.gaps[0].deleted_voxels > 0);
        assert_eq!(count_components(&thin(&c.mask).foreground()), 2);
    }

    #[test]
    fn blobs_add_separate_components() {
        let p = tube();
        let spec = CorruptionSpec {
            fp_blob_count: 2,
            rng_seed: 8,
            ..Default::default()
        };
        let c = corrupt(&p, &spec).unwrap();
        let extra: Vec<Voxel> = c.mask.foreground().into_iter().filter(|&v| !p.mask.is_set(v)).collect();
        assert_eq!(count_components(&extra), 2);
        assert_eq!(count_components(&c.mask.foreground()), 3);
    }

    #[test]
    fn corruption_only_removes_vessel_and_adds_blobs() {
        let p = generate_tree(&TreeParams {
            dims: [32, 32, 80],
            spacing: [1.0; 3],
            branch_count: 1,
            tortuosity: 0.0,
            radius_range_mm: (2.0, 2.0),
            rng_seed: 2,
        })
        .unwrap();
        let spec = CorruptionSpec {
            gap_count: 2,
            fp_blob_count: 2,
            rng_seed: 1,
            ..Default::default()
        };
        let c = corrupt(&p, &spec).unwrap();
        let blob_voxels: usize = c.report.blobs.iter().map(|b| b.voxel_count).sum();
        let deleted: usize = c.report.gaps.iter().map(|g| g.deleted_voxels).sum();
        assert_eq!(c.mask.count(), p.mask.count() - deleted + blob_voxels);
        for v in c.mask.foreground() {
            let in_blob = c.report.blobs.iter().any(|b| {
                let d: i32 = (0..3).map(|a| (v[a] - b.center[a]).pow(2)).sum();
                d <= (b.radius_voxels * b.radius_voxels) as i32
            });
            assert!(p.mask.is_set(v) || in_blob);
        }
    }

    #[test]
    fn infeasible_requests_fail() {
        let p = tube();
        let spec = CorruptionSpec {
            fp_blob_count: 1,
            fp_blob_radius_voxels: (40, 40),
            ..Default::default()
        };
        assert!(matches!(corrupt(&p, &spec), Err(Error::CorruptionInfeasible(_))));
        let spec = CorruptionSpec {
            gap_count: 30,
            ..Default::default()
        };
        assert!(matches!(corrupt(&p, &spec), Err(Error::CorruptionInfeasible(_))));
    }

    #[test]
    fn sidecar_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = tube();
        let spec = CorruptionSpec {
            gap_count: 1,
            fp_blob_count: 1,
            rng_seed: 3,
            ..Default::default()
        };
        let c = corrupt(&p, &spec).unwrap();
        let path = dir.path().join("corruption.json");
        c.report.write(&path).unwrap();
        assert_eq!(CorruptionReport::read(&path).unwrap(), c.report);
    }
}
