//! Curve skeletons: thinning, 26-connected components, endpoints and
//! stratified resampling of the resulting point set.

mod components;
mod resample;
mod thin;

pub use components::{component_ids, connected_components, count_components, endpoints, neighbor_degrees};
pub use resample::{proportional_allocation, resample};
pub use thin::{has_deletable_point, is_simple, thin};

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{to_mm, voxel_to_f64, Voxel};
use crate::volume::Mask;

/// Reserved class id for non-vascular (false-positive) structures.
pub const FALSE_POSITIVE: u32 = 0;

/// Unordered skeleton voxels with their connected-component ids and optional
/// class labels.
///
/// Component ids run `1..=N`, numbered by each component's lexicographically
/// smallest voxel; `0` marks ids that have not been computed yet.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonPointSet {
    points: Vec<Voxel>,
    component: Vec<u32>,
    label: Vec<Option<u32>>,
    dims: [usize; 3],
    spacing: [f64; 3],
}

impl SkeletonPointSet {
    /// Builds an unlabeled set and computes its components.
    pub fn new(points: Vec<Voxel>, dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            let inside = (0..3).all(|a| p[a] >= 0 && (p[a] as usize) < dims[a]);
            if !inside {
                return Err(Error::OutOfBounds(voxel_to_f64(*p)));
            }
            if !seen.insert(*p) {
                return Err(Error::Format(format!("duplicate skeleton point {p:?}")));
            }
        }
        let component = component_ids(&points);
        let label = vec![None; points.len()];
        Ok(Self {
            points,
            component,
            label,
            dims,
            spacing,
        })
    }

    /// Foreground voxels of a (thinned) mask, in lexicographic order.
    pub fn from_mask(mask: &Mask) -> Self {
        let points = mask.foreground();
        let component = component_ids(&points);
        let label = vec![None; points.len()];
        Self {
            points,
            component,
            label,
            dims: mask.dims(),
            spacing: mask.spacing(),
        }
    }

    pub fn with_labels(mut self, labels: Vec<Option<u32>>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::SizeMismatch {
                left: labels.len(),
                right: self.points.len(),
            });
        }
        self.label = labels;
        Ok(self)
    }

    pub fn points(&self) -> &[Voxel] {
        &self.points
    }

    pub fn component_ids(&self) -> &[u32] {
        &self.component
    }

    pub fn labels(&self) -> &[Option<u32>] {
        &self.label
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn component_count(&self) -> usize {
        self.component.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn point_mm(&self, i: usize) -> [f64; 3] {
        to_mm(voxel_to_f64(self.points[i]), self.spacing)
    }

    /// Points whose index satisfies `keep`, with components recomputed.
    pub fn subset<F: Fn(usize) -> bool>(&self, keep: F) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        let points: Vec<Voxel> = idx.iter().map(|&i| self.points[i]).collect();
        let label = idx.iter().map(|&i| self.label[i]).collect();
        let component = component_ids(&points);
        Self {
            points,
            component,
            label,
            dims: self.dims,
            spacing: self.spacing,
        }
    }

    /// Appends new points (ignoring ones already present) and recomputes
    /// the components.
    pub fn extend(&mut self, points: &[Voxel], label: Option<u32>) {
        let mut existing: HashSet<Voxel> = self.points.iter().copied().collect();
        for &p in points {
            if existing.insert(p) {
                self.points.push(p);
                self.label.push(label);
            }
        }
        self.component = component_ids(&self.points);
    }

    pub fn to_mask(&self) -> Result<Mask> {
        Mask::from_voxels(self.dims, self.spacing, &self.points)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for i in 0..self.len() {
            let p = self.points[i];
            w.serialize(CsvRow {
                x: p[0],
                y: p[1],
                z: p[2],
                component: self.component[i],
                label: self.label[i].map_or(-1, |l| l as i64),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a skeleton CSV. Components are recomputed from the geometry so
    /// the 26-connectivity invariant always holds.
    pub fn read_csv(path: &Path, dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for row in r.deserialize() {
            let row: CsvRow = row?;
            points.push([row.x, row.y, row.z]);
            labels.push(match row.label {
                l if l < 0 => None,
                l => Some(u32::try_from(l).map_err(|_| Error::Format(format!("label {l} out of range")))?),
            });
        }
        let set = Self::new(points, dims, spacing).map_err(|e| match e {
            Error::OutOfBounds(p) => Error::Format(format!("{}: point {p:?} outside {dims:?}", path.display())),
            other => other,
        })?;
        set.with_labels(labels)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    x: i32,
    y: i32,
    z: i32,
    component: u32,
    label: i64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_outside_points() {
        assert!(SkeletonPointSet::new(vec![[0, 0, 0], [0, 0, 0]], [2, 2, 2], [1.0; 3]).is_err());
        assert!(SkeletonPointSet::new(vec![[2, 0, 0]], [2, 2, 2], [1.0; 3]).is_err());
    }

    #[test]
    fn csv_roundtrip_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = SkeletonPointSet::new(vec![[0, 0, 0], [1, 1, 1], [3, 3, 3]], [4, 4, 4], [1.0; 3])
            .unwrap()
            .with_labels(vec![Some(2), Some(2), None])
            .unwrap();
        s.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "x,y,z,component,label\n0,0,0,1,2\n1,1,1,1,2\n3,3,3,2,-1\n");
        assert_eq!(SkeletonPointSet::read_csv(&path, [4, 4, 4], [1.0; 3]).unwrap(), s);
    }

    #[test]
    fn subset_recomputes_components() {
        let s = SkeletonPointSet::new(vec![[0, 0, 0], [1, 0, 0], [2, 0, 0]], [3, 1, 1], [1.0; 3]).unwrap();
        assert_eq!(s.component_count(), 1);
        let t = s.subset(|i| i != 1);
        assert_eq!(t.component_ids(), &[1, 2]);
    }
}
