//! Dense 3D grids with anisotropic spacing, plus the distance field, centerline
//! heatmap and affinity (cost) map built on top of them.

mod distance;
mod heatmap;
mod io;

pub use distance::{euclidean_distance_to_centerline, nearest_centerline_field, NearestField};
pub use heatmap::{build_cost_map, build_heatmap, step_cost, HeatmapParams, COST_EPSILON};
pub use io::{read_mask, read_scalar, write_volume, Dtype, VolumeHeader};

use crate::error::{Error, Result};
use crate::geometry::Voxel;

/// Dense voxel grid stored x-fastest: `index = x + y*nx + z*nx*ny`.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    dims: [usize; 3],
    spacing: [f64; 3],
    data: Vec<T>,
}

/// Binary volume holding only 0 and 1.
pub type Mask = Volume<u8>;
/// Real-valued field (distances, radii, heatmaps, affinities).
pub type ScalarVolume = Volume<f32>;

fn check_grid(dims: [usize; 3], spacing: [f64; 3]) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::InvalidVolume(format!("dims must be positive, got {dims:?}")));
    }
    if dims.iter().any(|&d| d > i32::MAX as usize) {
        return Err(Error::InvalidVolume(format!("dims too large: {dims:?}")));
    }
    if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::InvalidVolume(format!(
            "spacing must be strictly positive, got {spacing:?}"
        )));
    }
    Ok(())
}

impl<T: Copy> Volume<T> {
    pub fn filled(dims: [usize; 3], spacing: [f64; 3], value: T) -> Result<Self> {
        check_grid(dims, spacing)?;
        Ok(Self {
            dims,
            spacing,
            data: vec![value; dims[0] * dims[1] * dims[2]],
        })
    }

    pub fn from_vec(dims: [usize; 3], spacing: [f64; 3], data: Vec<T>) -> Result<Self> {
        check_grid(dims, spacing)?;
        let expected = dims[0] * dims[1] * dims[2];
        if data.len() != expected {
            return Err(Error::InvalidVolume(format!(
                "data length {} does not match dims {:?} ({expected} voxels)",
                data.len(),
                dims
            )));
        }
        Ok(Self { dims, spacing, data })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn contains(&self, v: Voxel) -> bool {
        (0..3).all(|a| v[a] >= 0 && (v[a] as usize) < self.dims[a])
    }

    #[inline]
    pub fn index(&self, v: Voxel) -> Option<usize> {
        if self.contains(v) {
            Some(v[0] as usize + self.dims[0] * (v[1] as usize + self.dims[1] * v[2] as usize))
        } else {
            None
        }
    }

    #[inline]
    pub fn coord(&self, index: usize) -> Voxel {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [
            (index % nx) as i32,
            ((index / nx) % ny) as i32,
            (index / (nx * ny)) as i32,
        ]
    }

    pub fn get(&self, v: Voxel) -> Option<T> {
        self.index(v).map(|i| self.data[i])
    }

    /// Writes `value` at `v`; returns false when `v` is outside the grid.
    pub fn set(&mut self, v: Voxel, value: T) -> bool {
        match self.index(v) {
            Some(i) => {
                self.data[i] = value;
                true
            }
            None => false,
        }
    }

    pub fn same_grid<U>(&self, other: &Volume<U>) -> bool {
        self.dims == other.dims && self.spacing == other.spacing
    }

    pub(crate) fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn map<U, F: Fn(T) -> U>(&self, f: F) -> Volume<U> {
        Volume {
            dims: self.dims,
            spacing: self.spacing,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

impl Volume<u8> {
    /// Builds a binary mask, rejecting any value other than 0 or 1.
    pub fn mask_from_vec(dims: [usize; 3], spacing: [f64; 3], data: Vec<u8>) -> Result<Self> {
        if let Some(bad) = data.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidVolume(format!("binary mask contains value {bad}")));
        }
        Self::from_vec(dims, spacing, data)
    }

    pub fn empty_mask(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        Self::filled(dims, spacing, 0)
    }

    pub fn is_set(&self, v: Voxel) -> bool {
        self.get(v) == Some(1)
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    /// Foreground voxels in lexicographic `[x, y, z]` order.
    pub fn foreground(&self) -> Vec<Voxel> {
        let mut out: Vec<Voxel> = self
            .data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, _)| self.coord(i))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn from_voxels(dims: [usize; 3], spacing: [f64; 3], voxels: &[Voxel]) -> Result<Self> {
        let mut m = Self::empty_mask(dims, spacing)?;
        for &v in voxels {
            if !m.set(v, 1) {
                return Err(Error::OutOfBounds([v[0] as f64, v[1] as f64, v[2] as f64]));
            }
        }
        Ok(m)
    }
}
