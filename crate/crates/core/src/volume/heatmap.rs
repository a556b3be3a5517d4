use serde::{Deserialize, Serialize};

use super::{ScalarVolume, Volume};
use crate::error::{Error, Result};
use crate::skeleton::{SkeletonPointSet, FALSE_POSITIVE};

/// Added to the affinity before inverting it into a step cost.
pub const COST_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapParams {
    /// Heatmap value for voxels outside the local vessel radius.
    pub low_value: f64,
    /// Affinity written at retained skeleton voxels in the cost map.
    pub combine_skeleton_value: f64,
}

impl Default for HeatmapParams {
    fn default() -> Self {
        Self {
            low_value: 0.05,
            combine_skeleton_value: 2.0,
        }
    }
}

impl HeatmapParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.low_value > 0.0 && self.low_value < 1.0) {
            return Err(Error::Config(format!(
                "heatmap low_value must lie in (0, 1), got {}",
                self.low_value
            )));
        }
        if !self.combine_skeleton_value.is_finite() || self.combine_skeleton_value < 1.0 {
            return Err(Error::Config(format!(
                "combine_skeleton_value must be >= 1, got {}",
                self.combine_skeleton_value
            )));
        }
        Ok(())
    }
}

/// Heatmap value for a voxel at distance `d` from a vessel of radius `r`.
///
/// Linear ramp `(r - d) / r` inside the vessel, floored at `low_value` so the
/// field stays monotone across the vessel wall; `low_value` outside.
pub fn heatmap_value(d: f64, r: f64, low_value: f64) -> f64 {
    if d > r {
        low_value
    } else if r <= 0.0 {
        1.0
    } else {
        ((r - d) / r).clamp(low_value, 1.0)
    }
}

/// Centerline heatmap from a distance field and the per-voxel vessel radius.
pub fn build_heatmap(dist: &ScalarVolume, radius_field: &ScalarVolume, params: &HeatmapParams) -> Result<ScalarVolume> {
    params.validate()?;
    if !dist.same_grid(radius_field) {
        return Err(Error::Dimension(format!(
            "distance grid {:?}/{:?} vs radius grid {:?}/{:?}",
            dist.dims(),
            dist.spacing(),
            radius_field.dims(),
            radius_field.spacing()
        )));
    }
    let data = dist
        .data()
        .iter()
        .zip(radius_field.data())
        .map(|(&d, &r)| heatmap_value(d as f64, r.max(0.0) as f64, params.low_value) as f32)
        .collect();
    Volume::from_vec(dist.dims(), dist.spacing(), data)
}

/// Affinity map: the heatmap with every retained skeleton voxel raised to
/// `combine_skeleton_value`. False-positive (class 0) points are ignored.
pub fn build_cost_map(
    heatmap: &ScalarVolume,
    labeled_skeleton: &SkeletonPointSet,
    params: &HeatmapParams,
) -> Result<ScalarVolume> {
    params.validate()?;
    let mut out = heatmap.clone();
    let value = params.combine_skeleton_value as f32;
    for (i, &p) in labeled_skeleton.points().iter().enumerate() {
        let idx = heatmap
            .index(p)
            .ok_or(Error::OutOfBounds([p[0] as f64, p[1] as f64, p[2] as f64]))?;
        if labeled_skeleton.labels()[i] == Some(FALSE_POSITIVE) {
            continue;
        }
        let slot = &mut out.data_mut()[idx];
        *slot = slot.max(value);
    }
    Ok(out)
}

/// Cost of stepping `step_mm` into a voxel with the given affinity.
#[inline]
pub fn step_cost(step_mm: f64, affinity: f32) -> f64 {
    step_mm / (COST_EPSILON + affinity as f64)
}
