use rayon::prelude::*;

use super::{ScalarVolume, Volume};
use crate::error::{Error, Result};
use crate::geometry::distance_mm;

/// Exact nearest-centerline-sample field.
#[derive(Debug, Clone)]
pub struct NearestField {
    /// Distance in mm from each voxel center to the closest sample.
    pub distance: ScalarVolume,
    /// `(polyline, sample)` index of that closest sample; ties resolve to the
    /// first one in input order.
    pub nearest: Vec<(u32, u32)>,
}

/// Distance (mm) from every voxel center to the closest centerline sample.
pub fn euclidean_distance_to_centerline(
    dims: [usize; 3],
    spacing: [f64; 3],
    centerlines: &[Vec<[f64; 3]>],
) -> Result<ScalarVolume> {
    Ok(nearest_centerline_field(dims, spacing, centerlines)?.distance)
}

/// Brute-force nearest sample search over every voxel, parallel over z-slices.
/// Each voxel is computed independently so the output does not depend on the
/// thread count.
pub fn nearest_centerline_field(
    dims: [usize; 3],
    spacing: [f64; 3],
    centerlines: &[Vec<[f64; 3]>],
) -> Result<NearestField> {
    let grid = Volume::filled(dims, spacing, 0f32)?;
    let samples: Vec<([f64; 3], (u32, u32))> = centerlines
        .iter()
        .enumerate()
        .flat_map(|(li, line)| line.iter().enumerate().map(move |(pi, &p)| (p, (li as u32, pi as u32))))
        .collect();
    if samples.is_empty() {
        return Err(Error::NoReferenceGeometry);
    }
    for (p, _) in &samples {
        let inside = (0..3).all(|a| p[a] >= -0.5 && p[a] <= dims[a] as f64 - 0.5);
        if !inside {
            return Err(Error::OutOfBounds(*p));
        }
    }

    let slice = dims[0] * dims[1];
    let mut distance = vec![0f32; grid.len()];
    let mut nearest = vec![(0u32, 0u32); grid.len()];
    distance
        .par_chunks_mut(slice)
        .zip(nearest.par_chunks_mut(slice))
        .enumerate()
        .for_each(|(z, (dist_slice, near_slice))| {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    let q = [x as f64, y as f64, z as f64];
                    let mut best = f64::INFINITY;
                    let mut best_id = samples[0].1;
                    for &(p, id) in &samples {
                        let d = distance_mm(q, p, spacing);
                        if d < best {
                            best = d;
                            best_id = id;
                        }
                    }
                    dist_slice[x + y * dims[0]] = best as f32;
                    near_slice[x + y * dims[0]] = best_id;
                }
            }
        });
    Ok(NearestField {
        distance: Volume::from_vec(dims, spacing, distance)?,
        nearest,
    })
}
