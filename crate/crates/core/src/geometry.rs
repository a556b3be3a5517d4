//! Integer voxel coordinates and neighborhood helpers.

/// Integer voxel coordinate `[x, y, z]`. The derived ordering is the
/// lexicographic order used for every deterministic tie-break in the crate.
pub type Voxel = [i32; 3];

/// The 26 neighbor offsets in lexicographic order.
pub const NEIGHBORS_26: [[i32; 3]; 26] = {
    let mut out = [[0; 3]; 26];
    let mut n = 0;
    let mut dx = -1;
    while dx <= 1 {
        let mut dy = -1;
        while dy <= 1 {
            let mut dz = -1;
            while dz <= 1 {
                if !(dx == 0 && dy == 0 && dz == 0) {
                    out[n] = [dx, dy, dz];
                    n += 1;
                }
                dz += 1;
            }
            dy += 1;
        }
        dx += 1;
    }
    out
};

#[inline]
pub fn offset(v: Voxel, d: [i32; 3]) -> Voxel {
    [v[0] + d[0], v[1] + d[1], v[2] + d[2]]
}

/// Chebyshev adjacency, i.e. 26-neighbors (a voxel is not its own neighbor).
#[inline]
pub fn is_adjacent_26(a: Voxel, b: Voxel) -> bool {
    let dx = (a[0] - b[0]).abs();
    let dy = (a[1] - b[1]).abs();
    let dz = (a[2] - b[2]).abs();
    dx <= 1 && dy <= 1 && dz <= 1 && (dx + dy + dz) > 0
}

/// Physical position in mm of a (possibly fractional) voxel coordinate.
#[inline]
pub fn to_mm(p: [f64; 3], spacing: [f64; 3]) -> [f64; 3] {
    [p[0] * spacing[0], p[1] * spacing[1], p[2] * spacing[2]]
}

#[inline]
pub fn voxel_to_f64(v: Voxel) -> [f64; 3] {
    [v[0] as f64, v[1] as f64, v[2] as f64]
}

/// Euclidean distance in mm between two points given in voxel coordinates.
///
/// Every distance in the crate goes through this one formula so that oracle
/// comparisons can be exact.
#[inline]
pub fn distance_mm(a: [f64; 3], b: [f64; 3], spacing: [f64; 3]) -> f64 {
    let dx = (a[0] - b[0]) * spacing[0];
    let dy = (a[1] - b[1]) * spacing[1];
    let dz = (a[2] - b[2]) * spacing[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[inline]
pub fn l2(a: [f64; 3], b: [f64; 3]) -> f64 {
    distance_mm(a, b, [1.0, 1.0, 1.0])
}

/// Physical length in mm of a unit step along `d`.
#[inline]
pub fn step_length(d: [i32; 3], spacing: [f64; 3]) -> f64 {
    distance_mm([0.0; 3], voxel_to_f64(d), spacing)
}
