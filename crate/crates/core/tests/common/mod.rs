//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vessel_centerline::geometry::Voxel;
use vessel_centerline::phantom::{CorruptionSpec, TreeParams};
use vessel_centerline::pipeline::PhantomJob;
use vessel_centerline::{Mask, ScalarVolume};

/// Single-source shortest path costs by repeated relaxation over every
/// 26-neighbor edge until nothing changes.
pub fn bellman_ford(a: &ScalarVolume, src: Voxel) -> Vec<f64> {
    let [sx, sy, sz] = a.spacing();
    let mut dist = vec![f64::INFINITY; a.len()];
    dist[a.index(src).unwrap()] = 0.0;
    loop {
        let mut changed = false;
        for u in 0..a.len() {
            if !dist[u].is_finite() {
                continue;
            }
            let p = a.coord(u);
            for dz in -1..=1 {
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if (dx, dy, dz) == (0, 0, 0) {
                            continue;
                        }
                        let q = [p[0] + dx, p[1] + dy, p[2] + dz];
                        let Some(v) = a.index(q) else { continue };
                        let len =
                            ((dx as f64 * sx).powi(2) + (dy as f64 * sy).powi(2) + (dz as f64 * sz).powi(2)).sqrt();
                        let w = len / (1e-6 + a.data()[v] as f64);
                        if dist[u] + w < dist[v] {
                            dist[v] = dist[u] + w;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

/// Cost of walking `path` under the entering-voxel cost rule.
pub fn walk_cost(a: &ScalarVolume, path: &[Voxel]) -> f64 {
    let s = a.spacing();
    path.windows(2)
        .map(|w| {
            let len = (0..3)
                .map(|i| ((w[1][i] - w[0][i]) as f64 * s[i]).powi(2))
                .sum::<f64>()
                .sqrt();
            len / (1e-6 + a.get(w[1]).unwrap() as f64)
        })
        .sum()
}

pub fn random_affinity(rng: &mut ChaCha8Rng, n: usize) -> ScalarVolume {
    let data = (0..n * n * n).map(|_| rng.gen_range(0.05f32..2.0)).collect();
    ScalarVolume::from_vec([n; 3], [1.0; 3], data).unwrap()
}

pub fn random_mask(rng: &mut ChaCha8Rng, dims: [usize; 3], fill: f64) -> Mask {
    let data = (0..dims.iter().product::<usize>())
        .map(|_| u8::from(rng.gen_bool(fill)))
        .collect();
    Mask::mask_from_vec(dims, [1.0; 3], data).unwrap()
}

fn chebyshev_adjacent(a: Voxel, b: Voxel) -> bool {
    a != b && (0..3).all(|i| (a[i] - b[i]).abs() <= 1)
}

/// Component count from the transitive closure of the 26-adjacency relation.
pub fn closure_component_count(points: &[Voxel]) -> usize {
    let n = points.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if chebyshev_adjacent(points[i], points[j]) {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        let via = reach[k].clone();
        for row in reach.iter_mut() {
            if row[k] {
                for (cell, &r) in row.iter_mut().zip(&via) {
                    *cell |= r;
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let mut count = 0;
    for i in 0..n {
        if !seen[i] {
            count += 1;
            for j in 0..n {
                if reach[i][j] {
                    seen[j] = true;
                }
            }
        }
    }
    count
}

/// 26-connected foreground components by breadth-first flood fill.
pub fn foreground_components(mask: &Mask) -> usize {
    flood_count(mask, true, 26)
}

/// 6-connected background components, with a one-voxel background frame
/// around the volume.
pub fn background_components(mask: &Mask) -> usize {
    flood_count(mask, false, 6)
}

fn flood_count(mask: &Mask, foreground: bool, connectivity: usize) -> usize {
    let pad = usize::from(!foreground);
    let d = mask.dims();
    let pd = [d[0] + 2 * pad, d[1] + 2 * pad, d[2] + 2 * pad];
    let idx = |v: [usize; 3]| v[0] + v[1] * pd[0] + v[2] * pd[0] * pd[1];
    let mut member = vec![false; pd[0] * pd[1] * pd[2]];
    for z in 0..pd[2] {
        for y in 0..pd[1] {
            for x in 0..pd[0] {
                let inside = [x, y, z].iter().zip(&d).all(|(&c, &n)| c >= pad && c < n + pad);
                let set = inside && mask.is_set([(x - pad) as i32, (y - pad) as i32, (z - pad) as i32]);
                member[idx([x, y, z])] = set == foreground;
            }
        }
    }
    let mut offsets = Vec::new();
    for dz in -1i32..=1 {
        for dy in -1i32..=1 {
            for dx in -1i32..=1 {
                let m = dx.abs() + dy.abs() + dz.abs();
                if m > 0 && (connectivity == 26 || m == 1) {
                    offsets.push([dx, dy, dz]);
                }
            }
        }
    }
    let mut seen = vec![false; member.len()];
    let mut count = 0;
    for start in 0..member.len() {
        if !member[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let p = [i % pd[0], (i / pd[0]) % pd[1], i / (pd[0] * pd[1])];
            for o in &offsets {
                let q: Vec<i64> = (0..3).map(|a| p[a] as i64 + o[a] as i64).collect();
                if (0..3).any(|a| q[a] < 0 || q[a] >= pd[a] as i64) {
                    continue;
                }
                let j = idx([q[0] as usize, q[1] as usize, q[2] as usize]);
                if member[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    count
}

/// The single-tube corruption scenario: 64^3, radius 2 mm, one 5-voxel gap,
/// two false-positive blobs.
pub fn tube_job() -> PhantomJob {
    PhantomJob {
        tree: TreeParams {
            dims: [64; 3],
            spacing: [1.0; 3],
            branch_count: 1,
            tortuosity: 0.3,
            radius_range_mm: (2.0, 2.0),
            rng_seed: 0,
        },
        corruption: CorruptionSpec {
            gap_count: 1,
            gap_length_voxels: (5, 5),
            fp_blob_count: 2,
            fp_blob_radius_voxels: (2, 3),
            rng_seed: 0,
        },
    }
}

pub fn two_branch_params(seed: u64) -> TreeParams {
    TreeParams {
        dims: [64; 3],
        spacing: [1.0; 3],
        branch_count: 2,
        tortuosity: 0.3,
        radius_range_mm: (1.0, 2.5),
        rng_seed: seed,
    }
}
