use std::collections::{HashMap, VecDeque};

use super::SkeletonPointSet;
use crate::geometry::{offset, Voxel, NEIGHBORS_26};
use crate::volume::Mask;

/// 26-connected component id of every point, aligned with `points`.
///
/// Components are numbered `1..=N` in increasing order of their
/// lexicographically smallest voxel, so the result does not depend on the
/// input order.
pub fn component_ids(points: &[Voxel]) -> Vec<u32> {
    let lookup: HashMap<Voxel, usize> = points.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_unstable_by_key(|&i| points[i]);

    let mut ids = vec![0u32; points.len()];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in order {
        if ids[start] != 0 {
            continue;
        }
        next += 1;
        ids[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            for d in NEIGHBORS_26 {
                if let Some(&j) = lookup.get(&offset(points[i], d)) {
                    if ids[j] == 0 {
                        ids[j] = next;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    ids
}

pub fn count_components(points: &[Voxel]) -> usize {
    component_ids(points).into_iter().max().unwrap_or(0) as usize
}

/// Labels the foreground of a mask into 26-connected components.
pub fn connected_components(mask: &Mask) -> SkeletonPointSet {
    SkeletonPointSet::from_mask(mask)
}

/// Number of 26-neighbors of each point inside the set.
pub fn neighbor_degrees(points: &[Voxel]) -> Vec<usize> {
    let lookup: std::collections::HashSet<Voxel> = points.iter().copied().collect();
    points
        .iter()
        .map(|&p| NEIGHBORS_26.iter().filter(|&&d| lookup.contains(&offset(p, d))).count())
        .collect()
}

/// Curve tips: points with at most one 26-neighbor in the set, in
/// lexicographic order, each with its component id. An isolated point is its
/// own (single) endpoint.
pub fn endpoints(skel: &SkeletonPointSet) -> Vec<(Voxel, u32)> {
    let degrees = neighbor_degrees(skel.points());
    let mut out: Vec<(Voxel, u32)> = skel
        .points()
        .iter()
        .zip(skel.component_ids())
        .zip(degrees)
        .filter(|(_, d)| *d <= 1)
        .map(|((&p, &c), _)| (p, c))
        .collect();
    out.sort_unstable();
    out
}
