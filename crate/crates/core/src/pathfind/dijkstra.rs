use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::{offset, step_length, voxel_to_f64, Voxel, NEIGHBORS_26};
use crate::volume::{step_cost, Mask, ScalarVolume};

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    /// Voxels from source to destination inclusive.
    pub path: Vec<Voxel>,
    pub cost: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct State {
    cost: f64,
    voxel: Voxel,
    index: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, then on voxel order
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.voxel.cmp(&self.voxel))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimal-cost 26-connected path over an affinity map.
///
/// Entering voxel `v` by a step of length `s` mm costs `s / (eps + A(v))`.
/// Among equal-cost predecessors the lexicographically smallest wins.
pub fn dijkstra_path(affinity: &ScalarVolume, src: Voxel, dst: Voxel) -> Result<PathResult> {
    dijkstra_path_avoiding(affinity, src, dst, None)
}

/// As [`dijkstra_path`], never entering voxels set in `forbidden`.
pub fn dijkstra_path_avoiding(
    affinity: &ScalarVolume,
    src: Voxel,
    dst: Voxel,
    forbidden: Option<&Mask>,
) -> Result<PathResult> {
    let src_i = affinity.index(src).ok_or(Error::OutOfBounds(voxel_to_f64(src)))?;
    let dst_i = affinity.index(dst).ok_or(Error::OutOfBounds(voxel_to_f64(dst)))?;
    if let Some(f) = forbidden {
        if !affinity.same_grid(f) {
            return Err(Error::Dimension("forbidden mask grid differs from affinity map".into()));
        }
    }
    let blocked = |v: Voxel| forbidden.is_some_and(|f| f.is_set(v));
    if blocked(src) || blocked(dst) {
        return Err(Error::Unreachable { src, dst });
    }

    let steps: Vec<([i32; 3], f64)> = NEIGHBORS_26
        .iter()
        .map(|&d| (d, step_length(d, affinity.spacing())))
        .collect();
    let mut dist = vec![f64::INFINITY; affinity.len()];
    let mut pred: Vec<Option<usize>> = vec![None; affinity.len()];
    let mut done = vec![false; affinity.len()];
    let mut heap = BinaryHeap::new();
    dist[src_i] = 0.0;
    heap.push(State {
        cost: 0.0,
        voxel: src,
        index: src_i,
    });

    while let Some(State { cost, voxel, index }) = heap.pop() {
        if done[index] {
            continue;
        }
        done[index] = true;
        if index == dst_i {
            break;
        }
        for &(d, len) in &steps {
            let next = offset(voxel, d);
            let Some(ni) = affinity.index(next) else { continue };
            if done[ni] || blocked(next) {
                continue;
            }
            let nd = cost + step_cost(len, affinity.data()[ni]);
            let better = match nd.total_cmp(&dist[ni]) {
                Ordering::Less => true,
                Ordering::Equal => pred[ni].is_some_and(|p| voxel < affinity.coord(p)),
                Ordering::Greater => false,
            };
            if better {
                let improved = nd < dist[ni];
                dist[ni] = nd;
                pred[ni] = Some(index);
                if improved {
                    heap.push(State {
                        cost: nd,
                        voxel: next,
                        index: ni,
                    });
                }
            }
        }
    }

    if !dist[dst_i].is_finite() {
        return Err(Error::Unreachable { src, dst });
    }
    let mut path = vec![dst];
    let mut at = dst_i;
    while let Some(p) = pred[at] {
        path.push(affinity.coord(p));
        at = p;
    }
    path.reverse();
    Ok(PathResult {
        path,
        cost: dist[dst_i],
    })
}
