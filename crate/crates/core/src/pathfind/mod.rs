//! Label-guided reconnection of skeleton segments.
//!
//! Tips of same-label components are paired, the pairs are queued by their
//! Euclidean gap, and each pair whose components are not yet joined is
//! bridged with a minimal-cost path over the affinity map.

mod dijkstra;
mod trace;
mod union_find;

pub use dijkstra::{dijkstra_path, dijkstra_path_avoiding, PathResult};
pub use trace::trace_polylines;
pub use union_find::UnionFind;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{distance_mm, voxel_to_f64, Voxel};
use crate::skeleton::{endpoints, SkeletonPointSet};
use crate::volume::ScalarVolume;

/// Ordered voxel polyline of one vessel class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterlinePath {
    pub label: Option<u32>,
    pub points: Vec<Voxel>,
    /// Half-open index ranges of points added by path search.
    #[serde(default)]
    pub bridged_spans: Vec<[usize; 2]>,
}

impl CenterlinePath {
    /// Consecutive points are distinct 26-neighbors.
    pub fn is_chain(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| crate::geometry::is_adjacent_26(w[0], w[1]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairQueueEntry {
    pub endpoint_a: Voxel,
    pub endpoint_b: Voxel,
    pub component_a: u32,
    pub component_b: u32,
    pub label: u32,
    /// Euclidean distance between the tips in mm.
    pub euclidean_gap: f64,
}

/// A minimal-cost path inserted between two components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bridge {
    pub label: u32,
    pub from: Voxel,
    pub to: Voxel,
    pub component_a: u32,
    pub component_b: u32,
    /// Full path from `from` to `to`.
    pub path: Vec<Voxel>,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectOptions {
    /// When false the queue is built but no bridge is inserted.
    pub bridging: bool,
    /// Affinity stamped onto bridge voxels so later searches can follow them.
    pub skeleton_affinity: f32,
}

impl Default for ConnectOptions {
    fn default() -> Self {
        Self {
            bridging: true,
            skeleton_affinity: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub paths: Vec<CenterlinePath>,
    pub bridges: Vec<Bridge>,
    /// Queue entries dropped because their components were already joined.
    pub skipped: Vec<PairQueueEntry>,
}

/// All cross-component tip pairs that share a label, nearest first
/// (ties by tip order). Unlabeled points are never paired.
pub fn build_pair_queue(skel: &SkeletonPointSet) -> Vec<PairQueueEntry> {
    let label_of: HashMap<Voxel, Option<u32>> = skel
        .points()
        .iter()
        .copied()
        .zip(skel.labels().iter().copied())
        .collect();
    let tips = endpoints(skel);
    let mut queue = Vec::new();
    for (i, &(a, ca)) in tips.iter().enumerate() {
        let Some(la) = label_of[&a] else { continue };
        for &(b, cb) in &tips[i + 1..] {
            if ca == cb || label_of[&b] != Some(la) {
                continue;
            }
            queue.push(PairQueueEntry {
                endpoint_a: a,
                endpoint_b: b,
                component_a: ca,
                component_b: cb,
                label: la,
                euclidean_gap: distance_mm(voxel_to_f64(a), voxel_to_f64(b), skel.spacing()),
            });
        }
    }
    queue.sort_by(|x, y| {
        x.euclidean_gap
            .total_cmp(&y.euclidean_gap)
            .then(x.endpoint_a.cmp(&y.endpoint_a))
            .then(x.endpoint_b.cmp(&y.endpoint_b))
    });
    queue
}

/// Bridges same-label segments and traces the result into polylines.
pub fn connect_segments(skel: &SkeletonPointSet, cost_map: &ScalarVolume) -> Result<Connection> {
    connect_segments_with(skel, cost_map, &ConnectOptions::default())
}

pub fn connect_segments_with(
    skel: &SkeletonPointSet,
    cost_map: &ScalarVolume,
    opts: &ConnectOptions,
) -> Result<Connection> {
    let queue = if opts.bridging {
        build_pair_queue(skel)
    } else {
        Vec::new()
    };
    let mut affinity = cost_map.clone();
    let mut uf = UnionFind::new(skel.component_count() + 1);
    let mut members: BTreeMap<Option<u32>, BTreeSet<Voxel>> = BTreeMap::new();
    let mut comp_at: HashMap<(Option<u32>, Voxel), u32> = HashMap::new();
    for ((&p, &c), &l) in skel.points().iter().zip(skel.component_ids()).zip(skel.labels()) {
        members.entry(l).or_default().insert(p);
        comp_at.insert((l, p), c);
    }
    let mut added: BTreeMap<Option<u32>, BTreeSet<Voxel>> = BTreeMap::new();
    let mut bridges = Vec::new();
    let mut skipped = Vec::new();

    for entry in queue {
        let (a, b) = (entry.component_a as usize, entry.component_b as usize);
        if uf.connected(a, b) {
            skipped.push(entry);
            continue;
        }
        let found = dijkstra_path(&affinity, entry.endpoint_a, entry.endpoint_b)?;
        let key = Some(entry.label);
        uf.union(a, b);
        for &v in &found.path {
            // a route through another same-label segment joins it too
            if let Some(&c) = comp_at.get(&(key, v)) {
                uf.union(a, c as usize);
            }
            if members.entry(key).or_default().insert(v) {
                added.entry(key).or_default().insert(v);
            }
            affinity.set(v, opts.skeleton_affinity.max(affinity.get(v).unwrap_or(0.0)));
        }
        bridges.push(Bridge {
            label: entry.label,
            from: entry.endpoint_a,
            to: entry.endpoint_b,
            component_a: entry.component_a,
            component_b: entry.component_b,
            path: found.path,
            cost: found.cost,
        });
    }

    let mut paths = Vec::new();
    for (label, set) in &members {
        let new = added.get(label);
        for points in trace_polylines(set) {
            let bridged_spans = new.map_or_else(Vec::new, |new| spans(&points, new));
            paths.push(CenterlinePath {
                label: *label,
                points,
                bridged_spans,
            });
        }
    }
    Ok(Connection {
        paths,
        bridges,
        skipped,
    })
}

fn spans(points: &[Voxel], added: &BTreeSet<Voxel>) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, p) in points.iter().enumerate() {
        match (added.contains(p), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push([s, i]);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push([s, points.len()]);
    }
    out
}

pub fn write_paths(paths: &[CenterlinePath], path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(paths)?)?;
    Ok(())
}

pub fn read_paths(path: &Path) -> Result<Vec<CenterlinePath>> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Legacy ASCII VTK polydata with one line per path, in mm, for external
/// viewers.
pub fn write_vtk(paths: &[CenterlinePath], spacing: [f64; 3], path: &Path) -> Result<()> {
    use std::fmt::Write as _;
    let total: usize = paths.iter().map(|p| p.points.len()).sum();
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0\ncenterlines\nASCII\nDATASET POLYDATA");
    let _ = writeln!(out, "POINTS {total} double");
    for p in paths {
        for &v in &p.points {
            let m = crate::geometry::to_mm(voxel_to_f64(v), spacing);
            let _ = writeln!(out, "{} {} {}", m[0], m[1], m[2]);
        }
    }
    let _ = writeln!(out, "LINES {} {}", paths.len(), total + paths.len());
    let mut at = 0;
    for p in paths {
        let ids: Vec<String> = (at..at + p.points.len()).map(|i| i.to_string()).collect();
        let _ = writeln!(out, "{} {}", p.points.len(), ids.join(" "));
        at += p.points.len();
    }
    let _ = writeln!(
        out,
        "CELL_DATA {}\nSCALARS label int 1\nLOOKUP_TABLE default",
        paths.len()
    );
    for p in paths {
        let _ = writeln!(out, "{}", p.label.map_or(-1, |l| l as i64));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Volume;

    fn labeled(segments: &[(Vec<Voxel>, u32)], dims: [usize; 3]) -> SkeletonPointSet {
        let points: Vec<Voxel> = segments.iter().flat_map(|(p, _)| p.clone()).collect();
        let labels = segments
            .iter()
            .flat_map(|(p, l)| std::iter::repeat_n(Some(*l), p.len()))
            .collect();
        SkeletonPointSet::new(points, dims, [1.0; 3])
            .unwrap()
            .with_labels(labels)
            .unwrap()
    }

    fn xline(from: i32, to: i32) -> Vec<Voxel> {
        (from..to).map(|x| [x, 2, 2]).collect()
    }

    #[test]
    fn single_component_per_label_has_empty_queue() {
        let s = labeled(&[(xline(0, 5), 1), (xline(8, 12), 2)], [16, 5, 5]);
        assert!(build_pair_queue(&s).is_empty());
    }

    #[test]
    fn collinear_segments_closest_pair_first() {
        // tips at x = 0, 4 and x = 10, 15: the 4 -> 10 gap is 6 voxels
        let s = labeled(&[(xline(0, 5), 1), (xline(10, 16), 1)], [16, 5, 5]);
        let q = build_pair_queue(&s);
        assert_eq!(q.len(), 4);
        assert_eq!((q[0].endpoint_a, q[0].endpoint_b), ([4, 2, 2], [10, 2, 2]));
        assert_eq!(q[0].euclidean_gap, 6.0);
        assert!(q[1].euclidean_gap > 6.0);
        assert!(q.windows(2).all(|w| w[0].euclidean_gap <= w[1].euclidean_gap));
    }

    #[test]
    fn different_labels_never_pair() {
        let s = labeled(&[(xline(0, 5), 1), (xline(10, 16), 2)], [16, 5, 5]);
        assert!(build_pair_queue(&s).is_empty());
    }

    #[test]
    fn three_in_a_row_needs_two_bridges() {
        let s = labeled(&[(xline(0, 5), 1), (xline(8, 12), 1), (xline(15, 20), 1)], [20, 5, 5]);
        let heat = Volume::filled([20, 5, 5], [1.0; 3], 0.05f32).unwrap();
        let c = connect_segments(&s, &heat).unwrap();
        assert_eq!(c.bridges.len(), 2);
        assert!(c.skipped.iter().any(|e| (e.component_a, e.component_b) == (1, 3)));
        assert_eq!(c.paths.len(), 1);
        assert_eq!(c.paths[0].points.len(), 20);
        assert!(c.paths[0].is_chain());
        assert_eq!(c.paths[0].bridged_spans.len(), 2);
    }

    #[test]
    fn connected_skeleton_is_traced_unchanged() {
        let s = labeled(&[(xline(0, 10), 3)], [10, 5, 5]);
        let heat = Volume::filled([10, 5, 5], [1.0; 3], 0.05f32).unwrap();
        let c = connect_segments(&s, &heat).unwrap();
        assert!(c.bridges.is_empty());
        assert_eq!(
            c.paths,
            vec![CenterlinePath {
                label: Some(3),
                points: xline(0, 10),
                bridged_spans: vec![]
            }]
        );
    }

    #[test]
    fn disabled_bridging_leaves_gaps() {
        let s = labeled(&[(xline(0, 5), 1), (xline(8, 12), 1)], [12, 5, 5]);
        let heat = Volume::filled([12, 5, 5], [1.0; 3], 0.05f32).unwrap();
        let opts = ConnectOptions {
            bridging: false,
            ..Default::default()
        };
        let c = connect_segments_with(&s, &heat, &opts).unwrap();
        assert!(c.bridges.is_empty());
        assert_eq!(c.paths.len(), 2);
    }
}
