use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::union_find::UnionFind;
use crate::geometry::{offset, Voxel, NEIGHBORS_26};

/// Leaf branches up to this many voxels hanging off a junction are dropped.
pub const MAX_SPUR_VOXELS: usize = 2;

type Forest = BTreeMap<Voxel, BTreeSet<Voxel>>;

fn edge(a: Voxel, b: Voxel) -> (Voxel, Voxel) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Minimum spanning forest of the 26-adjacency graph, weighting each edge by
/// its squared step length (ties by voxel order). Face steps win over
/// diagonals, which removes the small cliques 26-adjacency creates.
fn spanning_forest(set: &BTreeSet<Voxel>) -> Forest {
    let index: HashMap<Voxel, usize> = set.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut edges = Vec::new();
    for &v in set {
        for &d in &NEIGHBORS_26 {
            let n = offset(v, d);
            if v < n && set.contains(&n) {
                let w: i32 = d.iter().map(|c| c * c).sum();
                edges.push((w, v, n));
            }
        }
    }
    edges.sort_unstable();
    let mut uf = UnionFind::new(set.len());
    let mut forest: Forest = set.iter().map(|&v| (v, BTreeSet::new())).collect();
    for (_, a, b) in edges {
        if uf.union(index[&a], index[&b]) {
            forest.get_mut(&a).expect("in set").insert(b);
            forest.get_mut(&b).expect("in set").insert(a);
        }
    }
    forest
}

/// Removes short leaf branches, never taking a junction below degree 2.
fn prune_spurs(forest: &mut Forest) {
    let mut spurs: BTreeMap<Voxel, Vec<(usize, Voxel, Vec<Voxel>)>> = BTreeMap::new();
    for (&leaf, nb) in forest.iter() {
        if nb.len() != 1 {
            continue;
        }
        let mut chain = vec![leaf];
        let mut prev = leaf;
        let mut cur = *nb.iter().next().expect("degree 1");
        while forest[&cur].len() == 2 && chain.len() <= MAX_SPUR_VOXELS {
            chain.push(cur);
            let next = *forest[&cur].iter().find(|&&n| n != prev).expect("degree 2");
            prev = cur;
            cur = next;
        }
        if forest[&cur].len() >= 3 && chain.len() <= MAX_SPUR_VOXELS {
            spurs.entry(cur).or_default().push((chain.len(), leaf, chain));
        }
    }
    for (junction, mut list) in spurs {
        list.sort();
        let removable = forest[&junction].len() - 2;
        for (_, _, chain) in list.into_iter().take(removable) {
            for v in chain {
                for n in forest.remove(&v).unwrap_or_default() {
                    if let Some(s) = forest.get_mut(&n) {
                        s.remove(&v);
                    }
                }
            }
        }
    }
}

/// Splits a unit-width voxel graph into simple polylines.
///
/// The graph is first reduced to a spanning forest with short spurs pruned.
/// Junctions (degree other than 2) end every polyline, so each emitted
/// polyline runs node to node through degree-2 voxels. Isolated voxels become
/// single-point polylines.
pub fn trace_polylines(set: &BTreeSet<Voxel>) -> Vec<Vec<Voxel>> {
    let mut forest = spanning_forest(set);
    prune_spurs(&mut forest);
    let is_node = |v: Voxel| forest[&v].len() != 2;
    let mut used: HashSet<(Voxel, Voxel)> = HashSet::new();
    let mut out = Vec::new();

    for (&v, nb) in &forest {
        if nb.is_empty() {
            out.push(vec![v]);
            continue;
        }
        if !is_node(v) {
            continue;
        }
        for &first in nb {
            if used.contains(&edge(v, first)) {
                continue;
            }
            let mut line = vec![v, first];
            used.insert(edge(v, first));
            let (mut prev, mut cur) = (v, first);
            while !is_node(cur) {
                let next = *forest[&cur].iter().find(|&&n| n != prev).expect("degree 2");
                used.insert(edge(cur, next));
                line.push(next);
                prev = cur;
                cur = next;
            }
            out.push(line);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[Voxel]) -> BTreeSet<Voxel> {
        v.iter().copied().collect()
    }

    #[test]
    fn straight_line_is_one_polyline() {
        let pts: Vec<Voxel> = (0..6).map(|x| [x, 0, 0]).collect();
        assert_eq!(trace_polylines(&set(&pts)), vec![pts]);
    }

    #[test]
    fn y_shape_splits_at_branch_point() {
        let mut pts: Vec<Voxel> = (0..5).map(|z| [5, 5, z]).collect();
        pts.extend((1..4).map(|i| [5 + i, 5, 4 + i]));
        pts.extend((1..4).map(|i| [5 - i, 5, 4 + i]));
        let lines = trace_polylines(&set(&pts));
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.contains(&[5, 5, 4])));
        let total: usize = lines.iter().map(|l| l.len() - 1).sum();
        assert_eq!(total, pts.len() - 1);
    }

    #[test]
    fn cycle_is_opened_into_one_polyline() {
        let pts = [[1, 0, 0], [2, 1, 0], [1, 2, 0], [0, 1, 0]];
        let lines = trace_polylines(&set(&pts));
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), 4);
    }

    #[test]
    fn isolated_point() {
        assert_eq!(trace_polylines(&set(&[[3, 3, 3]])), vec![vec![[3, 3, 3]]]);
    }

    #[test]
    fn diagonal_triangle_collapses() {
        // a corner voxel next to a diagonal step forms a 3-clique
        let mut pts: Vec<Voxel> = (0..5).map(|x| [x, 0, 0]).collect();
        pts.extend((5..10).map(|x| [x, 1, 0]));
        pts.push([5, 0, 0]);
        let lines = trace_polylines(&set(&pts));
        assert_eq!(lines.len(), 1, "{lines:?}");
        assert_eq!(lines[0].len(), pts.len());
    }

    #[test]
    fn short_spur_is_pruned() {
        let mut pts: Vec<Voxel> = (0..11).map(|x| [x, 0, 0]).collect();
        pts.push([5, 1, 0]);
        pts.push([5, 2, 0]);
        let lines = trace_polylines(&set(&pts));
        assert_eq!(lines, vec![(0..11).map(|x| [x, 0, 0]).collect::<Vec<_>>()]);
    }

    #[test]
    fn long_side_branch_is_kept() {
        let mut pts: Vec<Voxel> = (0..11).map(|x| [x, 0, 0]).collect();
        pts.extend((1..4).map(|y| [5, y, 0]));
        assert_eq!(trace_polylines(&set(&pts)).len(), 3);
    }
}
