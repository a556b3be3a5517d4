use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{scaled_distance, GroupingConfig};
use crate::error::{Error, Result};
use crate::geometry::l2;
use crate::skeleton::SkeletonPointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Plain Euclidean distance.
    L2,
    /// Component-aware scaled distance.
    Gag,
}

/// Neighbor indices per point, nearest first.
pub type NeighborGraph = Vec<Vec<usize>>;

pub(crate) fn pair_distance(
    skel: &SkeletonPointSet,
    mm: &[[f64; 3]],
    i: usize,
    j: usize,
    metric: Metric,
    lambda: f64,
) -> f64 {
    let d = l2(mm[i], mm[j]);
    match metric {
        Metric::L2 => d,
        Metric::Gag => {
            let ids = skel.component_ids();
            scaled_distance(d, ids[i] == ids[j], lambda)
        }
    }
}

/// Brute-force k-NN graph. Ties are broken by lexicographic voxel order.
pub fn knn_graph(skel: &SkeletonPointSet, cfg: &GroupingConfig, metric: Metric) -> Result<NeighborGraph> {
    cfg.validate()?;
    if cfg.k >= skel.len() {
        return Err(Error::TooFewPoints {
            k: cfg.k,
            points: skel.len(),
        });
    }
    let mm: Vec<[f64; 3]> = (0..skel.len()).map(|i| skel.point_mm(i)).collect();
    let points = skel.points();
    Ok((0..skel.len())
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..skel.len())
                .filter(|&j| j != i)
                .map(|j| (pair_distance(skel, &mm, i, j, metric, cfg.lambda), j))
                .collect();
            let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(points[a.1].cmp(&points[b.1]));
            cand.select_nth_unstable_by(cfg.k - 1, order);
            cand.truncate(cfg.k);
            cand.sort_unstable_by(order);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect())
}

/// Pooled fraction of neighbor entries that share the query point's component.
pub fn neighborhood_purity(skel: &SkeletonPointSet, graph: &NeighborGraph) -> f64 {
    let ids = skel.component_ids();
    let (same, total) = graph
        .iter()
        .enumerate()
        .flat_map(|(i, nb)| nb.iter().map(move |&j| ids[i] == ids[j]))
        .fold((0usize, 0usize), |(s, t), same| (s + same as usize, t + 1));
    if total == 0 {
        1.0
    } else {
        same as f64 / total as f64
    }
}
