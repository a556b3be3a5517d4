use std::collections::BTreeMap;

use super::knn::{knn_graph, pair_distance};
use super::{GroupingConfig, Metric};
use crate::error::{Error, Result};
use crate::skeleton::{SkeletonPointSet, FALSE_POSITIVE};

const MAX_ROUNDS: usize = 100;

/// Most frequent label; ties go to `prefer` when it is among the leaders,
/// otherwise to the smallest class id.
fn majority<I: IntoIterator<Item = u32>>(labels: I, prefer: Option<u32>) -> Option<u32> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let top = *counts.values().max()?;
    if let Some(p) = prefer {
        if counts.get(&p) == Some(&top) {
            return Some(p);
        }
    }
    counts.into_iter().find(|&(_, c)| c == top).map(|(l, _)| l)
}

/// Seeded label propagation over the geometry-aware k-NN graph.
///
/// Rounds are synchronous: round `r` reads only the labels of round `r - 1`.
/// Seeds never change. Points the vote never reaches take the label of the
/// nearest labeled point (geometry-aware distance), and finally every
/// component is made uniform: its seeds decide when it has any, otherwise the
/// majority of its points.
pub fn propagate_labels(skel: &SkeletonPointSet, cfg: &GroupingConfig) -> Result<SkeletonPointSet> {
    cfg.validate()?;
    if cfg.seeds.is_empty() {
        return Err(Error::UnlabeledProblem);
    }
    let n = skel.len();
    let mut seed: Vec<Option<u32>> = vec![None; n];
    for &(i, label) in &cfg.seeds {
        if i >= n {
            return Err(Error::Config(format!("seed index {i} out of range for {n} points")));
        }
        seed[i] = Some(label);
    }

    let mut labels = seed.clone();
    if n > 1 {
        let k = cfg.k.min(n - 1);
        let graph = knn_graph(skel, &GroupingConfig { k, ..cfg.clone() }, Metric::Gag)?;
        for _ in 0..MAX_ROUNDS {
            let next: Vec<Option<u32>> = (0..n)
                .map(|i| {
                    seed[i].or_else(|| majority(graph[i].iter().filter_map(|&j| labels[j]), labels[i]).or(labels[i]))
                })
                .collect();
            if next == labels {
                break;
            }
            labels = next;
        }
    }

    // Points the vote never reached, nearest first: each round assigns the
    // unlabeled point closest to any labeled one (including points assigned
    // in earlier rounds).
    let mm: Vec<[f64; 3]> = (0..n).map(|i| skel.point_mm(i)).collect();
    let dist = |i: usize, j: usize| pair_distance(skel, &mm, i, j, Metric::Gag, cfg.lambda);
    let mut best: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); n];
    let relax = |best: &mut Vec<(f64, usize)>, labels: &[Option<u32>], from: usize| {
        for i in 0..n {
            if labels[i].is_some() {
                continue;
            }
            let d = dist(i, from);
            let (bd, bj) = best[i];
            if d < bd || (d == bd && bj != usize::MAX && skel.points()[from] < skel.points()[bj]) {
                best[i] = (d, from);
            }
        }
    };
    for j in 0..n {
        if labels[j].is_some() {
            relax(&mut best, &labels, j);
        }
    }
    while let Some(i) = (0..n).filter(|&i| labels[i].is_none()).min_by(|&a, &b| {
        best[a]
            .0
            .total_cmp(&best[b].0)
            .then(skel.points()[a].cmp(&skel.points()[b]))
    }) {
        labels[i] = labels[best[i].1];
        relax(&mut best, &labels, i);
    }

    // per-component constancy
    let comps = skel.component_ids();
    let count = skel.component_count();
    let mut decided = vec![None; count + 1];
    for (c, slot) in decided.iter_mut().enumerate().skip(1) {
        let members = (0..n).filter(|&i| comps[i] as usize == c);
        let seeded = majority(members.clone().filter_map(|i| seed[i]), None);
        *slot = seeded.or_else(|| majority(members.filter_map(|i| labels[i]), None));
    }
    let final_labels = (0..n).map(|i| decided[comps[i] as usize].or(labels[i])).collect();
    skel.clone().with_labels(final_labels)
}

/// Drops every point labeled as false positive; components are recomputed.
pub fn remove_false_positives(skel: &SkeletonPointSet) -> SkeletonPointSet {
    skel.subset(|i| skel.labels()[i] != Some(FALSE_POSITIVE))
}

/// Fraction of points whose predicted label equals the reference label.
pub fn labeling_accuracy(predicted: &[Option<u32>], reference: &[Option<u32>]) -> Result<f64> {
    if predicted.len() != reference.len() {
        return Err(Error::SizeMismatch {
            left: predicted.len(),
            right: reference.len(),
        });
    }
    if predicted.is_empty() {
        return Ok(1.0);
    }
    let hits = predicted.iter().zip(reference).filter(|(p, r)| p == r).count();
    Ok(hits as f64 / predicted.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Voxel;

    fn three_segments() -> SkeletonPointSet {
        let mut pts: Vec<Voxel> = Vec::new();
        pts.extend((0..8).map(|x| [x, 0, 0]));
        pts.extend((0..8).map(|x| [x, 5, 0]));
        pts.push([20, 20, 0]);
        SkeletonPointSet::new(pts, [32, 32, 1], [1.0; 3]).unwrap()
    }

    #[test]
    fn each_component_takes_its_seed() {
        let s = three_segments();
        let cfg = GroupingConfig::new(0.3, 3)
            .unwrap()
            .with_seeds(vec![(0, 1), (12, 2), (16, 0)]);
        let out = propagate_labels(&s, &cfg).unwrap();
        for (i, &c) in s.component_ids().iter().enumerate() {
            let expect = match c {
                1 => 1,
                2 => 2,
                _ => 0,
            };
            assert_eq!(out.labels()[i], Some(expect), "point {i}");
        }
    }

    #[test]
    fn unseeded_component_takes_nearest_label() {
        let s = three_segments();
        let cfg = GroupingConfig::new(0.3, 3).unwrap().with_seeds(vec![(3, 4)]);
        let out = propagate_labels(&s, &cfg).unwrap();
        assert!(out.labels().iter().all(|&l| l == Some(4)));
    }

    #[test]
    fn labels_constant_per_component() {
        let s = three_segments();
        let cfg = GroupingConfig::new(0.3, 4)
            .unwrap()
            .with_seeds(vec![(0, 1), (7, 2), (10, 3)]);
        let out = propagate_labels(&s, &cfg).unwrap();
        for c in 1..=s.component_count() as u32 {
            let mut seen: Vec<_> = (0..s.len())
                .filter(|&i| s.component_ids()[i] == c)
                .map(|i| out.labels()[i])
                .collect();
            seen.dedup();
            assert_eq!(seen.len(), 1);
        }
    }

    #[test]
    fn no_seeds_is_an_error() {
        let s = three_segments();
        assert!(matches!(
            propagate_labels(&s, &GroupingConfig::default()),
            Err(Error::UnlabeledProblem)
        ));
    }

    #[test]
    fn false_positive_removal() {
        let s = three_segments();
        let cfg = GroupingConfig::new(0.3, 3)
            .unwrap()
            .with_seeds(vec![(0, 1), (12, 1), (16, 0)]);
        let labeled = propagate_labels(&s, &cfg).unwrap();
        let kept = remove_false_positives(&labeled);
        assert_eq!(kept.len(), 16);
        assert_eq!(kept.component_count(), 2);

        let none_fp = labeled.clone().with_labels(vec![Some(1); 17]).unwrap();
        assert_eq!(remove_false_positives(&none_fp), none_fp);
        let all_fp = labeled.with_labels(vec![Some(0); 17]).unwrap();
        assert!(remove_false_positives(&all_fp).is_empty());
    }

    #[test]
    fn accuracy_counts() {
        let a: Vec<Option<u32>> = vec![Some(1), Some(2), Some(1)];
        assert_eq!(labeling_accuracy(&a, &a).unwrap(), 1.0);
        let flipped: Vec<Option<u32>> = vec![Some(2), Some(1), Some(2)];
        assert_eq!(labeling_accuracy(&a, &flipped).unwrap(), 0.0);
        let mut p = vec![Some(1); 10];
        let r = vec![Some(1); 10];
        p[4] = Some(3);
        assert!((labeling_accuracy(&p, &r).unwrap() - 0.9).abs() < 1e-12);
        assert!(labeling_accuracy(&p, &r[..9]).is_err());
    }
}
