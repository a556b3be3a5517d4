use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SkeletonPointSet;

/// Splits `n` slots across groups proportionally to `sizes` (largest
/// remainder, ties to the lower group index), giving every non-empty group at
/// least one slot.
pub fn proportional_allocation(sizes: &[usize], n: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if total <= n {
        return sizes.to_vec();
    }
    let mut alloc: Vec<usize> = sizes.iter().map(|&s| s * n / total).collect();
    for (a, &s) in alloc.iter_mut().zip(sizes) {
        if s > 0 && *a == 0 {
            *a = 1;
        }
    }
    let assigned: usize = alloc.iter().sum();
    if assigned < n {
        // remainder of s*n/total, compared as exact integers
        let mut order: Vec<usize> = (0..sizes.len()).filter(|&i| alloc[i] < sizes[i]).collect();
        order.sort_by(|&a, &b| {
            let ra = (sizes[a] * n) % total;
            let rb = (sizes[b] * n) % total;
            rb.cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle().take(n - assigned) {
            alloc[i] += 1;
        }
    } else if assigned > n {
        // minimum-one bumps overshot: trim the largest allocations
        let mut excess = assigned - n;
        while excess > 0 {
            let i = (0..alloc.len())
                .filter(|&i| alloc[i] > 1)
                .max_by(|&a, &b| alloc[a].cmp(&alloc[b]).then(b.cmp(&a)));
            match i {
                Some(i) => {
                    alloc[i] -= 1;
                    excess -= 1;
                }
                None => break,
            }
        }
    }
    alloc
}

/// Stratified subsample to `n` points: each component keeps a share
/// proportional to its size and never drops below one point. Sets with at
/// most `n` points are returned unchanged.
pub fn resample(skel: &SkeletonPointSet, n: usize, seed: u64) -> SkeletonPointSet {
    assert!(n >= 1, "resample target must be at least 1");
    if skel.len() <= n {
        return skel.clone();
    }
    let count = skel.component_count();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (i, &c) in skel.component_ids().iter().enumerate() {
        members[c as usize - 1].push(i);
    }
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let alloc = proportional_allocation(&sizes, n);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; skel.len()];
    for (group, &take) in members.iter().zip(&alloc) {
        for j in sample(&mut rng, group.len(), take) {
            keep[group[j]] = true;
        }
    }
    let mut out = skel.subset(|i| keep[i]);
    // Subsampling breaks 26-adjacency; keep the source component ids.
    out.component = (0..skel.len())
        .filter(|&i| keep[i])
        .map(|i| skel.component_ids()[i])
        .collect();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Voxel;

    #[test]
    fn more_components_than_slots_keeps_one_each() {
        assert_eq!(proportional_allocation(&[7, 1, 1, 50], 3), vec![1, 1, 1, 1]);
    }

    #[test]
    fn ninety_ten_split() {
        assert_eq!(proportional_allocation(&[90, 10], 10), vec![9, 1]);
    }

    #[test]
    fn tiny_component_keeps_one() {
        assert_eq!(proportional_allocation(&[995, 5], 10), vec![9, 1]);
        assert_eq!(proportional_allocation(&[1, 1, 98], 10).iter().sum::<usize>(), 10);
    }

    #[test]
    fn allocation_sums_to_target() {
        for sizes in [vec![3, 3, 3], vec![7, 1, 1, 50], vec![6000], vec![2999, 3001]] {
            let total: usize = sizes.iter().sum();
            for n in sizes.len()..total {
                let a = proportional_allocation(&sizes, n);
                assert_eq!(a.iter().sum::<usize>(), n, "{sizes:?} n={n}");
                assert!(a.iter().zip(&sizes).all(|(&a, &s)| a >= 1 && a <= s));
            }
        }
    }

    fn lines(lengths: &[i32]) -> SkeletonPointSet {
        let mut pts: Vec<Voxel> = Vec::new();
        for (row, &len) in lengths.iter().enumerate() {
            for i in 0..len {
                pts.push([i % 100, 3 * row as i32 + 2 * (i / 100), 0]);
            }
        }
        SkeletonPointSet::new(pts, [100, 400, 1], [1.0; 3]).unwrap()
    }

    #[test]
    fn small_set_is_unchanged() {
        let s = lines(&[100]);
        assert_eq!(resample(&s, 3000, 1), s);
    }

    #[test]
    fn halves_each_component() {
        let s = lines(&[40, 60]);
        assert_eq!(s.component_count(), 2);
        let r = resample(&s, 50, 7);
        assert_eq!(r.len(), 50);
        let c1 = r.component_ids().iter().filter(|&&c| c == 1).count();
        assert_eq!(c1, 20);
    }

    #[test]
    fn deterministic_given_seed() {
        let s = lines(&[40, 60]);
        assert_eq!(resample(&s, 33, 5), resample(&s, 33, 5));
    }
}
