//! Sequential 6-subiteration thinning with a (26, 6) simple-point test.
//!
//! Each subiteration collects the border points facing one direction and
//! deletes them one at a time, in lexicographic order, re-checking simplicity
//! against the current state. Deleting one simple point at a time never
//! changes topology. Curve tips (exactly one 26-neighbor) are kept.

use std::sync::OnceLock;

use crate::geometry::Voxel;
use crate::volume::Mask;

/// Deletion directions: up, down, north, south, east, west.
const DIRECTIONS: [[i32; 3]; 6] = [[0, 0, 1], [0, 0, -1], [0, 1, 0], [0, -1, 0], [1, 0, 0], [-1, 0, 0]];

const CENTER: usize = 13;

#[inline]
fn cell(d: [i32; 3]) -> usize {
    ((d[0] + 1) + 3 * (d[1] + 1) + 9 * (d[2] + 1)) as usize
}

fn cell_offset(i: usize) -> [i32; 3] {
    [(i % 3) as i32 - 1, ((i / 3) % 3) as i32 - 1, (i / 9) as i32 - 1]
}

struct Tables {
    adj26: [u32; 27],
    adj6: [u32; 27],
    n18: u32,
    faces: u32,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut adj26 = [0u32; 27];
        let mut adj6 = [0u32; 27];
        let mut n18 = 0u32;
        let mut faces = 0u32;
        for i in 0..27 {
            let a = cell_offset(i);
            let nonzero = a.iter().filter(|&&c| c != 0).count();
            if i != CENTER && nonzero <= 2 {
                n18 |= 1 << i;
            }
            if nonzero == 1 {
                faces |= 1 << i;
            }
            for j in 0..27 {
                if i == j || j == CENTER {
                    continue;
                }
                let b = cell_offset(j);
                let diff: Vec<i32> = (0..3).map(|k| (a[k] - b[k]).abs()).collect();
                if diff.iter().all(|&d| d <= 1) {
                    adj26[i] |= 1 << j;
                    if diff.iter().sum::<i32>() == 1 {
                        adj6[i] |= 1 << j;
                    }
                }
            }
        }
        Tables {
            adj26,
            adj6,
            n18,
            faces,
        }
    })
}

/// Splits `set` into connected pieces under `adj`, returning each piece.
fn pieces(mut set: u32, adj: &[u32; 27]) -> impl Iterator<Item = u32> + '_ {
    std::iter::from_fn(move || {
        if set == 0 {
            return None;
        }
        let mut comp = set & set.wrapping_neg();
        loop {
            let mut grown = comp;
            let mut bits = comp;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                grown |= adj[b] & set;
            }
            if grown == comp {
                break;
            }
            comp = grown;
        }
        set &= !comp;
        Some(comp)
    })
}

/// Simple-point test on a 27-bit neighborhood (bit `cell(d)` set when the
/// voxel at offset `d` is foreground; the center bit is ignored).
///
/// The center is simple iff its foreground 26-neighbors form exactly one
/// 26-component and the background voxels of its 18-neighborhood form exactly
/// one 6-component touching a face neighbor.
pub fn is_simple(neighborhood: u32) -> bool {
    let t = tables();
    let fg = neighborhood & !(1 << CENTER) & ((1 << 27) - 1);
    if pieces(fg, &t.adj26).take(2).count() != 1 {
        return false;
    }
    let bg = !neighborhood & t.n18;
    pieces(bg, &t.adj6).filter(|c| c & t.faces != 0).take(2).count() == 1
}

/// Working grid with a one-voxel background border.
struct Padded {
    dims: [usize; 3],
    data: Vec<u8>,
}

impl Padded {
    fn new(mask: &Mask) -> Self {
        let d = mask.dims();
        let dims = [d[0] + 2, d[1] + 2, d[2] + 2];
        let mut data = vec![0u8; dims[0] * dims[1] * dims[2]];
        for v in mask.foreground() {
            let i = Self::idx_in(dims, v);
            data[i] = 1;
        }
        Self { dims, data }
    }

    #[inline]
    fn idx_in(dims: [usize; 3], v: Voxel) -> usize {
        (v[0] + 1) as usize + dims[0] * ((v[1] + 1) as usize + dims[1] * (v[2] + 1) as usize)
    }

    #[inline]
    fn idx(&self, v: Voxel) -> usize {
        Self::idx_in(self.dims, v)
    }

    fn neighborhood(&self, v: Voxel) -> u32 {
        let mut bits = 0u32;
        let base = self.idx(v) as isize;
        let sx = 1isize;
        let sy = self.dims[0] as isize;
        let sz = (self.dims[0] * self.dims[1]) as isize;
        let mut i = 0;
        for dz in -1..=1isize {
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    if self.data[(base + dx * sx + dy * sy + dz * sz) as usize] != 0 {
                        bits |= 1 << i;
                    }
                    i += 1;
                }
            }
        }
        bits
    }
}

/// Reduces a binary mask to a unit-width curve skeleton.
pub fn thin(mask: &Mask) -> Mask {
    let mut grid = Padded::new(mask);
    let mut fg = mask.foreground();
    loop {
        let mut changed = false;
        for dir in DIRECTIONS {
            let face = 1u32 << cell(dir);
            let candidates: Vec<Voxel> = fg
                .iter()
                .copied()
                .filter(|&v| grid.neighborhood(v) & face == 0)
                .collect();
            let mut deleted = false;
            for v in candidates {
                let nb = grid.neighborhood(v);
                let degree = (nb & !(1 << CENTER)).count_ones();
                if degree > 1 && is_simple(nb) {
                    let i = grid.idx(v);
                    grid.data[i] = 0;
                    deleted = true;
                }
            }
            if deleted {
                changed = true;
                fg.retain(|&v| grid.data[grid.idx(v)] != 0);
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = Mask::empty_mask(mask.dims(), mask.spacing()).expect("same grid as input");
    for v in fg {
        out.set(v, 1);
    }
    out
}

/// Neighborhood bits of `v` in an unpadded mask (outside counts as background).
fn neighborhood_of(mask: &Mask, v: Voxel) -> u32 {
    let mut bits = 0u32;
    for i in 0..27 {
        let d = cell_offset(i);
        if mask.is_set([v[0] + d[0], v[1] + d[1], v[2] + d[2]]) {
            bits |= 1 << i;
        }
    }
    bits
}

/// True when some foreground voxel is a simple point that is not a curve tip,
/// i.e. the mask is not yet fully thinned.
pub fn has_deletable_point(mask: &Mask) -> bool {
    mask.foreground().into_iter().any(|v| {
        let nb = neighborhood_of(mask, v);
        (nb & !(1 << CENTER)).count_ones() > 1 && is_simple(nb)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::count_components;

    fn bits(offsets: &[[i32; 3]]) -> u32 {
        offsets.iter().fold(1 << CENTER, |acc, &d| acc | 1 << cell(d))
    }

    #[test]
    fn simple_point_cases() {
        // isolated point: no foreground neighbor
        assert!(!is_simple(bits(&[])));
        // tip of a line
        assert!(is_simple(bits(&[[1, 0, 0]])));
        // middle of a line: removal splits it
        assert!(!is_simple(bits(&[[1, 0, 0], [-1, 0, 0]])));
        // interior point: no background face neighbor
        let all: Vec<[i32; 3]> = (0..27).filter(|&i| i != CENTER).map(cell_offset).collect();
        assert!(!is_simple(bits(&all)));
        // corner of an L
        assert!(is_simple(bits(&[[1, 0, 0], [0, 1, 0], [1, 1, 0]])));
        // ring around the center in a plane: deleting punches a tunnel
        let ring: Vec<[i32; 3]> = vec![
            [1, 0, 0],
            [-1, 0, 0],
            [0, 1, 0],
            [0, -1, 0],
            [1, 1, 0],
            [1, -1, 0],
            [-1, 1, 0],
            [-1, -1, 0],
        ];
        assert!(!is_simple(bits(&ring)));
    }

    #[test]
    fn single_voxel_survives() {
        let m = Mask::from_voxels([3, 3, 3], [1.0; 3], &[[1, 1, 1]]).unwrap();
        assert_eq!(thin(&m), m);
    }

    #[test]
    fn unit_line_is_unchanged() {
        let line: Vec<Voxel> = (0..20).map(|z| [0, 0, z]).collect();
        let m = Mask::from_voxels([1, 1, 20], [1.0; 3], &line).unwrap();
        assert_eq!(thin(&m), m);
    }

    #[test]
    fn empty_mask_gives_empty_skeleton() {
        let m = Mask::empty_mask([4, 4, 4], [1.0; 3]).unwrap();
        assert_eq!(thin(&m).count(), 0);
    }

    #[test]
    fn solid_tube_thins_to_central_curve() {
        let mut vox = Vec::new();
        for z in 0..20 {
            for y in 1..4 {
                for x in 1..4 {
                    vox.push([x, y, z]);
                }
            }
        }
        let m = Mask::from_voxels([5, 5, 20], [1.0; 3], &vox).unwrap();
        let s = thin(&m);
        let pts = s.foreground();
        assert!(pts.len() >= 10, "skeleton collapsed to {} voxels", pts.len());
        assert!(pts.iter().all(|p| (p[0] - 2).abs() <= 1 && (p[1] - 2).abs() <= 1));
        assert!(!has_deletable_point(&s));
        assert_eq!(count_components(&pts), 1);
        // curve: at most two tips and no branching
        let deg = crate::skeleton::neighbor_degrees(&pts);
        assert_eq!(deg.iter().filter(|&&d| d == 1).count(), 2);
        assert!(deg.iter().all(|&d| d <= 2));
    }

    #[test]
    fn solid_ball_collapses() {
        let mut vox = Vec::new();
        for z in 0..7 {
            for y in 0..7 {
                for x in 0..7 {
                    if (x - 3) * (x - 3) + (y - 3) * (y - 3) + (z - 3) * (z - 3) <= 9 {
                        vox.push([x, y, z]);
                    }
                }
            }
        }
        let m = Mask::from_voxels([7, 7, 7], [1.0; 3], &vox).unwrap();
        // tip protection can leave a two-voxel stub
        let s = thin(&m);
        assert!(s.count() <= 2);
        assert_eq!(count_components(&s.foreground()), 1);
    }

    #[test]
    fn hollow_box_keeps_its_cavity() {
        let mut vox = Vec::new();
        for z in 0..5 {
            for y in 0..5 {
                for x in 0..5 {
                    let interior = (1..4).contains(&x) && (1..4).contains(&y) && (1..4).contains(&z);
                    if !interior {
                        vox.push([x, y, z]);
                    }
                }
            }
        }
        let m = Mask::from_voxels([5, 5, 5], [1.0; 3], &vox).unwrap();
        let s = thin(&m);
        // the enclosed cavity must survive: some background voxel is still
        // unreachable from outside
        assert!(s.count() > 1);
        assert!(!has_deletable_point(&s));
    }
}
