//! Uniform Catmull-Rom curves and arc-length resampling.

fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

fn catmull_rom(p0: [f64; 3], p1: [f64; 3], p2: [f64; 3], p3: [f64; 3], t: f64) -> [f64; 3] {
    let t2 = t * t;
    let t3 = t2 * t;
    let mut out = [0.0; 3];
    for a in 0..3 {
        out[a] = 0.5
            * (2.0 * p1[a]
                + (-p0[a] + p2[a]) * t
                + (2.0 * p0[a] - 5.0 * p1[a] + 4.0 * p2[a] - p3[a]) * t2
                + (-p0[a] + 3.0 * p1[a] - 3.0 * p2[a] + p3[a]) * t3);
    }
    out
}

/// Dense samples of the cubic curve through `control` (end tangents from
/// mirrored ghost points).
pub fn sample_curve(control: &[[f64; 3]], per_segment: usize) -> Vec<[f64; 3]> {
    assert!(control.len() >= 2);
    let n = control.len();
    let ghost_start = lerp(control[1], control[0], 2.0);
    let ghost_end = lerp(control[n - 2], control[n - 1], 2.0);
    let at = |i: isize| -> [f64; 3] {
        if i < 0 {
            ghost_start
        } else if i as usize >= n {
            ghost_end
        } else {
            control[i as usize]
        }
    };
    let mut out = Vec::with_capacity((n - 1) * per_segment + 1);
    for s in 0..n - 1 {
        let i = s as isize;
        for k in 0..per_segment {
            let t = k as f64 / per_segment as f64;
            out.push(catmull_rom(at(i - 1), at(i), at(i + 1), at(i + 2), t));
        }
    }
    out.push(control[n - 1]);
    out
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn polyline_length(points: &[[f64; 3]]) -> f64 {
    points.windows(2).map(|w| dist(w[0], w[1])).sum()
}

/// Points at arc-length positions `0, pitch, 2*pitch, ...` along a polyline,
/// always including the first point.
pub fn resample_by_arc_length(points: &[[f64; 3]], pitch: f64) -> Vec<[f64; 3]> {
    let mut out = vec![points[0]];
    let mut next = pitch;
    let mut travelled = 0.0;
    for w in points.windows(2) {
        let len = dist(w[0], w[1]);
        while len > 0.0 && travelled + len >= next {
            out.push(lerp(w[0], w[1], (next - travelled) / len));
            next += pitch;
        }
        travelled += len;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_interpolates_control_points() {
        let control = [[0.0, 0.0, 0.0], [4.0, 2.0, 0.0], [8.0, 0.0, 1.0]];
        let s = sample_curve(&control, 10);
        assert_eq!(s[0], control[0]);
        assert_eq!(s[10], control[1]);
        assert_eq!(*s.last().unwrap(), control[2]);
    }

    #[test]
    fn straight_control_gives_straight_curve() {
        let control = [[0.0, 5.0, 5.0], [10.0, 5.0, 5.0], [20.0, 5.0, 5.0]];
        for p in sample_curve(&control, 16) {
            assert!((p[1] - 5.0).abs() < 1e-12 && (p[2] - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn arc_length_pitch() {
        let line = [[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]];
        let r = resample_by_arc_length(&line, 0.5);
        assert_eq!(r.len(), 21);
        assert!(r.windows(2).all(|w| (dist(w[0], w[1]) - 0.5).abs() < 1e-9));
    }
}
