//! Centerline overlap scores: OV (overall overlap), OF (overlap until the
//! first error) and OT (overlap on the clinically relevant part, i.e. where
//! the reference radius is at least the clinical threshold).
//!
//! Both curves are resampled to a uniform 0.5 mm pitch. A reference point is
//! a true positive (TPR) when some extracted point lies within the matching
//! threshold, otherwise a false negative; an extracted point is a true
//! positive (TPM) when some reference point lies within the threshold,
//! otherwise a false positive. Counts are unweighted.

mod report;

pub use report::{evaluate, evaluate_polylines, EvalConfig, ExtractedLine, MatchMode, OverlapReport, VesselScore};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{l2, to_mm};

/// Resampling pitch along both curves, in mm.
pub const PITCH_MM: f64 = 0.5;

/// Default clinical radius threshold in mm.
pub const CLINICAL_RADIUS_MM: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "mm")]
pub enum MatchRule {
    /// Fixed distance in mm.
    FixedMm(f64),
    /// The reference point's own lumen radius.
    LocalRadius,
}

/// A curve resampled at uniform arc-length pitch, in mm.
#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub points: Vec<[f64; 3]>,
    pub radii: Vec<f64>,
}

/// Resamples a voxel-space polyline at `pitch` mm. The curve of length `L`
/// is cut into `n = max(1, round(L / pitch))` equal pieces and each piece
/// contributes its midpoint; radii are interpolated linearly.
pub fn resample_polyline(points: &[[f64; 3]], radii: Option<&[f64]>, spacing: [f64; 3], pitch: f64) -> Resampled {
    let mm: Vec<[f64; 3]> = points.iter().map(|&p| to_mm(p, spacing)).collect();
    let radius_at = |i: usize| radii.map_or(0.0, |r| r[i]);
    if mm.is_empty() {
        return Resampled {
            points: vec![],
            radii: vec![],
        };
    }
    let seg: Vec<f64> = mm.windows(2).map(|w| l2(w[0], w[1])).collect();
    let total: f64 = seg.iter().sum();
    if total == 0.0 {
        return Resampled {
            points: vec![mm[0]],
            radii: vec![radius_at(0)],
        };
    }
    let n = ((total / pitch).round() as usize).max(1);
    let step = total / n as f64;
    let mut out = Resampled {
        points: Vec::with_capacity(n),
        radii: Vec::with_capacity(n),
    };
    let mut piece = 0;
    let mut before = 0.0;
    for k in 0..n {
        let target = (k as f64 + 0.5) * step;
        while piece + 1 < seg.len() && before + seg[piece] < target {
            before += seg[piece];
            piece += 1;
        }
        let t = if seg[piece] > 0.0 {
            ((target - before) / seg[piece]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (a, b) = (mm[piece], mm[piece + 1]);
        out.points.push([0, 1, 2].map(|ax| a[ax] + (b[ax] - a[ax]) * t));
        out.radii
            .push(radius_at(piece) + (radius_at(piece + 1) - radius_at(piece)) * t);
    }
    out
}

/// Per-point match flags between a reference curve and an extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pub reference_matched: Vec<bool>,
    pub reference_radius: Vec<f64>,
    pub extracted_matched: Vec<bool>,
    /// Index of the closest reference point of every extracted point.
    pub extracted_nearest: Vec<usize>,
}

/// Matches a reference curve (root to tip, with per-point radii in mm)
/// against any number of extracted polylines. All coordinates are voxel
/// coordinates on a grid with the given spacing.
pub fn correspond(
    reference: &[[f64; 3]],
    reference_radii: &[f64],
    extracted: &[Vec<[f64; 3]>],
    spacing: [f64; 3],
    rule: MatchRule,
) -> Result<Correspondence> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    if reference_radii.len() != reference.len() {
        return Err(Error::SizeMismatch {
            left: reference_radii.len(),
            right: reference.len(),
        });
    }
    if let MatchRule::FixedMm(t) = rule {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Config(format!("match threshold must be >= 0, got {t}")));
        }
    }
    let r = resample_polyline(reference, Some(reference_radii), spacing, PITCH_MM);
    let e: Vec<[f64; 3]> = extracted
        .iter()
        .filter(|l| !l.is_empty())
        .flat_map(|l| resample_polyline(l, None, spacing, PITCH_MM).points)
        .collect();
    let threshold = |ri: usize| match rule {
        MatchRule::FixedMm(t) => t,
        MatchRule::LocalRadius => r.radii[ri],
    };

    let mut reference_matched = vec![false; r.points.len()];
    let mut extracted_matched = vec![false; e.len()];
    let mut extracted_nearest = vec![0; e.len()];
    for (ei, &ep) in e.iter().enumerate() {
        let mut best = f64::INFINITY;
        for (ri, &rp) in r.points.iter().enumerate() {
            let d = l2(ep, rp);
            if d <= threshold(ri) {
                reference_matched[ri] = true;
                extracted_matched[ei] = true;
            }
            if d < best {
                best = d;
                extracted_nearest[ei] = ri;
            }
        }
    }
    Ok(Correspondence {
        reference_matched,
        reference_radius: r.radii,
        extracted_matched,
        extracted_nearest,
    })
}

fn dice_like(tpr: usize, fn_: usize, tpm: usize, fp: usize) -> f64 {
    let denom = tpr + fn_ + tpm + fp;
    if denom == 0 {
        0.0
    } else {
        (tpm + tpr) as f64 / denom as f64
    }
}

/// OV = (TPM + TPR) / (TPM + TPR + FN + FP).
pub fn overlap_ov(c: &Correspondence) -> f64 {
    let tpr = c.reference_matched.iter().filter(|&&m| m).count();
    let tpm = c.extracted_matched.iter().filter(|&&m| m).count();
    dice_like(
        tpr,
        c.reference_matched.len() - tpr,
        tpm,
        c.extracted_matched.len() - tpm,
    )
}

/// Fraction of the reference, from its root, covered before the first miss.
pub fn overlap_of(c: &Correspondence) -> f64 {
    let n = c.reference_matched.len();
    let first_miss = c.reference_matched.iter().position(|&m| !m).unwrap_or(n);
    first_miss as f64 / n as f64
}

/// OV restricted to reference points with radius >= `clinical_radius_mm`
/// and to the extracted points whose closest reference point is one of them.
/// `None` when no reference point is clinically relevant.
pub fn overlap_ot(c: &Correspondence, clinical_radius_mm: f64) -> Option<f64> {
    let clinical: Vec<bool> = c.reference_radius.iter().map(|&r| r >= clinical_radius_mm).collect();
    if !clinical.iter().any(|&x| x) {
        return None;
    }
    let (mut tpr, mut fn_, mut tpm, mut fp) = (0, 0, 0, 0);
    for (m, _) in c.reference_matched.iter().zip(&clinical).filter(|(_, &cl)| cl) {
        if *m {
            tpr += 1;
        } else {
            fn_ += 1;
        }
    }
    for (m, &near) in c.extracted_matched.iter().zip(&c.extracted_nearest) {
        if clinical[near] {
            if *m {
                tpm += 1;
            } else {
                fp += 1;
            }
        }
    }
    Some(dice_like(tpr, fn_, tpm, fp))
}
