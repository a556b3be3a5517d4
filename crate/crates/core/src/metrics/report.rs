use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{correspond, overlap_of, overlap_ot, overlap_ov, MatchRule, CLINICAL_RADIUS_MM};
use crate::error::{Error, Result};
use crate::geometry::voxel_to_f64;
use crate::pathfind::CenterlinePath;
use crate::phantom::Centerline;

/// How extracted paths are assigned to reference vessels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    /// All extracted paths carrying the vessel's label.
    ByLabel,
    /// The single extracted path with the highest OV.
    BestOv,
    /// `ByLabel` when any extracted path is labeled, otherwise `BestOv`.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub rule: MatchRule,
    pub clinical_radius_mm: f64,
    pub mode: MatchMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            rule: MatchRule::FixedMm(1.0),
            clinical_radius_mm: CLINICAL_RADIUS_MM,
            mode: MatchMode::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselScore {
    pub label: u32,
    pub ov: f64,
    pub of: f64,
    /// `None` when the vessel has no clinically relevant part.
    pub ot: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub ov: f64,
    pub of: f64,
    pub ot: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub note: String,
    pub rule: MatchRule,
    pub match_threshold_mm: Option<f64>,
    pub clinical_radius_mm: f64,
    pub per_vessel: Vec<VesselScore>,
    pub aggregate: Aggregate,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn score(
    reference: &Centerline,
    extracted: &[Vec<[f64; 3]>],
    spacing: [f64; 3],
    cfg: &EvalConfig,
) -> Result<VesselScore> {
    let radii = if reference.radii.is_empty() {
        vec![f64::INFINITY; reference.points.len()]
    } else {
        reference.radii.clone()
    };
    let c = correspond(&reference.points, &radii, extracted, spacing, cfg.rule)?;
    Ok(VesselScore {
        label: reference.label,
        ov: overlap_ov(&c),
        of: overlap_of(&c),
        ot: overlap_ot(&c, cfg.clinical_radius_mm),
    })
}

/// Scores every reference vessel against the extracted paths.
pub fn evaluate(
    reference: &[Centerline],
    extracted: &[CenterlinePath],
    spacing: [f64; 3],
    cfg: &EvalConfig,
) -> Result<OverlapReport> {
    let lines: Vec<ExtractedLine> = extracted
        .iter()
        .map(|p| ExtractedLine {
            label: p.label,
            points: p.points.iter().map(|&v| voxel_to_f64(v)).collect(),
        })
        .collect();
    evaluate_polylines(reference, &lines, spacing, cfg)
}

/// A labeled polyline in voxel coordinates, not necessarily on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedLine {
    pub label: Option<u32>,
    pub points: Vec<[f64; 3]>,
}

/// Like [`evaluate`], for real-valued polylines.
pub fn evaluate_polylines(
    reference: &[Centerline],
    extracted: &[ExtractedLine],
    spacing: [f64; 3],
    cfg: &EvalConfig,
) -> Result<OverlapReport> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let polyline = |p: &ExtractedLine| p.points.clone();
    let mode = match cfg.mode {
        MatchMode::Auto if extracted.iter().any(|p| p.label.is_some()) => MatchMode::ByLabel,
        MatchMode::Auto => MatchMode::BestOv,
        m => m,
    };
    let mut per_vessel = Vec::with_capacity(reference.len());
    for vessel in reference {
        let s = match mode {
            MatchMode::BestOv => {
                let mut best = score(vessel, &[], spacing, cfg)?;
                for p in extracted {
                    let s = score(vessel, &[polyline(p)], spacing, cfg)?;
                    if s.ov > best.ov {
                        best = s;
                    }
                }
                best
            }
            _ => {
                let lines: Vec<Vec<[f64; 3]>> = extracted
                    .iter()
                    .filter(|p| p.label == Some(vessel.label))
                    .map(polyline)
                    .collect();
                score(vessel, &lines, spacing, cfg)?
            }
        };
        per_vessel.push(s);
    }
    let aggregate = Aggregate {
        ov: mean(per_vessel.iter().map(|s| s.ov)).unwrap_or(0.0),
        of: mean(per_vessel.iter().map(|s| s.of)).unwrap_or(0.0),
        ot: mean(per_vessel.iter().filter_map(|s| s.ot)),
    };
    Ok(OverlapReport {
        note: "unweighted point counts; no inter-observer weighting".into(),
        rule: cfg.rule,
        match_threshold_mm: match cfg.rule {
            MatchRule::FixedMm(t) => Some(t),
            MatchRule::LocalRadius => None,
        },
        clinical_radius_mm: cfg.clinical_radius_mm,
        per_vessel,
        aggregate,
    })
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{:.1}", 100.0 * v))
}

impl OverlapReport {
    /// Aligned text table with OV/OF/OT percentages to one decimal.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let threshold = match self.rule {
            MatchRule::FixedMm(t) => format!("{t} mm"),
            MatchRule::LocalRadius => "local radius".into(),
        };
        let _ = writeln!(
            out,
            "# match threshold: {threshold}; clinical radius >= {} mm; {}",
            self.clinical_radius_mm, self.note
        );
        let _ = writeln!(out, "{:<12}{:>8}{:>8}{:>8}", "Vessel", "OV(%)", "OF(%)", "OT(%)");
        for s in &self.per_vessel {
            let _ = writeln!(
                out,
                "{:<12}{:>8}{:>8}{:>8}",
                s.label,
                pct(Some(s.ov)),
                pct(Some(s.of)),
                pct(s.ot)
            );
        }
        let a = &self.aggregate;
        let _ = writeln!(
            out,
            "{:<12}{:>8}{:>8}{:>8}",
            "Mean",
            pct(Some(a.ov)),
            pct(Some(a.of)),
            pct(a.ot)
        );
        out
    }

    pub fn write(&self, json_path: &Path, table_path: &Path) -> Result<()> {
        std::fs::write(json_path, serde_json::to_string_pretty(self)?)?;
        std::fs::write(table_path, self.to_table())?;
        Ok(())
    }
}
