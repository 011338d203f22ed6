//! Evaluation measures: explanation area, insertion and deletion curves, and
//! overlap with a ground-truth mask.

use std::io::Write;

use serde::Serialize;

use crate::domain::{Explanation, Pixel, PixelMask};
use crate::error::{Error, Result};
use crate::oracle::{Label, Probe};

/// Fraction of the image covered by the explanation.
pub fn explanation_area(e: &Explanation, height: usize, width: usize) -> f64 {
    e.len() as f64 / (height * width) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveResult {
    /// `(fraction of pixels inserted or deleted, confidence in the label)`,
    /// fractions strictly increasing from 0 to 1.
    pub points: Vec<(f64, f64)>,
    /// Trapezoid area under the curve.
    pub auc: f64,
    /// `auc` divided by `base_confidence`; equal to `auc` when not normalized.
    pub normalized_auc: f64,
    /// Confidence in the label on the unoccluded image.
    pub base_confidence: f64,
    /// False when the base confidence is 0 and no normalization took place.
    pub normalized: bool,
    /// True when the classifier only reports hard labels, making the curve a
    /// step function.
    pub step_like: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Insert,
    Delete,
}

/// Pixel counts at each of `steps` equal batches, including 0 and `n`.
fn step_counts(n: usize, steps: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = (0..=steps).map(|i| (i * n).div_ceil(steps)).collect();
    counts.dedup();
    counts
}

fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

fn curve(probe: &Probe<'_>, ranking: &[Pixel], label: Label, steps: usize, dir: Direction) -> Result<CurveResult> {
    let (h, w) = probe.dims();
    let n = h * w;
    if ranking.len() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("ranking of {n} pixels"),
            actual: ranking.len().to_string(),
        });
    }
    let counts = step_counts(n, steps.max(1));
    let masks: Vec<PixelMask> = counts
        .iter()
        .map(|&c| match dir {
            Direction::Insert => {
                let mut m = PixelMask::full(h, w);
                ranking[..c].iter().for_each(|&p| m.remove(p));
                m
            }
            Direction::Delete => {
                let mut m = PixelMask::empty(h, w);
                ranking[..c].iter().for_each(|&p| m.insert(p));
                m
            }
        })
        .collect();
    let results = probe.classify(&masks)?;
    let base = probe.original()?;
    let points: Vec<(f64, f64)> = counts
        .iter()
        .zip(&results)
        .map(|(&c, r)| (c as f64 / n as f64, r.score_for(label)))
        .collect();
    let auc = trapezoid(&points);
    let base_confidence = base.score_for(label);
    let normalized = base_confidence > 0.0;
    Ok(CurveResult {
        normalized_auc: if normalized { auc / base_confidence } else { auc },
        auc,
        points,
        base_confidence,
        normalized,
        step_like: results.iter().chain(std::iter::once(&base)).all(|r| r.full_scores.is_none()),
    })
}

/// Confidence in `label` as ranked pixels are revealed on a fully masked
/// canvas, in `steps` equal batches.
pub fn insertion_curve(probe: &Probe<'_>, ranking: &[Pixel], label: Label, steps: usize) -> Result<CurveResult> {
    curve(probe, ranking, label, steps, Direction::Insert)
}

/// Confidence in `label` as ranked pixels are masked on the original image.
pub fn deletion_curve(probe: &Probe<'_>, ranking: &[Pixel], label: Label, steps: usize) -> Result<CurveResult> {
    curve(probe, ranking, label, steps, Direction::Delete)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundTruthKind {
    /// The object of interest; a good explanation lies inside.
    Segmentation,
    /// An occluding distractor; a good explanation lies outside.
    Occlusion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthMask {
    pub kind: GroundTruthKind,
    pub pixels: PixelMask,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub inside: f64,
    pub outside: f64,
}

/// Share of the explanation inside and outside the mask, or `None` for an
/// empty explanation.
pub fn overlap(e: &Explanation, g: &GroundTruthMask) -> Result<Option<Overlap>> {
    if e.is_empty() {
        return Ok(None);
    }
    let (h, w) = g.pixels.dims();
    if let Some(p) = e.pixels.iter().find(|p| p.row >= h || p.col >= w) {
        return Err(Error::DimensionMismatch {
            expected: format!("pixels within {h}x{w}"),
            actual: format!("({}, {})", p.row, p.col),
        });
    }
    let hits = e.pixels.iter().filter(|&&p| g.pixels.contains(p)).count();
    let inside = hits as f64 / e.len() as f64;
    Ok(Some(Overlap {
        inside,
        outside: 1.0 - inside,
    }))
}

/// One line of the per-image metrics table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub image_id: String,
    pub area: Option<f64>,
    pub ins_auc: Option<f64>,
    pub del_auc: Option<f64>,
    #[serde(rename = "in")]
    pub inside: Option<f64>,
    #[serde(rename = "out")]
    pub outside: Option<f64>,
    pub calls: u64,
    pub seconds: f64,
}

/// Writes rows as CSV with a header; absent values are empty fields.
pub fn write_metrics_csv<W: Write>(out: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CurvePoint<'a> {
    curve: &'a str,
    fraction: f64,
    confidence: f64,
}

/// Writes named curves as `curve,fraction,confidence` rows.
pub fn write_curves_csv<W: Write>(out: W, curves: &[(&str, &CurveResult)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (name, c) in curves {
        for &(fraction, confidence) in &c.points {
            w.serialize(CurvePoint {
                curve: name,
                fraction,
                confidence,
            })
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}
