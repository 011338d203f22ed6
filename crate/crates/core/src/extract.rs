//! Accumulation of run tables into a pixel map, pixel ranking, and greedy
//! extraction of sufficient explanations.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::domain::{Config, Explanation, Pixel, PixelMask, ResponsibilityMap};
use crate::error::{Error, Result};
use crate::oracle::{Label, OracleError, Probe};
use crate::refine::RunTable;

/// Sums every table entry into the map, spread evenly over its region.
pub fn accumulate(tables: &[RunTable], height: usize, width: usize) -> ResponsibilityMap {
    let mut map = ResponsibilityMap::zeros(height, width);
    for table in tables {
        for e in &table.entries {
            let share = e.value / e.region.area() as f64;
            if share == 0.0 {
                continue;
            }
            for p in e.region.pixels() {
                map.add(p, share);
            }
        }
    }
    map.set_iterations_done(tables.len());
    map
}

/// Pixels from highest to lowest value; ties in row-major order.
pub fn rank_pixels(map: &ResponsibilityMap) -> Result<Vec<Pixel>> {
    rank_values(map.height(), map.width(), map.values())
}

/// [`rank_pixels`] over a raw row-major value grid.
pub fn rank_values(height: usize, width: usize, values: &[f64]) -> Result<Vec<Pixel>> {
    if values.len() != height * width {
        return Err(Error::DimensionMismatch {
            expected: format!("{} values", height * width),
            actual: values.len().to_string(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidMap(format!("non-finite value at index {i}")));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal));
    Ok(order.into_iter().map(|i| Pixel::new(i / width, i % width)).collect())
}

/// Grows a prefix of `ranking` until it alone reproduces `label`.
///
/// The fully masked image is tried first; if it already yields `label`, the
/// result is an empty, degenerate explanation. With `extraction_chunk > 1`
/// the final chunk is shrunk by bisection on the prefix length, testing
/// every candidate, so the returned prefix is always verified sufficient.
pub fn extract_explanation(probe: &Probe<'_>, ranking: &[Pixel], label: Label, cfg: &Config) -> Result<Explanation> {
    let (h, w) = probe.dims();
    grow_prefix(probe, ranking, &PixelMask::empty(h, w), label, cfg.extraction_chunk)
}

fn grow_prefix(
    probe: &Probe<'_>,
    ranking: &[Pixel],
    removed: &PixelMask,
    label: Label,
    chunk: usize,
) -> Result<Explanation> {
    let (h, w) = probe.dims();
    let masked_except = |len: usize| {
        let mut m = PixelMask::full(h, w);
        for &p in &ranking[..len] {
            m.remove(p);
        }
        m
    };
    let passes = |len: usize| -> Result<bool, OracleError> { Ok(probe.classify_one(&masked_except(len))?.label == label) };

    if passes(0)? {
        return Ok(Explanation {
            pixels: BTreeSet::new(),
            label,
            sufficient: true,
            degenerate_empty: removed.is_empty(),
        });
    }
    let chunk = chunk.max(1);
    let mut failing = 0;
    let mut passing = None;
    while failing < ranking.len() {
        let next = (failing + chunk).min(ranking.len());
        if passes(next)? {
            passing = Some(next);
            break;
        }
        failing = next;
    }
    let mut hi = passing.ok_or(Error::ExhaustedRanking)?;
    while hi - failing > 1 {
        let mid = failing + (hi - failing) / 2;
        if passes(mid)? {
            hi = mid;
        } else {
            failing = mid;
        }
    }
    Ok(Explanation {
        pixels: ranking[..hi].iter().copied().collect(),
        label,
        sufficient: true,
        degenerate_empty: false,
    })
}

/// Repeatedly extracts an explanation and then permanently masks its pixels,
/// yielding pairwise disjoint explanations from a single map.
///
/// Stops after `max_k` explanations, when the remaining pixels can no longer
/// reproduce the label, or when the oracle signals termination. Errors are
/// only returned if the first extraction fails.
pub fn extract_disjoint(
    probe: &Probe<'_>,
    map: &ResponsibilityMap,
    label: Label,
    cfg: &Config,
    max_k: usize,
) -> Result<Vec<Explanation>> {
    let (h, w) = probe.dims();
    let full_ranking = rank_pixels(map)?;
    let mut removed = PixelMask::empty(h, w);
    let mut found = Vec::new();
    while found.len() < max_k {
        let ranking: Vec<Pixel> = full_ranking.iter().copied().filter(|&p| !removed.contains(p)).collect();
        let e = match grow_prefix(probe, &ranking, &removed, label, cfg.extraction_chunk) {
            Ok(e) => e,
            Err(err) if found.is_empty() => return Err(err),
            Err(_) => break,
        };
        let stop = e.is_empty();
        for &p in &e.pixels {
            removed.insert(p);
        }
        found.push(e);
        if stop {
            break;
        }
    }
    Ok(found)
}
