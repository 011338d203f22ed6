//! Exhaustive reference computations of causes, responsibility and minimum
//! explanations over small universes of disjoint units.
//!
//! A unit is a rectangular region (a single pixel is a 1x1 region). Pixels
//! outside the universe always keep their original values.

use itertools::Itertools;

use crate::domain::{PixelMask, Region};
use crate::error::{Error, Result};
use crate::oracle::{Label, Probe};

/// Largest universe enumerated in full (`2^LIMIT` masks).
pub const UNIVERSE_LIMIT: usize = 20;

fn check_universe(probe: &Probe<'_>, universe: &[Region], limit: Option<usize>) -> Result<()> {
    if let Some(limit) = limit {
        if universe.len() > limit {
            return Err(Error::UniverseTooLarge {
                size: universe.len(),
                limit,
            });
        }
    }
    let bounds = probe.image().bounds();
    for (i, a) in universe.iter().enumerate() {
        if !bounds.contains_region(a) {
            return Err(Error::InvalidPartition(format!("unit {a:?} outside the image")));
        }
        if universe[i + 1..].iter().any(|b| a.intersects(b)) {
            return Err(Error::InvalidPartition(format!("unit {a:?} overlaps another unit")));
        }
    }
    Ok(())
}

fn mask_of(probe: &Probe<'_>, universe: &[Region], members: impl IntoIterator<Item = usize>) -> PixelMask {
    let (h, w) = probe.dims();
    let mut m = PixelMask::empty(h, w);
    for i in members {
        m.insert_region(universe[i]);
    }
    m
}

/// Label outcomes of masking every subset of a universe.
#[derive(Debug, Clone)]
pub struct TruthTable {
    /// `passes[s]`: masking the units in bitset `s` keeps the label.
    pub passes: Vec<bool>,
    /// `closed[s]`: `s` and every subset of `s` keep the label.
    pub closed: Vec<bool>,
    units: usize,
}

impl TruthTable {
    pub fn build(probe: &Probe<'_>, universe: &[Region], label: Label) -> Result<Self> {
        check_universe(probe, universe, Some(UNIVERSE_LIMIT))?;
        let m = universe.len();
        let masks: Vec<PixelMask> = (0..1usize << m)
            .map(|s| mask_of(probe, universe, (0..m).filter(|b| s & (1 << b) != 0)))
            .collect();
        let passes: Vec<bool> = probe.classify(&masks)?.iter().map(|c| c.label == label).collect();
        Ok(Self::from_passes(passes))
    }

    /// Builds the table from raw outcomes; `passes.len()` must be a power of two.
    pub fn from_passes(passes: Vec<bool>) -> Self {
        assert!(passes.len().is_power_of_two());
        let units = passes.len().trailing_zeros() as usize;
        let mut closed = vec![false; passes.len()];
        for s in 0..passes.len() {
            closed[s] = passes[s] && (0..units).all(|b| s & (1 << b) == 0 || closed[s ^ (1 << b)]);
        }
        Self { passes, closed, units }
    }

    pub fn units(&self) -> usize {
        self.units
    }

    /// Smallest witness for `unit` as a bitset, lowest value among ties.
    pub fn witness(&self, unit: usize) -> Option<usize> {
        let bit = 1 << unit;
        (0..self.passes.len())
            .filter(|&s| s & bit == 0 && self.closed[s] && !self.passes[s | bit])
            .min_by_key(|&s| (s.count_ones(), s))
    }

    pub fn responsibility(&self, unit: usize) -> f64 {
        self.witness(unit)
            .map_or(0.0, |s| 1.0 / f64::from(s.count_ones() + 1))
    }
}

/// The smallest witness making `unit` a cause of `label`, as unit indices.
pub fn exact_witness(probe: &Probe<'_>, unit: usize, universe: &[Region], label: Label) -> Result<Option<Vec<usize>>> {
    let table = TruthTable::build(probe, universe, label)?;
    Ok(table
        .witness(unit)
        .map(|s| (0..universe.len()).filter(|b| s & (1 << b) != 0).collect()))
}

pub fn exact_cause(probe: &Probe<'_>, unit: usize, universe: &[Region], label: Label) -> Result<bool> {
    Ok(exact_witness(probe, unit, universe, label)?.is_some())
}

pub fn exact_responsibility(probe: &Probe<'_>, unit: usize, universe: &[Region], label: Label) -> Result<f64> {
    Ok(TruthTable::build(probe, universe, label)?.responsibility(unit))
}

/// All minimum-size subsets of `universe` that reproduce `label` when every
/// other unit is masked, as sorted index lists.
///
/// Sizes are tried in ascending order. Without `max_size` the universe is
/// limited to [`UNIVERSE_LIMIT`] units; with it, any universe is accepted and
/// an empty result means no subset of at most `max_size` units suffices.
pub fn exact_min_explanation(
    probe: &Probe<'_>,
    universe: &[Region],
    label: Label,
    max_size: Option<usize>,
) -> Result<Vec<Vec<usize>>> {
    check_universe(probe, universe, max_size.is_none().then_some(UNIVERSE_LIMIT))?;
    let m = universe.len();
    let all = mask_of(probe, universe, 0..m);
    const BATCH: usize = 4096;
    for size in 0..=max_size.unwrap_or(m).min(m) {
        let mut found = Vec::new();
        for group in &(0..m).combinations(size).chunks(BATCH) {
            let kept: Vec<Vec<usize>> = group.collect();
            let masks: Vec<PixelMask> = kept
                .iter()
                .map(|k| {
                    let mut mask = all.clone();
                    for &i in k {
                        for p in universe[i].pixels() {
                            mask.remove(p);
                        }
                    }
                    mask
                })
                .collect();
            for (k, c) in kept.into_iter().zip(probe.classify(&masks)?) {
                if c.label == label {
                    found.push(k);
                }
            }
        }
        if !found.is_empty() {
            return Ok(found);
        }
    }
    Ok(Vec::new())
}

/// Every pixel of the image as a 1x1 unit, row-major.
pub fn pixel_universe(height: usize, width: usize) -> Vec<Region> {
    (0..height)
        .flat_map(|r| (0..width).map(move |c| Region::new(r, c, 1, 1)))
        .collect()
}
