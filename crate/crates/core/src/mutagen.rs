//! Random partition sampling and mutant materialization.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{ChildSet, Image, MaskColor, MutantSpec, Partition, Region};
use crate::error::{Error, Result};

/// Seedable, splittable source for partition split points.
///
/// Iteration `i` of a run with seed `s` draws from ChaCha8 stream `i` of key
/// `s`, so iterations are independent of each other and of scheduling.
#[derive(Debug, Clone)]
pub struct PartitionRng(ChaCha8Rng);

impl PartitionRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn for_iteration(seed: u64, iteration: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(iteration);
        Self(rng)
    }

    /// Uniform value in `[0, bound)` from exactly one 64-bit draw
    /// (multiply-shift reduction).
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((u128::from(self.0.next_u64()) * u128::from(bound)) >> 64) as u64
    }
}

/// Splits `region` at a uniformly random interior point.
///
/// Consumes exactly two draws: the split row, then the split column. Regions
/// narrower than 2 pixels in either direction are terminal.
pub fn sample_partition(region: Region, rng: &mut PartitionRng) -> Result<Partition> {
    if !region.splittable() {
        return Err(Error::RegionTooSmall { h: region.h, w: region.w });
    }
    let split_row = 1 + rng.below(region.h as u64 - 1) as usize;
    let split_col = 1 + rng.below(region.w as u64 - 1) as usize;
    Partition::new(region, split_row, split_col)
}

/// `x` with the masked children and background regions set to `color`.
pub fn materialize(x: &Image, m: &MutantSpec, color: &MaskColor) -> Image {
    x.masked(&m.to_mask(x.height(), x.width()), color)
}

/// The 14 mutants masking each proper, non-empty subset of the children,
/// in ascending bitset order. The empty mask (the parent configuration) and
/// the full mask are left out.
pub fn enumerate_mutants(p: &Partition, held: &[Region], background: &[Region]) -> Vec<MutantSpec> {
    (1u8..15)
        .map(|bits| MutantSpec::new(*p, ChildSet::from_bits(bits), held.to_vec(), background.to_vec()))
        .collect()
}
