//! Degree of responsibility of each superpixel of one partition.
//!
//! For child `j`, the responsibility is `1 / (k + 1)` where `k` is the
//! smallest number of sibling superpixels that can be masked such that
//!
//! * `j` itself stays unmasked,
//! * the mutant and every mutant masking a subset of the same siblings keeps
//!   the original label,
//! * additionally masking `j` changes the label.
//!
//! A child without any such witness gets 0. Everything is decided from the
//! 16 masking outcomes of the partition; the empty mask is the parent
//! configuration and the full mask is usually known from the enclosing scope.

use crate::domain::{ChildSet, Partition, PixelMask, Region};
use crate::oracle::{Label, OracleError, Probe};

/// Where a partition sits inside the image being refined.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScopeContext<'a> {
    /// Masked regions outside the partition.
    pub background: &'a [Region],
    /// Regions kept at their original values and excluded from responsibility.
    pub held: &'a [Region],
    /// Whether masking every child keeps the label, when already known.
    pub full_pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResponsibility {
    /// Responsibility per child, in partition order.
    pub values: [f64; 4],
    /// `passes[m]`: the mutant masking child set `m` keeps the original label.
    pub passes: [bool; 16],
}

impl PartitionResponsibility {
    /// Masks (as child sets) whose mutant keeps the label, including the empty mask.
    pub fn passing_sets(&self) -> Vec<ChildSet> {
        (0u8..16)
            .filter(|&m| self.passes[m as usize])
            .map(ChildSet::from_bits)
            .collect()
    }

    pub fn all_equal(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }
}

/// Responsibilities from the 16 masking outcomes of a 4-child partition.
pub fn responsibility_from_outcomes(passes: &[bool; 16]) -> [f64; 4] {
    // closed[m]: m and every subset of m keep the label
    let mut closed = [false; 16];
    for m in 0..16usize {
        closed[m] = passes[m] && (0..4).all(|b| m & (1 << b) == 0 || closed[m ^ (1 << b)]);
    }
    let mut values = [0.0; 4];
    for (j, value) in values.iter_mut().enumerate() {
        let bit = 1 << j;
        let k = (0..16usize)
            .filter(|&m| m & bit == 0 && closed[m] && !passes[m | bit])
            .map(|m| m.count_ones())
            .min();
        if let Some(k) = k {
            *value = 1.0 / f64::from(k + 1);
        }
    }
    values
}

/// Queries the mutants of `partition` and computes each child's responsibility
/// for `label`.
///
/// The parent configuration (no child masked) is looked up through the probe
/// cache; inside a refinement run it was already classified, so only the 14
/// proper non-empty masks cost calls when `ctx.full_pass` is known.
pub fn superpixel_responsibility(
    probe: &Probe<'_>,
    partition: &Partition,
    ctx: ScopeContext<'_>,
    label: Label,
) -> Result<PartitionResponsibility, OracleError> {
    let (h, w) = probe.dims();
    let base = PixelMask::from_regions(h, w, ctx.background);
    let last = if ctx.full_pass.is_some() { 15u8 } else { 16 };
    let masks: Vec<PixelMask> = (0u8..last)
        .map(|bits| {
            let mut m = base.clone();
            for r in partition.regions(ChildSet::from_bits(bits)) {
                m.insert_region(r);
            }
            m
        })
        .collect();
    let results = probe.classify(&masks)?;
    let mut passes = [false; 16];
    for (i, c) in results.iter().enumerate() {
        passes[i] = c.label == label;
    }
    if let Some(full) = ctx.full_pass {
        passes[15] = full;
    }
    Ok(PartitionResponsibility {
        values: responsibility_from_outcomes(&passes),
        passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Image, MaskColor};
    use crate::oracle::{Conjunct, Oracle, SyntheticClassifier};

    /// Outcome table by direct evaluation of a predicate over masks.
    fn table(pass: impl Fn(u8) -> bool) -> [bool; 16] {
        std::array::from_fn(|m| pass(m as u8))
    }

    #[test]
    fn single_cause_table() {
        // label kept iff child 0 unmasked
        let t = table(|m| m & 1 == 0);
        assert_eq!(responsibility_from_outcomes(&t), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn conjunction_each_member_is_but_for() {
        let t = table(|m| m & 0b0101 == 0);
        assert_eq!(responsibility_from_outcomes(&t), [1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn disjunction_splits_responsibility() {
        let t = table(|m| m & 0b0101 != 0b0101);
        assert_eq!(responsibility_from_outcomes(&t), [0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn any_single_child_suffices() {
        let t = table(|m| m != 0b1111);
        assert_eq!(responsibility_from_outcomes(&t), [0.25; 4]);
    }

    #[test]
    fn non_monotone_witness_requires_closed_subsets() {
        // masking {1} flips, masking {1,2} restores, masking {0,1,2} flips:
        // {1,2} is not a valid witness for 0 because its subset {1} fails.
        let t = table(|m| !matches!(m, 0b0010 | 0b0111 | 0b0011));
        let r = responsibility_from_outcomes(&t);
        // child 0: witness {} fails (masking 0 passes); {2}: closed, {0,2} passes;
        // {3}: closed, {0,3} passes; {2,3}: closed, {0,2,3} passes -> 0
        assert_eq!(r[0], 0.0);
        assert_eq!(r[1], 1.0);
    }

    fn eight_by_eight(bright: &[(usize, usize)]) -> Image {
        Image::from_fn(8, 8, 1, |r, c, _| if bright.contains(&(r, c)) { 0.9 } else { 0.2 }).unwrap()
    }

    #[test]
    fn pixel_rule_inside_first_quadrant() {
        let x = eight_by_eight(&[(1, 1)]);
        let oracle = Oracle::unlimited(SyntheticClassifier::threshold(vec![Conjunct::new(1, 1, 0.5)], 1, 0));
        let color = MaskColor::black(1);
        let probe = oracle.probe(&x, &color);
        let p = Partition::new(x.bounds(), 4, 4).unwrap();
        let r = superpixel_responsibility(&probe, &p, ScopeContext::default(), 1).unwrap();
        assert_eq!(r.values, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(oracle.ledger().calls_made(), 16);
    }

    #[test]
    fn constant_classifier_has_no_causes() {
        let x = eight_by_eight(&[]);
        let oracle = Oracle::unlimited(SyntheticClassifier::constant(3));
        let color = MaskColor::black(1);
        let probe = oracle.probe(&x, &color);
        let p = Partition::new(x.bounds(), 3, 5).unwrap();
        let r = superpixel_responsibility(&probe, &p, ScopeContext::default(), 3).unwrap();
        assert_eq!(r.values, [0.0; 4]);
        assert!(r.all_equal());
        assert_eq!(r.passing_sets().len(), 16);
    }

    #[test]
    fn known_full_outcome_saves_a_call() {
        let x = eight_by_eight(&[(1, 1), (6, 6)]);
        let clf = SyntheticClassifier::threshold(vec![Conjunct::new(1, 1, 0.5), Conjunct::new(6, 6, 0.5)], 1, 0);
        let oracle = Oracle::unlimited(clf);
        let color = MaskColor::black(1);
        let probe = oracle.probe(&x, &color);
        let p = Partition::new(x.bounds(), 4, 4).unwrap();
        let ctx = ScopeContext {
            full_pass: Some(false),
            ..ScopeContext::default()
        };
        let r = superpixel_responsibility(&probe, &p, ctx, 1).unwrap();
        assert_eq!(r.values, [1.0, 0.0, 0.0, 1.0]);
        assert_eq!(oracle.ledger().calls_made(), 15);
    }
}
