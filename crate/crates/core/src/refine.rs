//! Recursive refinement of passing superpixel combinations for one initial
//! partition, producing a region -> responsibility table.
//!
//! A work item is a passing combination: a set of regions that, kept at
//! their original values while everything else in scope is masked, still
//! yields the original label. Single-region items are partitioned directly.
//! Multi-region items are refined one member at a time while the other
//! members are held at their original values.
//!
//! A partition step is terminal when the region is too small to split
//! (area below `min_superpixel_px` or under 2 pixels along an axis), when
//! all four children have equal responsibility, or when no proper masking
//! keeps the label. Budget exhaustion or a transport failure stops the run
//! and returns the table built so far.

use std::fmt;

use crate::domain::{ChildSet, Config, Region};
use crate::mutagen::{sample_partition, PartitionRng};
use crate::oracle::{Label, OracleError, Probe};
use crate::responsibility::{superpixel_responsibility, ScopeContext};

#[derive(Debug, Clone, PartialEq)]
pub struct WorkItem {
    /// Regions refined jointly; pairwise disjoint.
    pub scope: Vec<Region>,
    /// Per member: whether masking the member (others held) keeps the label.
    pub member_full_pass: Vec<bool>,
    pub inherited_background: Vec<Region>,
    pub scope_area: usize,
    pub depth: usize,
    origin: Option<(usize, ChildSet)>,
}

impl WorkItem {
    /// The whole image as a single-region scope.
    pub fn root(bounds: Region, full_pass: bool) -> Self {
        Self::new(vec![bounds], vec![full_pass], Vec::new(), 0)
    }

    pub fn new(scope: Vec<Region>, member_full_pass: Vec<bool>, inherited_background: Vec<Region>, depth: usize) -> Self {
        assert!(!scope.is_empty(), "work item scope must be non-empty");
        assert_eq!(scope.len(), member_full_pass.len());
        let scope_area = scope.iter().map(Region::area).sum();
        Self {
            scope,
            member_full_pass,
            inherited_background,
            scope_area,
            depth,
            origin: None,
        }
    }
}

/// One member of a scope refined while the remaining members are held.
#[derive(Debug, Clone, PartialEq)]
pub struct Subcall {
    pub active: Region,
    pub held: Vec<Region>,
    pub full_pass: bool,
}

/// Splits a scope into one subcall per member, holding the others.
pub fn refine_split_scope(item: &WorkItem) -> Vec<Subcall> {
    item.scope
        .iter()
        .enumerate()
        .map(|(i, &active)| Subcall {
            active,
            held: item
                .scope
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &r)| r)
                .collect(),
            full_pass: item.member_full_pass[i],
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableEntry {
    pub region: Region,
    pub value: f64,
    pub depth: usize,
}

/// Responsibilities of every superpixel evaluated during one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTable {
    pub entries: Vec<TableEntry>,
}

impl RunTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_depth(&self) -> Option<usize> {
        self.entries.iter().map(|e| e.depth).max()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStop {
    Completed,
    BudgetExhausted,
    Transport(String),
}

/// One partition evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub depth: usize,
    pub scope_area: usize,
    pub active: Region,
    pub values: [f64; 4],
    /// Kept child sets that qualified as new work items.
    pub passing: Vec<ChildSet>,
    /// The kept set that survived queue pruning, if any.
    pub chosen: Option<ChildSet>,
}

impl fmt::Display for TraceStep {
    /// `depth=<d> scope_area=<a> passing=<k1>,<k2>,... chosen=<k|->`, where
    /// each kept set is written as its child-index bitmask (bit j = child j).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let passing: Vec<String> = self.passing.iter().map(|s| s.bits().to_string()).collect();
        let passing = if passing.is_empty() { "-".to_owned() } else { passing.join(",") };
        let chosen = self.chosen.map_or_else(|| "-".to_owned(), |s| s.bits().to_string());
        write!(
            f,
            "depth={} scope_area={} passing={} chosen={}",
            self.depth, self.scope_area, passing, chosen
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub table: RunTable,
    pub stop: RunStop,
    pub partitions_evaluated: usize,
    pub trace: Vec<TraceStep>,
}

/// Runs refinement from the whole image.
///
/// `full_pass` says whether the fully masked image keeps `label`.
pub fn refine_run(probe: &Probe<'_>, cfg: &Config, rng: &mut PartitionRng, label: Label, full_pass: bool) -> RunOutcome {
    let bounds = probe.image().bounds();
    let mut queue = vec![WorkItem::root(bounds, full_pass)];
    let mut table = RunTable::default();
    let mut trace: Vec<TraceStep> = Vec::new();
    let mut partitions = 0;

    while !queue.is_empty() {
        let item = queue.remove(0);
        let mut discovered = Vec::new();
        for sub in refine_split_scope(&item) {
            if sub.active.area() < cfg.min_superpixel_px || !sub.active.splittable() {
                continue;
            }
            let partition = sample_partition(sub.active, rng).expect("splittable region");
            let ctx = ScopeContext {
                background: &item.inherited_background,
                held: &sub.held,
                full_pass: Some(sub.full_pass),
            };
            let resp = match superpixel_responsibility(probe, &partition, ctx, label) {
                Ok(r) => r,
                Err(e) => {
                    return RunOutcome {
                        table,
                        stop: stop_reason(e),
                        partitions_evaluated: partitions,
                        trace,
                    }
                }
            };
            partitions += 1;
            for (child, &value) in partition.children.iter().zip(&resp.values) {
                table.entries.push(TableEntry {
                    region: *child,
                    value,
                    depth: item.depth,
                });
            }
            let step = trace.len();
            let mut passing = Vec::new();
            let any_proper = (1..15).any(|m| resp.passes[m]);
            if any_proper && !resp.all_equal() {
                for kept_bits in 1u8..16 {
                    let kept = ChildSet::from_bits(kept_bits);
                    let masked = kept.complement();
                    let weight: f64 = kept.iter().map(|j| resp.values[j]).sum();
                    if !resp.passes[masked.bits() as usize] || weight <= 0.0 {
                        continue;
                    }
                    let mut background = item.inherited_background.clone();
                    background.extend(partition.regions(masked));
                    let member_full_pass = kept
                        .iter()
                        .map(|j| resp.passes[(masked.bits() | (1 << j)) as usize])
                        .collect();
                    let mut next = WorkItem::new(partition.regions(kept).collect(), member_full_pass, background, item.depth + 1);
                    next.origin = Some((step, kept));
                    discovered.push(next);
                    passing.push(kept);
                }
            }
            trace.push(TraceStep {
                depth: item.depth,
                scope_area: item.scope_area,
                active: sub.active,
                values: resp.values,
                passing,
                chosen: None,
            });
        }
        queue.extend(discovered);
        // stable: equal areas keep discovery order
        queue.sort_by_key(|w| w.scope_area);
        queue.truncate(cfg.queue_len);
        for w in &queue {
            if let Some((step, kept)) = w.origin {
                trace[step].chosen.get_or_insert(kept);
            }
        }
    }

    RunOutcome {
        table,
        stop: RunStop::Completed,
        partitions_evaluated: partitions,
        trace,
    }
}

fn stop_reason(e: OracleError) -> RunStop {
    match e {
        OracleError::BudgetExhausted { .. } => RunStop::BudgetExhausted,
        other => RunStop::Transport(other.to_string()),
    }
}
