//! End-to-end explanation of one image: N refinement runs, accumulation,
//! ranking and extraction.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::domain::{Config, Explanation, Image, Pixel, ResponsibilityMap};
use crate::error::{Error, Result};
use crate::extract::{accumulate, extract_explanation, rank_pixels};
use crate::mutagen::PartitionRng;
use crate::oracle::{call_bound, Label, LedgerSnapshot, Oracle, OracleError};
use crate::refine::{refine_run, RunOutcome, RunStop};

#[derive(Debug, Clone)]
pub struct ExplainReport {
    pub label: Label,
    /// Confidence of the classifier in `label` on the unoccluded image.
    pub confidence: f64,
    pub map: ResponsibilityMap,
    pub ranking: Vec<Pixel>,
    /// Absent when the oracle stopped before extraction could finish.
    pub explanation: Option<Explanation>,
    /// Per-iteration outcomes, in iteration order.
    pub runs: Vec<RunOutcome>,
    pub stop: RunStop,
    pub ledger: LedgerSnapshot,
    pub elapsed: Duration,
}

impl ExplainReport {
    pub fn partitions_evaluated(&self) -> usize {
        self.runs.iter().map(|r| r.partitions_evaluated).sum()
    }

    /// Whether the classifier calls stayed within `2^s * n * N`.
    pub fn within_call_bound(&self, cfg: &Config) -> bool {
        self.ledger.calls_made <= call_bound(cfg.superpixels, self.map.height() * self.map.width(), cfg.iterations)
    }
}

/// Explains the classification of `x`, spreading the iterations over
/// `jobs` worker threads.
///
/// Each iteration draws its partitions from its own random stream and the
/// run tables are merged in iteration order, so the map, ranking and
/// explanation do not depend on `jobs`. With a call budget that runs out
/// mid-way, which runs got cut short may depend on scheduling.
pub fn explain(oracle: &Oracle, x: &Image, cfg: &Config, jobs: usize) -> Result<ExplainReport> {
    let started = Instant::now();
    cfg.validate()?;
    let color = cfg.mask_color.for_channels(x.channels())?;
    let probe = oracle.probe(x, &color);
    let original = probe.original()?;
    let label = original.label;
    let full_pass = probe.fully_masked()?.label == label;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let runs: Vec<RunOutcome> = pool.install(|| {
        (0..cfg.iterations as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = PartitionRng::for_iteration(cfg.seed, i);
                refine_run(&probe, cfg, &mut rng, label, full_pass)
            })
            .collect()
    });

    let (h, w) = x.dims();
    let tables: Vec<_> = runs.iter().map(|r| r.table.clone()).collect();
    let map = accumulate(&tables, h, w);
    let ranking = rank_pixels(&map)?;
    let mut stop = runs
        .iter()
        .map(|r| r.stop.clone())
        .find(|s| *s != RunStop::Completed)
        .unwrap_or(RunStop::Completed);

    let explanation = match extract_explanation(&probe, &ranking, label, cfg) {
        Ok(e) => Some(e),
        Err(Error::Oracle(e)) if e.is_termination() => {
            if stop == RunStop::Completed {
                stop = match e {
                    OracleError::BudgetExhausted { .. } => RunStop::BudgetExhausted,
                    other => RunStop::Transport(other.to_string()),
                };
            }
            None
        }
        Err(e) => return Err(e),
    };

    Ok(ExplainReport {
        label,
        confidence: original.score_for(label),
        map,
        ranking,
        explanation,
        runs,
        stop,
        ledger: oracle.ledger().snapshot(),
        elapsed: started.elapsed(),
    })
}
