//! One refinement run on a 16x16 image with a single causal pixel, printing
//! the per-step trace and the table of superpixels it produced.

use rex_core::domain::{Config, Image, MaskColor};
use rex_core::mutagen::PartitionRng;
use rex_core::oracle::{Conjunct, Oracle, SyntheticClassifier};
use rex_core::refine::refine_run;

fn main() -> rex_core::Result<()> {
    let x = Image::from_fn(16, 16, 1, |r, c, _| if (r, c) == (11, 4) { 0.95 } else { 0.25 })?;
    let oracle = Oracle::unlimited(SyntheticClassifier::threshold(vec![Conjunct::new(11, 4, 0.5)], 1, 0));
    let color = MaskColor::black(1);
    let probe = oracle.probe(&x, &color);
    let label = probe.original()?.label;
    let full = probe.fully_masked()?.label == label;
    let cfg = Config {
        mask_color: color.clone(),
        ..Config::default()
    };
    let out = refine_run(&probe, &cfg, &mut PartitionRng::for_iteration(cfg.seed, 0), label, full);
    for step in &out.trace {
        println!("{step}");
    }
    println!("stop={:?} partitions={} calls={}", out.stop, out.partitions_evaluated, oracle.ledger().calls_made());
    for e in out.table.entries.iter().filter(|e| e.value > 0.0) {
        println!("depth {} region {:?} responsibility {}", e.depth, e.region, e.value);
    }
    Ok(())
}
