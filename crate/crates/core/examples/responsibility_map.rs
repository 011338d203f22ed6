//! Full responsibility map for a conjunction of two pixels, printed as a grid
//! of per-iteration means.

use rex_core::domain::{Config, Image, MaskColor};
use rex_core::engine::explain;
use rex_core::oracle::{Conjunct, Oracle, SyntheticClassifier};

fn main() -> rex_core::Result<()> {
    let (h, w) = (10, 10);
    let lit = [(2, 7), (6, 3)];
    let x = Image::from_fn(h, w, 1, |r, c, _| if lit.contains(&(r, c)) { 0.9 } else { 0.3 })?;
    let clf = SyntheticClassifier::threshold(lit.iter().map(|&(r, c)| Conjunct::new(r, c, 0.5)).collect(), 1, 0);
    let oracle = Oracle::unlimited(clf);
    let cfg = Config {
        iterations: 30,
        mask_color: MaskColor::black(1),
        ..Config::default()
    };
    let report = explain(&oracle, &x, &cfg, 4)?;
    let mean = report.map.mean();
    for r in 0..h {
        let row: Vec<String> = (0..w).map(|c| format!("{:.3}", mean[r * w + c])).collect();
        println!("{}", row.join(" "));
    }
    println!("top pixels: {:?}", &report.ranking[..4]);
    println!("calls={} within bound: {}", report.ledger.calls_made, report.within_call_bound(&cfg));
    Ok(())
}
