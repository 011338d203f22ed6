//! A classifier that fires on either of two objects has two disjoint
//! explanations; both are recovered from one responsibility map.

use rex_core::domain::{Config, Image, MaskColor};
use rex_core::engine::explain;
use rex_core::extract::extract_disjoint;
use rex_core::oracle::{Conjunct, Oracle, SyntheticClassifier};

fn main() -> rex_core::Result<()> {
    let left = [(3, 1), (4, 1)];
    let right = [(2, 9)];
    let x = Image::from_fn(12, 12, 1, |r, c, _| if left.contains(&(r, c)) || right.contains(&(r, c)) { 0.9 } else { 0.1 })?;
    let rule = |px: &[(usize, usize)]| px.iter().map(|&(r, c)| Conjunct::new(r, c, 0.5)).collect();
    let clf = SyntheticClassifier::any_of(vec![rule(&left), rule(&right)], 1, 0);
    let oracle = Oracle::unlimited(clf);
    let cfg = Config {
        mask_color: MaskColor::black(1),
        ..Config::default()
    };
    let report = explain(&oracle, &x, &cfg, 1)?;
    let probe = oracle.probe(&x, &cfg.mask_color);
    for (i, e) in extract_disjoint(&probe, &report.map, report.label, &cfg, 5)?.iter().enumerate() {
        println!("explanation {i}: {:?}", e.pixels);
    }
    Ok(())
}
