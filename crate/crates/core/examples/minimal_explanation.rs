//! Extracts a sufficient explanation for a three-pixel rule on an RGB image
//! and compares its size with the exhaustive minimum.

use rex_core::domain::{Config, Image, MaskColor};
use rex_core::engine::explain;
use rex_core::exactref::{exact_min_explanation, pixel_universe};
use rex_core::oracle::{Conjunct, Oracle, SyntheticClassifier};

fn main() -> rex_core::Result<()> {
    let lit = [(0, 1), (4, 4), (7, 2)];
    let x = Image::from_fn(8, 8, 3, |r, c, k| if lit.contains(&(r, c)) { 0.8 + 0.05 * k as f32 } else { 0.2 })?;
    let clf = SyntheticClassifier::threshold(lit.iter().map(|&(r, c)| Conjunct::new(r, c, 0.5)).collect(), 1, 0);
    let oracle = Oracle::unlimited(clf);
    let report = explain(&oracle, &x, &Config::default(), 2)?;
    let e = report.explanation.expect("label reproduced");
    println!("explanation ({} px): {:?}", e.len(), e.pixels);

    let color = MaskColor::black(3);
    let probe = oracle.probe(&x, &color);
    let minimum = exact_min_explanation(&probe, &pixel_universe(8, 8), report.label, Some(3))?;
    println!("exhaustive minimum size: {}", minimum.first().map_or(0, Vec::len));
    Ok(())
}
