//! Writes and reads back every artifact format: the text and binary maps,
//! the explanation file, and the PNG renderings.

use rex_core::domain::{Config, Explanation, Image, MaskColor, ResponsibilityMap};
use rex_core::engine::explain;
use rex_core::io::{save_gray, save_rgb};
use rex_core::oracle::{Conjunct, Oracle, SyntheticClassifier};

fn main() -> rex_core::Result<()> {
    let x = Image::from_fn(6, 6, 1, |r, c, _| if (r, c) == (1, 4) { 0.9 } else { 0.2 })?;
    let cfg = Config {
        iterations: 4,
        mask_color: MaskColor::black(1),
        ..Config::default()
    };
    let report = explain(&Oracle::unlimited(SyntheticClassifier::threshold(vec![Conjunct::new(1, 4, 0.5)], 1, 0)), &x, &cfg, 1)?;
    let e = report.explanation.expect("label reproduced");

    let dir = std::env::temp_dir().join("rex-artifacts-example");
    std::fs::create_dir_all(&dir)?;
    let text = report.map.to_text(Some(&cfg));
    print!("{text}");
    std::fs::write(dir.join("map.rexmap"), &text)?;
    std::fs::write(dir.join("map.rxm"), report.map.to_binary())?;
    std::fs::write(dir.join("explanation.rxe"), e.to_rxe(6, 6, Some(&cfg)))?;
    save_rgb(&dir.join("heatmap.png"), 6, 6, report.map.heatmap_rgb())?;
    save_gray(&dir.join("explanation.png"), 6, 6, e.mask_image(6, 6))?;

    let (from_text, embedded) = ResponsibilityMap::from_text(&std::fs::read_to_string(dir.join("map.rexmap"))?)?;
    let from_binary = ResponsibilityMap::from_binary(&std::fs::read(dir.join("map.rxm"))?)?;
    let (back, dims, _) = Explanation::from_rxe(&std::fs::read(dir.join("explanation.rxe"))?)?;
    println!("text round trip: {}", from_text == report.map);
    println!("binary round trip (values only): {}", from_binary.values() == report.map.values());
    println!("embedded config matches: {}", embedded.as_ref() == Some(&cfg));
    println!("explanation {:?} on {dims:?}: {}", back.pixels, back == e);
    println!("written to {}", dir.display());
    Ok(())
}
