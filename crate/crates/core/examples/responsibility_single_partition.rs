//! Responsibility of the four quadrants of one fixed partition for three
//! small rule classifiers, next to the brute-force reference.

use rex_core::domain::{Image, MaskColor, Partition};
use rex_core::exactref::exact_responsibility;
use rex_core::oracle::{Conjunct, Oracle, SyntheticClassifier};
use rex_core::responsibility::{superpixel_responsibility, ScopeContext};

fn main() -> rex_core::Result<()> {
    // quadrants of a 4x4 image: 0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right
    let x = Image::from_fn(4, 4, 1, |r, c, _| if (r, c) == (0, 0) || (r, c) == (3, 0) { 0.9 } else { 0.2 })?;
    let partition = Partition::new(x.bounds(), 2, 2)?;
    let color = MaskColor::black(1);
    let a = Conjunct::new(0, 0, 0.5);
    let b = Conjunct::new(3, 0, 0.5);
    let cases = [
        ("pixel in child 0", SyntheticClassifier::threshold(vec![a], 1, 0)),
        ("child 0 AND child 2", SyntheticClassifier::threshold(vec![a, b], 1, 0)),
        ("child 0 OR child 2", SyntheticClassifier::any_of(vec![vec![a], vec![b]], 1, 0)),
    ];
    for (name, clf) in cases {
        let oracle = Oracle::unlimited(clf);
        let probe = oracle.probe(&x, &color);
        let label = probe.original()?.label;
        let ctx = ScopeContext {
            background: &[],
            held: &[],
            full_pass: None,
        };
        let r = superpixel_responsibility(&probe, &partition, ctx, label)?;
        let units: Vec<_> = (0..4).map(|i| partition.child(i)).collect();
        let exact: Vec<f64> = (0..4)
            .map(|i| exact_responsibility(&probe, i, &units, label))
            .collect::<Result<_, _>>()?;
        println!("{name:<22} responsibility {:?}  brute force {exact:?}  calls {}", r.values, oracle.ledger().calls_made());
    }
    Ok(())
}
