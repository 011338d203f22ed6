//! Insertion and deletion curves for a logistic model, using the engine's
//! ranking against a random one.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rex_core::domain::{Config, Image, MaskColor};
use rex_core::engine::explain;
use rex_core::metrics::{deletion_curve, insertion_curve};
use rex_core::oracle::{LinearModel, Oracle, SyntheticClassifier};

fn main() -> rex_core::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 100;
    let x = Image::new(10, 10, 1, (0..n).map(|_| rng.gen_range(0.0..1.0)).collect())?;
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dot: f64 = weights.iter().zip(x.data()).map(|(w, v)| w * f64::from(*v)).sum();
    let model = LinearModel {
        weights,
        bias: -dot / 2.0,
        labels: [0, 1],
    };
    let oracle = Oracle::unlimited(SyntheticClassifier::Linear(model));
    let cfg = Config {
        mask_color: MaskColor::black(1),
        ..Config::default()
    };
    let report = explain(&oracle, &x, &cfg, 2)?;
    let probe = oracle.probe(&x, &cfg.mask_color);
    let mut random = report.ranking.clone();
    random.shuffle(&mut rng);
    for (name, ranking) in [("engine", &report.ranking), ("random", &random)] {
        let ins = insertion_curve(&probe, ranking, report.label, 20)?;
        let del = deletion_curve(&probe, ranking, report.label, 20)?;
        println!("{name}: insertion AUC {:.3}  deletion AUC {:.3}", ins.normalized_auc, del.normalized_auc);
    }
    Ok(())
}
