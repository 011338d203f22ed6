#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rex_core::domain::{Explanation, Image, MaskColor};
use rex_core::oracle::{Conjunct, LinearModel, Oracle, SyntheticClassifier};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Distinct random pixel coordinates.
pub fn distinct_pixels(rng: &mut ChaCha8Rng, h: usize, w: usize, k: usize) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = (0..h).flat_map(|r| (0..w).map(move |c| (r, c))).collect();
    all.shuffle(rng);
    all.truncate(k);
    all
}

/// A dim background with the given pixels lit well above 0.5.
pub fn lit_scene(rng: &mut ChaCha8Rng, h: usize, w: usize, lit: &[(usize, usize)]) -> Image {
    let mut data: Vec<f32> = (0..h * w).map(|_| rng.gen_range(0.05..0.45)).collect();
    for &(r, c) in lit {
        data[r * w + c] = rng.gen_range(0.6..1.0);
    }
    Image::new(h, w, 1, data).unwrap()
}

fn conjuncts(pixels: &[(usize, usize)]) -> Vec<Conjunct> {
    pixels.iter().map(|&(r, c)| Conjunct::new(r, c, 0.5)).collect()
}

/// A random rule classifier whose smallest explanation has 1 to 4 pixels,
/// with a scene it fires on.
pub fn small_rule_case(seed: u64, h: usize, w: usize) -> (SyntheticClassifier, Image) {
    let mut rng = rng(seed);
    match rng.gen_range(0..3) {
        0 => {
            let k = rng.gen_range(1..=4);
            let px = distinct_pixels(&mut rng, h, w, k);
            let x = lit_scene(&mut rng, h, w, &px);
            (SyntheticClassifier::threshold(conjuncts(&px), 1, 0), x)
        }
        1 => {
            let groups = rng.gen_range(2..=3);
            let sizes: Vec<usize> = (0..groups).map(|_| rng.gen_range(1..=3)).collect();
            let px = distinct_pixels(&mut rng, h, w, sizes.iter().sum());
            let mut rules = Vec::new();
            let mut at = 0;
            for s in sizes {
                rules.push(conjuncts(&px[at..at + s]));
                at += s;
            }
            let x = lit_scene(&mut rng, h, w, &px);
            (SyntheticClassifier::any_of(rules, 1, 0), x)
        }
        _ => {
            // a conjunction with a decoy rule that is not satisfied in the scene
            let k = rng.gen_range(1..=3);
            let px = distinct_pixels(&mut rng, h, w, k + 2);
            let x = lit_scene(&mut rng, h, w, &px[..k]);
            let rules = vec![conjuncts(&px[..k]), conjuncts(&px[k..])];
            (SyntheticClassifier::any_of(rules, 1, 0), x)
        }
    }
}

/// Random logistic model with `bias = -(w . x) / 2`, so that the scene and
/// the black image fall on opposite sides of the decision boundary.
pub fn linear_case(seed: u64, h: usize, w: usize) -> (SyntheticClassifier, Image) {
    let mut rng = rng(seed);
    let x = Image::new(h, w, 1, (0..h * w).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
    let weights: Vec<f64> = (0..h * w).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dot: f64 = weights.iter().zip(x.data()).map(|(w, v)| w * f64::from(*v)).sum();
    let model = LinearModel {
        weights,
        bias: -dot / 2.0,
        labels: [0, 1],
    };
    (SyntheticClassifier::Linear(model), x)
}

/// Any classifier family, for responsibility agreement checks.
pub fn mixed_case(seed: u64, h: usize, w: usize) -> (SyntheticClassifier, Image) {
    let mut r = rng(seed ^ 0x9e37_79b9);
    match r.gen_range(0..4) {
        0 | 1 => small_rule_case(seed, h, w),
        2 => linear_case(seed, h, w),
        _ => {
            // a rule on an unlit pixel: labelled 0 and every occlusion keeps it
            let px = distinct_pixels(&mut r, h, w, 2);
            let x = lit_scene(&mut r, h, w, &px[..1]);
            let clf = if r.gen_bool(0.5) {
                SyntheticClassifier::threshold(conjuncts(&px[1..]), 1, 0)
            } else {
                SyntheticClassifier::constant(r.gen_range(0..5))
            };
            (clf, x)
        }
    }
}

/// Re-checks sufficiency against a fresh, cache-free oracle.
pub fn reverify(clf: &SyntheticClassifier, x: &Image, color: &MaskColor, e: &Explanation) -> bool {
    let masked = x.masked(&e.complement_mask(x.height(), x.width()), color);
    let oracle = Oracle::unlimited(clf.clone()).with_cache(false);
    oracle.classify_batch(&[masked]).unwrap()[0].label == e.label
}
