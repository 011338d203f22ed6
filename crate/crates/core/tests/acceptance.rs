//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::fs;
use std::process::Command;
use std::time::Instant;

use itertools::Itertools;
use rand::seq::SliceRandom;

use rex_core::domain::{Config, Image, MaskColor, Partition, PixelMask, Region};
use rex_core::engine::{explain, ExplainReport};
use rex_core::exactref::{exact_min_explanation, exact_responsibility, pixel_universe};
use rex_core::metrics::{deletion_curve, insertion_curve};
use rex_core::oracle::{call_bound, Conjunct, Label, Oracle, Probe, SyntheticClassifier};
use rex_core::responsibility::{superpixel_responsibility, ScopeContext};

#[derive(Default)]
struct Gate {
    results: Vec<(bool, String)>,
    /// Sufficiency re-checks over every engine run: (passed, total).
    sufficiency: (usize, usize),
    /// Call bound checks over every engine run: (passed, total).
    bound: (usize, usize),
}

impl Gate {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push((pass, name.to_owned()));
    }

    /// Runs the engine and tallies the sufficiency and call-bound checks.
    fn engine(&mut self, clf: &SyntheticClassifier, x: &Image, cfg: &Config, jobs: usize) -> ExplainReport {
        let oracle = Oracle::new(clf.clone(), cfg.call_budget);
        let report = explain(&oracle, x, cfg, jobs).expect("engine run");
        self.bound.1 += 1;
        if report.ledger.calls_made <= call_bound(cfg.superpixels, x.pixel_count(), cfg.iterations) {
            self.bound.0 += 1;
        }
        if let Some(e) = report.explanation.as_ref().filter(|e| e.sufficient) {
            self.sufficiency.1 += 1;
            let color = cfg.mask_color.for_channels(x.channels()).unwrap();
            if common::reverify(clf, x, &color, e) {
                self.sufficiency.0 += 1;
            }
        }
        report
    }
}

fn gray_config(seed: u64) -> Config {
    Config {
        seed,
        mask_color: MaskColor::black(1),
        ..Config::default()
    }
}

/// Responsibility straight from the definition: the smallest witness set of
/// siblings whose every subset keeps the label and whose masking together
/// with `unit` flips it.
fn verbatim_responsibility(probe: &Probe<'_>, units: &[Region], unit: usize, label: Label) -> f64 {
    let (h, w) = probe.dims();
    let keeps = |set: &[usize]| {
        let mask = PixelMask::from_regions(h, w, set.iter().map(|&i| &units[i]));
        probe.classify_one(&mask).unwrap().label == label
    };
    let others: Vec<usize> = (0..units.len()).filter(|&i| i != unit).collect();
    for k in 0..=others.len() {
        for witness in others.iter().copied().combinations(k) {
            let closed = witness.iter().copied().powerset().all(|s| keeps(&s));
            let mut with_unit = witness.clone();
            with_unit.push(unit);
            if closed && !keeps(&with_unit) {
                return 1.0 / (k as f64 + 1.0);
            }
        }
    }
    0.0
}

fn exact_agreement(gate: &mut Gate) {
    let started = Instant::now();
    let mut agree = 0;
    let mut first_bad = None;
    for seed in 0..50 {
        let (clf, x) = common::mixed_case(1000 + seed, 8, 8);
        let oracle = Oracle::unlimited(clf);
        let color = MaskColor::black(1);
        let probe = oracle.probe(&x, &color);
        let label = probe.original().unwrap().label;
        let p = Partition::new(x.bounds(), 4, 4).unwrap();
        let engine = superpixel_responsibility(&probe, &p, ScopeContext::default(), label).unwrap().values;
        let exact: Vec<f64> = (0..4).map(|j| exact_responsibility(&probe, j, &p.children, label).unwrap()).collect();
        let verbatim: Vec<f64> = (0..4).map(|j| verbatim_responsibility(&probe, &p.children, j, label)).collect();
        if engine[..] == exact[..] && exact == verbatim {
            agree += 1;
        } else if first_bad.is_none() {
            first_bad = Some(format!(" first mismatch seed {seed}: {engine:?} vs {exact:?} vs {verbatim:?}"));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    gate.record(
        "exact-oracle agreement",
        agree == 50 && secs < 10.0,
        format!("{agree}/50 cases equal, {secs:.2}s (limit 10s){}", first_bad.unwrap_or_default()),
    );
}

fn near_minimality(gate: &mut Gate) {
    let mut within = 0;
    let mut insufficient = 0;
    let mut cases = 0;
    let mut worst = String::new();
    let mut seed = 0;
    while cases < 50 {
        let (clf, x) = common::small_rule_case(2000 + seed, 8, 8);
        seed += 1;
        let color = MaskColor::black(1);
        let exact_oracle = Oracle::unlimited(clf.clone()).with_cache(false);
        let probe = exact_oracle.probe(&x, &color);
        let label = probe.original().unwrap().label;
        let minima = exact_min_explanation(&probe, &pixel_universe(8, 8), label, Some(4)).unwrap();
        let Some(min) = minima.first().map(Vec::len) else { continue };
        cases += 1;
        let cfg = Config {
            iterations: 20,
            extraction_chunk: 1,
            ..gray_config(seed)
        };
        let report = gate.engine(&clf, &x, &cfg, 1);
        match report.explanation {
            Some(e) if e.sufficient && common::reverify(&clf, &x, &color, &e) => {
                if e.len() <= 2 * min {
                    within += 1;
                } else if worst.is_empty() {
                    worst = format!(" (e.g. seed {}: {} vs minimum {min})", 2000 + seed - 1, e.len());
                }
            }
            _ => insufficient += 1,
        }
    }
    let pass = within * 10 >= cases * 9 && insufficient == 0;
    gate.record(
        "near-minimality",
        pass,
        format!("{within}/{cases} within 2x of the exact minimum (need 90%), {insufficient} insufficient{worst}"),
    );
}

fn determinism(gate: &mut Gate) {
    let mut identical = 0;
    let total = 6;
    for seed in 0..total {
        let (clf, x) = common::mixed_case(3000 + seed, 8, 8);
        let cfg = gray_config(seed);
        let artifacts = |r: &ExplainReport| {
            (
                r.map.to_text(Some(&cfg)).into_bytes(),
                r.explanation.as_ref().map(|e| e.to_rxe(8, 8, Some(&cfg))),
            )
        };
        let a = artifacts(&gate.engine(&clf, &x, &cfg, 1));
        let b = artifacts(&gate.engine(&clf, &x, &cfg, 1));
        let c = artifacts(&gate.engine(&clf, &x, &cfg, 4));
        if a == b && a == c {
            identical += 1;
        }
    }
    let cli = cli_determinism();
    gate.record(
        "determinism",
        identical == total && cli.is_ok(),
        format!(
            "{identical}/{total} library runs byte-identical across reruns and jobs 1 vs 4; cli: {}",
            cli.unwrap_or_else(|e| e)
        ),
    );
}

/// Text map, binary map and explanation file of one CLI run.
type Artifacts = (Vec<u8>, Vec<u8>, Vec<u8>);

fn cli_determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let x = Image::from_fn(12, 12, 3, |r, c, ch| if (r, c) == (3, 8) { 0.95 } else { ((r * 5 + c * 3 + ch) % 7) as f32 / 20.0 })
        .unwrap();
    let png = dir.path().join("in.png");
    rex_core::io::save_image(&png, &x).map_err(|e| e.to_string())?;
    let run = |out: &str, jobs: &str| -> Result<Artifacts, String> {
        let out = dir.path().join(out);
        let status = Command::new(env!("CARGO_BIN_EXE_rex"))
            .args(["explain", "--image"])
            .arg(&png)
            .args(["--model", "builtin:threshold@3,8,0.5", "--seed", "7", "--jobs", jobs, "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)));
        }
        let read = |f: &str| fs::read(out.join(f)).map_err(|e| format!("{f}: {e}"));
        Ok((read("map.rexmap")?, read("map.rxm")?, read("explanation.rxe")?))
    };
    let a = run("a", "1")?;
    let b = run("b", "1")?;
    let c = run("c", "4")?;
    if a == b && a == c {
        Ok("REXMAP, RXM1 and RXE1 byte-identical".to_owned())
    } else {
        Err("artifacts differ".to_owned())
    }
}

fn ranking_quality(gate: &mut Gate) {
    let mut wins = 0;
    for seed in 0..100u64 {
        let (clf, x) = common::linear_case(4000 + seed, 8, 8);
        let cfg = gray_config(seed);
        let report = gate.engine(&clf, &x, &cfg, 1);
        let oracle = Oracle::unlimited(clf);
        let color = MaskColor::black(1);
        let probe = oracle.probe(&x, &color);
        let mut random = report.ranking.clone();
        random.shuffle(&mut common::rng(5000 + seed));
        let engine_auc = insertion_curve(&probe, &report.ranking, report.label, 100).unwrap().normalized_auc;
        let random_auc = insertion_curve(&probe, &random, report.label, 100).unwrap().normalized_auc;
        if engine_auc >= random_auc {
            wins += 1;
        }
    }
    gate.record(
        "ranking quality (linear)",
        wins >= 95,
        format!("engine insertion AUC >= random in {wins}/100 trials (need 95)"),
    );

    let x = Image::from_fn(10, 10, 1, |r, c, _| if (r, c) == (6, 3) { 0.9 } else { 0.3 }).unwrap();
    let clf = SyntheticClassifier::threshold(vec![Conjunct::new(6, 3, 0.5)], 1, 0);
    let report = gate.engine(&clf, &x, &gray_config(1), 1);
    let oracle = Oracle::unlimited(clf);
    let color = MaskColor::black(1);
    let probe = oracle.probe(&x, &color);
    let mut reversed = report.ranking.clone();
    reversed.reverse();
    let good = insertion_curve(&probe, &report.ranking, 1, 100).unwrap().normalized_auc;
    let bad = insertion_curve(&probe, &reversed, 1, 100).unwrap().normalized_auc;
    gate.record(
        "ranking quality (single pixel)",
        good >= 0.99 && bad <= 0.02 && (good - 0.995).abs() <= 0.005 && (bad - 0.005).abs() <= 0.005,
        format!("insertion AUC {good:.4} (expected 0.995), reversed {bad:.4} (expected 0.005)"),
    );
}

fn degenerate(gate: &mut Gate) {
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    let total = 5;
    for seed in 0..total {
        let x = common::lit_scene(&mut common::rng(6000 + seed), 8, 8, &[(1, 1)]);
        let clf = SyntheticClassifier::constant(seed as u32);
        let report = gate.engine(&clf, &x, &gray_config(seed), 1);
        let oracle = Oracle::unlimited(clf);
        let color = MaskColor::black(1);
        let probe = oracle.probe(&x, &color);
        let ins = insertion_curve(&probe, &report.ranking, report.label, 100).unwrap().normalized_auc;
        let del = deletion_curve(&probe, &report.ranking, report.label, 100).unwrap().normalized_auc;
        worst = worst.max((ins - 1.0).abs()).max((del - 1.0).abs());
        let e = report.explanation.as_ref().unwrap();
        if report.map.is_all_zero() && e.degenerate_empty && e.is_empty() && (ins - 1.0).abs() <= 1e-9 && (del - 1.0).abs() <= 1e-9 {
            ok += 1;
        }
    }
    gate.record(
        "degenerate constant classifier",
        ok == total,
        format!("{ok}/{total} zero maps with empty degenerate explanations, max |AUC - 1| = {worst:e}"),
    );
}

fn main() {
    let mut gate = Gate::default();
    let started = Instant::now();
    exact_agreement(&mut gate);
    near_minimality(&mut gate);
    determinism(&mut gate);
    ranking_quality(&mut gate);
    degenerate(&mut gate);

    let (ok, total) = gate.sufficiency;
    gate.record("sufficiency", ok == total && total > 0, format!("{ok}/{total} explanations re-verified"));
    let (ok, total) = gate.bound;
    gate.record("call bound", ok == total && total > 0, format!("{ok}/{total} runs within 2^s*n*N calls"));

    let failed: Vec<&str> = gate.results.iter().filter(|r| !r.0).map(|r| r.1.as_str()).collect();
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        gate.results.len() - failed.len(),
        gate.results.len(),
        started.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
