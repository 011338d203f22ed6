//! The black-box classifier interface, its call ledger, and the result cache.
//!
//! The engine never sees model internals: everything it learns comes from
//! [`Classifier::classify_batch`]. Every uncached image sent to the classifier
//! is charged to a [`CallLedger`], which enforces the user's call budget and
//! is used to check the `2^s * n * N` call bound after a run.

mod synthetic;

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use thiserror::Error;

use crate::domain::{Image, MaskColor, PixelMask};

pub use synthetic::{Conjunct, LinearModel, SyntheticClassifier};

pub type Label = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    /// The call budget would be exceeded. This is a termination signal.
    #[error("call budget exhausted ({calls_made} of {budget} calls used)")]
    BudgetExhausted { calls_made: u64, budget: u64 },

    #[error("transport failure: {0}")]
    Transport(String),

    #[error("timed out after {0:?}")]
    Timeout(Duration),

    #[error("malformed response: {0}")]
    Malformed(String),

    #[error("protocol version mismatch: expected {expected}, server speaks {got}")]
    VersionMismatch { expected: u32, got: u32 },

    #[error("classifier rejected input: {0}")]
    InvalidInput(String),
}

impl OracleError {
    /// Errors after which a run stops cleanly and keeps what it has.
    pub fn is_termination(&self) -> bool {
        matches!(
            self,
            Self::BudgetExhausted { .. } | Self::Transport(_) | Self::Timeout(_)
        )
    }
}

/// Output of the classifier for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: Label,
    /// Confidence for `label`, in `[0, 1]`.
    pub confidence: f64,
    /// Per-class scores indexed by label, when the classifier exposes them.
    pub full_scores: Option<Vec<f64>>,
}

impl Classification {
    pub fn hard(label: Label) -> Self {
        Self {
            label,
            confidence: 1.0,
            full_scores: None,
        }
    }

    /// Label is the argmax of `scores`, ties broken by the lowest index.
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        Self {
            label: best as Label,
            confidence: scores.get(best).copied().unwrap_or(0.0).clamp(0.0, 1.0),
            full_scores: Some(scores),
        }
    }

    /// Confidence assigned to `label`: the full score when available,
    /// otherwise `confidence` for a matching top label and 0 for anything else.
    pub fn score_for(&self, label: Label) -> f64 {
        match &self.full_scores {
            Some(scores) => scores.get(label as usize).copied().unwrap_or(0.0),
            None if self.label == label => self.confidence,
            None => 0.0,
        }
    }
}

pub trait Classifier: Send + Sync {
    /// One classification per image, in input order.
    fn classify_batch(&self, images: &[Image]) -> Result<Vec<Classification>, OracleError>;
}

impl<C: Classifier + ?Sized> Classifier for Arc<C> {
    fn classify_batch(&self, images: &[Image]) -> Result<Vec<Classification>, OracleError> {
        (**self).classify_batch(images)
    }
}

impl<C: Classifier + ?Sized> Classifier for Box<C> {
    fn classify_batch(&self, images: &[Image]) -> Result<Vec<Classification>, OracleError> {
        (**self).classify_batch(images)
    }
}

/// `2^s * n * N`: the call bound for `n` pixels, `N` partition iterations and
/// partitions of `s` superpixels.
pub fn call_bound(superpixels: usize, pixels: usize, iterations: usize) -> u64 {
    (1u64 << superpixels)
        .saturating_mul(pixels as u64)
        .saturating_mul(iterations as u64)
}

/// Whether `calls_made` respects [`call_bound`].
pub fn ledger_check(calls_made: u64, superpixels: usize, pixels: usize, iterations: usize) -> bool {
    calls_made <= call_bound(superpixels, pixels, iterations)
}

/// Counts classifier calls and enforces the budget atomically.
#[derive(Debug)]
pub struct CallLedger {
    calls_made: AtomicU64,
    cache_hits: AtomicU64,
    budget: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerSnapshot {
    /// Images actually sent to the classifier.
    pub calls_made: u64,
    /// Requests answered from the cache.
    pub cache_hits: u64,
    pub budget: u64,
}

impl LedgerSnapshot {
    /// Requests including cache hits.
    pub fn requests(&self) -> u64 {
        self.calls_made + self.cache_hits
    }
}

impl CallLedger {
    pub fn new(budget: u64) -> Self {
        Self {
            calls_made: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
            budget,
        }
    }

    /// Reserves `n` calls, all or nothing.
    pub fn reserve(&self, n: u64) -> Result<(), OracleError> {
        self.calls_made
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |made| {
                made.checked_add(n).filter(|&t| t <= self.budget)
            })
            .map(|_| ())
            .map_err(|made| OracleError::BudgetExhausted {
                calls_made: made,
                budget: self.budget,
            })
    }

    fn refund(&self, n: u64) {
        self.calls_made.fetch_sub(n, Ordering::SeqCst);
    }

    fn record_hits(&self, n: u64) {
        self.cache_hits.fetch_add(n, Ordering::SeqCst);
    }

    pub fn calls_made(&self) -> u64 {
        self.calls_made.load(Ordering::SeqCst)
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot {
            calls_made: self.calls_made.load(Ordering::SeqCst),
            cache_hits: self.cache_hits.load(Ordering::SeqCst),
            budget: self.budget,
        }
    }

    pub fn check(&self, superpixels: usize, pixels: usize, iterations: usize) -> bool {
        ledger_check(self.calls_made(), superpixels, pixels, iterations)
    }
}

/// An instrumented, caching front for a [`Classifier`].
pub struct Oracle {
    classifier: Arc<dyn Classifier>,
    ledger: CallLedger,
    cache_enabled: bool,
    raw_cache: Mutex<HashMap<Vec<u32>, Slot>>,
}

impl Oracle {
    pub fn new(classifier: impl Classifier + 'static, budget: u64) -> Self {
        Self::from_arc(Arc::new(classifier), budget)
    }

    pub fn from_arc(classifier: Arc<dyn Classifier>, budget: u64) -> Self {
        Self {
            classifier,
            ledger: CallLedger::new(budget),
            cache_enabled: true,
            raw_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn unlimited(classifier: impl Classifier + 'static) -> Self {
        Self::new(classifier, u64::MAX)
    }

    pub fn with_cache(mut self, enabled: bool) -> Self {
        self.cache_enabled = enabled;
        self
    }

    pub fn cache_enabled(&self) -> bool {
        self.cache_enabled
    }

    pub fn ledger(&self) -> &CallLedger {
        &self.ledger
    }

    pub fn classifier(&self) -> &Arc<dyn Classifier> {
        &self.classifier
    }

    /// Classifies arbitrary images. Repeats of a previously seen image are
    /// served from the cache without touching the ledger.
    pub fn classify_batch(&self, images: &[Image]) -> Result<Vec<Classification>, OracleError> {
        let keys = images
            .iter()
            .map(|img| {
                let mut key = vec![img.height() as u32, img.width() as u32, img.channels() as u32];
                key.extend(img.data().iter().map(|v| v.to_bits()));
                key
            })
            .collect();
        self.cached(&self.raw_cache, keys, |i, _| images[i].clone())
    }

    /// Binds the oracle to one input image and mask color.
    pub fn probe<'a>(&'a self, image: &'a Image, color: &'a MaskColor) -> Probe<'a> {
        Probe {
            oracle: self,
            image,
            color,
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn call(&self, images: &[Image]) -> Result<Vec<Classification>, OracleError> {
        if images.is_empty() {
            return Ok(Vec::new());
        }
        let n = images.len() as u64;
        self.ledger.reserve(n)?;
        match self.classifier.classify_batch(images) {
            Ok(out) if out.len() == images.len() => Ok(out),
            Ok(out) => {
                self.ledger.refund(n);
                Err(OracleError::Malformed(format!(
                    "{} results for {} images",
                    out.len(),
                    images.len()
                )))
            }
            Err(e) => {
                self.ledger.refund(n);
                Err(e)
            }
        }
    }

    fn cached<K: Hash + Eq + Clone>(
        &self,
        cache: &Mutex<HashMap<K, Slot>>,
        keys: Vec<K>,
        make: impl Fn(usize, &K) -> Image,
    ) -> Result<Vec<Classification>, OracleError> {
        if !self.cache_enabled {
            let images: Vec<Image> = keys.iter().enumerate().map(|(i, k)| make(i, k)).collect();
            return self.call(&images);
        }
        let mut out: Vec<Option<Classification>> = vec![None; keys.len()];
        // first index of each key this call is responsible for fetching
        let mut owned: Vec<usize> = Vec::new();
        let mut owned_pos: HashMap<&K, usize> = HashMap::new();
        let mut waits: Vec<(usize, Flight, usize)> = Vec::new();
        let flight = Flight::default();
        let mut hits = 0;
        {
            let mut guard = cache.lock().expect("oracle cache poisoned");
            for (i, key) in keys.iter().enumerate() {
                match guard.get(key) {
                    Some(Slot::Ready(c)) => {
                        out[i] = Some(c.clone());
                        hits += 1;
                    }
                    Some(Slot::Pending(f, pos)) => {
                        if !owned_pos.contains_key(key) {
                            waits.push((i, f.clone(), *pos));
                        }
                        hits += 1;
                    }
                    None => {
                        guard.insert(key.clone(), Slot::Pending(flight.clone(), owned.len()));
                        owned_pos.insert(key, owned.len());
                        owned.push(i);
                    }
                }
            }
        }
        self.ledger.record_hits(hits);
        if !owned.is_empty() {
            let images: Vec<Image> = owned.iter().map(|&i| make(i, &keys[i])).collect();
            let results = self.call(&images);
            let mut guard = cache.lock().expect("oracle cache poisoned");
            match &results {
                Ok(results) => {
                    for (&i, c) in owned.iter().zip(results) {
                        guard.insert(keys[i].clone(), Slot::Ready(c.clone()));
                    }
                }
                Err(_) => {
                    for &i in &owned {
                        guard.remove(&keys[i]);
                    }
                }
            }
            drop(guard);
            flight.publish(results.clone());
            let results = results?;
            for (i, key) in keys.iter().enumerate() {
                if out[i].is_none() {
                    if let Some(&pos) = owned_pos.get(key) {
                        out[i] = Some(results[pos].clone());
                    }
                }
            }
        }
        // waiting only after publishing keeps concurrent callers deadlock-free
        for (i, f, pos) in waits {
            let c = f.wait_for(pos)?;
            for (j, key) in keys.iter().enumerate() {
                if out[j].is_none() && *key == keys[i] {
                    out[j] = Some(c.clone());
                }
            }
        }
        Ok(out.into_iter().map(|c| c.expect("every slot filled")).collect())
    }
}

/// A cache entry: a known result, or a position in a batch another caller
/// has in flight.
enum Slot {
    Ready(Classification),
    Pending(Flight, usize),
}

/// Results of one in-flight batch, shared with callers that asked for the
/// same inputs meanwhile.
#[derive(Clone, Default)]
struct Flight(Arc<(Mutex<Option<BatchResult>>, Condvar)>);

type BatchResult = Result<Vec<Classification>, OracleError>;

impl Flight {
    fn publish(&self, results: BatchResult) {
        let (lock, ready) = &*self.0;
        *lock.lock().expect("flight poisoned") = Some(results);
        ready.notify_all();
    }

    fn wait_for(&self, pos: usize) -> Result<Classification, OracleError> {
        let (lock, ready) = &*self.0;
        let guard = ready
            .wait_while(lock.lock().expect("flight poisoned"), |r| r.is_none())
            .expect("flight poisoned");
        match guard.as_ref().expect("published") {
            Ok(results) => Ok(results[pos].clone()),
            Err(e) => Err(e.clone()),
        }
    }
}

/// Oracle queries about occlusions of one fixed image.
///
/// Results are cached by [`PixelMask`]; the image and mask color are fixed
/// for the lifetime of the probe, so the mask alone determines the mutant.
pub struct Probe<'a> {
    oracle: &'a Oracle,
    image: &'a Image,
    color: &'a MaskColor,
    cache: Mutex<HashMap<PixelMask, Slot>>,
}

impl<'a> Probe<'a> {
    pub fn image(&self) -> &'a Image {
        self.image
    }

    pub fn color(&self) -> &'a MaskColor {
        self.color
    }

    pub fn oracle(&self) -> &'a Oracle {
        self.oracle
    }

    pub fn dims(&self) -> (usize, usize) {
        self.image.dims()
    }

    pub fn classify(&self, masks: &[PixelMask]) -> Result<Vec<Classification>, OracleError> {
        self.oracle
            .cached(&self.cache, masks.to_vec(), |_, m| self.image.masked(m, self.color))
    }

    pub fn classify_one(&self, mask: &PixelMask) -> Result<Classification, OracleError> {
        Ok(self.classify(std::slice::from_ref(mask))?.remove(0))
    }

    /// The unoccluded image.
    pub fn original(&self) -> Result<Classification, OracleError> {
        let (h, w) = self.dims();
        self.classify_one(&PixelMask::empty(h, w))
    }

    /// The image with every pixel set to the mask color.
    pub fn fully_masked(&self) -> Result<Classification, OracleError> {
        let (h, w) = self.dims();
        self.classify_one(&PixelMask::full(h, w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Pixel;

    fn gray(v: f32) -> Image {
        Image::filled(2, 2, 1, v).unwrap()
    }

    #[test]
    fn constant_classifier_labels_everything() {
        let oracle = Oracle::unlimited(SyntheticClassifier::constant(7));
        let out = oracle.classify_batch(&[gray(0.0), gray(0.5), gray(1.0)]).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|c| c.label == 7 && c.confidence == 1.0));
    }

    #[test]
    fn repeated_request_is_free() {
        let oracle = Oracle::unlimited(SyntheticClassifier::constant(1));
        let imgs = [gray(0.1), gray(0.2), gray(0.1)];
        oracle.classify_batch(&imgs).unwrap();
        assert_eq!(oracle.ledger().calls_made(), 2);
        oracle.classify_batch(&imgs).unwrap();
        let snap = oracle.ledger().snapshot();
        assert_eq!(snap.calls_made, 2);
        assert_eq!(snap.cache_hits, 4);
        assert_eq!(snap.requests(), 6);
    }

    #[test]
    fn budget_is_all_or_nothing() {
        let oracle = Oracle::new(SyntheticClassifier::constant(0), 3);
        let imgs: Vec<Image> = (0..4).map(|i| gray(i as f32 / 4.0)).collect();
        let err = oracle.classify_batch(&imgs).unwrap_err();
        assert!(matches!(err, OracleError::BudgetExhausted { calls_made: 0, budget: 3 }));
        assert!(err.is_termination());
        oracle.classify_batch(&imgs[..3]).unwrap();
        assert_eq!(oracle.ledger().calls_made(), 3);
    }

    #[test]
    fn cache_is_transparent() {
        let clf = SyntheticClassifier::threshold(vec![Conjunct::new(0, 0, 0.5)], 1, 0);
        let x = Image::filled(2, 2, 1, 0.9).unwrap();
        let color = MaskColor::black(1);
        let mut masks = Vec::new();
        for bits in 0u8..16 {
            let mut m = PixelMask::empty(2, 2);
            for i in 0..4 {
                if bits & (1 << i) != 0 {
                    m.insert(Pixel::new(i / 2, i % 2));
                }
            }
            masks.push(m);
        }
        masks.extend(masks.clone());
        let with = Oracle::unlimited(clf.clone());
        let without = Oracle::unlimited(clf).with_cache(false);
        let a = with.probe(&x, &color).classify(&masks).unwrap();
        let b = without.probe(&x, &color).classify(&masks).unwrap();
        assert_eq!(a, b);
        assert_eq!(with.ledger().calls_made(), 16);
        assert_eq!(without.ledger().calls_made(), 32);
    }

    #[test]
    fn scores_argmax_prefers_lowest_index() {
        let c = Classification::from_scores(vec![0.5, 0.5]);
        assert_eq!(c.label, 0);
        assert_eq!(c.score_for(1), 0.5);
        assert_eq!(Classification::hard(3).score_for(2), 0.0);
    }

    #[test]
    fn ledger_bound_cases() {
        assert!(ledger_check(0, 4, 64, 5));
        assert_eq!(call_bound(4, 64, 5), 5120);
        assert!(ledger_check(5120, 4, 64, 5));
        assert!(!ledger_check(5121, 4, 64, 5));
    }

    struct Slow(AtomicU64);

    impl Classifier for Slow {
        fn classify_batch(&self, images: &[Image]) -> Result<Vec<Classification>, OracleError> {
            self.0.fetch_add(images.len() as u64, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(20));
            Ok(images.iter().map(|_| Classification::hard(0)).collect())
        }
    }

    #[test]
    fn concurrent_requests_for_one_input_share_a_call() {
        let slow = Arc::new(Slow(AtomicU64::new(0)));
        let oracle = Oracle::from_arc(slow.clone(), u64::MAX);
        let img = gray(0.3);
        let color = MaskColor::black(1);
        let probe = oracle.probe(&img, &color);
        let masks: Vec<PixelMask> = (0..4)
            .map(|i| {
                let mut m = PixelMask::empty(2, 2);
                m.insert(Pixel::new(i / 2, i % 2));
                m
            })
            .collect();
        std::thread::scope(|s| {
            for t in 0..8 {
                let (probe, masks) = (&probe, &masks);
                s.spawn(move || {
                    let mine = [masks[t % 4].clone(), masks[(t + 1) % 4].clone()];
                    assert!(probe.classify(&mine).unwrap().iter().all(|c| c.label == 0));
                });
            }
        });
        assert_eq!(slow.0.load(Ordering::SeqCst), 4);
        let snap = oracle.ledger().snapshot();
        assert_eq!((snap.calls_made, snap.cache_hits), (4, 12));
    }
}
