//! Black-box causal explanations for image classifiers.
//!
//! The engine partitions an image into random quadrants, measures how
//! responsible each quadrant is for the classifier's label by occluding
//! combinations of them, refines the responsible quadrants recursively, and
//! accumulates the results of many random partitions into a per-pixel
//! responsibility map. Ranking pixels by the map and growing the top-ranked
//! set until the classifier reproduces its label yields a small sufficient
//! explanation.
//!
//! ```
//! use rex_core::domain::{Config, Image};
//! use rex_core::engine::explain;
//! use rex_core::oracle::{Conjunct, Oracle, SyntheticClassifier};
//!
//! let x = Image::from_fn(8, 8, 1, |r, c, _| if (r, c) == (2, 5) { 0.9 } else { 0.3 }).unwrap();
//! let clf = SyntheticClassifier::threshold(vec![Conjunct::new(2, 5, 0.5)], 1, 0);
//! let oracle = Oracle::unlimited(clf);
//! let report = explain(&oracle, &x, &Config::default(), 1).unwrap();
//! assert_eq!(report.explanation.unwrap().len(), 1);
//! ```

pub mod bridge;
pub mod cli;
pub mod domain;
pub mod engine;
pub mod error;
pub mod exactref;
pub mod extract;
pub mod io;
pub mod metrics;
pub mod mutagen;
pub mod oracle;
pub mod refine;
pub mod responsibility;

pub use error::{Error, Result};
