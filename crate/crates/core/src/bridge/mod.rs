//! Out-of-process classifiers over newline-delimited JSON.

mod client;
pub mod protocol;
mod server;

pub use client::{Endpoint, RemoteClassifier, DEFAULT_TIMEOUT};
pub use server::{serve, ServeOptions, ServeStats};
