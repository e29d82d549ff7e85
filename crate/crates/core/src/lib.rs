//! Character-level tokenization and Chinese spell-checking toolkit:
//! byte-level BPE with span bookkeeping, vocabulary surgery that makes
//! every Chinese character a single token, character edit alignment and
//! equal-length repair, pinyin phonology, detection/correction metrics,
//! and a noisy-channel character corrector.

pub mod alignment;
pub mod bpe;
pub mod corrector;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod lm;
pub mod metrics;
pub mod phonology;
pub mod surgeon;
#[cfg(test)]
pub(crate) mod testkit;
pub mod text;

pub use error::{Error, Result};
