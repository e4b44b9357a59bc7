//! Central Kurdish (Sorani) speech-resource engineering toolkit.
//!
//! The crate covers the text side of building ASR resources for Sorani:
//! a model of the writing system and phoneme inventory, Unicode
//! normalization and script standardization, rule-based
//! grapheme-to-phoneme conversion with penalty scoring, di-phone
//! statistics and phonetically balanced sentence selection, pronunciation
//! lexicon construction, a back-off trigram language model with ARPA
//! interchange, WER/PER scoring, and Kaldi data-directory emission.

pub mod corpus_designer;
pub mod diphone_stats;
pub mod g2p;
pub mod lexicon_builder;
pub mod ngram_lm;
pub mod normalizer;
pub mod num;
pub mod pipeline;
pub mod scorer;
pub mod script_model;

/// Default scalar type for penalties, frequencies, probabilities and rates.
pub type Scalar = f64;

/// Constraint set instantiated at the default scalar.
pub type ConstraintSet = g2p::ConstraintSet<Scalar>;
/// Trigram model instantiated at the default scalar.
pub type NgramModel = ngram_lm::NgramModel<Scalar>;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
