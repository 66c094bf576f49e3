//! Multilingual pretraining-corpus pipeline.
//!
//! The crate covers the data side of training an encoder over many
//! languages: corpus ingestion and accounting, language-balanced
//! upsampling, cased WordPiece vocabulary induction and tokenizer metrics,
//! rule-based romanization of Indic scripts, and MLM/TLM training-instance
//! generation with a compact binary record format.

pub mod corpus;
pub mod instances;
pub mod pipeline;
pub mod seed;
pub mod sampler;
pub mod translit;
pub mod vocab;
