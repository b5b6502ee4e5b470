//! Sequential clinical-text outcome modeling.
//!
//! The crate takes per-patient note streams, buckets them into fixed 12-hour
//! time points as bag-of-words vectors, and predicts mortality outcomes at
//! every time point. Classifiers ship in two families: recurrent models that
//! jointly learn a topic layer (encoder, optional decoder/transcoder) with an
//! LSTM, and per-time-point linear SVMs over collapsed-Gibbs LDA topic
//! mixtures. Evaluation is per-time-point AUC plus topic/neighborhood
//! interpretation tools; a synthetic corpus generator with planted topics and
//! a planted risk signal provides end-to-end verification data.

pub mod checkpoint;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod lda;
pub mod models;
pub mod svm;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
