//! Sequence classifiers over per-time-point documents.
//!
//! Four architectures share one parameter container and training loop:
//!
//! * `LstmLda`: dense topic-proportion inputs feed the LSTM directly.
//! * `LstmE`: a ReLU encoder maps each bag of words to a latent vector.
//! * `LstmED`: encoder plus a softmax decoder reconstructing the input.
//! * `LstmETD`: encoder, ReLU transcoder, and decoder; the LSTM consumes
//!   the encoder output while the decoder reconstructs from the transcoder.
//!
//! The loss averages, over non-empty time points, a class-weighted
//! prediction term plus optional reconstruction and sparsity terms, and
//! adds one decoder weight penalty per sequence. Empty time points are
//! skipped entirely: they contribute no encoder call, no LSTM step, and
//! no loss term, and the prediction is carried forward across them.

mod forward;
mod params;
mod train;

pub use forward::{backward, forward, loss_from_trace, ForwardTrace};
pub use params::JointModelParams;
pub use train::{
    cfn_grid_search, final_scores, sequence_scores, train, TrainLogEntry, TrainResult, CFN_GRID,
};

use crate::corpus::{CorpusEntry, Task};
use crate::tensor::SparseVec;
use crate::{Error, Result};

/// Which of the four architectures a parameter set implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    LstmLda,
    LstmE,
    LstmED,
    LstmETD,
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<ModelKind> {
        match s {
            "lstm_lda" => Ok(ModelKind::LstmLda),
            "lstm_e" => Ok(ModelKind::LstmE),
            "lstm_e_d" => Ok(ModelKind::LstmED),
            "lstm_e_t_d" => Ok(ModelKind::LstmETD),
            other => Err(Error::InvalidInput(format!("unknown model kind: {other}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::LstmLda => "lstm_lda",
            ModelKind::LstmE => "lstm_e",
            ModelKind::LstmED => "lstm_e_d",
            ModelKind::LstmETD => "lstm_e_t_d",
        }
    }

    pub fn has_encoder(&self) -> bool {
        !matches!(self, ModelKind::LstmLda)
    }

    pub fn has_transcoder(&self) -> bool {
        matches!(self, ModelKind::LstmETD)
    }

    pub fn has_decoder(&self) -> bool {
        matches!(self, ModelKind::LstmED | ModelKind::LstmETD)
    }

    /// Bag-of-words input for encoder kinds, dense vectors for `LstmLda`.
    pub fn uses_bow(&self) -> bool {
        self.has_encoder()
    }
}

/// One patient's input sequence, indexed by time point.
#[derive(Debug, Clone, PartialEq)]
pub enum SeqInput {
    /// Sparse normalized word vectors, one per time point.
    Bow(Vec<SparseVec>),
    /// Dense feature vectors (topic proportions), one per time point.
    Dense(Vec<Vec<f64>>),
}

impl SeqInput {
    pub fn len(&self) -> usize {
        match self {
            SeqInput::Bow(v) => v.len(),
            SeqInput::Dense(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A time point is empty when it carries no signal at all.
    pub fn is_empty_at(&self, t: usize) -> bool {
        match self {
            SeqInput::Bow(v) => v[t].is_empty(),
            SeqInput::Dense(v) => v[t].iter().all(|&x| x == 0.0),
        }
    }
}

/// A labeled training or evaluation sequence.
#[derive(Debug, Clone)]
pub struct Sample {
    pub input: SeqInput,
    pub label: bool,
}

impl Sample {
    /// Bag-of-words sample for the encoder architectures.
    pub fn from_entry(entry: &CorpusEntry, task: Task) -> Sample {
        Sample {
            input: SeqInput::Bow(entry.seq.vectors()),
            label: task.label(&entry.labels),
        }
    }

    /// Dense sample (per-time-point topic proportions) for `LstmLda`.
    pub fn from_topic_vectors(vectors: Vec<Vec<f64>>, label: bool) -> Sample {
        Sample {
            input: SeqInput::Dense(vectors),
            label,
        }
    }
}

/// Hyperparameters shared by loss evaluation and the training loop.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Weight of the reconstruction term (decoder kinds).
    pub lambda1: f64,
    /// Weight of the transcoder-output sparsity term (`LstmETD`).
    pub lambda2: f64,
    /// Weight of the decoder L1 penalty, applied once per sequence.
    pub lambda3: f64,
    /// False-negative cost multiplier in the prediction term.
    pub cfn: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    pub task: Task,
    /// Validation AUC is computed every this many steps.
    pub val_interval: usize,
    /// Training loss is logged every this many steps.
    pub log_interval: usize,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            lambda1: 0.01,
            lambda2: 0.0,
            lambda3: 1.0,
            cfn: 1.0,
            lr: 0.001,
            batch_size: 10,
            steps: 100_000,
            seed: 0,
            task: Task::InHospital,
            val_interval: 500,
            log_interval: 100,
        }
    }
}
