//! Hybrid feed-forward + bidirectional LSTM acoustic model mapping
//! per-frame linguistic features to vocoder parameters.

mod acoustic;
mod corpus;
mod matrix;
mod network;
mod train;

pub use acoustic::{
    targets_to_track, track_targets, AcousticModel, Normalizer, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION, ENVELOPE_CEIL,
};
pub use corpus::{toy_corpus, toy_feature_dim, ToyCorpusConfig, ToyUtterance};
pub use matrix::Matrix;
pub use network::{mse_loss, Dense, LstmDirection, ModelConfig, NetworkDims, NetworkModel};
pub use train::{dataset_loss, train, EpochLog, Sequence, TrainConfig};
