//! SI-SDR and word-level alignment with error decomposition.

mod sisdr;
mod wer;

pub use sisdr::{display_db, si_sdr, write_sisdr_csv, SisdrRow, DISPLAY_CAP_DB};
pub use wer::{
    align_words, corpus_wer, normalize_tokens, normalize_tokens_with, AlignedPair,
    AlignmentReport, EditOp, FileWer, NormalizeOptions, SnrRow, WerItem, WerReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: estimate has {estimate} samples, reference {reference}")]
    LengthMismatch { estimate: usize, reference: usize },
    #[error("signals are empty")]
    Empty,
    #[error("reference is all zeros")]
    ZeroReference,
    #[error("every reference transcript is empty")]
    AllEmptyReferences,
    #[error("cannot write {path}: {detail}")]
    Write {
        path: std::path::PathBuf,
        detail: String,
    },
}
