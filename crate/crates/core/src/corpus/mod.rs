//! Clean speech base assembly, SNR mixing and speaker-disjoint splits.

mod dataset;
mod manifest;
mod mixing;
mod pairing;
mod splits;

pub use dataset::{
    build_clean, dry_run_stats, mix_dataset, plan_clean, snr_label, verify_mixes, CleanOptions,
    CleanRecord, CleanStats, MixOptions, MixStats, SplitStats,
};
pub use manifest::{load_records, read_jsonl, write_jsonl};
pub use mixing::{mix_at_snr, noise_segment, MixResult, SnrPowerModes, VAD_THRESHOLD_DB};
pub use pairing::{combine_pair, pair_utterances, PairOrder, PairPlan, TimelineSegment};
pub use splits::{assert_disjoint, make_splits, GroupKey, SplitRatios, Splits};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioError;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("child pool is empty")]
    EmptyChildPool,
    #[error("overlap of {overlap_s:.3} s does not fit utterances of {available_s:.3} s")]
    OverlapExceedsUtterance { overlap_s: f64, available_s: f64 },
    #[error("speech is silent (no frame above the activity gate and power below -60 dBFS)")]
    SilentSpeech,
    #[error("noise segment is silent")]
    SilentNoise,
    #[error("need at least 3 groups to form train/dev/test, found {0}")]
    TooFewGroups(usize),
    #[error("group {group} appears in both {a} and {b}")]
    LeakedGroup { group: String, a: Split, b: Split },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{path}:{line}: {detail}")]
    Manifest {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("verification failed for {} file(s): {}", .0.len(), .0.join(", "))]
    VerificationFailed(Vec<String>),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Child,
    Adult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One source utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub id: String,
    /// Relative paths resolve against the manifest's directory.
    pub audio_path: PathBuf,
    pub speaker_id: String,
    pub role: Role,
    /// Originating corpus or channel.
    pub source_tag: String,
    pub duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
    /// Pre-assigned split, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

/// How a noisy file was produced from a clean file and a noise render.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixManifest {
    pub id: String,
    /// Relative to the dataset root.
    pub output_path: PathBuf,
    pub clean_id: String,
    /// Relative to the dataset root.
    pub clean_path: PathBuf,
    pub noise_id: String,
    pub noise_path: PathBuf,
    pub noise_offset_s: f64,
    pub noise_offset_samples: u64,
    pub target_snr_db: f64,
    pub applied_noise_gain: f64,
    pub measured_snr_db: f64,
    pub clipped_samples: usize,
    pub seed: u64,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
}
