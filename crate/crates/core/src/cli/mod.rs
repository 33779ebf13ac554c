//! Command-line front end: `classroom-sim <subcommand>`.

mod commands;
pub mod config;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{DEFAULT_SAMPLE_RATE, SAMPLE_RATE_ENV};
use crate::corpus::CorpusError;
use crate::fixtures::FixtureError;
use crate::metrics::MetricsError;
use crate::room::RoomError;
use crate::scene::SceneError;

pub use commands::{
    CleanConfig, EvalConfig, FixturesConfig, MixConfig, SisdrReport, SisdrSummaryRow, VerifyConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("id mismatch: {} without a hypothesis [{}], {} without a reference [{}]",
        .missing.len(), .missing.join(", "), .unexpected.len(), .unexpected.join(", "))]
    IdMismatch {
        missing: Vec<String>,
        unexpected: Vec<String>,
    },
    #[error("verification failed for {} file(s):\n  {}", .0.len(), .0.join("\n  "))]
    Verification(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) | CliError::IdMismatch { .. } => EXIT_DATA,
            CliError::Verification(_) => EXIT_VERIFY,
        }
    }
}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::InvalidConfig(_)
            | SceneError::OutOfMemoryGuard { .. }
            | SceneError::Rir(_)
            | SceneError::Room(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::VerificationFailed(files) => CliError::Verification(files),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<FixtureError> for CliError {
    fn from(e: FixtureError) -> Self {
        match e {
            FixtureError::InvalidSpec(_) => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<RoomError> for CliError {
    fn from(e: RoomError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "classroom-sim", version, about = "Classroom noise scenes and noisy speech datasets")]
pub struct Cli {
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON config for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dotted config override, e.g. `--set render.hop_s=0.5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Working sample rate in Hz.
    #[arg(long, global = true, env = SAMPLE_RATE_ENV, default_value_t = DEFAULT_SAMPLE_RATE)]
    pub sample_rate: u32,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render classroom noise from a scene config into chunked WAVs.
    RenderNoise(RenderNoiseArgs),
    /// Pair child and adult utterances into the clean speech base.
    BuildClean(BuildCleanArgs),
    /// Mix clean files with noise renders at target SNRs.
    Mix(MixArgs),
    /// WER or SI-SDR reports.
    Eval(EvalArgs),
    /// Synthetic corpora, scene pools and dummy hypotheses.
    #[command(subcommand)]
    Fixtures(FixturesCommand),
    /// Recompute mixes from their manifest and compare with the files.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RenderNoiseArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Total seconds to render; overrides `duration_s`.
    #[arg(long)]
    pub duration: Option<f64>,
    /// File name prefix (default: config file stem, else `noise`).
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct BuildCleanArgs {
    /// Child utterance manifest (JSONL).
    #[arg(long)]
    pub children: PathBuf,
    /// Adult utterance manifest (JSONL).
    #[arg(long)]
    pub adults: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub overlap_fraction: Option<f64>,
    /// Plan and report statistics without writing audio.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    /// Clean manifest, or the clean dataset root holding `manifest.jsonl`.
    #[arg(long)]
    pub clean: PathBuf,
    /// Noise WAV or directory of them.
    #[arg(long)]
    pub noise: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated target SNRs in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snrs: Option<Vec<f64>>,
    /// Mix every clean file at every SNR.
    #[arg(long)]
    pub sweep: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Wer,
    Sisdr,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub mode: EvalMode,
    /// Reference manifest (JSONL) or directory.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Hypothesis manifest (JSONL) or directory.
    #[arg(long)]
    pub hyp: PathBuf,
    /// Report directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum FixturesCommand {
    /// Child and adult synthetic voices with manifests.
    Corpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n_child: Option<usize>,
        #[arg(long)]
        n_adult: Option<usize>,
    },
    /// Babble, chair and ambient clip pools plus a scene config.
    Pools {
        #[arg(long)]
        out: PathBuf,
    },
    /// Corrupted transcripts for every entry of a mix manifest.
    Hypotheses {
        #[arg(long)]
        manifest: PathBuf,
        /// Output JSONL.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Mix manifest, or the directory holding `mix_manifest.jsonl`.
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
}

/// Written as `run_metadata.json` next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: Option<u64>,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub sample_rate: u32,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub stages: Vec<StageTiming>,
}

pub(crate) struct Stages {
    list: Vec<StageTiming>,
    started: f64,
}

impl Stages {
    pub(crate) fn new() -> Self {
        Self {
            list: Vec::new(),
            started: unix_now(),
        }
    }

    pub(crate) fn run<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        log::info!("{name}...");
        let t = Instant::now();
        let out = f();
        let seconds = t.elapsed().as_secs_f64();
        log::info!("{name} done in {seconds:.2} s");
        self.list.push(StageTiming {
            name: name.to_string(),
            seconds,
        });
        out
    }

    pub(crate) fn finish<C: Serialize>(
        self,
        command: &str,
        seed: Option<u64>,
        config: &C,
        sample_rate: u32,
    ) -> RunMetadata {
        RunMetadata {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            master_seed: seed,
            config_hash: config::canonical_hash(config),
            config: serde_json::to_value(config).expect("config serializes"),
            sample_rate,
            started_unix_s: self.started,
            finished_unix_s: unix_now(),
            stages: self.list,
        }
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    if cli.sample_rate == 0 {
        return Err(CliError::Config("sample rate must be positive".into()));
    }
    match cli.jobs {
        Some(0) => Err(CliError::Config("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            pool.install(|| commands::dispatch(&cli))
        }
        None => commands::dispatch(&cli),
    }
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code. Diagnostics go to stderr.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    run_from(std::env::args_os())
}
