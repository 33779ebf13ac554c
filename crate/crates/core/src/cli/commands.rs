use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::audio::{read_wav, resample, write_wav, WavEncoding};
use crate::corpus::{
    self, load_records, read_jsonl, write_jsonl, CleanOptions, CleanRecord, GroupKey, MixManifest,
    MixOptions, SnrPowerModes, SplitRatios,
};
use crate::fixtures::{self, ScenePoolSizes};
use crate::metrics::{self, NormalizeOptions, SisdrRow, WerItem};
use crate::room::RoomError;
use crate::scene::{load_scene, render_noise, EventSchedule, SceneDescription, SceneError};
use crate::seed::derive_seed;

use super::config::RawConfig;
use super::{Cli, CliError, Command, EvalMode, FixturesCommand, RunMetadata, Stages};

pub(crate) fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let raw = RawConfig::load(cli.config.as_deref(), &cli.set)?;
    match &cli.command {
        Command::RenderNoise(a) => render_noise_cmd(cli, raw, a),
        Command::BuildClean(a) => build_clean_cmd(cli, raw, a),
        Command::Mix(a) => mix_cmd(cli, raw, a),
        Command::Eval(a) => eval_cmd(cli, raw, a),
        Command::Fixtures(f) => fixtures_cmd(cli, raw, f),
        Command::Verify(a) => verify_cmd(cli, raw, a),
    }
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<(), CliError> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d).map_err(|e| CliError::Data(format!("{}: {e}", d.display())))?;
    }
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::Data(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_metadata(dir: &Path, meta: &RunMetadata) -> Result<(), CliError> {
    write_json(&dir.join("run_metadata.json"), meta)
}

fn print_summary<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

#[derive(Debug, Serialize)]
struct ChunkSidecar<'a> {
    chunk: usize,
    start_s: f64,
    duration_s: f64,
    seed: u64,
    normalization_gain: f64,
    normalization_skipped: bool,
    ambient_gain: f64,
    schedule: &'a EventSchedule,
}

fn render_noise_cmd(cli: &Cli, mut raw: RawConfig, a: &super::RenderNoiseArgs) -> Result<(), CliError> {
    raw.flag("seed", cli.seed)?;
    raw.flag("duration_s", a.duration)?;
    let desc: SceneDescription = raw.parse()?;
    if !(desc.duration_s > 0.0 && desc.duration_s.is_finite()) {
        return Err(CliError::Config(format!("duration_s must be positive, got {}", desc.duration_s)));
    }
    if !(desc.chunk_s > 0.0 && desc.chunk_s.is_finite()) {
        return Err(CliError::Config(format!("chunk_s must be positive, got {}", desc.chunk_s)));
    }
    let name = a.name.clone().unwrap_or_else(|| {
        raw.path
            .as_deref()
            .and_then(Path::file_stem)
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "noise".into())
    });
    let mut stages = Stages::new();
    let scene = stages
        .run("load scene", || load_scene(&desc, &raw.base_dir(), cli.sample_rate))
        .map_err(|e| scene_error(&raw, e))?;

    let n_chunks = (desc.duration_s / desc.chunk_s).ceil().max(1.0) as usize;
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::Data(format!("{}: {e}", a.out.display())))?;
    for k in 0..n_chunks {
        let start = k as f64 * desc.chunk_s;
        let mut chunk = scene.clone();
        chunk.duration_s = desc.chunk_s.min(desc.duration_s - start);
        chunk.seed = derive_seed(desc.seed, "chunk", k as u64);
        let out = stages.run(&format!("render chunk {k}"), || render_noise(&chunk))?;
        let stem = format!("{name}_{k:04}");
        write_wav(&out.normalized(), a.out.join(format!("{stem}.wav")), WavEncoding::Float32)
            .map_err(|e| CliError::Data(e.to_string()))?;
        write_json(
            &a.out.join(format!("{stem}.schedule.json")),
            &ChunkSidecar {
                chunk: k,
                start_s: start,
                duration_s: chunk.duration_s,
                seed: chunk.seed,
                normalization_gain: out.normalization_gain,
                normalization_skipped: out.normalization_skipped,
                ambient_gain: out.ambient_gain,
                schedule: &out.schedule,
            },
        )?;
    }
    let meta = stages.finish("render-noise", Some(desc.seed), &desc, cli.sample_rate);
    write_metadata(&a.out, &meta)?;
    print_summary(&serde_json::json!({"chunks": n_chunks, "out": a.out, "config_hash": meta.config_hash}));
    Ok(())
}

/// Adds file/line context to scene errors that point into the config.
fn scene_error(raw: &RawConfig, e: SceneError) -> CliError {
    let SceneError::Room(RoomError::UnknownMaterial(name)) = &e else {
        return e.into();
    };
    let needle = format!("\"{name}\"");
    let msg = e.to_string();
    if raw.text.as_deref().is_some_and(|t| t.contains(&needle)) {
        return CliError::Config(raw.locate(&needle, &msg));
    }
    // The room may live in its own file.
    if let Some(Value::String(p)) = raw.value.get("room") {
        let path = raw.base_dir().join(p);
        if let Some(line) = std::fs::read_to_string(&path)
            .ok()
            .and_then(|t| super::config::find_line(&t, &needle))
        {
            return CliError::Config(format!("{}:{line}: {msg}", path.display()));
        }
    }
    CliError::Config(raw.locate(&needle, &msg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanConfig {
    pub seed: u64,
    pub overlap_fraction: f64,
    pub ratios: SplitRatios,
    pub group_key: GroupKey,
}

impl Default for CleanConfig {
    fn default() -> Self {
        let o = CleanOptions::default();
        Self {
            seed: o.seed,
            overlap_fraction: o.overlap_fraction,
            ratios: o.ratios,
            group_key: o.group_key,
        }
    }
}

fn build_clean_cmd(cli: &Cli, mut raw: RawConfig, a: &super::BuildCleanArgs) -> Result<(), CliError> {
    raw.flag("seed", cli.seed)?;
    raw.flag("overlap_fraction", a.overlap_fraction)?;
    let cfg: CleanConfig = raw.parse()?;
    if !(0.0..=1.0).contains(&cfg.overlap_fraction) {
        return Err(CliError::Config(format!("overlap_fraction {} outside [0, 1]", cfg.overlap_fraction)));
    }
    let r = cfg.ratios.0;
    if r.iter().any(|x| !(*x >= 0.0)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return Err(CliError::Config(format!("ratios {r:?} must be >= 0 and sum to 1")));
    }
    let opts = CleanOptions {
        overlap_fraction: cfg.overlap_fraction,
        ratios: cfg.ratios,
        group_key: cfg.group_key,
        seed: cfg.seed,
        sample_rate: cli.sample_rate,
    };
    let mut stages = Stages::new();
    let (kids, adults) = stages.run("read manifests", || {
        Ok::<_, CliError>((load_records(&a.children)?, load_records(&a.adults)?))
    })?;
    let stats = if a.dry_run {
        let plans = stages.run("plan", || corpus::plan_clean(&kids, &adults, &opts))?;
        let stats = corpus::dry_run_stats(&plans);
        write_json(&a.out.join("stats.json"), &stats)?;
        stats
    } else {
        stages.run("build clean base", || corpus::build_clean(&kids, &adults, &a.out, &opts))?
    };
    let meta = stages.finish("build-clean", Some(cfg.seed), &cfg, cli.sample_rate);
    write_metadata(&a.out, &meta)?;
    print_summary(&stats);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixConfig {
    pub seed: u64,
    pub snrs: Vec<f64>,
    pub sweep: bool,
    pub tolerance_db: f64,
    pub modes: SnrPowerModes,
}

impl Default for MixConfig {
    fn default() -> Self {
        let o = MixOptions::default();
        Self {
            seed: o.seed,
            snrs: o.snrs,
            sweep: o.sweep,
            tolerance_db: o.tolerance_db,
            modes: o.modes,
        }
    }
}

fn wav_files(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    let path = path
        .canonicalize()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if path.is_file() {
        return Ok(vec![path]);
    }
    let mut out = Vec::new();
    walk(&path, &mut out, "wav")?;
    out.sort();
    Ok(out)
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>, ext: &str) -> Result<(), CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let p = entry.map_err(|e| CliError::Data(e.to_string()))?.path();
        if p.is_dir() {
            walk(&p, out, ext)?;
        } else if p.extension().is_some_and(|x| x.eq_ignore_ascii_case(ext)) {
            out.push(p);
        }
    }
    Ok(())
}

fn mix_cmd(cli: &Cli, mut raw: RawConfig, a: &super::MixArgs) -> Result<(), CliError> {
    raw.flag("seed", cli.seed)?;
    raw.flag("snrs", a.snrs.clone())?;
    if a.sweep {
        raw.flag("sweep", Some(true))?;
    }
    let cfg: MixConfig = raw.parse()?;
    if cfg.snrs.is_empty() || cfg.snrs.iter().any(|s| !s.is_finite()) {
        return Err(CliError::Config(format!("snrs must be a non-empty list of finite values, got {:?}", cfg.snrs)));
    }
    let manifest = if a.clean.is_dir() { a.clean.join("manifest.jsonl") } else { a.clean.clone() };
    let clean_root = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let clean_root = if clean_root.as_os_str().is_empty() { PathBuf::from(".") } else { clean_root };
    let mut stages = Stages::new();
    let records: Vec<CleanRecord> = stages.run("read clean manifest", || read_jsonl(&manifest))?;
    let noise = wav_files(&a.noise)?;
    if noise.is_empty() {
        return Err(CliError::Data(format!("no WAV files under {}", a.noise.display())));
    }
    let opts = MixOptions {
        snrs: cfg.snrs.clone(),
        sweep: cfg.sweep,
        seed: cfg.seed,
        sample_rate: cli.sample_rate,
        modes: cfg.modes,
        tolerance_db: cfg.tolerance_db,
    };
    let result = stages.run("mix and verify", || {
        corpus::mix_dataset(&records, &clean_root, &noise, &a.out, &opts)
    });
    let meta = stages.finish("mix", Some(cfg.seed), &cfg, cli.sample_rate);
    write_metadata(&a.out, &meta)?;
    let stats = result?;
    print_summary(&stats);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub tolerance_db: f64,
    pub modes: SnrPowerModes,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let o = MixOptions::default();
        Self {
            tolerance_db: o.tolerance_db,
            modes: o.modes,
        }
    }
}

fn verify_cmd(cli: &Cli, raw: RawConfig, a: &super::VerifyArgs) -> Result<(), CliError> {
    let cfg: VerifyConfig = raw.parse()?;
    let manifest = if a.manifest.is_dir() {
        a.manifest.join("mix_manifest.jsonl")
    } else {
        a.manifest.clone()
    };
    let root = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let entries: Vec<MixManifest> = read_jsonl(&manifest)?;
    let n = corpus::verify_mixes(&root, &entries, cli.sample_rate, cfg.modes, cfg.tolerance_db)?;
    print_summary(&serde_json::json!({"verified": n}));
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub normalize: NormalizeOptions,
    /// Mean-subtract both signals before SI-SDR.
    pub zero_mean: bool,
}

struct Transcript {
    text: String,
    snr_db: Option<f64>,
}

fn load_transcripts(path: &Path, keys: &[&str]) -> Result<BTreeMap<String, Transcript>, CliError> {
    let mut out = BTreeMap::new();
    if path.is_dir() {
        let mut files = Vec::new();
        walk(path, &mut files, "txt")?;
        files.sort();
        for f in files {
            let id = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let text = std::fs::read_to_string(&f).map_err(|e| CliError::Data(format!("{}: {e}", f.display())))?;
            let t = Transcript {
                text: text.trim().to_string(),
                snr_db: None,
            };
            if out.insert(id.clone(), t).is_some() {
                return Err(CliError::Data(format!("duplicate id {id} under {}", path.display())));
            }
        }
        return Ok(out);
    }
    let rows: Vec<Value> = read_jsonl(path)?;
    for (i, v) in rows.iter().enumerate() {
        let where_ = || format!("{}:{}", path.display(), i + 1);
        let id = v
            .get("id")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::Data(format!("{}: missing string `id`", where_())))?;
        let text = keys
            .iter()
            .find_map(|k| v.get(*k).and_then(Value::as_str))
            .ok_or_else(|| CliError::Data(format!("{}: no {} field", where_(), keys.join("/"))))?;
        let snr_db = ["target_snr_db", "snr_db"].iter().find_map(|k| v.get(*k).and_then(Value::as_f64));
        let t = Transcript {
            text: text.to_string(),
            snr_db,
        };
        if out.insert(id.to_string(), t).is_some() {
            return Err(CliError::Data(format!("{}: duplicate id {id}", where_())));
        }
    }
    Ok(out)
}

fn match_ids<A, B>(r: &BTreeMap<String, A>, h: &BTreeMap<String, B>) -> Result<(), CliError> {
    let missing: Vec<String> = r.keys().filter(|k| !h.contains_key(*k)).cloned().collect();
    let unexpected: Vec<String> = h.keys().filter(|k| !r.contains_key(*k)).cloned().collect();
    if missing.is_empty() && unexpected.is_empty() {
        Ok(())
    } else {
        Err(CliError::IdMismatch { missing, unexpected })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SisdrSummaryRow {
    pub snr_label: Option<String>,
    pub files: usize,
    /// Mean of display-capped values.
    pub mean_si_sdr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SisdrReport {
    pub files: usize,
    pub mean_si_sdr_db: f64,
    pub capped_files: usize,
    pub by_snr: Vec<SisdrSummaryRow>,
}

fn eval_cmd(cli: &Cli, raw: RawConfig, a: &super::EvalArgs) -> Result<(), CliError> {
    let cfg: EvalConfig = raw.parse()?;
    let mut stages = Stages::new();
    match a.mode {
        EvalMode::Wer => {
            let refs = load_transcripts(&a.reference, &["transcript", "text", "reference"])?;
            let hyps = load_transcripts(&a.hyp, &["text", "hypothesis", "transcript"])?;
            match_ids(&refs, &hyps)?;
            let items: Vec<WerItem> = refs
                .iter()
                .map(|(id, r)| WerItem {
                    id: id.clone(),
                    reference: r.text.clone(),
                    hypothesis: hyps[id].text.clone(),
                    snr_db: r.snr_db.or(hyps[id].snr_db),
                })
                .collect();
            let report = stages.run("align", || metrics::corpus_wer(&items, &cfg.normalize))?;
            write_json(&a.out.join("wer_report.json"), &report)?;
            report.write_snr_csv(&a.out.join("wer_by_snr.csv"))?;
            print_summary(&serde_json::json!({
                "aggregate_wer": report.aggregate_wer,
                "n_ref": report.n_ref,
                "by_snr": report.by_snr,
            }));
        }
        EvalMode::Sisdr => {
            let pairs = sisdr_pairs(&a.reference, &a.hyp)?;
            let rows: Vec<SisdrRow> = stages.run("si-sdr", || {
                pairs
                    .par_iter()
                    .map(|(id, label, r, e)| {
                        let rb = read_wav(r).and_then(|b| resample(&b, cli.sample_rate));
                        let eb = read_wav(e).and_then(|b| resample(&b, cli.sample_rate));
                        let (rb, eb) = (rb.map_err(|x| CliError::Data(x.to_string()))?, eb.map_err(|x| CliError::Data(x.to_string()))?);
                        let v = metrics::si_sdr(&eb, &rb, cfg.zero_mean)
                            .map_err(|x| CliError::Data(format!("{id}: {x}")))?;
                        Ok(SisdrRow {
                            id: id.clone(),
                            snr_label: label.clone(),
                            si_sdr_db: v,
                        })
                    })
                    .collect::<Result<_, CliError>>()
            })?;
            std::fs::create_dir_all(&a.out).map_err(|e| CliError::Data(e.to_string()))?;
            metrics::write_sisdr_csv(&rows, &a.out.join("sisdr.csv"))?;
            let report = summarize_sisdr(&rows);
            write_json(&a.out.join("sisdr_report.json"), &report)?;
            print_summary(&report);
        }
    }
    let meta = stages.finish("eval", None, &serde_json::json!({"mode": a.mode, "config": cfg}), cli.sample_rate);
    write_metadata(&a.out, &meta)
}

type SisdrPair = (String, Option<String>, PathBuf, PathBuf);

/// `(id, snr label, reference, estimate)` for every file to score.
fn sisdr_pairs(reference: &Path, hyp: &Path) -> Result<Vec<SisdrPair>, CliError> {
    if reference.is_file() {
        let root = reference.parent().unwrap_or(Path::new("."));
        let entries: Vec<MixManifest> = read_jsonl(reference)?;
        let mut missing = Vec::new();
        let mut out = Vec::new();
        for m in entries {
            let est = hyp.join(&m.output_path);
            if !est.is_file() {
                missing.push(m.id.clone());
                continue;
            }
            let label = snr_from_label(&corpus::snr_label(m.target_snr_db));
            out.push((m.id, label, root.join(&m.clean_path), est));
        }
        if !missing.is_empty() {
            return Err(CliError::IdMismatch {
                missing,
                unexpected: Vec::new(),
            });
        }
        return Ok(out);
    }
    let rel = |base: &Path| -> Result<BTreeMap<String, PathBuf>, CliError> {
        let mut files = Vec::new();
        walk(base, &mut files, "wav")?;
        Ok(files
            .into_iter()
            .map(|f| {
                let r = f.strip_prefix(base).unwrap_or(&f).with_extension("");
                (r.to_string_lossy().replace('\\', "/"), f)
            })
            .collect())
    };
    let (r, h) = (rel(reference)?, rel(hyp)?);
    match_ids(&r, &h)?;
    Ok(r.into_iter()
        .map(|(id, path)| {
            let label = id.split('/').find_map(snr_from_label);
            let est = h[&id].clone();
            (id, label, path, est)
        })
        .collect())
}

fn snr_from_label(component: &str) -> Option<String> {
    component.strip_prefix("noisy_snr").map(str::to_string)
}

fn summarize_sisdr(rows: &[SisdrRow]) -> SisdrReport {
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let mut groups: BTreeMap<Option<String>, Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.snr_label.clone()).or_default().push(metrics::display_db(r.si_sdr_db));
    }
    let mut by_snr: Vec<SisdrSummaryRow> = groups
        .into_iter()
        .map(|(snr_label, v)| SisdrSummaryRow {
            snr_label,
            files: v.len(),
            mean_si_sdr_db: mean(&v),
        })
        .collect();
    by_snr.sort_by(|a, b| {
        let key = |r: &SisdrSummaryRow| r.snr_label.as_deref().and_then(|s| s.parse::<f64>().ok());
        key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
    });
    let all: Vec<f64> = rows.iter().map(|r| metrics::display_db(r.si_sdr_db)).collect();
    SisdrReport {
        files: rows.len(),
        mean_si_sdr_db: mean(&all),
        capped_files: rows.iter().filter(|r| r.si_sdr_db.abs() > metrics::DISPLAY_CAP_DB).count(),
        by_snr,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixturesConfig {
    pub seed: u64,
    pub n_child: usize,
    pub n_adult: usize,
    pub pools: ScenePoolSizes,
}

impl Default for FixturesConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_child: 20,
            n_adult: 10,
            pools: ScenePoolSizes::default(),
        }
    }
}

fn fixtures_cmd(cli: &Cli, mut raw: RawConfig, f: &FixturesCommand) -> Result<(), CliError> {
    raw.flag("seed", cli.seed)?;
    if let FixturesCommand::Corpus { n_child, n_adult, .. } = f {
        raw.flag("n_child", *n_child)?;
        raw.flag("n_adult", *n_adult)?;
    }
    let cfg: FixturesConfig = raw.parse()?;
    let mut stages = Stages::new();
    let (meta_path, name) = match f {
        FixturesCommand::Corpus { out, .. } => {
            let recs = stages.run("voices", || {
                fixtures::generate_fixture_corpus(cfg.n_child, cfg.n_adult, out, cfg.seed, cli.sample_rate)
            })?;
            let speakers: BTreeSet<&str> = recs.iter().map(|r| r.speaker_id.as_str()).collect();
            print_summary(&serde_json::json!({"files": recs.len(), "speakers": speakers.len()}));
            (out.join("run_metadata.json"), "fixtures corpus")
        }
        FixturesCommand::Pools { out } => {
            let scene = stages.run("pools", || {
                fixtures::generate_scene_pools(out, cfg.pools, cfg.seed, cli.sample_rate)
            })?;
            print_summary(&serde_json::json!({"scene": scene}));
            (out.join("run_metadata.json"), "fixtures pools")
        }
        FixturesCommand::Hypotheses { manifest, out } => {
            let manifest = if manifest.is_dir() { manifest.join("mix_manifest.jsonl") } else { manifest.clone() };
            let mixes: Vec<MixManifest> = read_jsonl(&manifest)?;
            let hyps = fixtures::dummy_hypotheses(&mixes, cfg.seed);
            write_jsonl(out, &hyps)?;
            print_summary(&serde_json::json!({"hypotheses": hyps.len()}));
            (out.with_extension("run_metadata.json"), "fixtures hypotheses")
        }
    };
    let meta = stages.finish(name, Some(cfg.seed), &cfg, cli.sample_rate);
    write_json(&meta_path, &meta)
}
