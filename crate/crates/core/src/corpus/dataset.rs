use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, resample, write_wav, AudioBuffer, WavEncoding};
use crate::seed::{derive_seed, stream};

use super::mixing::measured_snr;
use super::pairing::{pair_with_count, PairOrder, PairPlan, TimelineSegment};
use super::{
    assert_disjoint, combine_pair, make_splits, mix_at_snr, noise_segment, write_jsonl,
    CorpusError, GroupKey, MixManifest, Role, SnrPowerModes, Split, SplitRatios, Splits,
    UtteranceRecord,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanOptions {
    pub overlap_fraction: f64,
    /// Used only when the records carry no pre-assigned split.
    pub ratios: SplitRatios,
    pub group_key: GroupKey,
    pub seed: u64,
    pub sample_rate: u32,
}

impl Default for CleanOptions {
    fn default() -> Self {
        Self {
            overlap_fraction: 0.2,
            ratios: SplitRatios::default(),
            group_key: GroupKey::SpeakerId,
            seed: 0,
            sample_rate: crate::audio::DEFAULT_SAMPLE_RATE,
        }
    }
}

/// One file of the clean speech base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanRecord {
    pub id: String,
    pub split: Split,
    /// Relative to the dataset root.
    pub audio_path: PathBuf,
    pub duration_s: f64,
    pub order: PairOrder,
    pub overlap_s: f64,
    pub first_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_id: Option<String>,
    pub speakers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
    pub timeline: Vec<TimelineSegment>,
    /// Child and adult tracks are combined at their recorded levels.
    pub loudness_normalization: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub files: usize,
    pub pairs: usize,
    pub solo: usize,
    pub overlapped: usize,
    pub child_first: usize,
    pub adult_first: usize,
    pub duration_s: f64,
    pub speakers: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleanStats {
    pub files: usize,
    pub pairs: usize,
    pub solo: usize,
    pub overlapped: usize,
    /// Overlapped pairs over all pairs.
    pub overlap_fraction: f64,
    pub overlap_min_s: Option<f64>,
    pub overlap_max_s: Option<f64>,
    pub child_first: usize,
    pub adult_first: usize,
    /// Child-first pairs over all pairs.
    pub child_first_ratio: f64,
    pub total_duration_s: f64,
    pub total_hours: f64,
    pub per_split: BTreeMap<Split, SplitStats>,
    pub dry_run: bool,
}

impl CleanStats {
    fn from_plans(plans: &[(Split, PairPlan, f64)], dry_run: bool) -> Self {
        let mut s = CleanStats {
            dry_run,
            ..Default::default()
        };
        let mut speakers: BTreeMap<Split, std::collections::BTreeSet<&str>> = BTreeMap::new();
        for (split, p, dur) in plans {
            let e = s.per_split.entry(*split).or_default();
            e.files += 1;
            e.duration_s += dur;
            match p.order {
                PairOrder::Solo => e.solo += 1,
                PairOrder::ChildFirst => {
                    e.pairs += 1;
                    e.child_first += 1
                }
                PairOrder::AdultFirst => {
                    e.pairs += 1;
                    e.adult_first += 1
                }
            }
            if p.overlap_s > 0.0 {
                e.overlapped += 1;
                s.overlap_min_s = Some(s.overlap_min_s.map_or(p.overlap_s, |m| m.min(p.overlap_s)));
                s.overlap_max_s = Some(s.overlap_max_s.map_or(p.overlap_s, |m| m.max(p.overlap_s)));
            }
            let set = speakers.entry(*split).or_default();
            set.insert(&p.first.speaker_id);
            if let Some(r) = &p.second {
                set.insert(&r.speaker_id);
            }
        }
        for (split, e) in s.per_split.iter_mut() {
            e.speakers = speakers.get(split).map_or(0, |v| v.len());
        }
        for e in s.per_split.values() {
            s.files += e.files;
            s.pairs += e.pairs;
            s.solo += e.solo;
            s.overlapped += e.overlapped;
            s.child_first += e.child_first;
            s.adult_first += e.adult_first;
            s.total_duration_s += e.duration_s;
        }
        if s.pairs > 0 {
            s.overlap_fraction = s.overlapped as f64 / s.pairs as f64;
            s.child_first_ratio = s.child_first as f64 / s.pairs as f64;
        }
        s.total_hours = s.total_duration_s / 3600.0;
        s
    }
}

/// Splits the records (unless every record already names its split) and
/// pairs children with adults inside each split. Records either all carry a
/// split or none do.
///
/// The overlap budget `round(overlap_fraction * total_pairs)` is shared out
/// across splits by largest remainder, so the dataset-wide count is exact.
pub fn plan_clean(
    children: &[UtteranceRecord],
    adults: &[UtteranceRecord],
    opts: &CleanOptions,
) -> Result<Vec<(Split, Vec<PairPlan>)>, CorpusError> {
    if children.is_empty() {
        return Err(CorpusError::EmptyChildPool);
    }
    let all: Vec<UtteranceRecord> = children.iter().chain(adults).cloned().collect();
    let assigned = all.iter().filter(|r| r.split.is_some()).count();
    let splits = if assigned == all.len() {
        let mut s = Splits {
            train: Vec::new(),
            dev: Vec::new(),
            test: Vec::new(),
        };
        for r in all {
            match r.split.expect("checked") {
                Split::Train => s.train.push(r),
                Split::Dev => s.dev.push(r),
                Split::Test => s.test.push(r),
            }
        }
        s
    } else if assigned == 0 {
        split_by_role(children, adults, opts)?
    } else {
        return Err(CorpusError::Invalid(format!(
            "{assigned} of {} records carry a split; assign all or none",
            all.len()
        )));
    };
    assert_disjoint(&splits, opts.group_key)?;

    let per_split: Vec<(Split, Vec<UtteranceRecord>, Vec<UtteranceRecord>)> = Split::ALL
        .into_iter()
        .map(|s| {
            let recs = splits.get(s);
            let kids = recs.iter().filter(|r| r.role == Role::Child).cloned().collect();
            let grown = recs.iter().filter(|r| r.role == Role::Adult).cloned().collect();
            (s, kids, grown)
        })
        .collect();
    let pairs: Vec<usize> = per_split
        .iter()
        .map(|(_, k, a): &(Split, Vec<UtteranceRecord>, Vec<UtteranceRecord>)| k.len().min(a.len()))
        .collect();
    let counts = share_overlaps(&pairs, opts.overlap_fraction);

    let mut out = Vec::new();
    for ((split, kids, grown), count) in per_split.into_iter().zip(counts) {
        if kids.is_empty() && grown.is_empty() {
            continue;
        }
        let seed = derive_seed(opts.seed, "pairs", split.index() as u64);
        let plans = if kids.is_empty() {
            let mut g = grown;
            g.sort_by(|a, b| a.id.cmp(&b.id));
            g.into_iter()
                .map(|r| PairPlan {
                    id: r.id.clone(),
                    first: r,
                    second: None,
                    overlap_s: 0.0,
                    order: PairOrder::Solo,
                })
                .collect()
        } else {
            pair_with_count(&kids, &grown, count, seed)?
        };
        out.push((split, plans));
    }
    Ok(out)
}

/// Splits children and adults separately so every split gets both roles,
/// unless a group spans both roles or either side has fewer than three
/// groups; then all records are split together.
fn split_by_role(
    children: &[UtteranceRecord],
    adults: &[UtteranceRecord],
    opts: &CleanOptions,
) -> Result<Splits, CorpusError> {
    let groups = |recs: &[UtteranceRecord]| -> std::collections::BTreeSet<String> {
        recs.iter().map(|r| opts.group_key.of(r).to_string()).collect()
    };
    let (gc, ga) = (groups(children), groups(adults));
    let seed = |i| derive_seed(opts.seed, "splits", i);
    if gc.is_disjoint(&ga) && gc.len() >= 3 && ga.len() >= 3 {
        let c = make_splits(children, opts.ratios, opts.group_key, seed(1))?;
        let a = make_splits(adults, opts.ratios, opts.group_key, seed(2))?;
        Ok(Splits {
            train: c.train.into_iter().chain(a.train).collect(),
            dev: c.dev.into_iter().chain(a.dev).collect(),
            test: c.test.into_iter().chain(a.test).collect(),
        })
    } else {
        let all: Vec<UtteranceRecord> = children.iter().chain(adults).cloned().collect();
        make_splits(&all, opts.ratios, opts.group_key, seed(0))
    }
}

/// Largest-remainder apportionment of `round(fraction * sum(pairs))`.
fn share_overlaps(pairs: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = pairs.iter().sum();
    let budget = (fraction * total as f64).round() as usize;
    let exact: Vec<f64> = pairs.iter().map(|&p| fraction * p as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let mut left = budget.saturating_sub(counts.iter().sum());
    for i in order {
        if left == 0 {
            break;
        }
        if counts[i] < pairs[i] {
            counts[i] += 1;
            left -= 1;
        }
    }
    counts
}

/// Statistics of a plan without rendering any audio.
pub fn dry_run_stats(plans: &[(Split, Vec<PairPlan>)]) -> CleanStats {
    let flat: Vec<(Split, PairPlan, f64)> = plans
        .iter()
        .flat_map(|(s, ps)| ps.iter().map(move |p| (*s, p.clone(), p.planned_duration_s())))
        .collect();
    CleanStats::from_plans(&flat, true)
}

fn load_audio(path: &Path, rate: u32) -> Result<AudioBuffer, CorpusError> {
    Ok(resample(&read_wav(path)?, rate)?)
}

fn create_dir(dir: &Path) -> Result<(), CorpusError> {
    std::fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))
}

/// Renders the clean speech base under `out_root`:
/// `<split>/clean/<id>.wav` (float32) with a `.txt` transcript when known,
/// `manifest.jsonl` in each `clean/` directory, in each split directory and
/// at the root, and `stats.json` at the root.
pub fn build_clean(
    children: &[UtteranceRecord],
    adults: &[UtteranceRecord],
    out_root: &Path,
    opts: &CleanOptions,
) -> Result<CleanStats, CorpusError> {
    let plans = plan_clean(children, adults, opts)?;
    let jobs: Vec<(Split, &PairPlan)> = plans
        .iter()
        .flat_map(|(s, ps)| ps.iter().map(move |p| (*s, p)))
        .collect();
    for s in Split::ALL {
        create_dir(&out_root.join(s.as_str()).join("clean"))?;
    }

    let records: Vec<CleanRecord> = jobs
        .par_iter()
        .map(|(split, plan)| {
            let first = load_audio(&plan.first.audio_path, opts.sample_rate)?;
            let second = plan
                .second
                .as_ref()
                .map(|r| load_audio(&r.audio_path, opts.sample_rate))
                .transpose()?;
            let (audio, timeline) = combine_pair(&first, second.as_ref(), plan)?;
            let rel = PathBuf::from(split.as_str()).join("clean").join(format!("{}.wav", plan.id));
            write_wav(&audio, &out_root.join(&rel), WavEncoding::Float32)?;
            let transcript = join_transcripts(plan);
            if let Some(t) = &transcript {
                let p = out_root.join(&rel).with_extension("txt");
                std::fs::write(&p, format!("{t}\n")).map_err(|e| CorpusError::io(p, e))?;
            }
            let mut speakers = vec![plan.first.speaker_id.clone()];
            speakers.extend(plan.second.as_ref().map(|r| r.speaker_id.clone()));
            Ok(CleanRecord {
                id: plan.id.clone(),
                split: *split,
                audio_path: rel,
                duration_s: audio.duration_seconds(),
                order: plan.order,
                overlap_s: plan.overlap_s,
                first_id: plan.first.id.clone(),
                second_id: plan.second.as_ref().map(|r| r.id.clone()),
                speakers,
                transcript,
                timeline,
                loudness_normalization: "none".into(),
            })
        })
        .collect::<Result<_, CorpusError>>()?;

    write_jsonl(&out_root.join("manifest.jsonl"), &records)?;
    for s in Split::ALL {
        let part: Vec<&CleanRecord> = records.iter().filter(|r| r.split == s).collect();
        write_jsonl(&out_root.join(s.as_str()).join("manifest.jsonl"), &part)?;
        write_jsonl(&out_root.join(s.as_str()).join("clean").join("manifest.jsonl"), &part)?;
    }
    let flat: Vec<(Split, PairPlan, f64)> = jobs
        .iter()
        .zip(&records)
        .map(|((s, p), r)| (*s, (*p).clone(), r.duration_s))
        .collect();
    let stats = CleanStats::from_plans(&flat, false);
    write_json(&out_root.join("stats.json"), &stats)?;
    Ok(stats)
}

fn join_transcripts(plan: &PairPlan) -> Option<String> {
    let parts: Vec<&str> = std::iter::once(&plan.first)
        .chain(plan.second.as_ref())
        .filter_map(|r| r.transcript.as_deref())
        .collect();
    (!parts.is_empty()).then(|| parts.join(" "))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CorpusError> {
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| CorpusError::Invalid(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CorpusError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixOptions {
    pub snrs: Vec<f64>,
    /// Mix every clean file at every SNR instead of drawing one.
    pub sweep: bool,
    pub seed: u64,
    pub sample_rate: u32,
    pub modes: SnrPowerModes,
    /// Allowed deviation of the measured SNR from its target.
    pub tolerance_db: f64,
}

impl Default for MixOptions {
    fn default() -> Self {
        Self {
            snrs: vec![-5.0, 0.0, 5.0, 10.0, 15.0],
            sweep: false,
            seed: 0,
            sample_rate: crate::audio::DEFAULT_SAMPLE_RATE,
            modes: SnrPowerModes::default(),
            tolerance_db: 0.1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MixStats {
    pub files: usize,
    pub per_snr: BTreeMap<String, usize>,
    pub max_abs_snr_error_db: f64,
    pub clipped_files: usize,
}

/// Directory label for an SNR: `noisy_snr-5`, `noisy_snr10`, `noisy_snr2.5`.
pub fn snr_label(snr: f64) -> String {
    if snr.fract() == 0.0 {
        format!("noisy_snr{}", snr as i64)
    } else {
        format!("noisy_snr{snr}")
    }
}

/// Mixes every clean record with noise renders at target SNRs.
///
/// Each clean file draws its SNR (or takes all of them with `sweep`), a
/// noise file and an offset from its own RNG stream. Outputs go to
/// `<out_root>/<split>/noisy_snr<k>/<clean id>.wav` with a manifest per
/// directory plus `mix_manifest.jsonl` at the root. Clean paths in the
/// manifest are relative to `out_root` when it is the clean root and
/// absolute otherwise. Every written file is
/// read back and its SNR re-measured; any miss beyond the tolerance fails
/// the run.
pub fn mix_dataset(
    clean: &[CleanRecord],
    clean_root: &Path,
    noise_files: &[PathBuf],
    out_root: &Path,
    opts: &MixOptions,
) -> Result<MixStats, CorpusError> {
    if opts.snrs.is_empty() {
        return Err(CorpusError::Invalid("empty SNR list".into()));
    }
    if noise_files.is_empty() {
        return Err(CorpusError::Invalid("no noise files".into()));
    }
    let noises: Vec<AudioBuffer> = noise_files
        .par_iter()
        .map(|p| load_audio(p, opts.sample_rate))
        .collect::<Result<_, _>>()?;
    create_dir(out_root)?;
    // Clean paths stay relative when the mixes live in the same tree.
    let canon = |p: &Path| p.canonicalize().map_err(|e| CorpusError::io(p, e));
    let clean_base = if canon(clean_root)? == canon(out_root)? {
        PathBuf::new()
    } else {
        canon(clean_root)?
    };
    let mut clean: Vec<&CleanRecord> = clean.iter().collect();
    clean.sort_by(|a, b| (a.split, &a.id).cmp(&(b.split, &b.id)));

    struct Job<'a> {
        rec: &'a CleanRecord,
        snr: f64,
        noise: usize,
        offset: u64,
    }
    let mut jobs = Vec::new();
    for (i, rec) in clean.iter().enumerate() {
        let mut rng = stream(opts.seed, "mix", i as u64);
        let snrs: Vec<f64> = if opts.sweep {
            opts.snrs.clone()
        } else {
            vec![opts.snrs[rng.random_range(0..opts.snrs.len())]]
        };
        for snr in snrs {
            let noise = rng.random_range(0..noises.len());
            let offset = rng.random_range(0..noises[noise].len() as u64);
            jobs.push(Job {
                rec,
                snr,
                noise,
                offset,
            });
        }
    }

    let results: Vec<Result<MixManifest, CorpusError>> = jobs
        .par_iter()
        .map(|job| {
            let speech = load_audio(&clean_root.join(&job.rec.audio_path), opts.sample_rate)?;
            let noise = &noises[job.noise];
            let offset_s = job.offset as f64 / opts.sample_rate as f64;
            let m = mix_at_snr(&speech, noise, job.snr, offset_s, opts.modes)?;
            if m.clipped > 0 {
                log::warn!("{}: {} samples beyond full scale", job.rec.id, m.clipped);
            }
            let rel = PathBuf::from(job.rec.split.as_str())
                .join(snr_label(job.snr))
                .join(format!("{}.wav", job.rec.id));
            let path = out_root.join(&rel);
            if let Some(dir) = path.parent() {
                create_dir(dir)?;
            }
            write_wav(&m.audio, &path, WavEncoding::Float32)?;
            if let Some(t) = &job.rec.transcript {
                let p = path.with_extension("txt");
                std::fs::write(&p, format!("{t}\n")).map_err(|e| CorpusError::io(p, e))?;
            }
            // Re-measure from what actually landed on disk.
            let written = read_wav(&path)?;
            let measured = measured_snr(&speech, &written, opts.modes)?;
            Ok(MixManifest {
                id: format!("{}_{}", job.rec.id, snr_label(job.snr).trim_start_matches("noisy_")),
                output_path: rel,
                clean_id: job.rec.id.clone(),
                clean_path: clean_base.join(&job.rec.audio_path),
                noise_id: noise_files[job.noise]
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                noise_path: noise_files[job.noise].clone(),
                noise_offset_s: offset_s,
                noise_offset_samples: job.offset,
                target_snr_db: job.snr,
                applied_noise_gain: m.gain,
                measured_snr_db: measured,
                clipped_samples: m.clipped,
                seed: opts.seed,
                split: job.rec.split,
                transcript: job.rec.transcript.clone(),
            })
        })
        .collect();
    let manifests: Vec<MixManifest> = results.into_iter().collect::<Result<_, _>>()?;

    let mut groups: BTreeMap<(Split, String), Vec<&MixManifest>> = BTreeMap::new();
    for m in &manifests {
        groups
            .entry((m.split, snr_label(m.target_snr_db)))
            .or_default()
            .push(m);
    }
    for ((split, label), recs) in &groups {
        write_jsonl(&out_root.join(split.as_str()).join(label).join("manifest.jsonl"), recs)?;
    }
    write_jsonl(&out_root.join("mix_manifest.jsonl"), &manifests)?;

    let mut stats = MixStats {
        files: manifests.len(),
        ..Default::default()
    };
    let mut failed = Vec::new();
    for m in &manifests {
        *stats.per_snr.entry(snr_label(m.target_snr_db)).or_default() += 1;
        let err = (m.measured_snr_db - m.target_snr_db).abs();
        stats.max_abs_snr_error_db = stats.max_abs_snr_error_db.max(err);
        if m.clipped_samples > 0 {
            stats.clipped_files += 1;
        }
        if !(err <= opts.tolerance_db) {
            failed.push(format!("{} ({:.3} dB)", m.output_path.display(), m.measured_snr_db));
        }
    }
    write_json(&out_root.join("mix_stats.json"), &stats)?;
    if !failed.is_empty() {
        return Err(CorpusError::VerificationFailed(failed));
    }
    Ok(stats)
}

/// Recomputes each mix from its manifest entry and checks that the file on
/// disk matches sample for sample and sits within `tolerance_db` of its
/// target SNR.
pub fn verify_mixes(
    root: &Path,
    manifests: &[MixManifest],
    sample_rate: u32,
    modes: SnrPowerModes,
    tolerance_db: f64,
) -> Result<usize, CorpusError> {
    let paths: BTreeSet<&PathBuf> = manifests.iter().map(|m| &m.noise_path).collect();
    let noises: BTreeMap<&PathBuf, AudioBuffer> = paths
        .into_par_iter()
        .map(|p| Ok((p, load_audio(p, sample_rate)?)))
        .collect::<Result<_, CorpusError>>()?;
    let failures: Vec<String> = manifests
        .par_iter()
        .filter_map(|m| match verify_one(root, m, &noises[&m.noise_path], sample_rate, modes, tolerance_db) {
            Ok(None) => None,
            Ok(Some(why)) => Some(format!("{}: {why}", m.output_path.display())),
            Err(e) => Some(format!("{}: {e}", m.output_path.display())),
        })
        .collect();
    if failures.is_empty() {
        Ok(manifests.len())
    } else {
        Err(CorpusError::VerificationFailed(failures))
    }
}

fn verify_one(
    root: &Path,
    m: &MixManifest,
    noise: &AudioBuffer,
    sample_rate: u32,
    modes: SnrPowerModes,
    tolerance_db: f64,
) -> Result<Option<String>, CorpusError> {
    let speech = load_audio(&root.join(&m.clean_path), sample_rate)?;
    let seg = noise_segment(noise, m.noise_offset_samples as usize, speech.len())?;
    let on_disk = read_wav(&root.join(&m.output_path))?;
    if on_disk.len() != speech.len() {
        return Ok(Some("length differs from its clean source".into()));
    }
    let mismatch = speech
        .samples()
        .iter()
        .zip(seg.samples())
        .zip(on_disk.samples())
        .position(|((s, n), y)| (s + m.applied_noise_gain * n) as f32 as f64 != *y);
    if let Some(i) = mismatch {
        return Ok(Some(format!("sample {i} differs from the recomputed mix")));
    }
    let snr = measured_snr(&speech, &on_disk, modes)?;
    if !((snr - m.target_snr_db).abs() <= tolerance_db) {
        return Ok(Some(format!(
            "measured {snr:.3} dB against target {} dB",
            m.target_snr_db
        )));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_budget_is_shared_exactly() {
        assert_eq!(share_overlaps(&[800, 100, 100], 0.2), vec![160, 20, 20]);
        let c = share_overlaps(&[803, 97, 101], 0.2);
        assert_eq!(c.iter().sum::<usize>(), 200);
        let c = share_overlaps(&[7, 3, 3], 0.2);
        assert_eq!(c.iter().sum::<usize>(), 3);
        assert_eq!(share_overlaps(&[10, 5, 0], 0.0), vec![0, 0, 0]);
    }

    #[test]
    fn snr_labels() {
        assert_eq!(snr_label(-5.0), "noisy_snr-5");
        assert_eq!(snr_label(15.0), "noisy_snr15");
        assert_eq!(snr_label(2.5), "noisy_snr2.5");
    }
}
