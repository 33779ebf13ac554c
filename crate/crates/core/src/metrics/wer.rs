use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Match,
    Sub,
    Ins,
    Del,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub reference: Option<String>,
    pub hypothesis: Option<String>,
    pub op: EditOp,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub n_ref: usize,
    pub n_hyp: usize,
    pub matches: usize,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub pairs: Vec<AlignedPair>,
}

impl AlignmentReport {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    /// `None` when the reference is empty.
    pub fn wer(&self) -> Option<f64> {
        (self.n_ref > 0).then(|| self.errors() as f64 / self.n_ref as f64)
    }
}

/// Minimum-edit-distance alignment with unit costs.
///
/// Among alignments of minimal cost the one with the fewest substitutions is
/// taken, which makes the S/D/I split independent of argument order (up to
/// swapping D and I). The backtrace prefers match, then substitution, then
/// deletion, then insertion.
pub fn align_words<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> AlignmentReport {
    let (n, m) = (reference.len(), hypothesis.len());
    let eq = |i: usize, j: usize| reference[i].as_ref() == hypothesis[j].as_ref();
    let w = m + 1;
    // (edits, substitutions), compared lexicographically.
    let mut cost = vec![(0usize, 0usize); (n + 1) * w];
    for i in 0..=n {
        for j in 0..=m {
            cost[i * w + j] = match (i, j) {
                (0, _) => (j, 0),
                (_, 0) => (i, 0),
                _ => {
                    let d = cost[(i - 1) * w + j - 1];
                    let diag = if eq(i - 1, j - 1) { d } else { (d.0 + 1, d.1 + 1) };
                    let up = cost[(i - 1) * w + j];
                    let left = cost[i * w + j - 1];
                    diag.min((up.0 + 1, up.1)).min((left.0 + 1, left.1))
                }
            };
        }
    }

    let mut rep = AlignmentReport {
        n_ref: n,
        n_hyp: m,
        ..Default::default()
    };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i * w + j];
        let op = if i > 0 && j > 0 && eq(i - 1, j - 1) && cost[(i - 1) * w + j - 1] == here {
            EditOp::Match
        } else if i > 0 && j > 0 && !eq(i - 1, j - 1) && {
            let d = cost[(i - 1) * w + j - 1];
            (d.0 + 1, d.1 + 1) == here
        } {
            EditOp::Sub
        } else if i > 0 && {
            let u = cost[(i - 1) * w + j];
            (u.0 + 1, u.1) == here
        } {
            EditOp::Del
        } else {
            EditOp::Ins
        };
        let (r, h) = match op {
            EditOp::Match | EditOp::Sub => {
                i -= 1;
                j -= 1;
                (Some(i), Some(j))
            }
            EditOp::Del => {
                i -= 1;
                (Some(i), None)
            }
            EditOp::Ins => {
                j -= 1;
                (None, Some(j))
            }
        };
        match op {
            EditOp::Match => rep.matches += 1,
            EditOp::Sub => rep.substitutions += 1,
            EditOp::Del => rep.deletions += 1,
            EditOp::Ins => rep.insertions += 1,
        }
        rep.pairs.push(AlignedPair {
            reference: r.map(|k| reference[k].as_ref().to_string()),
            hypothesis: h.map(|k| hypothesis[k].as_ref().to_string()),
            op,
        });
    }
    rep.pairs.reverse();
    rep
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizeOptions {
    /// Tokens dropped after normalization, e.g. `um`, `uh`.
    pub fillers: Vec<String>,
    /// Treat hyphens as word breaks instead of deleting them.
    pub split_hyphens: bool,
}

/// Lowercases, strips punctuation except apostrophes inside words and
/// splits on whitespace.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    normalize_tokens_with(text, &NormalizeOptions::default())
}

pub fn normalize_tokens_with(text: &str, opts: &NormalizeOptions) -> Vec<String> {
    let mut text = text.to_lowercase().replace(['\u{2019}', '\u{2018}'], "'");
    if opts.split_hyphens {
        text = text.replace('-', " ");
    }
    text.split_whitespace()
        .filter_map(|word| {
            let c: Vec<char> = word.chars().collect();
            let kept: String = c
                .iter()
                .enumerate()
                .filter(|&(i, &ch)| {
                    ch.is_alphanumeric()
                        || (ch == '\''
                            && i > 0
                            && i + 1 < c.len()
                            && c[i - 1].is_alphanumeric()
                            && c[i + 1].is_alphanumeric())
                })
                .map(|(_, &ch)| ch)
                .collect();
            (!kept.is_empty() && !opts.fillers.contains(&kept)).then_some(kept)
        })
        .collect()
}

/// One reference/hypothesis transcript pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WerItem {
    pub id: String,
    pub reference: String,
    pub hypothesis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileWer {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    pub n_ref: usize,
    pub n_hyp: usize,
    pub matches: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    /// `None` for an empty reference.
    pub wer: Option<f64>,
    pub empty_reference: bool,
}

/// Pooled counts for one SNR value (`None` collects unlabeled files).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrRow {
    pub snr_db: Option<f64>,
    pub files: usize,
    pub n_ref: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub wer: Option<f64>,
    pub sub_rate: Option<f64>,
    pub del_rate: Option<f64>,
    pub ins_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WerReport {
    pub aggregate_wer: f64,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub n_ref: usize,
    pub per_file: Vec<FileWer>,
    pub by_snr: Vec<SnrRow>,
}

/// Token-weighted WER over all pairs: `sum(S + D + I) / sum(n_ref)`.
pub fn corpus_wer(items: &[WerItem], opts: &NormalizeOptions) -> Result<WerReport, MetricsError> {
    let per_file: Vec<FileWer> = items
        .iter()
        .map(|it| {
            let r = normalize_tokens_with(&it.reference, opts);
            let h = normalize_tokens_with(&it.hypothesis, opts);
            let a = align_words(&r, &h);
            if a.n_ref == 0 {
                log::warn!("{}: empty reference, WER undefined", it.id);
            }
            FileWer {
                id: it.id.clone(),
                snr_db: it.snr_db,
                n_ref: a.n_ref,
                n_hyp: a.n_hyp,
                matches: a.matches,
                substitutions: a.substitutions,
                deletions: a.deletions,
                insertions: a.insertions,
                wer: a.wer(),
                empty_reference: a.n_ref == 0,
            }
        })
        .collect();
    let n_ref: usize = per_file.iter().map(|f| f.n_ref).sum();
    if n_ref == 0 {
        return Err(MetricsError::AllEmptyReferences);
    }
    let s: usize = per_file.iter().map(|f| f.substitutions).sum();
    let d: usize = per_file.iter().map(|f| f.deletions).sum();
    let i: usize = per_file.iter().map(|f| f.insertions).sum();

    let mut buckets: BTreeMap<Option<i64>, Vec<&FileWer>> = BTreeMap::new();
    for f in &per_file {
        // Keyed on millidecibels so labels sort numerically.
        buckets
            .entry(f.snr_db.map(|v| (v * 1000.0).round() as i64))
            .or_default()
            .push(f);
    }
    let by_snr = buckets
        .into_iter()
        .map(|(key, files)| {
            let n: usize = files.iter().map(|f| f.n_ref).sum();
            let rate = |x: usize| (n > 0).then(|| x as f64 / n as f64);
            let (bs, bd, bi) = files.iter().fold((0, 0, 0), |acc, f| {
                (acc.0 + f.substitutions, acc.1 + f.deletions, acc.2 + f.insertions)
            });
            SnrRow {
                snr_db: key.map(|k| k as f64 / 1000.0),
                files: files.len(),
                n_ref: n,
                substitutions: bs,
                deletions: bd,
                insertions: bi,
                wer: rate(bs + bd + bi),
                sub_rate: rate(bs),
                del_rate: rate(bd),
                ins_rate: rate(bi),
            }
        })
        .collect();
    Ok(WerReport {
        aggregate_wer: (s + d + i) as f64 / n_ref as f64,
        substitutions: s,
        insertions: i,
        deletions: d,
        n_ref,
        per_file,
        by_snr,
    })
}

impl WerReport {
    /// One row per SNR: `snr_db,files,n_ref,wer,sub_rate,del_rate,ins_rate`.
    pub fn write_snr_csv(&self, path: &Path) -> Result<(), MetricsError> {
        let err = |e: &dyn std::fmt::Display| MetricsError::Write {
            path: path.to_path_buf(),
            detail: e.to_string(),
        };
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        let mut w = csv::Writer::from_path(path).map_err(|e| err(&e))?;
        w.write_record(["snr_db", "files", "n_ref", "wer", "sub_rate", "del_rate", "ins_rate"])
            .map_err(|e| err(&e))?;
        for r in &self.by_snr {
            w.write_record([
                r.snr_db.map_or(String::new(), |v| v.to_string()),
                r.files.to_string(),
                r.n_ref.to_string(),
                opt(r.wer),
                opt(r.sub_rate),
                opt(r.del_rate),
                opt(r.ins_rate),
            ])
            .map_err(|e| err(&e))?;
        }
        w.flush().map_err(|e| err(&e))
    }
}
