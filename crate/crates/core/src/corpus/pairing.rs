use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::seed::stream;

use super::{CorpusError, Role, UtteranceRecord};

/// Overlap range for cut-in pairs.
pub const MIN_OVERLAP_S: f64 = 0.5;
pub const MAX_OVERLAP_S: f64 = 1.0;
/// An overlap always leaves at least this much of the shorter utterance
/// un-overlapped.
pub const OVERLAP_MARGIN_S: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairOrder {
    ChildFirst,
    AdultFirst,
    Solo,
}

/// How one clean file is assembled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPlan {
    pub id: String,
    pub first: UtteranceRecord,
    pub second: Option<UtteranceRecord>,
    pub overlap_s: f64,
    pub order: PairOrder,
}

impl PairPlan {
    fn solo(r: UtteranceRecord) -> Self {
        Self {
            id: r.id.clone(),
            first: r,
            second: None,
            overlap_s: 0.0,
            order: PairOrder::Solo,
        }
    }

    /// Combined duration from the record durations.
    pub fn planned_duration_s(&self) -> f64 {
        self.first.duration_s + self.second.as_ref().map_or(0.0, |s| s.duration_s) - self.overlap_s
    }
}

/// Where one speaker talks inside a combined file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineSegment {
    pub utterance_id: String,
    pub speaker_id: String,
    pub role: Role,
    pub start_s: f64,
    pub end_s: f64,
}

/// Pairs children with adults without replacement.
///
/// Both pools are shuffled and paired index by index; whichever pool has
/// leftovers contributes them as solo plans. Each pair starts with the
/// child or the adult with equal probability. Exactly
/// `round(overlap_fraction * pairs)` pairs receive an overlap uniform in
/// `[0.5, 1.0]` s, capped at the shorter duration minus 0.1 s; only pairs
/// whose shorter utterance exceeds 0.6 s can take one.
pub fn pair_utterances(
    children: &[UtteranceRecord],
    adults: &[UtteranceRecord],
    overlap_fraction: f64,
    seed: u64,
) -> Result<Vec<PairPlan>, CorpusError> {
    if !(0.0..=1.0).contains(&overlap_fraction) {
        return Err(CorpusError::Invalid(format!(
            "overlap_fraction {overlap_fraction} outside [0, 1]"
        )));
    }
    let n_pairs = children.len().min(adults.len());
    let wanted = (overlap_fraction * n_pairs as f64).round() as usize;
    pair_with_count(children, adults, wanted, seed)
}

/// Same as [`pair_utterances`] with the number of overlapped pairs given
/// directly.
pub(crate) fn pair_with_count(
    children: &[UtteranceRecord],
    adults: &[UtteranceRecord],
    wanted: usize,
    seed: u64,
) -> Result<Vec<PairPlan>, CorpusError> {
    if children.is_empty() {
        return Err(CorpusError::EmptyChildPool);
    }
    if let Some(r) = children.iter().find(|r| r.role != Role::Child) {
        return Err(CorpusError::Invalid(format!("{} is not a child record", r.id)));
    }
    if let Some(r) = adults.iter().find(|r| r.role != Role::Adult) {
        return Err(CorpusError::Invalid(format!("{} is not an adult record", r.id)));
    }
    let mut rng = stream(seed, "pairing", 0);
    let mut kids = children.to_vec();
    let mut grown = adults.to_vec();
    kids.shuffle(&mut rng);
    grown.shuffle(&mut rng);

    let n_pairs = kids.len().min(grown.len());
    let mut plans = Vec::with_capacity(kids.len().max(grown.len()));
    let mut kid_iter = kids.into_iter();
    let mut adult_iter = grown.into_iter();
    for _ in 0..n_pairs {
        let c = kid_iter.next().expect("n_pairs <= children");
        let a = adult_iter.next().expect("n_pairs <= adults");
        let (first, second, order) = if rng.random_bool(0.5) {
            (c, a, PairOrder::ChildFirst)
        } else {
            (a, c, PairOrder::AdultFirst)
        };
        plans.push(PairPlan {
            id: format!("{}__{}", first.id, second.id),
            first,
            second: Some(second),
            overlap_s: 0.0,
            order,
        });
    }
    plans.extend(kid_iter.chain(adult_iter).map(PairPlan::solo));

    let mut eligible: Vec<usize> = (0..n_pairs)
        .filter(|&i| shorter(&plans[i]) - OVERLAP_MARGIN_S >= MIN_OVERLAP_S)
        .collect();
    eligible.shuffle(&mut rng);
    if eligible.len() < wanted {
        log::warn!(
            "only {} of {} pairs are long enough to overlap; {} requested",
            eligible.len(),
            n_pairs,
            wanted
        );
    }
    for &i in eligible.iter().take(wanted) {
        let cap = shorter(&plans[i]) - OVERLAP_MARGIN_S;
        let draw = rng.random_range(MIN_OVERLAP_S..=MAX_OVERLAP_S);
        plans[i].overlap_s = draw.min(cap);
    }
    Ok(plans)
}

fn shorter(p: &PairPlan) -> f64 {
    p.second
        .as_ref()
        .map_or(p.first.duration_s, |s| s.duration_s.min(p.first.duration_s))
}

/// Concatenates two utterances, hard-summing `plan.overlap_s` seconds where
/// the second cuts in. Returns the combined audio and who speaks when.
pub fn combine_pair(
    first: &AudioBuffer,
    second: Option<&AudioBuffer>,
    plan: &PairPlan,
) -> Result<(AudioBuffer, Vec<TimelineSegment>), CorpusError> {
    let fs = first.sample_rate();
    let seg = |r: &UtteranceRecord, start: usize, len: usize| TimelineSegment {
        utterance_id: r.id.clone(),
        speaker_id: r.speaker_id.clone(),
        role: r.role,
        start_s: start as f64 / fs as f64,
        end_s: (start + len) as f64 / fs as f64,
    };
    let (second, second_rec) = match (second, &plan.second) {
        (None, None) => {
            if plan.overlap_s != 0.0 {
                return Err(CorpusError::Invalid("solo plan with nonzero overlap".into()));
            }
            return Ok((first.clone(), vec![seg(&plan.first, 0, first.len())]));
        }
        (Some(b), Some(r)) => (b, r),
        _ => {
            return Err(CorpusError::Invalid(format!(
                "plan {} and supplied audio disagree on the second utterance",
                plan.id
            )))
        }
    };
    if second.sample_rate() != fs {
        return Err(CorpusError::Invalid(format!(
            "sample rates differ: {} vs {} Hz",
            fs,
            second.sample_rate()
        )));
    }
    if !(plan.overlap_s >= 0.0 && plan.overlap_s.is_finite()) {
        return Err(CorpusError::Invalid(format!("overlap {} s", plan.overlap_s)));
    }
    let ov = (plan.overlap_s * fs as f64).round() as usize;
    let shortest = first.len().min(second.len());
    if ov > 0 && ov >= shortest {
        return Err(CorpusError::OverlapExceedsUtterance {
            overlap_s: plan.overlap_s,
            available_s: shortest as f64 / fs as f64,
        });
    }
    let offset = first.len() - ov;
    let mut out = vec![0.0; offset + second.len()];
    out[..first.len()].copy_from_slice(first.samples());
    for (o, v) in out[offset..].iter_mut().zip(second.samples()) {
        *o += v;
    }
    let timeline = vec![
        seg(&plan.first, 0, first.len()),
        seg(second_rec, offset, second.len()),
    ];
    Ok((AudioBuffer::new(out, fs)?, timeline))
}
