use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::seed::stream;

use super::{CorpusError, Split, UtteranceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    SpeakerId,
    SourceTag,
}

impl GroupKey {
    pub fn of(self, r: &UtteranceRecord) -> &str {
        match self {
            GroupKey::SpeakerId => &r.speaker_id,
            GroupKey::SourceTag => &r.source_tag,
        }
    }
}

/// Target shares for train, dev and test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios(pub [f64; 3]);

impl Default for SplitRatios {
    fn default() -> Self {
        Self([0.8, 0.1, 0.1])
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Splits {
    pub train: Vec<UtteranceRecord>,
    pub dev: Vec<UtteranceRecord>,
    pub test: Vec<UtteranceRecord>,
}

impl Splits {
    pub fn get(&self, s: Split) -> &[UtteranceRecord] {
        match s {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    fn get_mut(&mut self, s: Split) -> &mut Vec<UtteranceRecord> {
        match s {
            Split::Train => &mut self.train,
            Split::Dev => &mut self.dev,
            Split::Test => &mut self.test,
        }
    }

    /// Share of total duration per split.
    pub fn duration_shares(&self) -> [f64; 3] {
        let d = Split::ALL.map(|s| self.get(s).iter().map(|r| r.duration_s).sum::<f64>());
        let total: f64 = d.iter().sum();
        d.map(|x| if total > 0.0 { x / total } else { 0.0 })
    }
}

/// Assigns whole groups to train/dev/test.
///
/// Groups are shuffled, stably sorted by total duration (largest first) and
/// each is given to the split furthest below its target duration; ties go to
/// train, then dev, then test. Records come back with `split` set.
pub fn make_splits(
    records: &[UtteranceRecord],
    ratios: SplitRatios,
    key: GroupKey,
    seed: u64,
) -> Result<Splits, CorpusError> {
    let r = ratios.0;
    if r.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return Err(CorpusError::Invalid(format!("split ratios {r:?} must be >= 0 and sum to 1")));
    }
    if let Some(rec) = records.iter().find(|x| key.of(x).is_empty()) {
        return Err(CorpusError::Invalid(format!("record {} has an empty group key", rec.id)));
    }
    let mut groups: BTreeMap<&str, Vec<&UtteranceRecord>> = BTreeMap::new();
    for rec in records {
        groups.entry(key.of(rec)).or_default().push(rec);
    }
    if groups.len() < 3 {
        return Err(CorpusError::TooFewGroups(groups.len()));
    }
    let mut order: Vec<(&str, Vec<&UtteranceRecord>, f64)> = groups
        .into_iter()
        .map(|(k, v)| {
            let d = v.iter().map(|r| r.duration_s).sum();
            (k, v, d)
        })
        .collect();
    order.shuffle(&mut stream(seed, "splits", 0));
    order.sort_by(|a, b| b.2.total_cmp(&a.2));

    let total: f64 = order.iter().map(|g| g.2).sum();
    let mut filled = [0.0; 3];
    let mut out = Splits::default();
    for (_, members, dur) in order {
        let mut best = 0;
        let mut best_deficit = f64::NEG_INFINITY;
        for (i, split) in Split::ALL.iter().enumerate() {
            let deficit = r[split.index()] * total - filled[i];
            if deficit > best_deficit {
                best = i;
                best_deficit = deficit;
            }
        }
        filled[best] += dur;
        let split = Split::ALL[best];
        out.get_mut(split).extend(members.into_iter().map(|m| UtteranceRecord {
            split: Some(split),
            ..m.clone()
        }));
    }
    Ok(out)
}

/// Fails if any group appears in more than one split.
pub fn assert_disjoint(splits: &Splits, key: GroupKey) -> Result<(), CorpusError> {
    let mut seen: HashMap<&str, Split> = HashMap::new();
    for s in Split::ALL {
        for r in splits.get(s) {
            if let Some(&prev) = seen.get(key.of(r)) {
                if prev != s {
                    return Err(CorpusError::LeakedGroup {
                        group: key.of(r).to_string(),
                        a: prev,
                        b: s,
                    });
                }
            }
            seen.insert(key.of(r), s);
        }
    }
    Ok(())
}
