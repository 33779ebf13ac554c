//! Speaker-disjoint train/dev/test splits, by speaker and by source tag.
//!
//! cargo run --release --example splits

use classroom_sim::corpus::{assert_disjoint, make_splits, GroupKey, Split, SplitRatios};
use classroom_sim::fixtures::plan_fixture_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let recs: Vec<_> = plan_fixture_corpus(300, 200, 5, 16000).into_iter().map(|p| p.record).collect();
    let splits = make_splits(&recs, SplitRatios::default(), GroupKey::SpeakerId, 5)?;
    assert_disjoint(&splits, GroupKey::SpeakerId)?;
    let shares = splits.duration_shares();
    for s in Split::ALL {
        let spk: std::collections::BTreeSet<_> = splits.get(s).iter().map(|r| &r.speaker_id).collect();
        println!(
            "{s:<5} {:>4} utterances {:>4} speakers {:>5.1}% of audio",
            splits.get(s).len(),
            spk.len(),
            100.0 * shares[s.index()]
        );
    }

    // Two source tags cannot fill three splits.
    match make_splits(&recs, SplitRatios::default(), GroupKey::SourceTag, 5) {
        Err(e) => println!("by source tag: {e}"),
        Ok(_) => println!("by source tag: ok"),
    }
    Ok(())
}
