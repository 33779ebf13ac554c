//! Word alignment, per-file and per-SNR word error rates.
//!
//! cargo run --release --example wer

use classroom_sim::metrics::{align_words, corpus_wer, normalize_tokens, EditOp, NormalizeOptions, WerItem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = normalize_tokens("Look at the board, please!");
    let h = normalize_tokens("look at uh board please now");
    let a = align_words(&r, &h);
    for p in &a.pairs {
        let op = match p.op {
            EditOp::Match => " ",
            EditOp::Sub => "S",
            EditOp::Del => "D",
            EditOp::Ins => "I",
        };
        println!("{op} {:<8} {}", p.reference.as_deref().unwrap_or("*"), p.hypothesis.as_deref().unwrap_or("*"));
    }
    println!("S={} D={} I={} WER={:.3}", a.substitutions, a.deletions, a.insertions, a.wer().unwrap_or(0.0));

    let items = vec![
        WerItem { id: "a".into(), reference: "what is seven plus three".into(), hypothesis: "what is seven three".into(), snr_db: Some(0.0) },
        WerItem { id: "b".into(), reference: "open your book".into(), hypothesis: "um open your books".into(), snr_db: Some(0.0) },
        WerItem { id: "c".into(), reference: "good job".into(), hypothesis: "good job".into(), snr_db: Some(10.0) },
    ];
    let opts = NormalizeOptions {
        fillers: vec!["um".into(), "uh".into()],
        split_hyphens: false,
    };
    let rep = corpus_wer(&items, &opts)?;
    println!("aggregate WER {:.3} over {} words", rep.aggregate_wer, rep.n_ref);
    for row in &rep.by_snr {
        println!("  {} dB: {} files, WER {:.3}", row.snr_db.map_or("-".into(), |s| s.to_string()), row.files, row.wer.unwrap_or(f64::NAN));
    }
    Ok(())
}
