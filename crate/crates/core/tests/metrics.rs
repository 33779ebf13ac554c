use std::collections::{BTreeSet, HashMap};

use classroom_sim::audio::AudioBuffer;
use classroom_sim::metrics::{
    align_words, corpus_wer, normalize_tokens, si_sdr, AlignmentReport, EditOp, NormalizeOptions,
    WerItem,
};
use proptest::prelude::*;

/// Levenshtein distance by memoized recursion over suffixes.
fn lev(a: &[String], b: &[String]) -> usize {
    fn go(a: &[String], b: &[String], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j + 1, memo)
                .min(go(a, b, i + 1, j, memo))
                .min(go(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Every alignment as (S, D, I), enumerated exhaustively.
fn all_alignments(a: &[String], b: &[String]) -> BTreeSet<(usize, usize, usize)> {
    if a.is_empty() {
        return [(0, 0, b.len())].into();
    }
    if b.is_empty() {
        return [(0, a.len(), 0)].into();
    }
    let mut out = BTreeSet::new();
    let sub = usize::from(a[0] != b[0]);
    for (s, d, i) in all_alignments(&a[1..], &b[1..]) {
        out.insert((s + sub, d, i));
    }
    for (s, d, i) in all_alignments(&a[1..], b) {
        out.insert((s, d + 1, i));
    }
    for (s, d, i) in all_alignments(a, &b[1..]) {
        out.insert((s, d, i + 1));
    }
    out
}

fn tokens(max: usize, alphabet: u8) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(0..alphabet, 0..=max)
        .prop_map(|v| v.into_iter().map(|c| ((b'a' + c) as char).to_string()).collect())
}

fn check_identities(r: &AlignmentReport) {
    assert_eq!(r.n_ref, r.matches + r.substitutions + r.deletions);
    assert_eq!(r.n_hyp, r.matches + r.substitutions + r.insertions);
    assert_eq!(r.pairs.len(), r.matches + r.substitutions + r.deletions + r.insertions);
    for p in &r.pairs {
        match p.op {
            EditOp::Match => assert!(p.reference.is_some() && p.reference == p.hypothesis),
            EditOp::Sub => assert!(p.reference.is_some() && p.hypothesis.is_some() && p.reference != p.hypothesis),
            EditOp::Del => assert!(p.reference.is_some() && p.hypothesis.is_none()),
            EditOp::Ins => assert!(p.reference.is_none() && p.hypothesis.is_some()),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn errors_equal_edit_distance(a in tokens(8, 4), b in tokens(8, 4)) {
        let r = align_words(&a, &b);
        check_identities(&r);
        prop_assert_eq!(r.errors(), lev(&a, &b));
        // The aligned pairs reproduce both token sequences.
        let re: Vec<String> = r.pairs.iter().filter_map(|p| p.reference.clone()).collect();
        let hy: Vec<String> = r.pairs.iter().filter_map(|p| p.hypothesis.clone()).collect();
        prop_assert_eq!(re, a);
        prop_assert_eq!(hy, b);
    }

    #[test]
    fn swap_exchanges_insertions_and_deletions(a in tokens(8, 3), b in tokens(8, 3)) {
        let x = align_words(&a, &b);
        let y = align_words(&b, &a);
        prop_assert_eq!(x.substitutions, y.substitutions);
        prop_assert_eq!(x.insertions, y.deletions);
        prop_assert_eq!(x.deletions, y.insertions);
    }

    #[test]
    fn decomposition_is_an_optimal_alignment(a in tokens(5, 3), b in tokens(5, 3)) {
        let r = align_words(&a, &b);
        let all = all_alignments(&a, &b);
        let best = all.iter().map(|(s, d, i)| s + d + i).min().unwrap();
        prop_assert!(all.contains(&(r.substitutions, r.deletions, r.insertions)));
        prop_assert_eq!(r.errors(), best);
    }

    #[test]
    fn si_sdr_scale_invariance(
        x in prop::collection::vec(-1.0f64..1.0, 8..64),
        noise in prop::collection::vec(-0.3f64..0.3, 64),
        k in -8i32..8,
        neg in any::<bool>(),
        alpha in 0.01f64..100.0,
    ) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
        let est: Vec<f64> = x.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let r = AudioBuffer::new(x.clone(), 16000).unwrap();
        let e = AudioBuffer::new(est.clone(), 16000).unwrap();
        let base = si_sdr(&e, &r, false).unwrap();
        // Power-of-two gains scale every intermediate exactly.
        let g = if neg { -(2f64.powi(k)) } else { 2f64.powi(k) };
        let scaled = AudioBuffer::new(est.iter().map(|v| v * g).collect(), 16000).unwrap();
        prop_assert_eq!(si_sdr(&scaled, &r, false).unwrap(), base);
        let scaled = AudioBuffer::new(est.iter().map(|v| v * alpha).collect(), 16000).unwrap();
        let v = si_sdr(&scaled, &r, false).unwrap();
        prop_assert!((v - base).abs() < 1e-9, "{} vs {}", v, base);
    }

    #[test]
    fn si_sdr_permutation_invariance(
        pairs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4..64),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        prop_assume!(pairs.iter().any(|p| p.0.abs() > 1e-3));
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let eval = |v: &[(f64, f64)]| {
            let r = AudioBuffer::new(v.iter().map(|p| p.0).collect(), 16000).unwrap();
            let e = AudioBuffer::new(v.iter().map(|p| p.0 + 0.5 * p.1).collect(), 16000).unwrap();
            si_sdr(&e, &r, false).unwrap()
        };
        let (a, b) = (eval(&pairs), eval(&shuffled));
        prop_assert!((a - b).abs() < 1e-9 || a == b, "{} vs {}", a, b);
    }
}

#[test]
fn wer_of_reference_and_empty() {
    let r = normalize_tokens("one two three four");
    assert_eq!(align_words(&r, &r).wer(), Some(0.0));
    assert_eq!(align_words(&r, &[] as &[String]).wer(), Some(1.0));
}

#[test]
fn five_file_set_matches_oracle() {
    let set = [
        ("f1", "the cat sat on the mat", "the cat sat on a mat", Some(-5.0)),
        ("f2", "what is seven plus three", "what is seven three", Some(-5.0)),
        ("f3", "look at the board", "look at at the board please", Some(0.0)),
        ("f4", "open your book to page twelve", "open your book to page twelve", Some(0.0)),
        ("f5", "don't forget your homework", "forget the homework now", None),
    ];
    let items: Vec<WerItem> = set
        .iter()
        .map(|(id, r, h, snr)| WerItem {
            id: id.to_string(),
            reference: r.to_string(),
            hypothesis: h.to_string(),
            snr_db: *snr,
        })
        .collect();
    let rep = corpus_wer(&items, &NormalizeOptions::default()).unwrap();
    let mut errors = 0;
    let mut n_ref = 0;
    for ((_, r, h, _), f) in set.iter().zip(&rep.per_file) {
        let (r, h) = (normalize_tokens(r), normalize_tokens(h));
        let d = lev(&r, &h);
        assert_eq!(f.substitutions + f.deletions + f.insertions, d, "{}", f.id);
        errors += d;
        n_ref += r.len();
    }
    assert_eq!(rep.n_ref, n_ref);
    assert_eq!(rep.substitutions + rep.deletions + rep.insertions, errors);
    assert_eq!(rep.aggregate_wer, errors as f64 / n_ref as f64);
    // -5, 0 and the unlabeled bucket.
    assert_eq!(rep.by_snr.len(), 3);
    let labels: Vec<Option<f64>> = rep.by_snr.iter().map(|r| r.snr_db).collect();
    assert_eq!(labels, vec![None, Some(-5.0), Some(0.0)]);
    let pooled: usize = rep.by_snr.iter().map(|r| r.substitutions + r.deletions + r.insertions).sum();
    assert_eq!(pooled, errors);
}

#[test]
fn report_json_shape() {
    let items = vec![WerItem {
        id: "x".into(),
        reference: "a b".into(),
        hypothesis: "a c".into(),
        snr_db: Some(5.0),
    }];
    let rep = corpus_wer(&items, &NormalizeOptions::default()).unwrap();
    let v = serde_json::to_value(&rep).unwrap();
    for k in ["aggregate_wer", "substitutions", "insertions", "deletions", "n_ref", "per_file"] {
        assert!(v.get(k).is_some(), "{k}");
    }
}
