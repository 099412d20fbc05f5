mod common;

use debunk_core::data::Claim;
use debunk_core::retrieval::{TermOptions, TfIdfIndex};
use debunk_core::{build_index, top_candidates};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn check_against_oracle(n: usize, seed: u64) {
    let sentences = common::random_sentences(n, seed);
    let index = build_index(sentences.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    for q in 0..40 {
        let query = common::random_sentence(&mut rng);
        let claim = Claim::new(format!("q{q}"), query.clone());
        let got = top_candidates(&index, &claim, 10);
        let want = common::oracle::brute_force_top_k(&sentences, &query, 10);
        assert_eq!(got.len(), want.len(), "query {query:?}");
        for (g, w) in got.iter().zip(&want) {
            assert_eq!((g.sentence.doc_id.as_str(), g.sentence.sent_index), (w.0.as_str(), w.1), "query {query:?}");
            assert!((g.score - w.2).abs() <= 1e-9, "{} vs {}", g.score, w.2);
        }
    }
}

#[test]
fn matches_brute_force_on_50_sentences() {
    check_against_oracle(50, 1);
}

#[test]
fn matches_brute_force_on_1000_sentences() {
    check_against_oracle(1000, 2);
}

#[test]
fn saved_index_answers_identically() {
    let sentences = common::random_sentences(200, 3);
    let index = build_index(sentences).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("index.json");
    index.save(&path).unwrap();
    let loaded = TfIdfIndex::load(&path).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let q = common::random_sentence(&mut rng);
        assert_eq!(index.query(&q, 10), loaded.query(&q, 10));
    }
}

#[test]
fn stemming_merges_inflections() {
    let units = common::random_sentences(0, 0)
        .into_iter()
        .chain([debunk_core::SentenceUnit {
            doc_id: "d".into(),
            sent_index: 0,
            text: "Masks reduced infections".into(),
            speaker: None,
        }])
        .collect::<Vec<_>>();
    let plain = TfIdfIndex::build(units.clone(), TermOptions::default()).unwrap();
    let stemmed = TfIdfIndex::build(
        units,
        TermOptions {
            stem: true,
            remove_stop_words: true,
        },
    )
    .unwrap();
    assert!(plain.query("mask reduces infection", 10).is_empty());
    assert_eq!(stemmed.query("mask reduces infection", 10).len(), 1);
}

#[test]
fn claim_without_shared_terms_gets_nothing() {
    let index = build_index(common::random_sentences(50, 4)).unwrap();
    assert!(index.query("zzz qqq", 10).is_empty());
    assert!(index.query("", 10).is_empty());
}
