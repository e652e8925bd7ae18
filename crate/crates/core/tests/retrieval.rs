use litmt_core::retrieval::{cosine, similarity, top_k, ExemplarIndex, PoolEntry};
use proptest::prelude::*;

const VOCAB: &[&str] = &["雨", "夜", "灯", "风", "lantern", "sea", "night", "old", "man", "the", "a", "river"];

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(VOCAB), 1..8).prop_map(|w| w.join(" "))
}

fn pool(max: usize) -> impl Strategy<Value = Vec<PoolEntry>> {
    prop::collection::vec((0usize..3, sentence()), 0..=max).prop_map(|items| {
        let mut next = [0usize; 3];
        items
            .into_iter()
            .map(|(d, source)| {
                next[d] += 1;
                PoolEntry {
                    doc_id: format!("doc{d}"),
                    seg_index: next[d] - 1,
                    target: format!("T[{source}]"),
                    source,
                }
            })
            .collect()
    })
}

/// Score everything, sort by the documented ranking, keep the first k.
fn exhaustive(
    query: &str,
    index: &ExemplarIndex,
    k: usize,
    alpha: f64,
    exclude: impl Fn(&str, usize) -> bool,
) -> Vec<(usize, f64)> {
    let mut scored: Vec<(&litmt_core::retrieval::Exemplar, f64)> = index
        .exemplars()
        .iter()
        .filter(|e| !exclude(&e.doc_id, e.seg_index))
        .map(|e| (e, similarity(query, e, index, alpha).combined))
        .filter(|(_, s)| *s > 0.0)
        .collect();
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| a.0.doc_id.cmp(&b.0.doc_id))
            .then_with(|| a.0.seg_index.cmp(&b.0.seg_index))
            .then_with(|| a.0.exemplar_id.cmp(&b.0.exemplar_id))
    });
    scored.into_iter().take(k).map(|(e, s)| (e.exemplar_id, s)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn top_k_matches_exhaustive_search(
        entries in pool(100),
        query in sentence(),
        k in 0usize..6,
        alpha in prop::sample::select(vec![0.0, 0.25, 0.5, 1.0]),
        cut in 0usize..4,
    ) {
        let index = ExemplarIndex::build(entries, 5);
        let exclude = |d: &str, s: usize| d == "doc0" && s >= cut;
        let got: Vec<(usize, f64)> = top_k(&query, &index, k, alpha, exclude)
            .into_iter()
            .map(|s| (s.exemplar.exemplar_id, s.score.combined))
            .collect();
        prop_assert_eq!(got, exhaustive(&query, &index, k, alpha, exclude));
    }
}

proptest! {
    #[test]
    fn self_similarity_is_one(entries in pool(40)) {
        let index = ExemplarIndex::build(entries, 5);
        for ex in index.exemplars() {
            let s = similarity(&ex.source, ex, &index, 0.5);
            prop_assert_eq!(s.lexical, 1.0);
            prop_assert_eq!(s.keyword, 1.0);
            prop_assert_eq!(s.combined, 1.0);
        }
    }

    #[test]
    fn disjoint_vocabulary_scores_zero(entries in pool(40), n in 1usize..6) {
        let index = ExemplarIndex::build(entries, 5);
        let query: Vec<String> = (0..n).map(|i| format!("unseen{i}")).collect();
        let query = query.join(" ");
        for ex in index.exemplars() {
            let s = similarity(&query, ex, &index, 0.5);
            prop_assert_eq!(s.combined, 0.0);
        }
        prop_assert!(top_k(&query, &index, 3, 0.5, |_, _| false).is_empty());
    }

    #[test]
    fn cosine_is_symmetric(entries in pool(20), a in sentence(), b in sentence()) {
        let index = ExemplarIndex::build(entries, 5);
        let (va, vb) = (index.term_weights(&a), index.term_weights(&b));
        prop_assert_eq!(cosine(&va, &vb), cosine(&vb, &va));
    }

    #[test]
    fn excluded_entries_never_returned(entries in pool(60), query in sentence(), cut in 0usize..10) {
        let index = ExemplarIndex::build(entries, 5);
        for hit in top_k(&query, &index, 10, 0.5, |d, s| d == "doc1" && s >= cut) {
            prop_assert!(!(hit.exemplar.doc_id == "doc1" && hit.exemplar.seg_index >= cut));
        }
    }

    #[test]
    fn incremental_push_equals_build(entries in pool(30)) {
        let mut grown = ExemplarIndex::new(5);
        for e in entries.clone() {
            grown.push(e);
        }
        prop_assert_eq!(grown, ExemplarIndex::build(entries, 5));
    }
}
