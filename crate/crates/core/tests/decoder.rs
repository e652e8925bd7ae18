use litmt_core::backend::mock::Reply;
use litmt_core::backend::{
    BackendError, Capabilities, ErrorKind, IdentityBackend, RecordingBackend, ScriptedBackend, TranslationBackend,
};
use litmt_core::corpus::{Corpus, Document};
use litmt_core::decoder::{
    run_corpus, translate_document, DecodeError, DecodingConfig, FallbackPolicy, PromptSpec, RetryPolicy,
};
use proptest::prelude::*;

/// Pure mock: a recognisable function of the source.
struct Marker {
    caps: Capabilities,
}

impl Marker {
    fn new() -> Self {
        Marker {
            caps: Capabilities::named("marker"),
        }
    }
}

impl TranslationBackend for Marker {
    fn capabilities(&self) -> &Capabilities {
        &self.caps
    }

    fn translate(&self, prompt: &PromptSpec) -> Result<String, BackendError> {
        Ok(format!("HYP<{}>", prompt.current_source))
    }
}

fn no_wait(n: usize, k: usize) -> DecodingConfig {
    DecodingConfig {
        history_size: n,
        exemplar_count: k,
        retry: RetryPolicy {
            max_retries: 2,
            initial_delay_ms: 0,
            backoff_factor: 1.0,
        },
        ..DecodingConfig::default()
    }
}

const WORDS: &[&str] = &["rain", "night", "lamp", "wind", "sea", "old", "road"];

/// Each sentence carries a unique tag so its text can be spotted in any prompt.
fn document(doc_id: &'static str, max_len: usize) -> impl Strategy<Value = Document> {
    prop::collection::vec(prop::collection::vec(prop::sample::select(WORDS), 1..5), 1..=max_len).prop_map(
        move |sents| {
            Document::from_pairs(
                doc_id,
                sents.into_iter().enumerate().map(|(i, w)| {
                    (format!("{} tag{i:03}x", w.join(" ")), Some(format!("REF{i:03}")))
                }),
            )
        },
    )
}

fn tag(i: usize) -> String {
    format!("tag{i:03}x")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn window_and_no_future_leakage(
        doc in document("d", 50),
        n in prop::sample::select(vec![0usize, 1, 3, 8]),
        k in 0usize..3,
    ) {
        let backend = RecordingBackend::new(Marker::new());
        let out = translate_document(&doc, &backend, None, &no_wait(n, k)).unwrap();
        let prompts = backend.prompts();
        prop_assert_eq!(prompts.len(), doc.len());
        for p in &prompts {
            let i = p.seg_index;
            prop_assert_eq!(p.context_block.len(), n.min(i));
            for (j, c) in p.context_block.iter().enumerate() {
                prop_assert_eq!(c.seg_index, i - p.context_block.len() + j);
                prop_assert_eq!(&c.translation, &out.segments[c.seg_index].hypothesis);
            }
            prop_assert!(p.exemplar_block.len() <= k);
            for e in &p.exemplar_block {
                prop_assert!(e.seg_index < i);
                // self-history: exemplar targets are earlier outputs, never references
                prop_assert_eq!(&e.target, &out.segments[e.seg_index].hypothesis);
            }
            for later in i + 1..doc.len() {
                prop_assert!(!p.rendered.contains(&tag(later)));
            }
            let own = format!("HYP<{}", doc.pairs().nth(i).unwrap().source);
            prop_assert!(!p.rendered.contains(&own));
            prop_assert!(!p.rendered.contains("REF"));
        }
    }

    #[test]
    fn zero_window_reduces_to_sentence_prompts(doc in document("d", 30)) {
        let config = no_wait(0, 0);
        let backend = RecordingBackend::new(Marker::new());
        translate_document(&doc, &backend, None, &config).unwrap();
        for (p, pair) in backend.prompts().iter().zip(doc.pairs()) {
            let plain = config.template.render_plain("d", pair.seg_index, &pair.source).unwrap();
            prop_assert_eq!(p, &plain);
            prop_assert_eq!(p.rendered.as_bytes(), plain.rendered.as_bytes());
        }
    }

    #[test]
    fn runs_are_deterministic_across_parallelism(
        a in document("a", 12),
        b in document("b", 12),
        c in document("c", 12),
        par in 2usize..6,
    ) {
        let corpus = Corpus::new(vec![a, b, c]);
        let config = no_wait(3, 2);
        let one = run_corpus(&corpus, &Marker::new(), None, &config, 1).unwrap();
        let many = run_corpus(&corpus, &Marker::new(), None, &config, par).unwrap();
        let again = run_corpus(&corpus, &Marker::new(), None, &config, par).unwrap();
        prop_assert_eq!(&one.translations, &many.translations);
        prop_assert_eq!(&many.translations, &again.translations);
        prop_assert_eq!(one.manifest.counts, many.manifest.counts);
    }
}

#[test]
fn transient_failure_is_retried() {
    let doc = Document::from_pairs("d", [("s0", None::<String>), ("s1", None)]);
    let backend = ScriptedBackend::for_document(
        "d",
        [
            vec![Reply::Error { error: ErrorKind::Network }, Reply::Text("t0".into())],
            vec![Reply::Text("t1".into())],
        ],
    );
    let out = translate_document(&doc, &backend, None, &no_wait(3, 2)).unwrap();
    assert_eq!(out.hypotheses().collect::<Vec<_>>(), ["t0", "t1"]);
    assert_eq!(out.trace[0].attempts.len(), 2);
    assert!(!out.segments[0].failed);
}

#[test]
fn exhausted_retries_fall_back_to_source() {
    let doc = Document::from_pairs("d", [("s0", None::<String>), ("s1", None)]);
    let backend = ScriptedBackend::for_document(
        "d",
        [vec![Reply::Error { error: ErrorKind::RateLimit }], vec![Reply::Text("t1".into())]],
    );
    let out = translate_document(&doc, &backend, None, &no_wait(3, 2)).unwrap();
    assert_eq!(out.segments[0].hypothesis, "s0");
    assert!(out.segments[0].failed);
    // first attempt plus max_retries
    assert_eq!(out.trace[0].attempts.len(), 3);

    let abort = DecodingConfig {
        fallback: FallbackPolicy::Abort,
        ..no_wait(3, 2)
    };
    let backend = ScriptedBackend::for_document("d", [vec![Reply::Error { error: ErrorKind::Network }]]);
    assert!(matches!(
        translate_document(&doc, &backend, None, &abort),
        Err(DecodeError::Aborted { seg_index: 0, .. })
    ));
}

#[test]
fn permanent_errors_are_not_retried() {
    let doc = Document::from_pairs("d", [("s0", None::<String>)]);
    let backend = ScriptedBackend::for_document("d", [vec![Reply::Error { error: ErrorKind::Protocol }]]);
    let out = translate_document(&doc, &backend, None, &no_wait(3, 2)).unwrap();
    assert_eq!(out.trace[0].attempts.len(), 1);
    assert!(out.segments[0].failed);
}

#[test]
fn identity_backend_echoes_sources() {
    let doc = Document::from_pairs("d", [("一", None::<String>), ("二", None), ("三", None)]);
    let out = translate_document(&doc, &IdentityBackend::default(), None, &no_wait(3, 2)).unwrap();
    assert_eq!(out.hypotheses().collect::<Vec<_>>(), ["一", "二", "三"]);
}
