use std::io::Cursor;

use litmt_core::corpus::{
    parse_line_aligned, read_records, validate, write_records, Chapter, Corpus, CorpusError, Document, SentencePair,
};
use proptest::prelude::*;

fn text() -> impl Strategy<Value = String> {
    "[a-z\u{4e00}-\u{4e20} \"{}\\\\,.]{0,12}[a-z\u{4e00}-\u{4e20}]"
}

fn document(doc_id: String, parallel: bool) -> impl Strategy<Value = Document> {
    prop::collection::vec(prop::collection::vec((text(), text()), 1..5), 1..4).prop_map(move |chapters| {
        let mut seg = 0;
        let chapters = chapters
            .into_iter()
            .enumerate()
            .map(|(c, pairs)| Chapter {
                chapter_id: format!("ch{c}"),
                pairs: pairs
                    .into_iter()
                    .map(|(s, t)| {
                        seg += 1;
                        SentencePair {
                            doc_id: doc_id.clone(),
                            chapter_id: format!("ch{c}"),
                            seg_index: seg - 1,
                            source: s,
                            target: parallel.then_some(t),
                        }
                    })
                    .collect(),
            })
            .collect();
        Document {
            doc_id: doc_id.clone(),
            chapters,
        }
    })
}

fn corpus() -> impl Strategy<Value = Corpus> {
    (1usize..5, any::<bool>()).prop_flat_map(|(n, parallel)| {
        (0..n)
            .map(|i| document(format!("doc{i}"), parallel))
            .collect::<Vec<_>>()
            .prop_map(Corpus::new)
    })
}

fn serialize(c: &Corpus) -> Vec<String> {
    let mut buf = Vec::new();
    write_records(c, &mut buf).unwrap();
    String::from_utf8(buf).unwrap().lines().map(str::to_string).collect()
}

proptest! {
    #[test]
    fn records_round_trip(c in corpus()) {
        prop_assert!(validate(&c).is_valid());
        let text = serialize(&c).join("\n");
        let back = read_records(Cursor::new(text)).unwrap();
        prop_assert_eq!(back, c);
    }

    // Records carry explicit seg_index, so file order must not matter.
    #[test]
    fn record_order_is_irrelevant(c in corpus(), seed in any::<u64>()) {
        let mut lines = serialize(&c);
        let n = lines.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            lines.swap(i, (s >> 33) as usize % (i + 1));
        }
        let back = read_records(Cursor::new(lines.join("\n"))).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn line_aligned_round_trip(docs in prop::collection::vec(prop::collection::vec(("[a-z]{1,6}", "[a-z]{1,6}"), 1..6), 0..5)) {
        let mut src = String::new();
        let mut tgt = String::new();
        for (i, d) in docs.iter().enumerate() {
            if i > 0 {
                src.push_str("<doc>\n");
                tgt.push_str("<doc>\n");
            }
            for (s, t) in d {
                src.push_str(&format!("{s}\n"));
                tgt.push_str(&format!("{t}\n"));
            }
        }
        let c = parse_line_aligned(&src, &tgt, "<doc>").unwrap();
        prop_assert_eq!(c.documents.len(), docs.len());
        for (doc, expected) in c.documents.iter().zip(&docs) {
            let got: Vec<(String, String)> = doc.pairs().map(|p| (p.source.clone(), p.target.clone().unwrap())).collect();
            prop_assert_eq!(&got, expected);
        }
    }
}

#[test]
fn rejects_duplicate_and_gapped_segments() {
    let dup = "{\"doc_id\":\"a\",\"seg_index\":0,\"source\":\"x\"}\n{\"doc_id\":\"a\",\"seg_index\":0,\"source\":\"y\"}\n";
    assert!(matches!(
        read_records(Cursor::new(dup)),
        Err(CorpusError::DuplicateSegment { line: 2, .. })
    ));
    let gap = "{\"doc_id\":\"a\",\"seg_index\":0,\"source\":\"x\"}\n{\"doc_id\":\"a\",\"seg_index\":2,\"source\":\"y\"}\n";
    assert!(matches!(
        read_records(Cursor::new(gap)),
        Err(CorpusError::NonContiguous { expected: 1, found: 2, .. })
    ));
}

#[test]
fn mismatched_line_counts() {
    assert!(matches!(
        parse_line_aligned("a\nb\n", "a\n", "<doc>"),
        Err(CorpusError::LineCountMismatch { source_lines: 2, target_lines: 1 })
    ));
}
