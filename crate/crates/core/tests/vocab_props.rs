use std::path::Path;

use corpusforge::corpus::{ingest, DocumentRecord, IngestOptions, Language, LanguageTag, SourceKind};
use corpusforge::vocab::{collect_word_freqs, fertility, smooth_and_merge, train_vocab, VocabTrainConfig};

fn read(name: &str, lang: Language, source: SourceKind, shard: u32) -> Vec<DocumentRecord> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini/corpus").join(name);
    let opts = IngestOptions {
        shard_index: shard,
        ..Default::default()
    };
    ingest(&path, LanguageTag::native(lang), source, opts)
        .unwrap()
        .collect::<Result<_, _>>()
        .unwrap()
}

fn mixed_docs() -> Vec<DocumentRecord> {
    let mut docs = read("hi.wikipedia.txt", Language::Hi, SourceKind::Wikipedia, 0);
    docs.extend(read("en.wikipedia.txt", Language::En, SourceKind::Wikipedia, 1));
    docs.extend(read("bn.wikipedia.txt", Language::Bn, SourceKind::Wikipedia, 2));
    docs
}

// Frozen from an independent Python count over the same file.
#[test]
fn hindi_word_frequencies_match_oracle() {
    let docs = read("hi.wikipedia.txt", Language::Hi, SourceKind::Wikipedia, 0);
    let freqs = collect_word_freqs(&docs, 100);
    let hi = &freqs.per_lang[&LanguageTag::native(Language::Hi)];
    assert_eq!(hi.len(), 201);
    assert_eq!(hi.values().sum::<u64>(), 434);
    let mut top: Vec<(&str, u64)> = hi.iter().map(|(w, &c)| (w.as_str(), c)).collect();
    top.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    assert_eq!(&top[..4], &[("।", 40), ("है", 27), ("में", 20), ("और", 14)]);
    assert_eq!((hi["के"], hi["की"], top[5].1), (13, 13, 13));
    assert_eq!(freqs.dropped_long, 0);
}

#[test]
fn larger_vocab_never_raises_training_fertility() {
    let docs = mixed_docs();
    let weights = smooth_and_merge(&collect_word_freqs(&docs, 100), 1.0).unwrap();
    let mut previous: Option<Vec<f64>> = None;
    for target in [300, 500, 900, 1700] {
        let cfg = VocabTrainConfig {
            target_size: target,
            min_word_frequency: 1,
            ..Default::default()
        };
        let vocab = train_vocab(&weights, &cfg).unwrap();
        let report = fertility(&docs, &vocab);
        let now: Vec<f64> = report.entries.values().map(|e| e.fertility()).collect();
        if let Some(prev) = &previous {
            for (p, n) in prev.iter().zip(&now) {
                assert!(n <= p, "target {target}: {n} > {p}");
            }
        }
        previous = Some(now);
    }
}

#[test]
fn training_words_round_trip() {
    let docs = mixed_docs();
    let weights = smooth_and_merge(&collect_word_freqs(&docs, 100), 0.7).unwrap();
    let cfg = VocabTrainConfig {
        target_size: 500,
        ..Default::default()
    };
    let vocab = train_vocab(&weights, &cfg).unwrap();
    assert_eq!(vocab.len(), 500);
    let unk = vocab.id("[UNK]").unwrap();
    for word in weights.keys() {
        let ids = vocab.tokenize(word);
        assert!(!ids.contains(&unk), "{word}");
        assert_eq!(&vocab.detokenize(&ids).unwrap(), word);
    }
}
