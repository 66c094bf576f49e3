use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::shard::{ShardError, ShardReader};
use super::{CorpusError, DocId, DocumentRecord, Language, LanguageTag, PairKind, ParallelPair, SourceKind};

/// What to do with a line that is not valid UTF-8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InvalidLinePolicy {
    Skip,
    #[default]
    Abort,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// High bits of every `DocId` produced from this file.
    pub shard_index: u32,
    pub on_invalid: InvalidLinePolicy,
}

/// Splits `hi-tr.wikipedia.txt` into its language tag and source kind.
pub fn parse_corpus_file_name(name: &str) -> Result<(LanguageTag, SourceKind), CorpusError> {
    let bad = || CorpusError::BadFileName(name.to_string());
    let stem = name
        .strip_suffix(".txt")
        .or_else(|| name.strip_suffix(".shard"))
        .ok_or_else(bad)?;
    let (lang, source) = stem.split_once('.').ok_or_else(bad)?;
    Ok((lang.parse()?, source.parse()?))
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn is_shard(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "shard")
}

fn provenance_of(path: &Path) -> Arc<str> {
    Arc::from(
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
    )
}

/// Opens a monolingual corpus file. Files ending in `.shard` are read as
/// length-prefixed records, anything else as one document per line.
pub fn ingest(
    path: &Path,
    lang: LanguageTag,
    source: SourceKind,
    opts: IngestOptions,
) -> Result<DocReader, CorpusError> {
    if source.is_parallel() {
        return Err(CorpusError::ParallelKindOutsidePair(source));
    }
    let reader = open(path)?;
    let inner = if is_shard(path) {
        Inner::Shard(ShardReader::new(reader))
    } else {
        Inner::Plain(reader)
    };
    Ok(DocReader {
        inner,
        path: path.to_path_buf(),
        provenance: provenance_of(path),
        lang,
        source,
        opts,
        index: 0,
        skipped: 0,
        done: false,
    })
}

enum Inner {
    Plain(BufReader<File>),
    Shard(ShardReader<BufReader<File>>),
}

/// Stream of normalized documents from one file, in file order.
pub struct DocReader {
    inner: Inner,
    path: PathBuf,
    provenance: Arc<str>,
    lang: LanguageTag,
    source: SourceKind,
    opts: IngestOptions,
    index: u64,
    skipped: u64,
    done: bool,
}

impl DocReader {
    /// Lines dropped under [`InvalidLinePolicy::Skip`].
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    fn fail(&mut self, e: CorpusError) -> Option<Result<DocumentRecord, CorpusError>> {
        self.done = true;
        Some(Err(e))
    }

    fn next_plain(&mut self) -> Option<Result<DocumentRecord, CorpusError>> {
        let Inner::Plain(reader) = &mut self.inner else {
            unreachable!()
        };
        let mut buf = Vec::new();
        loop {
            buf.clear();
            match reader.read_until(b'\n', &mut buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(source) => {
                    let path = self.path.clone();
                    return self.fail(CorpusError::Io { path, source });
                }
            }
            let line_no = self.index;
            self.index += 1;
            strip_newline(&mut buf);
            let text = match std::str::from_utf8(&buf) {
                Ok(t) => t,
                Err(_) => match self.opts.on_invalid {
                    InvalidLinePolicy::Skip => {
                        self.skipped += 1;
                        continue;
                    }
                    InvalidLinePolicy::Abort => {
                        let path = self.path.clone();
                        return self.fail(CorpusError::InvalidUtf8 {
                            path,
                            line: line_no + 1,
                        });
                    }
                },
            };
            let id = DocId::new(self.opts.shard_index, line_no);
            if let Some(doc) =
                DocumentRecord::new(id, self.lang, self.source, self.provenance.clone(), text)
            {
                return Some(Ok(doc));
            }
        }
    }

    fn next_shard(&mut self) -> Option<Result<DocumentRecord, CorpusError>> {
        loop {
            let Inner::Shard(reader) = &mut self.inner else {
                unreachable!()
            };
            let rec = match reader.next()? {
                Ok(r) => r,
                Err(ShardError::Io(source)) => {
                    let path = self.path.clone();
                    return self.fail(CorpusError::Io { path, source });
                }
                Err(ShardError::Malformed { offset, reason }) => {
                    let path = self.path.clone();
                    return self.fail(CorpusError::MalformedShard {
                        path,
                        offset,
                        reason,
                    });
                }
            };
            let index = self.index;
            self.index += 1;
            if rec.lang != self.lang || rec.source != self.source {
                let e = CorpusError::TagMismatch {
                    path: self.path.clone(),
                    index,
                    expected: format!("{}/{}", self.lang, self.source),
                    found: format!("{}/{}", rec.lang, rec.source),
                };
                return self.fail(e);
            }
            let id = DocId::new(self.opts.shard_index, index);
            if let Some(doc) =
                DocumentRecord::new(id, self.lang, self.source, self.provenance.clone(), &rec.text)
            {
                return Some(Ok(doc));
            }
        }
    }
}

impl Iterator for DocReader {
    type Item = Result<DocumentRecord, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.inner {
            Inner::Plain(_) => self.next_plain(),
            Inner::Shard(_) => self.next_shard(),
        }
    }
}

fn strip_newline(buf: &mut Vec<u8>) {
    if buf.last() == Some(&b'\n') {
        buf.pop();
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
    }
}

/// Parallel pairs read from a `source<TAB>target` file.
#[derive(Debug, Default)]
pub struct PairIngest {
    pub pairs: Vec<ParallelPair>,
    /// Lines with a side that is empty after normalization.
    pub skipped_empty: u64,
    /// Lines dropped under [`InvalidLinePolicy::Skip`].
    pub skipped_invalid: u64,
}

/// Reads a parallel corpus. `lang` is the source side; the target side is
/// English for translation files and the `-tr` variant of `lang` for
/// transliteration files.
pub fn ingest_pairs(
    path: &Path,
    lang: Language,
    source: SourceKind,
    opts: IngestOptions,
) -> Result<PairIngest, CorpusError> {
    let kind = match source {
        SourceKind::ParallelTranslation => PairKind::Translated,
        SourceKind::ParallelTransliteration => PairKind::Transliterated,
        other => return Err(CorpusError::UnknownSource(format!("{other} is not a parallel kind"))),
    };
    let src_tag = LanguageTag::native(lang);
    let tgt_tag = match kind {
        PairKind::Translated => LanguageTag::native(Language::En),
        PairKind::Transliterated => LanguageTag::transliterated(lang)?,
    };
    let provenance = provenance_of(path);
    let mut reader = open(path)?;
    let mut out = PairIngest::default();
    let mut buf = Vec::new();
    let mut line_no = 0u64;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if n == 0 {
            break;
        }
        line_no += 1;
        strip_newline(&mut buf);
        let parsed = std::str::from_utf8(&buf)
            .map_err(|_| CorpusError::InvalidUtf8 {
                path: path.to_path_buf(),
                line: line_no,
            })
            .and_then(|line| {
                if line.trim().is_empty() {
                    return Ok(None);
                }
                let (s, t) = line.split_once('\t').ok_or(CorpusError::MalformedPairLine {
                    path: path.to_path_buf(),
                    line: line_no,
                })?;
                let id = DocId::new(opts.shard_index, line_no - 1);
                let src = DocumentRecord::new(id, src_tag, source, provenance.clone(), s);
                let tgt = DocumentRecord::new(id, tgt_tag, source, provenance.clone(), t);
                match (src, tgt) {
                    (Some(src), Some(tgt)) => ParallelPair::new(src, tgt, kind).map(Some),
                    _ => Ok(None),
                }
            });
        match parsed {
            Ok(Some(pair)) => out.pairs.push(pair),
            Ok(None) => out.skipped_empty += 1,
            Err(_) if opts.on_invalid == InvalidLinePolicy::Skip => out.skipped_invalid += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, bytes: &[u8]) -> PathBuf {
        let path = dir.path().join(name);
        File::create(&path).unwrap().write_all(bytes).unwrap();
        path
    }

    fn read_all(path: &Path, opts: IngestOptions) -> Result<Vec<DocumentRecord>, CorpusError> {
        ingest(path, "hi".parse().unwrap(), SourceKind::Wikipedia, opts)?.collect()
    }

    #[test]
    fn three_lines_three_records() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "hi.wikipedia.txt", "एक\nदो\r\nतीन".as_bytes());
        let docs = read_all(&p, IngestOptions::default()).unwrap();
        let ids: Vec<u64> = docs.iter().map(|d| d.id.0).collect();
        assert_eq!(ids, [0, 1, 2]);
        assert_eq!(docs[1].text(), "दो");
        assert_eq!(&*docs[0].provenance, "hi.wikipedia.txt");
    }

    #[test]
    fn whitespace_line_and_empty_file_yield_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "a.txt", b"  \t \n");
        assert!(read_all(&p, IngestOptions::default()).unwrap().is_empty());
        let p = write_file(&dir, "b.txt", b"");
        assert!(read_all(&p, IngestOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn nfc_composes_nukta_sequence() {
        // U+0928 U+093C composes to U+0929; bytes frozen from a reference
        // normalizer.
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "n.txt", "\u{0928}\u{093C}".as_bytes());
        let docs = read_all(&p, IngestOptions::default()).unwrap();
        assert_eq!(docs[0].text().as_bytes(), b"\xe0\xa4\xa9");
    }

    #[test]
    fn invalid_utf8_skip_or_abort() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "bad.txt", b"ok\n\xff\xfe\nfine\n");
        let err = read_all(&p, IngestOptions::default()).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidUtf8 { line: 2, .. }), "{err}");

        let opts = IngestOptions {
            on_invalid: InvalidLinePolicy::Skip,
            ..Default::default()
        };
        let mut reader = ingest(&p, "hi".parse().unwrap(), SourceKind::Wikipedia, opts).unwrap();
        let docs: Vec<_> = reader.by_ref().collect::<Result<_, _>>().unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[1].id, DocId::new(0, 2));
        assert_eq!(reader.skipped(), 1);
    }

    #[test]
    fn ingestion_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "x.txt", "a b\nकि\u{093C}\n\nc".as_bytes());
        let opts = IngestOptions {
            shard_index: 4,
            ..Default::default()
        };
        assert_eq!(read_all(&p, opts).unwrap(), read_all(&p, opts).unwrap());
    }

    #[test]
    fn shard_files_are_checked_against_declared_tag() {
        use crate::corpus::shard::ShardWriter;
        let dir = tempfile::tempdir().unwrap();
        let mut w = ShardWriter::new(Vec::new());
        w.write_raw("hi".parse().unwrap(), SourceKind::Wikipedia, "नमस्ते").unwrap();
        w.write_raw("hi".parse().unwrap(), SourceKind::Wikipedia, "   ").unwrap();
        w.write_raw("hi".parse().unwrap(), SourceKind::Wikipedia, "दुनिया").unwrap();
        let p = write_file(&dir, "hi.wikipedia.shard", &w.into_inner().unwrap());
        let docs = read_all(&p, IngestOptions::default()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[1].id.0, 2);

        let err = ingest(&p, "mr".parse().unwrap(), SourceKind::Wikipedia, Default::default())
            .unwrap()
            .next()
            .unwrap()
            .unwrap_err();
        assert!(matches!(err, CorpusError::TagMismatch { .. }));
    }

    #[test]
    fn parallel_kinds_rejected_for_monolingual_ingest() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "x.txt", b"a");
        assert!(matches!(
            ingest(&p, "hi".parse().unwrap(), SourceKind::ParallelTranslation, Default::default()),
            Err(CorpusError::ParallelKindOutsidePair(_))
        ));
    }

    #[test]
    fn pairs_from_tab_separated_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(
            &dir,
            "hi.parallel_transliteration.txt",
            "नमस्ते\tnamaste\n\t\nदुनिया\tduniya\n".as_bytes(),
        );
        let got = ingest_pairs(&p, Language::Hi, SourceKind::ParallelTransliteration, Default::default())
            .unwrap();
        assert_eq!(got.pairs.len(), 2);
        assert_eq!(got.skipped_empty, 1);
        assert_eq!(got.pairs[1].tgt().lang.to_string(), "hi-tr");
        assert_eq!(got.pairs[1].kind(), PairKind::Transliterated);

        let p = write_file(&dir, "bad.txt", "no tab here\n".as_bytes());
        assert!(ingest_pairs(&p, Language::Hi, SourceKind::ParallelTranslation, Default::default()).is_err());
    }

    #[test]
    fn file_name_convention() {
        let (tag, src) = parse_corpus_file_name("bn-tr.wikipedia.txt").unwrap();
        assert_eq!(tag.to_string(), "bn-tr");
        assert_eq!(src, SourceKind::Wikipedia);
        assert!(parse_corpus_file_name("hindi.txt").is_err());
        assert!(parse_corpus_file_name("zz.crawl.txt").is_err());
    }
}
