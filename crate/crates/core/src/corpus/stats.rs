use std::collections::BTreeMap;
use std::io::Write;
use std::ops::AddAssign;

use rayon::prelude::*;

use super::{pretokenize, DocumentRecord, LanguageTag, SourceKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StatsEntry {
    pub docs: u64,
    pub words: u64,
    pub chars: u64,
}

impl AddAssign for StatsEntry {
    fn add_assign(&mut self, rhs: Self) {
        self.docs += rhs.docs;
        self.words += rhs.words;
        self.chars += rhs.chars;
    }
}

/// Document, word and character counts per (language, source).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    entries: BTreeMap<(LanguageTag, SourceKind), StatsEntry>,
}

impl CorpusStats {
    pub fn add_document(&mut self, doc: &DocumentRecord) {
        let e = self.entries.entry((doc.lang, doc.source)).or_default();
        e.docs += 1;
        e.words += pretokenize(doc.text()).len() as u64;
        e.chars += doc.text().chars().count() as u64;
    }

    /// Adds `other` into `self`; associative and commutative.
    pub fn merge(&mut self, other: &CorpusStats) {
        for (k, v) in &other.entries {
            *self.entries.entry(*k).or_default() += *v;
        }
    }

    pub fn get(&self, lang: LanguageTag, source: SourceKind) -> StatsEntry {
        self.entries.get(&(lang, source)).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (LanguageTag, SourceKind, StatsEntry)> + '_ {
        self.entries.iter().map(|(&(l, s), &e)| (l, s, e))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> StatsEntry {
        let mut t = StatsEntry::default();
        for e in self.entries.values() {
            t += *e;
        }
        t
    }

    /// Word counts per language for a single source kind.
    pub fn words_for_source(&self, source: SourceKind) -> BTreeMap<LanguageTag, u64> {
        self.entries
            .iter()
            .filter(|((_, s), _)| *s == source)
            .map(|((l, _), e)| (*l, e.words))
            .collect()
    }

    /// Writes `lang,source,docs,words,chars`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lang", "source", "docs", "words", "chars"])?;
        for (lang, source, e) in self.iter() {
            w.write_record([
                lang.to_string(),
                source.to_string(),
                e.docs.to_string(),
                e.words.to_string(),
                e.chars.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn count_tokens<'a, I>(docs: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a DocumentRecord>,
{
    let mut stats = CorpusStats::default();
    for d in docs {
        stats.add_document(d);
    }
    stats
}

impl CorpusStats {
    /// Parallel variant of [`count_tokens`] over an in-memory slice.
    pub fn par_count(docs: &[DocumentRecord]) -> CorpusStats {
        docs.par_chunks(1024)
            .map(count_tokens)
            .reduce(CorpusStats::default, |mut a, b| {
                a.merge(&b);
                a
            })
    }
}
