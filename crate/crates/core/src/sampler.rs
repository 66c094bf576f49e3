//! Language-balanced upsampling.
//!
//! Each language `i` with `n_i` words is assigned the multiplier
//! `m_i = (n_max / n_i)^(1 - alpha)`, where `n_max` is the largest count in
//! the plan. `alpha = 1` leaves the data untouched and `alpha = 0` brings
//! every language up to `n_max`.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use thiserror::Error;

use crate::corpus::{CorpusStats, DocumentRecord, LanguageTag, SourceKind};
use crate::seed;

pub const DEFAULT_ALPHA: f64 = 0.3;

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("word count must be positive")]
    ZeroCount,
    #[error("count {n} exceeds the maximum {n_max}")]
    CountAboveMax { n: u64, n_max: u64 },
    #[error("smoothing exponent {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("multiplier {0} must be at least 1")]
    MultiplierBelowOne(f64),
    #[error("empty corpus set")]
    EmptyCorpusSet,
}

fn check_alpha(alpha: f64) -> Result<(), SamplingError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(SamplingError::AlphaOutOfRange(alpha))
    }
}

/// `(n_max / n)^(1 - alpha)` for `0 < n <= n_max`.
pub fn multiplier(n: u64, n_max: u64, alpha: f64) -> Result<f64, SamplingError> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(SamplingError::ZeroCount);
    }
    if n > n_max {
        return Err(SamplingError::CountAboveMax { n, n_max });
    }
    Ok((n_max as f64 / n as f64).powf(1.0 - alpha))
}

/// Round half up; the inputs here are never negative.
fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanEntry {
    pub lang: LanguageTag,
    pub words: u64,
    pub multiplier: f64,
    /// `round(multiplier * words)`; reporting only, never used to truncate.
    pub upsampled: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub alpha: f64,
    pub entries: Vec<PlanEntry>,
    /// Languages present in the input with zero words.
    pub excluded: Vec<LanguageTag>,
}

impl SamplingPlan {
    /// Builds the plan from per-language word counts.
    pub fn from_counts(
        counts: &BTreeMap<LanguageTag, u64>,
        alpha: f64,
    ) -> Result<SamplingPlan, SamplingError> {
        check_alpha(alpha)?;
        let n_max = counts.values().copied().max().unwrap_or(0);
        if n_max == 0 {
            return Err(SamplingError::EmptyCorpusSet);
        }
        let mut entries = Vec::new();
        let mut excluded = Vec::new();
        for (&lang, &words) in counts {
            if words == 0 {
                excluded.push(lang);
                continue;
            }
            let m = multiplier(words, n_max, alpha)?;
            entries.push(PlanEntry {
                lang,
                words,
                multiplier: m,
                upsampled: round_half_up(m * words as f64),
            });
        }
        Ok(SamplingPlan {
            alpha,
            entries,
            excluded,
        })
    }

    pub fn get(&self, lang: LanguageTag) -> Option<&PlanEntry> {
        self.entries.iter().find(|e| e.lang == lang)
    }

    pub fn total_upsampled(&self) -> u64 {
        self.entries.iter().map(|e| e.upsampled).sum()
    }

    /// Writes `lang,n,multiplier,upsampled` with six decimals for the
    /// multiplier.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lang", "n", "multiplier", "upsampled"])?;
        for e in &self.entries {
            w.write_record([
                e.lang.to_string(),
                e.words.to_string(),
                format!("{:.6}", e.multiplier),
                e.upsampled.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Plan over the languages of one source kind.
pub fn build_plan(
    stats: &CorpusStats,
    source: SourceKind,
    alpha: f64,
) -> Result<SamplingPlan, SamplingError> {
    SamplingPlan::from_counts(&stats.words_for_source(source), alpha)
}

/// A document emitted by [`materialize`], with the pass that produced it.
/// Full passes are numbered from 0; the fractional pass comes last.
#[derive(Debug, Clone, Copy)]
pub struct Upsampled<'a> {
    pub pass: u32,
    pub doc: &'a DocumentRecord,
}

impl std::ops::Deref for Upsampled<'_> {
    type Target = DocumentRecord;

    fn deref(&self) -> &DocumentRecord {
        self.doc
    }
}

/// Whether `doc` is kept in the fractional pass. Depends only on the seed
/// and document id, so it is independent of stream order.
pub fn keep_in_partial_pass(doc: &DocumentRecord, fraction: f64, seed: u64) -> bool {
    if fraction <= 0.0 {
        return false;
    }
    seed::rng_for(seed, &[doc.id.0]).random::<f64>() < fraction
}

/// Emits `floor(m)` full passes over `docs`, then a partial pass keeping
/// each document with probability `m - floor(m)`.
pub fn materialize<'a, I>(
    docs: I,
    m: f64,
    seed: u64,
) -> Result<impl Iterator<Item = Upsampled<'a>>, SamplingError>
where
    I: IntoIterator<Item = &'a DocumentRecord>,
    I::IntoIter: Clone,
{
    if !(m >= 1.0) || !m.is_finite() {
        return Err(SamplingError::MultiplierBelowOne(m));
    }
    let full = m.floor() as u32;
    let fraction = m - m.floor();
    let docs = docs.into_iter();
    let full_passes = (0..full).flat_map({
        let docs = docs.clone();
        move |pass| docs.clone().map(move |doc| Upsampled { pass, doc })
    });
    let partial = docs
        .filter(move |d| keep_in_partial_pass(d, fraction, seed))
        .map(move |doc| Upsampled { pass: full, doc });
    Ok(full_passes.chain(partial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocId;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn tag(s: &str) -> LanguageTag {
        s.parse().unwrap()
    }

    fn docs(n: u64) -> Vec<DocumentRecord> {
        (0..n)
            .map(|i| {
                DocumentRecord::new(DocId(i), tag("as"), SourceKind::Wikipedia, Arc::from(""), "w")
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn multiplier_trivial_cases() {
        assert_eq!(multiplier(500, 500, 0.3).unwrap(), 1.0);
        assert_eq!(multiplier(7, 9_000, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn multiplier_matches_high_precision_value() {
        // 1120^0.7 evaluated with 40-digit arithmetic.
        let expected = 136.286_430_143_221_685_496_755_129_673_148_f64;
        let got = multiplier(2_500_000, 2_800_000_000, 0.3).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-12, "{got}");
    }

    #[test]
    fn multiplier_domain_errors() {
        assert_eq!(multiplier(0, 10, 0.3), Err(SamplingError::ZeroCount));
        assert!(matches!(multiplier(11, 10, 0.3), Err(SamplingError::CountAboveMax { .. })));
        assert!(matches!(multiplier(1, 10, -0.1), Err(SamplingError::AlphaOutOfRange(_))));
        assert!(matches!(multiplier(1, 10, 1.5), Err(SamplingError::AlphaOutOfRange(_))));
    }

    #[test]
    fn plan_single_language() {
        let counts = BTreeMap::from([(tag("hi"), 100)]);
        let plan = SamplingPlan::from_counts(&counts, DEFAULT_ALPHA).unwrap();
        assert_eq!(plan.entries[0].multiplier, 1.0);
        assert_eq!(plan.entries[0].upsampled, 100);
    }

    #[test]
    fn plan_two_languages() {
        // 10^0.7 = 5.011872336272722850...; upsampled 50.1187... -> 50
        let counts = BTreeMap::from([(tag("hi"), 100), (tag("ks"), 10)]);
        let plan = SamplingPlan::from_counts(&counts, 0.3).unwrap();
        let ks = plan.get(tag("ks")).unwrap();
        assert!((ks.multiplier - 5.011_872_336_272_722_8).abs() < 1e-12);
        assert_eq!(ks.upsampled, 50);
        assert_eq!(plan.get(tag("hi")).unwrap().upsampled, 100);

        let flat = SamplingPlan::from_counts(&counts, 0.0).unwrap();
        assert_eq!(flat.get(tag("ks")).unwrap().multiplier, 10.0);
        assert_eq!(flat.get(tag("ks")).unwrap().upsampled, 100);
    }

    #[test]
    fn plan_excludes_zero_counts_and_rejects_empty() {
        let counts = BTreeMap::from([(tag("hi"), 100), (tag("sa"), 0)]);
        let plan = SamplingPlan::from_counts(&counts, 0.3).unwrap();
        assert_eq!(plan.entries.len(), 1);
        assert_eq!(plan.excluded, [tag("sa")]);
        let zero = BTreeMap::from([(tag("sa"), 0)]);
        assert_eq!(SamplingPlan::from_counts(&zero, 0.3), Err(SamplingError::EmptyCorpusSet));
        assert_eq!(SamplingPlan::from_counts(&BTreeMap::new(), 0.3), Err(SamplingError::EmptyCorpusSet));
    }

    #[test]
    fn plan_csv_uses_six_decimals() {
        let counts = BTreeMap::from([(tag("hi"), 100), (tag("ks"), 10)]);
        let mut out = Vec::new();
        SamplingPlan::from_counts(&counts, 0.3).unwrap().write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "lang,n,multiplier,upsampled\nhi,100,1.000000,100\nks,10,5.011872,50\n"
        );
    }

    #[test]
    fn materialize_identity_and_integer_passes() {
        let d = docs(4);
        let out: Vec<_> = materialize(&d, 1.0, 9).unwrap().map(|u| u.id.0).collect();
        assert_eq!(out, [0, 1, 2, 3]);
        let out: Vec<_> = materialize(&d, 3.0, 9).unwrap().map(|u| (u.pass, u.id.0)).collect();
        assert_eq!(out.len(), 12);
        assert_eq!(&out[4..8], &[(1, 0), (1, 1), (1, 2), (1, 3)]);
        assert!(materialize(&d, 0.5, 9).is_err());
        assert!(materialize(&d, f64::NAN, 9).is_err());
    }

    #[test]
    fn materialize_fractional_pass_within_binomial_bound() {
        // Partial pass ~ Binomial(1000, 0.5): sd = sqrt(250) = 15.81.
        let d = docs(1000);
        let n = materialize(&d, 2.5, 1234).unwrap().count() as f64;
        assert!((n - 2500.0).abs() <= 3.0 * 250f64.sqrt(), "{n}");
    }

    #[test]
    fn materialize_is_reproducible_and_order_independent() {
        let d = docs(300);
        let a: Vec<_> = materialize(&d, 1.7, 5).unwrap().map(|u| u.id).collect();
        let b: Vec<_> = materialize(&d, 1.7, 5).unwrap().map(|u| u.id).collect();
        assert_eq!(a, b);
        let rev: Vec<_> = d.iter().rev().collect();
        let mut c: Vec<_> = materialize(rev, 1.7, 5).unwrap().map(|u| u.id).collect();
        let mut a = a;
        a.sort();
        c.sort();
        assert_eq!(a, c);
    }

    proptest! {
        #[test]
        fn plan_is_scale_invariant(
            counts in proptest::collection::vec(1u64..1_000_000, 1..6),
            c in 1u64..1000,
            alpha in 0.0f64..=1.0,
        ) {
            let langs = ["as", "bn", "hi", "ta", "ur", "mr"];
            let base: BTreeMap<_, _> = counts.iter().zip(langs).map(|(&n, l)| (tag(l), n)).collect();
            let scaled: BTreeMap<_, _> = base.iter().map(|(&l, &n)| (l, n * c)).collect();
            let p = SamplingPlan::from_counts(&base, alpha).unwrap();
            let q = SamplingPlan::from_counts(&scaled, alpha).unwrap();
            for (a, b) in p.entries.iter().zip(&q.entries) {
                prop_assert!(((a.multiplier - b.multiplier) / a.multiplier).abs() < 1e-12);
            }
        }

        #[test]
        fn multipliers_are_non_increasing_in_count(
            counts in proptest::collection::vec(1u64..1_000_000, 1..6),
            alpha in 0.0f64..=1.0,
        ) {
            let langs = ["as", "bn", "hi", "ta", "ur", "mr"];
            let base: BTreeMap<_, _> = counts.iter().zip(langs).map(|(&n, l)| (tag(l), n)).collect();
            let mut entries = SamplingPlan::from_counts(&base, alpha).unwrap().entries;
            entries.sort_by_key(|e| e.words);
            for w in entries.windows(2) {
                prop_assert!(w[0].multiplier >= w[1].multiplier);
            }
            prop_assert_eq!(entries.last().unwrap().multiplier, 1.0);
        }
    }
}
