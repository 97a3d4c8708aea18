//! Inverted index whose per-posting weight is either the raw term frequency
//! or a scaled predicted term weight used as a pseudo-frequency.
//!
//! Document length, average document length and collection frequency are all
//! derived from stored weights, so the scoring functions treat both kinds of
//! index the same way.

mod store;
mod varint;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analyzer::AnalyzerConfig;
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::targets::WeightTable;

pub use store::{FORMAT_NAME, FORMAT_VERSION};

/// `round(y * scale)` with halves rounded away from zero. Negative weights
/// and weights that round to zero yield `None`: the term is not indexed.
pub fn scale_weight(y: f64, scale: u32) -> Result<Option<u32>> {
    if !y.is_finite() {
        return Err(Error::NonFinite(y));
    }
    if scale == 0 {
        return Err(Error::InvalidArgument("scale must be at least 1".into()));
    }
    if y < 0.0 {
        return Ok(None);
    }
    let scaled = (y * scale as f64).round();
    if scaled < 1.0 {
        return Ok(None);
    }
    if scaled > u32::MAX as f64 {
        return Err(Error::InvalidArgument(format!(
            "weight {y} overflows at scale {scale}"
        )));
    }
    Ok(Some(scaled as u32))
}

/// What to do with a document that has no weight record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingWeightPolicy {
    #[default]
    Strict,
    DropDoc,
    UseTf,
}

impl FromStr for MissingWeightPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Self::Strict),
            "drop-doc" | "drop_doc" => Ok(Self::DropDoc),
            "use-tf" | "use_tf" => Ok(Self::UseTf),
            other => Err(Error::InvalidArgument(format!(
                "unknown missing-weight policy `{other}`"
            ))),
        }
    }
}

impl fmt::Display for MissingWeightPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Strict => "strict",
            Self::DropDoc => "drop-doc",
            Self::UseTf => "use-tf",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub enum IndexMode<'a> {
    Tf,
    Weighted {
        weights: &'a WeightTable,
        scale: u32,
        missing: MissingWeightPolicy,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting<'a> {
    pub doc: u32,
    pub weight: u32,
    pub positions: Option<&'a [u32]>,
}

/// Postings of one term, sorted by document ordinal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PostingList {
    pub docs: Vec<u32>,
    pub weights: Vec<u32>,
    pub positions: Option<Vec<Vec<u32>>>,
}

impl PostingList {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, i: usize) -> Posting<'_> {
        Posting {
            doc: self.docs[i],
            weight: self.weights[i],
            positions: self.positions.as_ref().map(|p| p[i].as_slice()),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Posting<'_>> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    /// Index of the posting for `doc`, if any.
    pub fn find(&self, doc: u32) -> Option<usize> {
        self.docs.binary_search(&doc).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub term: String,
    pub df: u32,
    /// Sum of stored weights over the postings.
    pub ctf: u64,
    pub postings_offset: u64,
    pub postings_len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocEntry {
    pub external_id: String,
    /// Sum of stored weights over the document's terms.
    pub dl: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexMeta {
    pub doc_count: u64,
    pub total_weight: u64,
    pub avgdl: f64,
    pub analyzer: AnalyzerConfig,
    pub weighted: bool,
    /// Scale applied to predicted weights; `None` for tf indexes.
    pub scale: Option<u32>,
    pub positional: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    meta: IndexMeta,
    lexicon: Vec<LexiconEntry>,
    term_ids: HashMap<String, u32>,
    postings: Vec<PostingList>,
    docs: Vec<DocEntry>,
}

struct DocTerms {
    external_id: String,
    /// term -> (stored weight, positions)
    terms: BTreeMap<String, (u32, Vec<u32>)>,
}

fn analyze_doc(
    doc: &Document,
    analyzer: &AnalyzerConfig,
    mode: &IndexMode<'_>,
) -> Result<Option<DocTerms>> {
    let mut occurrences: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for (pos, term) in analyzer.analyze(&doc.text()).into_iter().enumerate() {
        occurrences.entry(term).or_default().push(pos as u32);
    }

    let record = match mode {
        IndexMode::Tf => None,
        IndexMode::Weighted {
            weights, missing, ..
        } => match (weights.get(&doc.external_id), missing) {
            (Some(record), _) => Some(record),
            (None, MissingWeightPolicy::Strict) => {
                return Err(Error::MissingWeights(doc.external_id.clone()))
            }
            (None, MissingWeightPolicy::DropDoc) => return Ok(None),
            (None, MissingWeightPolicy::UseTf) => None,
        },
    };

    let mut terms = BTreeMap::new();
    for (term, positions) in occurrences {
        let weight = match (record, mode) {
            (Some(record), IndexMode::Weighted { scale, .. }) => match record.get(&term) {
                Some(y) => scale_weight(y, *scale)?,
                None => None,
            },
            _ => Some(positions.len() as u32),
        };
        if let Some(weight) = weight {
            terms.insert(term, (weight, positions));
        }
    }
    Ok(Some(DocTerms {
        external_id: doc.external_id.clone(),
        terms,
    }))
}

impl InvertedIndex {
    /// Builds an index. Documents are analyzed in parallel and merged in
    /// collection order, so the result does not depend on the thread count.
    pub fn build(
        docs: &[Document],
        analyzer: &AnalyzerConfig,
        mode: IndexMode<'_>,
        positional: bool,
    ) -> Result<Self> {
        if let IndexMode::Weighted { scale: 0, .. } = mode {
            return Err(Error::InvalidArgument("scale must be at least 1".into()));
        }
        let analyzed: Vec<Option<DocTerms>> = docs
            .par_iter()
            .map(|doc| analyze_doc(doc, analyzer, &mode))
            .collect::<Result<_>>()?;

        let mut doc_table = Vec::new();
        let mut merged: BTreeMap<String, PostingList> = BTreeMap::new();
        for doc in analyzed.into_iter().flatten() {
            let ordinal = u32::try_from(doc_table.len())
                .map_err(|_| Error::InvalidArgument("too many documents".into()))?;
            let mut dl = 0u64;
            for (term, (weight, positions)) in doc.terms {
                dl += weight as u64;
                let list = merged.entry(term).or_insert_with(|| PostingList {
                    positions: positional.then(Vec::new),
                    ..PostingList::default()
                });
                list.docs.push(ordinal);
                list.weights.push(weight);
                if let Some(p) = list.positions.as_mut() {
                    p.push(positions);
                }
            }
            doc_table.push(DocEntry {
                external_id: doc.external_id,
                dl,
            });
        }

        let (weighted, scale) = match mode {
            IndexMode::Tf => (false, None),
            IndexMode::Weighted { scale, .. } => (true, Some(scale)),
        };
        let total_weight: u64 = doc_table.iter().map(|d| d.dl).sum();
        let doc_count = doc_table.len() as u64;
        let meta = IndexMeta {
            doc_count,
            total_weight,
            avgdl: if doc_count == 0 {
                0.0
            } else {
                total_weight as f64 / doc_count as f64
            },
            analyzer: analyzer.clone(),
            weighted,
            scale,
            positional,
        };

        let mut lexicon = Vec::with_capacity(merged.len());
        let mut postings = Vec::with_capacity(merged.len());
        let mut offset = 0u64;
        for (term, list) in merged {
            let len = store::encoded_len(&list);
            lexicon.push(LexiconEntry {
                term,
                df: list.len() as u32,
                ctf: list.weights.iter().map(|&w| w as u64).sum(),
                postings_offset: offset,
                postings_len: len,
            });
            offset += len;
            postings.push(list);
        }
        Ok(Self::from_parts(meta, lexicon, postings, doc_table))
    }

    fn from_parts(
        meta: IndexMeta,
        lexicon: Vec<LexiconEntry>,
        postings: Vec<PostingList>,
        docs: Vec<DocEntry>,
    ) -> Self {
        let term_ids = lexicon
            .iter()
            .enumerate()
            .map(|(i, e)| (e.term.clone(), i as u32))
            .collect();
        InvertedIndex {
            meta,
            lexicon,
            term_ids,
            postings,
            docs,
        }
    }

    pub fn meta(&self) -> &IndexMeta {
        &self.meta
    }

    pub fn lexicon(&self) -> &[LexiconEntry] {
        &self.lexicon
    }

    pub fn docs(&self) -> &[DocEntry] {
        &self.docs
    }

    pub fn doc(&self, ordinal: u32) -> &DocEntry {
        &self.docs[ordinal as usize]
    }

    pub fn term(&self, term: &str) -> Option<(&LexiconEntry, &PostingList)> {
        let id = *self.term_ids.get(term)? as usize;
        Some((&self.lexicon[id], &self.postings[id]))
    }

    pub fn postings(&self, term: &str) -> Option<&PostingList> {
        self.term(term).map(|(_, p)| p)
    }

    pub fn iter_terms(&self) -> impl Iterator<Item = (&LexiconEntry, &PostingList)> {
        self.lexicon.iter().zip(&self.postings)
    }

    pub fn term_count(&self) -> usize {
        self.lexicon.len()
    }

    pub fn posting_count(&self) -> u64 {
        self.lexicon.iter().map(|e| e.df as u64).sum()
    }

    pub fn persist(&self, dir: &std::path::Path) -> Result<()> {
        store::persist(self, dir)
    }

    pub fn load(dir: &std::path::Path) -> Result<Self> {
        store::load(dir)
    }
}

/// Average share of document length held by each document's i-th largest
/// term weight. Documents with fewer than i terms contribute 0 at rank i;
/// documents of length 0 are skipped.
pub fn weight_rank_profile(index: &InvertedIndex, top_k: u32) -> Result<Vec<f64>> {
    if top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be at least 1".into()));
    }
    let mut per_doc: Vec<Vec<u32>> = vec![Vec::new(); index.docs().len()];
    for (_, list) in index.iter_terms() {
        for p in list.iter() {
            per_doc[p.doc as usize].push(p.weight);
        }
    }
    let mut profile = vec![0.0; top_k as usize];
    let mut counted = 0usize;
    for (weights, doc) in per_doc.iter_mut().zip(index.docs()) {
        if doc.dl == 0 {
            continue;
        }
        counted += 1;
        weights.sort_unstable_by(|a, b| b.cmp(a));
        for (slot, w) in profile.iter_mut().zip(weights.iter()) {
            *slot += *w as f64 / doc.dl as f64;
        }
    }
    if counted == 0 {
        return Err(Error::EmptyIndex);
    }
    profile.iter_mut().for_each(|v| *v /= counted as f64);
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::WeightRecord;
    use proptest::prelude::*;

    fn plain() -> AnalyzerConfig {
        AnalyzerConfig::plain()
    }

    fn table(records: Vec<WeightRecord>) -> WeightTable {
        WeightTable::from_records(records).unwrap()
    }

    fn weighted(weights: &WeightTable) -> IndexMode<'_> {
        IndexMode::Weighted {
            weights,
            scale: 100,
            missing: MissingWeightPolicy::Strict,
        }
    }

    #[test]
    fn scale_examples() {
        assert_eq!(scale_weight(0.37, 100).unwrap(), Some(37));
        assert_eq!(scale_weight(-0.2, 100).unwrap(), None);
        assert_eq!(scale_weight(0.004, 100).unwrap(), None);
        assert_eq!(scale_weight(0.005, 100).unwrap(), Some(1));
        assert_eq!(scale_weight(0.006, 100).unwrap(), Some(1));
        assert_eq!(scale_weight(0.0, 100).unwrap(), None);
        assert_eq!(scale_weight(2.5, 1).unwrap(), Some(3));
        assert!(scale_weight(f64::NAN, 100).is_err());
        assert!(scale_weight(f64::INFINITY, 100).is_err());
        assert!(scale_weight(0.5, 0).is_err());
    }

    #[test]
    fn tf_postings() {
        let docs = vec![Document::new("d", "a a b")];
        let index = InvertedIndex::build(&docs, &plain(), IndexMode::Tf, false).unwrap();
        let a = index.postings("a").unwrap();
        assert_eq!((a.docs.clone(), a.weights.clone()), (vec![0], vec![2]));
        let b = index.postings("b").unwrap();
        assert_eq!(b.weights, vec![1]);
        assert_eq!(index.doc(0).dl, 3);
        assert_eq!(index.meta().avgdl, 3.0);
    }

    #[test]
    fn weighted_postings_drop_zero_weights() {
        let docs = vec![Document::new("d", "a a b")];
        let weights = table(vec![WeightRecord::new("d").with("a", 0.5).with("b", 0.0)]);
        let index = InvertedIndex::build(&docs, &plain(), weighted(&weights), false).unwrap();
        assert_eq!(index.postings("a").unwrap().weights, vec![50]);
        assert!(index.postings("b").is_none());
        assert_eq!(index.doc(0).dl, 50);
        assert!(index.meta().weighted);
        assert_eq!(index.meta().scale, Some(100));
    }

    #[test]
    fn fully_pruned_document_is_kept_but_empty() {
        let docs = vec![Document::new("d", "a b"), Document::new("e", "a")];
        let weights = table(vec![
            WeightRecord::new("d").with("a", -1.0).with("b", 0.001),
            WeightRecord::new("e").with("a", 1.0),
        ]);
        let index = InvertedIndex::build(&docs, &plain(), weighted(&weights), false).unwrap();
        assert_eq!(index.docs().len(), 2);
        assert_eq!(index.doc(0).dl, 0);
        assert_eq!(index.postings("a").unwrap().docs, vec![1]);
        assert_eq!(index.meta().avgdl, 50.0);
    }

    #[test]
    fn missing_weight_policies() {
        let docs = vec![Document::new("d", "a a"), Document::new("e", "b")];
        let weights = table(vec![WeightRecord::new("e").with("b", 0.3)]);
        let err = InvertedIndex::build(&docs, &plain(), weighted(&weights), false).unwrap_err();
        assert!(matches!(err, Error::MissingWeights(d) if d == "d"));

        let drop = IndexMode::Weighted {
            weights: &weights,
            scale: 100,
            missing: MissingWeightPolicy::DropDoc,
        };
        let index = InvertedIndex::build(&docs, &plain(), drop, false).unwrap();
        assert_eq!(index.docs().len(), 1);
        assert_eq!(index.doc(0).external_id, "e");

        let use_tf = IndexMode::Weighted {
            weights: &weights,
            scale: 100,
            missing: MissingWeightPolicy::UseTf,
        };
        let index = InvertedIndex::build(&docs, &plain(), use_tf, false).unwrap();
        assert_eq!(index.postings("a").unwrap().weights, vec![2]);
        assert_eq!(index.postings("b").unwrap().weights, vec![30]);
    }

    #[test]
    fn positions_record_every_occurrence() {
        let docs = vec![Document::new("d", "a b a c a")];
        let weights = table(vec![WeightRecord::new("d").with("a", 0.01).with("c", 0.9)]);
        let index = InvertedIndex::build(&docs, &plain(), weighted(&weights), true).unwrap();
        let a = index.postings("a").unwrap();
        assert_eq!(a.weights, vec![1]);
        assert_eq!(a.get(0).positions, Some(&[0u32, 2, 4][..]));
        assert_eq!(
            index.postings("c").unwrap().get(0).positions,
            Some(&[3u32][..])
        );
    }

    #[test]
    fn stopwords_are_not_indexed() {
        let analyzer = AnalyzerConfig::plain().with_stopwords(["the"]);
        let docs = vec![Document::new("d", "the cat")];
        let index = InvertedIndex::build(&docs, &analyzer, IndexMode::Tf, false).unwrap();
        assert!(index.postings("the").is_none());
        assert_eq!(index.doc(0).dl, 1);
    }

    #[test]
    fn profile_single_term_docs() {
        let docs = vec![Document::new("d1", "a a"), Document::new("d2", "b")];
        let index = InvertedIndex::build(&docs, &plain(), IndexMode::Tf, false).unwrap();
        assert_eq!(weight_rank_profile(&index, 3).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn profile_uniform_docs() {
        let docs = vec![
            Document::new("d1", "a b c d"),
            Document::new("d2", "e f g h"),
        ];
        let index = InvertedIndex::build(&docs, &plain(), IndexMode::Tf, false).unwrap();
        assert_eq!(
            weight_rank_profile(&index, 5).unwrap(),
            vec![0.25, 0.25, 0.25, 0.25, 0.0]
        );
    }

    #[test]
    fn profile_errors() {
        let index = InvertedIndex::build(&[], &plain(), IndexMode::Tf, false).unwrap();
        assert!(matches!(
            weight_rank_profile(&index, 1),
            Err(Error::EmptyIndex)
        ));
        let docs = vec![Document::new("d", "a")];
        let index = InvertedIndex::build(&docs, &plain(), IndexMode::Tf, false).unwrap();
        assert!(weight_rank_profile(&index, 0).is_err());
    }

    fn arb_corpus() -> impl Strategy<Value = Vec<Document>> {
        let word = prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "g"]);
        prop::collection::vec(prop::collection::vec(word, 1..12), 0..12).prop_map(|docs| {
            docs.into_iter()
                .enumerate()
                .map(|(i, words)| Document::new(format!("d{i}"), words.join(" ")))
                .collect()
        })
    }

    fn arb_weights(docs: &[Document]) -> WeightTable {
        // Deterministic pseudo-random weights in [-0.5, 1.5).
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 0.5
        };
        table(
            docs.iter()
                .map(|d| {
                    let mut r = WeightRecord::new(d.external_id.clone());
                    for t in d.body.split(' ') {
                        r.weights.insert(t.to_string(), next());
                    }
                    r
                })
                .collect(),
        )
    }

    proptest! {
        #[test]
        fn scaling_rounds_half_away_from_zero(y in -2.0f64..2.0, n in 1u32..1000) {
            let got = scale_weight(y, n).unwrap();
            let product = y * n as f64;
            if y < 0.0 {
                prop_assert_eq!(got, None);
            } else {
                let floor = product.floor();
                let want = if product - floor >= 0.5 { floor + 1.0 } else { floor };
                if want >= 1.0 {
                    prop_assert_eq!(got, Some(want as u32));
                } else {
                    prop_assert_eq!(got, None);
                }
            }
        }

        #[test]
        fn exact_halves_round_up(k in 0u32..1000, shift in 0u32..8) {
            // With a power-of-two scale, (k + 0.5) / scale is exact.
            let n = 1u32 << shift;
            let y = (k as f64 + 0.5) / n as f64;
            prop_assert_eq!(scale_weight(y, n).unwrap(), Some(k + 1));
        }

        #[test]
        fn lexicon_is_consistent(docs in arb_corpus(), positional in any::<bool>()) {
            let weights = arb_weights(&docs);
            for mode in [IndexMode::Tf, weighted(&weights)] {
                let index = InvertedIndex::build(&docs, &plain(), mode, positional).unwrap();
                let mut dl = vec![0u64; index.docs().len()];
                for (entry, list) in index.iter_terms() {
                    prop_assert_eq!(entry.df as usize, list.len());
                    prop_assert_eq!(entry.ctf, list.weights.iter().map(|&w| w as u64).sum::<u64>());
                    prop_assert!(list.docs.windows(2).all(|w| w[0] < w[1]));
                    prop_assert!(list.weights.iter().all(|&w| w >= 1));
                    for p in list.iter() {
                        dl[p.doc as usize] += p.weight as u64;
                    }
                }
                for (d, entry) in index.docs().iter().enumerate() {
                    prop_assert_eq!(entry.dl, dl[d]);
                }
                prop_assert_eq!(index.meta().total_weight, dl.iter().sum::<u64>());
            }
        }

        #[test]
        fn pruning_law(docs in arb_corpus()) {
            let weights = arb_weights(&docs);
            let tf = InvertedIndex::build(&docs, &plain(), IndexMode::Tf, false).unwrap();
            let w = InvertedIndex::build(&docs, &plain(), weighted(&weights), false).unwrap();
            prop_assert!(w.posting_count() <= tf.posting_count());
            for doc in &docs {
                let record = weights.get(&doc.external_id).unwrap();
                let ordinal = w.docs().iter().position(|e| e.external_id == doc.external_id).unwrap() as u32;
                for (term, &y) in &record.weights {
                    let stored = w.postings(term).and_then(|l| l.find(ordinal).map(|i| l.weights[i]));
                    let expect = scale_weight(y, 100).unwrap();
                    prop_assert_eq!(stored, expect);
                    prop_assert_eq!(stored.is_some(), (y * 100.0).round() >= 1.0);
                }
            }
        }

        #[test]
        fn positions_match_occurrences(docs in arb_corpus()) {
            let weights = arb_weights(&docs);
            let index = InvertedIndex::build(&docs, &plain(), weighted(&weights), true).unwrap();
            for (entry, list) in index.iter_terms() {
                for p in list.iter() {
                    let doc = docs.iter().find(|d| d.external_id == index.doc(p.doc).external_id).unwrap();
                    let want: Vec<u32> = doc.body.split(' ').enumerate()
                        .filter(|(_, w)| *w == entry.term)
                        .map(|(i, _)| i as u32)
                        .collect();
                    prop_assert_eq!(p.positions.unwrap(), &want[..]);
                }
            }
        }
    }
}
