use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::query::{SdmQuery, WeightedQuery};
use super::run::ScoredDoc;
use crate::error::{Error, Result};
use crate::index::{InvertedIndex, PostingList};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 >= 0.0 && self.k1.is_finite()) || !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidArgument(format!(
                "BM25 needs k1 >= 0 and 0 <= b <= 1, got k1={} b={}",
                self.k1, self.b
            )));
        }
        Ok(())
    }
}

pub const DEFAULT_LAMBDA: f64 = 0.4;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be in (0, 1), got {lambda}"
        )));
    }
    Ok(())
}

/// Retrieval function used by batch search and sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Bm25(Bm25Params),
    Ql { lambda: f64 },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Bm25(_) => "bm25",
            Model::Ql { .. } => "ql",
        }
    }
}

/// Lucene-style idf, always positive.
pub fn bm25_idf(doc_count: u64, df: u32) -> f64 {
    let n = doc_count as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

pub fn bm25_term(weight: f64, dl: f64, avgdl: f64, params: Bm25Params) -> f64 {
    weight * (params.k1 + 1.0) / (weight + params.k1 * (1.0 - params.b + params.b * dl / avgdl))
}

/// Jelinek-Mercer smoothed log probability of a term in a document.
pub fn ql_term(weight: f64, dl: f64, ctf: f64, total: f64, lambda: f64) -> f64 {
    ((1.0 - lambda) * weight / dl + lambda * ctf / total).ln()
}

#[derive(Debug)]
struct Candidate<'a> {
    score: f64,
    id: &'a str,
}

// Heap order: the greatest element is the worst-ranked candidate.
impl Ord for Candidate<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.id.cmp(other.id))
    }
}

impl PartialOrd for Candidate<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate<'_> {}

/// Keeps the best `k` documents by score, ties broken by ascending id.
pub(crate) struct TopK<'a> {
    k: usize,
    heap: BinaryHeap<Candidate<'a>>,
}

impl<'a> TopK<'a> {
    pub(crate) fn new(k: usize) -> Self {
        TopK {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    pub(crate) fn push(&mut self, score: f64, id: &'a str) {
        let cand = Candidate { score, id };
        if self.heap.len() < self.k {
            self.heap.push(cand);
        } else if let Some(worst) = self.heap.peek() {
            if cand < *worst {
                self.heap.pop();
                self.heap.push(cand);
            }
        }
    }

    pub(crate) fn into_ranked(self) -> Vec<ScoredDoc> {
        let mut all = self.heap.into_vec();
        all.sort();
        all.into_iter()
            .enumerate()
            .map(|(i, c)| ScoredDoc {
                external_id: c.id.to_string(),
                score: c.score,
                rank: i as u32 + 1,
            })
            .collect()
    }
}

/// Document-at-a-time traversal over the given posting lists. `score` is
/// called once per document that occurs in at least one list, with the
/// stored weight of each list's term in that document (0 when absent).
fn daat(
    index: &InvertedIndex,
    lists: &[&PostingList],
    k: u32,
    mut score: impl FnMut(u32, &[u32]) -> f64,
) -> Vec<ScoredDoc> {
    let mut cursors = vec![0usize; lists.len()];
    let mut weights = vec![0u32; lists.len()];
    let mut top = TopK::new(k as usize);
    loop {
        let current = lists
            .iter()
            .zip(&cursors)
            .filter_map(|(l, &c)| l.docs.get(c).copied())
            .min();
        let Some(doc) = current else { break };
        for ((list, cursor), w) in lists.iter().zip(cursors.iter_mut()).zip(weights.iter_mut()) {
            *w = 0;
            if list.docs.get(*cursor) == Some(&doc) {
                *w = list.weights[*cursor];
                *cursor += 1;
            }
        }
        let s = score(doc, &weights);
        top.push(s, &index.doc(doc).external_id);
    }
    top.into_ranked()
}

fn check_k(k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    Ok(())
}

/// BM25 over stored weights with sum-normalized query weights. Query terms
/// missing from the lexicon contribute nothing.
pub fn bm25_search(
    index: &InvertedIndex,
    query: &WeightedQuery,
    k: u32,
    params: Bm25Params,
) -> Result<Vec<ScoredDoc>> {
    check_k(k)?;
    params.validate()?;
    let meta = index.meta();
    let mut lists = Vec::new();
    let mut factors = Vec::new();
    for (term, qw) in query.normalized() {
        if let Some((entry, list)) = index.term(term) {
            lists.push(list);
            factors.push(qw * bm25_idf(meta.doc_count, entry.df));
        }
    }
    Ok(daat(index, &lists, k, |doc, weights| {
        let dl = index.doc(doc).dl as f64;
        weights
            .iter()
            .zip(&factors)
            .filter(|(w, _)| **w > 0)
            .map(|(&w, f)| f * bm25_term(w as f64, dl, meta.avgdl, params))
            .sum()
    }))
}

/// Query likelihood with Jelinek-Mercer smoothing. Documents matching at
/// least one query term are scored; query terms that never occur in the
/// collection are skipped.
pub fn ql_search(
    index: &InvertedIndex,
    query: &WeightedQuery,
    k: u32,
    lambda: f64,
) -> Result<Vec<ScoredDoc>> {
    check_k(k)?;
    check_lambda(lambda)?;
    let meta = index.meta();
    let total = meta.total_weight as f64;
    let mut lists = Vec::new();
    let mut terms = Vec::new();
    for (term, qw) in query.normalized() {
        if let Some((entry, list)) = index.term(term) {
            lists.push(list);
            terms.push((qw, entry.ctf as f64));
        }
    }
    Ok(daat(index, &lists, k, |doc, weights| {
        let dl = index.doc(doc).dl as f64;
        ql_score(weights, &terms, dl, total, lambda)
    }))
}

fn ql_score(weights: &[u32], terms: &[(f64, f64)], dl: f64, total: f64, lambda: f64) -> f64 {
    weights
        .iter()
        .zip(terms)
        .map(|(&w, &(qw, ctf))| qw * ql_term(w as f64, dl, ctf, total, lambda))
        .sum()
}

pub fn search(
    index: &InvertedIndex,
    query: &WeightedQuery,
    k: u32,
    model: Model,
) -> Result<Vec<ScoredDoc>> {
    match model {
        Model::Bm25(params) => bm25_search(index, query, k, params),
        Model::Ql { lambda } => ql_search(index, query, k, lambda),
    }
}

/// Occurrences of `second` immediately after `first`.
pub fn ordered_matches(first: &[u32], second: &[u32]) -> u32 {
    first
        .iter()
        .filter(|&&p| second.binary_search(&(p + 1)).is_ok())
        .count() as u32
}

/// Pairs of occurrences, in either order, less than `window` positions
/// apart. An occurrence is never paired with itself.
pub fn window_matches(a: &[u32], b: &[u32], window: u32) -> u32 {
    let mut count = 0u32;
    for &p in a {
        let lo = p.saturating_sub(window - 1);
        let hi = p + (window - 1);
        let start = b.partition_point(|&q| q < lo);
        for &q in b[start..].iter().take_while(|&&q| q <= hi) {
            if q != p {
                count += 1;
            }
        }
    }
    count
}

struct PairStats<'a> {
    weight: f64,
    first: &'a PostingList,
    second: &'a PostingList,
    cf: u64,
    window: Option<u32>,
}

impl PairStats<'_> {
    fn count(&self, doc: u32) -> u32 {
        let (Some(i), Some(j)) = (self.first.find(doc), self.second.find(doc)) else {
            return 0;
        };
        let (Some(a), Some(b)) = (self.first.get(i).positions, self.second.get(j).positions) else {
            return 0;
        };
        match self.window {
            None => ordered_matches(a, b),
            Some(w) => window_matches(a, b, w),
        }
    }
}

fn pair_stats<'a>(
    index: &'a InvertedIndex,
    pairs: impl Iterator<Item = (&'a str, &'a str, f64, Option<u32>)>,
) -> Vec<PairStats<'a>> {
    let mut out = Vec::new();
    for (t1, t2, weight, window) in pairs {
        let (Some(first), Some(second)) = (index.postings(t1), index.postings(t2)) else {
            continue;
        };
        let mut stats = PairStats {
            weight,
            first,
            second,
            cf: 0,
            window,
        };
        stats.cf = first.docs.iter().map(|&d| stats.count(d) as u64).sum();
        if stats.cf > 0 {
            out.push(stats);
        }
    }
    out
}

fn pair_component(
    pairs: &[PairStats<'_>],
    total_weight: f64,
    doc: u32,
    dl: f64,
    total: f64,
    lambda: f64,
) -> f64 {
    pairs
        .iter()
        .map(|p| {
            p.weight / total_weight * ql_term(p.count(doc) as f64, dl, p.cf as f64, total, lambda)
        })
        .sum()
}

/// Sequential dependence scoring over a positional index. Each component is
/// query likelihood: the unigram part over the weighted terms, the ordered
/// and unordered parts over virtual terms whose frequency is the number of
/// adjacent or in-window matches. Pairs that never match in the collection
/// are skipped, like unseen unigrams.
pub fn sdm_search(
    index: &InvertedIndex,
    query: &SdmQuery,
    k: u32,
    lambda: f64,
) -> Result<Vec<ScoredDoc>> {
    check_k(k)?;
    check_lambda(lambda)?;
    query.mix.validate()?;
    if !index.meta().positional {
        return Err(Error::NotPositional);
    }
    let meta = index.meta();
    let total = meta.total_weight as f64;

    let mut lists = Vec::new();
    let mut terms = Vec::new();
    for (term, qw) in query.unigrams.normalized() {
        if let Some((entry, list)) = index.term(term) {
            lists.push(list);
            terms.push((qw, entry.ctf as f64));
        }
    }
    let ordered = pair_stats(
        index,
        query
            .ordered
            .iter()
            .map(|((a, b), w)| (a.as_str(), b.as_str(), *w, None)),
    );
    let unordered = pair_stats(
        index,
        query
            .unordered
            .iter()
            .map(|((a, b), w, win)| (a.as_str(), b.as_str(), *w, Some(*win))),
    );
    let ordered_total: f64 = query.ordered.iter().map(|(_, w)| w).sum();
    let unordered_total: f64 = query.unordered.iter().map(|(_, w, _)| w).sum();
    let mix = query.mix;

    Ok(daat(index, &lists, k, |doc, weights| {
        let dl = index.doc(doc).dl as f64;
        let uni = ql_score(weights, &terms, dl, total, lambda);
        let ord = pair_component(&ordered, ordered_total, doc, dl, total, lambda);
        let win = pair_component(&unordered, unordered_total, doc, dl, total, lambda);
        mix.unigram * uni + mix.ordered * ord + mix.unordered * win
    }))
}
