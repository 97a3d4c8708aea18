//! Fixtures shared by the integration tests: a synthetic corpus with known
//! central terms, and brute-force scorers that work straight from documents
//! rather than from an index.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use termweight::corpus::{Document, Qrels, Query};
use termweight::retrieval::{Bm25Params, Run, ScoredDoc, WeightedQuery};
use termweight::{AnalyzerConfig, WeightTable};

pub struct Synthetic {
    pub docs: Vec<Document>,
    pub train_queries: Vec<Query>,
    pub train_qrels: Qrels,
    pub test_queries: Vec<Query>,
    pub test_qrels: Qrels,
    /// Central term pair of every document, by id.
    pub central: BTreeMap<String, (String, String)>,
}

impl Synthetic {
    pub fn all_queries(&self) -> Vec<Query> {
        self.train_queries
            .iter()
            .chain(&self.test_queries)
            .cloned()
            .collect()
    }
}

pub const VOCAB: usize = 30;

fn word(i: usize) -> String {
    format!("v{i:02}")
}

/// `n_docs` documents of ten distinct terms each (tf 1 everywhere): two
/// central terms, a pair no other document has as its central pair, plus
/// eight distractors from the same vocabulary. Each document gets two
/// training queries built from its central terms; `n_test` held-out queries
/// ask for the central pair of a sampled document.
pub fn synthetic(n_docs: usize, n_test: usize, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used_pairs = HashSet::new();
    let mut docs = Vec::new();
    let mut central = BTreeMap::new();
    let mut train_queries = Vec::new();
    let mut train_qrels = Qrels::new();

    for d in 0..n_docs {
        let (a, b) = loop {
            let a = rng.random_range(0..VOCAB);
            let b = rng.random_range(0..VOCAB);
            if a != b && used_pairs.insert((a.min(b), a.max(b))) {
                break (a, b);
            }
        };
        let mut others: Vec<usize> = (0..VOCAB).filter(|&t| t != a && t != b).collect();
        others.shuffle(&mut rng);
        let mut terms: Vec<String> = others[..8].iter().map(|&t| word(t)).collect();
        terms.push(word(a));
        terms.push(word(b));
        terms.shuffle(&mut rng);

        let id = format!("d{d:03}");
        docs.push(Document::new(id.clone(), terms.join(" ")));
        central.insert(id.clone(), (word(a), word(b)));
        for (j, text) in [
            format!("what is {} {}", word(a), word(b)),
            format!("{} {} meaning", word(b), word(a)),
        ]
        .into_iter()
        .enumerate()
        {
            let qid = format!("train{d:03}_{j}");
            train_qrels.insert(&qid, &id, 1).unwrap();
            train_queries.push(Query::new(qid, text));
        }
    }

    let mut picks: Vec<usize> = (0..n_docs).collect();
    picks.shuffle(&mut rng);
    let mut test_queries = Vec::new();
    let mut test_qrels = Qrels::new();
    for (i, &d) in picks.iter().take(n_test).enumerate() {
        let id = format!("d{d:03}");
        let (a, b) = &central[&id];
        let qid = format!("test{i:03}");
        test_qrels.insert(&qid, &id, 1).unwrap();
        test_queries.push(Query::new(qid, format!("{a} {b}")));
    }

    Synthetic {
        docs,
        train_queries,
        train_qrels,
        test_queries,
        test_qrels,
        central,
    }
}

/// Random small corpus over a tiny vocabulary, with random queries.
pub fn random_corpus(rng: &mut ChaCha8Rng, max_docs: usize) -> (Vec<Document>, Vec<Query>) {
    let vocab = [
        "alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta", "iota", "kappa",
    ];
    let n_docs = rng.random_range(1..=max_docs);
    let docs = (0..n_docs)
        .map(|i| {
            let len = rng.random_range(1..20);
            let words: Vec<&str> = (0..len)
                .map(|_| vocab[rng.random_range(0..vocab.len())])
                .collect();
            Document::new(format!("doc{i:02}"), words.join(" "))
        })
        .collect();
    let queries = (0..10)
        .map(|i| {
            let len = rng.random_range(1..=8);
            let words: Vec<&str> = (0..len)
                .map(|_| {
                    // Occasionally ask for a word no document has.
                    if rng.random_range(0..10) == 0 {
                        "missing"
                    } else {
                        vocab[rng.random_range(0..vocab.len())]
                    }
                })
                .collect();
            Query::new(format!("q{i}"), words.join(" "))
        })
        .collect();
    (docs, queries)
}

/// Per-document stored weights computed directly from the text: term
/// frequency, or `round(y * scale)` with halves away from zero when a weight
/// table is given (non-positive results dropped).
pub fn doc_weights(
    docs: &[Document],
    analyzer: &AnalyzerConfig,
    weights: Option<(&WeightTable, u32)>,
) -> Vec<(String, HashMap<String, u64>)> {
    docs.iter()
        .map(|d| {
            let mut tf: HashMap<String, u64> = HashMap::new();
            for t in analyzer.analyze(&d.text()) {
                *tf.entry(t).or_default() += 1;
            }
            let stored = match weights {
                None => tf,
                Some((table, scale)) => {
                    let record = table.get(&d.external_id).expect("weights for every doc");
                    tf.keys()
                        .filter_map(|t| {
                            let y = record.get(t)?;
                            let x = y * scale as f64;
                            let floor = x.floor();
                            let r = if x - floor >= 0.5 { floor + 1.0 } else { floor };
                            (y >= 0.0 && r >= 1.0).then(|| (t.clone(), r as u64))
                        })
                        .collect()
                }
            };
            (d.external_id.clone(), stored)
        })
        .collect()
}

fn rank(mut scored: Vec<(String, f64)>, k: usize) -> Vec<ScoredDoc> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (id, score))| ScoredDoc {
            external_id: id,
            score,
            rank: i as u32 + 1,
        })
        .collect()
}

/// BM25 evaluated exhaustively over every document.
pub fn brute_bm25(
    weights: &[(String, HashMap<String, u64>)],
    query: &WeightedQuery,
    k: usize,
    params: Bm25Params,
) -> Vec<ScoredDoc> {
    let n = weights.len() as f64;
    let total: u64 = weights.iter().map(|(_, w)| w.values().sum::<u64>()).sum();
    let avgdl = total as f64 / n;
    let qsum: f64 = query.terms().iter().map(|(_, w)| w).sum();
    let mut scored = Vec::new();
    for (id, doc) in weights {
        let dl = doc.values().sum::<u64>() as f64;
        let mut score = 0.0;
        let mut matched = false;
        for (term, qw) in query.terms() {
            let df = weights.iter().filter(|(_, w)| w.contains_key(term)).count() as f64;
            let Some(&w) = doc.get(term) else { continue };
            matched = true;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let w = w as f64;
            let tf_part =
                w * (params.k1 + 1.0) / (w + params.k1 * (1.0 - params.b + params.b * dl / avgdl));
            score += (qw / qsum * idf) * tf_part;
        }
        if matched {
            scored.push((id.clone(), score));
        }
    }
    rank(scored, k)
}

/// Jelinek-Mercer query likelihood evaluated exhaustively. Scores documents
/// that contain at least one query term; skips terms absent from the
/// collection.
pub fn brute_ql(
    weights: &[(String, HashMap<String, u64>)],
    query: &WeightedQuery,
    k: usize,
    lambda: f64,
) -> Vec<ScoredDoc> {
    let total: u64 = weights.iter().map(|(_, w)| w.values().sum::<u64>()).sum();
    let qsum: f64 = query.terms().iter().map(|(_, w)| w).sum();
    let mut scored = Vec::new();
    for (id, doc) in weights {
        if !query.terms().iter().any(|(t, _)| doc.contains_key(t)) {
            continue;
        }
        let dl = doc.values().sum::<u64>() as f64;
        let mut score = 0.0;
        for (term, qw) in query.terms() {
            let ctf: u64 = weights.iter().filter_map(|(_, w)| w.get(term)).sum();
            if ctf == 0 {
                continue;
            }
            let w = doc.get(term).copied().unwrap_or(0) as f64;
            let p = (1.0 - lambda) * w / dl + lambda * ctf as f64 / total as f64;
            score += qw / qsum * p.ln();
        }
        scored.push((id.clone(), score));
    }
    rank(scored, k)
}

pub fn run_bytes(run: &Run, tag: &str) -> Vec<u8> {
    let mut buf = Vec::new();
    termweight::retrieval::write_run_to(&mut buf, run, tag).unwrap();
    buf
}
