//! Ground-truth term importance from relevance data, and the JSON Lines
//! weight-file format used to pass term weights between pipeline stages.
//!
//! Document targets are query term recall: the fraction of a document's
//! relevant queries that contain the term. Query targets are term recall: the
//! fraction of a query's relevant documents that contain the term. Both are
//! computed on analyzed terms, with set semantics on the containing side.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::analyzer::AnalyzerConfig;
use crate::corpus::{Document, Qrels, Query};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TermTargets {
    pub owner_id: String,
    pub weights: BTreeMap<String, f64>,
    /// Number of relevant queries (for documents) or relevant documents (for
    /// queries) the ratios were computed over.
    pub support: u32,
}

impl TermTargets {
    pub fn into_record(self) -> WeightRecord {
        WeightRecord {
            owner_id: self.owner_id,
            weights: self.weights,
        }
    }
}

/// Real-valued weights for the analyzed terms of one document or query.
/// Values are unbounded here; negative weights are dropped by consumers.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRecord {
    pub owner_id: String,
    pub weights: BTreeMap<String, f64>,
}

impl WeightRecord {
    pub fn new(owner_id: impl Into<String>) -> Self {
        WeightRecord {
            owner_id: owner_id.into(),
            weights: BTreeMap::new(),
        }
    }

    pub fn with(mut self, term: impl Into<String>, weight: f64) -> Self {
        self.weights.insert(term.into(), weight);
        self
    }

    pub fn get(&self, term: &str) -> Option<f64> {
        self.weights.get(term).copied()
    }
}

/// Weight records keyed by owner id.
#[derive(Debug, Clone, Default)]
pub struct WeightTable {
    records: HashMap<String, WeightRecord>,
}

impl WeightTable {
    pub fn from_records(records: impl IntoIterator<Item = WeightRecord>) -> Result<Self> {
        let mut table = HashMap::new();
        for record in records {
            if table.contains_key(&record.owner_id) {
                return Err(Error::DuplicateId {
                    kind: "weight record",
                    id: record.owner_id,
                });
            }
            table.insert(record.owner_id.clone(), record);
        }
        Ok(WeightTable { records: table })
    }

    pub fn get(&self, owner_id: &str) -> Option<&WeightRecord> {
        self.records.get(owner_id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn term_set(analyzer: &AnalyzerConfig, text: &str) -> HashSet<String> {
    analyzer.analyze(text).into_iter().collect()
}

fn distinct_in_order(terms: Vec<String>) -> Vec<String> {
    let mut seen = HashSet::new();
    terms
        .into_iter()
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

/// Query term recall targets, one per document with at least one relevant
/// query, in collection order. Every analyzed term of the document gets a
/// target, zero included.
pub fn compute_qtr(
    qrels: &Qrels,
    queries: &[Query],
    docs: &[Document],
    analyzer: &AnalyzerConfig,
) -> Result<Vec<TermTargets>> {
    let analyzer = analyzer.without_stopwords();
    let query_terms: HashMap<&str, HashSet<String>> = queries
        .iter()
        .map(|q| (q.query_id.as_str(), term_set(&analyzer, &q.text)))
        .collect();

    let mut relevant_queries: HashMap<&str, Vec<&HashSet<String>>> = HashMap::new();
    for (qid, doc_id) in qrels.relevant_pairs() {
        let terms = query_terms
            .get(qid)
            .ok_or_else(|| Error::MissingQuery(qid.to_string()))?;
        relevant_queries.entry(doc_id).or_default().push(terms);
    }

    let targets = docs
        .par_iter()
        .filter_map(|doc| {
            let relevant = relevant_queries.get(doc.external_id.as_str())?;
            let support = relevant.len() as f64;
            let weights = distinct_in_order(analyzer.analyze(&doc.text()))
                .into_iter()
                .map(|term| {
                    let hits = relevant.iter().filter(|q| q.contains(&term)).count();
                    (term, hits as f64 / support)
                })
                .collect();
            Some(TermTargets {
                owner_id: doc.external_id.clone(),
                weights,
                support: relevant.len() as u32,
            })
        })
        .collect();
    Ok(targets)
}

/// Term recall targets, one per query with at least one relevant document,
/// in query order.
pub fn compute_tr(
    qrels: &Qrels,
    queries: &[Query],
    docs: &[Document],
    analyzer: &AnalyzerConfig,
) -> Result<Vec<TermTargets>> {
    let analyzer = analyzer.without_stopwords();
    let needed: HashSet<&str> = queries
        .iter()
        .flat_map(|q| qrels.relevant(&q.query_id))
        .collect();
    let doc_terms: HashMap<&str, HashSet<String>> = docs
        .par_iter()
        .filter(|d| needed.contains(d.external_id.as_str()))
        .map(|d| (d.external_id.as_str(), term_set(&analyzer, &d.text())))
        .collect();

    let mut targets = Vec::new();
    for query in queries {
        let relevant: Vec<&HashSet<String>> = qrels
            .relevant(&query.query_id)
            .map(|d| {
                doc_terms
                    .get(d)
                    .ok_or_else(|| Error::MissingDocument(d.to_string()))
            })
            .collect::<Result<_>>()?;
        if relevant.is_empty() {
            continue;
        }
        let support = relevant.len() as f64;
        let weights = distinct_in_order(analyzer.analyze(&query.text))
            .into_iter()
            .map(|term| {
                let hits = relevant.iter().filter(|d| d.contains(&term)).count();
                (term, hits as f64 / support)
            })
            .collect();
        targets.push(TermTargets {
            owner_id: query.query_id.clone(),
            weights,
            support: relevant.len() as u32,
        });
    }
    Ok(targets)
}

/// Formats a weight with 9 significant digits. Magnitudes in `[1e-4, 1e9)`
/// are written as plain decimals, anything else in exponent form. Trailing
/// zeros are trimmed.
pub fn format_weight(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    if x == 0.0 {
        return Ok("0".to_string());
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();

    if !(-4..=8).contains(&exp) {
        let (lead, rest) = digits.split_at(1);
        let rest = rest.trim_end_matches('0');
        return Ok(if rest.is_empty() {
            format!("{sign}{lead}e{exp}")
        } else {
            format!("{sign}{lead}.{rest}e{exp}")
        });
    }

    let (int_part, frac_part) = if exp >= 0 {
        let split = exp as usize + 1;
        (digits[..split].to_string(), digits[split..].to_string())
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        ("0".to_string(), format!("{zeros}{digits}"))
    };
    let frac_part = frac_part.trim_end_matches('0');
    Ok(if frac_part.is_empty() {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    })
}

pub fn write_weight_line(out: &mut impl Write, record: &WeightRecord) -> Result<()> {
    if record.owner_id.is_empty() {
        return Err(Error::InvalidArgument(
            "empty owner id in weight record".into(),
        ));
    }
    let id = serde_json::to_string(&record.owner_id).map_err(std::io::Error::from)?;
    write!(out, "{{\"id\":{id},\"weights\":{{")?;
    for (i, (term, weight)) in record.weights.iter().enumerate() {
        if i > 0 {
            out.write_all(b",")?;
        }
        let term = serde_json::to_string(term).map_err(std::io::Error::from)?;
        write!(out, "{term}:{}", format_weight(*weight)?)?;
    }
    out.write_all(b"}}\n")?;
    Ok(())
}

pub fn write_weights<'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a WeightRecord>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        write_weight_line(&mut out, record)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    weights: BTreeMap<String, f64>,
}

/// Reads a weight file. Fails on malformed lines (naming the line), empty ids
/// and repeated owners.
pub fn read_weights_from(reader: impl BufRead, source: &str) -> Result<Vec<WeightRecord>> {
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(source, i + 1, e.to_string()))?;
        if raw.id.is_empty() {
            return Err(Error::parse(source, i + 1, "empty id"));
        }
        if !seen.insert(raw.id.clone()) {
            return Err(Error::DuplicateId {
                kind: "weight record",
                id: raw.id,
            });
        }
        records.push(WeightRecord {
            owner_id: raw.id,
            weights: raw.weights,
        });
    }
    Ok(records)
}

pub fn read_weights(path: &Path) -> Result<Vec<WeightRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_weights_from(BufReader::new(file), &path.display().to_string())
}
