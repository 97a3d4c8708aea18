//! Run evaluation: MRR, MAP, NDCG, recall at depth, per-query win/tie/loss
//! between two runs, and grid sweeps over retrieval parameters.
//!
//! Unjudged documents count as non-relevant. Only queries present in the run
//! are evaluated; those without any relevant judgment are skipped and counted
//! in `skipped`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::Qrels;
use crate::error::{Error, Result};
use crate::index::InvertedIndex;
use crate::retrieval::{search_batch, Bm25Params, Model, Run, ScoredDoc, SearchQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Mrr { k: u32 },
    Map { k: u32 },
    Ndcg { k: u32 },
    Recall { depth: u32 },
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Mrr { .. } => "mrr",
            Metric::Map { .. } => "map",
            Metric::Ndcg { .. } => "ndcg",
            Metric::Recall { .. } => "recall",
        }
    }

    pub fn cutoff(&self) -> u32 {
        match *self {
            Metric::Mrr { k } | Metric::Map { k } | Metric::Ndcg { k } => k,
            Metric::Recall { depth } => depth,
        }
    }

    /// Builds a metric from its name; `k = None` picks the usual cutoff
    /// (MRR@10, MAP@1000, NDCG@20, recall@1000).
    pub fn parse(name: &str, k: Option<u32>) -> Result<Self> {
        let metric = match name {
            "mrr" => Metric::Mrr { k: k.unwrap_or(10) },
            "map" => Metric::Map {
                k: k.unwrap_or(1000),
            },
            "ndcg" => Metric::Ndcg { k: k.unwrap_or(20) },
            "recall" => Metric::Recall {
                depth: k.unwrap_or(1000),
            },
            other => return Err(Error::InvalidArgument(format!("unknown metric `{other}`"))),
        };
        if metric.cutoff() == 0 {
            return Err(Error::InvalidArgument(
                "metric cutoff must be at least 1".into(),
            ));
        }
        Ok(metric)
    }

    fn score(&self, ranked: &[ScoredDoc], qrels: &Qrels, qid: &str, relevant: usize) -> f64 {
        let cutoff = self.cutoff() as usize;
        let top = &ranked[..ranked.len().min(cutoff)];
        let grade = |h: &ScoredDoc| qrels.grade(qid, &h.external_id);
        match self {
            Metric::Mrr { .. } => top
                .iter()
                .position(|h| grade(h) > 0)
                .map_or(0.0, |i| 1.0 / (i + 1) as f64),
            Metric::Map { .. } => {
                let mut hits = 0usize;
                let mut sum = 0.0;
                for (i, h) in top.iter().enumerate() {
                    if grade(h) > 0 {
                        hits += 1;
                        sum += hits as f64 / (i + 1) as f64;
                    }
                }
                sum / relevant as f64
            }
            Metric::Ndcg { .. } => {
                let gain = |g: u32| 2f64.powi(g as i32) - 1.0;
                let discount = |i: usize| ((i + 2) as f64).log2();
                let dcg: f64 = top
                    .iter()
                    .enumerate()
                    .map(|(i, h)| gain(grade(h)) / discount(i))
                    .sum();
                let mut ideal: Vec<u32> = qrels
                    .judged(qid)
                    .map(|d| d.values().copied().collect())
                    .unwrap_or_default();
                ideal.sort_unstable_by(|a, b| b.cmp(a));
                let idcg: f64 = ideal
                    .iter()
                    .take(cutoff)
                    .enumerate()
                    .map(|(i, &g)| gain(g) / discount(i))
                    .sum();
                dcg / idcg
            }
            Metric::Recall { .. } => {
                top.iter().filter(|h| grade(h) > 0).count() as f64 / relevant as f64
            }
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.name(), self.cutoff())
    }
}

impl FromStr for Metric {
    type Err = Error;

    /// Accepts `name` or `name@k`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('@') {
            Some((name, k)) => {
                let k = k
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("invalid cutoff in `{s}`")))?;
                Metric::parse(name, Some(k))
            }
            None => Metric::parse(s, None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub metric: String,
    pub k: u32,
    #[serde(skip)]
    pub per_query: BTreeMap<String, f64>,
    pub mean: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

impl MetricReport {
    pub fn summary_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (qid, value) in &self.per_query {
            writeln!(out, "{qid}\t{value}")?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn evaluate(run: &Run, qrels: &Qrels, metric: Metric) -> Result<MetricReport> {
    if metric.cutoff() == 0 {
        return Err(Error::InvalidArgument(
            "metric cutoff must be at least 1".into(),
        ));
    }
    let lists: Vec<(&str, &[ScoredDoc])> = run.iter().collect();
    let values: Vec<(&str, Option<f64>)> = lists
        .par_iter()
        .map(|(qid, ranked)| {
            let relevant = qrels.relevant_count(qid);
            if relevant == 0 {
                return (*qid, None);
            }
            (*qid, Some(metric.score(ranked, qrels, qid, relevant)))
        })
        .collect();
    let per_query: BTreeMap<String, f64> = values
        .iter()
        .filter_map(|(q, v)| v.map(|v| (q.to_string(), v)))
        .collect();
    let evaluated = per_query.len();
    let mean = if evaluated == 0 {
        0.0
    } else {
        per_query.values().sum::<f64>() / evaluated as f64
    };
    Ok(MetricReport {
        metric: metric.name().to_string(),
        k: metric.cutoff(),
        per_query,
        mean,
        evaluated,
        skipped: values.len() - evaluated,
    })
}

pub fn mrr_at_k(run: &Run, qrels: &Qrels, k: u32) -> Result<MetricReport> {
    evaluate(run, qrels, Metric::Mrr { k })
}

pub fn map_at_k(run: &Run, qrels: &Qrels, k: u32) -> Result<MetricReport> {
    evaluate(run, qrels, Metric::Map { k })
}

pub fn ndcg_at_k(run: &Run, qrels: &Qrels, k: u32) -> Result<MetricReport> {
    evaluate(run, qrels, Metric::Ndcg { k })
}

pub fn recall_at_depth(run: &Run, qrels: &Qrels, depth: u32) -> Result<MetricReport> {
    evaluate(run, qrels, Metric::Recall { depth })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WinTieLoss {
    pub wins: u32,
    pub ties: u32,
    pub losses: u32,
}

/// Counts queries where run `a` scores above, within `epsilon` of, or below
/// run `b`.
pub fn win_tie_loss(
    a: &Run,
    b: &Run,
    qrels: &Qrels,
    metric: Metric,
    epsilon: f64,
) -> Result<WinTieLoss> {
    let qa: HashSet<&str> = a.query_ids().collect();
    let qb: HashSet<&str> = b.query_ids().collect();
    if qa != qb {
        let mut diff: Vec<&str> = qa.symmetric_difference(&qb).copied().collect();
        diff.sort_unstable();
        diff.truncate(5);
        return Err(Error::QuerySetMismatch(format!(
            "differing queries include {}",
            diff.join(", ")
        )));
    }
    let ra = evaluate(a, qrels, metric)?;
    let rb = evaluate(b, qrels, metric)?;
    let mut out = WinTieLoss {
        wins: 0,
        ties: 0,
        losses: 0,
    };
    for (qid, va) in &ra.per_query {
        let vb = rb.per_query[qid];
        if (va - vb).abs() <= epsilon {
            out.ties += 1;
        } else if *va > vb {
            out.wins += 1;
        } else {
            out.losses += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepGrid {
    Bm25 { k1: Vec<f64>, b: Vec<f64> },
    Ql { lambda: Vec<f64> },
}

impl SweepGrid {
    pub fn points(&self) -> Vec<Model> {
        match self {
            SweepGrid::Bm25 { k1, b } => k1
                .iter()
                .flat_map(|&k1| b.iter().map(move |&b| Model::Bm25(Bm25Params { k1, b })))
                .collect(),
            SweepGrid::Ql { lambda } => lambda.iter().map(|&l| Model::Ql { lambda: l }).collect(),
        }
    }
}

fn param_tuple(model: &Model) -> Vec<f64> {
    match model {
        Model::Bm25(p) => vec![p.k1, p.b],
        Model::Ql { lambda } => vec![*lambda],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub best: Model,
    pub best_value: f64,
    /// Every grid point with its metric mean, in grid order.
    pub table: Vec<(Model, f64)>,
}

impl SweepResult {
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (model, value) in &self.table {
            let params: Vec<String> = param_tuple(model).iter().map(f64::to_string).collect();
            writeln!(out, "{}\t{}\t{value}", model.name(), params.join("\t"))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Evaluates every grid point and returns the best by metric mean. Ties go
/// to the lexicographically smallest parameter tuple.
pub fn sweep(
    index: &InvertedIndex,
    queries: &[(String, SearchQuery)],
    qrels: &Qrels,
    grid: &SweepGrid,
    metric: Metric,
    k: u32,
) -> Result<SweepResult> {
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty parameter grid".into()));
    }
    let mut table = Vec::with_capacity(points.len());
    for model in points {
        let run = search_batch(index, queries, k, model)?;
        table.push((model, evaluate(&run, qrels, metric)?.mean));
    }
    let (best, best_value) = table
        .iter()
        .copied()
        .reduce(|acc, cand| {
            let better = cand.1 > acc.1
                || (cand.1 == acc.1
                    && param_tuple(&cand.0)
                        .partial_cmp(&param_tuple(&acc.0))
                        .is_some_and(|o| o.is_lt()));
            if better {
                cand
            } else {
                acc
            }
        })
        .expect("non-empty grid");
    Ok(SweepResult {
        best,
        best_value,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_qrels;

    fn run_of(lists: &[(&str, &[&str])]) -> Run {
        let mut run = Run::new();
        for (qid, docs) in lists {
            run.insert(
                *qid,
                docs.iter()
                    .enumerate()
                    .map(|(i, d)| ScoredDoc {
                        external_id: d.to_string(),
                        score: -(i as f64),
                        rank: i as u32 + 1,
                    })
                    .collect(),
            );
        }
        run
    }

    fn qrels(text: &str) -> Qrels {
        parse_qrels(text, "mem").unwrap()
    }

    #[test]
    fn mrr_examples() {
        let q = qrels("q 0 r 1\n");
        assert_eq!(
            mrr_at_k(&run_of(&[("q", &["r", "x"])]), &q, 10)
                .unwrap()
                .mean,
            1.0
        );
        assert_eq!(
            mrr_at_k(&run_of(&[("q", &["x", "y", "r"])]), &q, 10)
                .unwrap()
                .mean,
            1.0 / 3.0
        );
        let deep: Vec<String> = (0..10).map(|i| format!("x{i}")).collect();
        let mut docs: Vec<&str> = deep.iter().map(String::as_str).collect();
        docs.push("r");
        assert_eq!(
            mrr_at_k(&run_of(&[("q", &docs)]), &q, 10).unwrap().mean,
            0.0
        );
    }

    #[test]
    fn mrr_skips_unjudged_queries() {
        let q = qrels("q 0 r 1\nz 0 r 0\n");
        let report = mrr_at_k(
            &run_of(&[("q", &["r"]), ("u", &["r"]), ("z", &["r"])]),
            &q,
            10,
        )
        .unwrap();
        assert_eq!(report.evaluated, 1);
        assert_eq!(report.skipped, 2);
    }

    #[test]
    fn map_examples() {
        let q = qrels("q 0 a 1\nq 0 b 1\n");
        let report = map_at_k(&run_of(&[("q", &["a", "x", "b"])]), &q, 1000).unwrap();
        assert!((report.mean - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(
            map_at_k(&run_of(&[("q", &["b", "a", "x"])]), &q, 1000)
                .unwrap()
                .mean,
            1.0
        );
        assert_eq!(
            map_at_k(&run_of(&[("q", &["x", "y"])]), &q, 1000)
                .unwrap()
                .mean,
            0.0
        );
    }

    #[test]
    fn ndcg_examples() {
        let q = qrels("q 0 r 1\n");
        assert_eq!(
            ndcg_at_k(&run_of(&[("q", &["r"])]), &q, 20).unwrap().mean,
            1.0
        );
        let v = ndcg_at_k(&run_of(&[("q", &["x", "r"])]), &q, 20)
            .unwrap()
            .mean;
        assert!((v - 1.0 / 3f64.log2()).abs() < 1e-12);
        assert!((v - 0.6309).abs() < 1e-4);
        let graded = qrels("q 0 a 3\nq 0 b 1\nq 0 c 2\nq 0 d 0\n");
        let ideal = ndcg_at_k(&run_of(&[("q", &["a", "c", "b", "d"])]), &graded, 20).unwrap();
        assert!((ideal.mean - 1.0).abs() < 1e-12);
        let zero = qrels("q 0 d 0\n");
        assert_eq!(
            ndcg_at_k(&run_of(&[("q", &["d"])]), &zero, 20)
                .unwrap()
                .skipped,
            1
        );
    }

    #[test]
    fn recall_examples() {
        let q = qrels("q 0 r 1\n");
        let docs = ["a", "b", "c", "d", "r"];
        let run = run_of(&[("q", &docs)]);
        assert_eq!(recall_at_depth(&run, &q, 10).unwrap().mean, 1.0);
        assert_eq!(recall_at_depth(&run, &q, 4).unwrap().mean, 0.0);
        let q4 = qrels("q 0 r1 1\nq 0 r2 1\nq 0 r3 1\nq 0 r4 1\n");
        let run = run_of(&[("q", &["r1", "x", "r3", "y"])]);
        assert_eq!(recall_at_depth(&run, &q4, 100).unwrap().mean, 0.5);
    }

    #[test]
    fn win_tie_loss_examples() {
        let q = qrels("q1 0 r1 1\nq2 0 r2 1\nq3 0 r3 1\n");
        let good = run_of(&[("q1", &["r1"]), ("q2", &["r2"]), ("q3", &["r3"])]);
        let bad = run_of(&[("q1", &["x"]), ("q2", &["x"]), ("q3", &["x"])]);
        let m = Metric::Mrr { k: 10 };
        assert_eq!(
            win_tie_loss(&good, &good, &q, m, 0.0).unwrap(),
            WinTieLoss {
                wins: 0,
                ties: 3,
                losses: 0
            }
        );
        assert_eq!(
            win_tie_loss(&good, &bad, &q, m, 0.0).unwrap(),
            WinTieLoss {
                wins: 3,
                ties: 0,
                losses: 0
            }
        );
        assert_eq!(
            win_tie_loss(&bad, &good, &q, m, 0.0).unwrap(),
            WinTieLoss {
                wins: 0,
                ties: 0,
                losses: 3
            }
        );
        let partial = run_of(&[("q1", &["r1"])]);
        assert!(matches!(
            win_tie_loss(&good, &partial, &q, m, 0.0),
            Err(Error::QuerySetMismatch(_))
        ));
    }

    #[test]
    fn metric_names() {
        assert_eq!("mrr".parse::<Metric>().unwrap(), Metric::Mrr { k: 10 });
        assert_eq!("ndcg@5".parse::<Metric>().unwrap(), Metric::Ndcg { k: 5 });
        assert_eq!("map".parse::<Metric>().unwrap(), Metric::Map { k: 1000 });
        assert!("mrr@0".parse::<Metric>().is_err());
        assert!("p@10".parse::<Metric>().is_err());
        let r = mrr_at_k(&run_of(&[("q", &["r"])]), &qrels("q 0 r 1\n"), 10).unwrap();
        assert_eq!(
            r.summary_json(),
            r#"{"metric":"mrr","k":10,"mean":1.0,"evaluated":1,"skipped":0}"#
        );
    }
}
