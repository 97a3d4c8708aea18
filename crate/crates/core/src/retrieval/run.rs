use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub external_id: String,
    pub score: f64,
    /// 1-based.
    pub rank: u32,
}

/// Ranked lists keyed by query id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Run {
    lists: BTreeMap<String, Vec<ScoredDoc>>,
}

impl Run {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: impl Into<String>, ranked: Vec<ScoredDoc>) {
        self.lists.insert(query_id.into(), ranked);
    }

    pub fn get(&self, query_id: &str) -> Option<&[ScoredDoc]> {
        self.lists.get(query_id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[ScoredDoc])> {
        self.lists.iter().map(|(q, l)| (q.as_str(), l.as_slice()))
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.lists.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// Each list cut to its first `depth` entries.
    pub fn truncated(&self, depth: u32) -> Run {
        Run {
            lists: self
                .lists
                .iter()
                .map(|(q, l)| (q.clone(), l.iter().take(depth as usize).cloned().collect()))
                .collect(),
        }
    }
}

fn check_tag(tag: &str) -> Result<()> {
    if tag.is_empty() || tag.contains(char::is_whitespace) {
        return Err(Error::InvalidArgument(format!("invalid run tag `{tag}`")));
    }
    Ok(())
}

/// Writes `qid Q0 docid rank score tag` lines, scores with six decimals.
pub fn write_run_to(out: &mut impl Write, run: &Run, tag: &str) -> Result<()> {
    check_tag(tag)?;
    for (qid, list) in run.iter() {
        for hit in list {
            writeln!(
                out,
                "{qid} Q0 {} {} {:.6} {tag}",
                hit.external_id, hit.rank, hit.score
            )?;
        }
    }
    Ok(())
}

pub fn write_run(path: &Path, run: &Run, tag: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_run_to(&mut out, run, tag)?;
    out.flush()?;
    Ok(())
}

/// Writes the run cut to `depth` documents per query, the candidate set a
/// downstream re-ranker consumes.
pub fn export_candidates(run: &Run, depth: u32, tag: &str, path: &Path) -> Result<()> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    write_run(path, &run.truncated(depth), tag)
}

pub fn read_run_from(reader: impl BufRead, source: &str) -> Result<Run> {
    let mut lists: BTreeMap<String, Vec<ScoredDoc>> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _, docid, rank, score, _tag] = fields[..] else {
            return Err(Error::parse(
                source,
                i + 1,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        };
        let rank: u32 = rank
            .parse()
            .map_err(|_| Error::parse(source, i + 1, format!("invalid rank `{rank}`")))?;
        let score: f64 = score
            .parse()
            .map_err(|_| Error::parse(source, i + 1, format!("invalid score `{score}`")))?;
        lists.entry(qid.to_string()).or_default().push(ScoredDoc {
            external_id: docid.to_string(),
            score,
            rank,
        });
    }
    for (qid, list) in lists.iter_mut() {
        list.sort_by_key(|h| h.rank);
        let mut seen = HashSet::new();
        for pair in list.windows(2) {
            if pair[0].rank == pair[1].rank {
                return Err(Error::parse(
                    source,
                    0,
                    format!("query `{qid}` repeats rank {}", pair[0].rank),
                ));
            }
        }
        for hit in list.iter() {
            if !seen.insert(hit.external_id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "run entry",
                    id: format!("{qid}/{}", hit.external_id),
                });
            }
        }
    }
    Ok(Run { lists })
}

pub fn read_run(path: &Path) -> Result<Run> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_run_from(BufReader::new(file), &path.display().to_string())
}
