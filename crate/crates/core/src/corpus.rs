//! Collections, queries and relevance judgments.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(rename = "id")]
    pub external_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default)]
    pub body: String,
}

impl Document {
    pub fn new(external_id: impl Into<String>, body: impl Into<String>) -> Self {
        Document {
            external_id: external_id.into(),
            title: None,
            body: body.into(),
        }
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    /// Text seen by the analyzer: the title, when present, goes first.
    pub fn text(&self) -> String {
        match &self.title {
            Some(title) if !title.is_empty() => format!("{title} {}", self.body),
            _ => self.body.clone(),
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.external_id.is_empty() {
            return Err("empty document id".into());
        }
        let has_title = self.title.as_deref().is_some_and(|t| !t.is_empty());
        if self.body.is_empty() && !has_title {
            return Err(format!("document `{}` has no text", self.external_id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueryKind {
    Title,
    Description,
    Narrative,
    #[default]
    Generic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub query_id: String,
    pub text: String,
    pub kind: QueryKind,
}

impl Query {
    pub fn new(query_id: impl Into<String>, text: impl Into<String>) -> Self {
        Query {
            query_id: query_id.into(),
            text: text.into(),
            kind: QueryKind::Generic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollectionFormat {
    #[default]
    TsvIdText,
    Jsonl,
}

impl CollectionFormat {
    /// Guesses the format from a file extension; anything but `.jsonl` /
    /// `.json` is treated as TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => CollectionFormat::Jsonl,
            _ => CollectionFormat::TsvIdText,
        }
    }
}

impl FromStr for CollectionFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(CollectionFormat::TsvIdText),
            "jsonl" => Ok(CollectionFormat::Jsonl),
            other => Err(Error::InvalidArgument(format!(
                "unknown collection format `{other}`"
            ))),
        }
    }
}

impl fmt::Display for CollectionFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CollectionFormat::TsvIdText => "tsv",
            CollectionFormat::Jsonl => "jsonl",
        })
    }
}

/// Streaming reader over a collection file. Yields documents in file order
/// and fails on the first malformed line or repeated id.
pub struct CollectionReader<R> {
    lines: std::io::Lines<R>,
    format: CollectionFormat,
    source: String,
    line_no: usize,
    seen: HashSet<String>,
}

impl<R: BufRead> CollectionReader<R> {
    pub fn new(reader: R, format: CollectionFormat, source: impl Into<String>) -> Self {
        CollectionReader {
            lines: reader.lines(),
            format,
            source: source.into(),
            line_no: 0,
            seen: HashSet::new(),
        }
    }

    fn parse_line(&self, line: &str) -> std::result::Result<Document, String> {
        let doc = match self.format {
            CollectionFormat::TsvIdText => {
                let (id, text) = line
                    .split_once('\t')
                    .ok_or_else(|| "expected `id<TAB>text`".to_string())?;
                Document::new(id, text)
            }
            CollectionFormat::Jsonl => {
                serde_json::from_str::<Document>(line).map_err(|e| e.to_string())?
            }
        };
        doc.validate()?;
        Ok(doc)
    }
}

impl<R: BufRead> Iterator for CollectionReader<R> {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() {
                continue;
            }
            let doc = match self.parse_line(line) {
                Ok(doc) => doc,
                Err(msg) => return Some(Err(Error::parse(&self.source, self.line_no, msg))),
            };
            if !self.seen.insert(doc.external_id.clone()) {
                return Some(Err(Error::DuplicateId {
                    kind: "document",
                    id: doc.external_id,
                }));
            }
            return Some(Ok(doc));
        }
    }
}

pub fn open_collection(
    path: &Path,
    format: CollectionFormat,
) -> Result<CollectionReader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(CollectionReader::new(
        BufReader::new(file),
        format,
        path.display().to_string(),
    ))
}

pub fn load_collection(path: &Path, format: CollectionFormat) -> Result<Vec<Document>> {
    open_collection(path, format)?.collect()
}

pub fn write_collection(path: &Path, docs: &[Document], format: CollectionFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for doc in docs {
        match format {
            CollectionFormat::TsvIdText => {
                if doc.title.is_some() {
                    return Err(Error::InvalidArgument(format!(
                        "document `{}` has a title; TSV cannot carry it",
                        doc.external_id
                    )));
                }
                if doc.external_id.contains(['\t', '\n']) || doc.body.contains('\n') {
                    return Err(Error::InvalidArgument(format!(
                        "document `{}` cannot be written as TSV",
                        doc.external_id
                    )));
                }
                writeln!(out, "{}\t{}", doc.external_id, doc.body)?;
            }
            CollectionFormat::Jsonl => {
                serde_json::to_writer(&mut out, doc).map_err(std::io::Error::from)?;
                out.write_all(b"\n")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads `query_id<TAB>text` lines.
pub fn parse_queries(text: &str, source: &str) -> Result<Vec<Query>> {
    let mut seen = HashSet::new();
    let mut queries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let (id, body) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(source, i + 1, "expected `query_id<TAB>text`"))?;
        if id.is_empty() {
            return Err(Error::parse(source, i + 1, "empty query id"));
        }
        if body.trim().is_empty() {
            return Err(Error::parse(
                source,
                i + 1,
                format!("query `{id}` has no text"),
            ));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateId {
                kind: "query",
                id: id.to_string(),
            });
        }
        queries.push(Query::new(id, body));
    }
    Ok(queries)
}

pub fn load_queries(path: &Path) -> Result<Vec<Query>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_queries(&text, &path.display().to_string())
}

pub fn write_queries(path: &Path, queries: &[Query]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for q in queries {
        writeln!(out, "{}\t{}", q.query_id, q.text)?;
    }
    out.flush()?;
    Ok(())
}

/// Graded relevance judgments, `query_id -> external_id -> grade`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) -> Result<()> {
        let docs = self.judgments.entry(query_id.to_string()).or_default();
        if docs.insert(doc_id.to_string(), grade).is_some() {
            return Err(Error::DuplicateId {
                kind: "judgment",
                id: format!("{query_id}/{doc_id}"),
            });
        }
        Ok(())
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> u32 {
        self.judgments
            .get(query_id)
            .and_then(|docs| docs.get(doc_id))
            .copied()
            .unwrap_or(0)
    }

    pub fn judged(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    /// Documents with grade > 0 for the query, in id order.
    pub fn relevant(&self, query_id: &str) -> impl Iterator<Item = &str> {
        self.judgments
            .get(query_id)
            .into_iter()
            .flat_map(|docs| docs.iter())
            .filter(|(_, &g)| g > 0)
            .map(|(d, _)| d.as_str())
    }

    pub fn relevant_count(&self, query_id: &str) -> usize {
        self.relevant(query_id).count()
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    /// Every `(query, doc)` pair with grade > 0.
    pub fn relevant_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.judgments.iter().flat_map(|(q, docs)| {
            docs.iter()
                .filter(|(_, &g)| g > 0)
                .map(move |(d, _)| (q.as_str(), d.as_str()))
        })
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reads whitespace-separated `qid 0 docid grade` lines.
pub fn parse_qrels(text: &str, source: &str) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _, docid, grade] = fields[..] else {
            return Err(Error::parse(
                source,
                i + 1,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        };
        let grade: u32 = grade
            .parse()
            .map_err(|_| Error::parse(source, i + 1, format!("invalid grade `{grade}`")))?;
        qrels.insert(qid, docid, grade)?;
    }
    Ok(qrels)
}

pub fn load_qrels(path: &Path) -> Result<Qrels> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_qrels(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn read(text: &str, format: CollectionFormat) -> Result<Vec<Document>> {
        CollectionReader::new(Cursor::new(text.to_string()), format, "mem").collect()
    }

    #[test]
    fn tsv_line() {
        let docs = read("d1\thello world\n", CollectionFormat::TsvIdText).unwrap();
        assert_eq!(docs, vec![Document::new("d1", "hello world")]);
    }

    #[test]
    fn jsonl_line() {
        let docs = read(
            r#"{"id":"d2","title":"t","body":"b"}"#,
            CollectionFormat::Jsonl,
        )
        .unwrap();
        assert_eq!(docs, vec![Document::new("d2", "b").with_title("t")]);
        assert_eq!(docs[0].text(), "t b");
    }

    #[test]
    fn one_column_tsv_names_line() {
        let err = read("d1\tok\nbroken\n", CollectionFormat::TsvIdText).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_document_id() {
        let err = read("d1\ta\nd1\tb\n", CollectionFormat::TsvIdText).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { .. }));
    }

    #[test]
    fn textless_document_rejected() {
        assert!(read("d1\t\n", CollectionFormat::TsvIdText).is_err());
        assert!(read(r#"{"id":"d1","title":"x"}"#, CollectionFormat::Jsonl).is_ok());
    }

    #[test]
    fn qrels_parse() {
        let qrels = parse_qrels("q1 0 d1 1\n", "mem").unwrap();
        assert_eq!(qrels.grade("q1", "d1"), 1);
        assert_eq!(qrels.relevant("q1").collect::<Vec<_>>(), vec!["d1"]);
    }

    #[test]
    fn qrels_duplicate_pair() {
        assert!(matches!(
            parse_qrels("q1 0 d1 1\nq1 0 d1 1\n", "mem"),
            Err(Error::DuplicateId { .. })
        ));
    }

    #[test]
    fn qrels_bad_grade() {
        assert!(matches!(
            parse_qrels("q1 0 d1 x\n", "mem"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_qrels("q1 0 d1 -1\n", "mem").is_err());
    }

    #[test]
    fn queries_parse() {
        let qs = parse_queries("q1\tvolcanic activity\nq2\tair traffic\n", "mem").unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[1].text, "air traffic");
        assert!(parse_queries("q1\t \n", "mem").is_err());
        assert!(parse_queries("q1\ta\nq1\tb\n", "mem").is_err());
    }

    fn arb_doc() -> impl Strategy<Value = Document> {
        (
            "[a-z0-9]{1,6}",
            proptest::option::of("[a-z ]{1,10}"),
            "[a-zA-Z0-9 .,]{1,30}",
        )
            .prop_map(|(id, title, body)| Document {
                external_id: id,
                title,
                body,
            })
    }

    proptest! {
        #[test]
        fn collection_round_trip(
            docs in proptest::collection::vec(arb_doc(), 0..8),
            jsonl in any::<bool>(),
        ) {
            let mut seen = HashSet::new();
            let docs: Vec<Document> = docs
                .into_iter()
                .filter(|d| seen.insert(d.external_id.clone()))
                .map(|d| if jsonl { d } else { Document { title: None, ..d } })
                .collect();
            let format = if jsonl { CollectionFormat::Jsonl } else { CollectionFormat::TsvIdText };
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("c");
            write_collection(&path, &docs, format).unwrap();
            let back = load_collection(&path, format).unwrap();
            prop_assert_eq!(back, docs);
        }
    }

    #[test]
    fn tsv_round_trip_plain() {
        let docs: Vec<Document> = (0..3)
            .map(|i| Document::new(format!("d{i}"), format!("text {i}")))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsv");
        write_collection(&path, &docs, CollectionFormat::TsvIdText).unwrap();
        assert_eq!(
            load_collection(&path, CollectionFormat::TsvIdText).unwrap(),
            docs
        );
    }
}
