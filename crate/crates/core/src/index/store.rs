//! On-disk index layout.
//!
//! ```text
//! meta.txt       key=value
//! lexicon.tsv    term  df  ctf  offset  len
//! docs.tsv       ordinal  external_id  dl
//! postings.bin   per term, per posting: doc delta, weight,
//!                [position count, position deltas]   (LEB128 varints)
//! checksums.txt  file  crc32 (hex)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::varint;
use super::{DocEntry, IndexMeta, InvertedIndex, LexiconEntry, PostingList};
use crate::analyzer::AnalyzerConfig;
use crate::error::{Error, Result};

pub const FORMAT_NAME: &str = "termweight-index";
pub const FORMAT_VERSION: u32 = 1;

const META: &str = "meta.txt";
const LEXICON: &str = "lexicon.tsv";
const DOCS: &str = "docs.tsv";
const POSTINGS: &str = "postings.bin";
const CHECKSUMS: &str = "checksums.txt";
const SEGMENTS: [&str; 4] = [META, LEXICON, DOCS, POSTINGS];

fn encode(list: &PostingList, out: &mut Vec<u8>) {
    let mut prev = 0u32;
    for p in list.iter() {
        varint::write(out, (p.doc - prev) as u64);
        prev = p.doc;
        varint::write(out, p.weight as u64);
        if let Some(positions) = p.positions {
            varint::write(out, positions.len() as u64);
            let mut last = 0u32;
            for &pos in positions {
                varint::write(out, (pos - last) as u64);
                last = pos;
            }
        }
    }
}

pub(super) fn encoded_len(list: &PostingList) -> u64 {
    let mut len = 0;
    let mut prev = 0u32;
    for p in list.iter() {
        len += varint::len((p.doc - prev) as u64) + varint::len(p.weight as u64);
        prev = p.doc;
        if let Some(positions) = p.positions {
            len += varint::len(positions.len() as u64);
            let mut last = 0u32;
            for &pos in positions {
                len += varint::len((pos - last) as u64);
                last = pos;
            }
        }
    }
    len
}

fn decode(buf: &[u8], df: u32, positional: bool) -> Option<PostingList> {
    let mut pos = 0usize;
    let mut list = PostingList {
        positions: positional.then(Vec::new),
        ..PostingList::default()
    };
    let mut doc = 0u64;
    for i in 0..df {
        let delta = varint::read(buf, &mut pos)?;
        if i > 0 && delta == 0 {
            return None;
        }
        doc += delta;
        list.docs.push(u32::try_from(doc).ok()?);
        list.weights
            .push(u32::try_from(varint::read(buf, &mut pos)?).ok()?);
        if let Some(all) = list.positions.as_mut() {
            let count = varint::read(buf, &mut pos)?;
            let mut positions = Vec::with_capacity(count.min(1 << 16) as usize);
            let mut at = 0u64;
            for j in 0..count {
                let d = varint::read(buf, &mut pos)?;
                if j > 0 && d == 0 {
                    return None;
                }
                at += d;
                positions.push(u32::try_from(at).ok()?);
            }
            all.push(positions);
        }
    }
    (pos == buf.len()).then_some(list)
}

fn meta_text(meta: &IndexMeta) -> String {
    let a = &meta.analyzer;
    let stopwords: Vec<&str> = a.stopwords.iter().map(String::as_str).collect();
    let lines = [
        format!("format={FORMAT_NAME}"),
        format!("version={FORMAT_VERSION}"),
        format!("doc_count={}", meta.doc_count),
        format!("total_weight={}", meta.total_weight),
        format!("avgdl={}", meta.avgdl),
        "doc_length=sum_of_stored_weights".to_string(),
        format!("weighted={}", meta.weighted),
        format!(
            "scale={}",
            meta.scale
                .map_or_else(|| "none".to_string(), |s| s.to_string())
        ),
        format!("positional={}", meta.positional),
        format!("lowercase={}", a.lowercase),
        format!("stem={}", a.stem),
        format!("stopwords={}", stopwords.join(",")),
    ];
    lines.join("\n") + "\n"
}

fn check_field(field: &str, what: &str) -> Result<()> {
    if field.is_empty() || field.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidArgument(format!(
            "{what} `{}` cannot be stored in a TSV field",
            field.escape_debug()
        )));
    }
    Ok(())
}

pub(super) fn persist(index: &InvertedIndex, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut postings = Vec::new();
    let mut lexicon = String::new();
    for (entry, list) in index.iter_terms() {
        check_field(&entry.term, "term")?;
        debug_assert_eq!(entry.postings_offset, postings.len() as u64);
        encode(list, &mut postings);
        lexicon.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            entry.term, entry.df, entry.ctf, entry.postings_offset, entry.postings_len
        ));
    }
    let mut docs = String::new();
    for (ordinal, doc) in index.docs().iter().enumerate() {
        check_field(&doc.external_id, "document id")?;
        docs.push_str(&format!("{ordinal}\t{}\t{}\n", doc.external_id, doc.dl));
    }

    let contents: [(&str, Vec<u8>); 4] = [
        (META, meta_text(index.meta()).into_bytes()),
        (LEXICON, lexicon.into_bytes()),
        (DOCS, docs.into_bytes()),
        (POSTINGS, postings),
    ];
    let mut checksums = String::new();
    for (name, bytes) in &contents {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        checksums.push_str(&format!("{name}\t{:08x}\n", crc32fast::hash(bytes)));
    }
    let path = dir.join(CHECKSUMS);
    fs::write(&path, checksums).map_err(|e| Error::io(&path, e))
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Corrupt(msg.into())
}

fn parse_num<T: std::str::FromStr>(value: &str, what: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| corrupt(format!("invalid {what} `{value}`")))
}

fn parse_meta(text: &str) -> Result<IndexMeta> {
    let mut kv = BTreeMap::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| corrupt(format!("bad meta line `{line}`")))?;
        kv.insert(k, v);
    }
    let get = |key: &str| {
        kv.get(key)
            .copied()
            .ok_or_else(|| corrupt(format!("meta.txt lacks `{key}`")))
    };
    if get("format")? != FORMAT_NAME {
        return Err(Error::Format(format!("not a {FORMAT_NAME} directory")));
    }
    let version: u32 = parse_num(get("version")?, "version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let stopwords = get("stopwords")?;
    let analyzer = AnalyzerConfig {
        lowercase: parse_num(get("lowercase")?, "lowercase")?,
        stem: get("stem")?.parse()?,
        stopwords: stopwords
            .split(',')
            .filter(|w| !w.is_empty())
            .map(str::to_string)
            .collect(),
    };
    let scale = match get("scale")? {
        "none" => None,
        s => Some(parse_num(s, "scale")?),
    };
    Ok(IndexMeta {
        doc_count: parse_num(get("doc_count")?, "doc_count")?,
        total_weight: parse_num(get("total_weight")?, "total_weight")?,
        avgdl: parse_num(get("avgdl")?, "avgdl")?,
        analyzer,
        weighted: parse_num(get("weighted")?, "weighted")?,
        scale,
        positional: parse_num(get("positional")?, "positional")?,
    })
}

fn read(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let path = dir.join(name);
    fs::read(&path).map_err(|e| Error::io(&path, e))
}

fn utf8(bytes: Vec<u8>, name: &str) -> Result<String> {
    String::from_utf8(bytes).map_err(|_| corrupt(format!("{name} is not UTF-8")))
}

pub(super) fn load(dir: &Path) -> Result<InvertedIndex> {
    let checksums = utf8(read(dir, CHECKSUMS)?, CHECKSUMS)?;
    let expected: BTreeMap<&str, &str> = checksums
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .collect();
    let mut segments = BTreeMap::new();
    for name in SEGMENTS {
        let bytes = read(dir, name)?;
        let want = expected
            .get(name)
            .ok_or_else(|| corrupt(format!("no checksum for {name}")))?;
        if format!("{:08x}", crc32fast::hash(&bytes)) != *want {
            return Err(Error::Checksum(name.to_string()));
        }
        segments.insert(name, bytes);
    }
    let mut take = |name: &str| segments.remove(name).expect("segment read above");

    let meta = parse_meta(&utf8(take(META), META)?)?;

    let mut docs = Vec::new();
    for (i, line) in utf8(take(DOCS), DOCS)?.lines().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        let [ordinal, id, dl] = fields[..] else {
            return Err(corrupt(format!("docs.tsv line {}", i + 1)));
        };
        if parse_num::<usize>(ordinal, "ordinal")? != i {
            return Err(corrupt(format!("docs.tsv line {} out of order", i + 1)));
        }
        docs.push(DocEntry {
            external_id: id.to_string(),
            dl: parse_num(dl, "dl")?,
        });
    }
    if docs.len() as u64 != meta.doc_count {
        return Err(corrupt("doc_count disagrees with docs.tsv"));
    }

    let postings_bytes = take(POSTINGS);
    let mut lexicon = Vec::new();
    let mut postings = Vec::new();
    let mut expected_offset = 0u64;
    for (i, line) in utf8(take(LEXICON), LEXICON)?.lines().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        let [term, df, ctf, offset, len] = fields[..] else {
            return Err(corrupt(format!("lexicon.tsv line {}", i + 1)));
        };
        let entry = LexiconEntry {
            term: term.to_string(),
            df: parse_num(df, "df")?,
            ctf: parse_num(ctf, "ctf")?,
            postings_offset: parse_num(offset, "offset")?,
            postings_len: parse_num(len, "len")?,
        };
        if entry.postings_offset != expected_offset {
            return Err(corrupt(format!("term `{term}` has a gap in postings.bin")));
        }
        expected_offset += entry.postings_len;
        let start = entry.postings_offset as usize;
        let slice = postings_bytes
            .get(start..start + entry.postings_len as usize)
            .ok_or_else(|| corrupt(format!("postings of `{term}` out of range")))?;
        let list = decode(slice, entry.df, meta.positional)
            .ok_or_else(|| corrupt(format!("postings of `{term}` are malformed")))?;
        let ctf: u64 = list.weights.iter().map(|&w| w as u64).sum();
        if ctf != entry.ctf
            || list.docs.iter().any(|&d| d as usize >= docs.len())
            || list.weights.contains(&0)
        {
            return Err(corrupt(format!(
                "postings of `{term}` disagree with lexicon"
            )));
        }
        lexicon.push(entry);
        postings.push(list);
    }
    if expected_offset != postings_bytes.len() as u64 {
        return Err(corrupt("postings.bin has trailing bytes"));
    }
    Ok(InvertedIndex::from_parts(meta, lexicon, postings, docs))
}
