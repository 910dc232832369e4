//! Click-log and document TSVs, and the ingested corpus directory.
//!
//! Click log: `user_id ⇥ timestamp ⇥ query_text ⇥ candidates ⇥ clicks`, the
//! last two comma-separated (clicks may be empty). Documents:
//! `doc_id ⇥ text`. A corpus directory holds `docs.tsv`, one click log per
//! partition (`history.tsv`, `train.tsv`, `validation.tsv`, `test.tsv`) and
//! `split.txt`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use topirank_core::corpus::{self, Document, DocumentTable, Impression, Limits, Query, SplitConfig, SplitCorpus};

use super::{read_text, write_with};
use crate::error::{Error, Result};

pub fn parse_documents(path: &Path, text: &str, limits: &Limits) -> Result<DocumentTable> {
    let mut table = DocumentTable::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, body) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected `doc_id<TAB>text`"))?;
        if id.is_empty() {
            return Err(Error::parse(path, i + 1, "empty doc_id"));
        }
        table.insert(Document::new(id, body, limits));
    }
    Ok(table)
}

pub fn read_documents(path: &Path, limits: &Limits) -> Result<DocumentTable> {
    parse_documents(path, &read_text(path)?, limits)
}

/// Writes tokens joined by spaces, so reading the file back reproduces the
/// table.
pub fn write_documents<'a>(path: &Path, docs: impl IntoIterator<Item = &'a Document>) -> Result<()> {
    let docs: Vec<&Document> = docs.into_iter().collect();
    write_with(path, |w| {
        for d in docs {
            writeln!(w, "{}\t{}", d.doc_id, d.tokens.join(" "))?;
        }
        Ok(())
    })
}

fn id_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

pub fn parse_click_log(path: &Path, text: &str, limits: &Limits) -> Result<Vec<Impression>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(Error::parse(path, n, format!("expected 5 tab-separated columns, found {}", cols.len())));
        }
        let ts: i64 = cols[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, n, format!("invalid timestamp {:?}", cols[1])))?;
        let query = Query::new(cols[0], ts, cols[2], limits);
        let imp = Impression::new(query, id_list(cols[3]), id_list(cols[4])).map_err(|e| Error::Impression {
            context: format!("{}:{n}: impression of user {:?}", path.display(), cols[0]),
            source: Box::new(e.into()),
        })?;
        out.push(imp);
    }
    Ok(out)
}

pub fn read_click_log(path: &Path, limits: &Limits) -> Result<Vec<Impression>> {
    parse_click_log(path, &read_text(path)?, limits)
}

pub fn write_click_log<'a>(path: &Path, impressions: impl IntoIterator<Item = &'a Impression>) -> Result<()> {
    let imps: Vec<&Impression> = impressions.into_iter().collect();
    write_with(path, |w| {
        for imp in imps {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                imp.user_id(),
                imp.timestamp(),
                imp.query.tokens.join(" "),
                imp.candidates.join(","),
                imp.clicked.join(",")
            )?;
        }
        Ok(())
    })
}

/// Rejects impressions whose candidates are missing from `docs`.
pub fn check_candidates(path: &Path, impressions: &[Impression], docs: &DocumentTable) -> Result<()> {
    for imp in impressions {
        if let Some(c) = imp.candidates.iter().find(|c| docs.get(c).is_none()) {
            return Err(Error::Impression {
                context: format!(
                    "{}: impression of user {:?} at {}",
                    path.display(),
                    imp.user_id(),
                    imp.timestamp()
                ),
                source: Box::new(Error::UnknownDocument(c.clone())),
            });
        }
    }
    Ok(())
}

/// An ingested, partitioned corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub docs: DocumentTable,
    pub split: SplitCorpus,
}

pub const DOCS_FILE: &str = "docs.tsv";
pub const SPLIT_FILE: &str = "split.txt";
const PARTITIONS: [&str; 4] = ["history", "train", "validation", "test"];

pub fn partition_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.tsv"))
}

/// Reads a raw click log and document table and splits the log.
pub fn ingest(log: &Path, docs: &Path, limits: &Limits, config: &SplitConfig) -> Result<Corpus> {
    let docs = read_documents(docs, limits)?;
    let imps = read_click_log(log, limits)?;
    check_candidates(log, &imps, &docs)?;
    Ok(Corpus {
        docs,
        split: corpus::split(imps, config)?,
    })
}

pub fn write_corpus(dir: &Path, corpus: &Corpus, config: &SplitConfig) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_documents(&dir.join(DOCS_FILE), corpus.docs.iter())?;
    let mut history: Vec<&Impression> = corpus.split.history.values().flatten().collect();
    history.sort_by(|a, b| {
        a.timestamp()
            .cmp(&b.timestamp())
            .then_with(|| a.user_id().cmp(b.user_id()))
    });
    write_click_log(&partition_path(dir, "history"), history)?;
    write_click_log(&partition_path(dir, "train"), &corpus.split.train)?;
    write_click_log(&partition_path(dir, "validation"), &corpus.split.validation)?;
    write_click_log(&partition_path(dir, "test"), &corpus.split.test)?;
    let r = config.ratios;
    write_with(&dir.join(SPLIT_FILE), |w| {
        writeln!(w, "history_fraction {:?}", config.history_fraction)?;
        writeln!(w, "ratios {}:{}:{}", r.train, r.validation, r.test)?;
        writeln!(w, "cold_users {}", corpus.split.cold_users.join(","))
    })
}

pub fn corpus_exists(dir: &Path) -> bool {
    dir.join(DOCS_FILE).is_file()
        && dir.join(SPLIT_FILE).is_file()
        && PARTITIONS.iter().all(|p| partition_path(dir, p).is_file())
}

/// Reads a corpus directory written by [`write_corpus`]. Stored files are
/// already tokenized and truncated, so no limits apply.
pub fn read_corpus(dir: &Path) -> Result<Corpus> {
    let unlimited = Limits {
        max_query_len: usize::MAX,
        max_doc_len: usize::MAX,
    };
    let docs = read_documents(&dir.join(DOCS_FILE), &unlimited)?;
    let mut parts = Vec::with_capacity(4);
    for name in PARTITIONS {
        let path = partition_path(dir, name);
        let imps = read_click_log(&path, &unlimited)?;
        check_candidates(&path, &imps, &docs)?;
        parts.push(imps);
    }
    let mut parts = parts.into_iter();
    let mut history: BTreeMap<String, Vec<Impression>> = BTreeMap::new();
    for imp in parts.next().unwrap_or_default() {
        history.entry(imp.user_id().to_string()).or_default().push(imp);
    }
    let train = parts.next().unwrap_or_default();
    let validation = parts.next().unwrap_or_default();
    let test = parts.next().unwrap_or_default();
    let mut cold: Vec<String> = train
        .iter()
        .chain(&validation)
        .chain(&test)
        .map(|i| i.user_id().to_string())
        .filter(|u| !history.contains_key(u))
        .collect();
    cold.sort();
    cold.dedup();
    Ok(Corpus {
        docs,
        split: SplitCorpus {
            history,
            train,
            validation,
            test,
            cold_users: cold,
        },
    })
}
