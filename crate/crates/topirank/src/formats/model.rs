//! Topic model text file.
//!
//! ```text
//! topirank-topic-model 1
//! topics 5
//! alpha 10.0
//! beta 0.01
//! iterations 500
//! seed 7
//! min_doc_freq 5
//! max_freq_fraction 0.005
//! source_docs /abs/path/docs.tsv        (optional)
//! vocabulary 3
//! <one term per line>
//! word_topic_counts 3 5
//! <one row of T integers per term>
//! topic_totals <T integers>
//! doc_topics 2
//! <doc_id ⇥ T reals>
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use topirank_core::topics::{TopicModel, TopicModelConfig, VocabFilter, Vocabulary};

use super::{join_f64, read_text, write_with, KeyValueLines};
use crate::error::Result;

const MAGIC: &str = "topirank-topic-model";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: TopicModel,
    /// Document table the model was trained from, used for coherence.
    pub source_docs: Option<PathBuf>,
}

pub fn write_model(path: &Path, file: &ModelFile) -> Result<()> {
    let m = &file.model;
    let c = &m.config;
    let t = c.topics;
    write_with(path, |w| {
        writeln!(w, "{MAGIC} {VERSION}")?;
        writeln!(w, "topics {t}")?;
        writeln!(w, "alpha {:?}", c.alpha)?;
        writeln!(w, "beta {:?}", c.beta)?;
        writeln!(w, "iterations {}", c.iterations)?;
        writeln!(w, "seed {}", c.seed)?;
        writeln!(w, "min_doc_freq {}", c.filter.min_doc_freq)?;
        writeln!(w, "max_freq_fraction {:?}", c.filter.max_freq_fraction)?;
        if let Some(src) = &file.source_docs {
            writeln!(w, "source_docs {}", src.display())?;
        }
        writeln!(w, "vocabulary {}", m.vocabulary.len())?;
        for term in m.vocabulary.terms() {
            writeln!(w, "{term}")?;
        }
        writeln!(w, "word_topic_counts {} {t}", m.vocabulary.len())?;
        for row in m.word_topic.chunks(t.max(1)) {
            let row: Vec<String> = row.iter().map(u32::to_string).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        let totals: Vec<String> = m.topic_totals.iter().map(u64::to_string).collect();
        writeln!(w, "topic_totals {}", totals.join(" "))?;
        writeln!(w, "doc_topics {}", m.doc_topics.len())?;
        for (id, weights) in &m.doc_topics {
            writeln!(w, "{id}\t{}", join_f64(weights, " "))?;
        }
        Ok(())
    })
}

fn ints<T: std::str::FromStr>(r: &KeyValueLines, s: &str, expected: usize) -> Result<Vec<T>> {
    let v = s
        .split_whitespace()
        .map(|x| x.parse::<T>().map_err(|_| r.error(format!("invalid count {x:?}"))))
        .collect::<Result<Vec<T>>>()?;
    if v.len() != expected {
        return Err(r.error(format!("expected {expected} values, found {}", v.len())));
    }
    Ok(v)
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text = read_text(path)?;
    let mut r = KeyValueLines::new(path, &text);
    let version: u32 = r.parsed(MAGIC)?;
    if version != VERSION {
        return Err(r.error(format!("unsupported model version {version}")));
    }
    let topics: usize = r.parsed("topics")?;
    let config = TopicModelConfig {
        topics,
        alpha: r.parsed("alpha")?,
        beta: r.parsed("beta")?,
        iterations: r.parsed("iterations")?,
        seed: r.parsed("seed")?,
        filter: VocabFilter {
            min_doc_freq: r.parsed("min_doc_freq")?,
            max_freq_fraction: r.parsed("max_freq_fraction")?,
        },
    };
    config.validate().map_err(|e| r.error(e.to_string()))?;
    let source_docs = match r.peek_key() {
        Some("source_docs") => Some(PathBuf::from(r.value("source_docs")?)),
        _ => None,
    };
    let v: usize = r.parsed("vocabulary")?;
    let mut terms = Vec::with_capacity(v);
    for _ in 0..v {
        terms.push(r.next_line()?.to_string());
    }
    let vocabulary = Vocabulary::from_terms(terms.clone());
    if vocabulary.terms() != terms.as_slice() {
        return Err(r.error("vocabulary terms must be distinct and sorted"));
    }
    let shape = r.value("word_topic_counts")?;
    if shape.split_whitespace().collect::<Vec<_>>() != [v.to_string(), topics.to_string()] {
        return Err(r.error(format!("word_topic_counts shape {shape:?} does not match {v} {topics}")));
    }
    let mut word_topic = Vec::with_capacity(v * topics);
    for _ in 0..v {
        let line = r.next_line()?;
        word_topic.extend(ints::<u32>(&r, line, topics)?);
    }
    let totals_line = r.value("topic_totals")?;
    let topic_totals: Vec<u64> = ints(&r, totals_line, topics)?;
    for k in 0..topics {
        let col: u64 = (0..v).map(|w| word_topic[w * topics + k] as u64).sum();
        if col != topic_totals[k] {
            return Err(r.error(format!("topic_totals[{k}] = {} but the column sums to {col}", topic_totals[k])));
        }
    }
    let d: usize = r.parsed("doc_topics")?;
    let mut doc_topics = BTreeMap::new();
    for _ in 0..d {
        let line = r.next_line()?;
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| r.error("expected `doc_id<TAB>weights`"))?;
        let weights = r.floats(rest)?;
        if weights.len() != topics {
            return Err(r.error(format!("expected {topics} weights, found {}", weights.len())));
        }
        doc_topics.insert(id.to_string(), weights);
    }
    r.expect_end()?;
    Ok(ModelFile {
        model: TopicModel {
            config,
            vocabulary,
            word_topic,
            topic_totals,
            doc_topics,
        },
        source_docs,
    })
}
