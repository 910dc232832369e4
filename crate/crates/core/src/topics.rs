//! Latent Dirichlet allocation trained by collapsed Gibbs sampling, document
//! topic inference and UMass topic coherence.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::Document;
use crate::hash;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopicError {
    #[error("invalid topic model config: {0}")]
    InvalidConfig(&'static str),
    #[error("corpus has no documents")]
    EmptyCorpus,
    #[error("vocabulary is empty after frequency filtering")]
    EmptyVocabulary,
    #[error("{topics} topics requested but the vocabulary has only {vocab} terms")]
    TooManyTopics { topics: usize, vocab: usize },
    #[error("top word {0:?} occurs in no document")]
    ZeroDocumentFrequency(String),
    #[error("top_k must be at least 2, got {0}")]
    TopKTooSmall(usize),
    #[error("count table invariant violated: {0}")]
    CountInvariant(&'static str),
}

/// Vocabulary pruning applied before training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VocabFilter {
    /// Terms occurring in fewer documents are dropped.
    pub min_doc_freq: usize,
    /// Fraction of the surviving terms, most frequent first, that is dropped.
    pub max_freq_fraction: f64,
}

impl Default for VocabFilter {
    fn default() -> Self {
        Self {
            min_doc_freq: 5,
            max_freq_fraction: 0.005,
        }
    }
}

impl VocabFilter {
    /// Keeps every term.
    pub const NONE: VocabFilter = VocabFilter {
        min_doc_freq: 1,
        max_freq_fraction: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModelConfig {
    pub topics: usize,
    /// Symmetric document-topic prior.
    pub alpha: f64,
    /// Symmetric topic-word prior.
    pub beta: f64,
    /// Full Gibbs sweeps.
    pub iterations: usize,
    pub seed: u64,
    pub filter: VocabFilter,
}

impl TopicModelConfig {
    /// Defaults for `topics` topics: alpha = 50/T, beta = 0.01, 500 sweeps.
    pub fn new(topics: usize) -> Self {
        Self {
            topics,
            alpha: 50.0 / topics.max(1) as f64,
            beta: 0.01,
            iterations: 500,
            seed: 7,
            filter: VocabFilter::default(),
        }
    }

    pub fn validate(&self) -> Result<(), TopicError> {
        if self.topics < 2 {
            return Err(TopicError::InvalidConfig("topic count must be at least 2"));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(TopicError::InvalidConfig("alpha must be positive"));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(TopicError::InvalidConfig("beta must be positive"));
        }
        if self.iterations == 0 {
            return Err(TopicError::InvalidConfig("iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Sorted term list with a reverse index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Vocabulary {
    pub fn from_terms(mut terms: Vec<String>) -> Self {
        terms.sort();
        terms.dedup();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self { terms, index }
    }

    /// Builds the vocabulary of `docs` after applying `filter`.
    pub fn build(docs: &[Document], filter: &VocabFilter) -> Self {
        let mut stats: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for doc in docs {
            let mut seen: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
            for t in &seen {
                stats.entry(t).or_default().1 += 1;
            }
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                stats.entry(t).or_default().0 += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = stats
            .into_iter()
            .filter(|(_, (df, _))| *df >= filter.min_doc_freq)
            .map(|(t, (_, cf))| (t, cf))
            .collect();
        let drop = (filter.max_freq_fraction * kept.len() as f64) as usize;
        if drop > 0 {
            kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            kept.drain(..drop);
        }
        Self::from_terms(kept.into_iter().map(|(t, _)| String::from(t)).collect())
    }

    pub fn get(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// In-vocabulary ids of `tokens`, in order.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().filter_map(|t| self.get(t.as_ref())).collect()
    }
}

/// Topic distribution of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentTopics {
    pub weights: Vec<f64>,
    /// Set when the document had no in-vocabulary token and the uniform
    /// distribution was returned.
    pub fallback: bool,
}

impl DocumentTopics {
    pub fn uniform(topics: usize) -> Self {
        Self {
            weights: vec![1.0 / topics as f64; topics],
            fallback: true,
        }
    }
}

/// Full sampler state: count tables plus per-token assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModelState {
    pub config: TopicModelConfig,
    pub vocabulary: Vocabulary,
    pub doc_ids: Vec<String>,
    /// Encoded tokens per document.
    pub words: Vec<Vec<u32>>,
    /// Topic label per token, parallel to `words`.
    pub assignments: Vec<Vec<u32>>,
    /// V×T, row-major by word.
    pub word_topic: Vec<u32>,
    /// D×T, row-major by document.
    pub doc_topic: Vec<u32>,
    pub topic_totals: Vec<u64>,
    pub sweeps: usize,
}

/// Trains LDA on `docs`.
pub fn train_lda(docs: &[Document], config: &TopicModelConfig) -> Result<TopicModelState, TopicError> {
    train_lda_with(docs, config, |_| {})
}

/// [`train_lda`] calling `on_sweep` after every completed sweep.
pub fn train_lda_with(
    docs: &[Document],
    config: &TopicModelConfig,
    mut on_sweep: impl FnMut(&TopicModelState),
) -> Result<TopicModelState, TopicError> {
    config.validate()?;
    if docs.is_empty() {
        return Err(TopicError::EmptyCorpus);
    }
    let vocabulary = Vocabulary::build(docs, &config.filter);
    if vocabulary.is_empty() {
        return Err(TopicError::EmptyVocabulary);
    }
    if config.topics > vocabulary.len() {
        return Err(TopicError::TooManyTopics {
            topics: config.topics,
            vocab: vocabulary.len(),
        });
    }

    let t = config.topics;
    let v = vocabulary.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let words: Vec<Vec<u32>> = docs.iter().map(|d| vocabulary.encode(&d.tokens)).collect();
    let mut state = TopicModelState {
        config: config.clone(),
        doc_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
        assignments: Vec::with_capacity(docs.len()),
        word_topic: vec![0; v * t],
        doc_topic: vec![0; docs.len() * t],
        topic_totals: vec![0; t],
        sweeps: 0,
        vocabulary,
        words,
    };
    for (d, doc) in state.words.iter().enumerate() {
        let mut z = Vec::with_capacity(doc.len());
        for &w in doc {
            let k = rng.random_range(0..t as u32);
            state.word_topic[w as usize * t + k as usize] += 1;
            state.doc_topic[d * t + k as usize] += 1;
            state.topic_totals[k as usize] += 1;
            z.push(k);
        }
        state.assignments.push(z);
    }

    let mut probs = vec![0.0f64; t];
    for _ in 0..config.iterations {
        state.sweep(&mut rng, &mut probs);
        on_sweep(&state);
    }
    Ok(state)
}

/// Draws an index from unnormalized cumulative weights.
fn draw(cumulative: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = cumulative[cumulative.len() - 1];
    let u = rng.random::<f64>() * total;
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

impl TopicModelState {
    pub fn topics(&self) -> usize {
        self.config.topics
    }

    fn sweep(&mut self, rng: &mut ChaCha8Rng, probs: &mut [f64]) {
        let t = self.config.topics;
        let alpha = self.config.alpha;
        let beta = self.config.beta;
        let vbeta = beta * self.vocabulary.len() as f64;
        for d in 0..self.words.len() {
            let doc_row = d * t;
            for (pos, &w) in self.words[d].iter().enumerate() {
                let old = self.assignments[d][pos] as usize;
                let word_row = w as usize * t;
                self.word_topic[word_row + old] -= 1;
                self.doc_topic[doc_row + old] -= 1;
                self.topic_totals[old] -= 1;

                let mut acc = 0.0;
                for k in 0..t {
                    acc += (self.doc_topic[doc_row + k] as f64 + alpha)
                        * (self.word_topic[word_row + k] as f64 + beta)
                        / (self.topic_totals[k] as f64 + vbeta);
                    probs[k] = acc;
                }
                let new = draw(probs, rng);

                self.word_topic[word_row + new] += 1;
                self.doc_topic[doc_row + new] += 1;
                self.topic_totals[new] += 1;
                self.assignments[d][pos] = new as u32;
            }
        }
        self.sweeps += 1;
    }

    pub fn word_topic_count(&self, word: u32, topic: usize) -> u32 {
        self.word_topic[word as usize * self.config.topics + topic]
    }

    pub fn doc_topic_count(&self, doc: usize, topic: usize) -> u32 {
        self.doc_topic[doc * self.config.topics + topic]
    }

    /// Recounts all tables from the assignments and compares them with the
    /// maintained tables.
    pub fn check_invariants(&self) -> Result<(), TopicError> {
        let t = self.config.topics;
        let mut wt = vec![0u32; self.word_topic.len()];
        let mut dt = vec![0u32; self.doc_topic.len()];
        for (d, (ws, zs)) in self.words.iter().zip(&self.assignments).enumerate() {
            if ws.len() != zs.len() {
                return Err(TopicError::CountInvariant("assignment length differs from document length"));
            }
            for (&w, &z) in ws.iter().zip(zs) {
                wt[w as usize * t + z as usize] += 1;
                dt[d * t + z as usize] += 1;
            }
        }
        if wt != self.word_topic {
            return Err(TopicError::CountInvariant("word-topic counts disagree with assignments"));
        }
        if dt != self.doc_topic {
            return Err(TopicError::CountInvariant("doc-topic counts disagree with assignments"));
        }
        for k in 0..t {
            let col: u64 = (0..self.vocabulary.len())
                .map(|w| self.word_topic[w * t + k] as u64)
                .sum();
            if col != self.topic_totals[k] {
                return Err(TopicError::CountInvariant("word-topic column sum differs from topic total"));
            }
        }
        for (d, ws) in self.words.iter().enumerate() {
            let row: u64 = self.doc_topic[d * t..(d + 1) * t].iter().map(|&c| c as u64).sum();
            if row != ws.len() as u64 {
                return Err(TopicError::CountInvariant("doc-topic row sum differs from document length"));
            }
        }
        Ok(())
    }

    /// Collapsed joint log-likelihood log p(w, z | alpha, beta).
    pub fn log_likelihood(&self) -> f64 {
        use libm::lgamma;
        let t = self.config.topics;
        let v = self.vocabulary.len();
        let (alpha, beta) = (self.config.alpha, self.config.beta);
        let mut ll = t as f64 * (lgamma(v as f64 * beta) - v as f64 * lgamma(beta));
        for k in 0..t {
            for w in 0..v {
                ll += lgamma(self.word_topic[w * t + k] as f64 + beta);
            }
            ll -= lgamma(self.topic_totals[k] as f64 + v as f64 * beta);
        }
        let docs = self.words.len();
        ll += docs as f64 * (lgamma(t as f64 * alpha) - t as f64 * lgamma(alpha));
        for d in 0..docs {
            for k in 0..t {
                ll += lgamma(self.doc_topic[d * t + k] as f64 + alpha);
            }
            ll -= lgamma(self.words[d].len() as f64 + t as f64 * alpha);
        }
        ll
    }

    /// Smoothed topic distribution of training document `d`.
    pub fn doc_topics(&self, d: usize) -> DocumentTopics {
        let t = self.config.topics;
        let counts: Vec<f64> = self.doc_topic[d * t..(d + 1) * t].iter().map(|&c| c as f64).collect();
        DocumentTopics {
            weights: smoothed(&counts, self.words[d].len() as f64, self.config.alpha),
            fallback: self.words[d].is_empty(),
        }
    }

    /// Topic distribution of `doc`: training documents (matched by id) use
    /// their counts, other documents are folded in.
    pub fn infer(&self, doc: &Document) -> DocumentTopics {
        match self.doc_ids.iter().position(|id| *id == doc.doc_id) {
            Some(d) => self.doc_topics(d),
            None => fold_in(
                &self.vocabulary.encode(&doc.tokens),
                &self.word_topic,
                &self.topic_totals,
                &self.config,
                self.vocabulary.len(),
            ),
        }
    }

    /// Freezes the state into the inference-only model.
    pub fn to_model(&self) -> TopicModel {
        TopicModel {
            config: self.config.clone(),
            vocabulary: self.vocabulary.clone(),
            word_topic: self.word_topic.clone(),
            topic_totals: self.topic_totals.clone(),
            doc_topics: self
                .doc_ids
                .iter()
                .enumerate()
                .map(|(d, id)| (id.clone(), self.doc_topics(d).weights))
                .collect(),
        }
    }
}

/// t_i = (n_i + alpha) / (n + T alpha).
fn smoothed(counts: &[f64], total: f64, alpha: f64) -> Vec<f64> {
    let denom = total + counts.len() as f64 * alpha;
    counts.iter().map(|&c| (c + alpha) / denom).collect()
}

const FOLD_IN_SWEEPS: usize = 20;
const FOLD_IN_BURN_IN: usize = 10;

/// Gibbs fold-in of an unseen document against frozen word-topic counts.
/// Topic counts are averaged over the sweeps after burn-in.
fn fold_in(
    words: &[u32],
    word_topic: &[u32],
    topic_totals: &[u64],
    config: &TopicModelConfig,
    vocab_len: usize,
) -> DocumentTopics {
    let t = config.topics;
    if words.is_empty() {
        return DocumentTopics::uniform(t);
    }
    let mut seed_bytes = Vec::with_capacity(words.len() * 4);
    for w in words {
        seed_bytes.extend_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hash::mix(config.seed ^ hash::fnv1a(&seed_bytes)));
    let vbeta = config.beta * vocab_len as f64;

    let mut counts = vec![0u32; t];
    let mut z: Vec<usize> = words
        .iter()
        .map(|_| {
            let k = rng.random_range(0..t);
            counts[k] += 1;
            k
        })
        .collect();
    let mut acc = vec![0.0f64; t];
    let mut probs = vec![0.0f64; t];
    for sweep in 0..FOLD_IN_SWEEPS {
        for (pos, &w) in words.iter().enumerate() {
            counts[z[pos]] -= 1;
            let row = w as usize * t;
            let mut c = 0.0;
            for k in 0..t {
                c += (counts[k] as f64 + config.alpha) * (word_topic[row + k] as f64 + config.beta)
                    / (topic_totals[k] as f64 + vbeta);
                probs[k] = c;
            }
            let k = draw(&probs, &mut rng);
            counts[k] += 1;
            z[pos] = k;
        }
        if sweep >= FOLD_IN_BURN_IN {
            for k in 0..t {
                acc[k] += counts[k] as f64;
            }
        }
    }
    let kept = (FOLD_IN_SWEEPS - FOLD_IN_BURN_IN) as f64;
    for a in &mut acc {
        *a /= kept;
    }
    DocumentTopics {
        weights: smoothed(&acc, words.len() as f64, config.alpha),
        fallback: false,
    }
}

/// A trained model reduced to what inference and scoring need.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub config: TopicModelConfig,
    pub vocabulary: Vocabulary,
    /// V×T, row-major by word.
    pub word_topic: Vec<u32>,
    pub topic_totals: Vec<u64>,
    /// Topic distributions of the training documents.
    pub doc_topics: BTreeMap<String, Vec<f64>>,
}

impl TopicModel {
    pub fn topics(&self) -> usize {
        self.config.topics
    }

    pub fn infer(&self, doc: &Document) -> DocumentTopics {
        match self.doc_topics.get(&doc.doc_id) {
            Some(w) => DocumentTopics {
                weights: w.clone(),
                fallback: false,
            },
            None => self.fold_in(&doc.tokens),
        }
    }

    /// Infers the topic distribution of an arbitrary token sequence.
    pub fn fold_in<S: AsRef<str>>(&self, tokens: &[S]) -> DocumentTopics {
        fold_in(
            &self.vocabulary.encode(tokens),
            &self.word_topic,
            &self.topic_totals,
            &self.config,
            self.vocabulary.len(),
        )
    }

    /// The `n` highest-count word ids of `topic`; ties go to the lower id.
    pub fn top_words(&self, topic: usize, n: usize) -> Vec<u32> {
        let t = self.config.topics;
        let mut ids: Vec<u32> = (0..self.vocabulary.len() as u32).collect();
        ids.sort_by(|&a, &b| {
            self.word_topic[b as usize * t + topic]
                .cmp(&self.word_topic[a as usize * t + topic])
                .then(a.cmp(&b))
        });
        ids.truncate(n);
        ids
    }

    pub fn top_terms(&self, topic: usize, n: usize) -> Vec<&str> {
        self.top_words(topic, n)
            .into_iter()
            .map(|w| self.vocabulary.term(w))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coherence {
    pub per_topic: Vec<f64>,
    pub mean: f64,
}

/// UMass coherence of a ranked word list given per-document sorted word sets.
///
/// Mean over pairs i > j of ln((D(w_i, w_j) + 1) / D(w_j)).
pub fn umass(top: &[u32], doc_sets: &[Vec<u32>]) -> Result<f64, usize> {
    let k = top.len();
    let mut single = vec![0u64; k];
    let mut joint = vec![0u64; k * k];
    let mut present = vec![false; k];
    for set in doc_sets {
        for (i, w) in top.iter().enumerate() {
            present[i] = set.binary_search(w).is_ok();
        }
        for i in 0..k {
            if !present[i] {
                continue;
            }
            single[i] += 1;
            for j in 0..i {
                if present[j] {
                    joint[i * k + j] += 1;
                }
            }
        }
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 1..k {
        for j in 0..i {
            if single[j] == 0 {
                return Err(j);
            }
            sum += libm::log((joint[i * k + j] as f64 + 1.0) / single[j] as f64);
            pairs += 1;
        }
    }
    Ok(if pairs == 0 { 0.0 } else { sum / pairs as f64 })
}

/// UMass coherence of every topic's `top_k` words over `docs`.
pub fn coherence(model: &TopicModel, docs: &[Document], top_k: usize) -> Result<Coherence, TopicError> {
    if top_k < 2 {
        return Err(TopicError::TopKTooSmall(top_k));
    }
    let doc_sets: Vec<Vec<u32>> = docs
        .iter()
        .map(|d| {
            let mut s = model.vocabulary.encode(&d.tokens);
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    let mut per_topic = Vec::with_capacity(model.topics());
    for k in 0..model.topics() {
        let top = model.top_words(k, top_k);
        let score = umass(&top, &doc_sets)
            .map_err(|j| TopicError::ZeroDocumentFrequency(model.vocabulary.term(top[j]).into()))?;
        per_topic.push(score);
    }
    let mean = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(Coherence { per_topic, mean })
}
