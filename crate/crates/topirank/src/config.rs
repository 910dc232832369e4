//! Run configuration, read from TOML. Every section and key is optional.
//!
//! ```toml
//! seed = 7
//! workdir = "run"
//!
//! [input]            # raw click log to ingest; omitted -> synthetic corpus
//! log = "log.tsv"
//! docs = "docs.tsv"
//!
//! [synthetic]
//! user_count = 60
//!
//! [lda]
//! topics = 5
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use topirank_core::corpus::{Limits, SplitConfig, SplitRatios};
use topirank_core::embeddings::SyntheticConfig;
use topirank_core::profiles::ClickWeighting;
use topirank_core::ranker::{Optimizer, TrainConfig};
use topirank_core::synthetic::SyntheticSpec;
use topirank_core::topics::{TopicModelConfig, VocabFilter};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub workdir: PathBuf,
    pub input: Option<InputSection>,
    pub synthetic: SyntheticSection,
    pub split: SplitSection,
    pub limits: LimitsSection,
    pub lda: LdaSection,
    pub profiles: ProfilesSection,
    pub embeddings: EmbeddingsSection,
    pub training: TrainingSection,
    pub evaluation: EvaluationSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            workdir: PathBuf::from("run"),
            input: None,
            synthetic: SyntheticSection::default(),
            split: SplitSection::default(),
            limits: LimitsSection::default(),
            lda: LdaSection::default(),
            profiles: ProfilesSection::default(),
            embeddings: EmbeddingsSection::default(),
            training: TrainingSection::default(),
            evaluation: EvaluationSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub log: PathBuf,
    pub docs: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    pub user_count: usize,
    pub true_topic_count: usize,
    pub vocab_size: usize,
    pub docs_per_user: usize,
    pub impressions_per_user: usize,
    pub candidates_per_impression: usize,
    pub click_noise: f64,
    pub preference_strength: f64,
    pub doc_len: usize,
    pub shared_words: usize,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        let s = SyntheticSpec::default();
        Self {
            user_count: s.user_count,
            true_topic_count: s.true_topic_count,
            vocab_size: s.vocab_size,
            docs_per_user: s.docs_per_user,
            impressions_per_user: s.impressions_per_user,
            candidates_per_impression: s.candidates_per_impression,
            click_noise: s.click_noise,
            preference_strength: s.preference_strength,
            doc_len: s.doc_len,
            shared_words: s.shared_words,
        }
    }
}

impl SyntheticSection {
    pub fn spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            user_count: self.user_count,
            true_topic_count: self.true_topic_count,
            vocab_size: self.vocab_size,
            docs_per_user: self.docs_per_user,
            impressions_per_user: self.impressions_per_user,
            candidates_per_impression: self.candidates_per_impression,
            click_noise: self.click_noise,
            preference_strength: self.preference_strength,
            doc_len: self.doc_len,
            shared_words: self.shared_words,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub history_fraction: f64,
    pub train: u32,
    pub validation: u32,
    pub test: u32,
}

impl Default for SplitSection {
    fn default() -> Self {
        let c = SplitConfig::default();
        Self {
            history_fraction: c.history_fraction,
            train: c.ratios.train,
            validation: c.ratios.validation,
            test: c.ratios.test,
        }
    }
}

impl SplitSection {
    pub fn config(&self) -> SplitConfig {
        SplitConfig {
            history_fraction: self.history_fraction,
            ratios: SplitRatios {
                train: self.train,
                validation: self.validation,
                test: self.test,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitsSection {
    pub max_query_len: usize,
    pub max_doc_len: usize,
}

impl Default for LimitsSection {
    fn default() -> Self {
        let l = Limits::default();
        Self {
            max_query_len: l.max_query_len,
            max_doc_len: l.max_doc_len,
        }
    }
}

impl LimitsSection {
    pub fn limits(&self) -> Limits {
        Limits {
            max_query_len: self.max_query_len,
            max_doc_len: self.max_doc_len,
        }
    }
}

/// Which documents the topic model is trained on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LdaCorpus {
    /// Documents clicked in the history partition.
    #[default]
    HistoryClicks,
    /// Every document in the table.
    All,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSection {
    pub topics: usize,
    /// Defaults to 50 / topics.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub min_doc_freq: usize,
    pub max_freq_fraction: f64,
    pub corpus: LdaCorpus,
    pub top_k: usize,
}

impl Default for LdaSection {
    fn default() -> Self {
        let c = TopicModelConfig::new(5);
        Self {
            topics: 5,
            alpha: None,
            beta: c.beta,
            iterations: c.iterations,
            min_doc_freq: c.filter.min_doc_freq,
            max_freq_fraction: c.filter.max_freq_fraction,
            corpus: LdaCorpus::HistoryClicks,
            top_k: 10,
        }
    }
}

impl LdaSection {
    pub fn config(&self, topics: usize, seed: u64) -> TopicModelConfig {
        let mut c = TopicModelConfig::new(topics);
        if let Some(a) = self.alpha {
            c.alpha = a;
        }
        c.beta = self.beta;
        c.iterations = self.iterations;
        c.seed = seed;
        c.filter = VocabFilter {
            min_doc_freq: self.min_doc_freq,
            max_freq_fraction: self.max_freq_fraction,
        };
        c
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    #[default]
    Set,
    Multiset,
}

impl From<Weighting> for ClickWeighting {
    fn from(w: Weighting) -> Self {
        match w {
            Weighting::Set => ClickWeighting::Set,
            Weighting::Multiset => ClickWeighting::Multiset,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfilesSection {
    pub weighting: Weighting,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingsSection {
    pub layers: usize,
    pub dim: usize,
    pub window: usize,
    /// Embedding cache to read instead of the synthetic provider.
    pub cache: Option<PathBuf>,
    /// Also write every pipeline pair to `<workdir>/emb.bin`.
    pub write_cache: bool,
}

impl Default for EmbeddingsSection {
    fn default() -> Self {
        Self {
            layers: 12,
            dim: 64,
            window: SyntheticConfig::default().window,
            cache: None,
            write_cache: false,
        }
    }
}

impl EmbeddingsSection {
    pub fn synthetic(&self, seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            layers: self.layers,
            dim: self.dim,
            seed,
            window: self.window,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub epochs: usize,
    pub batches_per_epoch: usize,
    pub pairs_per_batch: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub margin: f64,
    pub scale_to_corpus: bool,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batches_per_epoch: t.batches_per_epoch,
            pairs_per_batch: t.pairs_per_batch,
            learning_rate: t.learning_rate,
            optimizer: OptimizerKind::Adam,
            margin: t.margin,
            scale_to_corpus: t.scale_to_corpus,
        }
    }
}

impl TrainingSection {
    pub fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batches_per_epoch: self.batches_per_epoch,
            pairs_per_batch: self.pairs_per_batch,
            learning_rate: self.learning_rate,
            optimizer: match self.optimizer {
                OptimizerKind::Adam => Optimizer::default(),
                OptimizerKind::Sgd => Optimizer::Sgd,
            },
            margin: self.margin,
            seed,
            scale_to_corpus: self.scale_to_corpus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    /// Also train and report the interest-ablated head.
    pub compare_ablation: bool,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self { compare_ablation: true }
    }
}

impl RunConfig {
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(path, &text)?;
        // relative paths inside the file are relative to the file
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.workdir);
        if let Some(input) = &mut cfg.input {
            rebase(&mut input.log);
            rebase(&mut input.docs);
        }
        if let Some(c) = &mut cfg.embeddings.cache {
            rebase(c);
        }
        Ok(cfg)
    }
}
