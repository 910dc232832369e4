//! In-memory pipeline stages: topic model, profiles, feature tables, training
//! and evaluation.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use topirank_core::corpus::{Document, DocumentTable, Impression};
use topirank_core::embeddings::EmbeddingProvider;
use topirank_core::evaluation::{self, MetricReport};
use topirank_core::matching::{self, KernelBank, SemanticScratch};
use topirank_core::profiles::{self, ClickHistory, ClickWeighting, UserProfile};
use topirank_core::ranker::{self, FeatureLayout, FeatureTable, ScoringHead, TrainConfig, TrainOutcome};
use topirank_core::topics::{self, Coherence, TopicModel, TopicModelConfig};

use crate::config::{LdaCorpus, RunConfig};
use crate::error::{Error, Result};
use crate::formats::cache::PairSpec;
use crate::formats::clicklog::Corpus;

/// Documents the topic model trains on, in doc-id order.
pub fn lda_documents(corpus: &Corpus, which: LdaCorpus) -> Result<Vec<Document>> {
    let ids: BTreeSet<&str> = match which {
        LdaCorpus::All => corpus.docs.iter().map(|d| d.doc_id.as_str()).collect(),
        LdaCorpus::HistoryClicks => corpus
            .split
            .history
            .values()
            .flatten()
            .flat_map(|i| i.clicked.iter().map(String::as_str))
            .collect(),
    };
    ids.into_iter()
        .map(|id| {
            corpus
                .docs
                .get(id)
                .cloned()
                .ok_or_else(|| Error::UnknownDocument(id.to_string()))
        })
        .collect()
}

pub fn train_topic_model(docs: &[Document], config: &TopicModelConfig) -> Result<TopicModel> {
    let state = topics::train_lda(docs, config)?;
    log::info!(
        "lda: {} docs, {} terms, {} topics, log-likelihood {:.1}",
        state.doc_ids.len(),
        state.vocabulary.len(),
        config.topics,
        state.log_likelihood()
    );
    Ok(state.to_model())
}

/// Topic distribution of every document in `docs`; documents the model was
/// not trained on are folded in.
pub fn infer_all(model: &TopicModel, docs: &DocumentTable) -> BTreeMap<String, Vec<f64>> {
    docs.as_slice()
        .par_iter()
        .map(|d| (d.doc_id.clone(), model.infer(d).weights))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// One profile per user of the split, sorted by user id. Users without history
/// clicks get the uniform profile.
pub fn build_profiles(
    corpus: &Corpus,
    doc_topics: &BTreeMap<String, Vec<f64>>,
    topics: usize,
    weighting: ClickWeighting,
) -> Result<Vec<UserProfile>> {
    corpus
        .split
        .users()
        .iter()
        .map(|u| {
            let history = ClickHistory::from_split(&corpus.split, u);
            Ok(profiles::build_profile(&history, topics, weighting, |d| {
                doc_topics.get(d).map(Vec::as_slice)
            })?)
        })
        .collect()
}

/// Computes `[θ; φ]` rows for impressions.
pub struct Featurizer<'a, P> {
    pub docs: &'a DocumentTable,
    pub doc_topics: &'a BTreeMap<String, Vec<f64>>,
    pub profiles: BTreeMap<&'a str, &'a [f64]>,
    pub topics: usize,
    pub provider: P,
    pub bank: KernelBank,
}

impl<'a, P: EmbeddingProvider + Sync> Featurizer<'a, P> {
    pub fn new(
        docs: &'a DocumentTable,
        doc_topics: &'a BTreeMap<String, Vec<f64>>,
        profiles: &'a [UserProfile],
        topics: usize,
        provider: P,
        bank: KernelBank,
    ) -> Self {
        Self {
            docs,
            doc_topics,
            profiles: profiles
                .iter()
                .map(|p| (p.user_id.as_str(), p.weights.as_slice()))
                .collect(),
            topics,
            provider,
            bank,
        }
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout {
            kernels: self.bank.len(),
            layers: self.provider.layers(),
        }
    }

    fn document(&self, doc_id: &str) -> Result<&'a Document> {
        self.docs
            .get(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))
    }

    /// Profile of `user`, uniform when unknown.
    pub fn profile(&self, user: &str) -> Vec<f64> {
        match self.profiles.get(user) {
            Some(p) => p.to_vec(),
            None => UserProfile::uniform(user, self.topics).weights,
        }
    }

    pub fn interest_into(&self, profile: &[f64], doc_id: &str, out: &mut [f64]) -> Result<f64> {
        let t = self
            .doc_topics
            .get(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
        Ok(matching::interest_features_into(profile, t, &self.bank, out)?)
    }

    /// Writes the row for one candidate into `out` (length `layout().dim()`).
    pub fn candidate_into(
        &self,
        profile: &[f64],
        query: &[String],
        doc_id: &str,
        scratch: &mut SemanticScratch,
        out: &mut [f64],
    ) -> Result<()> {
        let z = self.bank.len();
        let doc = self.document(doc_id)?;
        self.interest_into(profile, doc_id, &mut out[..z])?;
        let (q, d) = self.provider.embed_pair(query, doc_id, &doc.tokens)?;
        scratch.features_into(&q, &d, &self.bank, &mut out[z..])?;
        Ok(())
    }

    pub fn impression_rows(&self, imp: &Impression, scratch: &mut SemanticScratch) -> Result<Vec<f64>> {
        let dim = self.layout().dim();
        let profile = self.profile(imp.user_id());
        let mut rows = vec![0.0; dim * imp.candidates.len()];
        for (c, out) in imp.candidates.iter().zip(rows.chunks_exact_mut(dim)) {
            self.candidate_into(&profile, &imp.query.tokens, c, scratch, out)
                .map_err(|e| Error::Impression {
                    context: format!("impression of user {:?} at {}", imp.user_id(), imp.timestamp()),
                    source: Box::new(e),
                })?;
        }
        Ok(rows)
    }

    /// Feature table for `impressions`, rows computed in parallel and stored
    /// in input order.
    pub fn table(&self, impressions: &[Impression]) -> Result<FeatureTable> {
        let rows: Vec<Vec<f64>> = impressions
            .par_iter()
            .map_init(SemanticScratch::new, |scratch, imp| self.impression_rows(imp, scratch))
            .collect::<Result<_>>()?;
        let mut table = FeatureTable::new(self.layout());
        for r in rows {
            table.push(&r)?;
        }
        Ok(table)
    }

    /// Recomputes the interest block of every row of `table` (for example
    /// after swapping the topic model) without touching the semantic block.
    pub fn refresh_interest(&self, impressions: &[Impression], table: &mut FeatureTable) -> Result<()> {
        let z = self.bank.len();
        for (i, imp) in impressions.iter().enumerate() {
            let profile = self.profile(imp.user_id());
            for (c, doc_id) in imp.candidates.iter().enumerate() {
                self.interest_into(&profile, doc_id, &mut table.get_mut(i, c)[..z])?;
            }
        }
        Ok(())
    }
}

/// Every (query, candidate) pair of `impressions`, first occurrence order.
pub fn impression_pairs(impressions: &[Impression], docs: &DocumentTable) -> Result<Vec<PairSpec>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for imp in impressions {
        for c in &imp.candidates {
            if seen.insert((imp.query.tokens.clone(), c.clone())) {
                let doc = docs.get(c).ok_or_else(|| Error::UnknownDocument(c.clone()))?;
                out.push(PairSpec {
                    query: imp.query.tokens.clone(),
                    doc_id: c.clone(),
                    doc: doc.tokens.clone(),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTables {
    pub train: FeatureTable,
    pub validation: FeatureTable,
    pub test: FeatureTable,
}

impl FeatureTables {
    pub fn build<P: EmbeddingProvider + Sync>(f: &Featurizer<'_, P>, corpus: &Corpus) -> Result<Self> {
        Ok(Self {
            train: f.table(&corpus.split.train)?,
            validation: f.table(&corpus.split.validation)?,
            test: f.table(&corpus.split.test)?,
        })
    }

    pub fn refresh_interest<P: EmbeddingProvider + Sync>(&mut self, f: &Featurizer<'_, P>, corpus: &Corpus) -> Result<()> {
        f.refresh_interest(&corpus.split.train, &mut self.train)?;
        f.refresh_interest(&corpus.split.validation, &mut self.validation)?;
        f.refresh_interest(&corpus.split.test, &mut self.test)
    }

    pub fn ablated(&self) -> Self {
        let mut t = self.clone();
        t.train.ablate_interest();
        t.validation.ablate_interest();
        t.test.ablate_interest();
        t
    }
}

pub fn train_head(corpus: &Corpus, tables: &FeatureTables, config: &TrainConfig) -> Result<TrainOutcome> {
    let out = ranker::train(
        &corpus.split.train,
        &tables.train,
        &corpus.split.validation,
        &tables.validation,
        config,
    )?;
    for e in &out.log {
        log::debug!(
            "epoch {}: {} pairs, mean loss {:.4}, validation MRR {:?}",
            e.epoch,
            e.pairs,
            e.mean_loss,
            e.validation_mrr
        );
    }
    Ok(out)
}

pub fn evaluate_head(head: &ScoringHead, impressions: &[Impression], table: &FeatureTable) -> Result<MetricReport> {
    let ranked = ranker::rank_table(head, impressions, table)?;
    Ok(evaluation::evaluate(&ranked)?)
}

/// A trained head with its test metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub outcome: TrainOutcome,
    pub report: MetricReport,
}

pub fn train_and_test(corpus: &Corpus, tables: &FeatureTables, config: &TrainConfig) -> Result<Evaluated> {
    let outcome = train_head(corpus, tables, config)?;
    let report = evaluate_head(&outcome.head, &corpus.split.test, &tables.test)?;
    Ok(Evaluated { outcome, report })
}

/// Result of an in-memory end-to-end run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: TopicModel,
    pub doc_topics: BTreeMap<String, Vec<f64>>,
    pub profiles: Vec<UserProfile>,
    pub full: Evaluated,
    /// Head trained and tested with θ zeroed.
    pub semantic: Option<Evaluated>,
}

/// Trains the topic model, builds profiles and features, and trains/tests the
/// head (and the ablated head when `config.evaluation.compare_ablation`).
pub fn run_experiment<P: EmbeddingProvider + Sync>(corpus: &Corpus, provider: P, config: &RunConfig) -> Result<Experiment> {
    let lda_docs = lda_documents(corpus, config.lda.corpus)?;
    let model = train_topic_model(&lda_docs, &config.lda.config(config.lda.topics, config.seed))
        .map_err(|e| e.in_stage("train-lda"))?;
    let doc_topics = infer_all(&model, &corpus.docs);
    let profiles = build_profiles(corpus, &doc_topics, model.topics(), config.profiles.weighting.into())
        .map_err(|e| e.in_stage("build-profiles"))?;
    let f = Featurizer::new(&corpus.docs, &doc_topics, &profiles, model.topics(), provider, KernelBank::default());
    let tables = FeatureTables::build(&f, corpus).map_err(|e| e.in_stage("features"))?;
    let train_cfg = config.training.config(config.seed);
    let full = train_and_test(corpus, &tables, &train_cfg).map_err(|e| e.in_stage("train"))?;
    let semantic = if config.evaluation.compare_ablation {
        Some(train_and_test(corpus, &tables.ablated(), &train_cfg).map_err(|e| e.in_stage("train"))?)
    } else {
        None
    };
    Ok(Experiment {
        model,
        doc_topics,
        profiles,
        full,
        semantic,
    })
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub topics: usize,
    pub result: std::result::Result<(Coherence, MetricReport), String>,
}

/// Trains one topic model per candidate T and reports its UMass coherence
/// and the test metrics of a head trained on its features. A failing T
/// yields an error row; the others still run.
pub fn sweep_topic_count<P: EmbeddingProvider + Sync>(
    corpus: &Corpus,
    provider: P,
    candidates: &[usize],
    config: &RunConfig,
) -> Result<Vec<SweepRow>> {
    if candidates.is_empty() {
        return Err(Error::Usage("the topic sweep needs at least one candidate T".into()));
    }
    let lda_docs = lda_documents(corpus, config.lda.corpus)?;
    let train_cfg = config.training.config(config.seed);
    let mut tables: Option<FeatureTables> = None;
    let mut rows = Vec::with_capacity(candidates.len());
    for &t in candidates {
        let result = (|| -> Result<(Coherence, MetricReport)> {
            let model = train_topic_model(&lda_docs, &config.lda.config(t, config.seed))?;
            let coh = topics::coherence(&model, &lda_docs, config.lda.top_k)?;
            let doc_topics = infer_all(&model, &corpus.docs);
            let profiles = build_profiles(corpus, &doc_topics, t, config.profiles.weighting.into())?;
            let f = Featurizer::new(&corpus.docs, &doc_topics, &profiles, t, &provider, KernelBank::default());
            // the semantic block does not depend on T, so it is computed once
            let tbl = match tables.take() {
                Some(mut tbl) => {
                    tbl.refresh_interest(&f, corpus)?;
                    tbl
                }
                None => FeatureTables::build(&f, corpus)?,
            };
            let eval = train_and_test(corpus, &tbl, &train_cfg);
            tables = Some(tbl);
            Ok((coh, eval?.report))
        })();
        if let Err(e) = &result {
            log::warn!("sweep T = {t}: {e}");
        }
        rows.push(SweepRow {
            topics: t,
            result: result.map_err(|e| e.to_string()),
        });
    }
    Ok(rows)
}

pub fn render_sweep(rows: &[SweepRow]) -> String {
    let mut s = String::from("T,coherence,MAP,MRR,P@1,A.Clk,error\n");
    for r in rows {
        match &r.result {
            Ok((c, m)) => s.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},\n",
                r.topics, c.mean, m.map, m.mrr, m.p_at_1, m.a_clk
            )),
            Err(e) => s.push_str(&format!("{},,,,,,{}\n", r.topics, e.replace([',', '\n'], " "))),
        }
    }
    s
}
