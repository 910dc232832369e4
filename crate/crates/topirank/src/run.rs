//! File-backed pipeline: every stage writes its artifact into the work
//! directory and is skipped when the artifact already exists (unless forced).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use topirank_core::embeddings::{EmbeddingError, EmbeddingProvider, LayeredEmbeddings, SyntheticConfig, SyntheticProvider};
use topirank_core::matching::{KernelBank, SemanticScratch};
use topirank_core::profiles::{self, UserProfile};
use topirank_core::synthetic::{self, SyntheticSpec};
use topirank_core::topics::TopicModel;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats::cache::{self, CachedProvider};
use crate::formats::checkpoint::{self, Checkpoint, Provenance, ProviderSource};
use crate::formats::clicklog::{self, Corpus};
use crate::formats::heatmap;
use crate::formats::model::{self, ModelFile};
use crate::formats::profiles as profile_files;
use crate::formats::report::{self, ReportRow};
use crate::pipeline::{self, Featurizer, FeatureTables};

/// Raw synthetic TSVs: `log.tsv` and `docs.tsv`.
pub fn write_synthetic(dir: &Path, spec: &SyntheticSpec) -> Result<(PathBuf, PathBuf)> {
    let corpus = synthetic::generate(spec)?;
    let log = dir.join("log.tsv");
    let docs = dir.join("docs.tsv");
    clicklog::write_click_log(&log, &corpus.impressions)?;
    clicklog::write_documents(&docs, &corpus.documents)?;
    Ok((log, docs))
}

/// Either provider behind one type, so callers need not be generic.
pub enum Provider {
    Synthetic(SyntheticProvider),
    Cache(CachedProvider),
}

impl EmbeddingProvider for Provider {
    fn layers(&self) -> usize {
        match self {
            Provider::Synthetic(p) => p.layers(),
            Provider::Cache(p) => p.layers(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Provider::Synthetic(p) => p.dim(),
            Provider::Cache(p) => p.dim(),
        }
    }

    fn embed_pair(
        &self,
        query: &[String],
        doc_id: &str,
        doc: &[String],
    ) -> std::result::Result<(LayeredEmbeddings, LayeredEmbeddings), EmbeddingError> {
        match self {
            Provider::Synthetic(p) => p.embed_pair(query, doc_id, doc),
            Provider::Cache(p) => p.embed_pair(query, doc_id, doc),
        }
    }
}

impl Provider {
    pub fn open(source: &ProviderSource, layers: usize) -> Result<Self> {
        Ok(match source {
            ProviderSource::Synthetic { seed, window, dim } => {
                Provider::Synthetic(SyntheticProvider::new(SyntheticConfig {
                    layers,
                    dim: *dim,
                    seed: *seed,
                    window: *window,
                })?)
            }
            ProviderSource::Cache(p) => Provider::Cache(CachedProvider::open(p)?),
        })
    }
}

/// Absolute form of `p` when it exists, else `p` unchanged.
pub fn absolute(p: &Path) -> PathBuf {
    std::fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

pub fn profile_map(profiles: &[UserProfile]) -> BTreeMap<String, Vec<f64>> {
    profiles
        .iter()
        .map(|p| (p.user_id.clone(), p.weights.clone()))
        .collect()
}

fn file_safe(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// Writes `interest.csv` (θ of every doc) and `semantic-<doc>.csv` (raw
/// per-layer kernel sums Σ_i Σ_j K) for one user and query.
pub fn export_heatmaps<P: EmbeddingProvider + Sync>(
    f: &Featurizer<'_, P>,
    user: &str,
    query: &[String],
    docs: &[String],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let profile = f.profile(user);
    let z = f.bank.len();
    let mut interest = Vec::with_capacity(docs.len());
    let mut written = Vec::new();
    let mut scratch = SemanticScratch::new();
    for d in docs {
        let mut theta = vec![0.0; z];
        f.interest_into(&profile, d, &mut theta)?;
        interest.push((d.clone(), theta));
        let doc = f.docs.get(d).ok_or_else(|| Error::UnknownDocument(d.clone()))?;
        let (q, e) = f.provider.embed_pair(query, d, &doc.tokens)?;
        let act = scratch.activations(&q, &e, &f.bank)?;
        let path = dir.join(format!("semantic-{}.csv", file_safe(d)));
        heatmap::write_semantic(&path, f.bank.mus(), &act)?;
        written.push(path);
    }
    let path = dir.join("interest.csv");
    heatmap::write_interest(&path, f.bank.mus(), &interest)?;
    written.insert(0, path);
    Ok(written)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub force: bool,
    /// Train and report only the interest-ablated head.
    pub ablate_interest: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub rows: Vec<ReportRow>,
    pub report: PathBuf,
    pub executed: Vec<&'static str>,
    pub skipped: Vec<&'static str>,
}

pub struct WorkPaths {
    pub synthetic: PathBuf,
    pub corpus: PathBuf,
    pub model: PathBuf,
    pub profiles: PathBuf,
    pub embeddings: PathBuf,
    pub head: PathBuf,
    pub head_semantic: PathBuf,
    pub report: PathBuf,
    pub report_semantic: PathBuf,
    pub report_table: PathBuf,
    pub scatter: PathBuf,
    pub heatmaps: PathBuf,
}

impl WorkPaths {
    pub fn new(workdir: &Path) -> Self {
        Self {
            synthetic: workdir.join("synthetic"),
            corpus: workdir.join("corpus"),
            model: workdir.join("lda.model"),
            profiles: workdir.join("profiles.tsv"),
            embeddings: workdir.join("emb.bin"),
            head: workdir.join("head.ckpt"),
            head_semantic: workdir.join("head-semantic.ckpt"),
            report: workdir.join("report.csv"),
            report_semantic: workdir.join("report-semantic.csv"),
            report_table: workdir.join("report.txt"),
            scatter: workdir.join("scatter.csv"),
            heatmaps: workdir.join("heatmaps"),
        }
    }
}

struct Stages {
    force: bool,
    executed: Vec<&'static str>,
    skipped: Vec<&'static str>,
}

impl Stages {
    /// Runs `body` unless every output exists and the run is not forced.
    fn stage(&mut self, name: &'static str, outputs: &[&Path], body: impl FnOnce() -> Result<()>) -> Result<()> {
        if !self.force && outputs.iter().all(|p| p.exists()) {
            log::info!("{name}: up to date");
            self.skipped.push(name);
            return Ok(());
        }
        log::info!("{name}: running");
        body().map_err(|e| e.in_stage(name))?;
        self.executed.push(name);
        Ok(())
    }
}

/// Lazily loaded intermediate state shared by the later stages.
struct Loaded {
    corpus: Corpus,
    model: TopicModel,
    doc_topics: BTreeMap<String, Vec<f64>>,
    profiles: Vec<UserProfile>,
}

fn load_state(paths: &WorkPaths) -> Result<Loaded> {
    let corpus = clicklog::read_corpus(&paths.corpus)?;
    let model = model::read_model(&paths.model)?.model;
    let doc_topics = pipeline::infer_all(&model, &corpus.docs);
    let profiles = profile_files::read_profiles(&paths.profiles)?;
    Ok(Loaded {
        corpus,
        model,
        doc_topics,
        profiles,
    })
}

/// Executes ingest/generate → train-lda → build-profiles → cache-embeddings →
/// train → evaluate → exports in `config.workdir`.
pub fn run(config: &RunConfig, opts: RunOptions) -> Result<RunSummary> {
    let paths = WorkPaths::new(&config.workdir);
    std::fs::create_dir_all(&config.workdir).map_err(|e| Error::io(&config.workdir, e))?;
    let mut st = Stages {
        force: opts.force,
        executed: Vec::new(),
        skipped: Vec::new(),
    };
    let split_cfg = config.split.config();
    let limits = config.limits.limits();

    let corpus_marker = paths.corpus.join(clicklog::SPLIT_FILE);
    st.stage("ingest", &[&corpus_marker], || {
        let (log, docs) = match &config.input {
            Some(input) => (input.log.clone(), input.docs.clone()),
            None => write_synthetic(&paths.synthetic, &config.synthetic.spec(config.seed))?,
        };
        let corpus = clicklog::ingest(&log, &docs, &limits, &split_cfg)?;
        clicklog::write_corpus(&paths.corpus, &corpus, &split_cfg)
    })?;

    st.stage("train-lda", &[&paths.model], || {
        let corpus = clicklog::read_corpus(&paths.corpus)?;
        let docs = pipeline::lda_documents(&corpus, config.lda.corpus)?;
        let model = pipeline::train_topic_model(&docs, &config.lda.config(config.lda.topics, config.seed))?;
        model::write_model(
            &paths.model,
            &ModelFile {
                model,
                source_docs: Some(absolute(&paths.corpus.join(clicklog::DOCS_FILE))),
            },
        )
    })?;

    st.stage("build-profiles", &[&paths.profiles], || {
        let corpus = clicklog::read_corpus(&paths.corpus)?;
        let model = model::read_model(&paths.model)?.model;
        let doc_topics = pipeline::infer_all(&model, &corpus.docs);
        let profiles =
            pipeline::build_profiles(&corpus, &doc_topics, model.topics(), config.profiles.weighting.into())?;
        profile_files::write_profiles(&paths.profiles, &profiles)
    })?;

    let source = match &config.embeddings.cache {
        Some(p) => ProviderSource::Cache(absolute(p)),
        None => ProviderSource::Synthetic {
            seed: config.seed,
            window: config.embeddings.window,
            dim: config.embeddings.dim,
        },
    };
    if config.embeddings.write_cache {
        st.stage("cache-embeddings", &[&paths.embeddings], || {
            let corpus = clicklog::read_corpus(&paths.corpus)?;
            let provider = Provider::open(&source, config.embeddings.layers)?;
            let imps: Vec<_> = corpus
                .split
                .train
                .iter()
                .chain(&corpus.split.validation)
                .chain(&corpus.split.test)
                .cloned()
                .collect();
            let pairs = pipeline::impression_pairs(&imps, &corpus.docs)?;
            cache::write_cache(&paths.embeddings, &provider, &pairs)?;
            Ok(())
        })?;
    }

    // features are only computed when a stage below needs them
    let mut state: Option<Loaded> = None;
    let mut tables: Option<FeatureTables> = None;
    let provider = Provider::open(&source, config.embeddings.layers)?;
    let provenance = Provenance {
        corpus: Some(absolute(&paths.corpus)),
        model: Some(absolute(&paths.model)),
        profiles: Some(absolute(&paths.profiles)),
        provider: Some(source.clone()),
    };
    let train_cfg = config.training.config(config.seed);

    let variants: Vec<(bool, &PathBuf)> = if opts.ablate_interest {
        vec![(true, &paths.head_semantic)]
    } else if config.evaluation.compare_ablation {
        vec![(false, &paths.head), (true, &paths.head_semantic)]
    } else {
        vec![(false, &paths.head)]
    };

    macro_rules! ensure_tables {
        () => {{
            if state.is_none() {
                state = Some(load_state(&paths)?);
            }
            let s = state.as_ref().expect("loaded");
            if tables.is_none() {
                let f = Featurizer::new(
                    &s.corpus.docs,
                    &s.doc_topics,
                    &s.profiles,
                    s.model.topics(),
                    &provider,
                    KernelBank::default(),
                );
                tables = Some(FeatureTables::build(&f, &s.corpus)?);
            }
            (s, tables.as_ref().expect("built"))
        }};
    }

    for &(ablate, head_path) in &variants {
        st.stage("train", &[head_path], || {
            let (s, t) = ensure_tables!();
            let t = if ablate { t.ablated() } else { t.clone() };
            let outcome = pipeline::train_head(&s.corpus, &t, &train_cfg)?;
            log::info!("train: best epoch {}", outcome.best_epoch);
            checkpoint::write_checkpoint(
                head_path,
                &Checkpoint {
                    head: outcome.head,
                    topics: s.model.topics(),
                    layers: provider.layers(),
                    bank: KernelBank::default(),
                    ablate_interest: ablate,
                    provenance: provenance.clone(),
                },
            )
        })?;
    }

    let report_path = if opts.ablate_interest {
        &paths.report_semantic
    } else {
        &paths.report
    };
    st.stage("evaluate", &[report_path, &paths.report_table], || {
        let (s, t) = ensure_tables!();
        let mut rows = Vec::new();
        for &(ablate, head_path) in &variants {
            let layout = t.test.layout();
            let ckpt = checkpoint::read_checkpoint(head_path, Some(layout))?;
            let test = if ablate {
                let mut x = t.test.clone();
                x.ablate_interest();
                x
            } else {
                t.test.clone()
            };
            let r = pipeline::evaluate_head(&ckpt.head, &s.corpus.split.test, &test)?;
            rows.push(ReportRow::new(if ablate { "semantic" } else { "full" }, &r));
        }
        report::write_report(report_path, &rows)?;
        let table = report::render_table(&rows);
        crate::formats::write_with(&paths.report_table, |w| w.write_all(table.as_bytes()))
    })?;

    st.stage("export", &[&paths.scatter], || {
        if state.is_none() {
            state = Some(load_state(&paths)?);
        }
        let s = state.as_ref().expect("loaded");
        let sc = profiles::profile_scatter(&s.profiles).unwrap_or_else(|e| {
            log::warn!("scatter left empty: {e}");
            profiles::Scatter {
                points: Vec::new(),
                variance: [0.0; 2],
                degenerate: true,
            }
        });
        profile_files::write_scatter(&paths.scatter, &sc)?;
        if let Some(imp) = s.corpus.split.test.first() {
            let f = Featurizer::new(
                &s.corpus.docs,
                &s.doc_topics,
                &s.profiles,
                s.model.topics(),
                &provider,
                KernelBank::default(),
            );
            export_heatmaps(&f, imp.user_id(), &imp.query.tokens, &imp.candidates, &paths.heatmaps)?;
        }
        Ok(())
    })?;

    let rows = report::read_report(report_path)?;
    Ok(RunSummary {
        rows,
        report: report_path.clone(),
        executed: st.executed,
        skipped: st.skipped,
    })
}
