//! Command-line interface.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use topirank_core::corpus::{tokenize_truncated, Document, DocumentTable, Partition};
use topirank_core::embeddings::{EmbeddingProvider, SyntheticConfig, SyntheticProvider};
use topirank_core::matching::{KernelBank, SemanticScratch};
use topirank_core::profiles::{self, ClickWeighting};
use topirank_core::ranker;
use topirank_core::topics;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats::cache::{self, PairSpec};
use crate::formats::checkpoint::{self, Checkpoint, Provenance, ProviderSource};
use crate::formats::clicklog::{self, Corpus};
use crate::formats::model::{self, ModelFile};
use crate::formats::profiles as profile_files;
use crate::formats::report::{self, ReportRow};
use crate::formats::{read_text, write_with};
use crate::pipeline::{self, Featurizer, FeatureTables};
use crate::run::{self, absolute, Provider, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "topirank", version, about = "Topic-profile personalized ranking")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Global seed (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Recompute artifacts that already exist.
    #[arg(long, global = true)]
    pub force: bool,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ablation {
    /// Zero the user-interest features.
    Interest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderKind {
    Synthetic,
}

/// Synthetic embedding provider shape.
#[derive(Debug, Clone, Args)]
pub struct EmbeddingArgs {
    /// Encoder layers L.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Embedding width.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Context window half-width of the synthetic provider.
    #[arg(long)]
    pub window: Option<usize>,
}

/// Inputs for rebuilding features; unset paths come from the checkpoint.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Embedding cache; without it the synthetic provider is used.
    #[arg(long)]
    pub emb: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a click log and document table and write a partitioned corpus.
    Ingest {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic click log (log.tsv) and document table (docs.tsv).
    GenerateSynthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        topics: Option<usize>,
        #[arg(long)]
        vocab: Option<usize>,
        #[arg(long)]
        docs_per_user: Option<usize>,
        #[arg(long)]
        impressions_per_user: Option<usize>,
        #[arg(long)]
        candidates: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Train a topic model.
    TrainLda {
        /// Document table; every document is used.
        #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
        docs: Option<PathBuf>,
        /// Corpus directory; documents clicked in history are used.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        topics: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// UMass coherence of a topic model.
    Coherence {
        #[arg(long)]
        model: PathBuf,
        /// Documents to count co-occurrences in (default: the training table).
        #[arg(long)]
        docs: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        topk: usize,
    },
    /// Train one model per topic count and compare coherence and ranking.
    SweepTopics {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        topics: Vec<usize>,
        #[command(flatten)]
        embedding: EmbeddingArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build user topical profiles from the history partition.
    BuildProfiles {
        #[arg(long)]
        model: PathBuf,
        /// Corpus directory.
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Weight repeated clicks.
        #[arg(long)]
        multiset: bool,
    },
    /// Project profiles onto two principal components.
    ExportScatter {
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed (query, document) pairs into a cache file.
    CacheEmbeddings {
        /// TSV of `query_text<TAB>doc_id`; requires --docs.
        #[arg(long, requires = "docs", required_unless_present = "corpus")]
        pairs: Option<PathBuf>,
        #[arg(long)]
        docs: Option<PathBuf>,
        /// Corpus directory; every train/validation/test pair is cached.
        #[arg(long, conflicts_with = "pairs")]
        corpus: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ProviderKind::Synthetic)]
        provider: ProviderKind,
        #[command(flatten)]
        embedding: EmbeddingArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the scoring head.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        emb: Option<PathBuf>,
        #[command(flatten)]
        embedding: EmbeddingArgs,
        #[arg(long)]
        ablate: Option<Ablation>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank candidates for one user and query.
    Rank {
        #[arg(long)]
        head: PathBuf,
        #[arg(long)]
        user: String,
        #[arg(long)]
        query: String,
        #[arg(long, value_delimiter = ',', required = true)]
        candidates: Vec<String>,
        #[command(flatten)]
        sources: SourceArgs,
    },
    /// Evaluate a head on one partition.
    Evaluate {
        #[arg(long)]
        head: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        #[arg(long)]
        ablate: Option<Ablation>,
        #[command(flatten)]
        sources: SourceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write interest and per-layer semantic kernel activations.
    ExportHeatmaps {
        #[arg(long)]
        head: PathBuf,
        #[arg(long)]
        user: String,
        #[arg(long)]
        query: String,
        #[arg(long, value_delimiter = ',', required = true)]
        docs: Vec<String>,
        #[command(flatten)]
        sources: SourceArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage into the configured work directory.
    Run {
        #[arg(long)]
        ablate: Option<Ablation>,
        /// Work directory (overrides the config file).
        #[arg(long)]
        workdir: Option<PathBuf>,
    },
}

struct Context {
    config: RunConfig,
    seed: u64,
    force: bool,
}

impl Context {
    fn synthetic_config(&self, e: &EmbeddingArgs) -> SyntheticConfig {
        let c = &self.config.embeddings;
        SyntheticConfig {
            layers: e.layers.unwrap_or(c.layers),
            dim: e.dim.unwrap_or(c.dim),
            seed: self.seed,
            window: e.window.unwrap_or(c.window),
        }
    }

    /// Refuses to overwrite `path` unless forced.
    fn check_output(&self, path: &Path) -> Result<()> {
        if path.exists() && !self.force {
            return Err(Error::Usage(format!(
                "{} exists; pass --force to overwrite",
                path.display()
            )));
        }
        Ok(())
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ctx = Context {
        seed: cli.seed.unwrap_or(config.seed),
        force: cli.force,
        config,
    };
    let limits = ctx.config.limits.limits();
    let split_cfg = ctx.config.split.config();
    let mut stdout = std::io::stdout().lock();
    let out = &mut stdout;
    let io = |e| Error::io("<stdout>", e);

    match cli.command {
        Command::Ingest { log, docs, out: dir } => {
            let corpus = clicklog::ingest(&log, &docs, &limits, &split_cfg)?;
            clicklog::write_corpus(&dir, &corpus, &split_cfg)?;
            let s = &corpus.split;
            writeln!(
                out,
                "{} docs; history {}, train {}, validation {}, test {} impressions; {} cold users",
                corpus.docs.len(),
                s.history_len(),
                s.train.len(),
                s.validation.len(),
                s.test.len(),
                s.cold_users.len()
            )
            .map_err(io)?;
        }
        Command::GenerateSynthetic {
            out: dir,
            users,
            topics,
            vocab,
            docs_per_user,
            impressions_per_user,
            candidates,
            noise,
        } => {
            let mut spec = ctx.config.synthetic.spec(ctx.seed);
            spec.user_count = users.unwrap_or(spec.user_count);
            spec.true_topic_count = topics.unwrap_or(spec.true_topic_count);
            spec.vocab_size = vocab.unwrap_or(spec.vocab_size);
            spec.docs_per_user = docs_per_user.unwrap_or(spec.docs_per_user);
            spec.impressions_per_user = impressions_per_user.unwrap_or(spec.impressions_per_user);
            spec.candidates_per_impression = candidates.unwrap_or(spec.candidates_per_impression);
            spec.click_noise = noise.unwrap_or(spec.click_noise);
            let (log, docs) = run::write_synthetic(&dir, &spec)?;
            writeln!(out, "wrote {} and {}", log.display(), docs.display()).map_err(io)?;
        }
        Command::TrainLda {
            docs,
            corpus,
            topics,
            iters,
            out: path,
        } => {
            ctx.check_output(&path)?;
            let lda = &ctx.config.lda;
            let mut cfg = lda.config(topics.unwrap_or(lda.topics), ctx.seed);
            if let Some(i) = iters {
                cfg.iterations = i;
            }
            let (train_docs, source) = match (docs, corpus) {
                (Some(d), _) => (clicklog::read_documents(&d, &limits)?.as_slice().to_vec(), d),
                (None, Some(c)) => {
                    let corpus = clicklog::read_corpus(&c)?;
                    (pipeline::lda_documents(&corpus, lda.corpus)?, c.join(clicklog::DOCS_FILE))
                }
                (None, None) => return Err(Error::Usage("train-lda needs --docs or --corpus".into())),
            };
            let model = pipeline::train_topic_model(&train_docs, &cfg)?;
            for k in 0..model.topics().min(10) {
                writeln!(out, "topic {k}: {}", model.top_terms(k, 8).join(" ")).map_err(io)?;
            }
            model::write_model(
                &path,
                &ModelFile {
                    model,
                    source_docs: Some(absolute(&source)),
                },
            )?;
        }
        Command::Coherence { model: path, docs, topk } => {
            let file = model::read_model(&path)?;
            let docs_path = docs.or(file.source_docs.clone()).ok_or_else(|| {
                Error::Usage("the model records no source documents; pass --docs".into())
            })?;
            let table = read_any_documents(&docs_path, &limits)?;
            // co-occurrence is counted over the documents the model was trained on
            let docs: Vec<Document> = table
                .iter()
                .filter(|d| file.model.doc_topics.is_empty() || file.model.doc_topics.contains_key(&d.doc_id))
                .cloned()
                .collect();
            let c = topics::coherence(&file.model, &docs, topk)?;
            writeln!(out, "topic,umass").map_err(io)?;
            for (k, v) in c.per_topic.iter().enumerate() {
                writeln!(out, "{k},{v:.6}").map_err(io)?;
            }
            writeln!(out, "mean,{:.6}", c.mean).map_err(io)?;
        }
        Command::SweepTopics {
            corpus,
            topics,
            embedding,
            out: path,
        } => {
            let corpus = clicklog::read_corpus(&corpus)?;
            let provider = SyntheticProvider::new(ctx.synthetic_config(&embedding))?;
            let mut cfg = ctx.config.clone();
            cfg.seed = ctx.seed;
            let rows = pipeline::sweep_topic_count(&corpus, &provider, &topics, &cfg)?;
            let table = pipeline::render_sweep(&rows);
            out.write_all(table.as_bytes()).map_err(io)?;
            if let Some(p) = path {
                write_with(&p, |w| w.write_all(table.as_bytes()))?;
            }
        }
        Command::BuildProfiles {
            model: model_path,
            history,
            out: path,
            multiset,
        } => {
            ctx.check_output(&path)?;
            let corpus = clicklog::read_corpus(&history)?;
            let m = model::read_model(&model_path)?.model;
            let doc_topics = pipeline::infer_all(&m, &corpus.docs);
            let weighting = if multiset {
                ClickWeighting::Multiset
            } else {
                ctx.config.profiles.weighting.into()
            };
            let profiles = pipeline::build_profiles(&corpus, &doc_topics, m.topics(), weighting)?;
            profile_files::write_profiles(&path, &profiles)?;
            let cold = profiles.iter().filter(|p| p.cold_start).count();
            writeln!(out, "{} profiles ({cold} cold start)", profiles.len()).map_err(io)?;
        }
        Command::ExportScatter { profiles: p, out: path } => {
            let ps = profile_files::read_profiles(&p)?;
            let sc = profiles::profile_scatter(&ps)?;
            profile_files::write_scatter(&path, &sc)?;
            writeln!(out, "variance {:.6} {:.6}", sc.variance[0], sc.variance[1]).map_err(io)?;
        }
        Command::CacheEmbeddings {
            pairs,
            docs,
            corpus,
            provider: ProviderKind::Synthetic,
            embedding,
            out: path,
        } => {
            ctx.check_output(&path)?;
            let provider = SyntheticProvider::new(ctx.synthetic_config(&embedding))?;
            let specs = match (pairs, docs, corpus) {
                (Some(p), Some(d), _) => read_pairs(&p, &read_any_documents(&d, &limits)?, &limits)?,
                (None, _, Some(c)) => {
                    let corpus = clicklog::read_corpus(&c)?;
                    let s = &corpus.split;
                    let imps: Vec<_> = s.train.iter().chain(&s.validation).chain(&s.test).cloned().collect();
                    pipeline::impression_pairs(&imps, &corpus.docs)?
                }
                _ => return Err(Error::Usage("cache-embeddings needs --pairs with --docs, or --corpus".into())),
            };
            let n = cache::write_cache(&path, &provider, &specs)?;
            writeln!(out, "cached {n} pairs").map_err(io)?;
        }
        Command::Train {
            corpus,
            model: model_path,
            profiles: profiles_path,
            emb,
            embedding,
            ablate,
            epochs,
            out: path,
        } => {
            ctx.check_output(&path)?;
            let corpus_data = clicklog::read_corpus(&corpus)?;
            let m = model::read_model(&model_path)?.model;
            let profiles = profile_files::read_profiles(&profiles_path)?;
            check_profile_width(&profiles_path, &profiles, m.topics())?;
            let source = match &emb {
                Some(p) => ProviderSource::Cache(absolute(p)),
                None => {
                    let s = ctx.synthetic_config(&embedding);
                    ProviderSource::Synthetic {
                        seed: s.seed,
                        window: s.window,
                        dim: s.dim,
                    }
                }
            };
            let layers = embedding.layers.unwrap_or(ctx.config.embeddings.layers);
            let provider = Provider::open(&source, layers)?;
            let doc_topics = pipeline::infer_all(&m, &corpus_data.docs);
            let f = Featurizer::new(
                &corpus_data.docs,
                &doc_topics,
                &profiles,
                m.topics(),
                &provider,
                KernelBank::default(),
            );
            let mut tables = FeatureTables::build(&f, &corpus_data)?;
            let ablate = ablate.is_some();
            if ablate {
                tables = tables.ablated();
            }
            let mut cfg = ctx.config.training.config(ctx.seed);
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            let outcome = pipeline::train_head(&corpus_data, &tables, &cfg)?;
            writeln!(out, "epoch,pairs,mean_loss,validation_mrr").map_err(io)?;
            for e in &outcome.log {
                let mrr = e.validation_mrr.map_or(String::from("NA"), |v| format!("{v:.6}"));
                writeln!(out, "{},{},{:.6},{mrr}", e.epoch, e.pairs, e.mean_loss).map_err(io)?;
            }
            writeln!(out, "best epoch {}", outcome.best_epoch).map_err(io)?;
            checkpoint::write_checkpoint(
                &path,
                &Checkpoint {
                    head: outcome.head,
                    topics: m.topics(),
                    layers: provider.layers(),
                    bank: KernelBank::default(),
                    ablate_interest: ablate,
                    provenance: Provenance {
                        corpus: Some(absolute(&corpus)),
                        model: Some(absolute(&model_path)),
                        profiles: Some(absolute(&profiles_path)),
                        provider: Some(source),
                    },
                },
            )?;
        }
        Command::Rank {
            head,
            user,
            query,
            candidates,
            sources,
        } => {
            let loaded = LoadedHead::open(&head, &sources)?;
            let f = loaded.featurizer();
            let tokens = tokenize_truncated(&query, limits.max_query_len);
            if candidates.is_empty() {
                return Err(ranker::RankError::EmptyCandidates.into());
            }
            let dim = loaded.ckpt.layout().dim();
            let profile = f.profile(&user);
            let mut scratch = SemanticScratch::new();
            let mut rows = vec![0.0; dim * candidates.len()];
            for (c, row) in candidates.iter().zip(rows.chunks_exact_mut(dim)) {
                f.candidate_into(&profile, &tokens, c, &mut scratch, row)?;
                if loaded.ckpt.ablate_interest {
                    row[..loaded.ckpt.bank.len()].fill(0.0);
                }
            }
            let ranked = ranker::rank(&loaded.ckpt.head, &candidates, rows.chunks_exact(dim))?;
            for (i, (d, s)) in ranked.iter().enumerate() {
                writeln!(out, "{}\t{d}\t{s:.6}", i + 1).map_err(io)?;
            }
        }
        Command::Evaluate {
            head,
            split,
            ablate,
            sources,
            out: path,
        } => {
            let loaded = LoadedHead::open(&head, &sources)?;
            let f = loaded.featurizer();
            let part = match split {
                SplitArg::Train => Partition::Train,
                SplitArg::Validation => Partition::Validation,
                SplitArg::Test => Partition::Test,
            };
            let imps = loaded.corpus.split.partition(part);
            let mut table = f.table(imps)?;
            let ablate = ablate.is_some() || loaded.ckpt.ablate_interest;
            if ablate {
                table.ablate_interest();
            }
            let r = pipeline::evaluate_head(&loaded.ckpt.head, imps, &table)?;
            let rows = [ReportRow::new(if ablate { "semantic" } else { "full" }, &r)];
            out.write_all(report::render_table(&rows).as_bytes()).map_err(io)?;
            if r.excluded > 0 {
                writeln!(out, "{} impressions without clicks excluded", r.excluded).map_err(io)?;
            }
            if let Some(p) = path {
                report::write_report(&p, &rows)?;
            }
        }
        Command::ExportHeatmaps {
            head,
            user,
            query,
            docs,
            sources,
            out: dir,
        } => {
            let loaded = LoadedHead::open(&head, &sources)?;
            let f = loaded.featurizer();
            let tokens = tokenize_truncated(&query, limits.max_query_len);
            let written = run::export_heatmaps(&f, &user, &tokens, &docs, &dir)?;
            for p in written {
                writeln!(out, "{}", p.display()).map_err(io)?;
            }
        }
        Command::Run { ablate, workdir } => {
            let mut cfg = ctx.config.clone();
            cfg.seed = ctx.seed;
            if let Some(w) = workdir {
                cfg.workdir = w;
            }
            let summary = run::run(
                &cfg,
                RunOptions {
                    force: ctx.force,
                    ablate_interest: ablate.is_some(),
                },
            )?;
            if !summary.skipped.is_empty() {
                writeln!(out, "up to date: {}", summary.skipped.join(", ")).map_err(io)?;
            }
            out.write_all(report::render_table(&summary.rows).as_bytes()).map_err(io)?;
            writeln!(out, "report: {}", summary.report.display()).map_err(io)?;
        }
    }
    Ok(())
}

/// A document table from either a docs TSV or a corpus directory.
fn read_any_documents(path: &Path, limits: &topirank_core::Limits) -> Result<DocumentTable> {
    if path.is_dir() {
        clicklog::read_documents(&path.join(clicklog::DOCS_FILE), limits)
    } else {
        clicklog::read_documents(path, limits)
    }
}

fn read_pairs(path: &Path, docs: &DocumentTable, limits: &topirank_core::Limits) -> Result<Vec<PairSpec>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (q, d) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected `query_text<TAB>doc_id`"))?;
        let doc = docs
            .get(d.trim())
            .ok_or_else(|| Error::parse(path, i + 1, format!("unknown doc_id {:?}", d.trim())))?;
        out.push(PairSpec {
            query: tokenize_truncated(q, limits.max_query_len),
            doc_id: doc.doc_id.clone(),
            doc: doc.tokens.clone(),
        });
    }
    Ok(out)
}

fn check_profile_width(path: &Path, profiles: &[topirank_core::UserProfile], topics: usize) -> Result<()> {
    match profiles.first() {
        Some(p) if p.weights.len() != topics => Err(Error::format(
            path,
            format!("profiles have {} topics, the model has {topics}", p.weights.len()),
        )),
        _ => Ok(()),
    }
}

/// A checkpoint with everything needed to rebuild its features.
struct LoadedHead {
    ckpt: Checkpoint,
    corpus: Corpus,
    doc_topics: BTreeMap<String, Vec<f64>>,
    profiles: Vec<topirank_core::UserProfile>,
    provider: Provider,
}

impl LoadedHead {
    fn open(head: &Path, sources: &SourceArgs) -> Result<Self> {
        let ckpt = checkpoint::read_checkpoint(head, None)?;
        let prov = &ckpt.provenance;
        let pick = |flag: &Option<PathBuf>, rec: &Option<PathBuf>, what: &str| {
            flag.clone().or_else(|| rec.clone()).ok_or_else(|| {
                Error::Usage(format!("no {what} recorded in {}; pass --{what}", head.display()))
            })
        };
        let corpus = clicklog::read_corpus(&pick(&sources.corpus, &prov.corpus, "corpus")?)?;
        let model = model::read_model(&pick(&sources.model, &prov.model, "model")?)?.model;
        let profiles_path = pick(&sources.profiles, &prov.profiles, "profiles")?;
        let profiles = profile_files::read_profiles(&profiles_path)?;
        if model.topics() != ckpt.topics {
            return Err(Error::format(
                head,
                format!("checkpoint has T = {}, the model has {}", ckpt.topics, model.topics()),
            ));
        }
        check_profile_width(&profiles_path, &profiles, model.topics())?;
        let source = match (&sources.emb, &prov.provider) {
            (Some(p), _) => ProviderSource::Cache(p.clone()),
            (None, Some(s)) => s.clone(),
            (None, None) => {
                return Err(Error::Usage(format!(
                    "no embedding provider recorded in {}; pass --emb",
                    head.display()
                )))
            }
        };
        let provider = Provider::open(&source, ckpt.layers)?;
        if provider.layers() != ckpt.layers {
            return Err(Error::format(
                head,
                format!("checkpoint has L = {}, the provider has {}", ckpt.layers, provider.layers()),
            ));
        }
        let doc_topics = pipeline::infer_all(&model, &corpus.docs);
        Ok(Self {
            ckpt,
            corpus,
            doc_topics,
            profiles,
            provider,
        })
    }

    fn featurizer(&self) -> Featurizer<'_, &Provider> {
        Featurizer::new(
            &self.corpus.docs,
            &self.doc_topics,
            &self.profiles,
            self.ckpt.topics,
            &self.provider,
            self.ckpt.bank.clone(),
        )
    }
}

/// Maps an error to its exit code and prints it.
pub fn report_error(e: &Error) -> i32 {
    let mut msg = format!("error: {e}");
    let mut src = std::error::Error::source(e);
    while let Some(s) = src {
        let text = s.to_string();
        if !msg.contains(&text) {
            msg.push_str(&format!("\n  caused by: {text}"));
        }
        src = s.source();
    }
    eprintln!("{msg}");
    e.exit_code()
}
