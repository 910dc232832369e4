use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use topirank::formats::cache::{record_len, write_cache, CachedProvider, PairSpec, HEADER_LEN};
use topirank::formats::checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, Provenance, ProviderSource};
use topirank::formats::clicklog::{self, Corpus};
use topirank::formats::heatmap;
use topirank::formats::model::{read_model, write_model, ModelFile};
use topirank::formats::profiles::{read_profiles, write_profiles};
use topirank::formats::report::{read_report, write_report, ReportRow};
use topirank::pipeline;
use topirank::run::write_synthetic;
use topirank::Error;
use topirank_core::corpus::{Limits, SplitConfig};
use topirank_core::embeddings::{EmbeddingProvider, SyntheticConfig, SyntheticProvider};
use topirank_core::evaluation::MetricReport;
use topirank_core::matching::KernelBank;
use topirank_core::profiles::ClickWeighting;
use topirank_core::ranker::{rank, FeatureLayout, ScoringHead};
use topirank_core::synthetic::SyntheticSpec;
use topirank_core::topics::TopicModelConfig;

fn small_spec() -> SyntheticSpec {
    SyntheticSpec {
        user_count: 12,
        docs_per_user: 10,
        impressions_per_user: 15,
        ..SyntheticSpec::default()
    }
}

fn small_corpus(dir: &Path) -> Corpus {
    let (log, docs) = write_synthetic(&dir.join("raw"), &small_spec()).unwrap();
    clicklog::ingest(&log, &docs, &Limits::default(), &SplitConfig::default()).unwrap()
}

#[test]
fn corpus_survives_write_and_read() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let out = dir.path().join("corpus");
    clicklog::write_corpus(&out, &corpus, &SplitConfig::default()).unwrap();
    assert!(clicklog::corpus_exists(&out));
    let back = clicklog::read_corpus(&out).unwrap();
    assert_eq!(back, corpus);
}

#[test]
fn model_and_profiles_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let docs: Vec<_> = corpus.docs.iter().cloned().collect();
    let cfg = TopicModelConfig {
        iterations: 20,
        ..TopicModelConfig::new(4)
    };
    let model = pipeline::train_topic_model(&docs, &cfg).unwrap();
    let file = ModelFile {
        model,
        source_docs: Some(dir.path().join("docs.tsv")),
    };
    let path = dir.path().join("lda.model");
    write_model(&path, &file).unwrap();
    assert_eq!(read_model(&path).unwrap(), file);

    let doc_topics = pipeline::infer_all(&file.model, &corpus.docs);
    let profiles = pipeline::build_profiles(&corpus, &doc_topics, 4, ClickWeighting::Set).unwrap();
    let path = dir.path().join("profiles.tsv");
    write_profiles(&path, &profiles).unwrap();
    let back = read_profiles(&path).unwrap();
    assert_eq!(back.len(), profiles.len());
    for (a, b) in back.iter().zip(&profiles) {
        assert_eq!(a.user_id, b.user_id);
        assert_eq!(a.weights, b.weights);
    }
}

#[test]
fn truncated_model_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.model");
    fs::write(&path, "topirank-topic-model 1\ntopics 3\n").unwrap();
    let e = read_model(&path).unwrap_err();
    assert_eq!(e.exit_code(), 2, "{e}");
}

fn checkpoint(layers: usize) -> Checkpoint {
    let layout = FeatureLayout { kernels: 11, layers };
    let head = ScoringHead {
        weights: (0..layout.dim()).map(|i| ((i * 37 % 101) as f64 - 50.0) / 977.0).collect(),
        bias: 0.125,
    };
    Checkpoint {
        head,
        topics: 5,
        layers,
        bank: KernelBank::default(),
        ablate_interest: false,
        provenance: Provenance {
            corpus: Some("/data/corpus".into()),
            model: Some("/data/lda.model".into()),
            profiles: None,
            provider: Some(ProviderSource::Synthetic {
                seed: 9,
                window: 2,
                dim: 16,
            }),
        },
    }
}

#[test]
fn checkpoint_reproduces_scores_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("head.ckpt");
    let ck = checkpoint(3);
    write_checkpoint(&path, &ck).unwrap();
    let back = read_checkpoint(&path, Some(ck.layout())).unwrap();
    assert_eq!(back, ck);

    let dim = ck.layout().dim();
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|r| (0..dim).map(|i| -((r * dim + i) as f64).sqrt() / 7.0).collect())
        .collect();
    let ids: Vec<String> = (0..6).map(|i| format!("d{i}")).collect();
    for row in &rows {
        assert_eq!(
            ck.head.score_features(row).unwrap().to_bits(),
            back.head.score_features(row).unwrap().to_bits()
        );
    }

    // a bias shifted by one moves every score by one and keeps the order
    let mut shifted = back.clone();
    shifted.head.bias += 1.0;
    let a = rank(&back.head, &ids, rows.iter().map(Vec::as_slice)).unwrap();
    let b = rank(&shifted.head, &ids, rows.iter().map(Vec::as_slice)).unwrap();
    for ((da, sa), (db, sb)) in a.iter().zip(&b) {
        assert_eq!(da, db);
        assert!((sb - sa - 1.0).abs() < 1e-12);
    }
}

#[test]
fn checkpoint_dimension_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("head.ckpt");
    let ck = checkpoint(2);
    write_checkpoint(&path, &ck).unwrap();

    let wrong = FeatureLayout { kernels: 11, layers: 12 };
    assert!(matches!(read_checkpoint(&path, Some(wrong)), Err(Error::Format { .. })));

    let text = fs::read_to_string(&path).unwrap().replace("dim 33", "dim 34");
    fs::write(&path, text).unwrap();
    let e = read_checkpoint(&path, None).unwrap_err();
    assert!(matches!(e, Error::Parse { .. }), "{e}");
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn cache_size_matches_record_layout() {
    let dir = tempfile::tempdir().unwrap();
    let provider = SyntheticProvider::new(SyntheticConfig {
        layers: 12,
        dim: 64,
        seed: 1,
        window: 2,
    })
    .unwrap();
    let pairs: Vec<PairSpec> = (0..100)
        .map(|i| PairSpec {
            query: (0..1 + i % 4).map(|k| format!("q{k}")).collect(),
            doc_id: format!("doc_{i:03}"),
            doc: (0..5 + i % 7).map(|k| format!("w{}", (i + k) % 13)).collect(),
        })
        .collect();
    let path = dir.path().join("emb.bin");
    assert_eq!(write_cache(&path, &provider, &pairs).unwrap(), 100);
    let expected: usize = HEADER_LEN
        + pairs
            .iter()
            .map(|p| record_len(&p.doc_id, p.query.len(), p.doc.len(), 12, 64))
            .sum::<usize>();
    assert_eq!(fs::metadata(&path).unwrap().len() as usize, expected);

    let cache = CachedProvider::open(&path).unwrap();
    assert_eq!(cache.len(), 100);
    let p = &pairs[42];
    assert_eq!(
        cache.embed_pair(&p.query, &p.doc_id, &p.doc).unwrap(),
        provider.embed_pair(&p.query, &p.doc_id, &p.doc).unwrap()
    );
}

#[test]
fn heatmaps_cover_every_document() {
    let dir = tempfile::tempdir().unwrap();
    let bank = KernelBank::default();
    let rows: Vec<(String, Vec<f64>)> = (0..7).map(|d| (format!("d{d}"), vec![-1.0; 11])).collect();
    let path = dir.path().join("interest.csv");
    heatmap::write_interest(&path, bank.mus(), &rows).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("doc_id,kernel_mu,value"));
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 7 * 11);
    let docs: BTreeSet<&str> = body.iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(docs.len(), 7);

    let path = dir.path().join("semantic.csv");
    heatmap::write_semantic(&path, bank.mus(), &vec![0.5; 3 * 11]).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let layers: BTreeSet<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(layers, BTreeSet::from(["1", "2", "3"]));
}

#[test]
fn report_round_trips_at_six_decimals() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let m = MetricReport {
        map: 0.5,
        mrr: 2.0 / 3.0,
        p_at_1: 0.25,
        a_clk: 3.125,
        query_count: 4,
        excluded: 0,
    };
    write_report(&path, &[ReportRow::new("full", &m)]).unwrap();
    let back = read_report(&path).unwrap();
    assert_eq!(back[0].model, "full");
    assert_eq!(back[0].map, 0.5);
    assert!((back[0].mrr - 2.0 / 3.0).abs() < 1e-6);
    assert_eq!(fs::read_to_string(&path).unwrap().lines().next(), Some("model,MAP,MRR,P@1,A.Clk"));
}
