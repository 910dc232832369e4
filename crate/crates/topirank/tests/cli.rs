use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 3

[synthetic]
user_count = 12
docs_per_user = 10
impressions_per_user = 15

[lda]
iterations = 40

[embeddings]
layers = 2
dim = 16
"#;

fn topirank(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_topirank"));
    cmd.current_dir(dir).args(["--config", "small.toml"]).args(args);
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    dir
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = topirank(dir, args);
    assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

#[test]
fn usage_errors_exit_one() {
    let dir = workspace();
    assert_eq!(code(&topirank(dir.path(), &[])), 1);
    assert_eq!(code(&topirank(dir.path(), &["train-lda", "--out", "x"])), 1);
    assert_eq!(code(&topirank(dir.path(), &["no-such-command"])), 1);
    assert_eq!(code(&topirank(dir.path(), &["--help"])), 0);
    fs::write(dir.path().join("bad.toml"), "unknown_key = 1\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_topirank"))
        .current_dir(dir.path())
        .args(["--config", "bad.toml", "run"])
        .output()
        .unwrap();
    assert_ne!(code(&o), 0);
}

#[test]
fn data_errors_exit_two() {
    let dir = workspace();
    let d = dir.path();
    fs::write(d.join("docs.tsv"), "d1\thello world\nd2\tother text\n").unwrap();
    fs::write(d.join("log.tsv"), "u1\t100\thello\td1,d2\td1\nu1\tlate\thello\td1,d2\td1\n").unwrap();
    let o = topirank(d, &["ingest", "--log", "log.tsv", "--docs", "docs.tsv", "--out", "c"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("log.tsv:2"));

    fs::write(d.join("log.tsv"), "u1\t100\thello\td1,d9\td1\n").unwrap();
    let o = topirank(d, &["ingest", "--log", "log.tsv", "--docs", "docs.tsv", "--out", "c"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("d9"));

    let o = topirank(d, &["train-lda", "--docs", "missing.tsv", "--out", "m"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn full_command_chain() {
    let dir = workspace();
    let d = dir.path();
    ok(d, &["generate-synthetic", "--out", "raw"]);
    let s = ok(d, &["ingest", "--log", "raw/log.tsv", "--docs", "raw/docs.tsv", "--out", "corpus"]);
    assert!(s.contains("train"), "{s}");
    ok(d, &["train-lda", "--corpus", "corpus", "--topics", "4", "--out", "lda.model"]);

    // existing outputs need --force
    let o = topirank(d, &["train-lda", "--corpus", "corpus", "--topics", "4", "--out", "lda.model"]);
    assert_eq!(code(&o), 1);
    ok(d, &["--force", "train-lda", "--corpus", "corpus", "--topics", "4", "--out", "lda.model"]);

    let coh = ok(d, &["coherence", "--model", "lda.model"]);
    assert_eq!(coh.lines().filter(|l| l.starts_with(char::is_numeric)).count(), 4);
    ok(d, &["build-profiles", "--model", "lda.model", "--history", "corpus", "--out", "profiles.tsv"]);
    ok(d, &["export-scatter", "--profiles", "profiles.tsv", "--out", "scatter.csv"]);
    let scatter = fs::read_to_string(d.join("scatter.csv")).unwrap();
    assert_eq!(scatter.lines().next(), Some("user_id,x,y"));

    let log = ok(d, &[
        "train", "--corpus", "corpus", "--model", "lda.model", "--profiles", "profiles.tsv", "--out", "head.ckpt",
    ]);
    assert!(log.lines().filter(|l| l.contains(",128,")).count() == 10, "{log}");
    let eval = ok(d, &["evaluate", "--head", "head.ckpt", "--out", "report.csv"]);
    assert!(eval.contains("full"));
    let report = fs::read_to_string(d.join("report.csv")).unwrap();
    assert!(report.starts_with("model,MAP,MRR,P@1,A.Clk\nfull,"));

    // rank the candidates of the first test impression
    let test = fs::read_to_string(d.join("corpus/test.tsv")).unwrap();
    let cols: Vec<&str> = test.lines().next().unwrap().split('\t').collect();
    let ranked = ok(d, &["rank", "--head", "head.ckpt", "--user", cols[0], "--query", cols[2], "--candidates", cols[3]]);
    assert_eq!(ranked.lines().count(), cols[3].split(',').count());
    assert!(ranked.starts_with("1\t"));

    ok(d, &[
        "export-heatmaps", "--head", "head.ckpt", "--user", cols[0], "--query", cols[2], "--docs", cols[3], "--out",
        "maps",
    ]);
    let interest = fs::read_to_string(d.join("maps/interest.csv")).unwrap();
    assert_eq!(interest.lines().count(), 1 + 11 * cols[3].split(',').count());

    // a cache of every pair reproduces the synthetic-provider evaluation
    ok(d, &["cache-embeddings", "--corpus", "corpus", "--out", "emb.bin"]);
    let cached = ok(d, &["evaluate", "--head", "head.ckpt", "--emb", "emb.bin"]);
    assert_eq!(cached, eval);

    let sweep = ok(d, &["sweep-topics", "--corpus", "corpus", "--topics", "2,3"]);
    assert_eq!(sweep.lines().count(), 3, "{sweep}");
}

#[test]
fn non_finite_embeddings_exit_three() {
    let dir = workspace();
    let d = dir.path();
    fs::write(d.join("docs.tsv"), "d1\thello world\nd2\tother text\n").unwrap();
    fs::write(d.join("pairs.tsv"), "hello\td1\n").unwrap();
    ok(d, &["cache-embeddings", "--pairs", "pairs.tsv", "--docs", "docs.tsv", "--out", "emb.bin"]);
    let mut bytes = fs::read(d.join("emb.bin")).unwrap();
    let n = bytes.len();
    bytes[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
    fs::write(d.join("emb.bin"), bytes).unwrap();
    ok(d, &["generate-synthetic", "--out", "raw"]);
    ok(d, &["ingest", "--log", "raw/log.tsv", "--docs", "raw/docs.tsv", "--out", "corpus"]);
    ok(d, &["train-lda", "--corpus", "corpus", "--topics", "3", "--out", "lda.model"]);
    ok(d, &["build-profiles", "--model", "lda.model", "--history", "corpus", "--out", "profiles.tsv"]);
    let o = topirank(d, &[
        "train", "--corpus", "corpus", "--model", "lda.model", "--profiles", "profiles.tsv", "--emb", "emb.bin",
        "--out", "h2",
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
