//! End-to-end tests of the `lre` binary: artifact round trips, pipeline
//! orchestration, and the exit-code contract (0 ok, 1 usage, 2 data,
//! 3 numeric).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lre"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// A deterministic three-topic corpus, enough for smoke-level training.
fn corpus_text() -> String {
    const TOPICS: [[&str; 3]; 3] = [
        ["cat", "dog", "mouse"],
        ["cow", "barn", "hay"],
        ["rain", "cloud", "sun"],
    ];
    let mut text = String::new();
    for i in 0..90 {
        let t = &TOPICS[i % 3];
        writeln!(
            text,
            "the {} and the {} near the {} of the {}",
            t[i % 3],
            t[(i + 1) % 3],
            t[(i + 2) % 3],
            t[i % 3]
        )
        .unwrap();
    }
    text
}

fn write_corpus(dir: &Path) -> PathBuf {
    let path = dir.join("corpus.txt");
    fs::write(&path, corpus_text()).unwrap();
    path
}

fn extract(corpus: &Path, out: &Path) {
    let run = run(&[
        "extract",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--min-count",
        "1",
        "--window",
        "3",
        "--weighting",
        "flat",
    ]);
    assert_eq!(code(&run), 0, "extract failed: {}", stderr(&run));
}

fn train_glove(cooc: &Path, out: &Path) {
    let run = run(&[
        "train",
        "--cooc",
        cooc.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--model",
        "glove",
        "--d",
        "8",
        "--epochs",
        "30",
        "--lr",
        "0.05",
        "--seed",
        "7",
    ]);
    assert_eq!(code(&run), 0, "train failed: {}", stderr(&run));
}

fn write_similarity(dir: &Path) -> PathBuf {
    let path = dir.join("dev.tsv");
    fs::write(
        &path,
        "# dev pairs\ncat\tdog\t9.0\nrain\tsun\t8.0\ncat\train\t2.0\ndog\thay\t1.0\ncat\tzebra\t5.0\n",
    )
    .unwrap();
    path
}

fn write_analogy(dir: &Path) -> PathBuf {
    let path = dir.join("analogy.txt");
    fs::write(
        &path,
        ": smoke\ncat dog cow barn\nrain sun cat dog\ncat zebra cow hay\n",
    )
    .unwrap();
    path
}

#[test]
fn extract_writes_artifacts_that_validate_clean() {
    let tmp = TempDir::new().unwrap();
    let corpus = write_corpus(tmp.path());
    let arts = tmp.path().join("arts");
    extract(&corpus, &arts);
    assert!(arts.join("vocab.txt").is_file());
    assert!(arts.join("cooc.txt").is_file());

    let check = run(&["validate", arts.to_str().unwrap()]);
    assert_eq!(code(&check), 0, "{}", stdout(&check));
    assert_eq!(stdout(&check).trim(), "ok");
}

#[test]
fn train_neighbors_and_eval_round_trip() {
    let tmp = TempDir::new().unwrap();
    let corpus = write_corpus(tmp.path());
    let arts = tmp.path().join("arts");
    let emb = tmp.path().join("emb");
    extract(&corpus, &arts);
    train_glove(&arts, &emb);

    let check = run(&["validate", emb.to_str().unwrap()]);
    assert_eq!(code(&check), 0, "{}", stdout(&check));

    let meta = fs::read_to_string(emb.join("meta.txt")).unwrap();
    assert!(meta.contains("model=glove"), "{meta}");
    assert!(meta.contains("d=8"), "{meta}");

    let near = run(&[
        "neighbors",
        "--emb",
        emb.to_str().unwrap(),
        "--word",
        "CAT",
        "--k",
        "3",
    ]);
    assert_eq!(code(&near), 0, "{}", stderr(&near));
    let lines: Vec<String> = stdout(&near).lines().map(String::from).collect();
    assert_eq!(lines.len(), 3);
    for line in &lines {
        let (token, score) = line.split_once('\t').expect("token<TAB>score");
        assert_ne!(token, "cat", "vec-vec neighbors exclude the query");
        score.parse::<f64>().unwrap();
    }

    let sim_data = write_similarity(tmp.path());
    let sim = run(&[
        "eval-similarity",
        "--emb",
        emb.to_str().unwrap(),
        "--data",
        sim_data.to_str().unwrap(),
    ]);
    assert_eq!(code(&sim), 0, "{}", stderr(&sim));
    let text = stdout(&sim);
    assert!(text.contains("spearman "), "{text}");
    assert!(text.contains("(4/5)"), "one pair is out of vocabulary: {text}");

    let ana_data = write_analogy(tmp.path());
    let ana = run(&[
        "eval-analogy",
        "--emb",
        emb.to_str().unwrap(),
        "--data",
        ana_data.to_str().unwrap(),
        "--rule",
        "3cosadd",
    ]);
    assert_eq!(code(&ana), 0, "{}", stderr(&ana));
    let text = stdout(&ana);
    assert!(text.contains("section smoke:"), "{text}");
    assert!(text.contains("1 skipped"), "{text}");
    assert!(text.contains("accuracy "), "{text}");
}

#[test]
fn gibbs_cd_solver_trains_and_rejects_other_models() {
    let tmp = TempDir::new().unwrap();
    let corpus = write_corpus(tmp.path());
    let arts = tmp.path().join("arts");
    let emb = tmp.path().join("emb");
    extract(&corpus, &arts);

    let ok = run(&[
        "train",
        "--cooc",
        arts.to_str().unwrap(),
        "--out",
        emb.to_str().unwrap(),
        "--solver",
        "gibbs-cd",
        "--d",
        "4",
        "--epochs",
        "3",
        "--batch-size",
        "64",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    let meta = fs::read_to_string(emb.join("meta.txt")).unwrap();
    assert!(meta.contains("solver=gibbs-cd"), "{meta}");
    assert!(meta.contains("batch-size=64"), "{meta}");

    let bad = run(&[
        "train",
        "--cooc",
        arts.to_str().unwrap(),
        "--out",
        emb.to_str().unwrap(),
        "--solver",
        "gibbs-cd",
        "--model",
        "glove",
    ]);
    assert_eq!(code(&bad), 1, "{}", stderr(&bad));
    assert!(stderr(&bad).contains("gibbs-cd"), "{}", stderr(&bad));
}

#[test]
fn pipeline_runs_stages_reports_scores_and_skips_when_done() {
    let tmp = TempDir::new().unwrap();
    let corpus = write_corpus(tmp.path());
    let sim_data = write_similarity(tmp.path());
    let out = tmp.path().join("run");
    let args = [
        "pipeline",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--min-count",
        "1",
        "--window",
        "3",
        "--weighting",
        "flat",
        "--model",
        "glove",
        "--d",
        "8",
        "--epochs",
        "10",
        "--lr",
        "0.05",
        "--seed",
        "5",
        "--similarity-data",
        sim_data.to_str().unwrap(),
    ];

    let first = bin().args(args).output().unwrap();
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    assert!(stdout(&first).contains("spearman "), "{}", stdout(&first));
    let vectors = fs::read(out.join("vectors.txt")).unwrap();

    let second = bin().args(args).output().unwrap();
    assert_eq!(code(&second), 0, "{}", stderr(&second));
    let notes = stderr(&second);
    assert!(notes.contains("skipping"), "{notes}");
    assert_eq!(fs::read(out.join("vectors.txt")).unwrap(), vectors);
    assert!(
        stdout(&second).contains("spearman "),
        "evaluation still runs on skipped stages: {}",
        stdout(&second)
    );

    let forced = bin().args(args).arg("--force").output().unwrap();
    assert_eq!(code(&forced), 0, "{}", stderr(&forced));
    assert!(!stderr(&forced).contains("skipping"), "{}", stderr(&forced));
    assert_eq!(
        fs::read(out.join("vectors.txt")).unwrap(),
        vectors,
        "same seed, same bytes"
    );
}

#[test]
fn identical_pipeline_runs_write_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let corpus = write_corpus(tmp.path());
    let mut outs = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let done = run(&[
            "pipeline",
            "--corpus",
            corpus.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--min-count",
            "1",
            "--model",
            "sgns",
            "--d",
            "6",
            "--epochs",
            "8",
            "--seed",
            "11",
        ]);
        assert_eq!(code(&done), 0, "{}", stderr(&done));
        outs.push(out);
    }
    for file in ["vocab.txt", "cooc.txt", "vectors.txt", "covectors.txt", "meta.txt"] {
        let a = fs::read(outs[0].join(file)).unwrap();
        let b = fs::read(outs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn pipeline_with_zero_epochs_writes_the_seeded_init() {
    let tmp = TempDir::new().unwrap();
    let corpus = write_corpus(tmp.path());
    let out = tmp.path().join("run");
    let done = run(&[
        "pipeline",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--min-count",
        "1",
        "--model",
        "hilbert-mle",
        "--d",
        "5",
        "--epochs",
        "0",
        "--seed",
        "21",
    ]);
    assert_eq!(code(&done), 0, "{}", stderr(&done));

    let (_, params) = lre_core::io::read_embeddings::<f64>(&out).unwrap();
    let stats = lre_core::io::read_cooc(&out.join("cooc.txt")).unwrap();
    let model = lre_core::losses::LossModel::HilbertMle { tau: 2.0 };
    let cfg = lre_core::trainer::TrainConfig {
        d: 5,
        epochs: 0,
        seed: 21,
        ..lre_core::trainer::TrainConfig::default()
    };
    let expect = lre_core::trainer::init_params::<f64>(&model, &stats, &cfg).unwrap();
    assert_eq!(params.w, expect.w);
    assert_eq!(params.v, expect.v);
}

#[test]
fn pipeline_without_corpus_leaves_no_partial_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let gone = tmp.path().join("nope.txt");
    let fail = run(&[
        "pipeline",
        "--corpus",
        gone.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&fail), 2, "{}", stderr(&fail));
    assert!(stderr(&fail).contains("nope.txt"), "{}", stderr(&fail));
    assert!(!out.exists(), "failed pipeline must not create outputs");
}

#[test]
fn pipeline_reads_config_file_with_flag_overrides() {
    let tmp = TempDir::new().unwrap();
    let corpus = write_corpus(tmp.path());
    let out = tmp.path().join("run");
    let config = tmp.path().join("job.conf");
    fs::write(
        &config,
        format!(
            "# smoke job\ncorpus={}\nout={}\nmin-count=1\nmodel=glove\nd=4\nepochs=5\nlr=0.05\n",
            corpus.display(),
            out.display()
        ),
    )
    .unwrap();

    let done = run(&[
        "pipeline",
        "--config",
        config.to_str().unwrap(),
        "--d",
        "6",
    ]);
    assert_eq!(code(&done), 0, "{}", stderr(&done));
    let meta = fs::read_to_string(out.join("meta.txt")).unwrap();
    assert!(meta.contains("d=6"), "flag overrides config: {meta}");

    fs::write(&config, "bogus=1\n").unwrap();
    let bad = run(&["pipeline", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&bad), 1, "{}", stderr(&bad));
    assert!(
        stderr(&bad).contains("unknown config key"),
        "{}",
        stderr(&bad)
    );
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&["extract", "--bogus"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&[])), 1);

    let tmp = TempDir::new().unwrap();
    let corpus = write_corpus(tmp.path());
    let arts = tmp.path().join("arts");
    extract(&corpus, &arts);
    let bad_model = run(&[
        "train",
        "--cooc",
        arts.to_str().unwrap(),
        "--out",
        tmp.path().join("emb").to_str().unwrap(),
        "--model",
        "nope",
    ]);
    assert_eq!(code(&bad_model), 1, "{}", stderr(&bad_model));
    assert!(stderr(&bad_model).contains("unknown model"));
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["pipeline", "--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn data_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let missing = run(&[
        "train",
        "--cooc",
        tmp.path().join("nothere").to_str().unwrap(),
        "--out",
        tmp.path().join("emb").to_str().unwrap(),
    ]);
    assert_eq!(code(&missing), 2, "{}", stderr(&missing));

    let corpus = write_corpus(tmp.path());
    let arts = tmp.path().join("arts");
    let emb = tmp.path().join("emb");
    extract(&corpus, &arts);
    train_glove(&arts, &emb);
    let oov = run(&[
        "neighbors",
        "--emb",
        emb.to_str().unwrap(),
        "--word",
        "zebra",
    ]);
    assert_eq!(code(&oov), 2, "{}", stderr(&oov));
    assert!(stderr(&oov).contains("zebra"));
}

#[test]
fn numeric_failures_exit_three() {
    let tmp = TempDir::new().unwrap();
    let corpus = write_corpus(tmp.path());
    let arts = tmp.path().join("arts");
    extract(&corpus, &arts);
    let diverged = run(&[
        "train",
        "--cooc",
        arts.to_str().unwrap(),
        "--out",
        tmp.path().join("emb").to_str().unwrap(),
        "--model",
        "glove",
        "--d",
        "4",
        "--epochs",
        "4",
        "--lr",
        "1e9",
    ]);
    assert_eq!(code(&diverged), 3, "{}", stderr(&diverged));
    assert!(stderr(&diverged).contains("diverged"), "{}", stderr(&diverged));
}

#[test]
fn validate_reports_planted_faults_and_exits_two() {
    let tmp = TempDir::new().unwrap();
    let corpus = write_corpus(tmp.path());
    let arts = tmp.path().join("arts");
    extract(&corpus, &arts);

    // Corrupt the totals field of the cooccurrence header.
    let cooc_path = arts.join("cooc.txt");
    let text = fs::read_to_string(&cooc_path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let mut header: Vec<String> = lines[0].split(' ').map(String::from).collect();
    let n_total_field = header.last_mut().unwrap();
    *n_total_field = format!("{}", n_total_field.parse::<f64>().unwrap() + 100.0);
    let header = header.join(" ");
    lines[0] = &header;
    fs::write(&cooc_path, lines.join("\n") + "\n").unwrap();

    let check = run(&["validate", arts.to_str().unwrap()]);
    assert_eq!(code(&check), 2, "{}", stdout(&check));
    assert!(stdout(&check).contains("cooc.txt"), "{}", stdout(&check));

    let gone = run(&["validate", tmp.path().join("void").to_str().unwrap()]);
    assert_eq!(code(&gone), 1, "a missing directory is a usage error");
}
