//! Subcommand execution and pipeline orchestration.
//!
//! Progress goes to stderr; results (scores, neighbor lists, findings) go
//! to stdout.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use lre_core::corpus::{build_vocab, count_cooccurrences, Weighting};
use lre_core::eval::{
    eval_analogy, eval_similarity, nearest_neighbors, AnalogyDataset, AnalogyReport, AnalogyRule,
    SimilarityDataset, SimilarityMode, SimilarityReport,
};
use lre_core::io::{
    read_cooc, read_embeddings, read_vocab, validate_artifacts, write_cooc, write_embeddings,
    write_vocab, COOC_FILE, COVECTORS_FILE, META_FILE, VECTORS_FILE, VOCAB_FILE,
};
use lre_core::sampler::train_cd;
use lre_core::trainer::{train, Trained};
use lre_core::{Error, Result};

use crate::args::{Cli, Command, NeighborsArgs};
use crate::config::{PipelineConfig, Solver, TrainSettings};

/// Executes one parsed command line, returning the process exit code for
/// the non-error outcomes.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Extract(a) => {
            stage_extract(
                &a.corpus,
                a.vocab_size,
                a.min_count,
                a.window,
                a.weighting,
                &a.out,
            )?;
            Ok(0)
        }
        Command::Train(a) => {
            stage_train(&a.cooc, &a.settings(), &a.out)?;
            Ok(0)
        }
        Command::EvalSimilarity(a) => {
            let report = stage_eval_similarity(&a.emb, &a.data, a.mode)?;
            print_similarity(&report);
            Ok(0)
        }
        Command::EvalAnalogy(a) => {
            let report = stage_eval_analogy(&a.emb, &a.data, a.rule)?;
            print_analogy(&report);
            Ok(0)
        }
        Command::Neighbors(a) => {
            run_neighbors(&a)?;
            Ok(0)
        }
        Command::Validate(a) => run_validate(&a.dir),
        Command::Pipeline(a) => {
            let mut config = match &a.config {
                Some(path) => PipelineConfig::read(path)?,
                None => PipelineConfig::default(),
            };
            a.apply_to(&mut config);
            run_pipeline(&config, a.force)?;
            Ok(0)
        }
    }
}

fn open_text(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::file(path, e))
}

/// Builds the vocabulary and cooccurrence counts and writes both into
/// `out`.
pub fn stage_extract(
    corpus: &Path,
    vocab_size: usize,
    min_count: u64,
    window: usize,
    weighting: Weighting,
    out: &Path,
) -> Result<()> {
    let vocab = build_vocab(open_text(corpus)?, vocab_size, min_count)?;
    let stats = count_cooccurrences(open_text(corpus)?, &vocab, window, weighting)?;
    std::fs::create_dir_all(out).map_err(|e| Error::file(out, e))?;
    write_vocab(&out.join(VOCAB_FILE), &vocab)?;
    write_cooc(&out.join(COOC_FILE), &stats)?;
    eprintln!(
        "extract: {} words, {} cooccurring pairs, total weight {} -> {}",
        vocab.len(),
        stats.nnz(),
        stats.total(),
        out.display()
    );
    Ok(())
}

/// Trains embeddings from the artifacts in `cooc_dir` and writes them (and
/// any checkpoints) into `out`.
pub fn stage_train(cooc_dir: &Path, settings: &TrainSettings, out: &Path) -> Result<()> {
    let vocab = read_vocab(&cooc_dir.join(VOCAB_FILE))?;
    let stats = read_cooc(&cooc_dir.join(COOC_FILE))?;
    if stats.shape().0 != vocab.len() {
        return Err(Error::file(
            cooc_dir,
            std::io::Error::other(format!(
                "{COOC_FILE} covers {} words but {VOCAB_FILE} lists {}",
                stats.shape().0,
                vocab.len()
            )),
        ));
    }
    let model = settings.build_model()?;
    eprintln!(
        "train: model={} solver={} d={} epochs={} lr={} seed={}",
        model, settings.solver, settings.d, settings.epochs, settings.lr, settings.seed
    );
    let trained: Trained<f64> = match settings.solver {
        Solver::Mf => {
            let cfg = settings.train_config();
            let mut checkpoint = |epoch: usize, params: &_, loss: f64| -> Result<()> {
                let meta = settings.meta(&model, epoch, Some(loss));
                write_embeddings(out, &vocab, params, &meta)?;
                eprintln!("train: checkpoint at epoch {epoch}, mean loss {loss:.6}");
                Ok(())
            };
            if settings.checkpoint_every > 0 {
                train(&stats, &model, &cfg, Some(&mut checkpoint))?
            } else {
                train(&stats, &model, &cfg, None)?
            }
        }
        Solver::GibbsCd => train_cd(&stats, &settings.cd_config())?,
    };
    let epochs_done = trained.loss_history.len();
    let meta = settings.meta(&model, epochs_done, trained.loss_history.last().copied());
    write_embeddings(out, &vocab, &trained.params, &meta)?;
    match (trained.loss_history.first(), trained.loss_history.last()) {
        (Some(first), Some(last)) => eprintln!(
            "train: {epochs_done} epochs, objective {first:.6} -> {last:.6}, wrote {}",
            out.display()
        ),
        _ => eprintln!("train: 0 epochs, wrote seeded init to {}", out.display()),
    }
    Ok(())
}

pub fn stage_eval_similarity(
    emb: &Path,
    data: &Path,
    mode: SimilarityMode,
) -> Result<SimilarityReport> {
    let (vocab, params) = read_embeddings::<f64>(emb)?;
    let dataset = SimilarityDataset::read(data)?;
    eval_similarity(&params, &vocab, &dataset, mode)
}

pub fn stage_eval_analogy(emb: &Path, data: &Path, rule: AnalogyRule) -> Result<AnalogyReport> {
    let (vocab, params) = read_embeddings::<f64>(emb)?;
    let dataset = AnalogyDataset::read(data)?;
    eval_analogy(&params, &vocab, &dataset, rule)
}

pub fn print_similarity(report: &SimilarityReport) {
    println!("spearman {}", report.spearman);
    println!(
        "coverage {} ({}/{})",
        report.coverage(),
        report.covered,
        report.total
    );
}

pub fn print_analogy(report: &AnalogyReport) {
    for s in &report.sections {
        println!(
            "section {}: {}/{} correct, {} skipped",
            s.name, s.correct, s.attempted, s.skipped
        );
    }
    println!(
        "accuracy {} ({}/{} correct, {} skipped)",
        report.accuracy(),
        report.correct(),
        report.attempted(),
        report.skipped()
    );
}

fn run_neighbors(a: &NeighborsArgs) -> Result<()> {
    let (vocab, params) = read_embeddings::<f64>(&a.emb)?;
    let word = a.word.to_lowercase();
    let id = vocab.id(&word).ok_or_else(|| Error::Oov(word.clone()))?;
    for (j, score) in nearest_neighbors(&params, id, a.k, a.mode)? {
        println!("{}\t{}", vocab.token(j), score);
    }
    Ok(())
}

fn run_validate(dir: &Path) -> Result<i32> {
    let report = validate_artifacts(dir)?;
    if report.is_clean() {
        println!("ok");
        return Ok(0);
    }
    for finding in report.findings() {
        println!("{finding}");
    }
    if report.truncated() {
        println!("(additional findings suppressed)");
    }
    Ok(2)
}

/// Runs extract, train, and any configured evaluations against one output
/// directory. Stages whose outputs are already present are skipped unless
/// `force` is set; nothing is written until the corpus is known to exist.
pub fn run_pipeline(config: &PipelineConfig, force: bool) -> Result<()> {
    let corpus = config.corpus.as_deref().ok_or_else(|| {
        Error::config("pipeline needs a corpus: set corpus= in the config file or pass --corpus")
    })?;
    let out = config.out.as_deref().ok_or_else(|| {
        Error::config("pipeline needs an output directory: set out= or pass --out")
    })?;
    if !corpus.is_file() {
        return Err(Error::file(
            corpus,
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus file not found"),
        ));
    }
    let exists = |name: &str| out.join(name).is_file();
    if !force && exists(VOCAB_FILE) && exists(COOC_FILE) {
        eprintln!(
            "extract: {VOCAB_FILE} and {COOC_FILE} already in {}; skipping (--force to redo)",
            out.display()
        );
    } else {
        stage_extract(
            corpus,
            config.vocab_size,
            config.min_count,
            config.window,
            config.weighting,
            out,
        )?;
    }
    if !force && exists(VECTORS_FILE) && exists(COVECTORS_FILE) && exists(META_FILE) {
        eprintln!(
            "train: embeddings already in {}; skipping (--force to redo)",
            out.display()
        );
    } else {
        stage_train(out, &config.train_settings(), out)?;
    }
    if let Some(data) = &config.similarity_data {
        eprintln!(
            "eval-similarity: {} mode={}",
            data.display(),
            config.similarity_mode
        );
        let report = stage_eval_similarity(out, data, config.similarity_mode)?;
        print_similarity(&report);
    }
    if let Some(data) = &config.analogy_data {
        eprintln!(
            "eval-analogy: {} rule={}",
            data.display(),
            config.analogy_rule
        );
        let report = stage_eval_analogy(out, data, config.analogy_rule)?;
        print_analogy(&report);
    }
    Ok(())
}
