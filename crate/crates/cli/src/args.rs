//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use lre_core::corpus::Weighting;
use lre_core::eval::{AnalogyRule, NeighborMode, SimilarityMode};
use lre_core::losses;
use lre_core::trainer::{BiasInit, UpdateMode};

use crate::config::{defaults, Solver, TrainSettings};

#[derive(Debug, Parser)]
#[command(
    name = "lre",
    version,
    about = "Train and probe low-rank word embeddings from plain-text corpora"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a vocabulary and cooccurrence counts from a corpus
    Extract(ExtractArgs),
    /// Train embeddings from extracted cooccurrence counts
    Train(TrainArgs),
    /// Score a word-similarity dataset against trained embeddings
    EvalSimilarity(EvalSimilarityArgs),
    /// Score an analogy dataset against trained embeddings
    EvalAnalogy(EvalAnalogyArgs),
    /// List the nearest neighbors of a word
    Neighbors(NeighborsArgs),
    /// Check a directory of artifacts for internal consistency
    Validate(ValidateArgs),
    /// Run extract, train, and evaluation as one configured job
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Corpus file: UTF-8 text, one document per line
    #[arg(long)]
    pub corpus: PathBuf,
    /// Keep at most this many words
    #[arg(long, default_value_t = defaults::VOCAB_SIZE)]
    pub vocab_size: usize,
    /// Drop words seen fewer times than this
    #[arg(long, default_value_t = defaults::MIN_COUNT)]
    pub min_count: u64,
    /// Symmetric context window size
    #[arg(long, default_value_t = defaults::WINDOW)]
    pub window: usize,
    /// Window weighting: flat or harmonic
    #[arg(long, default_value_t = Weighting::Harmonic)]
    pub weighting: Weighting,
    /// Directory to write vocab.txt and cooc.txt into
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory holding vocab.txt and cooc.txt from `extract`
    #[arg(long)]
    pub cooc: PathBuf,
    /// Directory to write the embeddings into
    #[arg(long)]
    pub out: PathBuf,
    /// Loss model: hilbert-mle, sgns, glove, swivel, or lds
    #[arg(long, default_value = defaults::MODEL)]
    pub model: String,
    /// Embedding dimension
    #[arg(long, default_value_t = defaults::D)]
    pub d: usize,
    #[arg(long, default_value_t = defaults::EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value_t = defaults::LR)]
    pub lr: f64,
    /// Upper bound on shard rows and columns (mf solver)
    #[arg(long, default_value_t = defaults::SHARD_SIZE)]
    pub shard_size: usize,
    #[arg(long, default_value_t = defaults::SEED)]
    pub seed: u64,
    /// Std dev of the Gaussian init; default 0.1/sqrt(d)
    #[arg(long)]
    pub init_scale: Option<f64>,
    /// Adam application: incremental (per shard) or accumulate (per epoch)
    #[arg(long, default_value_t = UpdateMode::Incremental)]
    pub update_mode: UpdateMode,
    /// Bias start for glove: marginal (log-count) or random
    #[arg(long, default_value_t = BiasInit::Marginal)]
    pub bias_init: BiasInit,
    /// Also write embeddings every N epochs (0 = only at the end)
    #[arg(long, default_value_t = defaults::CHECKPOINT_EVERY)]
    pub checkpoint_every: usize,
    /// hilbert-mle temperature
    #[arg(long, default_value_t = losses::DEFAULT_TAU)]
    pub tau: f64,
    /// sgns negatives per observed pair
    #[arg(long, default_value_t = losses::DEFAULT_NEGATIVES)]
    pub neg_k: f64,
    /// sgns unigram smoothing exponent
    #[arg(long, default_value_t = losses::DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    /// glove/lds weighting saturation count
    #[arg(long, default_value_t = losses::DEFAULT_X_MAX)]
    pub x_max: f64,
    /// glove/lds weighting exponent
    #[arg(long, default_value_t = losses::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// lds target shift
    #[arg(long, default_value_t = losses::DEFAULT_SHIFT)]
    pub lds_c: f64,
    /// Optimizer: mf (full-batch shards) or gibbs-cd (sampled)
    #[arg(long, default_value_t = Solver::Mf)]
    pub solver: Solver,
    /// Positive pairs per step (gibbs-cd solver)
    #[arg(long, default_value_t = defaults::BATCH_SIZE)]
    pub batch_size: usize,
    /// Gibbs moves per negative sample (gibbs-cd solver)
    #[arg(long, default_value_t = defaults::GIBBS_STEPS)]
    pub gibbs_steps: usize,
}

impl TrainArgs {
    pub fn settings(&self) -> TrainSettings {
        TrainSettings {
            model: self.model.clone(),
            d: self.d,
            epochs: self.epochs,
            lr: self.lr,
            shard_size: self.shard_size,
            seed: self.seed,
            init_scale: self.init_scale,
            update_mode: self.update_mode,
            bias_init: self.bias_init,
            checkpoint_every: self.checkpoint_every,
            tau: self.tau,
            neg_k: self.neg_k,
            smoothing: self.smoothing,
            x_max: self.x_max,
            alpha: self.alpha,
            lds_c: self.lds_c,
            solver: self.solver,
            batch_size: self.batch_size,
            gibbs_steps: self.gibbs_steps,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalSimilarityArgs {
    /// Directory of trained embeddings
    #[arg(long)]
    pub emb: PathBuf,
    /// TSV file: word1<TAB>word2<TAB>score
    #[arg(long)]
    pub data: PathBuf,
    /// vector-vector or vector-covector
    #[arg(long, default_value_t = SimilarityMode::VectorVector)]
    pub mode: SimilarityMode,
}

#[derive(Debug, Args)]
pub struct EvalAnalogyArgs {
    /// Directory of trained embeddings
    #[arg(long)]
    pub emb: PathBuf,
    /// Analogy file: ": section" headers, then four words per line
    #[arg(long)]
    pub data: PathBuf,
    /// 3cosadd or 3cosmul
    #[arg(long, default_value_t = AnalogyRule::CosMul)]
    pub rule: AnalogyRule,
}

#[derive(Debug, Args)]
pub struct NeighborsArgs {
    /// Directory of trained embeddings
    #[arg(long)]
    pub emb: PathBuf,
    /// Query word
    #[arg(long)]
    pub word: String,
    /// How many neighbors to list
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// vec-vec (vector dot vector) or vec-covec (covector dot vector)
    #[arg(long, default_value_t = NeighborMode::VecVec)]
    pub mode: NeighborMode,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Directory of artifacts to check
    pub dir: PathBuf,
}

/// Flags mirror [`crate::config::PipelineConfig`] keys one to one; a set
/// flag overrides the config-file value.
#[derive(Debug, Args, Default)]
pub struct PipelineArgs {
    /// key=value config file; flags below override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Redo stages whose outputs already exist
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub weighting: Option<Weighting>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub shard_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    #[arg(long)]
    pub update_mode: Option<UpdateMode>,
    #[arg(long)]
    pub bias_init: Option<BiasInit>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub neg_k: Option<f64>,
    #[arg(long)]
    pub smoothing: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lds_c: Option<f64>,
    #[arg(long)]
    pub solver: Option<Solver>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub gibbs_steps: Option<usize>,
    #[arg(long)]
    pub similarity_data: Option<PathBuf>,
    #[arg(long)]
    pub similarity_mode: Option<SimilarityMode>,
    #[arg(long)]
    pub analogy_data: Option<PathBuf>,
    #[arg(long)]
    pub analogy_rule: Option<AnalogyRule>,
}

impl PipelineArgs {
    /// Overlays the set flags onto `config`.
    pub fn apply_to(&self, config: &mut crate::config::PipelineConfig) {
        macro_rules! overlay {
            ($($field:ident),* $(,)?) => {
                $(if let Some(value) = &self.$field {
                    config.$field = Some(value.clone());
                })*
            };
        }
        macro_rules! overlay_plain {
            ($($field:ident),* $(,)?) => {
                $(if let Some(value) = &self.$field {
                    config.$field = value.clone();
                })*
            };
        }
        overlay!(corpus, out, similarity_data, analogy_data);
        overlay_plain!(
            vocab_size,
            min_count,
            window,
            weighting,
            model,
            d,
            epochs,
            lr,
            shard_size,
            seed,
            update_mode,
            bias_init,
            checkpoint_every,
            tau,
            neg_k,
            smoothing,
            x_max,
            alpha,
            lds_c,
            solver,
            batch_size,
            gibbs_steps,
            similarity_mode,
            analogy_rule,
        );
        if let Some(scale) = self.init_scale {
            config.init_scale = Some(scale);
        }
    }
}
