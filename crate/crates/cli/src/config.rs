//! Pipeline configuration: one flat key=value namespace shared by the
//! config file and the `pipeline` subcommand's flags.

use std::path::{Path, PathBuf};

use lre_core::corpus::Weighting;
use lre_core::eval::{AnalogyRule, SimilarityMode};
use lre_core::losses::{self, LossModel};
use lre_core::sampler::CdConfig;
use lre_core::trainer::{BiasInit, TrainConfig, UpdateMode};
use lre_core::{Error, Result};

/// Defaults shared between subcommand flags and [`PipelineConfig`].
pub mod defaults {
    pub const VOCAB_SIZE: usize = 50_000;
    pub const MIN_COUNT: u64 = 5;
    pub const WINDOW: usize = 10;
    pub const MODEL: &str = "hilbert-mle";
    pub const D: usize = 300;
    pub const EPOCHS: usize = 25;
    pub const LR: f64 = 0.01;
    pub const SHARD_SIZE: usize = 4096;
    pub const SEED: u64 = 1;
    pub const CHECKPOINT_EVERY: usize = 0;
    pub const BATCH_SIZE: usize = 1024;
    pub const GIBBS_STEPS: usize = 1;
}

/// Which optimizer drives training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Full-batch sharded matrix factorization.
    #[default]
    Mf,
    /// Contrastive divergence with Gibbs-sampled negatives.
    GibbsCd,
}

impl Solver {
    pub fn name(&self) -> &'static str {
        match self {
            Solver::Mf => "mf",
            Solver::GibbsCd => "gibbs-cd",
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mf" => Ok(Solver::Mf),
            "gibbs-cd" => Ok(Solver::GibbsCd),
            other => Err(Error::invalid(format!(
                "unknown solver {other:?} (expected mf or gibbs-cd)"
            ))),
        }
    }
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything the train stage needs beyond the input/output locations.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub model: String,
    pub d: usize,
    pub epochs: usize,
    pub lr: f64,
    pub shard_size: usize,
    pub seed: u64,
    pub init_scale: Option<f64>,
    pub update_mode: UpdateMode,
    pub bias_init: BiasInit,
    pub checkpoint_every: usize,
    pub tau: f64,
    pub neg_k: f64,
    pub smoothing: f64,
    pub x_max: f64,
    pub alpha: f64,
    pub lds_c: f64,
    pub solver: Solver,
    pub batch_size: usize,
    pub gibbs_steps: usize,
}

impl TrainSettings {
    /// The selected model with the hyperparameter flags folded in.
    pub fn build_model(&self) -> Result<LossModel> {
        let mut model = LossModel::from_name(&self.model)?;
        match &mut model {
            LossModel::HilbertMle { tau } => *tau = self.tau,
            LossModel::Sgns {
                negatives,
                smoothing,
            } => {
                *negatives = self.neg_k;
                *smoothing = self.smoothing;
            }
            LossModel::Glove { x_max, alpha } => {
                *x_max = self.x_max;
                *alpha = self.alpha;
            }
            LossModel::Swivel => {}
            LossModel::Lds {
                x_max,
                alpha,
                shift,
            } => {
                *x_max = self.x_max;
                *alpha = self.alpha;
                *shift = self.lds_c;
            }
        }
        model.validate()?;
        if self.solver == Solver::GibbsCd && !matches!(model, LossModel::HilbertMle { .. }) {
            return Err(Error::config(format!(
                "the gibbs-cd solver optimizes the hilbert-mle objective; got --model {}",
                self.model
            )));
        }
        Ok(model)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            d: self.d,
            epochs: self.epochs,
            lr: self.lr,
            shard_size: self.shard_size,
            seed: self.seed,
            init_scale: self.init_scale,
            update_mode: self.update_mode,
            bias_init: self.bias_init,
            checkpoint_every: self.checkpoint_every,
            ..TrainConfig::default()
        }
    }

    pub fn cd_config(&self) -> CdConfig {
        CdConfig {
            d: self.d,
            epochs: self.epochs,
            batch_size: self.batch_size,
            gibbs_steps: self.gibbs_steps,
            lr: self.lr,
            seed: self.seed,
            init_scale: self.init_scale,
            ..CdConfig::default()
        }
    }

    /// Metadata rows describing this run, written next to the embeddings.
    pub fn meta(
        &self,
        model: &LossModel,
        epochs_done: usize,
        final_objective: Option<f64>,
    ) -> Vec<(String, String)> {
        let mut rows = vec![
            ("model".to_string(), self.model.clone()),
            ("d".to_string(), self.d.to_string()),
            ("solver".to_string(), self.solver.to_string()),
            ("epochs".to_string(), epochs_done.to_string()),
            ("lr".to_string(), self.lr.to_string()),
            ("seed".to_string(), self.seed.to_string()),
        ];
        match model {
            LossModel::HilbertMle { tau } => rows.push(("tau".into(), tau.to_string())),
            LossModel::Sgns {
                negatives,
                smoothing,
            } => {
                rows.push(("neg-k".into(), negatives.to_string()));
                rows.push(("smoothing".into(), smoothing.to_string()));
            }
            LossModel::Glove { x_max, alpha } => {
                rows.push(("x-max".into(), x_max.to_string()));
                rows.push(("alpha".into(), alpha.to_string()));
            }
            LossModel::Swivel => {}
            LossModel::Lds {
                x_max,
                alpha,
                shift,
            } => {
                rows.push(("x-max".into(), x_max.to_string()));
                rows.push(("alpha".into(), alpha.to_string()));
                rows.push(("lds-c".into(), shift.to_string()));
            }
        }
        match self.solver {
            Solver::Mf => {
                rows.push(("shard-size".into(), self.shard_size.to_string()));
                rows.push(("update-mode".into(), self.update_mode.to_string()));
            }
            Solver::GibbsCd => {
                rows.push(("batch-size".into(), self.batch_size.to_string()));
                rows.push(("gibbs-steps".into(), self.gibbs_steps.to_string()));
            }
        }
        if let Some(value) = final_objective {
            // The sampled solver tracks the positive/negative score gap
            // rather than a loss value.
            let key = match self.solver {
                Solver::Mf => "final-loss",
                Solver::GibbsCd => "final-gap",
            };
            rows.push((key.into(), value.to_string()));
        }
        rows
    }
}

/// The full pipeline configuration. Serializes to a key=value file; every
/// key doubles as a `pipeline` flag and unknown keys are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub vocab_size: usize,
    pub min_count: u64,
    pub window: usize,
    pub weighting: Weighting,
    pub model: String,
    pub d: usize,
    pub epochs: usize,
    pub lr: f64,
    pub shard_size: usize,
    pub seed: u64,
    pub init_scale: Option<f64>,
    pub update_mode: UpdateMode,
    pub bias_init: BiasInit,
    pub checkpoint_every: usize,
    pub tau: f64,
    pub neg_k: f64,
    pub smoothing: f64,
    pub x_max: f64,
    pub alpha: f64,
    pub lds_c: f64,
    pub solver: Solver,
    pub batch_size: usize,
    pub gibbs_steps: usize,
    pub similarity_data: Option<PathBuf>,
    pub similarity_mode: SimilarityMode,
    pub analogy_data: Option<PathBuf>,
    pub analogy_rule: AnalogyRule,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            out: None,
            vocab_size: defaults::VOCAB_SIZE,
            min_count: defaults::MIN_COUNT,
            window: defaults::WINDOW,
            weighting: Weighting::Harmonic,
            model: defaults::MODEL.to_string(),
            d: defaults::D,
            epochs: defaults::EPOCHS,
            lr: defaults::LR,
            shard_size: defaults::SHARD_SIZE,
            seed: defaults::SEED,
            init_scale: None,
            update_mode: UpdateMode::default(),
            bias_init: BiasInit::default(),
            checkpoint_every: defaults::CHECKPOINT_EVERY,
            tau: losses::DEFAULT_TAU,
            neg_k: losses::DEFAULT_NEGATIVES,
            smoothing: losses::DEFAULT_SMOOTHING,
            x_max: losses::DEFAULT_X_MAX,
            alpha: losses::DEFAULT_ALPHA,
            lds_c: losses::DEFAULT_SHIFT,
            solver: Solver::default(),
            batch_size: defaults::BATCH_SIZE,
            gibbs_steps: defaults::GIBBS_STEPS,
            similarity_data: None,
            similarity_mode: SimilarityMode::default(),
            analogy_data: None,
            analogy_rule: AnalogyRule::default(),
        }
    }
}

fn parse_value<T>(key: &str, value: &str) -> Result<T>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::config(format!("invalid value {value:?} for key {key:?}: {e}")))
}

impl PipelineConfig {
    /// Every config key, in serialization order.
    pub const KEYS: [&'static str; 29] = [
        "corpus",
        "out",
        "vocab-size",
        "min-count",
        "window",
        "weighting",
        "model",
        "d",
        "epochs",
        "lr",
        "shard-size",
        "seed",
        "init-scale",
        "update-mode",
        "bias-init",
        "checkpoint-every",
        "tau",
        "neg-k",
        "smoothing",
        "x-max",
        "alpha",
        "lds-c",
        "solver",
        "batch-size",
        "gibbs-steps",
        "similarity-data",
        "similarity-mode",
        "analogy-data",
        "analogy-rule",
    ];

    /// Sets one key from its text form. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "corpus" => self.corpus = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "vocab-size" => self.vocab_size = parse_value(key, value)?,
            "min-count" => self.min_count = parse_value(key, value)?,
            "window" => self.window = parse_value(key, value)?,
            "weighting" => self.weighting = parse_value(key, value)?,
            "model" => self.model = value.to_string(),
            "d" => self.d = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "lr" => self.lr = parse_value(key, value)?,
            "shard-size" => self.shard_size = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "init-scale" => self.init_scale = Some(parse_value(key, value)?),
            "update-mode" => self.update_mode = parse_value(key, value)?,
            "bias-init" => self.bias_init = parse_value(key, value)?,
            "checkpoint-every" => self.checkpoint_every = parse_value(key, value)?,
            "tau" => self.tau = parse_value(key, value)?,
            "neg-k" => self.neg_k = parse_value(key, value)?,
            "smoothing" => self.smoothing = parse_value(key, value)?,
            "x-max" => self.x_max = parse_value(key, value)?,
            "alpha" => self.alpha = parse_value(key, value)?,
            "lds-c" => self.lds_c = parse_value(key, value)?,
            "solver" => self.solver = parse_value(key, value)?,
            "batch-size" => self.batch_size = parse_value(key, value)?,
            "gibbs-steps" => self.gibbs_steps = parse_value(key, value)?,
            "similarity-data" => self.similarity_data = Some(PathBuf::from(value)),
            "similarity-mode" => self.similarity_mode = parse_value(key, value)?,
            "analogy-data" => self.analogy_data = Some(PathBuf::from(value)),
            "analogy-rule" => self.analogy_rule = parse_value(key, value)?,
            other => return Err(Error::config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Text form of one key's current value; `None` when the key is unset.
    pub fn get(&self, key: &str) -> Option<String> {
        match key {
            "corpus" => self.corpus.as_ref().map(|p| p.display().to_string()),
            "out" => self.out.as_ref().map(|p| p.display().to_string()),
            "vocab-size" => Some(self.vocab_size.to_string()),
            "min-count" => Some(self.min_count.to_string()),
            "window" => Some(self.window.to_string()),
            "weighting" => Some(self.weighting.to_string()),
            "model" => Some(self.model.clone()),
            "d" => Some(self.d.to_string()),
            "epochs" => Some(self.epochs.to_string()),
            "lr" => Some(self.lr.to_string()),
            "shard-size" => Some(self.shard_size.to_string()),
            "seed" => Some(self.seed.to_string()),
            "init-scale" => self.init_scale.map(|s| s.to_string()),
            "update-mode" => Some(self.update_mode.to_string()),
            "bias-init" => Some(self.bias_init.to_string()),
            "checkpoint-every" => Some(self.checkpoint_every.to_string()),
            "tau" => Some(self.tau.to_string()),
            "neg-k" => Some(self.neg_k.to_string()),
            "smoothing" => Some(self.smoothing.to_string()),
            "x-max" => Some(self.x_max.to_string()),
            "alpha" => Some(self.alpha.to_string()),
            "lds-c" => Some(self.lds_c.to_string()),
            "solver" => Some(self.solver.to_string()),
            "batch-size" => Some(self.batch_size.to_string()),
            "gibbs-steps" => Some(self.gibbs_steps.to_string()),
            "similarity-data" => self
                .similarity_data
                .as_ref()
                .map(|p| p.display().to_string()),
            "similarity-mode" => Some(self.similarity_mode.to_string()),
            "analogy-data" => self.analogy_data.as_ref().map(|p| p.display().to_string()),
            "analogy-rule" => Some(self.analogy_rule.to_string()),
            _ => None,
        }
    }

    /// Serializes every set key, one `key=value` line each.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            if let Some(value) = self.get(key) {
                out.push_str(key);
                out.push('=');
                out.push_str(&value);
                out.push('\n');
            }
        }
        out
    }

    /// Parses a config file. Blank lines and `#` comments are skipped;
    /// unknown or repeated keys are rejected.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut config = PipelineConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |msg: String| {
                Error::config(format!("{}:{}: {msg}", origin.display(), idx + 1))
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(at(format!("key {key:?} appears twice")));
            }
            config.set(key, value).map_err(|e| match e {
                Error::Config(msg) => at(msg),
                other => other,
            })?;
        }
        Ok(config)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::parse(&text, path)
    }

    pub fn train_settings(&self) -> TrainSettings {
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_core_configs() {
        let train = TrainConfig::default();
        assert_eq!(defaults::D, train.d);
        assert_eq!(defaults::EPOCHS, train.epochs);
        assert_eq!(defaults::LR, train.lr);
        assert_eq!(defaults::SHARD_SIZE, train.shard_size);
        assert_eq!(defaults::SEED, train.seed);
        assert_eq!(defaults::CHECKPOINT_EVERY, train.checkpoint_every);
        let cd = CdConfig::default();
        assert_eq!(defaults::BATCH_SIZE, cd.batch_size);
        assert_eq!(defaults::GIBBS_STEPS, cd.gibbs_steps);
    }

    #[test]
    fn round_trips_through_text() {
        let mut config = PipelineConfig::default();
        config.corpus = Some(PathBuf::from("data/corpus.txt"));
        config.out = Some(PathBuf::from("runs/demo"));
        config.model = "glove".to_string();
        config.lr = 0.057;
        config.seed = 99;
        config.init_scale = Some(0.001);
        config.similarity_data = Some(PathBuf::from("data/dev.tsv"));
        let text = config.to_text();
        let parsed = PipelineConfig::parse(&text, Path::new("mem")).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn unset_options_stay_unset_after_round_trip() {
        let config = PipelineConfig::default();
        let text = config.to_text();
        assert!(!text.contains("corpus="));
        assert!(!text.contains("init-scale="));
        let parsed = PipelineConfig::parse(&text, Path::new("mem")).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn every_key_is_gettable_and_settable() {
        let mut config = PipelineConfig::default();
        for key in PipelineConfig::KEYS {
            // A value of the key's own type: reuse the serialized default,
            // with literals for the keys that default to unset.
            let value = config.get(key).unwrap_or_else(|| match key {
                "init-scale" => "0.5".to_string(),
                _ => "some/path".to_string(),
            });
            config.set(key, &value).unwrap();
        }
        assert!(config.corpus.is_some());
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let err = PipelineConfig::parse("nope=1\n", Path::new("f")).unwrap_err();
        assert!(err.to_string().contains("unknown config key"), "{err}");
        assert!(err.to_string().contains("f:1"), "{err}");
        let err = PipelineConfig::parse("d=4\nd=5\n", Path::new("f")).unwrap_err();
        assert!(err.to_string().contains("appears twice"), "{err}");
    }

    #[test]
    fn rejects_malformed_lines_and_values() {
        let err = PipelineConfig::parse("just words\n", Path::new("f")).unwrap_err();
        assert!(err.to_string().contains("expected key=value"), "{err}");
        let err = PipelineConfig::parse("lr=fast\n", Path::new("f")).unwrap_err();
        assert!(err.to_string().contains("invalid value"), "{err}");
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# a comment\n\n  d = 12 \n";
        let config = PipelineConfig::parse(text, Path::new("f")).unwrap();
        assert_eq!(config.d, 12);
    }

    #[test]
    fn gibbs_cd_requires_the_exponential_model() {
        let mut settings = PipelineConfig::default().train_settings();
        settings.solver = Solver::GibbsCd;
        settings.build_model().unwrap();
        settings.model = "glove".to_string();
        let err = settings.build_model().unwrap_err();
        assert!(err.to_string().contains("gibbs-cd"), "{err}");
    }

    #[test]
    fn hyperparameter_flags_reach_the_model() {
        let mut settings = PipelineConfig::default().train_settings();
        settings.model = "lds".to_string();
        settings.x_max = 50.0;
        settings.alpha = 0.5;
        settings.lds_c = 1.5;
        let model = settings.build_model().unwrap();
        assert_eq!(
            model,
            LossModel::Lds {
                x_max: 50.0,
                alpha: 0.5,
                shift: 1.5
            }
        );
    }
}
