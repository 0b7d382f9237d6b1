//! Full-matrix training: sharded gradient descent with Adam.
//!
//! Every epoch walks a grid of shards covering the whole pair matrix, so
//! each (context, focal) pair contributes exactly once per epoch. Updates
//! are applied either per shard (`incremental`, with a seeded random shard
//! order) or once per epoch from the summed gradient (`accumulate`, fixed
//! row-major order).

use ndarray::{s, Array1, Array2, ArrayView, ArrayView1, ArrayViewMut, Dimension, Zip};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::CooccurrenceStats;
use crate::error::{Error, Result};
use crate::losses::{self, LossModel, ShardGradients};
use crate::scalar::Scalar;
use crate::stats::{shard_grid, Shard, ShardSpec};

/// Training aborts once the mean pairwise loss exceeds this magnitude.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Embedding parameters: covectors as rows of `w`, vectors as columns of
/// `v`, optional bias vectors for models whose kernel uses them.
///
/// Invariant: `w` is `n_ctx x d`, `v` is `d x n_foc`, and the bias vectors,
/// when present, have lengths `n_ctx` and `n_foc`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F = crate::Real> {
    pub w: Array2<F>,
    pub v: Array2<F>,
    pub b_ctx: Option<Array1<F>>,
    pub b_foc: Option<Array1<F>>,
}

impl<F: Scalar> ModelParams<F> {
    pub fn zeros(n_ctx: usize, n_foc: usize, d: usize, with_biases: bool) -> Self {
        ModelParams {
            w: Array2::zeros((n_ctx, d)),
            v: Array2::zeros((d, n_foc)),
            b_ctx: with_biases.then(|| Array1::zeros(n_ctx)),
            b_foc: with_biases.then(|| Array1::zeros(n_foc)),
        }
    }

    pub fn d(&self) -> usize {
        self.w.ncols()
    }

    pub fn n_ctx(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_foc(&self) -> usize {
        self.v.ncols()
    }

    /// Covector (context-side row) of word `i`.
    pub fn covector(&self, i: usize) -> ArrayView1<'_, F> {
        self.w.row(i)
    }

    /// Vector (focal-side column) of word `j`.
    pub fn vector(&self, j: usize) -> ArrayView1<'_, F> {
        self.v.column(j)
    }

    /// Bilinear score `<i|j>`, biases excluded.
    pub fn score(&self, i: usize, j: usize) -> F {
        self.covector(i).dot(&self.vector(j))
    }

    pub fn biases(&self) -> Option<(&Array1<F>, &Array1<F>)> {
        match (&self.b_ctx, &self.b_foc) {
            (Some(c), Some(f)) => Some((c, f)),
            _ => None,
        }
    }

    pub fn check_shard(&self, spec: &ShardSpec) -> Result<()> {
        if spec.ctx.end > self.n_ctx() || spec.foc.end > self.n_foc() {
            return Err(Error::invalid(format!(
                "shard ({:?}, {:?}) out of bounds for {} x {} parameters",
                spec.ctx,
                spec.foc,
                self.n_ctx(),
                self.n_foc()
            )));
        }
        Ok(())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        let check2 = |name: &str, a: &Array2<F>| -> Result<()> {
            for ((r, c), &x) in a.indexed_iter() {
                if !x.is_finite() {
                    return Err(Error::numeric(format!(
                        "non-finite value {x} in {name} at ({r}, {c})"
                    )));
                }
            }
            Ok(())
        };
        check2("covectors", &self.w)?;
        check2("vectors", &self.v)?;
        for (name, b) in [("context biases", &self.b_ctx), ("focal biases", &self.b_foc)] {
            if let Some(b) = b {
                for (i, &x) in b.iter().enumerate() {
                    if !x.is_finite() {
                        return Err(Error::numeric(format!(
                            "non-finite value {x} in {name} at {i}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// When parameter updates are applied within an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateMode {
    /// After each shard, visiting shards in a seeded random order.
    #[default]
    Incremental,
    /// Once per epoch, from gradients summed over all shards.
    Accumulate,
}

impl UpdateMode {
    pub fn name(&self) -> &'static str {
        match self {
            UpdateMode::Incremental => "incremental",
            UpdateMode::Accumulate => "accumulate",
        }
    }
}

impl std::str::FromStr for UpdateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "incremental" => Ok(UpdateMode::Incremental),
            "accumulate" => Ok(UpdateMode::Accumulate),
            other => Err(Error::invalid(format!(
                "unknown update mode {other:?} (expected incremental or accumulate)"
            ))),
        }
    }
}

impl std::fmt::Display for UpdateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How bias vectors start out for models that have them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BiasInit {
    /// `ln(n_i / sqrt(N))`, the value that absorbs each word's frequency.
    #[default]
    Marginal,
    /// Same Gaussian noise as the vectors.
    Random,
}

impl BiasInit {
    pub fn name(&self) -> &'static str {
        match self {
            BiasInit::Marginal => "marginal",
            BiasInit::Random => "random",
        }
    }
}

impl std::str::FromStr for BiasInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "marginal" => Ok(BiasInit::Marginal),
            "random" => Ok(BiasInit::Random),
            other => Err(Error::invalid(format!(
                "unknown bias init {other:?} (expected marginal or random)"
            ))),
        }
    }
}

impl std::fmt::Display for BiasInit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Embedding dimension.
    pub d: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Upper bound on shard rows and columns.
    pub shard_size: usize,
    pub seed: u64,
    /// Standard deviation of the Gaussian init; `None` picks `0.1 / sqrt(d)`.
    pub init_scale: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub update_mode: UpdateMode,
    pub bias_init: BiasInit,
    /// Invoke the epoch hook every this many epochs (and at the last);
    /// 0 disables it.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            d: 300,
            epochs: 25,
            lr: 0.01,
            shard_size: 4096,
            seed: 1,
            init_scale: None,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            update_mode: UpdateMode::default(),
            bias_init: BiasInit::default(),
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::config("dimension must be at least 1"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.shard_size == 0 {
            return Err(Error::config("shard size must be at least 1"));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let Some(scale) = self.init_scale {
            if !(scale.is_finite() && scale >= 0.0) {
                return Err(Error::config(format!(
                    "init scale must be a non-negative finite number, got {scale}"
                )));
            }
        }
        Ok(())
    }

    pub fn effective_init_scale(&self) -> f64 {
        self.init_scale.unwrap_or(0.1 / (self.d as f64).sqrt())
    }
}

/// Seeded Gaussian initialization; glove-style biases warm-start at
/// `ln(n_i / sqrt(N))` unless `bias_init` asks for noise.
pub fn init_params<F: Scalar>(
    model: &LossModel,
    stats: &CooccurrenceStats,
    cfg: &TrainConfig,
) -> Result<ModelParams<F>> {
    cfg.validate()?;
    model.validate()?;
    let (n_ctx, n_foc) = stats.shape();
    if n_ctx == 0 || n_foc == 0 {
        return Err(Error::EmptyVocabulary);
    }
    let scale = cfg.effective_init_scale();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ModelParams::zeros(n_ctx, n_foc, cfg.d, model.uses_biases());
    if scale > 0.0 {
        let normal = Normal::new(0.0f64, scale)
            .map_err(|e| Error::config(format!("bad init scale {scale}: {e}")))?;
        for x in params.w.iter_mut() {
            *x = F::from_f64(normal.sample(&mut rng));
        }
        for x in params.v.iter_mut() {
            *x = F::from_f64(normal.sample(&mut rng));
        }
        if model.uses_biases() && cfg.bias_init == BiasInit::Random {
            for b in [params.b_ctx.as_mut().unwrap(), params.b_foc.as_mut().unwrap()] {
                for x in b.iter_mut() {
                    *x = F::from_f64(normal.sample(&mut rng));
                }
            }
        }
    }
    if model.uses_biases() && cfg.bias_init == BiasInit::Marginal {
        let sqrt_n = stats.total().sqrt();
        let warm = |n: f64| {
            if n > 0.0 {
                F::from_f64((n / sqrt_n).ln())
            } else {
                F::zero()
            }
        };
        let b_ctx = params.b_ctx.as_mut().unwrap();
        for (i, x) in b_ctx.iter_mut().enumerate() {
            *x = warm(stats.ctx_marginal(i as u32));
        }
        let b_foc = params.b_foc.as_mut().unwrap();
        for (j, x) in b_foc.iter_mut().enumerate() {
            *x = warm(stats.foc_marginal(j as u32));
        }
    }
    Ok(params)
}

fn adam_update<F: Scalar, D: Dimension>(
    mut p: ArrayViewMut<'_, F, D>,
    g: ArrayView<'_, F, D>,
    mut m: ArrayViewMut<'_, F, D>,
    mut v: ArrayViewMut<'_, F, D>,
    lr: F,
    b1: F,
    b2: F,
    eps: F,
    corr1: F,
    corr2: F,
) {
    let one = F::one();
    Zip::from(&mut p)
        .and(&g)
        .and(&mut m)
        .and(&mut v)
        .for_each(|p, &g, m, v| {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let m_hat = *m / corr1;
            let v_hat = *v / corr2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        });
}

/// Adam moments for a full parameter set, sliceable per shard.
///
/// The step counter is owned by the caller: the full-matrix trainer sets it
/// to the epoch number, the sampled trainer advances it per batch.
#[derive(Debug, Clone)]
pub struct AdamState<F> {
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    m_w: Array2<F>,
    v_w: Array2<F>,
    m_v: Array2<F>,
    v_v: Array2<F>,
    m_b_ctx: Option<Array1<F>>,
    v_b_ctx: Option<Array1<F>>,
    m_b_foc: Option<Array1<F>>,
    v_b_foc: Option<Array1<F>>,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(params: &ModelParams<F>, lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        AdamState {
            t: 0,
            lr,
            beta1,
            beta2,
            epsilon,
            m_w: Array2::zeros(params.w.raw_dim()),
            v_w: Array2::zeros(params.w.raw_dim()),
            m_v: Array2::zeros(params.v.raw_dim()),
            v_v: Array2::zeros(params.v.raw_dim()),
            m_b_ctx: params.b_ctx.as_ref().map(|b| Array1::zeros(b.len())),
            v_b_ctx: params.b_ctx.as_ref().map(|b| Array1::zeros(b.len())),
            m_b_foc: params.b_foc.as_ref().map(|b| Array1::zeros(b.len())),
            v_b_foc: params.b_foc.as_ref().map(|b| Array1::zeros(b.len())),
        }
    }

    pub fn step(&self) -> u64 {
        self.t
    }

    pub fn set_step(&mut self, t: u64) {
        debug_assert!(t >= 1, "Adam steps are 1-based");
        self.t = t;
    }

    pub fn begin_step(&mut self) {
        self.t += 1;
    }

    /// Applies one Adam update to the parameter slices a shard touches.
    pub fn apply_block(
        &mut self,
        params: &mut ModelParams<F>,
        spec: &ShardSpec,
        grads: &ShardGradients<F>,
    ) {
        assert!(self.t >= 1, "set_step or begin_step must run before updates");
        let corr1 = F::from_f64(1.0 - self.beta1.powf(self.t as f64));
        let corr2 = F::from_f64(1.0 - self.beta2.powf(self.t as f64));
        let lr = F::from_f64(self.lr);
        let b1 = F::from_f64(self.beta1);
        let b2 = F::from_f64(self.beta2);
        let eps = F::from_f64(self.epsilon);
        adam_update(
            params.w.slice_mut(s![spec.ctx.clone(), ..]),
            grads.d_w.view(),
            self.m_w.slice_mut(s![spec.ctx.clone(), ..]),
            self.v_w.slice_mut(s![spec.ctx.clone(), ..]),
            lr, b1, b2, eps, corr1, corr2,
        );
        adam_update(
            params.v.slice_mut(s![.., spec.foc.clone()]),
            grads.d_v.view(),
            self.m_v.slice_mut(s![.., spec.foc.clone()]),
            self.v_v.slice_mut(s![.., spec.foc.clone()]),
            lr, b1, b2, eps, corr1, corr2,
        );
        if let (Some(b), Some(g)) = (params.b_ctx.as_mut(), grads.d_b_ctx.as_ref()) {
            adam_update(
                b.slice_mut(s![spec.ctx.clone()]),
                g.view(),
                self.m_b_ctx.as_mut().unwrap().slice_mut(s![spec.ctx.clone()]),
                self.v_b_ctx.as_mut().unwrap().slice_mut(s![spec.ctx.clone()]),
                lr, b1, b2, eps, corr1, corr2,
            );
        }
        if let (Some(b), Some(g)) = (params.b_foc.as_mut(), grads.d_b_foc.as_ref()) {
            adam_update(
                b.slice_mut(s![spec.foc.clone()]),
                g.view(),
                self.m_b_foc.as_mut().unwrap().slice_mut(s![spec.foc.clone()]),
                self.v_b_foc.as_mut().unwrap().slice_mut(s![spec.foc.clone()]),
                lr, b1, b2, eps, corr1, corr2,
            );
        }
    }
}

/// Finished training run: final parameters plus the mean pairwise loss per
/// epoch.
#[derive(Debug, Clone)]
pub struct Trained<F> {
    pub params: ModelParams<F>,
    pub loss_history: Vec<f64>,
}

/// Called after selected epochs with (epoch, parameters, mean loss).
pub type EpochHook<'a, F> = dyn FnMut(usize, &ModelParams<F>, f64) -> Result<()> + 'a;

/// Trains embeddings on the full pair matrix.
pub fn train<F: Scalar>(
    stats: &CooccurrenceStats,
    model: &LossModel,
    cfg: &TrainConfig,
    mut epoch_hook: Option<&mut EpochHook<'_, F>>,
) -> Result<Trained<F>> {
    cfg.validate()?;
    let prep = model.prepare(stats)?;
    let mut params: ModelParams<F> = init_params(model, stats, cfg)?;
    let (n_ctx, n_foc) = stats.shape();
    let specs = shard_grid(n_ctx, n_foc, cfg.shard_size)?;
    let full = ShardSpec { ctx: 0..n_ctx, foc: 0..n_foc };
    let mut adam = AdamState::new(&params, cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    order_rng.set_stream(1);
    let mut loss_history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        adam.set_step(epoch as u64);
        let mut epoch_loss = 0.0f64;
        match cfg.update_mode {
            UpdateMode::Incremental => {
                let mut order: Vec<usize> = (0..specs.len()).collect();
                order.shuffle(&mut order_rng);
                for idx in order {
                    let spec = &specs[idx];
                    let shard = Shard::<F>::materialize(stats, spec)?;
                    let scores = losses::psi(model, &params, spec)?;
                    let grad = losses::characteristic_gradient(&prep, &shard, &scores)?;
                    epoch_loss += losses::loss_value(&prep, &shard, &scores)?.as_f64();
                    let grads = losses::backprop_to_params(model, &params, spec, &grad)?;
                    grads.ensure_finite(spec)?;
                    adam.apply_block(&mut params, spec, &grads);
                }
            }
            UpdateMode::Accumulate => {
                let mut acc = ShardGradients::zeros_for(&params, &full);
                for spec in &specs {
                    let shard = Shard::<F>::materialize(stats, spec)?;
                    let scores = losses::psi(model, &params, spec)?;
                    let grad = losses::characteristic_gradient(&prep, &shard, &scores)?;
                    epoch_loss += losses::loss_value(&prep, &shard, &scores)?.as_f64();
                    let grads = losses::backprop_to_params(model, &params, spec, &grad)?;
                    let mut dst = acc.d_w.slice_mut(s![spec.ctx.clone(), ..]);
                    dst += &grads.d_w;
                    let mut dst = acc.d_v.slice_mut(s![.., spec.foc.clone()]);
                    dst += &grads.d_v;
                    if let (Some(acc_b), Some(g_b)) = (acc.d_b_ctx.as_mut(), grads.d_b_ctx.as_ref())
                    {
                        let mut dst = acc_b.slice_mut(s![spec.ctx.clone()]);
                        dst += g_b;
                    }
                    if let (Some(acc_b), Some(g_b)) = (acc.d_b_foc.as_mut(), grads.d_b_foc.as_ref())
                    {
                        let mut dst = acc_b.slice_mut(s![spec.foc.clone()]);
                        dst += g_b;
                    }
                }
                acc.ensure_finite(&full)?;
                adam.apply_block(&mut params, &full, &acc);
            }
        }
        epoch_loss /= stats.total();
        if !epoch_loss.is_finite() || epoch_loss.abs() > DIVERGENCE_LIMIT {
            return Err(Error::numeric(format!(
                "training diverged at epoch {epoch}: mean loss {epoch_loss}"
            )));
        }
        loss_history.push(epoch_loss);
        if cfg.checkpoint_every > 0
            && (epoch % cfg.checkpoint_every == 0 || epoch == cfg.epochs)
        {
            if let Some(hook) = epoch_hook.as_deref_mut() {
                hook(epoch, &params, epoch_loss)?;
            }
        }
    }
    params.ensure_finite()?;
    Ok(Trained { params, loss_history })
}
