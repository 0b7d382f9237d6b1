//! Sampled training for the exponential-family model.
//!
//! The model asserts `p(i, j) = p_i p_j e^psi_ij / Z`. Instead of sweeping
//! the full pair matrix, each step contrasts positive pairs drawn from the
//! observed cooccurrence distribution with negatives produced by one-step
//! Gibbs resampling of one coordinate under the model's own conditional
//! `p(j | i) ~ p_j e^psi_ij`. At the data distribution the two score
//! expectations cancel, so the contrastive gradient vanishes.

use std::collections::HashMap;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::CooccurrenceStats;
use crate::error::{Error, Result};
use crate::losses::{LossModel, ShardGradients};
use crate::scalar::Scalar;
use crate::stats::ShardSpec;
use crate::trainer::{init_params, AdamState, ModelParams, TrainConfig, Trained, DIVERGENCE_LIMIT};

/// Walker alias table for O(1) draws from a fixed discrete distribution.
#[derive(Debug, Clone)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    /// Builds the table with Vose's method. Weights must be non-negative
    /// and finite with a positive sum.
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("alias table needs at least one outcome"));
        }
        if weights.len() > u32::MAX as usize {
            return Err(Error::invalid("too many outcomes for alias table"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!("bad sampling weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::invalid("sampling weights sum to zero"));
        }
        let n = weights.len();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / sum).collect();
        let mut prob = vec![0.0f64; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let mut small: Vec<u32> = Vec::new();
        let mut large: Vec<u32> = Vec::new();
        for (k, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(k as u32);
            } else {
                large.push(k as u32);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            large.pop();
            prob[s as usize] = scaled[s as usize];
            alias[s as usize] = l;
            scaled[l as usize] = (scaled[l as usize] + scaled[s as usize]) - 1.0;
            if scaled[l as usize] < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        // Leftovers are 1.0 up to rounding.
        for k in small.into_iter().chain(large) {
            prob[k as usize] = 1.0;
        }
        Ok(AliasTable { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let k = rng.random_range(0..self.prob.len());
        if rng.random::<f64>() < self.prob[k] {
            k
        } else {
            self.alias[k] as usize
        }
    }

    /// Probability the table assigns to outcome `k`: the chance of landing
    /// on column `k` and keeping it, plus alias mass from other columns.
    pub fn outcome_probability(&self, k: usize) -> f64 {
        let mut mass = self.prob[k];
        for (m, &a) in self.alias.iter().enumerate() {
            if m != k && a as usize == k {
                mass += 1.0 - self.prob[m];
            }
        }
        mass / self.prob.len() as f64
    }
}

/// Draws (context, focal) pairs proportional to their cooccurrence counts.
#[derive(Debug, Clone)]
pub struct PositiveSampler {
    pairs: Vec<(u32, u32)>,
    table: AliasTable,
}

impl PositiveSampler {
    pub fn new(stats: &CooccurrenceStats) -> Result<Self> {
        let mut pairs = Vec::with_capacity(stats.nnz());
        let mut weights = Vec::with_capacity(stats.nnz());
        for (i, j, n) in stats.iter() {
            pairs.push((i, j));
            weights.push(n);
        }
        if pairs.is_empty() {
            return Err(Error::invalid("statistics contain no cooccurrences"));
        }
        let table = AliasTable::new(&weights)?;
        Ok(PositiveSampler { pairs, table })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, u32) {
        self.pairs[self.table.sample(rng)]
    }
}

/// Which coordinate of a pair a Gibbs move redraws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Context,
    Focal,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Context => Side::Focal,
            Side::Focal => Side::Context,
        }
    }
}

/// Samples from the model conditionals `p(j | i) ~ p_j e^psi_ij` (and the
/// context-side mirror), caching one cumulative distribution per fixed word.
///
/// The cache holds score-dependent state, so build a fresh sampler after
/// every parameter update.
pub struct GibbsSampler<'a, F: Scalar> {
    params: &'a ModelParams<F>,
    ctx_prob: Vec<f64>,
    foc_prob: Vec<f64>,
    cdf_cache: HashMap<(Side, u32), Vec<f64>>,
}

impl<'a, F: Scalar> GibbsSampler<'a, F> {
    pub fn new(params: &'a ModelParams<F>, stats: &CooccurrenceStats) -> Result<Self> {
        if stats.shape() != (params.n_ctx(), params.n_foc()) {
            return Err(Error::invalid(format!(
                "parameter shape ({}, {}) does not match statistics {:?}",
                params.n_ctx(),
                params.n_foc(),
                stats.shape()
            )));
        }
        let total = stats.total();
        if total <= 0.0 {
            return Err(Error::invalid("statistics contain no cooccurrences"));
        }
        Ok(GibbsSampler {
            params,
            ctx_prob: stats.ctx_marginals().iter().map(|n| n / total).collect(),
            foc_prob: stats.foc_marginals().iter().map(|n| n / total).collect(),
            cdf_cache: HashMap::new(),
        })
    }

    /// Unnormalized conditional CDF over the resampled side's vocabulary.
    fn cdf(&mut self, side: Side, fixed: u32) -> Result<&[f64]> {
        let key = (side, fixed);
        if !self.cdf_cache.contains_key(&key) {
            let scores: Array1<F> = match side {
                Side::Focal => self.params.w.row(fixed as usize).dot(&self.params.v),
                Side::Context => self.params.w.dot(&self.params.v.column(fixed as usize)),
            };
            let prior: &[f64] = match side {
                Side::Focal => &self.foc_prob,
                Side::Context => &self.ctx_prob,
            };
            let mut max_score = f64::NEG_INFINITY;
            for (s, &p) in scores.iter().zip(prior) {
                let s = s.as_f64();
                if !s.is_finite() {
                    return Err(Error::numeric(format!(
                        "non-finite score while resampling against word {fixed}"
                    )));
                }
                if p > 0.0 && s > max_score {
                    max_score = s;
                }
            }
            let mut cdf = Vec::with_capacity(prior.len());
            let mut acc = 0.0f64;
            for (s, &p) in scores.iter().zip(prior) {
                if p > 0.0 {
                    acc += p * (s.as_f64() - max_score).exp();
                }
                cdf.push(acc);
            }
            if !(acc.is_finite() && acc > 0.0) {
                return Err(Error::numeric(format!(
                    "conditional against word {fixed} has no probability mass"
                )));
            }
            self.cdf_cache.insert(key, cdf);
        }
        Ok(&self.cdf_cache[&key])
    }

    /// Conditional probabilities the sampler would draw from; mostly for
    /// verification.
    pub fn conditional(&mut self, side: Side, fixed: u32) -> Result<Vec<f64>> {
        let cdf = self.cdf(side, fixed)?;
        let total = *cdf.last().unwrap();
        let mut prev = 0.0;
        Ok(cdf
            .iter()
            .map(|&c| {
                let p = (c - prev) / total;
                prev = c;
                p
            })
            .collect())
    }

    /// One Gibbs move: redraws `side` of the pair from the model
    /// conditional with the other coordinate held fixed.
    pub fn resample<R: Rng + ?Sized>(
        &mut self,
        pair: (u32, u32),
        side: Side,
        rng: &mut R,
    ) -> Result<(u32, u32)> {
        let fixed = match side {
            Side::Focal => pair.0,
            Side::Context => pair.1,
        };
        let cdf = self.cdf(side, fixed)?;
        let total = *cdf.last().unwrap();
        let u = rng.random::<f64>() * total;
        let drawn = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1) as u32;
        Ok(match side {
            Side::Focal => (pair.0, drawn),
            Side::Context => (drawn, pair.1),
        })
    }

    /// Runs `steps` Gibbs moves starting from `pair`, beginning with
    /// `first` and alternating sides.
    pub fn chain<R: Rng + ?Sized>(
        &mut self,
        pair: (u32, u32),
        steps: usize,
        first: Side,
        rng: &mut R,
    ) -> Result<(u32, u32)> {
        let mut current = pair;
        let mut side = first;
        for _ in 0..steps {
            current = self.resample(current, side, rng)?;
            side = side.other();
        }
        Ok(current)
    }

    pub fn cached_conditionals(&self) -> usize {
        self.cdf_cache.len()
    }
}

/// One contrastive batch: positives from the data, negatives from the model.
#[derive(Debug, Clone, Default)]
pub struct PairBatch {
    pub positives: Vec<(u32, u32)>,
    pub negatives: Vec<(u32, u32)>,
}

/// Contrastive gradient: mean score gradient of negatives minus positives,
/// shaped like the full parameter set.
pub fn cd_gradient<F: Scalar>(
    params: &ModelParams<F>,
    batch: &PairBatch,
) -> Result<ShardGradients<F>> {
    if batch.positives.is_empty() {
        return Err(Error::invalid("contrastive batch has no positive pairs"));
    }
    if batch.positives.len() != batch.negatives.len() {
        return Err(Error::invalid(format!(
            "batch has {} positives but {} negatives",
            batch.positives.len(),
            batch.negatives.len()
        )));
    }
    let full = ShardSpec {
        ctx: 0..params.n_ctx(),
        foc: 0..params.n_foc(),
    };
    let mut grads = ShardGradients::zeros_for(params, &full);
    let scale = F::from_f64(1.0 / batch.positives.len() as f64);
    let mut add_pairs = |pairs: &[(u32, u32)], sign: F| -> Result<()> {
        for &(i, j) in pairs {
            if i as usize >= params.n_ctx() || j as usize >= params.n_foc() {
                return Err(Error::invalid(format!(
                    "pair ({i}, {j}) out of range for {} x {} parameters",
                    params.n_ctx(),
                    params.n_foc()
                )));
            }
            let coeff = sign * scale;
            grads
                .d_w
                .row_mut(i as usize)
                .scaled_add(coeff, &params.v.column(j as usize));
            grads
                .d_v
                .column_mut(j as usize)
                .scaled_add(coeff, &params.w.row(i as usize));
        }
        Ok(())
    };
    add_pairs(&batch.positives, -F::one())?;
    add_pairs(&batch.negatives, F::one())?;
    Ok(grads)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdConfig {
    pub d: usize,
    pub epochs: usize,
    pub batch_size: usize,
    /// Gibbs moves per negative sample.
    pub gibbs_steps: usize,
    pub lr: f64,
    pub seed: u64,
    pub init_scale: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for CdConfig {
    fn default() -> Self {
        CdConfig {
            d: 300,
            epochs: 25,
            batch_size: 1024,
            gibbs_steps: 1,
            lr: 0.01,
            seed: 1,
            init_scale: None,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if self.gibbs_steps == 0 {
            return Err(Error::config("gibbs steps must be at least 1"));
        }
        self.as_train_config().validate()
    }

    fn as_train_config(&self) -> TrainConfig {
        TrainConfig {
            d: self.d,
            epochs: self.epochs,
            lr: self.lr,
            seed: self.seed,
            init_scale: self.init_scale,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            ..TrainConfig::default()
        }
    }
}

/// Trains the exponential-family model by contrastive divergence.
///
/// The returned history tracks the mean score gap (negatives minus
/// positives) per epoch rather than a loss; it hovers near zero once the
/// model matches the data.
pub fn train_cd<F: Scalar>(stats: &CooccurrenceStats, cfg: &CdConfig) -> Result<Trained<F>> {
    cfg.validate()?;
    let model = LossModel::HilbertMle { tau: 1.0 };
    let positives = PositiveSampler::new(stats)?;
    let mut params: ModelParams<F> = init_params(&model, stats, &cfg.as_train_config())?;
    let full = ShardSpec {
        ctx: 0..params.n_ctx(),
        foc: 0..params.n_foc(),
    };
    let mut adam = AdamState::new(&params, cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2);
    let batches_per_epoch = ((stats.total() / cfg.batch_size as f64).ceil() as usize).max(1);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let mut epoch_gap = 0.0f64;
        for _ in 0..batches_per_epoch {
            let mut batch = PairBatch::default();
            for _ in 0..cfg.batch_size {
                batch.positives.push(positives.sample(&mut rng));
            }
            let mut gibbs = GibbsSampler::new(&params, stats)?;
            for k in 0..cfg.batch_size {
                let first = if rng.random_bool(0.5) {
                    Side::Context
                } else {
                    Side::Focal
                };
                let neg = gibbs.chain(batch.positives[k], cfg.gibbs_steps, first, &mut rng)?;
                batch.negatives.push(neg);
            }
            let mut gap = 0.0f64;
            for (&(pi, pj), &(ni, nj)) in batch.positives.iter().zip(&batch.negatives) {
                gap += params.score(ni as usize, nj as usize).as_f64()
                    - params.score(pi as usize, pj as usize).as_f64();
            }
            epoch_gap += gap / cfg.batch_size as f64;
            let grads = cd_gradient(&params, &batch)?;
            grads.ensure_finite(&full)?;
            adam.begin_step();
            adam.apply_block(&mut params, &full, &grads);
        }
        let mean_gap = epoch_gap / batches_per_epoch as f64;
        if !mean_gap.is_finite() || mean_gap.abs() > DIVERGENCE_LIMIT {
            return Err(Error::numeric(format!(
                "sampled training diverged at epoch {epoch}: score gap {mean_gap}"
            )));
        }
        history.push(mean_gap);
        params.ensure_finite()?;
    }
    Ok(Trained {
        params,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn tiny_stats() -> CooccurrenceStats {
        CooccurrenceStats::from_entries(
            3,
            3,
            [
                ((0u32, 0u32), 4.0),
                ((0, 1), 2.0),
                ((1, 0), 2.0),
                ((1, 1), 6.0),
                ((2, 2), 1.0),
                ((0, 2), 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn alias_outcome_probabilities_match_weights() {
        let weights = [0.5, 3.25, 0.25, 1.0, 0.0];
        let sum: f64 = weights.iter().sum();
        let table = AliasTable::new(&weights).unwrap();
        for (k, &w) in weights.iter().enumerate() {
            let p = table.outcome_probability(k);
            assert!(
                (p - w / sum).abs() < 1e-12,
                "outcome {k}: table {p}, weights {}",
                w / sum
            );
        }
    }

    #[test]
    fn alias_handles_many_random_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let weights: Vec<f64> = (0..64).map(|_| rng.random::<f64>() * 10.0).collect();
        let sum: f64 = weights.iter().sum();
        let table = AliasTable::new(&weights).unwrap();
        for (k, &w) in weights.iter().enumerate() {
            assert!((table.outcome_probability(k) - w / sum).abs() < 1e-12);
        }
    }

    #[test]
    fn alias_rejects_bad_weights() {
        assert!(AliasTable::new(&[]).is_err());
        assert!(AliasTable::new(&[1.0, -0.5]).is_err());
        assert!(AliasTable::new(&[f64::NAN]).is_err());
        assert!(AliasTable::new(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn alias_sampling_tracks_weights() {
        let weights = [1.0, 2.0, 5.0, 2.0];
        let table = AliasTable::new(&weights).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 4];
        let draws = 40_000;
        for _ in 0..draws {
            counts[table.sample(&mut rng)] += 1;
        }
        for (k, &w) in weights.iter().enumerate() {
            let freq = counts[k] as f64 / draws as f64;
            assert!((freq - w / 10.0).abs() < 0.015, "outcome {k}: {freq}");
        }
    }

    #[test]
    fn positive_sampler_draws_only_observed_pairs() {
        let stats = tiny_stats();
        let sampler = PositiveSampler::new(&stats).unwrap();
        assert_eq!(sampler.len(), stats.nnz());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..5000 {
            let (i, j) = sampler.sample(&mut rng);
            assert!(stats.count(i, j) > 0.0);
            seen.insert((i, j));
        }
        assert_eq!(seen.len(), stats.nnz(), "every observed pair gets drawn");
    }

    fn demo_params(seed: u64) -> ModelParams<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ModelParams {
            w: Array2::from_shape_fn((3, 2), |_| rng.random_range(-1.0..1.0)),
            v: Array2::from_shape_fn((2, 3), |_| rng.random_range(-1.0..1.0)),
            b_ctx: None,
            b_foc: None,
        }
    }

    #[test]
    fn conditional_matches_direct_softmax() {
        let stats = tiny_stats();
        let params = demo_params(9);
        let mut gibbs = GibbsSampler::new(&params, &stats).unwrap();
        let total = stats.total();
        for i in 0..3u32 {
            let got = gibbs.conditional(Side::Focal, i).unwrap();
            // Direct computation without the max-subtraction trick.
            let weights: Vec<f64> = (0..3)
                .map(|j| {
                    let p_j = stats.foc_marginal(j as u32) / total;
                    p_j * params.score(i as usize, j).exp()
                })
                .collect();
            let norm: f64 = weights.iter().sum();
            for (a, b) in got.iter().zip(&weights) {
                assert!((a - b / norm).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn resample_keeps_the_fixed_coordinate() {
        let stats = tiny_stats();
        let params = demo_params(13);
        let mut gibbs = GibbsSampler::new(&params, &stats).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let pair = (1u32, 2u32);
            let (i, j) = gibbs.resample(pair, Side::Focal, &mut rng).unwrap();
            assert_eq!(i, 1);
            assert!(j < 3);
            let (i, j) = gibbs.resample(pair, Side::Context, &mut rng).unwrap();
            assert_eq!(j, 2);
            assert!(i < 3);
        }
        // Two fixed words per side were exercised at most; the cache holds
        // one CDF per (side, fixed word).
        assert!(gibbs.cached_conditionals() <= 2);
    }

    #[test]
    fn zero_marginal_words_are_never_drawn() {
        // Word 2 never appears on the focal side.
        let stats = CooccurrenceStats::from_entries(
            3,
            3,
            [((0u32, 0u32), 3.0), ((1, 1), 2.0), ((2, 0), 1.0), ((2, 1), 1.0)],
        )
        .unwrap();
        assert_eq!(stats.foc_marginal(2), 0.0);
        let params = demo_params(17);
        let mut gibbs = GibbsSampler::new(&params, &stats).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..2000 {
            let (_, j) = gibbs.resample((0, 0), Side::Focal, &mut rng).unwrap();
            assert_ne!(j, 2);
        }
    }

    #[test]
    fn gibbs_sampling_tracks_conditional() {
        let stats = tiny_stats();
        let params = demo_params(21);
        let mut gibbs = GibbsSampler::new(&params, &stats).unwrap();
        let expect = gibbs.conditional(Side::Focal, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let draws = 30_000;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let (_, j) = gibbs.resample((0, 1), Side::Focal, &mut rng).unwrap();
            counts[j as usize] += 1;
        }
        for j in 0..3 {
            let freq = counts[j] as f64 / draws as f64;
            assert!((freq - expect[j]).abs() < 0.01, "word {j}: {freq} vs {}", expect[j]);
        }
    }

    #[test]
    fn cd_gradient_hand_example() {
        let params = demo_params(30);
        let batch = PairBatch {
            positives: vec![(0, 1)],
            negatives: vec![(0, 2)],
        };
        let grads = cd_gradient(&params, &batch).unwrap();
        // Row 0 of d_w: v_2 - v_1; focal columns get -w_0 and +w_0.
        for k in 0..2 {
            let expected = params.v[(k, 2)] - params.v[(k, 1)];
            assert!((grads.d_w[(0, k)] - expected).abs() < 1e-15);
            assert!((grads.d_v[(k, 1)] + params.w[(0, k)]).abs() < 1e-15);
            assert!((grads.d_v[(k, 2)] - params.w[(0, k)]).abs() < 1e-15);
        }
        assert!(grads.d_w.row(1).iter().all(|&x| x == 0.0));
        assert!(grads.d_v.column(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cd_gradient_validates_batches() {
        let params = demo_params(31);
        let empty = PairBatch::default();
        assert!(cd_gradient(&params, &empty).is_err());
        let uneven = PairBatch {
            positives: vec![(0, 0), (1, 1)],
            negatives: vec![(0, 0)],
        };
        assert!(cd_gradient(&params, &uneven).is_err());
        let out_of_range = PairBatch {
            positives: vec![(0, 9)],
            negatives: vec![(0, 0)],
        };
        assert!(cd_gradient(&params, &out_of_range).is_err());
    }

    #[test]
    fn cd_training_runs_and_is_deterministic() {
        let stats = tiny_stats();
        let cfg = CdConfig {
            d: 3,
            epochs: 2,
            batch_size: 16,
            lr: 0.05,
            seed: 12,
            ..CdConfig::default()
        };
        let a: Trained<f64> = train_cd(&stats, &cfg).unwrap();
        let b: Trained<f64> = train_cd(&stats, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.loss_history, b.loss_history);
        assert_eq!(a.loss_history.len(), 2);
    }

    #[test]
    fn cd_config_is_validated() {
        let base = CdConfig::default();
        assert!(base.validate().is_ok());
        assert!(CdConfig { batch_size: 0, ..base.clone() }.validate().is_err());
        assert!(CdConfig { gibbs_steps: 0, ..base.clone() }.validate().is_err());
        assert!(CdConfig { lr: -1.0, ..base }.validate().is_err());
    }
}
