//! The five loss models over (context, focal) pair scores.
//!
//! Every model scores a pair with a kernel `psi` of the parameters and is
//! trained from its characteristic gradient, the derivative of its pairwise
//! loss with respect to `psi`. Each gradient has the form
//! `multiplier * (u(psi) - u(target))` for a monotone link `u`, so it
//! vanishes exactly where `psi` hits the model's target statistic:
//!
//! * `hilbert-mle`: `(p_i p_j)^(1/tau) * (e^psi - e^PMI)`, dot kernel.
//! * `sgns`: `(n_ij + n-_ij) * (sigmoid(psi) - sigmoid(ln(n_ij / n-_ij)))`,
//!   dot kernel, where `n-_ij` is the expected negative-sample count.
//! * `glove`: `2 h(n_ij) (psi - ln n_ij)`, dot kernel plus two biases.
//! * `swivel`: `sqrt(n_ij) (psi - PMI)` on observed pairs, a sigmoid push
//!   `sigmoid(psi - PMI*)` on unobserved ones (`PMI*` evaluated at count 1).
//! * `lds`: `4 h(n_ij) (psi - ln n_ij + shift)` on the squared-sum kernel
//!   `||w_i + v_j||^2`.
//!
//! Zero counts never need clamping: `e^PMI` enters through probabilities
//! (`exp(-inf) = 0`), and the `h` weights vanish at zero.

use ndarray::{s, Array1, Array2, Axis, Zip};

use crate::corpus::CooccurrenceStats;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::{Shard, ShardSpec};
use crate::trainer::ModelParams;

pub const DEFAULT_TAU: f64 = 2.0;
pub const DEFAULT_NEGATIVES: f64 = 15.0;
pub const DEFAULT_SMOOTHING: f64 = 0.75;
pub const DEFAULT_X_MAX: f64 = 100.0;
pub const DEFAULT_ALPHA: f64 = 0.75;
pub const DEFAULT_SHIFT: f64 = 0.0;

/// Scores are clamped to this magnitude before exponentiation in
/// `hilbert-mle` so exploding parameters degrade into a bounded gradient
/// instead of overflowing.
pub const PSI_CLAMP: f64 = 40.0;

/// A loss model with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossModel {
    /// Exponential-family factorization of `e^PMI`; `tau >= 1` tempers the
    /// `p_i p_j` weighting of frequent pairs.
    HilbertMle { tau: f64 },
    /// Skip-gram with negative sampling: `negatives` noise samples per
    /// observed pair, noise contexts drawn from the unigram distribution
    /// raised to `smoothing`.
    Sgns { negatives: f64, smoothing: f64 },
    /// Weighted least squares on log counts with learned bias vectors.
    Glove { x_max: f64, alpha: f64 },
    /// Piecewise loss on PMI: least squares where observed, sigmoid
    /// suppression where not.
    Swivel,
    /// Least squares of the squared-sum kernel against shifted log counts,
    /// with GloVe's `h` weighting.
    Lds { x_max: f64, alpha: f64, shift: f64 },
}

/// Kernel family a model scores pairs with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `<i|j> = w_i . v_j`
    Dot,
    /// `w_i . v_j + b_i + b_j`
    BiasedDot,
    /// `||w_i + v_j||^2`
    SquaredSum,
}

impl LossModel {
    /// Model with default hyperparameters, by CLI name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "hilbert-mle" => Ok(LossModel::HilbertMle { tau: DEFAULT_TAU }),
            "sgns" => Ok(LossModel::Sgns {
                negatives: DEFAULT_NEGATIVES,
                smoothing: DEFAULT_SMOOTHING,
            }),
            "glove" => Ok(LossModel::Glove {
                x_max: DEFAULT_X_MAX,
                alpha: DEFAULT_ALPHA,
            }),
            "swivel" => Ok(LossModel::Swivel),
            "lds" => Ok(LossModel::Lds {
                x_max: DEFAULT_X_MAX,
                alpha: DEFAULT_ALPHA,
                shift: DEFAULT_SHIFT,
            }),
            other => Err(Error::invalid(format!(
                "unknown model {other:?} (expected hilbert-mle, sgns, glove, swivel, or lds)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossModel::HilbertMle { .. } => "hilbert-mle",
            LossModel::Sgns { .. } => "sgns",
            LossModel::Glove { .. } => "glove",
            LossModel::Swivel => "swivel",
            LossModel::Lds { .. } => "lds",
        }
    }

    pub fn kernel(&self) -> Kernel {
        match self {
            LossModel::Glove { .. } => Kernel::BiasedDot,
            LossModel::Lds { .. } => Kernel::SquaredSum,
            _ => Kernel::Dot,
        }
    }

    pub fn uses_biases(&self) -> bool {
        self.kernel() == Kernel::BiasedDot
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, x: f64, positive: bool| -> Result<()> {
            if !x.is_finite() || (positive && x <= 0.0) {
                return Err(Error::config(format!(
                    "{} must be {} and finite, got {x}",
                    name,
                    if positive { "positive" } else { "real" }
                )));
            }
            Ok(())
        };
        match *self {
            LossModel::HilbertMle { tau } => check("tau", tau, true),
            LossModel::Sgns {
                negatives,
                smoothing,
            } => {
                check("negatives", negatives, true)?;
                check("smoothing", smoothing, true)
            }
            LossModel::Glove { x_max, alpha } => {
                check("x_max", x_max, true)?;
                check("alpha", alpha, true)
            }
            LossModel::Swivel => Ok(()),
            LossModel::Lds {
                x_max,
                alpha,
                shift,
            } => {
                check("x_max", x_max, true)?;
                check("alpha", alpha, true)?;
                check("shift", shift, false)
            }
        }
    }

    /// Precomputes the per-corpus constants a model needs at gradient time.
    pub fn prepare(&self, stats: &CooccurrenceStats) -> Result<Prepared> {
        self.validate()?;
        if stats.total() <= 0.0 {
            return Err(Error::invalid("statistics contain no cooccurrences"));
        }
        let neg_rate_ctx = match *self {
            LossModel::Sgns {
                negatives,
                smoothing,
            } => {
                // Noise contexts follow the smoothed unigram distribution
                // q_i = n_i^s / sum(n^s); a pair (i, j) expects
                // negatives * n_j * q_i noise draws.
                let powed: Vec<f64> = stats
                    .ctx_marginals()
                    .iter()
                    .map(|&n| if n > 0.0 { n.powf(smoothing) } else { 0.0 })
                    .collect();
                let norm: f64 = powed.iter().sum();
                if norm <= 0.0 {
                    return Err(Error::invalid("all context marginals are zero"));
                }
                Some(powed.into_iter().map(|p| negatives * p / norm).collect())
            }
            _ => None,
        };
        Ok(Prepared {
            model: *self,
            neg_rate_ctx,
        })
    }
}

impl std::fmt::Display for LossModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A loss model bound to one corpus' statistics.
#[derive(Debug, Clone)]
pub struct Prepared {
    model: LossModel,
    /// `negatives * n_i^s / sum(n^s)` per context id; sgns only.
    neg_rate_ctx: Option<Vec<f64>>,
}

impl Prepared {
    pub fn model(&self) -> &LossModel {
        &self.model
    }
}

fn sigmoid<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn clamp_psi<F: Scalar>(x: F) -> F {
    let lim = F::from_f64(PSI_CLAMP);
    x.max(-lim).min(lim)
}

fn check_block_shape<F>(shard: &Shard<F>, block: &Array2<F>, what: &str) -> Result<()> {
    let want = (shard.spec.nrows(), shard.spec.ncols());
    if block.dim() != want {
        return Err(Error::invalid(format!(
            "{what} block of shape {:?} does not match shard {:?}",
            block.dim(),
            want
        )));
    }
    Ok(())
}

fn ensure_finite_psi<F: Scalar>(shard: &Shard<F>, psi: &Array2<F>) -> Result<()> {
    for ((r, c), &y) in psi.indexed_iter() {
        if !y.is_finite() {
            return Err(Error::numeric(format!(
                "non-finite score {y} at pair ({}, {})",
                shard.spec.ctx.start + r,
                shard.spec.foc.start + c
            )));
        }
    }
    Ok(())
}

/// Per-entry values each model derives from a shard: the gradient multiplier
/// and the target score the gradient vanishes at.
struct EntryTerms<'a, F> {
    prep: &'a Prepared,
    shard: &'a Shard<F>,
    /// `p_i^(1/tau)` per shard row (hilbert-mle).
    row_pow: Option<Array1<F>>,
    /// `p_j^(1/tau)` per shard column (hilbert-mle).
    col_pow: Option<Array1<F>>,
    /// Expected negative count per unit of focal marginal, per shard row.
    neg_rate: Option<Array1<F>>,
    /// Focal marginal counts `n_j` per shard column (sgns).
    foc_counts: Option<Array1<F>>,
}

impl<'a, F: Scalar> EntryTerms<'a, F> {
    fn new(prep: &'a Prepared, shard: &'a Shard<F>) -> Self {
        let mut terms = EntryTerms {
            prep,
            shard,
            row_pow: None,
            col_pow: None,
            neg_rate: None,
            foc_counts: None,
        };
        match prep.model {
            LossModel::HilbertMle { tau } => {
                let inv_tau = F::from_f64(1.0 / tau);
                terms.row_pow = Some(shard.ctx_prob.mapv(|p| p.powf(inv_tau)));
                terms.col_pow = Some(shard.foc_prob.mapv(|p| p.powf(inv_tau)));
            }
            LossModel::Sgns { .. } => {
                let rates = prep.neg_rate_ctx.as_ref().expect("prepared for sgns");
                terms.neg_rate = Some(Array1::from_iter(
                    shard.spec.ctx.clone().map(|i| F::from_f64(rates[i])),
                ));
                terms.foc_counts = Some(shard.foc_prob.mapv(|p| p * shard.n_total));
            }
            _ => {}
        }
        terms
    }

    /// `min(1, (n / x_max)^alpha)`; zero at zero count.
    fn weight_h(n: F, x_max: f64, alpha: f64) -> F {
        if n <= F::zero() {
            return F::zero();
        }
        let ratio = n / F::from_f64(x_max);
        if ratio >= F::one() {
            F::one()
        } else {
            ratio.powf(F::from_f64(alpha))
        }
    }

    /// Expected negative-sample count for the entry at shard position (r, c).
    fn neg_count(&self, r: usize, c: usize) -> F {
        self.neg_rate.as_ref().expect("sgns terms")[r]
            * self.foc_counts.as_ref().expect("sgns terms")[c]
    }

    /// PMI evaluated as if the pair had count 1 (swivel's unobserved branch).
    fn pmi_star(&self, r: usize, c: usize) -> F {
        -(self.shard.ctx_prob[r] * self.shard.foc_prob[c] * self.shard.n_total).ln()
    }

    fn gradient(&self, r: usize, c: usize, psi: F) -> F {
        let n = self.shard.counts[(r, c)];
        match self.prep.model {
            LossModel::HilbertMle { .. } => {
                let m = self.row_pow.as_ref().unwrap()[r] * self.col_pow.as_ref().unwrap()[c];
                let target = self.shard.exp_pmi[(r, c)].ln();
                m * (clamp_psi(psi).exp() - target.exp())
            }
            LossModel::Sgns { .. } => {
                let neg = self.neg_count(r, c);
                if n <= F::zero() && neg <= F::zero() {
                    return F::zero();
                }
                let target = (n / neg).ln();
                (n + neg) * (sigmoid(psi) - sigmoid(target))
            }
            LossModel::Glove { x_max, alpha } => {
                if n <= F::zero() {
                    return F::zero();
                }
                let h = Self::weight_h(n, x_max, alpha);
                F::from_f64(2.0) * h * (psi - n.ln())
            }
            LossModel::Swivel => {
                if n > F::zero() {
                    let target = self.shard.exp_pmi[(r, c)].ln();
                    n.sqrt() * (psi - target)
                } else {
                    sigmoid(psi - self.pmi_star(r, c))
                }
            }
            LossModel::Lds {
                x_max,
                alpha,
                shift,
            } => {
                if n <= F::zero() {
                    return F::zero();
                }
                let h = Self::weight_h(n, x_max, alpha);
                let target = n.ln() - F::from_f64(shift);
                F::from_f64(4.0) * h * (psi - target)
            }
        }
    }

    fn loss(&self, r: usize, c: usize, psi: F) -> F {
        let n = self.shard.counts[(r, c)];
        match self.prep.model {
            LossModel::HilbertMle { .. } => {
                let m = self.row_pow.as_ref().unwrap()[r] * self.col_pow.as_ref().unwrap()[c];
                let target_exp = self.shard.exp_pmi[(r, c)].ln().exp();
                m * (clamp_psi(psi).exp() - target_exp * psi)
            }
            LossModel::Sgns { .. } => {
                let neg = self.neg_count(r, c);
                n * softplus(-psi) + neg * softplus(psi)
            }
            LossModel::Glove { x_max, alpha } => {
                if n <= F::zero() {
                    return F::zero();
                }
                let h = Self::weight_h(n, x_max, alpha);
                let diff = psi - n.ln();
                h * diff * diff
            }
            LossModel::Swivel => {
                if n > F::zero() {
                    let diff = psi - self.shard.exp_pmi[(r, c)].ln();
                    F::from_f64(0.5) * n.sqrt() * diff * diff
                } else {
                    softplus(psi - self.pmi_star(r, c))
                }
            }
            LossModel::Lds {
                x_max,
                alpha,
                shift,
            } => {
                if n <= F::zero() {
                    return F::zero();
                }
                let h = Self::weight_h(n, x_max, alpha);
                let diff = psi - (n.ln() - F::from_f64(shift));
                F::from_f64(2.0) * h * diff * diff
            }
        }
    }

    /// The score the entry's gradient vanishes at. For zero-count entries
    /// under glove, lds, and swivel this is a limit, not an attained zero.
    fn target(&self, r: usize, c: usize) -> F {
        let n = self.shard.counts[(r, c)];
        match self.prep.model {
            LossModel::HilbertMle { .. } | LossModel::Swivel => {
                if n > F::zero() {
                    self.shard.exp_pmi[(r, c)].ln()
                } else {
                    F::neg_infinity()
                }
            }
            LossModel::Sgns { .. } => {
                let neg = self.neg_count(r, c);
                if neg > F::zero() {
                    (n / neg).ln()
                } else {
                    F::neg_infinity()
                }
            }
            LossModel::Glove { .. } => {
                if n > F::zero() {
                    n.ln()
                } else {
                    F::neg_infinity()
                }
            }
            LossModel::Lds { shift, .. } => {
                if n > F::zero() {
                    n.ln() - F::from_f64(shift)
                } else {
                    F::neg_infinity()
                }
            }
        }
    }
}

/// Scores one shard of pairs with the model's kernel.
pub fn psi<F: Scalar>(
    model: &LossModel,
    params: &ModelParams<F>,
    spec: &ShardSpec,
) -> Result<Array2<F>> {
    params.check_shard(spec)?;
    let w = params.w.slice(s![spec.ctx.clone(), ..]);
    let v = params.v.slice(s![.., spec.foc.clone()]);
    match model.kernel() {
        Kernel::Dot => Ok(w.dot(&v)),
        Kernel::BiasedDot => {
            let (b_ctx, b_foc) = params.biases().ok_or_else(|| {
                Error::config(format!("model {} requires bias vectors", model.name()))
            })?;
            let mut out = w.dot(&v);
            out += &b_ctx.slice(s![spec.ctx.clone()]).insert_axis(Axis(1));
            out += &b_foc.slice(s![spec.foc.clone()]).insert_axis(Axis(0));
            Ok(out)
        }
        Kernel::SquaredSum => {
            let mut out = w.dot(&v);
            out *= F::from_f64(2.0);
            let row_sq = w.map_axis(Axis(1), |row| row.dot(&row));
            let col_sq = v.map_axis(Axis(0), |col| col.dot(&col));
            out += &row_sq.insert_axis(Axis(1));
            out += &col_sq.insert_axis(Axis(0));
            Ok(out)
        }
    }
}

/// Derivative of the pairwise loss with respect to each entry's score.
///
/// Errors on non-finite scores, reporting the offending pair.
pub fn characteristic_gradient<F: Scalar>(
    prep: &Prepared,
    shard: &Shard<F>,
    psi: &Array2<F>,
) -> Result<Array2<F>> {
    check_block_shape(shard, psi, "psi")?;
    ensure_finite_psi(shard, psi)?;
    let terms = EntryTerms::new(prep, shard);
    let mut out = Array2::zeros(psi.raw_dim());
    Zip::indexed(&mut out).and(psi).for_each(|(r, c), o, &y| {
        *o = terms.gradient(r, c, y);
    });
    Ok(out)
}

/// Total pairwise loss over one shard.
pub fn loss_value<F: Scalar>(prep: &Prepared, shard: &Shard<F>, psi: &Array2<F>) -> Result<F> {
    check_block_shape(shard, psi, "psi")?;
    ensure_finite_psi(shard, psi)?;
    let terms = EntryTerms::new(prep, shard);
    let mut total = F::zero();
    for ((r, c), &y) in psi.indexed_iter() {
        total += terms.loss(r, c, y);
    }
    Ok(total)
}

/// Score at which each entry's characteristic gradient vanishes.
pub fn target_psi<F: Scalar>(prep: &Prepared, shard: &Shard<F>) -> Array2<F> {
    let terms = EntryTerms::new(prep, shard);
    let mut out = Array2::zeros((shard.spec.nrows(), shard.spec.ncols()));
    Zip::indexed(&mut out).for_each(|(r, c), o| {
        *o = terms.target(r, c);
    });
    out
}

/// Gradients of one shard's loss with respect to the parameter slices it
/// touches, given the characteristic gradient block.
#[derive(Debug, Clone)]
pub struct ShardGradients<F> {
    /// Rows aligned with `spec.ctx`.
    pub d_w: Array2<F>,
    /// Columns aligned with `spec.foc`.
    pub d_v: Array2<F>,
    pub d_b_ctx: Option<Array1<F>>,
    pub d_b_foc: Option<Array1<F>>,
}

impl<F: Scalar> ShardGradients<F> {
    pub fn zeros_for(params: &ModelParams<F>, spec: &ShardSpec) -> Self {
        ShardGradients {
            d_w: Array2::zeros((spec.nrows(), params.d())),
            d_v: Array2::zeros((params.d(), spec.ncols())),
            d_b_ctx: params.b_ctx.as_ref().map(|_| Array1::zeros(spec.nrows())),
            d_b_foc: params.b_foc.as_ref().map(|_| Array1::zeros(spec.ncols())),
        }
    }

    pub fn ensure_finite(&self, spec: &ShardSpec) -> Result<()> {
        for (name, arr) in [("covector", &self.d_w), ("vector", &self.d_v)] {
            if arr.iter().any(|x| !x.is_finite()) {
                return Err(Error::numeric(format!(
                    "non-finite {name} gradient in shard ({:?}, {:?})",
                    spec.ctx, spec.foc
                )));
            }
        }
        for (name, arr) in [("context bias", &self.d_b_ctx), ("focal bias", &self.d_b_foc)] {
            if let Some(arr) = arr {
                if arr.iter().any(|x| !x.is_finite()) {
                    return Err(Error::numeric(format!(
                        "non-finite {name} gradient in shard ({:?}, {:?})",
                        spec.ctx, spec.foc
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Chains the characteristic gradient through the kernel to the parameters.
pub fn backprop_to_params<F: Scalar>(
    model: &LossModel,
    params: &ModelParams<F>,
    spec: &ShardSpec,
    grad: &Array2<F>,
) -> Result<ShardGradients<F>> {
    params.check_shard(spec)?;
    if grad.dim() != (spec.nrows(), spec.ncols()) {
        return Err(Error::invalid(format!(
            "gradient block of shape {:?} does not match shard ({}, {})",
            grad.dim(),
            spec.nrows(),
            spec.ncols()
        )));
    }
    let w = params.w.slice(s![spec.ctx.clone(), ..]);
    let v = params.v.slice(s![.., spec.foc.clone()]);
    match model.kernel() {
        Kernel::Dot => Ok(ShardGradients {
            d_w: grad.dot(&v.t()),
            d_v: w.t().dot(grad),
            d_b_ctx: None,
            d_b_foc: None,
        }),
        Kernel::BiasedDot => {
            if params.biases().is_none() {
                return Err(Error::config(format!(
                    "model {} requires bias vectors",
                    model.name()
                )));
            }
            Ok(ShardGradients {
                d_w: grad.dot(&v.t()),
                d_v: w.t().dot(grad),
                d_b_ctx: Some(grad.sum_axis(Axis(1))),
                d_b_foc: Some(grad.sum_axis(Axis(0))),
            })
        }
        Kernel::SquaredSum => {
            // d psi / d w_i = d psi / d v_j = 2 (w_i + v_j)
            let row_sum = grad.sum_axis(Axis(1));
            let col_sum = grad.sum_axis(Axis(0));
            let two = F::from_f64(2.0);
            let mut d_w = grad.dot(&v.t());
            d_w += &(&w * &row_sum.insert_axis(Axis(1)));
            d_w *= two;
            let mut d_v = w.t().dot(grad);
            d_v += &(&v * &col_sum.insert_axis(Axis(0)));
            d_v *= two;
            Ok(ShardGradients {
                d_w,
                d_v,
                d_b_ctx: None,
                d_b_foc: None,
            })
        }
    }
}
