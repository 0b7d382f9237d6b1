//! Probabilities, PMI, and sharding of the pair space.

use std::ops::Range;

use ndarray::{Array1, Array2};

use crate::corpus::CooccurrenceStats;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probability view over cooccurrence counts: `p_ij = n_ij / N` and the
/// marginal distributions.
#[derive(Debug, Clone, Copy)]
pub struct Probabilities<'a> {
    stats: &'a CooccurrenceStats,
}

impl<'a> Probabilities<'a> {
    pub fn new(stats: &'a CooccurrenceStats) -> Result<Self> {
        if stats.total() <= 0.0 {
            return Err(Error::invalid("statistics contain no cooccurrences"));
        }
        Ok(Probabilities { stats })
    }

    pub fn p(&self, i: u32, j: u32) -> f64 {
        self.stats.count(i, j) / self.stats.total()
    }

    pub fn p_ctx(&self, i: u32) -> f64 {
        self.stats.ctx_marginal(i) / self.stats.total()
    }

    pub fn p_foc(&self, j: u32) -> f64 {
        self.stats.foc_marginal(j) / self.stats.total()
    }
}

/// Pointwise mutual information `ln(N * n_ij / (n_i * n_j))`.
///
/// Returns `-inf` for pairs that never cooccur; errors if either marginal is
/// zero, which leaves PMI undefined.
pub fn pmi(stats: &CooccurrenceStats, i: u32, j: u32) -> Result<f64> {
    let n_i = stats.ctx_marginal(i);
    let n_j = stats.foc_marginal(j);
    if n_i <= 0.0 || n_j <= 0.0 {
        return Err(Error::UndefinedPmi {
            i: i as usize,
            j: j as usize,
        });
    }
    Ok((stats.count(i, j) * stats.total() / (n_i * n_j)).ln())
}

/// Index ranges of one rectangular tile of the (context, focal) pair space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardSpec {
    pub ctx: Range<usize>,
    pub foc: Range<usize>,
}

impl ShardSpec {
    pub fn nrows(&self) -> usize {
        self.ctx.len()
    }

    pub fn ncols(&self) -> usize {
        self.foc.len()
    }
}

/// Tiles the full cross product into `ceil(n_ctx/s) * ceil(n_foc/s)` shards
/// in row-major order. Every pair lands in exactly one shard.
pub fn shard_grid(n_ctx: usize, n_foc: usize, shard_size: usize) -> Result<Vec<ShardSpec>> {
    if shard_size == 0 {
        return Err(Error::invalid("shard_size must be at least 1"));
    }
    if n_ctx == 0 || n_foc == 0 {
        return Err(Error::invalid("cannot shard an empty pair space"));
    }
    let mut specs = Vec::new();
    let mut ctx_start = 0;
    while ctx_start < n_ctx {
        let ctx_end = (ctx_start + shard_size).min(n_ctx);
        let mut foc_start = 0;
        while foc_start < n_foc {
            let foc_end = (foc_start + shard_size).min(n_foc);
            specs.push(ShardSpec {
                ctx: ctx_start..ctx_end,
                foc: foc_start..foc_end,
            });
            foc_start = foc_end;
        }
        ctx_start = ctx_end;
    }
    Ok(specs)
}

/// Dense block of `p_ij / (p_i * p_j)` for one shard; exactly zero where
/// `n_ij` is zero, so zero counts never produce infinities here.
pub fn exp_pmi_block(stats: &CooccurrenceStats, spec: &ShardSpec) -> Array2<f64> {
    let mut block = Array2::zeros((spec.nrows(), spec.ncols()));
    let total = stats.total();
    for (r, i) in spec.ctx.clone().enumerate() {
        let n_i = stats.ctx_marginal(i as u32);
        for &(j, n_ij) in in_range(stats.row(i as u32), &spec.foc) {
            let n_j = stats.foc_marginal(j);
            block[(r, (j as usize) - spec.foc.start)] = n_ij * total / (n_i * n_j);
        }
    }
    block
}

fn in_range<'a>(row: &'a [(u32, f64)], foc: &Range<usize>) -> &'a [(u32, f64)] {
    let lo = row.partition_point(|&(j, _)| (j as usize) < foc.start);
    let hi = row.partition_point(|&(j, _)| (j as usize) < foc.end);
    &row[lo..hi]
}

/// One materialized shard: dense counts, marginal probability slices, and
/// the precomputed `e^PMI` block, converted to the working scalar type.
#[derive(Debug, Clone)]
pub struct Shard<F> {
    pub spec: ShardSpec,
    /// Dense `n_ij` for the tile.
    pub counts: Array2<F>,
    /// `p_i` for the tile's context ids.
    pub ctx_prob: Array1<F>,
    /// `p_j` for the tile's focal ids.
    pub foc_prob: Array1<F>,
    /// `p_ij / (p_i * p_j)`, zero where `n_ij` is zero.
    pub exp_pmi: Array2<F>,
    /// Grand total `N` of the full statistics.
    pub n_total: F,
}

impl<F: Scalar> Shard<F> {
    pub fn materialize(stats: &CooccurrenceStats, spec: &ShardSpec) -> Result<Self> {
        let (n_ctx, n_foc) = stats.shape();
        if spec.ctx.end > n_ctx || spec.foc.end > n_foc {
            return Err(Error::invalid(format!(
                "shard {spec:?} outside statistics of shape {n_ctx} x {n_foc}"
            )));
        }
        let total = stats.total();
        if total <= 0.0 {
            return Err(Error::invalid("statistics contain no cooccurrences"));
        }
        let mut counts = Array2::zeros((spec.nrows(), spec.ncols()));
        for (r, i) in spec.ctx.clone().enumerate() {
            for &(j, n_ij) in in_range(stats.row(i as u32), &spec.foc) {
                counts[(r, (j as usize) - spec.foc.start)] = F::from_f64(n_ij);
            }
        }
        let ctx_prob = Array1::from_iter(
            spec.ctx
                .clone()
                .map(|i| F::from_f64(stats.ctx_marginal(i as u32) / total)),
        );
        let foc_prob = Array1::from_iter(
            spec.foc
                .clone()
                .map(|j| F::from_f64(stats.foc_marginal(j as u32) / total)),
        );
        let exp_pmi = exp_pmi_block(stats, spec).mapv(F::from_f64);
        Ok(Shard {
            spec: spec.clone(),
            counts,
            ctx_prob,
            foc_prob,
            exp_pmi,
            n_total: F::from_f64(total),
        })
    }
}

/// Lazily materializes every shard of the grid in row-major order.
pub fn make_shards<'a, F: Scalar>(
    stats: &'a CooccurrenceStats,
    shard_size: usize,
) -> Result<impl Iterator<Item = Result<Shard<F>>> + 'a> {
    let (n_ctx, n_foc) = stats.shape();
    let specs = shard_grid(n_ctx, n_foc, shard_size)?;
    Ok(specs
        .into_iter()
        .map(move |spec| Shard::materialize(stats, &spec)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{count_cooccurrences, Vocabulary, Weighting};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::io::Cursor;

    fn aba_stats() -> CooccurrenceStats {
        let v = Vocabulary::from_parts(vec!["a".into(), "b".into()], vec![2, 1]).unwrap();
        count_cooccurrences(Cursor::new("a b a"), &v, 1, Weighting::Flat).unwrap()
    }

    fn random_stats(n: usize, density: f64, seed: u64) -> CooccurrenceStats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        for i in 0..n as u32 {
            for j in 0..n as u32 {
                if rng.random::<f64>() < density {
                    entries.push(((i, j), rng.random_range(1..200) as f64));
                }
            }
        }
        CooccurrenceStats::from_entries(n, n, entries).unwrap()
    }

    #[test]
    fn pmi_of_small_corpus() {
        let s = aba_stats();
        // N = 4, n(b,a) = 2, marginals all 2.
        let got = pmi(&s, 1, 0).unwrap();
        assert!((got - 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn pmi_zero_pair_is_negative_infinity() {
        let s = aba_stats();
        assert_eq!(pmi(&s, 0, 0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn pmi_zero_marginal_errors() {
        let s = CooccurrenceStats::from_entries(3, 3, [((0, 1), 2.0), ((1, 0), 2.0)]).unwrap();
        assert!(matches!(pmi(&s, 2, 0), Err(Error::UndefinedPmi { .. })));
        assert!(matches!(pmi(&s, 0, 2), Err(Error::UndefinedPmi { .. })));
    }

    #[test]
    fn probabilities_are_normalized() {
        let s = random_stats(7, 0.6, 3);
        let p = Probabilities::new(&s).unwrap();
        let sum_ctx: f64 = (0..7).map(|i| p.p_ctx(i)).sum();
        assert!((sum_ctx - 1.0).abs() < 1e-12);
        let sum_all: f64 = (0..7)
            .flat_map(|i| (0..7).map(move |j| (i, j)))
            .map(|(i, j)| p.p(i, j))
            .sum();
        assert!((sum_all - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_covers_every_pair_once() {
        let specs = shard_grid(5, 5, 2).unwrap();
        assert_eq!(specs.len(), 9);
        let mut seen = vec![vec![0u32; 5]; 5];
        for spec in &specs {
            for i in spec.ctx.clone() {
                for j in spec.foc.clone() {
                    seen[i][j] += 1;
                }
            }
        }
        assert!(seen.iter().flatten().all(|&c| c == 1));
        // Row-major order: first shard starts at the origin.
        assert_eq!(specs[0], ShardSpec { ctx: 0..2, foc: 0..2 });
        assert_eq!(specs[1], ShardSpec { ctx: 0..2, foc: 2..4 });
        assert_eq!(specs[3], ShardSpec { ctx: 2..4, foc: 0..2 });
    }

    #[test]
    fn grid_rejects_zero_shard_size() {
        assert!(shard_grid(5, 5, 0).is_err());
    }

    #[test]
    fn shards_reassemble_counts_exactly() {
        let s = random_stats(11, 0.4, 7);
        let mut nnz = 0;
        for shard in make_shards::<f64>(&s, 3).unwrap() {
            let shard = shard.unwrap();
            for (r, i) in shard.spec.ctx.clone().enumerate() {
                for (c, j) in shard.spec.foc.clone().enumerate() {
                    let v = shard.counts[(r, c)];
                    assert_eq!(v, s.count(i as u32, j as u32));
                    if v > 0.0 {
                        nnz += 1;
                    }
                }
            }
        }
        assert_eq!(nnz, s.nnz());
    }

    #[test]
    fn exp_pmi_agrees_with_pmi() {
        let s = random_stats(9, 0.5, 11);
        let spec = ShardSpec { ctx: 0..9, foc: 0..9 };
        let block = exp_pmi_block(&s, &spec);
        for i in 0..9u32 {
            for j in 0..9u32 {
                let entry = block[(i as usize, j as usize)];
                if s.count(i, j) == 0.0 {
                    assert_eq!(entry, 0.0);
                } else {
                    let from_log = pmi(&s, i, j).unwrap().exp();
                    assert!((entry - from_log).abs() <= 1e-12 * entry.max(1.0));
                }
            }
        }
    }

    #[test]
    fn shard_probability_slices_match_global() {
        let s = random_stats(6, 0.7, 13);
        let spec = ShardSpec { ctx: 2..5, foc: 1..6 };
        let shard = Shard::<f64>::materialize(&s, &spec).unwrap();
        for (r, i) in spec.ctx.clone().enumerate() {
            assert_eq!(shard.ctx_prob[r], s.ctx_marginal(i as u32) / s.total());
        }
        for (c, j) in spec.foc.clone().enumerate() {
            assert_eq!(shard.foc_prob[c], s.foc_marginal(j as u32) / s.total());
        }
    }
}
