//! Vocabulary extraction and windowed cooccurrence counting.
//!
//! Tokenization is whitespace splitting on lowercased text, one document per
//! line. Counting slides a symmetric window over each document: for a focal
//! position `t` and a context position `t'` with `1 <= |t - t'| <= window`,
//! the pair `(word(t'), word(t))` receives weight 1 (flat) or `1/|t - t'|`
//! (harmonic). Out-of-vocabulary tokens contribute no pairs but still occupy
//! positions, and windows never cross document boundaries.
//!
//! Harmonic weights are accumulated as integer multiples of
//! `1 / lcm(1..=window)`, so counting is exact and merging partial counts is
//! bit-identical to a single pass regardless of chunking.

use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Token ids are dense `u32` indices; id order is frequency order.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    freqs: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds a vocabulary from parallel token/frequency lists.
    ///
    /// Tokens must be unique and non-empty, frequencies at least 1.
    pub fn from_parts(tokens: Vec<String>, freqs: Vec<u64>) -> Result<Self> {
        if tokens.len() != freqs.len() {
            return Err(Error::invalid("token and frequency lists differ in length"));
        }
        if tokens.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        if tokens.len() > u32::MAX as usize {
            return Err(Error::invalid("vocabulary too large for u32 ids"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, token) in tokens.iter().enumerate() {
            if token.is_empty() {
                return Err(Error::invalid(format!("empty token at id {id}")));
            }
            if freqs[id] == 0 {
                return Err(Error::invalid(format!("zero frequency for token {token:?}")));
            }
            if index.insert(token.clone(), id as u32).is_some() {
                return Err(Error::invalid(format!("duplicate token {token:?}")));
            }
        }
        Ok(Vocabulary {
            tokens,
            freqs,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn freq(&self, id: u32) -> u64 {
        self.freqs[id as usize]
    }

    /// Iterates `(token, frequency)` in id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.tokens
            .iter()
            .map(|t| t.as_str())
            .zip(self.freqs.iter().copied())
    }
}

/// Builds a vocabulary of at most `max_size` tokens with corpus frequency at
/// least `min_count`, ordered by descending frequency with lexicographic
/// tie-breaking. Ids are assigned in that order.
pub fn build_vocab(corpus: impl BufRead, max_size: usize, min_count: u64) -> Result<Vocabulary> {
    if max_size == 0 {
        return Err(Error::invalid("max_size must be at least 1"));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut any_token = false;
    for line in corpus.lines() {
        let line = line?;
        for token in line.to_lowercase().split_whitespace() {
            any_token = true;
            *counts.entry(token.to_string()).or_insert(0) += 1;
        }
    }
    if !any_token {
        return Err(Error::EmptyCorpus);
    }
    let mut entries: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(max_size);
    let (tokens, freqs) = entries.into_iter().unzip();
    Vocabulary::from_parts(tokens, freqs)
}

/// Window weighting for cooccurrence counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// Every position in the window counts 1.
    Flat,
    /// A position at distance `d` counts `1/d`.
    Harmonic,
}

impl Weighting {
    pub fn name(self) -> &'static str {
        match self {
            Weighting::Flat => "flat",
            Weighting::Harmonic => "harmonic",
        }
    }
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(Weighting::Flat),
            "harmonic" => Ok(Weighting::Harmonic),
            other => Err(Error::invalid(format!(
                "unknown weighting {other:?} (expected flat or harmonic)"
            ))),
        }
    }
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Sparse cooccurrence statistics: counts `n_ij` indexed by (context id,
/// focal id), with marginals and the grand total. Counts are non-negative
/// `f64` and immutable once built.
#[derive(Debug, Clone)]
pub struct CooccurrenceStats {
    n_ctx: usize,
    n_foc: usize,
    /// Row `i` holds `(j, n_ij)` sorted by `j`; zero entries are absent.
    rows: Vec<Vec<(u32, f64)>>,
    ctx_marginals: Vec<f64>,
    foc_marginals: Vec<f64>,
    total: f64,
    nnz: usize,
}

impl CooccurrenceStats {
    /// Assembles stats from explicit entries. Duplicate coordinates are
    /// summed; zero-valued entries are dropped. Marginals and the total are
    /// recomputed from the entries in sorted order.
    pub fn from_entries(
        n_ctx: usize,
        n_foc: usize,
        entries: impl IntoIterator<Item = ((u32, u32), f64)>,
    ) -> Result<Self> {
        let mut rows: Vec<HashMap<u32, f64>> = vec![HashMap::new(); n_ctx];
        for ((i, j), value) in entries {
            if (i as usize) >= n_ctx || (j as usize) >= n_foc {
                return Err(Error::invalid(format!(
                    "entry ({i}, {j}) outside shape {n_ctx} x {n_foc}"
                )));
            }
            if !value.is_finite() || value < 0.0 {
                return Err(Error::invalid(format!(
                    "count at ({i}, {j}) must be finite and non-negative, got {value}"
                )));
            }
            *rows[i as usize].entry(j).or_insert(0.0) += value;
        }
        let rows: Vec<Vec<(u32, f64)>> = rows
            .into_iter()
            .map(|row| {
                let mut row: Vec<(u32, f64)> = row.into_iter().filter(|&(_, v)| v > 0.0).collect();
                row.sort_by_key(|&(j, _)| j);
                row
            })
            .collect();
        Ok(Self::finalize(n_ctx, n_foc, rows))
    }

    fn finalize(n_ctx: usize, n_foc: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let mut ctx_marginals = vec![0.0; n_ctx];
        let mut foc_marginals = vec![0.0; n_foc];
        let mut total = 0.0;
        let mut nnz = 0;
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                ctx_marginals[i] += v;
                foc_marginals[j as usize] += v;
                total += v;
                nnz += 1;
            }
        }
        CooccurrenceStats {
            n_ctx,
            n_foc,
            rows,
            ctx_marginals,
            foc_marginals,
            total,
            nnz,
        }
    }

    /// (number of context ids, number of focal ids)
    pub fn shape(&self) -> (usize, usize) {
        (self.n_ctx, self.n_foc)
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    /// `n_ij`; zero for absent pairs.
    pub fn count(&self, i: u32, j: u32) -> f64 {
        self.rows[i as usize]
            .binary_search_by_key(&j, |e| e.0)
            .map(|k| self.rows[i as usize][k].1)
            .unwrap_or(0.0)
    }

    /// Context marginal `n_i`.
    pub fn ctx_marginal(&self, i: u32) -> f64 {
        self.ctx_marginals[i as usize]
    }

    /// Focal marginal `n_j`.
    pub fn foc_marginal(&self, j: u32) -> f64 {
        self.foc_marginals[j as usize]
    }

    pub fn ctx_marginals(&self) -> &[f64] {
        &self.ctx_marginals
    }

    pub fn foc_marginals(&self) -> &[f64] {
        &self.foc_marginals
    }

    /// Grand total `N`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Nonzero entries of row `i`, sorted by focal id.
    pub fn row(&self, i: u32) -> &[(u32, f64)] {
        &self.rows[i as usize]
    }

    /// Iterates `(i, j, n_ij)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i as u32, j, v)))
    }
}

/// Incremental cooccurrence counter. Counts are accumulated as integer
/// numerators over a fixed denominator, so `merge` is exact and the result
/// does not depend on how the corpus was chunked, as long as chunk boundaries
/// fall on document boundaries.
#[derive(Debug)]
pub struct CooccurrenceBuilder {
    vocab_size: usize,
    window: usize,
    weighting: Weighting,
    /// Denominator: 1 for flat, lcm(1..=window) for harmonic.
    scale: u64,
    acc: HashMap<(u32, u32), u64>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn weight_scale(window: usize, weighting: Weighting) -> Result<u64> {
    match weighting {
        Weighting::Flat => Ok(1),
        Weighting::Harmonic => {
            let mut scale: u64 = 1;
            for d in 2..=window as u64 {
                scale = (scale / gcd(scale, d))
                    .checked_mul(d)
                    .ok_or_else(|| Error::invalid("window too large for harmonic weighting"))?;
            }
            Ok(scale)
        }
    }
}

impl CooccurrenceBuilder {
    pub fn new(vocab_size: usize, window: usize, weighting: Weighting) -> Result<Self> {
        if window == 0 {
            return Err(Error::invalid("window must be at least 1"));
        }
        if vocab_size == 0 {
            return Err(Error::EmptyVocabulary);
        }
        Ok(CooccurrenceBuilder {
            vocab_size,
            window,
            weighting,
            scale: weight_scale(window, weighting)?,
            acc: HashMap::new(),
        })
    }

    /// Counts one document. OOV tokens occupy positions but produce no pairs.
    pub fn add_document(&mut self, line: &str, vocab: &Vocabulary) -> Result<()> {
        let ids: Vec<Option<u32>> = line
            .to_lowercase()
            .split_whitespace()
            .map(|t| vocab.id(t))
            .collect();
        for (t, &focal) in ids.iter().enumerate() {
            let Some(j) = focal else { continue };
            let lo = t.saturating_sub(self.window);
            let hi = (t + self.window).min(ids.len().saturating_sub(1));
            for (t2, &context) in ids.iter().enumerate().take(hi + 1).skip(lo) {
                if t2 == t {
                    continue;
                }
                let Some(i) = context else { continue };
                let dist = t.abs_diff(t2) as u64;
                let num = match self.weighting {
                    Weighting::Flat => 1,
                    Weighting::Harmonic => self.scale / dist,
                };
                let slot = self.acc.entry((i, j)).or_insert(0);
                *slot = slot
                    .checked_add(num)
                    .ok_or_else(|| Error::numeric("cooccurrence accumulator overflow"))?;
            }
        }
        Ok(())
    }

    /// Folds another builder's counts into this one. Both builders must share
    /// vocabulary size, window, and weighting.
    pub fn merge(&mut self, other: CooccurrenceBuilder) -> Result<()> {
        if self.vocab_size != other.vocab_size
            || self.window != other.window
            || self.weighting != other.weighting
        {
            return Err(Error::invalid(
                "cannot merge builders with different vocabulary, window, or weighting",
            ));
        }
        for (key, num) in other.acc {
            let slot = self.acc.entry(key).or_insert(0);
            *slot = slot
                .checked_add(num)
                .ok_or_else(|| Error::numeric("cooccurrence accumulator overflow"))?;
        }
        Ok(())
    }

    pub fn finish(self) -> CooccurrenceStats {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.vocab_size];
        let mut keys: Vec<(u32, u32)> = self.acc.keys().copied().collect();
        keys.sort_unstable();
        let scale = self.scale as f64;
        for (i, j) in keys {
            let num = self.acc[&(i, j)];
            rows[i as usize].push((j, num as f64 / scale));
        }
        CooccurrenceStats::finalize(self.vocab_size, self.vocab_size, rows)
    }
}

/// Single-pass cooccurrence counting over a line-per-document corpus.
pub fn count_cooccurrences(
    corpus: impl BufRead,
    vocab: &Vocabulary,
    window: usize,
    weighting: Weighting,
) -> Result<CooccurrenceStats> {
    let mut builder = CooccurrenceBuilder::new(vocab.len(), window, weighting)?;
    for line in corpus.lines() {
        builder.add_document(&line?, vocab)?;
    }
    Ok(builder.finish())
}
