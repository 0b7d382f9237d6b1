//! Intrinsic evaluation: word-similarity correlation, analogy completion,
//! and nearest-neighbor queries.
//!
//! Two representation spaces matter throughout: vector-vector (both words
//! on the focal side) and vector-covector (the model's own bilinear score
//! `<i|j>`, which approximates PMI and so carries the trained association
//! structure unnormalized).

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trainer::ModelParams;

/// Additive smoothing in the 3CosMul denominator.
pub const COSMUL_EPSILON: f64 = 0.001;

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("cannot rank non-finite value {bad}")));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // Positions start..end (0-based) share the mean of their 1-based ranks.
        let avg = (start + end + 1) as f64 / 2.0;
        for &k in &idx[start..end] {
            out[k] = avg;
        }
        start = end;
    }
    Ok(out)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(pred: &[f64], gold: &[f64]) -> Result<f64> {
    if pred.len() != gold.len() {
        return Err(Error::invalid(format!(
            "sequence lengths differ: {} vs {}",
            pred.len(),
            gold.len()
        )));
    }
    if pred.len() < 2 {
        return Err(Error::UndefinedCorrelation(
            "fewer than two observations".into(),
        ));
    }
    let rp = average_ranks(pred)?;
    let rg = average_ranks(gold)?;
    let n = rp.len() as f64;
    let mean_p = rp.iter().sum::<f64>() / n;
    let mean_g = rg.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_p = 0.0;
    let mut var_g = 0.0;
    for (p, g) in rp.iter().zip(&rg) {
        let dp = p - mean_p;
        let dg = g - mean_g;
        cov += dp * dg;
        var_p += dp * dp;
        var_g += dg * dg;
    }
    if var_p == 0.0 || var_g == 0.0 {
        return Err(Error::UndefinedCorrelation("zero rank variance".into()));
    }
    Ok(cov / (var_p * var_g).sqrt())
}

fn cosine<F: Scalar>(a: ArrayView1<'_, F>, b: ArrayView1<'_, F>) -> f64 {
    let dot = a.dot(&b).as_f64();
    let na = a.dot(&a).as_f64().sqrt();
    let nb = b.dot(&b).as_f64().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// One gold-scored word pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityPair {
    pub word_a: String,
    pub word_b: String,
    pub score: f64,
}

/// Word-similarity dataset: unique unordered pairs with finite gold scores.
#[derive(Debug, Clone, Default)]
pub struct SimilarityDataset {
    pub pairs: Vec<SimilarityPair>,
}

impl SimilarityDataset {
    /// Parses `word1<TAB>word2<TAB>score` lines; `#` comments and blank
    /// lines are ignored and words are lowercased.
    pub fn parse(reader: impl BufRead, origin: &Path) -> Result<Self> {
        let fail = |line: usize, msg: String| Error::Format {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut pairs = Vec::new();
        let mut seen: HashSet<(String, String)> = HashSet::new();
        for (k, line) in reader.lines().enumerate() {
            let lineno = k + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(fail(
                    lineno,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            }
            let word_a = fields[0].trim().to_lowercase();
            let word_b = fields[1].trim().to_lowercase();
            if word_a.is_empty() || word_b.is_empty() {
                return Err(fail(lineno, "empty word".into()));
            }
            let score: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|e| fail(lineno, format!("bad score {:?}: {e}", fields[2])))?;
            if !score.is_finite() {
                return Err(fail(lineno, format!("score {score} is not finite")));
            }
            let key = if word_a <= word_b {
                (word_a.clone(), word_b.clone())
            } else {
                (word_b.clone(), word_a.clone())
            };
            if !seen.insert(key) {
                return Err(fail(lineno, format!("duplicate pair {word_a} / {word_b}")));
            }
            pairs.push(SimilarityPair { word_a, word_b, score });
        }
        Ok(SimilarityDataset { pairs })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(BufReader::new(File::open(path).map_err(|e| Error::file(path, e))?), path)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Which representations a similarity score compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimilarityMode {
    /// Cosine between the two words' vectors.
    #[default]
    VectorVector,
    /// Cosine between the first word's covector and the second's vector.
    VectorCovector,
}

impl SimilarityMode {
    pub fn name(&self) -> &'static str {
        match self {
            SimilarityMode::VectorVector => "vector-vector",
            SimilarityMode::VectorCovector => "vector-covector",
        }
    }
}

impl std::str::FromStr for SimilarityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vector-vector" => Ok(SimilarityMode::VectorVector),
            "vector-covector" => Ok(SimilarityMode::VectorCovector),
            other => Err(Error::invalid(format!(
                "unknown similarity mode {other:?} (expected vector-vector or vector-covector)"
            ))),
        }
    }
}

impl std::fmt::Display for SimilarityMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of a similarity evaluation over the covered pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    pub spearman: f64,
    pub covered: usize,
    pub total: usize,
}

impl SimilarityReport {
    pub fn coverage(&self) -> f64 {
        self.covered as f64 / self.total as f64
    }
}

/// Spearman correlation between gold scores and embedding cosines over the
/// pairs whose words are both in vocabulary.
pub fn eval_similarity<F: Scalar>(
    params: &ModelParams<F>,
    vocab: &Vocabulary,
    dataset: &SimilarityDataset,
    mode: SimilarityMode,
) -> Result<SimilarityReport> {
    if dataset.is_empty() {
        return Err(Error::invalid("similarity dataset has no pairs"));
    }
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for pair in &dataset.pairs {
        let (Some(a), Some(b)) = (vocab.id(&pair.word_a), vocab.id(&pair.word_b)) else {
            continue;
        };
        let score = match mode {
            SimilarityMode::VectorVector => {
                cosine(params.vector(a as usize), params.vector(b as usize))
            }
            SimilarityMode::VectorCovector => {
                cosine(params.covector(a as usize), params.vector(b as usize))
            }
        };
        gold.push(pair.score);
        pred.push(score);
    }
    if pred.is_empty() {
        return Err(Error::NoCoverage);
    }
    Ok(SimilarityReport {
        spearman: spearman(&pred, &gold)?,
        covered: pred.len(),
        total: dataset.len(),
    })
}

/// One analogy question: `a` is to `a_star` as `b` is to the answer.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyRow {
    pub a: String,
    pub a_star: String,
    pub b: String,
    pub b_star: String,
}

#[derive(Debug, Clone, Default)]
pub struct AnalogySection {
    pub name: String,
    pub rows: Vec<AnalogyRow>,
}

/// Analogy questions grouped into named sections.
#[derive(Debug, Clone, Default)]
pub struct AnalogyDataset {
    pub sections: Vec<AnalogySection>,
}

impl AnalogyDataset {
    /// Parses the Google analogy text format: `: section-name` lines start
    /// sections, data lines hold four space-separated words. Rows before
    /// any header land in a section named `default`.
    pub fn parse(reader: impl BufRead, origin: &Path) -> Result<Self> {
        let fail = |line: usize, msg: String| Error::Format {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut sections: Vec<AnalogySection> = Vec::new();
        for (k, line) in reader.lines().enumerate() {
            let lineno = k + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix(':') {
                let name = name.trim();
                if name.is_empty() {
                    return Err(fail(lineno, "section header without a name".into()));
                }
                sections.push(AnalogySection {
                    name: name.to_string(),
                    rows: Vec::new(),
                });
                continue;
            }
            let words: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
            if words.len() != 4 {
                return Err(fail(
                    lineno,
                    format!("expected 4 words, found {}", words.len()),
                ));
            }
            for x in 0..4 {
                for y in (x + 1)..4 {
                    if words[x] == words[y] {
                        return Err(fail(
                            lineno,
                            format!("word {:?} repeats within the row", words[x]),
                        ));
                    }
                }
            }
            if sections.is_empty() {
                sections.push(AnalogySection {
                    name: "default".into(),
                    rows: Vec::new(),
                });
            }
            let mut words = words.into_iter();
            sections.last_mut().unwrap().rows.push(AnalogyRow {
                a: words.next().unwrap(),
                a_star: words.next().unwrap(),
                b: words.next().unwrap(),
                b_star: words.next().unwrap(),
            });
        }
        Ok(AnalogyDataset { sections })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(BufReader::new(File::open(path).map_err(|e| Error::file(path, e))?), path)
    }

    pub fn len(&self) -> usize {
        self.sections.iter().map(|s| s.rows.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Scoring rule for analogy completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnalogyRule {
    /// `cos(x, a*) - cos(x, a) + cos(x, b)`
    CosAdd,
    /// `cos'(x, a*) cos'(x, b) / (cos'(x, a) + eps)` with `cos' = (cos+1)/2`
    #[default]
    CosMul,
}

impl AnalogyRule {
    pub fn name(&self) -> &'static str {
        match self {
            AnalogyRule::CosAdd => "3cosadd",
            AnalogyRule::CosMul => "3cosmul",
        }
    }
}

impl std::str::FromStr for AnalogyRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "3cosadd" => Ok(AnalogyRule::CosAdd),
            "3cosmul" => Ok(AnalogyRule::CosMul),
            other => Err(Error::invalid(format!(
                "unknown analogy rule {other:?} (expected 3cosadd or 3cosmul)"
            ))),
        }
    }
}

impl std::fmt::Display for AnalogyRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Unit-normalized focal vectors as f64 columns; zero vectors stay zero.
fn normalized_vectors<F: Scalar>(params: &ModelParams<F>) -> Array2<f64> {
    let mut mat = params.v.mapv(|x| x.as_f64());
    for mut col in mat.columns_mut() {
        let norm = col.dot(&col).sqrt();
        if norm > 0.0 {
            col.mapv_inplace(|x| x / norm);
        }
    }
    mat
}

fn solve_with(
    normed: &Array2<f64>,
    a: u32,
    a_star: u32,
    b: u32,
    rule: AnalogyRule,
    exclude: &[u32],
) -> Result<Vec<(u32, f64)>> {
    let cos_a = normed.t().dot(&normed.column(a as usize));
    let cos_a_star = normed.t().dot(&normed.column(a_star as usize));
    let cos_b = normed.t().dot(&normed.column(b as usize));
    let excluded: HashSet<u32> = exclude.iter().copied().collect();
    let mut ranked: Vec<(u32, f64)> = Vec::with_capacity(normed.ncols());
    for j in 0..normed.ncols() as u32 {
        if excluded.contains(&j) {
            continue;
        }
        let score = match rule {
            AnalogyRule::CosAdd => {
                cos_a_star[j as usize] - cos_a[j as usize] + cos_b[j as usize]
            }
            AnalogyRule::CosMul => {
                let shift = |c: f64| (c + 1.0) / 2.0;
                shift(cos_a_star[j as usize]) * shift(cos_b[j as usize])
                    / (shift(cos_a[j as usize]) + COSMUL_EPSILON)
            }
        };
        ranked.push((j, score));
    }
    if ranked.is_empty() {
        return Err(Error::NoCoverage);
    }
    ranked.sort_by(|(i, x), (j, y)| {
        y.partial_cmp(x)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(j))
    });
    Ok(ranked)
}

/// Candidates for "`a` is to `a_star` as `b` is to ?", best first, ids in
/// `exclude` removed, ties broken toward the lower id.
pub fn solve_analogy<F: Scalar>(
    params: &ModelParams<F>,
    a: u32,
    a_star: u32,
    b: u32,
    rule: AnalogyRule,
    exclude: &[u32],
) -> Result<Vec<(u32, f64)>> {
    let n = params.n_foc() as u32;
    for &id in [a, a_star, b].iter().chain(exclude) {
        if id >= n {
            return Err(Error::invalid(format!(
                "word id {id} out of range for vocabulary of {n}"
            )));
        }
    }
    solve_with(&normalized_vectors(params), a, a_star, b, rule, exclude)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogySectionResult {
    pub name: String,
    pub correct: usize,
    pub attempted: usize,
    pub skipped: usize,
}

/// Analogy accuracy per section plus overall accounting.
#[derive(Debug, Clone, Default)]
pub struct AnalogyReport {
    pub sections: Vec<AnalogySectionResult>,
}

impl AnalogyReport {
    pub fn correct(&self) -> usize {
        self.sections.iter().map(|s| s.correct).sum()
    }

    pub fn attempted(&self) -> usize {
        self.sections.iter().map(|s| s.attempted).sum()
    }

    pub fn skipped(&self) -> usize {
        self.sections.iter().map(|s| s.skipped).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.attempted() as f64
    }

    pub fn coverage(&self) -> f64 {
        let total = self.attempted() + self.skipped();
        self.attempted() as f64 / total as f64
    }
}

/// Top-1 analogy accuracy; rows with any out-of-vocabulary word are
/// skipped and counted.
pub fn eval_analogy<F: Scalar>(
    params: &ModelParams<F>,
    vocab: &Vocabulary,
    dataset: &AnalogyDataset,
    rule: AnalogyRule,
) -> Result<AnalogyReport> {
    if dataset.is_empty() {
        return Err(Error::invalid("analogy dataset has no rows"));
    }
    let normed = normalized_vectors(params);
    let mut report = AnalogyReport::default();
    for section in &dataset.sections {
        let mut result = AnalogySectionResult {
            name: section.name.clone(),
            correct: 0,
            attempted: 0,
            skipped: 0,
        };
        for row in &section.rows {
            let ids = [&row.a, &row.a_star, &row.b, &row.b_star].map(|w| vocab.id(w));
            let [Some(a), Some(a_star), Some(b), Some(b_star)] = ids else {
                result.skipped += 1;
                continue;
            };
            let ranked = solve_with(&normed, a, a_star, b, rule, &[a, a_star, b])?;
            if ranked[0].0 == b_star {
                result.correct += 1;
            }
            result.attempted += 1;
        }
        report.sections.push(result);
    }
    if report.attempted() == 0 {
        return Err(Error::NoCoverage);
    }
    Ok(report)
}

/// Representation space for neighbor queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborMode {
    /// Dot products between focal vectors; the query itself is excluded.
    #[default]
    VecVec,
    /// Bilinear scores `<i|query>`; the self pair is a meaningful
    /// association score, so it stays in.
    VecCovec,
}

impl NeighborMode {
    pub fn name(&self) -> &'static str {
        match self {
            NeighborMode::VecVec => "vec-vec",
            NeighborMode::VecCovec => "vec-covec",
        }
    }
}

impl std::str::FromStr for NeighborMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vec-vec" => Ok(NeighborMode::VecVec),
            "vec-covec" => Ok(NeighborMode::VecCovec),
            other => Err(Error::invalid(format!(
                "unknown neighbor mode {other:?} (expected vec-vec or vec-covec)"
            ))),
        }
    }
}

impl std::fmt::Display for NeighborMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Top-k words scored against the query, best first, ties toward the lower
/// id. Returns fewer than k when the vocabulary runs out.
pub fn nearest_neighbors<F: Scalar>(
    params: &ModelParams<F>,
    query: u32,
    k: usize,
    mode: NeighborMode,
) -> Result<Vec<(u32, f64)>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if (query as usize) >= params.n_foc() {
        return Err(Error::invalid(format!(
            "word id {query} out of range for vocabulary of {}",
            params.n_foc()
        )));
    }
    let q = params.v.column(query as usize);
    let scores: Array1<F> = match mode {
        NeighborMode::VecVec => params.v.t().dot(&q),
        NeighborMode::VecCovec => params.w.dot(&q),
    };
    let mut ranked: Vec<(u32, f64)> = Vec::with_capacity(scores.len());
    for (j, s) in scores.iter().enumerate() {
        if mode == NeighborMode::VecVec && j as u32 == query {
            continue;
        }
        let s = s.as_f64();
        if !s.is_finite() {
            return Err(Error::numeric(format!(
                "non-finite neighbor score for word id {j}"
            )));
        }
        ranked.push((j as u32, s));
    }
    ranked.sort_by(|(i, x), (j, y)| {
        y.partial_cmp(x)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(j))
    });
    ranked.truncate(k);
    Ok(ranked)
}
