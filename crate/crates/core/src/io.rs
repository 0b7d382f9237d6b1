//! Plain-text artifact files.
//!
//! * Vocabulary: one `token<TAB>frequency` per line; the line number is the
//!   word id.
//! * Cooccurrence: header `LRCOOC v1 <vocab_size> <nnz> <n_total>`, then one
//!   `i j value` line per stored pair. Marginals are recomputed on load.
//! * Embeddings: a directory holding the vocabulary, `vectors.txt` and
//!   `covectors.txt` (header `<count> <d>`, then `token x1 .. xd` lines),
//!   `biases.txt` when the model has biases, and `meta.txt` with `key=value`
//!   lines recording the training configuration.
//!
//! Floats are written with Rust's shortest round-trip formatting, so write
//! followed by read reproduces values bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::corpus::{CooccurrenceStats, Vocabulary};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trainer::ModelParams;

pub const COOC_HEADER_TAG: &str = "LRCOOC";
pub const COOC_FORMAT_VERSION: &str = "v1";

pub const VOCAB_FILE: &str = "vocab.txt";
pub const COOC_FILE: &str = "cooc.txt";
pub const VECTORS_FILE: &str = "vectors.txt";
pub const COVECTORS_FILE: &str = "covectors.txt";
pub const BIASES_FILE: &str = "biases.txt";
pub const META_FILE: &str = "meta.txt";

fn format_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

pub fn write_vocab(path: &Path, vocab: &Vocabulary) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::file(path, e))?);
    for (token, freq) in vocab.iter() {
        writeln!(out, "{token}\t{freq}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary> {
    let reader = BufReader::new(File::open(path).map_err(|e| Error::file(path, e))?);
    let mut tokens = Vec::new();
    let mut freqs = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        let Some((token, freq)) = line.split_once('\t') else {
            return Err(format_err(path, k + 1, "expected token<TAB>frequency"));
        };
        let freq: u64 = freq
            .trim()
            .parse()
            .map_err(|e| format_err(path, k + 1, format!("bad frequency {freq:?}: {e}")))?;
        tokens.push(token.to_string());
        freqs.push(freq);
    }
    Vocabulary::from_parts(tokens, freqs)
}

pub fn write_cooc(path: &Path, stats: &CooccurrenceStats) -> Result<()> {
    let (n_ctx, n_foc) = stats.shape();
    if n_ctx != n_foc {
        return Err(Error::invalid(
            "cooccurrence files require square statistics",
        ));
    }
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::file(path, e))?);
    writeln!(
        out,
        "{COOC_HEADER_TAG} {COOC_FORMAT_VERSION} {n_ctx} {} {}",
        stats.nnz(),
        stats.total()
    )?;
    for (i, j, value) in stats.iter() {
        writeln!(out, "{i} {j} {value}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_cooc(path: &Path) -> Result<CooccurrenceStats> {
    let mut lines = BufReader::new(File::open(path).map_err(|e| Error::file(path, e))?).lines();
    let header = lines
        .next()
        .ok_or_else(|| format_err(path, 1, "empty file"))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != COOC_HEADER_TAG {
        return Err(format_err(
            path,
            1,
            format!("expected header \"{COOC_HEADER_TAG} {COOC_FORMAT_VERSION} <vocab> <nnz> <n_total>\""),
        ));
    }
    if fields[1] != COOC_FORMAT_VERSION {
        return Err(format_err(
            path,
            1,
            format!("unsupported format version {:?}", fields[1]),
        ));
    }
    let vocab_size: usize = fields[2]
        .parse()
        .map_err(|e| format_err(path, 1, format!("bad vocabulary size: {e}")))?;
    let nnz: usize = fields[3]
        .parse()
        .map_err(|e| format_err(path, 1, format!("bad entry count: {e}")))?;
    let n_total: f64 = fields[4]
        .parse()
        .map_err(|e| format_err(path, 1, format!("bad total: {e}")))?;
    if !n_total.is_finite() || n_total < 0.0 {
        return Err(format_err(path, 1, format!("bad total {n_total}")));
    }
    let mut entries = Vec::with_capacity(nnz);
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(format_err(path, lineno, "expected \"i j value\""));
        }
        let i: u32 = f[0]
            .parse()
            .map_err(|e| format_err(path, lineno, format!("bad context id: {e}")))?;
        let j: u32 = f[1]
            .parse()
            .map_err(|e| format_err(path, lineno, format!("bad focal id: {e}")))?;
        if i as usize >= vocab_size || j as usize >= vocab_size {
            return Err(format_err(
                path,
                lineno,
                format!("pair ({i}, {j}) out of range for vocabulary of {vocab_size}"),
            ));
        }
        let value: f64 = f[2]
            .parse()
            .map_err(|e| format_err(path, lineno, format!("bad value: {e}")))?;
        if !value.is_finite() || value <= 0.0 {
            return Err(format_err(
                path,
                lineno,
                format!("cooccurrence value must be positive and finite, got {value}"),
            ));
        }
        entries.push(((i, j), value));
    }
    if entries.len() != nnz {
        return Err(format_err(
            path,
            1,
            format!("header declares {nnz} entries but file has {}", entries.len()),
        ));
    }
    let stats = CooccurrenceStats::from_entries(vocab_size, vocab_size, entries)?;
    if stats.nnz() != nnz {
        return Err(format_err(path, 1, "file contains duplicate pairs"));
    }
    let total = stats.total();
    if (total - n_total).abs() > 1e-6 * total.max(1.0) {
        return Err(format_err(
            path,
            1,
            format!("header total {n_total} does not match sum of entries {total}"),
        ));
    }
    Ok(stats)
}

fn write_embedding_file<F: Scalar>(
    path: &Path,
    vocab: &Vocabulary,
    d: usize,
    mut row: impl FnMut(usize, &mut Vec<F>),
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::file(path, e))?);
    writeln!(out, "{} {d}", vocab.len())?;
    let mut buf = Vec::with_capacity(d);
    for id in 0..vocab.len() {
        buf.clear();
        row(id, &mut buf);
        write!(out, "{}", vocab.token(id as u32))?;
        for x in &buf {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a checkpoint directory: vocabulary, vectors, covectors, biases
/// (when present), and metadata.
pub fn write_embeddings<F: Scalar>(
    dir: &Path,
    vocab: &Vocabulary,
    params: &ModelParams<F>,
    meta: &[(String, String)],
) -> Result<()> {
    if params.n_ctx() != vocab.len() || params.n_foc() != vocab.len() {
        return Err(Error::invalid(format!(
            "parameters cover {} x {} words but the vocabulary has {}",
            params.n_ctx(),
            params.n_foc(),
            vocab.len()
        )));
    }
    std::fs::create_dir_all(dir)?;
    write_vocab(&dir.join(VOCAB_FILE), vocab)?;
    let d = params.d();
    write_embedding_file(&dir.join(VECTORS_FILE), vocab, d, |id, buf| {
        buf.extend(params.vector(id).iter().copied());
    })?;
    write_embedding_file(&dir.join(COVECTORS_FILE), vocab, d, |id, buf| {
        buf.extend(params.covector(id).iter().copied());
    })?;
    if let Some((b_ctx, b_foc)) = params.biases() {
        write_embedding_file(&dir.join(BIASES_FILE), vocab, 2, |id, buf| {
            buf.push(b_ctx[id]);
            buf.push(b_foc[id]);
        })?;
    }
    write_meta(&dir.join(META_FILE), meta)?;
    Ok(())
}

fn read_embedding_file<F: Scalar>(
    path: &Path,
    vocab: &Vocabulary,
) -> Result<(usize, Vec<Vec<F>>)> {
    let mut lines = BufReader::new(File::open(path).map_err(|e| Error::file(path, e))?).lines();
    let header = lines
        .next()
        .ok_or_else(|| format_err(path, 1, "empty file"))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(format_err(path, 1, "expected header \"<count> <d>\""));
    }
    let count: usize = fields[0]
        .parse()
        .map_err(|e| format_err(path, 1, format!("bad word count: {e}")))?;
    let d: usize = fields[1]
        .parse()
        .map_err(|e| format_err(path, 1, format!("bad dimension: {e}")))?;
    if d == 0 {
        return Err(format_err(path, 1, "dimension must be at least 1"));
    }
    if count != vocab.len() {
        return Err(format_err(
            path,
            1,
            format!("file has {count} words but the vocabulary has {}", vocab.len()),
        ));
    }
    let mut rows = Vec::with_capacity(count);
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let id = rows.len();
        if id >= count {
            return Err(format_err(path, lineno, "more rows than the header declares"));
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap_or_default();
        if token != vocab.token(id as u32) {
            return Err(format_err(
                path,
                lineno,
                format!(
                    "token {token:?} does not match vocabulary entry {:?}",
                    vocab.token(id as u32)
                ),
            ));
        }
        let mut row = Vec::with_capacity(d);
        for field in fields {
            let x: f64 = field
                .parse()
                .map_err(|e| format_err(path, lineno, format!("bad value {field:?}: {e}")))?;
            row.push(F::from_f64(x));
        }
        if row.len() != d {
            return Err(format_err(
                path,
                lineno,
                format!("expected {d} values, found {}", row.len()),
            ));
        }
        rows.push(row);
    }
    if rows.len() != count {
        return Err(format_err(
            path,
            1,
            format!("header declares {count} words but file has {}", rows.len()),
        ));
    }
    Ok((d, rows))
}

/// Loads a checkpoint directory written by [`write_embeddings`].
pub fn read_embeddings<F: Scalar>(dir: &Path) -> Result<(Vocabulary, ModelParams<F>)> {
    let vocab = read_vocab(&dir.join(VOCAB_FILE))?;
    let vectors_path = dir.join(VECTORS_FILE);
    let (d, vec_rows) = read_embedding_file::<F>(&vectors_path, &vocab)?;
    let covectors_path = dir.join(COVECTORS_FILE);
    let (d_co, co_rows) = read_embedding_file::<F>(&covectors_path, &vocab)?;
    if d_co != d {
        return Err(format_err(
            &covectors_path,
            1,
            format!("covector dimension {d_co} does not match vector dimension {d}"),
        ));
    }
    let n = vocab.len();
    let mut v = Array2::zeros((d, n));
    for (j, row) in vec_rows.iter().enumerate() {
        for (k, &x) in row.iter().enumerate() {
            v[(k, j)] = x;
        }
    }
    let mut w = Array2::zeros((n, d));
    for (i, row) in co_rows.iter().enumerate() {
        for (k, &x) in row.iter().enumerate() {
            w[(i, k)] = x;
        }
    }
    let biases_path = dir.join(BIASES_FILE);
    let (b_ctx, b_foc) = if biases_path.exists() {
        let (db, rows) = read_embedding_file::<F>(&biases_path, &vocab)?;
        if db != 2 {
            return Err(format_err(
                &biases_path,
                1,
                format!("bias files hold 2 values per word, found {db}"),
            ));
        }
        let b_ctx = Array1::from_iter(rows.iter().map(|r| r[0]));
        let b_foc = Array1::from_iter(rows.iter().map(|r| r[1]));
        (Some(b_ctx), Some(b_foc))
    } else {
        (None, None)
    };
    Ok((vocab, ModelParams { w, v, b_ctx, b_foc }))
}

pub fn write_meta(path: &Path, meta: &[(String, String)]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::file(path, e))?);
    for (key, value) in meta {
        if key.is_empty() || key.contains(['=', '\n']) || value.contains('\n') {
            return Err(Error::invalid(format!(
                "metadata key/value {key:?} = {value:?} cannot be serialized"
            )));
        }
        writeln!(out, "{key}={value}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<Vec<(String, String)>> {
    let reader = BufReader::new(File::open(path).map_err(|e| Error::file(path, e))?);
    let mut meta = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format_err(path, k + 1, "expected key=value"));
        };
        meta.push((key.to_string(), value.to_string()));
    }
    Ok(meta)
}

/// Cap on reported findings so a corrupted file cannot flood the report.
const MAX_FINDINGS: usize = 50;

/// Outcome of [`validate_artifacts`]: human-readable findings, empty when
/// everything checks out.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    findings: Vec<String>,
    truncated: bool,
}

impl ValidationReport {
    fn push(&mut self, finding: String) {
        if self.findings.len() < MAX_FINDINGS {
            self.findings.push(finding);
        } else {
            self.truncated = true;
        }
    }

    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn findings(&self) -> &[String] {
        &self.findings
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }
}

/// Checks every artifact in a directory: file formats, header arithmetic,
/// cross-file consistency, and parameter finiteness. Problems become report
/// findings rather than errors.
pub fn validate_artifacts(dir: &Path) -> Result<ValidationReport> {
    if !dir.is_dir() {
        return Err(Error::invalid(format!(
            "{} is not a directory",
            dir.display()
        )));
    }
    let mut report = ValidationReport::default();
    let vocab_path = dir.join(VOCAB_FILE);
    let vocab = if vocab_path.exists() {
        match read_vocab(&vocab_path) {
            Ok(v) => Some(v),
            Err(e) => {
                report.push(format!("{VOCAB_FILE}: {e}"));
                None
            }
        }
    } else {
        None
    };

    let cooc_path = dir.join(COOC_FILE);
    if cooc_path.exists() {
        if vocab.is_none() {
            report.push(format!("{COOC_FILE} present without a readable {VOCAB_FILE}"));
        }
        match read_cooc(&cooc_path) {
            Ok(stats) => {
                if let Some(v) = &vocab {
                    if stats.shape().0 != v.len() {
                        report.push(format!(
                            "{COOC_FILE}: vocabulary size {} does not match {VOCAB_FILE} ({})",
                            stats.shape().0,
                            v.len()
                        ));
                    }
                }
                let ctx_sum: f64 = stats.ctx_marginals().iter().sum();
                let foc_sum: f64 = stats.foc_marginals().iter().sum();
                for (name, sum) in [("context", ctx_sum), ("focal", foc_sum)] {
                    if (sum - stats.total()).abs() > 1e-9 * stats.total().max(1.0) {
                        report.push(format!(
                            "{COOC_FILE}: {name} marginals sum to {sum}, total is {}",
                            stats.total()
                        ));
                    }
                }
            }
            Err(e) => report.push(format!("{COOC_FILE}: {e}")),
        }
    }

    let vectors_path = dir.join(VECTORS_FILE);
    let covectors_path = dir.join(COVECTORS_FILE);
    let has_embeddings = vectors_path.exists() || covectors_path.exists();
    if has_embeddings {
        if !vectors_path.exists() {
            report.push(format!("{COVECTORS_FILE} present without {VECTORS_FILE}"));
        }
        if !covectors_path.exists() {
            report.push(format!("{VECTORS_FILE} present without {COVECTORS_FILE}"));
        }
    }
    if vectors_path.exists() && covectors_path.exists() {
        match read_embeddings::<f64>(dir) {
            Ok((vocab, params)) => {
                scan_finiteness(&mut report, VECTORS_FILE, &vocab, |j| {
                    params.vector(j).to_vec()
                });
                scan_finiteness(&mut report, COVECTORS_FILE, &vocab, |i| {
                    params.covector(i).to_vec()
                });
                if let Some((b_ctx, b_foc)) = params.biases() {
                    scan_finiteness(&mut report, BIASES_FILE, &vocab, |i| {
                        vec![b_ctx[i], b_foc[i]]
                    });
                }
                let meta_path = dir.join(META_FILE);
                if meta_path.exists() {
                    match read_meta(&meta_path) {
                        Ok(meta) => {
                            if let Some((_, v)) = meta.iter().find(|(k, _)| k == "d") {
                                match v.parse::<usize>() {
                                    Ok(d) if d == params.d() => {}
                                    Ok(d) => report.push(format!(
                                        "{META_FILE}: d={d} does not match embedding dimension {}",
                                        params.d()
                                    )),
                                    Err(_) => report.push(format!(
                                        "{META_FILE}: d={v:?} is not a number"
                                    )),
                                }
                            } else {
                                report.push(format!("{META_FILE}: missing key d"));
                            }
                        }
                        Err(e) => report.push(format!("{META_FILE}: {e}")),
                    }
                } else {
                    report.push(format!("{META_FILE} is missing"));
                }
            }
            Err(e) => report.push(format!("embeddings: {e}")),
        }
    } else if dir.join(BIASES_FILE).exists() {
        report.push(format!("{BIASES_FILE} present without embedding files"));
    }

    if vocab.is_none() && !cooc_path.exists() && !has_embeddings {
        report.push("no artifacts found".into());
    }
    Ok(report)
}

fn scan_finiteness(
    report: &mut ValidationReport,
    file: &str,
    vocab: &Vocabulary,
    values: impl Fn(usize) -> Vec<f64>,
) {
    for id in 0..vocab.len() {
        for (k, x) in values(id).into_iter().enumerate() {
            if !x.is_finite() {
                report.push(format!(
                    "{file}: non-finite value for {:?} at dimension {k}",
                    vocab.token(id as u32)
                ));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{count_cooccurrences, Weighting};
    use crate::losses::LossModel;
    use crate::trainer::{init_params, TrainConfig};
    use std::io::Read;

    fn sample_vocab() -> Vocabulary {
        Vocabulary::from_parts(
            vec!["the".into(), "cat".into(), "sat".into()],
            vec![30, 12, 7],
        )
        .unwrap()
    }

    fn sample_stats() -> CooccurrenceStats {
        let text = "the cat sat the cat the\nsat the sat\n";
        count_cooccurrences(text.as_bytes(), &sample_vocab(), 2, Weighting::Harmonic).unwrap()
    }

    #[test]
    fn vocab_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        let vocab = sample_vocab();
        write_vocab(&path, &vocab).unwrap();
        let back = read_vocab(&path).unwrap();
        assert_eq!(back.len(), vocab.len());
        for id in 0..vocab.len() as u32 {
            assert_eq!(back.token(id), vocab.token(id));
            assert_eq!(back.freq(id), vocab.freq(id));
        }
    }

    #[test]
    fn vocab_read_rejects_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        for bad in ["notab\n", "word\tNaN\n", "a\t1\na\t2\n"] {
            std::fs::write(&path, bad).unwrap();
            assert!(read_vocab(&path).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn cooc_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cooc.txt");
        let stats = sample_stats();
        write_cooc(&path, &stats).unwrap();
        let back = read_cooc(&path).unwrap();
        assert_eq!(back.shape(), stats.shape());
        assert_eq!(back.nnz(), stats.nnz());
        assert_eq!(back.total(), stats.total());
        for (i, j, value) in stats.iter() {
            assert_eq!(back.count(i, j), value, "pair ({i}, {j})");
        }
        for id in 0..3u32 {
            assert_eq!(back.ctx_marginal(id), stats.ctx_marginal(id));
            assert_eq!(back.foc_marginal(id), stats.foc_marginal(id));
        }
    }

    #[test]
    fn cooc_read_rejects_corrupted_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cooc.txt");
        let cases = [
            "WRONG v1 2 1 4\n0 0 4\n",
            "LRCOOC v2 2 1 4\n0 0 4\n",
            "LRCOOC v1 2 2 4\n0 0 4\n",
            "LRCOOC v1 2 1 5\n0 0 4\n",
            "LRCOOC v1 2 1 4\n0 5 4\n",
            "LRCOOC v1 2 1 4\n0 0 -4\n",
            "LRCOOC v1 2 1 4\n0 0\n",
            "LRCOOC v1 2 2 4\n0 0 2\n0 0 2\n",
        ];
        for bad in cases {
            std::fs::write(&path, bad).unwrap();
            let got = read_cooc(&path);
            assert!(matches!(got, Err(Error::Format { .. })), "{bad:?}: {got:?}");
        }
    }

    #[test]
    fn embeddings_round_trip_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let stats = sample_stats();
        let vocab = sample_vocab();
        let model = LossModel::Glove { x_max: 100.0, alpha: 0.75 };
        let cfg = TrainConfig { d: 4, seed: 3, ..TrainConfig::default() };
        let params: ModelParams<f64> = init_params(&model, &stats, &cfg).unwrap();
        let meta = vec![
            ("model".to_string(), "glove".to_string()),
            ("d".to_string(), "4".to_string()),
        ];
        write_embeddings(dir.path(), &vocab, &params, &meta).unwrap();
        let (back_vocab, back) = read_embeddings::<f64>(dir.path()).unwrap();
        assert_eq!(back_vocab.len(), 3);
        assert_eq!(back.w, params.w);
        assert_eq!(back.v, params.v);
        assert_eq!(back.b_ctx, params.b_ctx);
        assert_eq!(back.b_foc, params.b_foc);
        assert_eq!(read_meta(&dir.path().join(META_FILE)).unwrap(), meta);
    }

    #[test]
    fn f32_embeddings_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let stats = sample_stats();
        let vocab = sample_vocab();
        let cfg = TrainConfig { d: 3, seed: 9, ..TrainConfig::default() };
        let params: ModelParams<f32> = init_params(&LossModel::Swivel, &stats, &cfg).unwrap();
        write_embeddings(dir.path(), &vocab, &params, &[]).unwrap();
        let (_, back) = read_embeddings::<f32>(dir.path()).unwrap();
        assert_eq!(back.w, params.w);
        assert_eq!(back.v, params.v);
        assert!(back.b_ctx.is_none());
    }

    #[test]
    fn embedding_reader_enforces_structure() {
        let dir = tempfile::tempdir().unwrap();
        let stats = sample_stats();
        let vocab = sample_vocab();
        let cfg = TrainConfig { d: 2, ..TrainConfig::default() };
        let params: ModelParams<f64> = init_params(&LossModel::Swivel, &stats, &cfg).unwrap();
        write_embeddings(dir.path(), &vocab, &params, &[]).unwrap();

        // Token out of order.
        let path = dir.path().join(VECTORS_FILE);
        let mut text = String::new();
        File::open(&path).unwrap().read_to_string(&mut text).unwrap();
        std::fs::write(&path, text.replace("cat ", "dog ")).unwrap();
        assert!(read_embeddings::<f64>(dir.path()).is_err());

        // Dimension mismatch between vectors and covectors.
        write_embeddings(dir.path(), &vocab, &params, &[]).unwrap();
        let co = dir.path().join(COVECTORS_FILE);
        std::fs::write(&co, "3 1\nthe 1\ncat 2\nsat 3\n").unwrap();
        assert!(read_embeddings::<f64>(dir.path()).is_err());

        // Wrong value count on a row.
        write_embeddings(dir.path(), &vocab, &params, &[]).unwrap();
        std::fs::write(&path, "3 2\nthe 1 2\ncat 3\nsat 5 6\n").unwrap();
        assert!(read_embeddings::<f64>(dir.path()).is_err());
    }

    #[test]
    fn meta_rejects_unserializable_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(META_FILE);
        let bad = vec![("a=b".to_string(), "1".to_string())];
        assert!(write_meta(&path, &bad).is_err());
        std::fs::write(&path, "no-separator\n").unwrap();
        assert!(read_meta(&path).is_err());
    }

    #[test]
    fn validator_passes_clean_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = sample_vocab();
        let stats = sample_stats();
        write_vocab(&dir.path().join(VOCAB_FILE), &vocab).unwrap();
        write_cooc(&dir.path().join(COOC_FILE), &stats).unwrap();
        let cfg = TrainConfig { d: 2, ..TrainConfig::default() };
        let params: ModelParams<f64> = init_params(&LossModel::Swivel, &stats, &cfg).unwrap();
        write_embeddings(
            dir.path(),
            &vocab,
            &params,
            &[("d".to_string(), "2".to_string())],
        )
        .unwrap();
        let report = validate_artifacts(dir.path()).unwrap();
        assert!(report.is_clean(), "{:?}", report.findings());
    }

    #[test]
    fn validator_reports_planted_faults() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = sample_vocab();
        let stats = sample_stats();
        write_vocab(&dir.path().join(VOCAB_FILE), &vocab).unwrap();
        write_cooc(&dir.path().join(COOC_FILE), &stats).unwrap();

        // Bump the header's n_total by one.
        let cooc_path = dir.path().join(COOC_FILE);
        let mut text = String::new();
        File::open(&cooc_path).unwrap().read_to_string(&mut text).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut header: Vec<String> = lines[0].split_whitespace().map(String::from).collect();
        header[4] = format!("{}", header[4].parse::<f64>().unwrap() + 1.0);
        lines[0] = header.join(" ");
        std::fs::write(&cooc_path, lines.join("\n")).unwrap();

        let report = validate_artifacts(dir.path()).unwrap();
        assert_eq!(report.findings().len(), 1);
        assert!(report.findings()[0].contains("total"), "{:?}", report.findings());
    }

    #[test]
    fn validator_reports_nan_with_token_and_dimension() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = sample_vocab();
        let stats = sample_stats();
        let cfg = TrainConfig { d: 2, ..TrainConfig::default() };
        let params: ModelParams<f64> = init_params(&LossModel::Swivel, &stats, &cfg).unwrap();
        write_embeddings(
            dir.path(),
            &vocab,
            &params,
            &[("d".to_string(), "2".to_string())],
        )
        .unwrap();
        let path = dir.path().join(VECTORS_FILE);
        let mut text = String::new();
        File::open(&path).unwrap().read_to_string(&mut text).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        // Replace the second value of "cat" (id 1) with NaN.
        let mut fields: Vec<String> = lines[2].split_whitespace().map(String::from).collect();
        fields[2] = "NaN".into();
        lines[2] = fields.join(" ");
        std::fs::write(&path, lines.join("\n")).unwrap();

        let report = validate_artifacts(dir.path()).unwrap();
        assert!(!report.is_clean());
        assert!(
            report.findings().iter().any(|f| f.contains("cat") && f.contains("dimension 1")),
            "{:?}",
            report.findings()
        );
    }

    #[test]
    fn validator_reports_meta_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = sample_vocab();
        let stats = sample_stats();
        let cfg = TrainConfig { d: 2, ..TrainConfig::default() };
        let params: ModelParams<f64> = init_params(&LossModel::Swivel, &stats, &cfg).unwrap();
        write_embeddings(
            dir.path(),
            &vocab,
            &params,
            &[("d".to_string(), "7".to_string())],
        )
        .unwrap();
        let report = validate_artifacts(dir.path()).unwrap();
        assert!(
            report.findings().iter().any(|f| f.contains("d=7")),
            "{:?}",
            report.findings()
        );
    }

    #[test]
    fn validator_flags_empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let report = validate_artifacts(dir.path()).unwrap();
        assert_eq!(report.findings(), ["no artifacts found"]);
        assert!(validate_artifacts(&dir.path().join("missing")).is_err());
    }
}
