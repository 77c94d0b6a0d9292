use crate::run::Failure;
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use tomoforge_core::harness::{ExperimentConfig, KEntangledRow, ShadowRow, TomographyRow, RNG_FAMILY};

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub trait CsvRecord {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

impl CsvRecord for TomographyRow {
    const HEADER: &'static [&'static str] =
        &["trial", "n", "d", "r", "algorithm", "fidelity", "trace_distance", "lambda", "seed"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.n.to_string(),
            self.d.to_string(),
            self.r.to_string(),
            self.algorithm.clone(),
            fmt_float(self.fidelity),
            fmt_float(self.trace_distance),
            self.lambda.clone().unwrap_or_default(),
            self.seed.to_string(),
        ]
    }
}

impl CsvRecord for KEntangledRow {
    const HEADER: &'static [&'static str] =
        &["trial", "n_total", "k", "batches", "d", "frobenius_sq_error", "fidelity", "trace_distance", "seed"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.n_total.to_string(),
            self.k.to_string(),
            self.batches.to_string(),
            self.d.to_string(),
            fmt_float(self.frobenius_sq_error),
            fmt_float(self.fidelity),
            fmt_float(self.trace_distance),
            self.seed.to_string(),
        ]
    }
}

/// A shadows row tagged with its harness run.
pub struct ShadowRecord {
    pub trial: u64,
    pub row: ShadowRow,
}

impl CsvRecord for ShadowRecord {
    const HEADER: &'static [&'static str] = &["trial", "observable_id", "true_value", "estimate", "abs_error"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.row.observable_id.clone(),
            fmt_float(self.row.true_value),
            fmt_float(self.row.estimate),
            fmt_float(self.row.abs_error),
        ]
    }
}

fn header_comment(cfg: &ExperimentConfig) -> String {
    format!("# tomoforge config_hash={} rng={}\r\n", cfg.hash(), RNG_FAMILY)
}

pub fn csv_bytes<T: CsvRecord>(cfg: &ExperimentConfig, rows: &[T]) -> Result<Vec<u8>, Failure> {
    let mut buf = header_comment(cfg).into_bytes();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(&mut buf);
        w.write_record(T::HEADER).map_err(io_failure)?;
        for row in rows {
            w.write_record(row.fields()).map_err(io_failure)?;
        }
        w.flush().map_err(io_failure)?;
    }
    Ok(buf)
}

#[derive(Serialize)]
struct JsonEnvelope<'a, T: Serialize> {
    config_hash: String,
    rng: &'static str,
    config: &'a ExperimentConfig,
    report: &'a T,
}

pub fn json_bytes<T: Serialize>(cfg: &ExperimentConfig, report: &T) -> Result<Vec<u8>, Failure> {
    let env = JsonEnvelope { config_hash: cfg.hash(), rng: RNG_FAMILY, config: cfg, report };
    let mut bytes = serde_json::to_vec_pretty(&env).map_err(|e| Failure::Validation(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(format!("write failed: {e}"))
}

/// Writes through a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_failure)?;
    tmp.write_all(bytes).map_err(io_failure)?;
    tmp.persist(path).map_err(io_failure)?;
    Ok(())
}
