//! The on-disk coordination protocol.
//!
//! Four file kinds live in the shared work directory, named with the bare
//! decimal rank: `fileworker<rank>.spec` (work assignment, written by the
//! master), `filelock<rank>` (zero-byte; created by the master before launch,
//! deleted by the worker once its result is durable), `out<rank>` (the
//! worker's result), and `fail<rank>` (a failure diagnostic). Each file has
//! exactly one writer, so no file is ever written concurrently.
//!
//! All formats are line-based text. Doubles are serialized in shortest
//! round-trip decimal form, so read-back is bitwise identical; NaN is written
//! as `nan` (read back as the canonical quiet NaN). Result files are written
//! to a temporary name and renamed into place, which keeps the invariant
//! that a missing lock file with no failure marker implies a complete result
//! file.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::expr::{self, ExprError};

/// Version number written into spec files.
pub const SPEC_FORMAT_VERSION: u32 = 1;

/// Magic first line of result files.
pub const RESULT_HEADER: &str = "# spmdresult v1";

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed spec file {path}: {reason}")]
    MalformedSpec { path: PathBuf, reason: String },
    #[error("malformed result file {path}: {reason}")]
    MalformedResult { path: PathBuf, reason: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl ProtocolError {
    fn io(path: &Path, source: io::Error) -> ProtocolError {
        ProtocolError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Formats a double in shortest round-trip decimal form (`nan` for NaN).
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

/// Inverse of [`format_f64`].
pub fn parse_f64(text: &str) -> Option<f64> {
    text.parse().ok()
}

/// One worker's assignment: which grid indices to evaluate, with which step
/// and expression, and whether to persist the computed values.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerSpec {
    pub rank: u32,
    pub start_index: u64,
    pub end_index: u64,
    pub step: f64,
    /// Single-line expression text; must parse.
    pub expression: String,
    pub store_values: bool,
    /// Directory holding all coordination files for this job.
    pub workdir: PathBuf,
}

/// One worker's persisted output.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerResult {
    pub rank: u32,
    /// Thread CPU seconds the worker spent in its evaluation loop.
    pub cpu_seconds: f64,
    pub nan_count: u64,
    /// Number of points evaluated; reported even when `values` is empty.
    pub value_count: u64,
    /// Computed values, empty when the job ran without value storage.
    pub values: Vec<f64>,
}

pub fn spec_path(workdir: &Path, rank: u32) -> PathBuf {
    workdir.join(format!("fileworker{rank}.spec"))
}

pub fn lock_path(workdir: &Path, rank: u32) -> PathBuf {
    workdir.join(format!("filelock{rank}"))
}

pub fn result_path(workdir: &Path, rank: u32) -> PathBuf {
    workdir.join(format!("out{rank}"))
}

pub fn failure_path(workdir: &Path, rank: u32) -> PathBuf {
    workdir.join(format!("fail{rank}"))
}

/// Writes `<workdir>/fileworker<rank>.spec` and returns its path.
pub fn write_worker_spec(spec: &WorkerSpec) -> Result<PathBuf, ProtocolError> {
    let path = spec_path(&spec.workdir, spec.rank);
    if spec.expression.contains('\n') || spec.expression.contains('\r') {
        return Err(ProtocolError::MalformedSpec {
            path,
            reason: "expression must be a single line".into(),
        });
    }
    if !(spec.step.is_finite() && spec.step > 0.0) {
        return Err(ProtocolError::MalformedSpec {
            path,
            reason: format!("step must be positive and finite, got {}", spec.step),
        });
    }
    if spec.start_index > spec.end_index {
        return Err(ProtocolError::MalformedSpec {
            path,
            reason: format!(
                "start_index {} exceeds end_index {}",
                spec.start_index, spec.end_index
            ),
        });
    }
    let mut text = String::new();
    let _ = writeln!(text, "format_version={SPEC_FORMAT_VERSION}");
    let _ = writeln!(text, "rank={}", spec.rank);
    let _ = writeln!(text, "start_index={}", spec.start_index);
    let _ = writeln!(text, "end_index={}", spec.end_index);
    let _ = writeln!(text, "step={}", format_f64(spec.step));
    let _ = writeln!(text, "expression={}", spec.expression);
    let _ = writeln!(text, "store_values={}", spec.store_values);
    fs::write(&path, text).map_err(|e| ProtocolError::io(&path, e))?;
    Ok(path)
}

/// Reads a spec file back; the work directory is the file's parent.
pub fn read_worker_spec(path: &Path) -> Result<WorkerSpec, ProtocolError> {
    let malformed = |reason: String| ProtocolError::MalformedSpec {
        path: path.to_path_buf(),
        reason,
    };
    let text = fs::read_to_string(path).map_err(|e| ProtocolError::io(path, e))?;

    let keys = [
        "format_version",
        "rank",
        "start_index",
        "end_index",
        "step",
        "expression",
        "store_values",
    ];
    let mut fields: Vec<Option<&str>> = vec![None; keys.len()];
    for line in text.lines() {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| malformed(format!("line without '=': '{line}'")))?;
        let slot = keys
            .iter()
            .position(|k| *k == key)
            .ok_or_else(|| malformed(format!("unexpected key '{key}'")))?;
        if fields[slot].replace(value).is_some() {
            return Err(malformed(format!("duplicate key '{key}'")));
        }
    }
    let field = |name: &str| -> Result<&str, ProtocolError> {
        let slot = keys.iter().position(|k| *k == name).unwrap();
        fields[slot].ok_or_else(|| malformed(format!("missing key '{name}'")))
    };

    let version: u32 = field("format_version")?
        .parse()
        .map_err(|_| malformed("bad format_version".into()))?;
    if version != SPEC_FORMAT_VERSION {
        return Err(malformed(format!("unsupported format_version {version}")));
    }
    let rank: u32 = field("rank")?
        .parse()
        .map_err(|_| malformed("bad rank".into()))?;
    let start_index: u64 = field("start_index")?
        .parse()
        .map_err(|_| malformed("bad start_index".into()))?;
    let end_index: u64 = field("end_index")?
        .parse()
        .map_err(|_| malformed("bad end_index".into()))?;
    if start_index > end_index {
        return Err(malformed(format!(
            "start_index {start_index} exceeds end_index {end_index}"
        )));
    }
    let step = parse_f64(field("step")?).ok_or_else(|| malformed("bad step".into()))?;
    if !(step.is_finite() && step > 0.0) {
        return Err(malformed(format!("step must be positive and finite, got {step}")));
    }
    let expression = field("expression")?.to_string();
    expr::parse(&expression)?;
    let store_values = match field("store_values")? {
        "true" => true,
        "false" => false,
        other => return Err(malformed(format!("bad store_values '{other}'"))),
    };

    Ok(WorkerSpec {
        rank,
        start_index,
        end_index,
        step,
        expression,
        store_values,
        workdir: path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf(),
    })
}

/// Creates the zero-byte lock file for `rank`. Done by the master before the
/// worker is launched, so a missing lock always means "finished", never
/// "not started yet".
pub fn create_lock(workdir: &Path, rank: u32) -> Result<PathBuf, ProtocolError> {
    let path = lock_path(workdir, rank);
    fs::File::create(&path).map_err(|e| ProtocolError::io(&path, e))?;
    Ok(path)
}

/// Whether the lock file for `rank` currently exists. A pure existence probe;
/// the file is never opened or held.
pub fn lock_exists(workdir: &Path, rank: u32) -> bool {
    lock_path(workdir, rank).exists()
}

/// Removes the lock file for `rank`. Removing an already-missing lock is a
/// no-op, so retries are safe.
pub fn remove_lock(workdir: &Path, rank: u32) -> Result<(), ProtocolError> {
    let path = lock_path(workdir, rank);
    match fs::remove_file(&path) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(ProtocolError::io(&path, e)),
    }
}

/// Writes `<workdir>/out<rank>`: header lines, then one value per line when
/// values are stored. The file is staged under a temporary name and renamed
/// into place so a crash can never leave a partial `out<rank>` visible.
pub fn write_result(workdir: &Path, result: &WorkerResult) -> Result<PathBuf, ProtocolError> {
    let path = result_path(workdir, result.rank);
    let tmp = workdir.join(format!("out{}.tmp", result.rank));

    let mut text = String::new();
    let _ = writeln!(text, "{RESULT_HEADER}");
    let _ = writeln!(text, "rank={}", result.rank);
    let _ = writeln!(text, "value_count={}", result.value_count);
    let _ = writeln!(text, "nan_count={}", result.nan_count);
    let _ = writeln!(text, "cpu_seconds={}", format_f64(result.cpu_seconds));
    for v in &result.values {
        let _ = writeln!(text, "{}", format_f64(*v));
    }

    {
        use std::io::Write;
        let mut file = fs::File::create(&tmp).map_err(|e| ProtocolError::io(&tmp, e))?;
        file.write_all(text.as_bytes())
            .map_err(|e| ProtocolError::io(&tmp, e))?;
        file.sync_all().map_err(|e| ProtocolError::io(&tmp, e))?;
    }
    fs::rename(&tmp, &path).map_err(|e| ProtocolError::io(&path, e))?;
    Ok(path)
}

/// Reads `<workdir>/out<rank>` back. Values are bitwise what was written,
/// with NaN positions preserved (as canonical NaN).
pub fn read_result(workdir: &Path, rank: u32) -> Result<WorkerResult, ProtocolError> {
    let path = result_path(workdir, rank);
    let malformed = |reason: String| ProtocolError::MalformedResult {
        path: path.clone(),
        reason,
    };
    let text = fs::read_to_string(&path).map_err(|e| ProtocolError::io(&path, e))?;
    let mut lines = text.lines();

    if lines.next() != Some(RESULT_HEADER) {
        return Err(malformed(format!("missing '{RESULT_HEADER}' header")));
    }
    let mut header_value = |key: &str| -> Result<String, ProtocolError> {
        let line = lines
            .next()
            .ok_or_else(|| malformed(format!("missing '{key}' line")))?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| malformed(format!("expected '{key}=' line, found '{line}'")))
    };
    let file_rank: u32 = header_value("rank")?
        .parse()
        .map_err(|_| malformed("bad rank".into()))?;
    if file_rank != rank {
        return Err(malformed(format!(
            "rank mismatch: file says {file_rank}, expected {rank}"
        )));
    }
    let value_count: u64 = header_value("value_count")?
        .parse()
        .map_err(|_| malformed("bad value_count".into()))?;
    let nan_count: u64 = header_value("nan_count")?
        .parse()
        .map_err(|_| malformed("bad nan_count".into()))?;
    let cpu_seconds = parse_f64(&header_value("cpu_seconds")?)
        .ok_or_else(|| malformed("bad cpu_seconds".into()))?;
    if cpu_seconds.is_nan() || cpu_seconds < 0.0 {
        return Err(malformed(format!("cpu_seconds must be >= 0, got {cpu_seconds}")));
    }

    let value_lines: Vec<&str> = lines.collect();
    let values = if value_lines.is_empty() {
        Vec::new() // ran without value storage
    } else if value_lines.len() as u64 == value_count {
        let mut values = Vec::with_capacity(value_lines.len());
        for line in value_lines {
            values.push(parse_f64(line).ok_or_else(|| malformed(format!("bad value '{line}'")))?);
        }
        values
    } else {
        return Err(malformed(format!(
            "{} value lines do not match value_count {value_count}",
            value_lines.len()
        )));
    };

    Ok(WorkerResult {
        rank,
        cpu_seconds,
        nan_count,
        value_count,
        values,
    })
}

/// Writes `<workdir>/fail<rank>` with a diagnostic message.
pub fn write_failure_marker(
    workdir: &Path,
    rank: u32,
    message: &str,
) -> Result<PathBuf, ProtocolError> {
    let path = failure_path(workdir, rank);
    fs::write(&path, message).map_err(|e| ProtocolError::io(&path, e))?;
    Ok(path)
}

/// Lists all failure markers for ranks `0..nproc`, in rank order.
pub fn check_failures(workdir: &Path, nproc: u32) -> Result<Vec<(u32, String)>, ProtocolError> {
    let mut failures = Vec::new();
    for rank in 0..nproc {
        let path = failure_path(workdir, rank);
        match fs::read_to_string(&path) {
            Ok(message) => failures.push((rank, message)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(ProtocolError::io(&path, e)),
        }
    }
    Ok(failures)
}
