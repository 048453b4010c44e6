//! Worker-process entry point.
//!
//! A worker reads its spec file, generates its slice of the grid, evaluates
//! the expression over it, persists the result, and removes its lock file,
//! in that order, so the lock can only disappear after the result is durable.
//! On failure it writes a `fail<rank>` marker before removing the lock, so
//! the master wakes promptly and finds the diagnostic. If even the marker
//! cannot be written the lock stays in place and the master's timeout fires.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::expr;
use crate::grid;
use crate::protocol::{self, ProtocolError, WorkerResult};

#[derive(Debug, Error)]
pub enum WorkerError {
    #[error("spec path {0} is not of the form <workdir>/fileworker<rank>.spec")]
    BadSpecPath(PathBuf),
    #[error("worker {rank} failed: {message}")]
    Failed { rank: u32, message: String },
    #[error("worker failed ({message}) and the failure marker could not be written: {marker_error}")]
    MarkerUnwritable {
        message: String,
        marker_error: ProtocolError,
    },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Runs one worker to completion against the spec at `spec_path`.
///
/// After this returns, exactly one of `out<rank>` / `fail<rank>` exists
/// (unless even the failure marker was unwritable, in which case the lock
/// file is left alone as a distress signal).
pub fn run_worker(spec_path: &Path) -> Result<(), WorkerError> {
    let (workdir, rank) = identity_from_path(spec_path)?;
    match evaluate_and_persist(spec_path) {
        Ok(rank) => {
            protocol::remove_lock(&workdir, rank)?;
            Ok(())
        }
        Err(err) => {
            let message = err.to_string();
            match protocol::write_failure_marker(&workdir, rank, &message) {
                Ok(_) => {
                    protocol::remove_lock(&workdir, rank)?;
                    Err(WorkerError::Failed { rank, message })
                }
                Err(marker_error) => Err(WorkerError::MarkerUnwritable {
                    message,
                    marker_error,
                }),
            }
        }
    }
}

/// Everything up to and including the durable result write. Returns the rank
/// recorded in the spec file.
fn evaluate_and_persist(spec_path: &Path) -> Result<u32, ProtocolError> {
    let spec = protocol::read_worker_spec(spec_path)?;
    let ast = expr::parse(&spec.expression)?;
    let points = grid::sample_points(spec.start_index, spec.end_index, spec.step);
    let evaluation = ast.eval_grid(&points);
    let result = WorkerResult {
        rank: spec.rank,
        cpu_seconds: evaluation.cpu_seconds,
        nan_count: evaluation.nan_count,
        value_count: points.len() as u64,
        values: if spec.store_values {
            evaluation.values
        } else {
            Vec::new()
        },
    };
    protocol::write_result(&spec.workdir, &result)?;
    Ok(spec.rank)
}

/// Work directory and rank, derived from the spec file path alone so the
/// failure path works even when the file content is unreadable.
fn identity_from_path(spec_path: &Path) -> Result<(PathBuf, u32), WorkerError> {
    let bad = || WorkerError::BadSpecPath(spec_path.to_path_buf());
    let name = spec_path.file_name().and_then(|n| n.to_str()).ok_or_else(bad)?;
    let rank: u32 = name
        .strip_prefix("fileworker")
        .and_then(|rest| rest.strip_suffix(".spec"))
        .and_then(|digits| digits.parse().ok())
        .ok_or_else(bad)?;
    let workdir = spec_path.parent().ok_or_else(bad)?;
    let workdir = if workdir.as_os_str().is_empty() {
        PathBuf::from(".")
    } else {
        workdir.to_path_buf()
    };
    Ok((workdir, rank))
}
