//! Master/worker SPMD job runner over a shared filesystem.
//!
//! A master process splits the sample grid `0:step:maxvalue` into contiguous
//! index ranges, writes one spec file and one lock file per worker, and
//! launches the workers (locally or through a remote-launch command
//! template). Each worker evaluates the job's expression over its range,
//! persists its result file, and deletes its lock file. The master detects
//! completion by polling for lock-file disappearance, then merges the result
//! files in rank order. All coordination happens through files in a shared
//! work directory; there is no other communication channel.

pub mod bench;
pub mod cputime;
pub mod expr;
pub mod grid;
pub mod master;
pub mod protocol;
pub mod worker;

pub use bench::{BenchConfig, BenchError, BenchTable};
pub use expr::{Expr, ExprError, GridEvaluation};
pub use grid::{GridError, GridSpec, Partition};
pub use master::{JobSpec, LaunchConfig, MasterError, MergedResult, TimingReport};
pub use protocol::{ProtocolError, WorkerResult, WorkerSpec};
pub use worker::WorkerError;
