//! Job orchestration: plan partitions, write specs and locks, launch the
//! workers, poll for completion, merge results, and report timings.
//!
//! Completion detection is purely file-based: the master watches for its
//! pre-created lock files to disappear and never waits on process handles,
//! which keeps remote launchers (whose local handle exits at spawn time)
//! and local spawns on exactly the same footing. Process handles are used
//! only to fail fast on spawn errors and to clean up children afterwards.

use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cputime::{cpu_seconds_since, process_cpu_time};
use crate::expr::{self, ExprError};
use crate::grid::{self, GridError, GridSpec};
use crate::protocol::{self, ProtocolError, WorkerResult, WorkerSpec};

/// Default pause between lock-file scans.
pub const DEFAULT_POLL_INTERVAL: Duration = Duration::from_millis(100);

#[derive(Debug, Error)]
pub enum MasterError {
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("invalid launch config: {0}")]
    InvalidConfig(String),
    #[error("node list is empty")]
    EmptyNodeList,
    #[error("failed to spawn worker {rank}: {source}")]
    Spawn {
        rank: u32,
        #[source]
        source: std::io::Error,
    },
    #[error("timed out waiting for workers; pending ranks {pending:?}")]
    Timeout { pending: Vec<u32> },
    #[error("{} worker(s) failed: {}", failures.len(), describe_failures(failures))]
    WorkerFailed { failures: Vec<(u32, String)> },
    #[error("merged value count {actual} does not match grid point count {expected}")]
    CountMismatch { expected: u64, actual: u64 },
    #[error("no worker results to aggregate")]
    EmptyResults,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

fn describe_failures(failures: &[(u32, String)]) -> String {
    failures
        .iter()
        .map(|(rank, message)| format!("rank {rank}: {}", message.trim_end()))
        .collect::<Vec<_>>()
        .join("; ")
}

/// One parallel job.
#[derive(Debug, Clone)]
pub struct JobSpec {
    pub nproc: u32,
    pub grid: GridSpec,
    pub expression: String,
    pub store_values: bool,
}

impl JobSpec {
    /// Checks the job invariants: at least one worker, no more workers than
    /// grid steps, and a parseable expression.
    pub fn validate(&self) -> Result<(), MasterError> {
        if self.nproc < 1 {
            return Err(MasterError::InvalidJob("nproc must be at least 1".into()));
        }
        if self.nproc as u64 > self.grid.last_index() {
            return Err(MasterError::InvalidJob(format!(
                "nproc {} exceeds the {} grid steps",
                self.nproc,
                self.grid.last_index()
            )));
        }
        expr::parse(&self.expression)?;
        Ok(())
    }
}

/// How and where workers are launched.
#[derive(Debug, Clone)]
pub struct LaunchConfig {
    /// Shared work directory; must be visible at the same path to master and
    /// workers.
    pub workdir: PathBuf,
    /// Node names for remote launches, assigned round-robin by rank. Empty
    /// means all workers run on this machine.
    pub nodes: Vec<String>,
    /// Launch command template with `{spec}` (and `{node}` when `nodes` is
    /// non-empty) placeholders, run through `sh -c`. When absent, workers are
    /// spawned directly as `<worker_program> worker --spec <path>`.
    pub launcher_template: Option<String>,
    /// Executable for direct local spawns; defaults to the current
    /// executable, since master and worker share one binary.
    pub worker_program: Option<PathBuf>,
    /// Pause between lock-file scans.
    pub poll_interval: Duration,
    /// Give-up horizon for the poll loop; `None` waits forever.
    pub timeout: Option<Duration>,
}

impl LaunchConfig {
    /// All-local config with the default 100 ms poll interval and no timeout.
    pub fn local(workdir: impl Into<PathBuf>) -> LaunchConfig {
        LaunchConfig {
            workdir: workdir.into(),
            nodes: Vec::new(),
            launcher_template: None,
            worker_program: None,
            poll_interval: DEFAULT_POLL_INTERVAL,
            timeout: None,
        }
    }

    pub fn validate(&self) -> Result<(), MasterError> {
        if self.poll_interval.is_zero() {
            return Err(MasterError::InvalidConfig(
                "poll_interval must be positive".into(),
            ));
        }
        match &self.launcher_template {
            None => {
                if !self.nodes.is_empty() {
                    return Err(MasterError::InvalidConfig(
                        "remote nodes require a launcher template".into(),
                    ));
                }
            }
            Some(template) => {
                if !template.contains("{spec}") {
                    return Err(MasterError::InvalidConfig(
                        "launcher template must contain {spec}".into(),
                    ));
                }
                if template.contains("{node}") != !self.nodes.is_empty() {
                    return Err(MasterError::InvalidConfig(
                        "launcher template must contain {node} exactly when nodes are given"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Job timings, all in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingReport {
    /// Wall-clock duration from just before the first launch until the merge
    /// finished.
    pub wall_elapsed_seconds: f64,
    /// CPU time the master process itself consumed over that window.
    pub master_cpu_seconds: f64,
    /// Sum of the workers' evaluation-loop CPU times.
    pub sum_worker_cpu_seconds: f64,
    /// `sum_worker_cpu_seconds / nproc`.
    pub mean_worker_cpu_seconds: f64,
}

/// All workers' outputs, stitched back together in rank order.
#[derive(Debug, Clone)]
pub struct MergedResult {
    /// Values in global grid order; empty when the job ran without storage.
    pub values: Vec<f64>,
    pub total_nan_count: u64,
    pub per_worker: Vec<WorkerResult>,
}

/// Round-robin node assignment: rank `r` runs on `nodes[r % nodes.len()]`.
/// With two nodes, even and odd ranks alternate between them; list the nodes
/// in the order the even ranks should land on.
pub fn assign_node(rank: u32, nodes: &[String]) -> Result<&str, MasterError> {
    if nodes.is_empty() {
        return Err(MasterError::EmptyNodeList);
    }
    Ok(nodes[rank as usize % nodes.len()].as_str())
}

/// The concrete command a worker launch will execute.
#[derive(Debug, Clone, PartialEq, Eq)]
enum LaunchCommand {
    /// Direct spawn of `<program> worker --spec <spec>`.
    Direct { program: PathBuf, spec: PathBuf },
    /// A substituted launcher template, run through `sh -c`.
    Shell { command_line: String },
}

fn launch_command(
    rank: u32,
    spec_path: &Path,
    config: &LaunchConfig,
) -> Result<LaunchCommand, MasterError> {
    match &config.launcher_template {
        None => {
            let program = match &config.worker_program {
                Some(p) => p.clone(),
                None => std::env::current_exe().map_err(|source| MasterError::Spawn {
                    rank,
                    source,
                })?,
            };
            Ok(LaunchCommand::Direct {
                program,
                spec: spec_path.to_path_buf(),
            })
        }
        Some(template) => {
            let mut command_line = template.replace("{spec}", &spec_path.to_string_lossy());
            if !config.nodes.is_empty() {
                command_line = command_line.replace("{node}", assign_node(rank, &config.nodes)?);
            }
            Ok(LaunchCommand::Shell { command_line })
        }
    }
}

/// Starts worker `rank`. The returned handle is only good for detecting
/// spawn failures and for cleanup; completion is observed via lock files.
pub fn launch_worker(
    rank: u32,
    spec_path: &Path,
    config: &LaunchConfig,
) -> Result<Child, MasterError> {
    let mut command = match launch_command(rank, spec_path, config)? {
        LaunchCommand::Direct { program, spec } => {
            let mut c = Command::new(program);
            c.arg("worker").arg("--spec").arg(spec);
            c
        }
        LaunchCommand::Shell { command_line } => {
            let mut c = Command::new("sh");
            c.arg("-c").arg(command_line);
            c
        }
    };
    command
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| MasterError::Spawn { rank, source })
}

/// Blocks until no lock file for ranks `0..nproc` remains, sleeping
/// `poll_interval` between scans. Ranks already observed unlocked are not
/// re-checked.
pub fn poll_locks(workdir: &Path, nproc: u32, config: &LaunchConfig) -> Result<(), MasterError> {
    let start = Instant::now();
    let mut pending: Vec<u32> = (0..nproc).collect();
    loop {
        pending.retain(|&rank| protocol::lock_exists(workdir, rank));
        if pending.is_empty() {
            return Ok(());
        }
        if let Some(timeout) = config.timeout {
            if start.elapsed() >= timeout {
                return Err(MasterError::Timeout { pending });
            }
        }
        std::thread::sleep(config.poll_interval);
    }
}

/// Reads `out0..out(nproc-1)` in rank order and concatenates them. Fails if
/// any failure marker is present or the value counts do not add up to the
/// grid's point count.
pub fn merge_results(workdir: &Path, job: &JobSpec) -> Result<MergedResult, MasterError> {
    let failures = protocol::check_failures(workdir, job.nproc)?;
    if !failures.is_empty() {
        return Err(MasterError::WorkerFailed { failures });
    }

    let mut per_worker = Vec::with_capacity(job.nproc as usize);
    let mut values = Vec::with_capacity(if job.store_values {
        job.grid.point_count() as usize
    } else {
        0
    });
    let mut total_nan_count = 0u64;
    let mut total_value_count = 0u64;
    for rank in 0..job.nproc {
        let result = protocol::read_result(workdir, rank)?;
        total_nan_count += result.nan_count;
        total_value_count += result.value_count;
        if job.store_values {
            values.extend_from_slice(&result.values);
        }
        per_worker.push(result);
    }
    if total_value_count != job.grid.point_count() {
        return Err(MasterError::CountMismatch {
            expected: job.grid.point_count(),
            actual: total_value_count,
        });
    }
    if job.store_values && values.len() as u64 != total_value_count {
        return Err(MasterError::CountMismatch {
            expected: total_value_count,
            actual: values.len() as u64,
        });
    }
    Ok(MergedResult {
        values,
        total_nan_count,
        per_worker,
    })
}

/// Sums and averages the per-worker CPU times.
pub fn compute_timings(
    wall_elapsed_seconds: f64,
    master_cpu_seconds: f64,
    worker_results: &[WorkerResult],
) -> Result<TimingReport, MasterError> {
    if worker_results.is_empty() {
        return Err(MasterError::EmptyResults);
    }
    let sum_worker_cpu_seconds: f64 = worker_results.iter().map(|r| r.cpu_seconds).sum();
    let mean_worker_cpu_seconds = sum_worker_cpu_seconds / worker_results.len() as f64;
    Ok(TimingReport {
        wall_elapsed_seconds,
        master_cpu_seconds,
        sum_worker_cpu_seconds,
        mean_worker_cpu_seconds,
    })
}

/// Removes stale coordination files (`out*`, `fail*`, `filelock*`,
/// `fileworker*`) left over from a previous job in the same directory.
fn clean_workdir(workdir: &Path) -> Result<(), MasterError> {
    let entries = std::fs::read_dir(workdir).map_err(|source| {
        MasterError::Protocol(ProtocolError::Io {
            path: workdir.to_path_buf(),
            source,
        })
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| {
            MasterError::Protocol(ProtocolError::Io {
                path: workdir.to_path_buf(),
                source,
            })
        })?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        let stale = name.starts_with("out")
            || name.starts_with("fail")
            || name.starts_with("filelock")
            || name.starts_with("fileworker");
        if stale && entry.file_type().map(|t| t.is_file()).unwrap_or(false) {
            std::fs::remove_file(entry.path()).map_err(|source| {
                MasterError::Protocol(ProtocolError::Io {
                    path: entry.path(),
                    source,
                })
            })?;
        }
    }
    Ok(())
}

/// Kills (best effort) and reaps every child handle.
fn cleanup_children(children: &mut Vec<Child>) {
    for child in children.iter_mut() {
        let _ = child.kill();
        let _ = child.wait();
    }
    children.clear();
}

/// Runs one job end to end: pre-clean the work directory, plan partitions,
/// write a lock then a spec per rank, launch every worker, poll the locks,
/// merge the results, and assemble the timing report. The wall and master-CPU
/// clocks cover launch through merge.
pub fn run_job(
    job: &JobSpec,
    config: &LaunchConfig,
) -> Result<(MergedResult, TimingReport), MasterError> {
    job.validate()?;
    config.validate()?;
    let workdir = config.workdir.as_path();

    clean_workdir(workdir)?;
    let partitions = grid::plan_partitions(&job.grid, job.nproc)?;
    let mut spec_paths = Vec::with_capacity(partitions.len());
    for partition in &partitions {
        protocol::create_lock(workdir, partition.rank)?;
        let spec = WorkerSpec {
            rank: partition.rank,
            start_index: partition.start_index,
            end_index: partition.end_index,
            step: job.grid.step(),
            expression: job.expression.clone(),
            store_values: job.store_values,
            workdir: workdir.to_path_buf(),
        };
        spec_paths.push(protocol::write_worker_spec(&spec)?);
    }

    let cpu_start = process_cpu_time();
    let wall_start = Instant::now();

    let mut children = Vec::with_capacity(partitions.len());
    for (partition, spec_path) in partitions.iter().zip(&spec_paths) {
        match launch_worker(partition.rank, spec_path, config) {
            Ok(child) => children.push(child),
            Err(err) => {
                cleanup_children(&mut children);
                return Err(err);
            }
        }
    }

    if let Err(err) = poll_locks(workdir, job.nproc, config) {
        cleanup_children(&mut children);
        return Err(err);
    }
    let merged = match merge_results(workdir, job) {
        Ok(merged) => merged,
        Err(err) => {
            cleanup_children(&mut children);
            return Err(err);
        }
    };

    let wall_elapsed_seconds = wall_start.elapsed().as_secs_f64();
    let master_cpu_seconds = cpu_seconds_since(cpu_start, process_cpu_time());
    cleanup_children(&mut children);

    let report = compute_timings(wall_elapsed_seconds, master_cpu_seconds, &merged.per_worker)?;
    Ok((merged, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use tempfile::tempdir;

    fn strings(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn assign_node_round_robin() {
        let nodes = strings(&["a", "b"]);
        assert_eq!(assign_node(0, &nodes).unwrap(), "a");
        assert_eq!(assign_node(1, &nodes).unwrap(), "b");
        assert_eq!(assign_node(2, &nodes).unwrap(), "a");
        assert_eq!(assign_node(5, &strings(&["a"])).unwrap(), "a");
        assert_eq!(assign_node(3, &strings(&["n1", "n2", "n3"])).unwrap(), "n1");
        assert!(matches!(assign_node(0, &[]), Err(MasterError::EmptyNodeList)));
    }

    #[test]
    fn equal_parity_ranks_share_a_node() {
        let nodes = strings(&["node02", "node01"]);
        for rank in 0..16u32 {
            let got = assign_node(rank, &nodes).unwrap();
            let expected = if rank % 2 == 0 { "node02" } else { "node01" };
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn launch_command_substitutes_template() {
        let mut config = LaunchConfig::local("/tmp/w");
        config.nodes = strings(&["n1", "n2"]);
        config.launcher_template = Some("ssh {node} spmd worker --spec {spec}".into());
        let cmd = launch_command(1, Path::new("/w/fileworker1.spec"), &config).unwrap();
        assert_eq!(
            cmd,
            LaunchCommand::Shell {
                command_line: "ssh n2 spmd worker --spec /w/fileworker1.spec".into()
            }
        );
    }

    #[test]
    fn launch_command_defaults_to_direct_spawn() {
        let mut config = LaunchConfig::local("/tmp/w");
        config.worker_program = Some(PathBuf::from("/bin/spmd"));
        let cmd = launch_command(0, Path::new("/w/fileworker0.spec"), &config).unwrap();
        assert_eq!(
            cmd,
            LaunchCommand::Direct {
                program: PathBuf::from("/bin/spmd"),
                spec: PathBuf::from("/w/fileworker0.spec"),
            }
        );
    }

    #[test]
    fn local_config_defaults() {
        let config = LaunchConfig::local("/tmp/w");
        assert_eq!(config.poll_interval, Duration::from_millis(100));
        assert_eq!(config.timeout, None);
        assert!(config.nodes.is_empty());
        assert!(config.launcher_template.is_none());
        assert!(config.worker_program.is_none());
    }

    #[test]
    fn config_validation_rules() {
        let ok = LaunchConfig::local("/tmp/w");
        ok.validate().unwrap();

        let mut zero_poll = ok.clone();
        zero_poll.poll_interval = Duration::ZERO;
        assert!(matches!(
            zero_poll.validate(),
            Err(MasterError::InvalidConfig(_))
        ));

        let mut no_spec = ok.clone();
        no_spec.launcher_template = Some("ssh {node} run".into());
        no_spec.nodes = strings(&["n1"]);
        assert!(matches!(no_spec.validate(), Err(MasterError::InvalidConfig(_))));

        let mut node_without_nodes = ok.clone();
        node_without_nodes.launcher_template = Some("run {node} {spec}".into());
        assert!(matches!(
            node_without_nodes.validate(),
            Err(MasterError::InvalidConfig(_))
        ));

        let mut nodes_without_node = ok.clone();
        nodes_without_node.launcher_template = Some("run {spec}".into());
        nodes_without_node.nodes = strings(&["n1"]);
        assert!(matches!(
            nodes_without_node.validate(),
            Err(MasterError::InvalidConfig(_))
        ));

        let mut nodes_without_template = ok.clone();
        nodes_without_template.nodes = strings(&["n1"]);
        assert!(matches!(
            nodes_without_template.validate(),
            Err(MasterError::InvalidConfig(_))
        ));

        let mut local_template = ok;
        local_template.launcher_template = Some("sh my_worker.sh {spec}".into());
        local_template.validate().unwrap();
    }

    #[test]
    fn poll_returns_immediately_without_locks() {
        let dir = tempdir().unwrap();
        let config = LaunchConfig::local(dir.path());
        let start = Instant::now();
        poll_locks(dir.path(), 4, &config).unwrap();
        assert!(start.elapsed() < Duration::from_millis(50));
    }

    #[test]
    fn poll_detects_scripted_lock_removal() {
        let dir = tempdir().unwrap();
        let mut config = LaunchConfig::local(dir.path());
        config.poll_interval = Duration::from_millis(50);
        protocol::create_lock(dir.path(), 0).unwrap();

        let lock = protocol::lock_path(dir.path(), 0);
        let remover = std::thread::spawn(move || {
            std::thread::sleep(Duration::from_millis(150));
            fs::remove_file(lock).unwrap();
        });

        let start = Instant::now();
        poll_locks(dir.path(), 1, &config).unwrap();
        let elapsed = start.elapsed();
        remover.join().unwrap();

        // Removal lands at ~3 poll intervals; allow one interval of slack
        // plus scheduling noise.
        assert!(elapsed >= Duration::from_millis(145), "{elapsed:?}");
        assert!(elapsed <= Duration::from_millis(280), "{elapsed:?}");
    }

    #[test]
    fn poll_timeout_lists_pending_ranks() {
        let dir = tempdir().unwrap();
        let mut config = LaunchConfig::local(dir.path());
        config.poll_interval = Duration::from_millis(20);
        config.timeout = Some(Duration::from_millis(100));
        protocol::create_lock(dir.path(), 1).unwrap();

        match poll_locks(dir.path(), 2, &config) {
            Err(MasterError::Timeout { pending }) => assert_eq!(pending, vec![1]),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn job(nproc: u32, maxvalue: f64, step: f64, expression: &str, store: bool) -> JobSpec {
        JobSpec {
            nproc,
            grid: GridSpec::new(maxvalue, step).unwrap(),
            expression: expression.into(),
            store_values: store,
        }
    }

    #[test]
    fn merge_concatenates_in_rank_order() {
        let dir = tempdir().unwrap();
        let j = job(2, 1.0, 0.5, "x", true);
        protocol::write_result(
            dir.path(),
            &WorkerResult {
                rank: 0,
                cpu_seconds: 2.0,
                nan_count: 0,
                value_count: 2,
                values: vec![1.0, 2.0],
            },
        )
        .unwrap();
        protocol::write_result(
            dir.path(),
            &WorkerResult {
                rank: 1,
                cpu_seconds: 4.0,
                nan_count: 1,
                value_count: 1,
                values: vec![3.0],
            },
        )
        .unwrap();

        let merged = merge_results(dir.path(), &j).unwrap();
        assert_eq!(merged.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(merged.total_nan_count, 1);
        assert_eq!(merged.per_worker.len(), 2);
    }

    #[test]
    fn merge_reports_worker_failures() {
        let dir = tempdir().unwrap();
        let j = job(2, 1.0, 0.5, "x", true);
        protocol::write_failure_marker(dir.path(), 1, "kaboom").unwrap();
        match merge_results(dir.path(), &j) {
            Err(MasterError::WorkerFailed { failures }) => {
                assert_eq!(failures, vec![(1, "kaboom".to_string())]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn merge_without_storage_keeps_counts_and_cpu() {
        let dir = tempdir().unwrap();
        let j = job(2, 1.0, 0.5, "x", false);
        for (rank, count, cpu) in [(0u32, 2u64, 0.25), (1, 1, 0.5)] {
            protocol::write_result(
                dir.path(),
                &WorkerResult {
                    rank,
                    cpu_seconds: cpu,
                    nan_count: 0,
                    value_count: count,
                    values: Vec::new(),
                },
            )
            .unwrap();
        }
        let merged = merge_results(dir.path(), &j).unwrap();
        assert!(merged.values.is_empty());
        assert_eq!(merged.per_worker[0].cpu_seconds, 0.25);
        assert_eq!(merged.per_worker[1].cpu_seconds, 0.5);
    }

    #[test]
    fn merge_detects_count_mismatch() {
        let dir = tempdir().unwrap();
        let j = job(1, 1.0, 0.5, "x", true);
        protocol::write_result(
            dir.path(),
            &WorkerResult {
                rank: 0,
                cpu_seconds: 0.0,
                nan_count: 0,
                value_count: 2,
                values: vec![0.0, 0.5],
            },
        )
        .unwrap();
        assert!(matches!(
            merge_results(dir.path(), &j),
            Err(MasterError::CountMismatch {
                expected: 3,
                actual: 2
            })
        ));
    }

    #[test]
    fn timings_sum_and_mean() {
        let results: Vec<WorkerResult> = [2.0, 4.0]
            .iter()
            .map(|&cpu| WorkerResult {
                rank: 0,
                cpu_seconds: cpu,
                nan_count: 0,
                value_count: 0,
                values: Vec::new(),
            })
            .collect();
        let report = compute_timings(1.5, 0.25, &results).unwrap();
        assert_eq!(report.sum_worker_cpu_seconds, 6.0);
        assert_eq!(report.mean_worker_cpu_seconds, 3.0);
        assert_eq!(report.wall_elapsed_seconds, 1.5);
        assert_eq!(report.master_cpu_seconds, 0.25);

        let single = compute_timings(0.0, 0.0, &results[..1]).unwrap();
        assert_eq!(single.sum_worker_cpu_seconds, 2.0);
        assert_eq!(single.mean_worker_cpu_seconds, 2.0);

        assert!(matches!(
            compute_timings(0.0, 0.0, &[]),
            Err(MasterError::EmptyResults)
        ));
    }

    #[test]
    fn mean_times_nproc_recovers_sum() {
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = move || {
            // xorshift; plenty for test data
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for nproc in 1..=20usize {
            let results: Vec<WorkerResult> = (0..nproc)
                .map(|rank| WorkerResult {
                    rank: rank as u32,
                    cpu_seconds: next() * 100.0,
                    nan_count: 0,
                    value_count: 0,
                    values: Vec::new(),
                })
                .collect();
            let report = compute_timings(0.0, 0.0, &results).unwrap();
            let rebuilt = report.mean_worker_cpu_seconds * nproc as f64;
            let sum = report.sum_worker_cpu_seconds;
            assert!(((rebuilt - sum) / sum.max(f64::MIN_POSITIVE)).abs() <= 1e-9);
        }
    }

    #[test]
    fn job_validation() {
        let j = job(0, 1.0, 0.5, "x", true);
        assert!(matches!(j.validate(), Err(MasterError::InvalidJob(_))));
        let j = job(3, 1.0, 0.5, "x", true);
        assert!(matches!(j.validate(), Err(MasterError::InvalidJob(_))));
        let j = job(2, 1.0, 0.5, "sin(", true);
        assert!(matches!(j.validate(), Err(MasterError::Expr(_))));
        job(2, 1.0, 0.5, "x", true).validate().unwrap();
    }

    #[test]
    fn spawn_failure_is_detected_immediately() {
        let dir = tempdir().unwrap();
        let mut config = LaunchConfig::local(dir.path());
        config.worker_program = Some(PathBuf::from("/nonexistent/binary"));
        let j = job(2, 1.0, 0.5, "x", true);
        assert!(matches!(
            run_job(&j, &config),
            Err(MasterError::Spawn { rank: 0, .. })
        ));
    }
}
