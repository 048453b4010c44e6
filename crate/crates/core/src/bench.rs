//! Benchmark harness: run the (m x nproc) measurement grid, render the
//! timing table, compute speedups, and emit CSV/plot data.
//!
//! The table metric is the sum of the workers' evaluation CPU times, the
//! quantity that is comparable against a single-process run of the same
//! grid. Wall-clock time is recorded alongside each live cell and lands in
//! the CSV as an extra column. A reference table of measurements from a
//! two-node, four-CPU (eight logical processors) cluster is embedded for
//! regression-checking the speedup arithmetic independently of this
//! machine's performance.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::grid::GridSpec;
use crate::master::{self, JobSpec, LaunchConfig, MasterError};

/// The default workload expression, a deliberately expensive chain of
/// floating-point operations.
pub const DEFAULT_EXPRESSION: &str = "5432.060708*cos((sin(x^9.876))^-1.2345)";

/// Default worker counts: even values from 2 to 16.
pub const DEFAULT_NPROC_LIST: [u32; 8] = [2, 4, 6, 8, 10, 12, 14, 16];

/// Default grid-size multipliers.
pub const DEFAULT_M_LIST: [u32; 3] = [2, 4, 6];

/// Default factor turning a multiplier `m` into `maxvalue = m * scale`.
pub const DEFAULT_SCALE: u64 = 10_000;

/// Default grid step.
pub const DEFAULT_STEP: f64 = 0.001;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid bench config: {0}")]
    InvalidConfig(String),
    #[error("times must be positive, got reference {t_ref} and value {t}")]
    NonPositiveTime { t_ref: f64, t: f64 },
    #[error("no table row for m={m}")]
    RowNotFound { m: u32 },
    #[error("cell m={m} nproc={nproc} failed: {source}")]
    Cell {
        m: u32,
        nproc: u32,
        #[source]
        source: MasterError,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Parameters of one measurement sweep.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub nproc_list: Vec<u32>,
    pub m_list: Vec<u32>,
    /// `maxvalue = m * scale` for each row.
    pub scale: u64,
    pub step: f64,
    pub expression: String,
    pub store_values: bool,
    /// Runs per cell; cells record the arithmetic mean.
    pub repetitions: u32,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            nproc_list: DEFAULT_NPROC_LIST.to_vec(),
            m_list: DEFAULT_M_LIST.to_vec(),
            scale: DEFAULT_SCALE,
            step: DEFAULT_STEP,
            expression: DEFAULT_EXPRESSION.to_string(),
            store_values: true,
            repetitions: 1,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.nproc_list.is_empty() {
            return Err(BenchError::InvalidConfig("nproc list is empty".into()));
        }
        if self.m_list.is_empty() {
            return Err(BenchError::InvalidConfig("m list is empty".into()));
        }
        if self.scale == 0 {
            return Err(BenchError::InvalidConfig("scale must be positive".into()));
        }
        if self.repetitions == 0 {
            return Err(BenchError::InvalidConfig(
                "repetitions must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Rectangular timing table: rows are `m` values, columns are `nproc`
/// values, cells are summed worker CPU seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchTable {
    m_values: Vec<u32>,
    nproc_values: Vec<u32>,
    /// Row-major, `cells[row][col]`.
    cells: Vec<Vec<f64>>,
    /// Wall-clock seconds per cell, present for live runs.
    wall: Option<Vec<Vec<f64>>>,
}

impl BenchTable {
    pub fn new(m_values: Vec<u32>, nproc_values: Vec<u32>, cells: Vec<Vec<f64>>) -> BenchTable {
        assert_eq!(cells.len(), m_values.len());
        for row in &cells {
            assert_eq!(row.len(), nproc_values.len());
        }
        BenchTable {
            m_values,
            nproc_values,
            cells,
            wall: None,
        }
    }

    pub fn with_wall(mut self, wall: Vec<Vec<f64>>) -> BenchTable {
        assert_eq!(wall.len(), self.m_values.len());
        self.wall = Some(wall);
        self
    }

    pub fn m_values(&self) -> &[u32] {
        &self.m_values
    }

    pub fn nproc_values(&self) -> &[u32] {
        &self.nproc_values
    }

    /// Seconds for the (m, nproc) cell, if both labels exist.
    pub fn cell(&self, m: u32, nproc: u32) -> Option<f64> {
        let row = self.m_values.iter().position(|&v| v == m)?;
        let col = self.nproc_values.iter().position(|&v| v == nproc)?;
        Some(self.cells[row][col])
    }

    fn wall_cell(&self, row: usize, col: usize) -> Option<f64> {
        self.wall.as_ref().map(|w| w[row][col])
    }
}

/// Runs every (m, nproc) cell strictly sequentially, so cells never
/// contaminate each other's timing, and returns the filled table.
pub fn run_grid(config: &BenchConfig, launch: &LaunchConfig) -> Result<BenchTable, BenchError> {
    config.validate()?;
    let mut cells = Vec::with_capacity(config.m_list.len());
    let mut wall = Vec::with_capacity(config.m_list.len());
    for &m in &config.m_list {
        let mut row = Vec::with_capacity(config.nproc_list.len());
        let mut wall_row = Vec::with_capacity(config.nproc_list.len());
        for &nproc in &config.nproc_list {
            let cell_err = |source| BenchError::Cell { m, nproc, source };
            let maxvalue = (m as u64 * config.scale) as f64;
            let grid = GridSpec::new(maxvalue, config.step).map_err(|e| cell_err(e.into()))?;
            let job = JobSpec {
                nproc,
                grid,
                expression: config.expression.clone(),
                store_values: config.store_values,
            };
            let mut cpu_sum = 0.0;
            let mut wall_sum = 0.0;
            for _ in 0..config.repetitions {
                let (_, report) = master::run_job(&job, launch).map_err(cell_err)?;
                cpu_sum += report.sum_worker_cpu_seconds;
                wall_sum += report.wall_elapsed_seconds;
            }
            row.push(cpu_sum / config.repetitions as f64);
            wall_row.push(wall_sum / config.repetitions as f64);
        }
        cells.push(row);
        wall.push(wall_row);
    }
    Ok(BenchTable::new(config.m_list.clone(), config.nproc_list.clone(), cells).with_wall(wall))
}

/// Speedup of a run taking `t` seconds over a reference taking `t_ref`.
pub fn speedup(t_ref: f64, t: f64) -> Result<f64, BenchError> {
    if !(t_ref > 0.0 && t > 0.0) {
        return Err(BenchError::NonPositiveTime { t_ref, t });
    }
    Ok(t_ref / t)
}

/// The worker count with the lowest time in row `m`; ties go to the smaller
/// count.
pub fn best_nproc(table: &BenchTable, m: u32) -> Result<u32, BenchError> {
    let row = table
        .m_values
        .iter()
        .position(|&v| v == m)
        .ok_or(BenchError::RowNotFound { m })?;
    let mut best = table.nproc_values[0];
    let mut best_time = table.cells[row][0];
    for (col, &nproc) in table.nproc_values.iter().enumerate().skip(1) {
        if table.cells[row][col] < best_time {
            best_time = table.cells[row][col];
            best = nproc;
        }
    }
    Ok(best)
}

/// Renders the table as text: one row per `m`, one column per `nproc`,
/// seconds with two decimals.
pub fn render_table(table: &BenchTable) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:>8}", "m\\nproc");
    for nproc in &table.nproc_values {
        let _ = write!(out, "{nproc:>10}");
    }
    out.push('\n');
    for (row, m) in table.m_values.iter().enumerate() {
        let _ = write!(out, "{m:>8}");
        for col in 0..table.nproc_values.len() {
            let _ = write!(out, "{:>10.2}", table.cells[row][col]);
        }
        out.push('\n');
    }
    out
}

/// Writes `m,nproc,seconds[,wall_seconds]` rows, header included, seconds in
/// full round-trip precision.
pub fn emit_csv(table: &BenchTable, path: &Path) -> Result<(), BenchError> {
    let mut text = String::new();
    let has_wall = table.wall.is_some();
    text.push_str(if has_wall {
        "m,nproc,seconds,wall_seconds\n"
    } else {
        "m,nproc,seconds\n"
    });
    for (row, m) in table.m_values.iter().enumerate() {
        for (col, nproc) in table.nproc_values.iter().enumerate() {
            let _ = write!(text, "{m},{nproc},{}", table.cells[row][col]);
            if let Some(wall) = table.wall_cell(row, col) {
                let _ = write!(text, ",{wall}");
            }
            text.push('\n');
        }
    }
    fs::write(path, text).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes one plot-data file per `m` row into `dir` (created if missing):
/// `m<m>.dat` with whitespace-separated `nproc seconds` columns, ready for
/// gnuplot or any similar tool.
pub fn emit_plot_data(table: &BenchTable, dir: &Path) -> Result<(), BenchError> {
    let io_err = |path: &Path, source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for (row, m) in table.m_values.iter().enumerate() {
        let path = dir.join(format!("m{m}.dat"));
        let mut text = format!("# m={m}\n# nproc seconds\n");
        for (col, nproc) in table.nproc_values.iter().enumerate() {
            let _ = writeln!(text, "{nproc} {}", table.cells[row][col]);
        }
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

/// The embedded reference table: summed worker CPU seconds by (m, nproc),
/// measured with value storage enabled. Used to regression-check the speedup
/// and best-worker-count analysis without running anything.
pub fn embedded_table1() -> BenchTable {
    BenchTable::new(
        vec![2, 4, 6],
        vec![2, 4, 6, 8, 10, 12, 14, 16],
        vec![
            vec![48.29, 27.70, 32.51, 22.56, 28.14, 31.34, 33.28, 35.04],
            vec![126.53, 65.21, 74.79, 54.27, 63.17, 74.29, 83.01, 91.34],
            vec![263.37, 109.48, 121.30, 78.41, 116.23, 125.69, 138.51, 145.93],
        ],
    )
}
