//! Sample grid definition and its partitioning across workers.
//!
//! The global grid is the arithmetic sequence `0, step, 2*step, ..., maxvalue`,
//! addressed by integer index. Partitioning happens in index space, not value
//! space: every worker derives its sample points as `k * step` from global
//! indices, so concatenating the per-worker point blocks reproduces the
//! single-pass grid bitwise for any worker count.

use thiserror::Error;

/// Relative tolerance for `maxvalue` sitting on the step grid.
const ALIGNMENT_TOLERANCE: f64 = 1e-9;

/// Largest index count still exactly representable in an f64.
const MAX_POINTS: f64 = 9_007_199_254_740_992.0; // 2^53

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("maxvalue must be positive and finite, got {0}")]
    InvalidMaxvalue(f64),
    #[error("maxvalue {maxvalue} is not a multiple of step {step} (within 1e-9 relative)")]
    Misaligned { maxvalue: f64, step: f64 },
    #[error("grid would have about {0} points, too many to index exactly")]
    TooManyPoints(f64),
    #[error("nproc must be between 1 and {max}, got {nproc}")]
    InvalidPartitioning { nproc: u32, max: u64 },
    #[error("grid index {index} out of range 0..={last}")]
    IndexOutOfRange { index: u64, last: u64 },
}

/// The global sample grid `0:step:maxvalue`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    maxvalue: f64,
    step: f64,
    last_index: u64,
}

impl GridSpec {
    /// Builds a grid, checking that `maxvalue` is a step multiple. The number
    /// of steps is `round(maxvalue / step)`; inputs farther than 1e-9
    /// relative from the nearest multiple are rejected rather than silently
    /// truncated.
    pub fn new(maxvalue: f64, step: f64) -> Result<GridSpec, GridError> {
        if !(step.is_finite() && step > 0.0) {
            return Err(GridError::InvalidStep(step));
        }
        if !(maxvalue.is_finite() && maxvalue > 0.0) {
            return Err(GridError::InvalidMaxvalue(maxvalue));
        }
        let ratio = (maxvalue / step).round();
        if ratio >= MAX_POINTS {
            return Err(GridError::TooManyPoints(ratio));
        }
        if ratio < 1.0 || (ratio * step - maxvalue).abs() > ALIGNMENT_TOLERANCE * maxvalue {
            return Err(GridError::Misaligned { maxvalue, step });
        }
        Ok(GridSpec {
            maxvalue,
            step,
            last_index: ratio as u64,
        })
    }

    pub fn maxvalue(&self) -> f64 {
        self.maxvalue
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Index of the last grid point, i.e. `maxvalue / step`.
    pub fn last_index(&self) -> u64 {
        self.last_index
    }

    /// Total number of sample points, `last_index + 1`.
    pub fn point_count(&self) -> u64 {
        self.last_index + 1
    }
}

/// One worker's contiguous slice of the global grid, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Partition {
    pub rank: u32,
    pub start_index: u64,
    pub end_index: u64,
}

impl Partition {
    /// Number of grid points this partition owns.
    pub fn point_count(&self) -> u64 {
        self.end_index - self.start_index + 1
    }
}

/// Splits grid indices `{0..=last_index}` into `nproc` contiguous ranges.
///
/// Ranges are disjoint, ordered by rank, cover the grid exactly, and differ
/// in size by at most one point; when the sizes cannot all be equal the
/// larger ranges go to the lower ranks, so an interior range boundary always
/// belongs to the lower-ranked worker.
pub fn plan_partitions(grid: &GridSpec, nproc: u32) -> Result<Vec<Partition>, GridError> {
    let last = grid.last_index();
    if nproc < 1 || nproc as u64 > last {
        return Err(GridError::InvalidPartitioning { nproc, max: last });
    }
    let points = last as u128 + 1;
    let q = nproc as u128;
    let boundary = |i: u128| -> u64 {
        // ceil(i * points / q): front-loads the remainder onto low ranks.
        (i * points).div_ceil(q) as u64
    };
    let mut partitions = Vec::with_capacity(nproc as usize);
    for rank in 0..nproc {
        let start = boundary(rank as u128);
        let end = boundary(rank as u128 + 1) - 1;
        partitions.push(Partition {
            rank,
            start_index: start,
            end_index: end,
        });
    }
    Ok(partitions)
}

/// Value of grid point `k`, computed as the single multiplication `k * step`
/// so every process derives bitwise-identical points from global indices.
pub fn grid_point(k: u64, grid: &GridSpec) -> Result<f64, GridError> {
    if k > grid.last_index() {
        return Err(GridError::IndexOutOfRange {
            index: k,
            last: grid.last_index(),
        });
    }
    Ok(k as f64 * grid.step())
}

/// Sample points for global indices `start_index..=end_index`, each computed
/// as `k * step`. This is the shared kernel behind [`partition_points`] and
/// the worker's point generation.
pub fn sample_points(start_index: u64, end_index: u64, step: f64) -> Vec<f64> {
    (start_index..=end_index).map(|k| k as f64 * step).collect()
}

/// The sample points owned by one partition, in index order.
pub fn partition_points(p: &Partition, grid: &GridSpec) -> Result<Vec<f64>, GridError> {
    if p.start_index > p.end_index || p.end_index > grid.last_index() {
        return Err(GridError::IndexOutOfRange {
            index: p.end_index,
            last: grid.last_index(),
        });
    }
    Ok(sample_points(p.start_index, p.end_index, grid.step()))
}
