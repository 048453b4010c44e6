//! Shared inputs for the criterion benchmarks in `benches/`.

use spmd_core::bench::DEFAULT_EXPRESSION;
use spmd_core::Expr;

/// The parsed default workload expression.
pub fn workload_ast() -> Expr {
    spmd_core::expr::parse(DEFAULT_EXPRESSION).expect("default expression parses")
}

/// `count` grid points at the default 0.001 step.
pub fn sample_grid(count: u64) -> Vec<f64> {
    spmd_core::grid::sample_points(0, count - 1, 0.001)
}
