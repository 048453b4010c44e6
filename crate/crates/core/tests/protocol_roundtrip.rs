//! Property tests for the on-disk formats: whatever is written must read
//! back bitwise, NaN included.

use std::path::Path;

use proptest::prelude::*;
use spmd_core::protocol::{
    read_result, read_worker_spec, write_result, write_worker_spec, WorkerResult, WorkerSpec,
};

fn arb_value() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => -1e300f64..1e300,
        1 => Just(f64::NAN),
        1 => Just(f64::INFINITY),
        1 => Just(f64::NEG_INFINITY),
        1 => Just(-0.0f64),
        1 => Just(0.0f64),
        1 => Just(5e-324f64), // smallest subnormal
    ]
}

fn arb_expression() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "x".to_string(),
        "x+1".to_string(),
        "2*x - 1/x".to_string(),
        "5432.060708*cos((sin(x^9.876))^-1.2345)".to_string(),
        "y = sqrt(abs(x))".to_string(),
        "log10(exp(x))^2".to_string(),
    ])
}

fn bits(values: &[f64]) -> Vec<u64> {
    values.iter().map(|v| v.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn worker_spec_round_trips(
        rank in 0u32..10_000,
        start in 0u64..1_000_000,
        len in 0u64..1_000_000,
        step in prop_oneof![Just(0.001f64), Just(0.5f64), 1e-6f64..1e3],
        expression in arb_expression(),
        store_values in any::<bool>(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let spec = WorkerSpec {
            rank,
            start_index: start,
            end_index: start + len,
            step,
            expression,
            store_values,
            workdir: dir.path().to_path_buf(),
        };
        let path = write_worker_spec(&spec).unwrap();
        let back = read_worker_spec(&path).unwrap();
        prop_assert_eq!(back.rank, spec.rank);
        prop_assert_eq!(back.start_index, spec.start_index);
        prop_assert_eq!(back.end_index, spec.end_index);
        prop_assert_eq!(back.step.to_bits(), spec.step.to_bits());
        prop_assert_eq!(&back.expression, &spec.expression);
        prop_assert_eq!(back.store_values, spec.store_values);
        prop_assert_eq!(back.workdir.as_path(), dir.path());
    }

    #[test]
    fn worker_result_round_trips(
        rank in 0u32..10_000,
        cpu_seconds in 0.0f64..1e6,
        nan_count in 0u64..1000,
        values in prop::collection::vec(arb_value(), 0..64),
        stored in any::<bool>(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let result = WorkerResult {
            rank,
            cpu_seconds,
            nan_count,
            value_count: values.len() as u64,
            values: if stored { values } else { Vec::new() },
        };
        write_result(dir.path(), &result).unwrap();
        let back = read_result(dir.path(), rank).unwrap();
        prop_assert_eq!(back.rank, result.rank);
        prop_assert_eq!(back.cpu_seconds.to_bits(), result.cpu_seconds.to_bits());
        prop_assert_eq!(back.nan_count, result.nan_count);
        prop_assert_eq!(back.value_count, result.value_count);
        prop_assert_eq!(bits(&back.values), bits(&result.values));
    }
}

#[test]
fn nan_positions_survive_a_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let values = vec![f64::NAN, 1.0, f64::NAN, -0.0, f64::INFINITY];
    let result = WorkerResult {
        rank: 0,
        cpu_seconds: 0.0,
        nan_count: 2,
        value_count: values.len() as u64,
        values,
    };
    write_result(dir.path(), &result).unwrap();
    let back = read_result(dir.path(), 0).unwrap();
    let nan_positions: Vec<usize> = back
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_nan())
        .map(|(i, _)| i)
        .collect();
    assert_eq!(nan_positions, vec![0, 2]);
    assert_eq!(back.values[3].to_bits(), (-0.0f64).to_bits());
}

#[test]
fn workdir_round_trips_even_for_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let prev = std::env::current_dir().unwrap();
    std::env::set_current_dir(dir.path()).unwrap();
    let spec = WorkerSpec {
        rank: 0,
        start_index: 0,
        end_index: 1,
        step: 0.5,
        expression: "x".into(),
        store_values: true,
        workdir: Path::new(".").to_path_buf(),
    };
    let path = write_worker_spec(&spec).unwrap();
    let back = read_worker_spec(&path).unwrap();
    std::env::set_current_dir(prev).unwrap();
    assert_eq!(back.workdir, Path::new(".").to_path_buf());
}
