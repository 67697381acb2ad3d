//! Shared fixtures for the benchmarks.

use sfm_core::io::{gen_synthetic, SyntheticConfig};
use sfm_core::{ModelParams, RelationalDataset, Schema};

/// Three modes of dimension 2000 in two views, `[0, 1, 2]` and `[1, 2]`.
pub fn three_mode_schema() -> Schema {
    Schema::new(vec![2000; 3], vec![vec![0, 1, 2], vec![1, 2]]).expect("valid schema")
}

/// Synthetic data where every entity recurs about `repetition` times,
/// together with the planted model that labeled it.
pub fn fixture(num_samples: usize, repetition: usize, rank: usize, nnz: usize) -> (RelationalDataset, ModelParams) {
    let schema = three_mode_schema();
    let mut cfg = SyntheticConfig::new(num_samples, vec![(num_samples / repetition).max(1); 3], rank, 0.1, 17);
    cfg.nnz_per_column = nnz;
    gen_synthetic(&schema, &cfg).expect("valid synthetic config")
}
