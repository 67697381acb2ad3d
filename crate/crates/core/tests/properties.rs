mod common;

use common::{max_relative_error, random_dataset, random_params, random_sample, random_schema, TINY};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfm_core::io::{dataset_stats, load_dataset, write_dataset};
use sfm_core::oracle::{finite_diff_gradients, oracle_predict, DEFAULT_FD_STEP};
use sfm_core::{
    compute_mode_caches, empirical_risk, gradients, leave_one_out_product, predict_batch, predict_naive, predict_one,
    RelationalDataset, SparseVector,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn slices(x: &[SparseVector]) -> Vec<sfm_core::SparseSlice<'_>> {
    x.iter().map(SparseVector::as_slice).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn factorized_score_equals_dense_tensor_score(seed: u64) {
        let mut r = rng(seed);
        let schema = random_schema(&mut r, TINY);
        let rank = r.random_range(1..=3);
        let p = random_params(&mut r, &schema, rank, 1.0);
        let x = random_sample(&mut r, &schema);
        let fast = predict_one(&p, &slices(&x)).unwrap();
        let dense = oracle_predict(&p, &slices(&x)).unwrap();
        prop_assert!((fast - dense).abs() <= 1e-9 * dense.abs().max(1.0), "{} vs {}", fast, dense);
    }

    #[test]
    fn cached_batch_equals_per_sample(seed: u64) {
        let mut r = rng(seed);
        let schema = random_schema(&mut r, TINY);
        let kp = r.random_range(1..=3);
        let p = random_params(&mut r, &schema, kp, 1.0);
        let kd = r.random_range(1..12);
        let d = random_dataset(&mut r, &schema, kd);
        let c = compute_mode_caches(&p, &d).unwrap();
        let batch = predict_batch(&p, &d, &c).unwrap();
        let naive = predict_naive(&p, &d).unwrap();
        for (a, b) in batch.iter().zip(&naive) {
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn score_is_linear_in_each_view_weight_row(seed: u64, alpha in -3.0f64..3.0) {
        let mut r = rng(seed);
        let schema = random_schema(&mut r, TINY);
        let kp = r.random_range(1..=3);
        let p = random_params(&mut r, &schema, kp, 1.0);
        let x = random_sample(&mut r, &schema);
        let v = r.random_range(0..schema.num_views());
        let score_with_row = |scale: f64| {
            let mut q = p.clone();
            q.factors_mut().phi.row_mut(v).mapv_inplace(|w| w * scale);
            predict_one(&q, &slices(&x)).unwrap()
        };
        let base = score_with_row(0.0);
        let lhs = score_with_row(alpha) - base;
        let rhs = alpha * (score_with_row(1.0) - base);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn analytic_gradients_match_finite_differences(seed: u64, lambda in prop_oneof![Just(0.0), 1e-3f64..0.5]) {
        let mut r = rng(seed);
        let schema = random_schema(&mut r, TINY);
        let kp = r.random_range(1..=3);
        let p = random_params(&mut r, &schema, kp, 0.7);
        let kd = r.random_range(1..8);
        let d = random_dataset(&mut r, &schema, kd);
        let (_, res) = empirical_risk(&p, &d, lambda).unwrap();
        let c = compute_mode_caches(&p, &d).unwrap();
        let g = gradients(&p, &d, &c, &res, lambda).unwrap();
        let fd = finite_diff_gradients(&p, &d, lambda, DEFAULT_FD_STEP).unwrap();
        let err = max_relative_error(&g, &fd);
        prop_assert!(err <= 1e-4, "relative error {}", err);
    }

    #[test]
    fn leave_one_out_matches_direct_product(
        factors in proptest::collection::vec(proptest::collection::vec(prop_oneof![Just(0.0), -2.0f64..2.0], 3), 2..6),
        pick in 0usize..6,
    ) {
        let k = pick % factors.len();
        let refs: Vec<&[f64]> = factors.iter().map(Vec::as_slice).collect();
        let got = leave_one_out_product(&refs, k).unwrap();
        for i in 0..3 {
            let direct: f64 = factors.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, f)| f[i]).product();
            prop_assert!((got[i] - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn plain_reconstruction_round_trips(seed: u64) {
        let mut r = rng(seed);
        let schema = random_schema(&mut r, TINY);
        let kd = r.random_range(0..12);
        let d = random_dataset(&mut r, &schema, kd);
        let e = RelationalDataset::from_plain(schema, &d.to_plain(), d.labels().to_vec()).unwrap();
        for n in 0..d.num_samples() {
            prop_assert_eq!(d.sample_view(n).unwrap(), e.sample_view(n).unwrap());
        }
        let stats = dataset_stats(&d);
        let nnz: usize = d.blocks().iter().map(|b| b.nnz()).sum();
        prop_assert_eq!(stats.nnz_blocks, d.num_samples() * schema_modes(&d) + nnz);
    }

    #[test]
    fn parameter_count_is_linear_in_features(seed: u64, rank in 1usize..30) {
        let mut r = rng(seed);
        let schema = random_schema(&mut r, common::Limits { max_modes: 8, max_views: 6, max_dim: 500, max_rank: 30 });
        let p = sfm_core::ModelParams::zeros(schema.clone(), rank).unwrap();
        prop_assert_eq!(
            p.num_parameters(),
            rank * (schema.total_features() + schema.total_view_modes() + schema.num_views())
        );
    }
}

fn schema_modes(d: &RelationalDataset) -> usize {
    d.schema().num_modes()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dataset_files_round_trip(seed: u64) {
        let mut r = rng(seed);
        let schema = random_schema(&mut r, TINY);
        let kd = r.random_range(0..10);
        let d = random_dataset(&mut r, &schema, kd);
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&d, dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        prop_assert_eq!(&loaded, &d);

        let again = tempfile::tempdir().unwrap();
        write_dataset(&loaded, again.path()).unwrap();
        for entry in std::fs::read_dir(dir.path()).unwrap() {
            let name = entry.unwrap().file_name();
            let a = std::fs::read(dir.path().join(&name)).unwrap();
            let b = std::fs::read(again.path().join(&name)).unwrap();
            prop_assert_eq!(a, b, "{:?} differs", name);
        }
    }
}
