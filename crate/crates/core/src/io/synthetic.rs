//! Planted-model data generation.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::{RelationalBlock, RelationalDataset, SparseVector};
use crate::error::{Error, Result};
use crate::model::{compute_mode_caches, fill_normal, predict_batch, FactorSet, ModelParams};
use crate::schema::Schema;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    /// N.
    pub num_samples: usize,
    /// N_m for every mode.
    pub distinct_columns: Vec<usize>,
    /// Rank of the planted model.
    pub rank: usize,
    pub noise_std: f64,
    /// Non-zeros per block column, capped at the mode dimension.
    pub nnz_per_column: usize,
    /// Std of the planted `Θ` entries. Columns have unit ℓ2 norm, so this is
    /// also the std of every projection entry.
    pub theta_std: f64,
    /// Std of the Gaussian perturbation added to the all-ones bias rows.
    pub bias_jitter: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn new(num_samples: usize, distinct_columns: Vec<usize>, rank: usize, noise_std: f64, seed: u64) -> Self {
        SyntheticConfig {
            num_samples,
            distinct_columns,
            rank,
            noise_std,
            nnz_per_column: 5,
            theta_std: 0.5,
            bias_jitter: 0.1,
            seed,
        }
    }
}

fn random_column<R: Rng + ?Sized>(dim: usize, nnz: usize, rng: &mut R) -> SparseVector {
    let nnz = nnz.min(dim);
    let mut idx = index::sample(rng, dim, nnz).into_vec();
    idx.sort_unstable();
    let mut values: Vec<f64> = (0..nnz)
        .map(|_| loop {
            let x: f64 = StandardNormal.sample(rng);
            if x != 0.0 {
                break x;
            }
        })
        .collect();
    let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut values {
        *x /= norm;
    }
    SparseVector::from_parts(dim, idx, values).expect("valid random column")
}

/// Draws planted parameters, random unit-norm block columns and uniform
/// mappings, then labels every sample with the planted score plus Gaussian
/// noise. Returns the dataset and the planted parameters.
pub fn gen_synthetic(schema: &Schema, config: &SyntheticConfig) -> Result<(RelationalDataset, ModelParams)> {
    let n = config.num_samples;
    if config.distinct_columns.len() != schema.num_modes() {
        return Err(Error::Config(format!(
            "{} column counts for {} modes",
            config.distinct_columns.len(),
            schema.num_modes()
        )));
    }
    if let Some((m, &c)) = config
        .distinct_columns
        .iter()
        .enumerate()
        .find(|(_, &c)| c > n || (c == 0 && n > 0))
    {
        return Err(Error::Config(format!(
            "mode {m}: {c} distinct columns for {n} samples (need 1..=N)"
        )));
    }
    if config.rank == 0 {
        return Err(Error::Config("planted rank must be >= 1".into()));
    }
    for (name, x) in [
        ("noise std", config.noise_std),
        ("theta std", config.theta_std),
        ("bias jitter", config.bias_jitter),
    ] {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::Config(format!("{name} must be finite and >= 0, got {x}")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let r = config.rank;
    let mut f = FactorSet::zeros(schema, r);
    for t in &mut f.theta {
        fill_normal(t, config.theta_std, &mut rng);
    }
    for b in &mut f.bias {
        fill_normal(b, config.bias_jitter, &mut rng);
        b.mapv_inplace(|x| x + 1.0);
    }
    fill_normal(&mut f.phi, 1.0 / (r as f64).sqrt(), &mut rng);
    let truth = ModelParams::new(schema.clone(), f)?;

    let mut blocks = Vec::with_capacity(schema.num_modes());
    for (m, &cols) in config.distinct_columns.iter().enumerate() {
        let dim = schema.mode_dim(m);
        let columns: Vec<SparseVector> = (0..cols)
            .map(|_| random_column(dim, config.nnz_per_column, &mut rng))
            .collect();
        let mapping = (0..n).map(|_| rng.random_range(0..cols)).collect();
        blocks.push(RelationalBlock::new(m, dim, &columns, mapping)?);
    }
    let unlabeled = RelationalDataset::new(schema.clone(), blocks, vec![0.0; n])?;
    let caches = compute_mode_caches(&truth, &unlabeled)?;
    let mut labels = predict_batch(&truth, &unlabeled, &caches)?;
    if config.noise_std > 0.0 {
        let noise = Normal::new(0.0, config.noise_std).expect("valid std");
        for y in &mut labels {
            *y += noise.sample(&mut rng);
        }
    }
    Ok((unlabeled.with_labels(labels)?, truth))
}

/// Deterministic split of `0..n` into consecutive train/val/test index
/// ranges after a seeded shuffle.
pub fn split_indices(n: usize, val_fraction: f64, test_fraction: f64, seed: u64) -> Result<[Vec<usize>; 3]> {
    use rand::seq::SliceRandom;
    if !(val_fraction >= 0.0 && test_fraction >= 0.0 && val_fraction + test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "split fractions must be >= 0 and sum below 1, got {val_fraction} and {test_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = (n as f64 * val_fraction).round() as usize;
    let n_test = (n as f64 * test_fraction).round() as usize;
    let test = order.split_off(n - n_test);
    let val = order.split_off(n - n_test - n_val);
    Ok([order, val, test])
}
