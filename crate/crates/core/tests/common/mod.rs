#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use sfm_core::{FactorSet, ModelParams, RelationalDataset, Schema, SparseVector};

/// Limits for random desk-scale instances.
#[derive(Clone, Copy)]
pub struct Limits {
    pub max_modes: usize,
    pub max_views: usize,
    pub max_dim: usize,
    pub max_rank: usize,
}

pub const TINY: Limits = Limits {
    max_modes: 4,
    max_views: 3,
    max_dim: 4,
    max_rank: 3,
};

pub fn random_schema<R: Rng>(rng: &mut R, limits: Limits) -> Schema {
    let num_modes = rng.random_range(2..=limits.max_modes);
    let num_views = rng.random_range(1..=limits.max_views);
    let dims: Vec<usize> = (0..num_modes).map(|_| rng.random_range(1..=limits.max_dim)).collect();
    let mut views: Vec<Vec<usize>> = (0..num_views)
        .map(|_| {
            let mut modes: Vec<usize> = (0..num_modes).collect();
            modes.shuffle(rng);
            modes.truncate(rng.random_range(2..=num_modes));
            modes
        })
        .collect();
    for m in 0..num_modes {
        if !views.iter().any(|v| v.contains(&m)) {
            let v = rng.random_range(0..num_views);
            let at = rng.random_range(0..=views[v].len());
            views[v].insert(at, m);
        }
    }
    Schema::new(dims, views).expect("valid random schema")
}

pub fn random_params<R: Rng>(rng: &mut R, schema: &Schema, rank: usize, scale: f64) -> ModelParams {
    let mut f = FactorSet::zeros(schema, rank);
    for (_, g) in f.groups_mut() {
        for x in g.iter_mut() {
            *x = scale * rng.sample::<f64, _>(StandardNormal);
        }
    }
    ModelParams::new(schema.clone(), f).unwrap()
}

pub fn random_vector<R: Rng>(rng: &mut R, dim: usize) -> SparseVector {
    let density = rng.random_range(0.0..=1.0);
    let dense: Vec<f64> = (0..dim)
        .map(|_| {
            if rng.random_bool(density) {
                rng.sample(StandardNormal)
            } else {
                0.0
            }
        })
        .collect();
    SparseVector::from_dense(&dense).unwrap()
}

pub fn random_sample<R: Rng>(rng: &mut R, schema: &Schema) -> Vec<SparseVector> {
    schema.mode_dims().iter().map(|&d| random_vector(rng, d)).collect()
}

/// A dataset whose samples reuse a small pool of entities per mode.
pub fn random_dataset<R: Rng>(rng: &mut R, schema: &Schema, num_samples: usize) -> RelationalDataset {
    let pools: Vec<Vec<SparseVector>> = schema
        .mode_dims()
        .iter()
        .map(|&d| (0..rng.random_range(1..=3)).map(|_| random_vector(rng, d)).collect())
        .collect();
    let samples: Vec<Vec<SparseVector>> = (0..num_samples)
        .map(|_| pools.iter().map(|p| p[rng.random_range(0..p.len())].clone()).collect())
        .collect();
    let labels = (0..num_samples).map(|_| rng.sample(StandardNormal)).collect();
    RelationalDataset::from_plain(schema.clone(), &samples, labels).unwrap()
}

/// max |a - b| / max(1, |a|) over every parameter.
pub fn max_relative_error(analytic: &FactorSet, numeric: &FactorSet) -> f64 {
    analytic
        .groups()
        .iter()
        .zip(numeric.groups())
        .map(|((_, a), (_, b))| slice_relative_error(a, b))
        .fold(0.0, f64::max)
}

pub fn slice_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max)
}
