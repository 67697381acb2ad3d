//! Dense reference implementations used to check the fast paths.
//!
//! Everything here materializes the full tensors that the model never forms:
//! augmented feature vectors, per-view input tensors built by outer products,
//! and weight tensors reconstructed from their CP factors. The results are
//! exact but exponential in the number of modes, so every tensor is checked
//! against a size bound before it is allocated. Nothing in the prediction or
//! training paths calls into this module.

use ndarray::{concatenate, Array2, Axis};

use crate::data::{RelationalDataset, SparseSlice};
use crate::error::{Error, Result};
use crate::model::{FactorSet, ModelParams};
use crate::training::{empirical_risk, GradientSet};

/// Largest dense tensor the oracle will build.
pub const DEFAULT_SIZE_BOUND: usize = 1_000_000;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// A dense tensor in row-major order (last index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

fn checked_size(shape: &[usize], bound: usize) -> Result<usize> {
    let mut size: usize = 1;
    for &e in shape {
        size = size.checked_mul(e).ok_or(Error::SizeBound {
            requested: usize::MAX,
            bound,
        })?;
    }
    if size > bound {
        return Err(Error::SizeBound { requested: size, bound });
    }
    Ok(size)
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let size: usize = shape.iter().product();
        if size != values.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} holds {size} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data("dense tensor entries must be finite".into()));
        }
        Ok(DenseTensor { shape, values })
    }

    pub fn from_vector(v: Vec<f64>) -> Self {
        DenseTensor {
            shape: vec![v.len()],
            values: v,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        assert_eq!(index.len(), self.shape.len());
        let offset = index.iter().zip(&self.shape).fold(0, |acc, (&i, &e)| {
            assert!(i < e, "index {i} out of range for extent {e}");
            acc * e + i
        });
        self.values[offset]
    }

    /// `(X ∘ Y)_{i.., j..} = x_{i..} · y_{j..}`.
    pub fn outer(&self, other: &DenseTensor, bound: usize) -> Result<DenseTensor> {
        let shape: Vec<usize> = self.shape.iter().chain(&other.shape).copied().collect();
        let size = checked_size(&shape, bound)?;
        let mut values = Vec::with_capacity(size);
        for &x in &self.values {
            values.extend(other.values.iter().map(|&y| x * y));
        }
        Ok(DenseTensor { shape, values })
    }

    /// Sum of the entrywise products of two same-shaped tensors.
    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "inner product of shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self.values.iter().zip(&other.values).map(|(x, y)| x * y).sum())
    }
}

/// `[1; x]` as a dense vector.
pub fn augmented_vector(x: SparseSlice<'_>) -> Vec<f64> {
    let mut out = vec![0.0; x.dim() + 1];
    out[0] = 1.0;
    for (i, v) in x.iter() {
        out[i + 1] = v;
    }
    out
}

/// Outer product of the augmented vectors of one view's modes.
pub fn build_view_tensor(vectors: &[SparseSlice<'_>], bound: usize) -> Result<DenseTensor> {
    let shape: Vec<usize> = vectors.iter().map(|x| x.dim() + 1).collect();
    checked_size(&shape, bound)?;
    let mut t = DenseTensor {
        shape: Vec::new(),
        values: vec![1.0],
    };
    for x in vectors {
        t = t.outer(&DenseTensor::from_vector(augmented_vector(*x)), bound)?;
    }
    Ok(t)
}

/// `Σ_r a_r^(1) ∘ a_r^(2) ∘ … ∘ a_r^(K)` from factor matrices with a common
/// column count.
pub fn cp_reconstruct(factors: &[Array2<f64>], bound: usize) -> Result<DenseTensor> {
    let rank = match factors.first() {
        Some(f) => f.ncols(),
        None => return Err(Error::Shape("CP reconstruction needs at least one factor".into())),
    };
    if let Some(k) = factors.iter().position(|f| f.ncols() != rank) {
        return Err(Error::Shape(format!(
            "factor {k} has {} columns, expected {rank}",
            factors[k].ncols()
        )));
    }
    let shape: Vec<usize> = factors.iter().map(Array2::nrows).collect();
    let size = checked_size(&shape, bound)?;
    let mut total = vec![0.0; size];
    for r in 0..rank {
        let mut term = DenseTensor {
            shape: Vec::new(),
            values: vec![1.0],
        };
        for f in factors {
            term = term.outer(&DenseTensor::from_vector(f.column(r).to_vec()), bound)?;
        }
        for (t, x) in total.iter_mut().zip(&term.values) {
            *t += x;
        }
    }
    Ok(DenseTensor { shape, values: total })
}

/// [`oracle_predict_bounded`] with [`DEFAULT_SIZE_BOUND`].
pub fn oracle_predict(params: &ModelParams, sample: &[SparseSlice<'_>]) -> Result<f64> {
    oracle_predict_bounded(params, sample, DEFAULT_SIZE_BOUND)
}

/// Scores a sample as `Σ_v ⟨Ŵ^(v), X̃^(v) ∘ e_v⟩`, with each weight tensor
/// reconstructed from the factors `[b^(v,m); Θ^(m)]` of its modes and `Φ`.
pub fn oracle_predict_bounded(params: &ModelParams, sample: &[SparseSlice<'_>], bound: usize) -> Result<f64> {
    let schema = params.schema();
    if sample.len() != schema.num_modes() {
        return Err(Error::Shape(format!(
            "sample has {} mode vectors, schema has {} modes",
            sample.len(),
            schema.num_modes()
        )));
    }
    let f = params.factors();
    let num_views = schema.num_views();
    let mut score = 0.0;
    for (v, modes) in schema.views().iter().enumerate() {
        let mut factors: Vec<Array2<f64>> = modes
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let bias_row = f.bias[v].row(k).insert_axis(Axis(0));
                concatenate(Axis(0), &[bias_row, f.theta[m].view()]).expect("matching rank")
            })
            .collect();
        factors.push(f.phi.clone());
        let weights = cp_reconstruct(&factors, bound)?;

        let xs: Vec<SparseSlice<'_>> = modes.iter().map(|&m| sample[m]).collect();
        for (&m, x) in modes.iter().zip(&xs) {
            if x.dim() != schema.mode_dim(m) {
                return Err(Error::Shape(format!(
                    "mode {m} vector has dimension {}, expected {}",
                    x.dim(),
                    schema.mode_dim(m)
                )));
            }
        }
        let mut indicator = vec![0.0; num_views];
        indicator[v] = 1.0;
        let input = build_view_tensor(&xs, bound)?.outer(&DenseTensor::from_vector(indicator), bound)?;
        score += weights.inner(&input)?;
    }
    Ok(score)
}

/// Central differences of [`empirical_risk`] with respect to every scalar
/// parameter.
pub fn finite_diff_gradients(
    params: &ModelParams,
    dataset: &RelationalDataset,
    lambda: f64,
    step: f64,
) -> Result<GradientSet> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be > 0, got {step}")));
    }
    let mut probe = params.clone();
    let mut grad = FactorSet::zeros(params.schema(), params.rank());
    let sizes: Vec<usize> = params.factors().groups().iter().map(|(_, s)| s.len()).collect();
    for (g, &len) in sizes.iter().enumerate() {
        for i in 0..len {
            let original = probe.factors().groups()[g].1[i];
            probe.factors_mut().groups_mut()[g].1[i] = original + step;
            let (up, _) = empirical_risk(&probe, dataset, lambda)?;
            probe.factors_mut().groups_mut()[g].1[i] = original - step;
            let (down, _) = empirical_risk(&probe, dataset, lambda)?;
            probe.factors_mut().groups_mut()[g].1[i] = original;
            grad.groups_mut()[g].1[i] = (up - down) / (2.0 * step);
        }
    }
    Ok(grad)
}
