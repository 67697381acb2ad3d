//! The factorized predictive function and its relational-cache form.
//!
//! For a sample with per-mode features `x^(m)`, every mode is projected into
//! the shared latent space, `h^(m) = Θ^(m)ᵀ x^(m)`. Each view `v` combines its
//! modes by a Hadamard product of the biased projections,
//! `π^(v) = ∗_{m ∈ S_M(v)} (h^(m) + b^(v,m))`, and the score is
//! `f = Σ_v φ^v · π^(v)`. The per-view weight tensors are never formed.
//!
//! With relational blocks the projections are computed once per distinct
//! column ([`compute_mode_caches`]) and looked up per sample
//! ([`predict_batch`]).

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{RelationalDataset, SparseSlice};
use crate::error::{Error, Result};
use crate::schema::Schema;

static NEXT_REVISION: AtomicU64 = AtomicU64::new(1);

fn fresh_revision() -> u64 {
    NEXT_REVISION.fetch_add(1, Ordering::Relaxed)
}

/// Identifies one parameter group, used in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    Theta { mode: usize },
    Bias { view: usize },
    Phi,
}

impl fmt::Display for ParamGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamGroup::Theta { mode } => write!(f, "theta (mode {mode})"),
            ParamGroup::Bias { view } => write!(f, "bias (view {view})"),
            ParamGroup::Phi => write!(f, "phi"),
        }
    }
}

/// Arrays shaped like the model parameters. Used for the parameters
/// themselves, for gradients, and for optimizer moments.
///
/// * `theta[m]` is `I_m × R`; row `i` is the latent vector of feature `i`.
/// * `bias[v]` is `M_v × R`; row `k` is `b^(v, m)` for the `k`-th mode of view `v`.
/// * `phi` is `V × R`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    pub theta: Vec<Array2<f64>>,
    pub bias: Vec<Array2<f64>>,
    pub phi: Array2<f64>,
}

impl FactorSet {
    pub fn zeros(schema: &Schema, rank: usize) -> Self {
        FactorSet {
            theta: schema.mode_dims().iter().map(|&d| Array2::zeros((d, rank))).collect(),
            bias: schema
                .views()
                .iter()
                .map(|ms| Array2::zeros((ms.len(), rank)))
                .collect(),
            phi: Array2::zeros((schema.num_views(), rank)),
        }
    }

    pub fn rank(&self) -> usize {
        self.phi.ncols()
    }

    pub fn num_parameters(&self) -> usize {
        self.theta.iter().map(Array2::len).sum::<usize>()
            + self.bias.iter().map(Array2::len).sum::<usize>()
            + self.phi.len()
    }

    /// Every group as a flat row-major slice, in the order theta, bias, phi.
    pub fn groups(&self) -> Vec<(ParamGroup, &[f64])> {
        let mut out = Vec::with_capacity(self.theta.len() + self.bias.len() + 1);
        for (mode, t) in self.theta.iter().enumerate() {
            out.push((ParamGroup::Theta { mode }, t.as_slice().expect("standard layout")));
        }
        for (view, b) in self.bias.iter().enumerate() {
            out.push((ParamGroup::Bias { view }, b.as_slice().expect("standard layout")));
        }
        out.push((ParamGroup::Phi, self.phi.as_slice().expect("standard layout")));
        out
    }

    pub fn groups_mut(&mut self) -> Vec<(ParamGroup, &mut [f64])> {
        let mut out = Vec::with_capacity(self.theta.len() + self.bias.len() + 1);
        for (mode, t) in self.theta.iter_mut().enumerate() {
            out.push((ParamGroup::Theta { mode }, t.as_slice_mut().expect("standard layout")));
        }
        for (view, b) in self.bias.iter_mut().enumerate() {
            out.push((ParamGroup::Bias { view }, b.as_slice_mut().expect("standard layout")));
        }
        out.push((ParamGroup::Phi, self.phi.as_slice_mut().expect("standard layout")));
        out
    }

    pub fn same_shape(&self, other: &FactorSet) -> bool {
        self.theta.len() == other.theta.len()
            && self.bias.len() == other.bias.len()
            && self.theta.iter().zip(&other.theta).all(|(a, b)| a.dim() == b.dim())
            && self.bias.iter().zip(&other.bias).all(|(a, b)| a.dim() == b.dim())
            && self.phi.dim() == other.phi.dim()
    }

    fn check_schema(&self, schema: &Schema) -> Result<()> {
        let rank = self.rank();
        let expected = FactorSet::zeros(schema, rank);
        if !self.same_shape(&expected) {
            return Err(Error::Shape(format!(
                "factor shapes do not match the schema at rank {rank}"
            )));
        }
        Ok(())
    }

    /// First non-finite entry, if any.
    pub fn find_non_finite(&self) -> Option<(ParamGroup, usize)> {
        self.groups()
            .into_iter()
            .find_map(|(g, s)| s.iter().position(|x| !x.is_finite()).map(|i| (g, i)))
    }
}

/// Learned parameters of a structural factorization machine.
///
/// Every mutable borrow of the factors assigns a new revision so that
/// [`ModeCaches`] built from older values are rejected.
#[derive(Debug, Clone)]
pub struct ModelParams {
    schema: Schema,
    factors: FactorSet,
    revision: u64,
}

impl PartialEq for ModelParams {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.factors == other.factors
    }
}

impl ModelParams {
    pub fn new(schema: Schema, factors: FactorSet) -> Result<Self> {
        if factors.rank() == 0 {
            return Err(Error::Shape("rank must be at least 1".into()));
        }
        factors.check_schema(&schema)?;
        if let Some((g, i)) = factors.find_non_finite() {
            return Err(Error::Data(format!("non-finite parameter in {g} at offset {i}")));
        }
        Ok(ModelParams {
            schema,
            factors,
            revision: fresh_revision(),
        })
    }

    pub fn zeros(schema: Schema, rank: usize) -> Result<Self> {
        let factors = FactorSet::zeros(&schema, rank);
        Self::new(schema, factors)
    }

    /// Variance-scaling initialization: `Θ^(m)` entries ~ N(0, σ/I_m),
    /// `Φ` entries ~ N(0, σ/R), bias rows all ones.
    pub fn init_variance_scaling<R: Rng + ?Sized>(
        schema: Schema,
        rank: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if rank == 0 {
            return Err(Error::Shape("rank must be at least 1".into()));
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::Config(format!(
                "init scale must be finite and >= 0, got {scale}"
            )));
        }
        let mut f = FactorSet::zeros(&schema, rank);
        for (m, t) in f.theta.iter_mut().enumerate() {
            fill_normal(t, (scale / schema.mode_dim(m) as f64).sqrt(), rng);
        }
        for b in &mut f.bias {
            b.fill(1.0);
        }
        fill_normal(&mut f.phi, (scale / rank as f64).sqrt(), rng);
        Self::new(schema, f)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rank(&self) -> usize {
        self.factors.rank()
    }

    pub fn factors(&self) -> &FactorSet {
        &self.factors
    }

    /// Mutable access; invalidates caches built from the current values.
    /// Array shapes must be left unchanged.
    pub fn factors_mut(&mut self) -> &mut FactorSet {
        self.revision = fresh_revision();
        &mut self.factors
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn num_parameters(&self) -> usize {
        self.factors.num_parameters()
    }

    pub fn into_factors(self) -> FactorSet {
        self.factors
    }
}

pub(crate) fn fill_normal<R: Rng + ?Sized>(a: &mut Array2<f64>, std: f64, rng: &mut R) {
    if std == 0.0 {
        a.fill(0.0);
        return;
    }
    let normal = Normal::new(0.0, std).expect("finite positive std");
    for x in a.iter_mut() {
        *x = normal.sample(rng);
    }
}

/// Per-mode projections of every distinct block column, tagged with the
/// params revision they were computed from.
///
/// Stored as `N_m × R` so that each cached column is contiguous.
#[derive(Debug, Clone)]
pub struct ModeCaches {
    revision: u64,
    caches: Vec<Array2<f64>>,
}

impl ModeCaches {
    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn num_modes(&self) -> usize {
        self.caches.len()
    }

    /// Number of cached columns for `mode`.
    pub fn num_columns(&self, mode: usize) -> usize {
        self.caches[mode].nrows()
    }

    /// `h^B(m)_j`, length R.
    pub fn column(&self, mode: usize, j: usize) -> &[f64] {
        let r = self.caches[mode].ncols();
        &self.caches[mode].as_slice().expect("standard layout")[j * r..(j + 1) * r]
    }

    /// Fails unless these caches were built from `params` and fit `dataset`.
    pub fn check_current(&self, params: &ModelParams, dataset: &RelationalDataset) -> Result<()> {
        if self.revision != params.revision() {
            return Err(Error::StaleCache {
                cached: self.revision,
                current: params.revision(),
            });
        }
        if self.caches.len() != dataset.schema().num_modes() {
            return Err(Error::Shape(format!(
                "caches cover {} modes, dataset has {}",
                self.caches.len(),
                dataset.schema().num_modes()
            )));
        }
        for (m, (c, b)) in self.caches.iter().zip(dataset.blocks()).enumerate() {
            if c.nrows() != b.num_columns() || c.ncols() != params.rank() {
                return Err(Error::Shape(format!(
                    "mode {m} cache is {}x{}, block has {} columns at rank {}",
                    c.nrows(),
                    c.ncols(),
                    b.num_columns(),
                    params.rank()
                )));
            }
        }
        Ok(())
    }
}

fn check_same_schema(params: &ModelParams, dataset: &RelationalDataset) -> Result<()> {
    let (a, b) = (params.schema(), dataset.schema());
    if a == b {
        return Ok(());
    }
    let detail = if a.num_modes() != b.num_modes() {
        format!("model has {} modes, dataset has {}", a.num_modes(), b.num_modes())
    } else if let Some(m) = (0..a.num_modes()).find(|&m| a.mode_dim(m) != b.mode_dim(m)) {
        format!(
            "mode {m} has dimension {} in the model, {} in the dataset",
            a.mode_dim(m),
            b.mode_dim(m)
        )
    } else {
        format!("views differ: model {:?}, dataset {:?}", a.views(), b.views())
    };
    Err(Error::Schema(format!("model and dataset schemas differ: {detail}")))
}

/// `out = Θᵀ x`, accumulated over the non-zeros of `x` in index order.
pub(crate) fn project(theta: &Array2<f64>, x: SparseSlice<'_>, out: &mut [f64]) {
    out.fill(0.0);
    let r = out.len();
    let t = theta.as_slice().expect("standard layout");
    for (i, v) in x.iter() {
        for (o, w) in out.iter_mut().zip(&t[i * r..(i + 1) * r]) {
            *o += v * w;
        }
    }
}

/// Computes `H^B(m) = Θ^(m)ᵀ X^B(m)` for every mode.
pub fn compute_mode_caches(params: &ModelParams, dataset: &RelationalDataset) -> Result<ModeCaches> {
    check_same_schema(params, dataset)?;
    let rank = params.rank();
    let caches = dataset
        .blocks()
        .iter()
        .zip(&params.factors().theta)
        .map(|(block, theta)| {
            let mut h = Array2::zeros((block.num_columns(), rank));
            let flat = h.as_slice_mut().expect("standard layout");
            for (j, col) in block.columns().enumerate() {
                project(theta, col, &mut flat[j * rank..(j + 1) * rank]);
            }
            h
        })
        .collect();
    Ok(ModeCaches {
        revision: params.revision(),
        caches,
    })
}

fn check_lengths(vectors: &[&[f64]], what: &str) -> Result<usize> {
    let r = vectors.first().map_or(0, |v| v.len());
    if let Some(k) = vectors.iter().position(|v| v.len() != r) {
        return Err(Error::Shape(format!(
            "{what} {k} has length {}, expected {r}",
            vectors[k].len()
        )));
    }
    Ok(r)
}

/// `π = ∗_k (h_k + b_k)`, multiplied left to right.
pub fn view_product(projections: &[&[f64]], bias_rows: &[&[f64]]) -> Result<Vec<f64>> {
    if projections.is_empty() || projections.len() != bias_rows.len() {
        return Err(Error::Shape(format!(
            "{} projections for {} bias rows",
            projections.len(),
            bias_rows.len()
        )));
    }
    let r = check_lengths(projections, "projection")?;
    if check_lengths(bias_rows, "bias row")? != r {
        return Err(Error::Shape("bias rows and projections differ in length".into()));
    }
    let mut pi: Vec<f64> = projections[0].iter().zip(bias_rows[0]).map(|(h, b)| h + b).collect();
    for (h, b) in projections[1..].iter().zip(&bias_rows[1..]) {
        for ((p, h), b) in pi.iter_mut().zip(*h).zip(*b) {
            *p *= h + b;
        }
    }
    Ok(pi)
}

/// Product of every factor except `excluded`, computed as
/// prefix[excluded] ∗ suffix[excluded + 1] so zero factors need no care.
pub fn leave_one_out_product(factors: &[&[f64]], excluded: usize) -> Result<Vec<f64>> {
    if excluded >= factors.len() {
        return Err(Error::Shape(format!(
            "cannot exclude factor {excluded} of a view with {} modes",
            factors.len()
        )));
    }
    let r = check_lengths(factors, "factor")?;
    let mut prefix = vec![1.0; r];
    for f in &factors[..excluded] {
        for (p, x) in prefix.iter_mut().zip(*f) {
            *p *= x;
        }
    }
    let mut suffix = vec![1.0; r];
    for f in factors[excluded + 1..].iter().rev() {
        for (s, x) in suffix.iter_mut().zip(*f) {
            *s *= x;
        }
    }
    Ok(prefix.iter().zip(&suffix).map(|(p, s)| p * s).collect())
}

/// Scratch space for evaluating one sample.
pub(crate) struct Scratch {
    pub pi: Vec<f64>,
}

impl Scratch {
    pub fn new(rank: usize) -> Self {
        Scratch { pi: vec![0.0; rank] }
    }
}

/// `Σ_v φ^v · π^(v)` given the projection of every mode.
///
/// Both prediction paths go through here, so they agree bit for bit whenever
/// their projections do.
pub(crate) fn score_with<'a>(
    params: &ModelParams,
    projection: impl Fn(usize) -> &'a [f64],
    scratch: &mut Scratch,
) -> f64 {
    let f = params.factors();
    let mut score = 0.0;
    for (v, modes) in params.schema().views().iter().enumerate() {
        let bias = f.bias[v].as_slice().expect("standard layout");
        let r = scratch.pi.len();
        for (k, &m) in modes.iter().enumerate() {
            let h = projection(m);
            let b = &bias[k * r..(k + 1) * r];
            if k == 0 {
                for ((p, h), b) in scratch.pi.iter_mut().zip(h).zip(b) {
                    *p = h + b;
                }
            } else {
                for ((p, h), b) in scratch.pi.iter_mut().zip(h).zip(b) {
                    *p *= h + b;
                }
            }
        }
        let phi = f.phi.row(v);
        for (p, w) in scratch.pi.iter().zip(phi.iter()) {
            score += w * p;
        }
    }
    score
}

/// Scores a single sample given one sparse vector per mode.
pub fn predict_one(params: &ModelParams, sample: &[SparseSlice<'_>]) -> Result<f64> {
    let schema = params.schema();
    if sample.len() != schema.num_modes() {
        return Err(Error::Shape(format!(
            "sample has {} mode vectors, schema has {} modes",
            sample.len(),
            schema.num_modes()
        )));
    }
    for (m, x) in sample.iter().enumerate() {
        if x.dim() != schema.mode_dim(m) {
            return Err(Error::Shape(format!(
                "mode {m} vector has dimension {}, expected {}",
                x.dim(),
                schema.mode_dim(m)
            )));
        }
    }
    let rank = params.rank();
    let mut h = vec![0.0; schema.num_modes() * rank];
    for (m, x) in sample.iter().enumerate() {
        project(&params.factors().theta[m], *x, &mut h[m * rank..(m + 1) * rank]);
    }
    let mut scratch = Scratch::new(rank);
    Ok(score_with(params, |m| &h[m * rank..(m + 1) * rank], &mut scratch))
}

/// Scores every sample of `dataset` from precomputed caches.
pub fn predict_batch(params: &ModelParams, dataset: &RelationalDataset, caches: &ModeCaches) -> Result<Vec<f64>> {
    check_same_schema(params, dataset)?;
    caches.check_current(params, dataset)?;
    let blocks = dataset.blocks();
    let mut scratch = Scratch::new(params.rank());
    Ok((0..dataset.num_samples())
        .map(|n| score_with(params, |m| caches.column(m, blocks[m].mapping()[n]), &mut scratch))
        .collect())
}

/// Scores the listed samples from precomputed caches. Caller guarantees the
/// caches are current.
pub(crate) fn predict_samples(
    params: &ModelParams,
    dataset: &RelationalDataset,
    caches: &ModeCaches,
    samples: &[usize],
) -> Vec<f64> {
    let blocks = dataset.blocks();
    let mut scratch = Scratch::new(params.rank());
    samples
        .iter()
        .map(|&n| score_with(params, |m| caches.column(m, blocks[m].mapping()[n]), &mut scratch))
        .collect()
}

/// Scores every sample by projecting its features afresh, ignoring the
/// block structure. Reference path for measuring what the caches save.
pub fn predict_naive(params: &ModelParams, dataset: &RelationalDataset) -> Result<Vec<f64>> {
    check_same_schema(params, dataset)?;
    (0..dataset.num_samples())
        .map(|n| predict_one(params, &dataset.sample_view(n)?))
        .collect()
}
