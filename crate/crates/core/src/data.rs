//! Sparse feature vectors and the relational block representation of a
//! dataset.
//!
//! A dataset never stores its plain feature matrix. Each mode keeps a block of
//! distinct feature columns plus a mapping from sample index to column, so an
//! entity that appears in many samples is stored (and later projected) once.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::schema::Schema;

fn validate_entries(dim: usize, indices: &[usize], values: &[f64]) -> Result<()> {
    if indices.len() != values.len() {
        return Err(Error::Data(format!(
            "{} indices but {} values",
            indices.len(),
            values.len()
        )));
    }
    for (k, (&i, &x)) in indices.iter().zip(values).enumerate() {
        if i >= dim {
            return Err(Error::Data(format!("index {i} out of range for dimension {dim}")));
        }
        if k > 0 && indices[k - 1] >= i {
            return Err(Error::Data(format!(
                "indices must be strictly increasing ({} then {i})",
                indices[k - 1]
            )));
        }
        if x == 0.0 || !x.is_finite() {
            return Err(Error::Data(format!(
                "value at index {i} must be non-zero and finite, got {x}"
            )));
        }
    }
    Ok(())
}

/// An owned sparse vector with strictly increasing indices and non-zero,
/// finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        let (indices, values) = entries.into_iter().unzip();
        Self::from_parts(dim, indices, values)
    }

    pub fn from_parts(dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        validate_entries(dim, &indices, &values)?;
        Ok(SparseVector { dim, indices, values })
    }

    pub fn empty(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Keeps the non-zero entries of `dense`. Fails on non-finite input.
    pub fn from_dense(dense: &[f64]) -> Result<Self> {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, &x)| (i, x))
            .unzip();
        Self::from_parts(dense.len(), indices, values)
    }

    pub fn as_slice(&self) -> SparseSlice<'_> {
        SparseSlice {
            dim: self.dim,
            indices: &self.indices,
            values: &self.values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// A borrowed sparse vector, typically one column of a [`RelationalBlock`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseSlice<'a> {
    dim: usize,
    indices: &'a [usize],
    values: &'a [f64],
}

impl<'a> SparseSlice<'a> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &'a [usize] {
        self.indices
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, x) in self.iter() {
            out[i] = x;
        }
        out
    }

    pub fn to_owned(&self) -> SparseVector {
        SparseVector {
            dim: self.dim,
            indices: self.indices.to_vec(),
            values: self.values.to_vec(),
        }
    }
}

/// Distinct feature columns of one mode (stored column-compressed) and the
/// sample-to-column mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationalBlock {
    mode: usize,
    dim: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    mapping: Vec<usize>,
}

impl RelationalBlock {
    pub fn new(mode: usize, dim: usize, columns: &[SparseVector], mapping: Vec<usize>) -> Result<Self> {
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for (j, c) in columns.iter().enumerate() {
            if c.dim != dim {
                return Err(Error::Shape(format!(
                    "mode {mode} column {j} has dimension {}, expected {dim}",
                    c.dim
                )));
            }
            row_idx.extend_from_slice(&c.indices);
            values.extend_from_slice(&c.values);
            col_ptr.push(row_idx.len());
        }
        Self::from_csc(mode, dim, col_ptr, row_idx, values, mapping)
    }

    /// Builds a block from raw column-compressed arrays, validating every column.
    pub fn from_csc(
        mode: usize,
        dim: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
        mapping: Vec<usize>,
    ) -> Result<Self> {
        if col_ptr.first() != Some(&0)
            || col_ptr.last() != Some(&row_idx.len())
            || row_idx.len() != values.len()
            || col_ptr.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::Data(format!("mode {mode}: malformed column pointers")));
        }
        for j in 0..col_ptr.len() - 1 {
            let r = col_ptr[j]..col_ptr[j + 1];
            validate_entries(dim, &row_idx[r.clone()], &values[r])
                .map_err(|e| Error::Data(format!("mode {mode} column {j}: {e}")))?;
        }
        let num_columns = col_ptr.len() - 1;
        if let Some((n, &j)) = mapping.iter().enumerate().find(|(_, &j)| j >= num_columns) {
            return Err(Error::Data(format!(
                "mode {mode}: sample {n} maps to column {j}, but the block has {num_columns} columns"
            )));
        }
        Ok(RelationalBlock {
            mode,
            dim,
            col_ptr,
            row_idx,
            values,
            mapping,
        })
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    /// Feature dimension I_m.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// N_m, the number of distinct columns.
    pub fn num_columns(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn column(&self, j: usize) -> SparseSlice<'_> {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        SparseSlice {
            dim: self.dim,
            indices: &self.row_idx[r.clone()],
            values: &self.values[r],
        }
    }

    pub fn columns(&self) -> impl Iterator<Item = SparseSlice<'_>> {
        (0..self.num_columns()).map(move |j| self.column(j))
    }

    /// ψ: sample index to column index.
    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    /// N_z of the block matrix.
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }
}

/// Labeled samples in relational block form, one block per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationalDataset {
    schema: Schema,
    blocks: Vec<RelationalBlock>,
    labels: Vec<f64>,
}

impl RelationalDataset {
    pub fn new(schema: Schema, blocks: Vec<RelationalBlock>, labels: Vec<f64>) -> Result<Self> {
        if blocks.len() != schema.num_modes() {
            return Err(Error::Data(format!(
                "expected {} blocks (one per mode), got {}",
                schema.num_modes(),
                blocks.len()
            )));
        }
        for (m, b) in blocks.iter().enumerate() {
            if b.mode != m {
                return Err(Error::Data(format!("block {m} is tagged as mode {}", b.mode)));
            }
            if b.dim != schema.mode_dim(m) {
                return Err(Error::Shape(format!(
                    "mode {m} block has dimension {}, schema says {}",
                    b.dim,
                    schema.mode_dim(m)
                )));
            }
            if b.mapping.len() != labels.len() {
                return Err(Error::Data(format!(
                    "mode {m} mapping has {} entries but there are {} labels",
                    b.mapping.len(),
                    labels.len()
                )));
            }
        }
        if let Some(n) = labels.iter().position(|y| !y.is_finite()) {
            return Err(Error::Data(format!("label {n} is not finite")));
        }
        Ok(RelationalDataset { schema, blocks, labels })
    }

    /// Builds blocks from plain per-sample vectors by deduplicating the
    /// columns of every mode (first occurrence order).
    pub fn from_plain(schema: Schema, samples: &[Vec<SparseVector>], labels: Vec<f64>) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        let num_modes = schema.num_modes();
        let mut blocks = Vec::with_capacity(num_modes);
        for m in 0..num_modes {
            let mut seen: HashMap<(Vec<usize>, Vec<u64>), usize> = HashMap::new();
            let mut columns = Vec::new();
            let mut mapping = Vec::with_capacity(samples.len());
            for (n, sample) in samples.iter().enumerate() {
                if sample.len() != num_modes {
                    return Err(Error::Shape(format!(
                        "sample {n} has {} mode vectors, expected {num_modes}",
                        sample.len()
                    )));
                }
                let x = &sample[m];
                let key = (x.indices.clone(), x.values.iter().map(|v| v.to_bits()).collect());
                let j = *seen.entry(key).or_insert_with(|| {
                    columns.push(x.clone());
                    columns.len() - 1
                });
                mapping.push(j);
            }
            blocks.push(RelationalBlock::new(m, schema.mode_dim(m), &columns, mapping)?);
        }
        Self::new(schema, blocks, labels)
    }

    /// Expands the blocks back into per-sample vectors.
    pub fn to_plain(&self) -> Vec<Vec<SparseVector>> {
        (0..self.num_samples())
            .map(|n| self.blocks.iter().map(|b| b.column(b.mapping[n]).to_owned()).collect())
            .collect()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn blocks(&self) -> &[RelationalBlock] {
        &self.blocks
    }

    pub fn block(&self, mode: usize) -> &RelationalBlock {
        &self.blocks[mode]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// N.
    pub fn num_samples(&self) -> usize {
        self.labels.len()
    }

    /// The feature vector of sample `n`, split by mode, borrowed from the blocks.
    pub fn sample_view(&self, n: usize) -> Result<Vec<SparseSlice<'_>>> {
        if n >= self.num_samples() {
            return Err(Error::Data(format!(
                "sample {n} out of range for dataset of {} samples",
                self.num_samples()
            )));
        }
        Ok(self.blocks.iter().map(|b| b.column(b.mapping[n])).collect())
    }

    /// A dataset over the chosen samples (in the given order) sharing this
    /// dataset's blocks.
    pub fn subset(&self, samples: &[usize]) -> Result<Self> {
        if let Some(&n) = samples.iter().find(|&&n| n >= self.num_samples()) {
            return Err(Error::Data(format!(
                "sample {n} out of range for dataset of {} samples",
                self.num_samples()
            )));
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| RelationalBlock {
                mapping: samples.iter().map(|&n| b.mapping[n]).collect(),
                ..b.clone()
            })
            .collect();
        let labels = samples.iter().map(|&n| self.labels[n]).collect();
        Self::new(self.schema.clone(), blocks, labels)
    }

    /// Same samples and blocks with new targets.
    pub fn with_labels(&self, labels: Vec<f64>) -> Result<Self> {
        Self::new(self.schema.clone(), self.blocks.clone(), labels)
    }
}
