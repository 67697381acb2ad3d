use std::fmt;

use crate::data::{RelationalBlock, RelationalDataset};

/// Storage counts of a relational dataset versus its plain feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub num_samples: usize,
    /// N_m per mode.
    pub distinct_columns: Vec<usize>,
    /// N_z(X): non-zeros of the plain feature matrix.
    pub nnz_plain: usize,
    /// |B| = N·M + Σ_m N_z(X^B(m)).
    pub nnz_blocks: usize,
    /// nnz_plain / nnz_blocks.
    pub compression_ratio: f64,
}

pub fn dataset_stats(dataset: &RelationalDataset) -> DatasetStats {
    block_stats(dataset.blocks())
}

/// Stats from blocks alone. All blocks must share one mapping length.
pub fn block_stats(blocks: &[RelationalBlock]) -> DatasetStats {
    let num_samples = blocks.first().map_or(0, |b| b.mapping().len());
    let mut nnz_plain = 0;
    let mut block_nnz = 0;
    for b in blocks {
        let col_nnz: Vec<usize> = b.columns().map(|c| c.nnz()).collect();
        nnz_plain += b.mapping().iter().map(|&j| col_nnz[j]).sum::<usize>();
        block_nnz += b.nnz();
    }
    let nnz_blocks = num_samples * blocks.len() + block_nnz;
    DatasetStats {
        num_samples,
        distinct_columns: blocks.iter().map(RelationalBlock::num_columns).collect(),
        nnz_plain,
        nnz_blocks,
        compression_ratio: if nnz_blocks == 0 {
            1.0
        } else {
            nnz_plain as f64 / nnz_blocks as f64
        },
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples\t{}", self.num_samples)?;
        for (m, c) in self.distinct_columns.iter().enumerate() {
            writeln!(f, "mode {m} distinct columns\t{c}")?;
        }
        writeln!(f, "nnz plain\t{}", self.nnz_plain)?;
        writeln!(f, "nnz blocks\t{}", self.nnz_blocks)?;
        write!(f, "compression ratio\t{:.4}", self.compression_ratio)
    }
}
