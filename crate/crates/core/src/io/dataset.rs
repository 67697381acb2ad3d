//! On-disk dataset layout.
//!
//! A dataset directory holds a manifest plus one file per component:
//!
//! ```text
//! manifest.txt   version 1, then `schema <file>`, `block <m> <file>` per mode,
//!                `mapping <file>`, `labels <file>`
//! schema.txt     `modes M views V`, M lines `mode <m> <I_m>`, V lines `view <v> <m1> <m2> ...`
//! block_<m>.txt  one line per distinct column: space-separated `index:value` (empty line = zero column)
//! mapping.txt    one line per sample: the M column indices ψ^(1)(n) ... ψ^(M)(n)
//! labels.txt     one real per line
//! ```
//!
//! All indices are 0-based, every line ends in LF, and reals are written in
//! their shortest round-trip form.

use std::path::{Path, PathBuf};

use super::text::{self, format_f64, parse_f64, parse_usize, tokens, Lines};
use crate::data::{RelationalBlock, RelationalDataset};
use crate::error::{Error, Result};
use crate::schema::Schema;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.txt";

/// File names of one dataset, relative to `base_dir`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub version: u32,
    pub base_dir: PathBuf,
    pub schema: PathBuf,
    pub blocks: Vec<PathBuf>,
    pub mapping: PathBuf,
    pub labels: PathBuf,
}

impl DatasetManifest {
    /// The canonical file names for a dataset with `num_modes` modes.
    pub fn standard(base_dir: impl Into<PathBuf>, num_modes: usize) -> Self {
        DatasetManifest {
            version: FORMAT_VERSION,
            base_dir: base_dir.into(),
            schema: "schema.txt".into(),
            blocks: (0..num_modes).map(|m| format!("block_{m}.txt").into()).collect(),
            mapping: "mapping.txt".into(),
            labels: "labels.txt".into(),
        }
    }

    pub fn resolve(&self, relative: &Path) -> PathBuf {
        self.base_dir.join(relative)
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.base_dir.join(MANIFEST_FILE)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("version {}\nschema {}\n", self.version, self.schema.display());
        for (m, b) in self.blocks.iter().enumerate() {
            out.push_str(&format!("block {m} {}\n", b.display()));
        }
        out.push_str(&format!(
            "mapping {}\nlabels {}\n",
            self.mapping.display(),
            self.labels.display()
        ));
        out
    }

    /// Reads a manifest file, or `<dir>/manifest.txt` when given a directory.
    pub fn read(path: &Path) -> Result<Self> {
        let path = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let contents = text::read_to_string(&path)?;
        let name = path.display().to_string();
        let mut lines = Lines::new(&name, &contents)?;

        let (no, line) = lines.next()?;
        let toks = tokens(&lines, no, line)?;
        if toks.len() != 2 || toks[0] != "version" {
            return Err(lines.error(no, format!("expected `version <n>`, got {line:?}")));
        }
        if toks[1] != FORMAT_VERSION.to_string() {
            return Err(Error::Version {
                file: name,
                found: toks[1].to_string(),
                expected: FORMAT_VERSION.to_string(),
            });
        }
        let (_, schema) = text::keyed(&mut lines, "schema", 1)?;
        let schema = PathBuf::from(schema[0]);

        let mut blocks = Vec::new();
        let mapping = loop {
            let (no, line) = lines.next()?;
            let toks = tokens(&lines, no, line)?;
            match toks.as_slice() {
                ["block", m, file] => {
                    if parse_usize(&lines, no, m, "mode index")? != blocks.len() {
                        return Err(lines.error(no, format!("expected block {}", blocks.len())));
                    }
                    blocks.push(PathBuf::from(*file));
                }
                ["mapping", file] => break PathBuf::from(*file),
                _ => return Err(lines.error(no, format!("expected `block` or `mapping` line, got {line:?}"))),
            }
        };
        let (_, labels) = text::keyed(&mut lines, "labels", 1)?;
        lines.finish()?;

        Ok(DatasetManifest {
            version: FORMAT_VERSION,
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            schema,
            blocks,
            mapping,
            labels: PathBuf::from(labels[0]),
        })
    }
}

pub fn read_schema(path: &Path) -> Result<Schema> {
    let contents = text::read_to_string(path)?;
    let mut lines = Lines::new(path.display().to_string(), &contents)?;
    let schema = text::parse_schema(&mut lines)?;
    lines.finish()?;
    Ok(schema)
}

pub fn write_schema(schema: &Schema, path: &Path) -> Result<()> {
    text::write_string(path, &text::schema_to_text(schema))
}

/// Column-compressed arrays parsed from a block file.
struct ParsedBlock {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

fn parse_block(name: &str, contents: &str, dim: usize) -> Result<ParsedBlock> {
    let mut lines = Lines::new(name, contents)?;
    let mut block = ParsedBlock {
        col_ptr: vec![0],
        row_idx: Vec::new(),
        values: Vec::new(),
    };
    while !lines.is_done() {
        let (no, line) = lines.next()?;
        let start = block.row_idx.len();
        for tok in tokens(&lines, no, line)? {
            let (i, x) = tok
                .split_once(':')
                .ok_or_else(|| lines.error(no, format!("expected index:value, got {tok:?}")))?;
            let i = parse_usize(&lines, no, i, "feature index")?;
            let x = parse_f64(&lines, no, x, "feature value")?;
            if i >= dim {
                return Err(lines.error(no, format!("feature index {i} out of range for dimension {dim}")));
            }
            if x == 0.0 {
                return Err(lines.error(no, format!("explicit zero at feature index {i}")));
            }
            if block.row_idx.len() > start && block.row_idx[block.row_idx.len() - 1] >= i {
                return Err(lines.error(no, "feature indices must be strictly increasing"));
            }
            block.row_idx.push(i);
            block.values.push(x);
        }
        block.col_ptr.push(block.row_idx.len());
    }
    Ok(block)
}

fn parse_mapping(name: &str, contents: &str, num_columns: &[usize]) -> Result<Vec<Vec<usize>>> {
    let lines = &mut Lines::new(name, contents)?;
    let num_modes = num_columns.len();
    let mut mapping = vec![Vec::with_capacity(lines.len()); num_modes];
    while !lines.is_done() {
        let (no, line) = lines.next()?;
        let toks = tokens(lines, no, line)?;
        if toks.len() != num_modes {
            return Err(lines.error(no, format!("expected {num_modes} column indices, got {}", toks.len())));
        }
        for (m, tok) in toks.iter().enumerate() {
            let j = parse_usize(lines, no, tok, "column index")?;
            if j >= num_columns[m] {
                return Err(lines.error(
                    no,
                    format!(
                        "mode {m} column index {j} out of range (block has {} columns)",
                        num_columns[m]
                    ),
                ));
            }
            mapping[m].push(j);
        }
    }
    Ok(mapping)
}

fn parse_labels(name: &str, contents: &str) -> Result<Vec<f64>> {
    let lines = &mut Lines::new(name, contents)?;
    let mut labels = Vec::with_capacity(lines.len());
    while !lines.is_done() {
        let (no, line) = lines.next()?;
        labels.push(parse_f64(lines, no, line, "label")?);
    }
    Ok(labels)
}

/// Reads one real per line, e.g. a labels or predictions file.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    parse_labels(&path.display().to_string(), &text::read_to_string(path)?)
}

pub fn write_values(values: &[f64], path: &Path) -> Result<()> {
    text::write_string(path, &values_to_text(values))
}

pub fn values_to_text(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 20);
    for &y in values {
        out.push_str(&format_f64(y));
        out.push('\n');
    }
    out
}

/// Loads and validates a dataset from its manifest (or its directory).
pub fn load_dataset(path: &Path) -> Result<RelationalDataset> {
    let manifest = DatasetManifest::read(path)?;
    let schema = read_schema(&manifest.resolve(&manifest.schema))?;
    if manifest.blocks.len() != schema.num_modes() {
        return Err(Error::Data(format!(
            "{}: lists {} block files for {} modes",
            manifest.manifest_path().display(),
            manifest.blocks.len(),
            schema.num_modes()
        )));
    }

    let mut parsed = Vec::with_capacity(schema.num_modes());
    for (m, rel) in manifest.blocks.iter().enumerate() {
        let path = manifest.resolve(rel);
        let contents = text::read_to_string(&path)?;
        parsed.push(parse_block(&path.display().to_string(), &contents, schema.mode_dim(m))?);
    }
    let num_columns: Vec<usize> = parsed.iter().map(|b| b.col_ptr.len() - 1).collect();

    let mapping_path = manifest.resolve(&manifest.mapping);
    let mappings = parse_mapping(
        &mapping_path.display().to_string(),
        &text::read_to_string(&mapping_path)?,
        &num_columns,
    )?;
    let labels_path = manifest.resolve(&manifest.labels);
    let labels = parse_labels(&labels_path.display().to_string(), &text::read_to_string(&labels_path)?)?;
    let num_samples = mappings.first().map_or(0, Vec::len);
    if labels.len() != num_samples {
        return Err(Error::Data(format!(
            "{} has {} labels but {} has {} samples",
            labels_path.display(),
            labels.len(),
            mapping_path.display(),
            num_samples
        )));
    }

    let blocks = parsed
        .into_iter()
        .zip(mappings)
        .enumerate()
        .map(|(m, (b, psi))| RelationalBlock::from_csc(m, schema.mode_dim(m), b.col_ptr, b.row_idx, b.values, psi))
        .collect::<Result<Vec<_>>>()?;
    RelationalDataset::new(schema, blocks, labels)
}

fn block_to_text(block: &RelationalBlock) -> String {
    let mut out = String::new();
    for col in block.columns() {
        for (k, (i, x)) in col.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            out.push_str(&i.to_string());
            out.push(':');
            out.push_str(&format_f64(x));
        }
        out.push('\n');
    }
    out
}

fn mapping_to_text(dataset: &RelationalDataset) -> String {
    let mut out = String::new();
    for n in 0..dataset.num_samples() {
        for (m, b) in dataset.blocks().iter().enumerate() {
            if m > 0 {
                out.push(' ');
            }
            out.push_str(&b.mapping()[n].to_string());
        }
        out.push('\n');
    }
    out
}

/// Writes `dataset` into `dir` (created if needed) under the standard names.
pub fn write_dataset(dataset: &RelationalDataset, dir: &Path) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = DatasetManifest::standard(dir, dataset.schema().num_modes());
    write_schema(dataset.schema(), &manifest.resolve(&manifest.schema))?;
    for (b, rel) in dataset.blocks().iter().zip(&manifest.blocks) {
        text::write_string(&manifest.resolve(rel), &block_to_text(b))?;
    }
    text::write_string(&manifest.resolve(&manifest.mapping), &mapping_to_text(dataset))?;
    write_values(dataset.labels(), &manifest.resolve(&manifest.labels))?;
    text::write_string(&manifest.manifest_path(), &manifest.to_text())?;
    Ok(manifest)
}
