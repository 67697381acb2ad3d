//! Model serialization.
//!
//! ```text
//! sfm-model 1
//! sha256 <hex digest of everything after this line>
//! <schema lines, as in schema.txt>
//! rank R
//! theta <m>        followed by I_m rows of R reals
//! bias <v>         followed by M_v rows of R reals
//! phi              followed by V rows of R reals
//! ```

use std::path::Path;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use super::text::{self, format_f64, parse_f64, parse_usize, tokens, Lines};
use crate::error::{Error, Result};
use crate::model::{FactorSet, ModelParams};

const MAGIC: &str = "sfm-model";
pub const MODEL_VERSION: u32 = 1;

fn push_rows(out: &mut String, a: &Array2<f64>) {
    for row in a.rows() {
        for (k, x) in row.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            out.push_str(&format_f64(*x));
        }
        out.push('\n');
    }
}

pub fn model_to_text(params: &ModelParams) -> String {
    let f = params.factors();
    let mut body = text::schema_to_text(params.schema());
    body.push_str(&format!("rank {}\n", params.rank()));
    for (m, t) in f.theta.iter().enumerate() {
        body.push_str(&format!("theta {m}\n"));
        push_rows(&mut body, t);
    }
    for (v, b) in f.bias.iter().enumerate() {
        body.push_str(&format!("bias {v}\n"));
        push_rows(&mut body, b);
    }
    body.push_str("phi\n");
    push_rows(&mut body, &f.phi);

    let digest = Sha256::digest(body.as_bytes());
    format!(
        "{MAGIC} {MODEL_VERSION}\nsha256 {}\n{body}",
        hex::encode(digest.as_slice())
    )
}

pub fn save_model(params: &ModelParams, path: &Path) -> Result<()> {
    text::write_string(path, &model_to_text(params))
}

fn read_rows(lines: &mut Lines<'_>, rows: usize, rank: usize) -> Result<Array2<f64>> {
    let mut values = Vec::with_capacity(rows * rank);
    for _ in 0..rows {
        let (no, line) = lines.next()?;
        let toks = tokens(lines, no, line)?;
        if toks.len() != rank {
            return Err(lines.error(no, format!("expected {rank} values, got {}", toks.len())));
        }
        for t in toks {
            values.push(parse_f64(lines, no, t, "parameter")?);
        }
    }
    Ok(Array2::from_shape_vec((rows, rank), values).expect("row count checked"))
}

pub fn model_from_text(name: &str, contents: &str) -> Result<ModelParams> {
    let truncated = || Error::Checksum { file: name.to_string() };
    let (first, rest) = contents.split_once('\n').ok_or_else(truncated)?;
    match first.split_once(' ') {
        Some((MAGIC, version)) if version == MODEL_VERSION.to_string() => {}
        Some((MAGIC, version)) => {
            return Err(Error::Version {
                file: name.to_string(),
                found: version.to_string(),
                expected: MODEL_VERSION.to_string(),
            })
        }
        _ => {
            return Err(Error::parse(
                name,
                1,
                format!("not a model file (expected `{MAGIC} {MODEL_VERSION}`)"),
            ))
        }
    }
    let (second, body) = rest.split_once('\n').ok_or_else(truncated)?;
    let expected = second.strip_prefix("sha256 ").ok_or_else(truncated)?;
    if hex::encode(Sha256::digest(body.as_bytes()).as_slice()) != expected {
        return Err(truncated());
    }

    let mut lines = Lines::new(name, body)?;
    let schema = text::parse_schema(&mut lines)?;
    let (no, r) = text::keyed(&mut lines, "rank", 1)?;
    let rank = parse_usize(&lines, no, r[0], "rank")?;
    if rank == 0 {
        return Err(lines.error(no, "rank must be >= 1"));
    }
    let mut factors = FactorSet::zeros(&schema, rank);
    for m in 0..schema.num_modes() {
        let (no, idx) = text::keyed(&mut lines, "theta", 1)?;
        if parse_usize(&lines, no, idx[0], "mode index")? != m {
            return Err(lines.error(no, format!("expected theta {m}")));
        }
        factors.theta[m] = read_rows(&mut lines, schema.mode_dim(m), rank)?;
    }
    for v in 0..schema.num_views() {
        let (no, idx) = text::keyed(&mut lines, "bias", 1)?;
        if parse_usize(&lines, no, idx[0], "view index")? != v {
            return Err(lines.error(no, format!("expected bias {v}")));
        }
        factors.bias[v] = read_rows(&mut lines, schema.view_modes(v).len(), rank)?;
    }
    text::keyed(&mut lines, "phi", 0)?;
    factors.phi = read_rows(&mut lines, schema.num_views(), rank)?;
    lines.finish()?;
    ModelParams::new(schema, factors)
}

pub fn load_model(path: &Path) -> Result<ModelParams> {
    model_from_text(&path.display().to_string(), &text::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SparseVector;
    use crate::model::predict_one;
    use crate::model::tests::worked_example;
    use crate::schema::Schema;
    use rand::SeedableRng;

    fn random_model() -> ModelParams {
        let schema = Schema::new(vec![3, 4, 2], vec![vec![0, 1, 2], vec![2, 0]]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        ModelParams::init_variance_scaling(schema, 3, 2.0, &mut rng).unwrap()
    }

    #[test]
    fn round_trip_is_lossless() {
        let p = random_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.sfm");
        save_model(&p, &path).unwrap();
        let q = load_model(&path).unwrap();
        assert_eq!(p, q);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), model_to_text(&q));
    }

    #[test]
    fn predictions_survive_round_trip() {
        let (p, x) = worked_example();
        let q = model_from_text("m", &model_to_text(&p)).unwrap();
        let xs: Vec<_> = x.iter().map(SparseVector::as_slice).collect();
        assert_eq!(predict_one(&p, &xs).unwrap(), predict_one(&q, &xs).unwrap());
    }

    #[test]
    fn truncation_is_a_checksum_error() {
        let text = model_to_text(&random_model());
        for cut in [5, 20, text.len() / 2, text.len() - 1] {
            let err = model_from_text("m.sfm", &text[..cut]).unwrap_err();
            assert!(matches!(err, Error::Checksum { .. }), "cut {cut}: {err}");
        }
    }

    #[test]
    fn corruption_and_versions() {
        let text = model_to_text(&random_model());
        let flipped = text.replacen("theta 1", "theta 2", 1);
        assert!(matches!(model_from_text("m", &flipped), Err(Error::Checksum { .. })));
        let v2 = text.replacen("sfm-model 1", "sfm-model 2", 1);
        assert!(matches!(model_from_text("m", &v2), Err(Error::Version { .. })));
        assert!(matches!(model_from_text("m", "hello\n"), Err(Error::Parse { .. })));
    }
}
