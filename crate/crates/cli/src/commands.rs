use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use sfm_core::io::{
    dataset_stats, format_f64, gen_synthetic, load_dataset, load_model, read_schema, read_values, save_model,
    split_indices, values_to_text, write_dataset, SyntheticConfig,
};
use sfm_core::{compute_mode_caches, mean_squared_error, predict_batch, Error, Result, Schema, TrainConfig};

use crate::{EvalArgs, GenArgs, PredictArgs, StatsArgs, TrainArgs};

fn write_output(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                })
        }
    }
}

pub fn train(a: TrainArgs) -> Result<()> {
    let config = TrainConfig {
        rank: a.rank,
        learning_rate: a.lr,
        reg_lambda: a.lambda,
        adam_beta1: a.beta1,
        adam_beta2: a.beta2,
        adam_epsilon: a.epsilon,
        max_epochs: a.max_epochs,
        patience: a.patience,
        init_scale: a.init_scale,
        seed: a.seed,
        batch_size: a.batch_size,
    };
    config.validate()?;
    let train_set = load_dataset(&a.train)?;
    let val_set = load_dataset(&a.val)?;
    log::info!(
        "training on {} samples, validating on {}",
        train_set.num_samples(),
        val_set.num_samples()
    );

    let (model, log) = sfm_core::train(&train_set, &val_set, &config)?;
    save_model(&model, &a.out)?;
    if let Some(path) = &a.log {
        let mut text = String::new();
        for e in &log.epochs {
            let _ = writeln!(
                text,
                "{} {} {}",
                e.epoch,
                format_f64(e.train_risk),
                format_f64(e.val_mse)
            );
        }
        write_output(Some(path), &text)?;
    }
    match (log.best_epoch, log.best_val_mse()) {
        (Some(epoch), Some(mse)) => log::info!(
            "best validation MSE {mse:.6} at epoch {epoch} of {}{}",
            log.epochs.len(),
            if log.stopped_early { " (stopped early)" } else { "" }
        ),
        _ => log::info!("no epochs run; saved the initialization"),
    }
    Ok(())
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let data = load_dataset(&a.data)?;
    let caches = compute_mode_caches(&model, &data)?;
    let scores = predict_batch(&model, &data, &caches)?;
    write_output(a.out.as_deref(), &values_to_text(&scores))
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let predictions = read_values(&a.predictions)?;
    let labels = match (&a.labels, &a.data) {
        (Some(path), _) => read_values(path)?,
        (None, Some(dir)) => load_dataset(dir)?.labels().to_vec(),
        (None, None) => unreachable!("clap requires one of --labels and --data"),
    };
    let mse = mean_squared_error(&predictions, &labels)?;
    println!("{}", significant(mse, 6));
    Ok(())
}

/// Formats like C's `%.{digits}g`.
fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}

fn parse_views(specs: &[String]) -> Result<Vec<Vec<usize>>> {
    specs
        .iter()
        .map(|s| {
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("invalid mode index {t:?} in view {s:?}")))
                })
                .collect()
        })
        .collect()
}

pub fn gen(a: GenArgs) -> Result<()> {
    let schema = match (&a.schema, &a.mode_dims) {
        (Some(path), _) => read_schema(path)?,
        (None, Some(dims)) => Schema::new(dims.clone(), parse_views(&a.views)?)?,
        (None, None) => unreachable!("clap requires one of --schema and --mode-dims"),
    };
    let distinct = match a.distinct.as_slice() {
        [c] => vec![*c; schema.num_modes()],
        cs => cs.to_vec(),
    };
    let mut config = SyntheticConfig::new(a.n, distinct, a.rank, a.noise, a.seed);
    config.nnz_per_column = a.nnz;
    let (data, truth) = gen_synthetic(&schema, &config)?;

    if a.val_frac > 0.0 || a.test_frac > 0.0 {
        let parts = split_indices(data.num_samples(), a.val_frac, a.test_frac, a.seed)?;
        for (name, idx) in ["train", "val", "test"].into_iter().zip(parts) {
            let dir = a.out.join(name);
            write_dataset(&data.subset(&idx)?, &dir)?;
            log::info!("wrote {} samples to {}", idx.len(), dir.display());
        }
    } else {
        write_dataset(&data, &a.out)?;
        log::info!("wrote {} samples to {}", data.num_samples(), a.out.display());
    }
    if let Some(path) = &a.truth_model {
        save_model(&truth, path)?;
    }
    Ok(())
}

pub fn stats(a: StatsArgs) -> Result<()> {
    println!("{}", dataset_stats(&load_dataset(&a.data)?));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::significant;

    #[test]
    fn six_significant_digits() {
        assert_eq!(significant(2.5, 6), "2.5");
        assert_eq!(significant(0.0, 6), "0");
        assert_eq!(significant(1.0 / 3.0, 6), "0.333333");
        assert_eq!(significant(123456789.0, 6), "1.23457e+08");
        assert_eq!(significant(0.0001234567, 6), "0.000123457");
        assert_eq!(significant(1.5e-21, 6), "1.5e-21");
        assert_eq!(significant(999999.7, 6), "1e+06");
        assert_eq!(significant(-42.0, 6), "-42");
    }
}
