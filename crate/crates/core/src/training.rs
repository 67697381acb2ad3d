//! Regularized squared-loss risk, analytic gradients, Adam, and the training
//! loop with early stopping on validation MSE.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::RelationalDataset;
use crate::error::{Error, Result};
use crate::model::{self, compute_mode_caches, predict_batch, FactorSet, ModeCaches, ModelParams};

/// Gradients share the layout of the parameters they were computed for.
pub type GradientSet = FactorSet;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub rank: usize,
    pub learning_rate: f64,
    pub reg_lambda: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// σ in the variance-scaling initializer.
    pub init_scale: f64,
    pub seed: u64,
    /// Samples per Adam step; 0 means full batch.
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            rank: 20,
            learning_rate: 0.01,
            reg_lambda: 0.0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            max_epochs: 400,
            patience: 20,
            init_scale: 2.0,
            seed: 0,
            batch_size: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.rank == 0 {
            return bad("rank must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.reg_lambda >= 0.0 && self.reg_lambda.is_finite()) {
            return bad(format!("lambda must be >= 0, got {}", self.reg_lambda));
        }
        for (name, b) in [("beta1", self.adam_beta1), ("beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.adam_epsilon >= 0.0 && self.adam_epsilon.is_finite()) {
            return bad(format!("epsilon must be >= 0, got {}", self.adam_epsilon));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad(format!("init scale must be >= 0, got {}", self.init_scale));
        }
        Ok(())
    }
}

/// Adam moment buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first: FactorSet,
    second: FactorSet,
    step: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        AdamState {
            first: FactorSet::zeros(params.schema(), params.rank()),
            second: FactorSet::zeros(params.schema(), params.rank()),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &FactorSet {
        &self.first
    }

    pub fn second_moment(&self) -> &FactorSet {
        &self.second
    }
}

/// Ω = ½ Σ ‖·‖² over every parameter group.
pub fn regularizer(factors: &FactorSet) -> f64 {
    0.5 * factors
        .groups()
        .iter()
        .map(|(_, s)| s.iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
}

/// Risk and `(2/N)(f_n - y_n)` for precomputed scores.
pub fn risk_from_scores(params: &ModelParams, scores: &[f64], labels: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let n = scores.len() as f64;
    let mut loss = 0.0;
    let residuals = scores
        .iter()
        .zip(labels)
        .map(|(f, y)| {
            let d = f - y;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    let mut risk = loss / n;
    if lambda != 0.0 {
        risk += lambda * regularizer(params.factors());
    }
    (risk, residuals)
}

/// Regularized empirical risk and the per-sample residuals ∂ℓ_n/∂f / N.
pub fn empirical_risk(params: &ModelParams, dataset: &RelationalDataset, lambda: f64) -> Result<(f64, Vec<f64>)> {
    if dataset.num_samples() == 0 {
        return Err(Error::Data("empirical risk of an empty dataset".into()));
    }
    let caches = compute_mode_caches(params, dataset)?;
    let scores = predict_batch(params, dataset, &caches)?;
    Ok(risk_from_scores(params, &scores, dataset.labels(), lambda))
}

pub fn mean_squared_error(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Data("mean squared error of zero samples".into()));
    }
    Ok(predictions
        .iter()
        .zip(labels)
        .map(|(f, y)| (f - y) * (f - y))
        .sum::<f64>()
        / labels.len() as f64)
}

/// Analytic gradient of the regularized risk over all samples.
///
/// `residuals[n]` must be `∂ℓ_n/∂f / N` for the current parameters, as
/// returned by [`empirical_risk`].
pub fn gradients(
    params: &ModelParams,
    dataset: &RelationalDataset,
    caches: &ModeCaches,
    residuals: &[f64],
    lambda: f64,
) -> Result<GradientSet> {
    if params.schema() != dataset.schema() {
        return Err(Error::Schema("model and dataset schemas differ".into()));
    }
    caches.check_current(params, dataset)?;
    if residuals.len() != dataset.num_samples() {
        return Err(Error::Shape(format!(
            "{} residuals for {} samples",
            residuals.len(),
            dataset.num_samples()
        )));
    }
    let samples: Vec<usize> = (0..dataset.num_samples()).collect();
    Ok(accumulate_gradients(
        params, dataset, caches, &samples, residuals, lambda,
    ))
}

/// Gradient over `samples` (ascending order is the accumulation order) with
/// `residuals` aligned to `samples`.
///
/// Θ gradients are gathered per distinct block column first and scattered
/// through the block's non-zeros once at the end, so the sparse product
/// `X^(m) G` costs `R·N_z(X^B(m))` rather than `R·N_z(X^(m))`.
fn accumulate_gradients(
    params: &ModelParams,
    dataset: &RelationalDataset,
    caches: &ModeCaches,
    samples: &[usize],
    residuals: &[f64],
    lambda: f64,
) -> GradientSet {
    let schema = params.schema();
    let f = params.factors();
    let r = params.rank();
    let blocks = dataset.blocks();
    let mut grad = FactorSet::zeros(schema, r);
    let mut column_grads: Vec<Array2<f64>> = blocks.iter().map(|b| Array2::zeros((b.num_columns(), r))).collect();

    let max_modes = schema.views().iter().map(Vec::len).max().unwrap_or(0);
    let mut factors = vec![0.0; max_modes * r];
    let mut prefix = vec![0.0; (max_modes + 1) * r];
    let mut suffix = vec![0.0; (max_modes + 1) * r];

    for (&n, &res) in samples.iter().zip(residuals) {
        for (v, modes) in schema.views().iter().enumerate() {
            let mv = modes.len();
            let bias = f.bias[v].as_slice().expect("standard layout");
            for (k, &m) in modes.iter().enumerate() {
                let h = caches.column(m, blocks[m].mapping()[n]);
                for ((o, h), b) in factors[k * r..(k + 1) * r]
                    .iter_mut()
                    .zip(h)
                    .zip(&bias[k * r..(k + 1) * r])
                {
                    *o = h + b;
                }
            }
            prefix[..r].fill(1.0);
            for k in 0..mv {
                for i in 0..r {
                    prefix[(k + 1) * r + i] = prefix[k * r + i] * factors[k * r + i];
                }
            }
            suffix[mv * r..(mv + 1) * r].fill(1.0);
            for k in (0..mv).rev() {
                for i in 0..r {
                    suffix[k * r + i] = factors[k * r + i] * suffix[(k + 1) * r + i];
                }
            }

            let pi = &prefix[mv * r..(mv + 1) * r];
            for (g, p) in grad.phi.row_mut(v).iter_mut().zip(pi) {
                *g += res * p;
            }
            let phi = f.phi.row(v);
            let bias_grad = grad.bias[v].as_slice_mut().expect("standard layout");
            for (k, &m) in modes.iter().enumerate() {
                let j = blocks[m].mapping()[n];
                let col = column_grads[m].as_slice_mut().expect("standard layout");
                for i in 0..r {
                    let w = res * phi[i] * (prefix[k * r + i] * suffix[(k + 1) * r + i]);
                    bias_grad[k * r + i] += w;
                    col[j * r + i] += w;
                }
            }
        }
    }

    for ((theta_grad, cg), block) in grad.theta.iter_mut().zip(&column_grads).zip(blocks) {
        let tg = theta_grad.as_slice_mut().expect("standard layout");
        let cg = cg.as_slice().expect("standard layout");
        for (j, col) in block.columns().enumerate() {
            let g = &cg[j * r..(j + 1) * r];
            for (i, x) in col.iter() {
                for (t, g) in tg[i * r..(i + 1) * r].iter_mut().zip(g) {
                    *t += x * g;
                }
            }
        }
    }

    if lambda != 0.0 {
        for ((_, g), (_, p)) in grad.groups_mut().into_iter().zip(f.groups()) {
            for (g, p) in g.iter_mut().zip(p) {
                *g += lambda * p;
            }
        }
    }
    grad
}

/// One bias-corrected Adam update. Leaves everything untouched if any
/// gradient entry is non-finite.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &GradientSet,
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<()> {
    if !grads.same_shape(params.factors()) || !state.first.same_shape(grads) || !state.second.same_shape(grads) {
        return Err(Error::Shape(
            "gradient, optimizer state and parameters differ in shape".into(),
        ));
    }
    if let Some((group, offset)) = grads.find_non_finite() {
        return Err(Error::NonFiniteGradient {
            group: format!("{group} at offset {offset}"),
        });
    }
    state.step += 1;
    let t = state.step as f64;
    let (b1, b2, lr, eps) = (
        config.adam_beta1,
        config.adam_beta2,
        config.learning_rate,
        config.adam_epsilon,
    );
    let bc1 = 1.0 - b1.powf(t);
    let bc2 = 1.0 - b2.powf(t);

    let groups = params
        .factors_mut()
        .groups_mut()
        .into_iter()
        .zip(grads.groups())
        .zip(state.first.groups_mut())
        .zip(state.second.groups_mut());
    for ((((_, p), (_, g)), (_, m)), (_, v)) in groups {
        for (((p, g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Regularized risk on the full training set after the epoch's updates.
    pub train_risk: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned; `None` when no epoch ran.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

impl TrainLog {
    pub fn best_val_mse(&self) -> Option<f64> {
        self.epochs.iter().map(|e| e.val_mse).reduce(f64::min)
    }
}

/// Trains from a seeded variance-scaling initialization and returns the
/// parameters of the epoch with the lowest validation MSE.
pub fn train(
    train_set: &RelationalDataset,
    val_set: &RelationalDataset,
    config: &TrainConfig,
) -> Result<(ModelParams, TrainLog)> {
    config.validate()?;
    if train_set.schema() != val_set.schema() {
        return Err(Error::Schema("training and validation schemas differ".into()));
    }
    if train_set.num_samples() == 0 || val_set.num_samples() == 0 {
        return Err(Error::Data("training and validation sets must be non-empty".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params =
        ModelParams::init_variance_scaling(train_set.schema().clone(), config.rank, config.init_scale, &mut rng)?;
    let mut state = AdamState::new(&params);
    let mut log = TrainLog::default();
    let mut best: Option<(f64, ModelParams)> = None;
    let mut since_best = 0;

    let n = train_set.num_samples();
    let batch = if config.batch_size == 0 {
        n
    } else {
        config.batch_size.min(n)
    };
    let mut order: Vec<usize> = (0..n).collect();
    let lambda = config.reg_lambda;

    for epoch in 1..=config.max_epochs {
        if batch == n {
            let caches = compute_mode_caches(&params, train_set)?;
            let scores = predict_batch(&params, train_set, &caches)?;
            let (_, residuals) = risk_from_scores(&params, &scores, train_set.labels(), lambda);
            let grads = gradients(&params, train_set, &caches, &residuals, lambda)?;
            adam_step(&mut params, &grads, &mut state, config)?;
        } else {
            order.shuffle(&mut rng);
            let mut idx = Vec::with_capacity(batch);
            for chunk in order.chunks(batch) {
                idx.clear();
                idx.extend_from_slice(chunk);
                idx.sort_unstable();
                // every step moves Θ, so the caches are rebuilt per batch
                let caches = compute_mode_caches(&params, train_set)?;
                let scores = model::predict_samples(&params, train_set, &caches, &idx);
                let scale = 2.0 / idx.len() as f64;
                let residuals: Vec<f64> = scores
                    .iter()
                    .zip(&idx)
                    .map(|(f, &s)| scale * (f - train_set.labels()[s]))
                    .collect();
                let grads = accumulate_gradients(&params, train_set, &caches, &idx, &residuals, lambda);
                adam_step(&mut params, &grads, &mut state, config)?;
            }
        }

        let last_finite_epoch = log.epochs.last().map(|e| e.epoch);
        let (train_risk, _) = empirical_risk(&params, train_set, lambda)?;
        let val_caches = compute_mode_caches(&params, val_set)?;
        let val_mse = mean_squared_error(&predict_batch(&params, val_set, &val_caches)?, val_set.labels())?;
        if !train_risk.is_finite() || !val_mse.is_finite() {
            return Err(Error::Diverged {
                epoch,
                last_finite_epoch,
            });
        }
        log::debug!("epoch {epoch}: train risk {train_risk:.6e}, val mse {val_mse:.6e}");
        log.epochs.push(EpochRecord {
            epoch,
            train_risk,
            val_mse,
        });

        if best.as_ref().is_none_or(|(b, _)| val_mse < *b) {
            best = Some((val_mse, params.clone()));
            log.best_epoch = Some(epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                log.stopped_early = true;
                break;
            }
        }
    }

    Ok((best.map_or(params, |(_, p)| p), log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SparseVector;
    use crate::model::predict_one;
    use crate::model::tests::worked_example;
    use crate::oracle::finite_diff_gradients;
    use crate::schema::Schema;

    fn worked_dataset(label: f64) -> (ModelParams, RelationalDataset) {
        let (p, x) = worked_example();
        let d = RelationalDataset::from_plain(p.schema().clone(), &[x], vec![label]).unwrap();
        (p, d)
    }

    #[test]
    fn perfect_fit_has_zero_risk() {
        let (p, d) = worked_dataset(0.0);
        let f = predict_one(&p, &d.sample_view(0).unwrap()).unwrap();
        let d = d.with_labels(vec![f]).unwrap();
        let (risk, res) = empirical_risk(&p, &d, 0.0).unwrap();
        assert_eq!(risk, 0.0);
        assert_eq!(res, vec![0.0]);
    }

    #[test]
    fn single_sample_risk_and_residual() {
        let (p, d) = worked_dataset(10.0);
        let (risk, res) = empirical_risk(&p, &d, 0.0).unwrap();
        assert!((risk - 0.0576).abs() < 1e-12, "{risk}");
        assert!((res[0] - 0.48).abs() < 1e-12, "{}", res[0]);
    }

    #[test]
    fn zero_params_risk_is_mean_square_label() {
        let (p, d) = worked_dataset(0.0);
        let z = ModelParams::zeros(p.schema().clone(), 3).unwrap();
        let plain = d.to_plain();
        let d = RelationalDataset::from_plain(
            z.schema().clone(),
            &[plain[0].clone(), plain[0].clone()],
            vec![3.0, -1.0],
        )
        .unwrap();
        let (risk, _) = empirical_risk(&z, &d, 0.7).unwrap();
        assert_eq!(risk, 5.0);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let (p, d) = worked_dataset(0.0);
        let e = d.subset(&[]).unwrap();
        assert!(empirical_risk(&p, &e, 0.0).is_err());
    }

    #[test]
    fn worked_example_gradients() {
        let (p, d) = worked_dataset(10.0);
        let (_, res) = empirical_risk(&p, &d, 0.0).unwrap();
        let c = compute_mode_caches(&p, &d).unwrap();
        let g = gradients(&p, &d, &c, &res, 0.0).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(g.phi[[0, 0]], 2.4576), "{}", g.phi);
        assert!(close(g.bias[0][[0, 0]], 3.072), "{}", g.bias[0]);
        assert!(close(g.bias[0][[1, 0]], 1.536), "{}", g.bias[0]);
        assert!(
            close(g.theta[0][[0, 0]], 3.072) && close(g.theta[0][[1, 0]], 6.144),
            "{}",
            g.theta[0]
        );
        assert!(close(g.theta[1][[0, 0]], 4.608), "{}", g.theta[1]);

        let fd = finite_diff_gradients(&p, &d, 0.0, 1e-5).unwrap();
        for ((_, a), (_, b)) in g.groups().into_iter().zip(fd.groups()) {
            for (a, b) in a.iter().zip(b) {
                assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_residuals_leave_only_the_regularizer() {
        let (p, d) = worked_dataset(10.0);
        let c = compute_mode_caches(&p, &d).unwrap();
        let g = gradients(&p, &d, &c, &[0.0], 0.0).unwrap();
        assert!(g.groups().iter().all(|(_, s)| s.iter().all(|&x| x == 0.0)));
        let g = gradients(&p, &d, &c, &[0.0], 0.25).unwrap();
        for ((_, a), (_, b)) in g.groups().into_iter().zip(p.factors().groups()) {
            for (a, b) in a.iter().zip(b) {
                assert_eq!(*a, 0.25 * b);
            }
        }
    }

    #[test]
    fn gradients_reject_stale_caches_and_bad_shapes() {
        let (mut p, d) = worked_dataset(10.0);
        let c = compute_mode_caches(&p, &d).unwrap();
        assert!(gradients(&p, &d, &c, &[0.0, 1.0], 0.0).is_err());
        p.factors_mut().phi[[0, 0]] = 3.0;
        assert!(matches!(
            gradients(&p, &d, &c, &[0.0], 0.0),
            Err(Error::StaleCache { .. })
        ));
    }

    fn scalar_model() -> ModelParams {
        let (p, _) = worked_example();
        p
    }

    fn single_grad(p: &ModelParams, value: f64) -> GradientSet {
        let mut g = FactorSet::zeros(p.schema(), p.rank());
        g.phi[[0, 0]] = value;
        g
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op() {
        let mut p = scalar_model();
        let before = p.clone();
        let mut s = AdamState::new(&p);
        let g = FactorSet::zeros(p.schema(), p.rank());
        adam_step(&mut p, &g, &mut s, &TrainConfig::default()).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.step(), 1);
    }

    #[test]
    fn adam_first_and_second_steps() {
        let mut p = scalar_model();
        let mut s = AdamState::new(&p);
        let cfg = TrainConfig::default();
        let g = single_grad(&p, 3.072);
        let start = p.factors().phi[[0, 0]];
        adam_step(&mut p, &g, &mut s, &cfg).unwrap();
        let first = p.factors().phi[[0, 0]] - start;
        assert!((first + 0.01).abs() < 1e-8, "{first}");
        adam_step(&mut p, &g, &mut s, &cfg).unwrap();
        let second = p.factors().phi[[0, 0]] - start - first;
        assert!((second + 0.01).abs() < 1e-8, "{second}");
        assert_eq!(s.step(), 2);
        assert!(s
            .second_moment()
            .groups()
            .iter()
            .all(|(_, v)| v.iter().all(|&x| x >= 0.0)));
    }

    #[test]
    fn adam_rejects_non_finite_gradient() {
        let mut p = scalar_model();
        let before = p.clone();
        let mut s = AdamState::new(&p);
        let mut g = FactorSet::zeros(p.schema(), p.rank());
        g.bias[0][[1, 0]] = f64::NAN;
        let err = adam_step(&mut p, &g, &mut s, &TrainConfig::default()).unwrap_err();
        assert!(err.to_string().contains("bias (view 0)"), "{err}");
        assert!(err.is_numeric());
        assert_eq!(p, before);
        assert_eq!(s.step(), 0);
    }

    fn tiny_problem() -> (RelationalDataset, RelationalDataset) {
        let schema = Schema::new(vec![3, 2, 2], vec![vec![0, 1], vec![1, 2]]).unwrap();
        let mut samples = Vec::new();
        let mut labels = Vec::new();
        for a in 0..3 {
            for b in 0..2 {
                for c in 0..2 {
                    samples.push(vec![
                        SparseVector::new(3, vec![(a, 1.0)]).unwrap(),
                        SparseVector::new(2, vec![(b, 1.0)]).unwrap(),
                        SparseVector::new(2, vec![(c, 0.5)]).unwrap(),
                    ]);
                    labels.push(a as f64 - 0.5 * b as f64 + 0.25 * (a * c) as f64);
                }
            }
        }
        let d = RelationalDataset::from_plain(schema, &samples, labels).unwrap();
        (d.clone(), d)
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let (t, v) = tiny_problem();
        let cfg = TrainConfig {
            rank: 2,
            max_epochs: 0,
            seed: 3,
            ..TrainConfig::default()
        };
        let (p, log) = train(&t, &v, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let init = ModelParams::init_variance_scaling(t.schema().clone(), 2, 2.0, &mut rng).unwrap();
        assert_eq!(p, init);
        assert!(log.epochs.is_empty());
        assert_eq!(log.best_epoch, None);
    }

    #[test]
    fn training_is_deterministic() {
        let (t, v) = tiny_problem();
        for batch_size in [0, 5] {
            let cfg = TrainConfig {
                rank: 3,
                max_epochs: 15,
                seed: 11,
                batch_size,
                reg_lambda: 1e-3,
                ..TrainConfig::default()
            };
            let a = train(&t, &v, &cfg).unwrap();
            let b = train(&t, &v, &cfg).unwrap();
            assert_eq!(a.0, b.0);
            let bits = |l: &TrainLog| {
                l.epochs
                    .iter()
                    .map(|e| (e.train_risk.to_bits(), e.val_mse.to_bits()))
                    .collect::<Vec<_>>()
            };
            assert_eq!(bits(&a.1), bits(&b.1));
        }
    }

    #[test]
    fn small_learning_rate_descends() {
        let (t, v) = tiny_problem();
        let cfg = TrainConfig {
            rank: 3,
            learning_rate: 1e-3,
            max_epochs: 10,
            patience: 100,
            seed: 5,
            ..TrainConfig::default()
        };
        let (_, log) = train(&t, &v, &cfg).unwrap();
        assert_eq!(log.epochs.len(), 10);
        for w in log.epochs.windows(2) {
            assert!(w[1].train_risk <= w[0].train_risk, "{:?}", log.epochs);
        }
    }

    #[test]
    fn early_stopping_returns_best_epoch() {
        let (t, _) = tiny_problem();
        // validation targets unrelated to training targets force early stopping
        let v = t.with_labels(t.labels().iter().map(|y| -y).collect()).unwrap();
        let cfg = TrainConfig {
            rank: 3,
            learning_rate: 0.05,
            max_epochs: 200,
            patience: 5,
            seed: 2,
            ..TrainConfig::default()
        };
        let (p, log) = train(&t, &v, &cfg).unwrap();
        assert!(log.stopped_early);
        let caches = compute_mode_caches(&p, &v).unwrap();
        let mse = mean_squared_error(&predict_batch(&p, &v, &caches).unwrap(), v.labels()).unwrap();
        assert_eq!(mse, log.best_val_mse().unwrap());
        assert_eq!(log.epochs[log.best_epoch.unwrap() - 1].val_mse, mse);
    }

    #[test]
    fn divergence_is_reported() {
        let (t, v) = tiny_problem();
        let t = t.with_labels(t.labels().iter().map(|y| y * 1e300).collect()).unwrap();
        let cfg = TrainConfig {
            rank: 2,
            max_epochs: 5,
            ..TrainConfig::default()
        };
        let err = train(&t, &v, &cfg).unwrap_err();
        assert!(err.is_numeric(), "{err}");
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = [
            TrainConfig {
                rank: 0,
                ..Default::default()
            },
            TrainConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            TrainConfig {
                reg_lambda: -1.0,
                ..Default::default()
            },
            TrainConfig {
                adam_beta1: 1.0,
                ..Default::default()
            },
            TrainConfig {
                adam_beta2: -0.1,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mean_squared_error(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 2.5);
        assert_eq!(mean_squared_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(mean_squared_error(&[1.0], &[1.0, 2.0]).is_err());
    }
}
