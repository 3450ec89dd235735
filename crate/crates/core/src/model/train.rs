use rand::seq::SliceRandom;

use super::rater::{Example, RaterModel};
use super::ModelError;
use crate::exec::{Clock, Executor};
use crate::nn::{adam_step, AdamConfig, Scalar, Tensor};
use crate::prelude::*;
use crate::rng::{mix_seed, seeded_rng};
use crate::stats::pearson;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Drives the per-epoch shuffles.
    pub seed: u64,
    /// Samples per work unit. Gradients are summed inside a unit and units
    /// are added in order, so this, not the thread count, fixes the result.
    pub chunk_size: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { epochs: 5, batch_size: 64, adam: AdamConfig::default(), seed: 0, chunk_size: 8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochReport {
    /// One-based.
    pub epoch: usize,
    /// Mean summed squared error per training sample.
    pub train_loss: f64,
    /// Dev Pearson ρ per output; `None` where a column is constant.
    pub dev_pearson: Vec<Option<f64>>,
    /// Mean over the defined entries of `dev_pearson`, 0 if there are none.
    pub dev_mean_pearson: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochReport>,
    /// One-based epoch whose parameters the model holds on return.
    pub selected_epoch: usize,
}

fn dev_correlations(pred: &[Vec<f64>], gold: &[&[f64]], dims: usize) -> Vec<Option<f64>> {
    (0..dims)
        .map(|j| {
            let p: Vec<f64> = pred.iter().map(|r| r[j]).collect();
            let g: Vec<f64> = gold.iter().map(|r| r[j]).collect();
            pearson(&p, &g).ok()
        })
        .collect()
}

/// Minibatch Adam on mean squared error. After the last epoch the model is
/// reset to the epoch with the best mean dev correlation, the earliest one on
/// ties.
pub fn train<T: Scalar, E: Executor, C: Clock>(
    model: &mut RaterModel<T>,
    train: &[Example],
    dev: &[Example],
    opts: &TrainOptions,
    exec: &E,
    clock: &C,
) -> Result<TrainReport, ModelError> {
    if train.is_empty() {
        return Err(ModelError::EmptySplit("train"));
    }
    if dev.is_empty() {
        return Err(ModelError::EmptySplit("dev"));
    }
    let dims = model.config().out_dims;
    if let Some(ex) = train.iter().chain(dev).find(|e| e.target.len() != dims) {
        return Err(ModelError::TargetDimensionMismatch { expected: dims, found: ex.target.len() });
    }
    let gold: Vec<&[f64]> = dev.iter().map(|e| e.target.as_slice()).collect();
    let mut reports = Vec::with_capacity(opts.epochs);
    let mut best: Option<(usize, f64, Vec<Tensor<T>>)> = None;
    for epoch in 0..opts.epochs {
        let start = clock.seconds();
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut seeded_rng(mix_seed(opts.seed, epoch as u64)));
        let mut loss = 0.0;
        for batch in order.chunks(opts.batch_size.max(1)) {
            let examples: Vec<&Example> = batch.iter().map(|&i| &train[i]).collect();
            let proj = model.projections()?;
            let grads = model.batch_gradients(&proj, &examples, opts.chunk_size, exec)?;
            loss += grads.loss;
            model.load_gradients(grads);
            adam_step(model.params_mut(), &opts.adam)?;
        }
        let pred: Vec<Vec<f64>> = model
            .predict(dev, exec)?
            .into_iter()
            .map(|r| r.into_iter().map(Scalar::to_f64).collect())
            .collect();
        let dev_pearson = dev_correlations(&pred, &gold, dims);
        let defined: Vec<f64> = dev_pearson.iter().flatten().copied().collect();
        let dev_mean_pearson =
            if defined.is_empty() { 0.0 } else { defined.iter().sum::<f64>() / defined.len() as f64 };
        if best.as_ref().is_none_or(|b| dev_mean_pearson > b.1) {
            best = Some((epoch, dev_mean_pearson, model.params().iter().map(|p| p.value.clone()).collect()));
        }
        reports.push(EpochReport {
            epoch: epoch + 1,
            train_loss: loss / train.len() as f64,
            dev_pearson,
            dev_mean_pearson,
            seconds: clock.seconds() - start,
        });
    }
    let selected_epoch = match best {
        Some((epoch, _, values)) => {
            for (p, v) in model.params_mut().iter_mut().zip(values) {
                p.value = v;
            }
            epoch + 1
        }
        None => 0,
    };
    Ok(TrainReport { epochs: reports, selected_epoch })
}
