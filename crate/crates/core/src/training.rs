use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{Activation, Network};
use crate::profiling::activation_rates;
use crate::scalar::Scalar;

/// Probability floor inside cross-entropy: `loss = -ln(max(p, CE_CLAMP))`.
pub const CE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        // A zero learning rate is allowed (gradient applied with step 0).
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Config(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    /// Mean cross-entropy per epoch, in epoch order.
    pub epoch_losses: Vec<f64>,
}

/// Plain mini-batch SGD with softmax cross-entropy. The sample order is
/// reshuffled every epoch from the config seed, so a run is fully
/// reproducible. Networks that already carry shortcuts are rejected:
/// training is a pre-compression step.
pub fn train<F: Scalar>(
    net: &mut Network<F>,
    data: &Dataset<F>,
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    cfg.validate()?;
    check_trainable(net, data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.n_samples()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        epoch_losses.push(sgd_epoch(net, data, &order, cfg, epoch)?);
    }
    Ok(TrainLog { epoch_losses })
}

fn check_trainable<F: Scalar>(net: &Network<F>, data: &Dataset<F>) -> Result<()> {
    if !net.shortcuts.is_empty() {
        return Err(Error::Unsupported(
            "cannot train a network with shortcuts; train before compressing".into(),
        ));
    }
    let last = net.n_layers() - 1;
    if net.layers[last].activation != Activation::Softmax {
        return Err(Error::Unsupported(
            "training requires a softmax output layer".into(),
        ));
    }
    if net.layers[..last]
        .iter()
        .any(|l| l.activation == Activation::Softmax)
    {
        return Err(Error::Unsupported(
            "softmax on a hidden layer is not trainable".into(),
        ));
    }
    if data.n_samples() == 0 {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    if data.n_features() != net.input_dim() {
        return Err(Error::Dimension(format!(
            "network expects input width {}, dataset has {}",
            net.input_dim(),
            data.n_features()
        )));
    }
    if data.n_classes() != net.out_dim() {
        return Err(Error::Dimension(format!(
            "network has {} outputs, dataset has {} classes",
            net.out_dim(),
            data.n_classes()
        )));
    }
    Ok(())
}

/// One pass over `order` in mini-batches; returns the mean sample loss.
/// Gradients are averaged within each batch (softmax + cross-entropy:
/// `dz = p - onehot`; ReLU gates the backward pass where its output was 0).
fn sgd_epoch<F: Scalar>(
    net: &mut Network<F>,
    data: &Dataset<F>,
    order: &[usize],
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<f64> {
    let n_layers = net.layers.len();
    let mut total_loss = 0.0f64;
    for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
        let mut grad_w: Vec<Matrix<F>> = net
            .layers
            .iter()
            .map(|l| Matrix::zeros(l.out_dim(), l.in_dim()))
            .collect();
        let mut grad_b: Vec<Vec<F>> = net
            .layers
            .iter()
            .map(|l| vec![F::zero(); l.out_dim()])
            .collect();
        for &i in batch {
            let (x, label) = data.sample(i);
            let mut acts: Vec<Vec<F>> = Vec::with_capacity(n_layers + 1);
            acts.push(x.to_vec());
            for layer in &net.layers {
                let mut z = layer.weights.matvec(acts.last().expect("seeded with x"));
                for (zi, &bi) in z.iter_mut().zip(&layer.biases) {
                    *zi += bi;
                }
                layer.activation.apply(&mut z);
                acts.push(z);
            }
            let probs = acts.last().expect("at least one layer");
            let p = probs[label];
            if !p.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            total_loss += -p.as_f64().max(CE_CLAMP).ln();

            let mut dz: Vec<F> = probs.clone();
            dz[label] -= F::one();
            for l in (0..n_layers).rev() {
                grad_w[l].add_scaled_outer(&dz, &acts[l], F::one());
                for (g, d) in grad_b[l].iter_mut().zip(&dz) {
                    *g += *d;
                }
                if l == 0 {
                    break;
                }
                let back = net.layers[l].weights.matvec_transpose(&dz);
                dz = back
                    .iter()
                    .zip(&acts[l])
                    .map(|(&g, &a)| match net.layers[l - 1].activation {
                        Activation::ReLU => {
                            if a > F::zero() {
                                g
                            } else {
                                F::zero()
                            }
                        }
                        Activation::Identity => g,
                        Activation::Softmax => unreachable!("rejected by check_trainable"),
                    })
                    .collect();
            }
        }
        let step = F::from_f64(-(cfg.learning_rate / batch.len() as f64));
        for (layer, (gw, gb)) in net.layers.iter_mut().zip(grad_w.iter().zip(&grad_b)) {
            layer.weights.add_scaled(gw, step);
            for (b, g) in layer.biases.iter_mut().zip(gb) {
                *b += step * *g;
            }
        }
    }
    Ok(total_loss / order.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportancePruneConfig {
    /// Stop once total parameters drop to this fraction of the original.
    pub target_fraction: f64,
    /// Fraction of remaining hidden neurons removed per qualifying epoch
    /// (at least one neuron).
    pub prune_rate: f64,
    /// Neurons are only removed in epochs where train accuracy exceeds
    /// this floor.
    pub min_accuracy: f64,
    pub max_epochs: usize,
}

impl ImportancePruneConfig {
    pub fn new(target_fraction: f64) -> Self {
        Self {
            target_fraction,
            prune_rate: 0.05,
            min_accuracy: 0.70,
            max_epochs: 15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.target_fraction.is_finite()
            || self.target_fraction <= 0.0
            || self.target_fraction > 1.0
        {
            return Err(Error::Config(format!(
                "target_fraction must be in (0, 1], got {}",
                self.target_fraction
            )));
        }
        if !self.prune_rate.is_finite() || self.prune_rate <= 0.0 || self.prune_rate > 1.0 {
            return Err(Error::Config(format!(
                "prune_rate must be in (0, 1], got {}",
                self.prune_rate
            )));
        }
        if !self.min_accuracy.is_finite() || !(0.0..=1.0).contains(&self.min_accuracy) {
            return Err(Error::Config(format!(
                "min_accuracy must be in [0, 1], got {}",
                self.min_accuracy
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneEpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub removed: usize,
    pub total_params: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneLog {
    pub epochs: Vec<PruneEpochLog>,
    pub target_reached: bool,
    pub start_params: usize,
    pub final_params: usize,
}

/// Shrink a network by alternating training with removal of its least-used
/// neurons: each epoch runs one SGD pass, then — if train accuracy is above
/// the floor — deletes the `prune_rate` share of hidden neurons with the
/// globally lowest activation rates on the train set (ties broken by lower
/// layer index, then lower neuron index). A layer is never emptied. Stops
/// when the parameter target is reached or after `max_epochs` epochs;
/// `train_cfg.epochs` is ignored here.
pub fn importance_prune<F: Scalar>(
    net: &mut Network<F>,
    data: &Dataset<F>,
    cfg: &ImportancePruneConfig,
    train_cfg: &TrainConfig,
) -> Result<PruneLog> {
    cfg.validate()?;
    train_cfg.validate()?;
    check_trainable(net, data)?;

    let start_params = net.count_parameters().total_params;
    let target = cfg.target_fraction * start_params as f64;
    let mut log = PruneLog {
        epochs: Vec::new(),
        target_reached: start_params as f64 <= target,
        start_params,
        final_params: start_params,
    };
    if log.target_reached {
        return Ok(log);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(train_cfg.seed);
    let mut order: Vec<usize> = (0..data.n_samples()).collect();
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        sgd_epoch(net, data, &order, train_cfg, epoch)?;
        let (train_loss, train_accuracy) = crate::harness::evaluate(net, data)?;

        let mut removed = 0usize;
        if train_accuracy > cfg.min_accuracy {
            removed = prune_lowest_rated(net, data, cfg.prune_rate)?;
        }
        let total_params = net.count_parameters().total_params;
        log.epochs.push(PruneEpochLog {
            epoch,
            train_loss,
            train_accuracy,
            removed,
            total_params,
        });
        log.final_params = total_params;
        if total_params as f64 <= target {
            log.target_reached = true;
            break;
        }
    }
    Ok(log)
}

/// Remove the `rate` share (at least one) of hidden neurons with the lowest
/// activation rates, skipping any layer down to its last neuron. Returns how
/// many were removed.
fn prune_lowest_rated<F: Scalar>(
    net: &mut Network<F>,
    data: &Dataset<F>,
    rate: f64,
) -> Result<usize> {
    let profile = activation_rates(net, data, "importance-ranking")?;
    let mut ranked: Vec<(f64, usize, usize)> = profile
        .rates
        .iter()
        .enumerate()
        .flat_map(|(l, rs)| rs.iter().enumerate().map(move |(j, &r)| (r, l, j)))
        .collect();
    ranked.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("rates are finite")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let n_hidden: usize = profile.rates.iter().map(Vec::len).sum();
    let quota = ((rate * n_hidden as f64).floor() as usize).max(1);
    let mut remaining: Vec<usize> = profile.rates.iter().map(Vec::len).collect();
    let mut per_layer: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut taken = 0usize;
    for (_, l, j) in ranked {
        if taken == quota {
            break;
        }
        if remaining[l] <= 1 {
            continue;
        }
        remaining[l] -= 1;
        per_layer.entry(l).or_default().push(j);
        taken += 1;
    }
    for (l, mut neurons) in per_layer {
        neurons.sort_unstable();
        net.remove_hidden_neurons(l, &neurons)?;
    }
    Ok(taken)
}
