use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::network::{Activation, Network};
use crate::scalar::Scalar;

/// Per-neuron activation rates for every hidden layer, measured on one
/// dataset: the fraction of samples where the neuron's post-activation is
/// strictly positive. A rate of 1.0 means the ReLU never clipped, i.e. the
/// neuron behaved linearly on every sample seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationProfile {
    /// `rates[l][i]` for hidden layer `l`, neuron `i`; values in `[0, 1]`.
    pub rates: Vec<Vec<f64>>,
    pub n_samples: usize,
    pub dataset_tag: String,
}

impl ActivationProfile {
    pub fn hidden_widths(&self) -> Vec<usize> {
        self.rates.iter().map(Vec::len).collect()
    }

    /// Whether this profile was measured on a net of the same hidden shape.
    pub fn matches<F: Scalar>(&self, net: &Network<F>) -> bool {
        let widths: Vec<usize> = net.layers()[..net.n_layers() - 1]
            .iter()
            .map(|l| l.out_dim())
            .collect();
        self.hidden_widths() == widths
    }
}

/// Measure activation rates by running every sample through the network
/// (shortcuts included). Counting is exact integer arithmetic, so the result
/// does not depend on thread scheduling.
pub fn activation_rates<F: Scalar>(
    net: &Network<F>,
    data: &Dataset<F>,
    dataset_tag: &str,
) -> Result<ActivationProfile> {
    if data.n_samples() == 0 {
        return Err(Error::Data("cannot profile on an empty dataset".into()));
    }
    if data.n_features() != net.input_dim() {
        return Err(Error::Dimension(format!(
            "network expects input width {}, dataset has {}",
            net.input_dim(),
            data.n_features()
        )));
    }
    let n_hidden = net.n_layers() - 1;
    let widths: Vec<usize> = net.layers()[..n_hidden]
        .iter()
        .map(|l| l.out_dim())
        .collect();

    let counts = (0..data.n_samples())
        .into_par_iter()
        .try_fold(
            || widths.iter().map(|&w| vec![0u64; w]).collect::<Vec<_>>(),
            |mut acc, i| -> Result<Vec<Vec<u64>>> {
                let (_, trace) = net.forward_with_trace(data.sample(i).0)?;
                for (layer_counts, post) in acc.iter_mut().zip(&trace.post) {
                    for (c, &v) in layer_counts.iter_mut().zip(post) {
                        if v > F::zero() {
                            *c += 1;
                        }
                    }
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || widths.iter().map(|&w| vec![0u64; w]).collect::<Vec<_>>(),
            |mut a, b| {
                for (la, lb) in a.iter_mut().zip(b) {
                    for (x, y) in la.iter_mut().zip(lb) {
                        *x += y;
                    }
                }
                Ok(a)
            },
        )?;

    let n = data.n_samples() as f64;
    Ok(ActivationProfile {
        rates: counts
            .into_iter()
            .map(|layer| layer.into_iter().map(|c| c as f64 / n).collect())
            .collect(),
        n_samples: data.n_samples(),
        dataset_tag: dataset_tag.to_string(),
    })
}

/// Hidden neurons that are linear for *every* possible input, found from
/// weight signs alone: a ReLU neuron whose incoming weights and bias are all
/// non-negative has a non-negative pre-activation whenever its inputs are
/// non-negative, so the ReLU never clips.
///
/// The first hidden layer is excluded — the network input itself may be
/// negative, so the argument does not start there. For the same reason a
/// neuron only qualifies if everything feeding it is guaranteed
/// non-negative: the previous layer must be ReLU, and if a shortcut feeds
/// this layer, its weights must be non-negative and the inputs it taps must
/// all be post-ReLU values (a shortcut run reaching back to the network
/// input disqualifies the layer).
///
/// Returns sorted `(layer, neuron)` pairs.
pub fn detect_provable_linear<F: Scalar>(net: &Network<F>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let n_hidden = net.n_layers() - 1;
    for l in 1..n_hidden {
        if !layer_inputs_guaranteed_nonneg(net, l) {
            continue;
        }
        let incoming = net.shortcut_at(l - 1);
        let layer = &net.layers()[l];
        if layer.activation() != Activation::ReLU {
            continue;
        }
        for j in 0..layer.out_dim() {
            let weights_ok = layer.weights().row(j).iter().all(|&w| w >= F::zero());
            let bias_ok = layer.biases()[j] >= F::zero();
            let shortcut_ok =
                incoming.is_none_or(|sc| sc.weights().row(j).iter().all(|&w| w >= F::zero()));
            if weights_ok && bias_ok && shortcut_ok {
                out.push((l, j));
            }
        }
    }
    out
}

/// First-hidden-layer neurons that meet the sign conditions but are excluded
/// from [`detect_provable_linear`] because the network input may be
/// negative. Reported for visibility only.
pub fn first_layer_sign_candidates<F: Scalar>(net: &Network<F>) -> Vec<usize> {
    if net.n_layers() < 2 || net.layers()[0].activation() != Activation::ReLU {
        return Vec::new();
    }
    let layer = &net.layers()[0];
    (0..layer.out_dim())
        .filter(|&j| {
            layer.weights().row(j).iter().all(|&w| w >= F::zero()) && layer.biases()[j] >= F::zero()
        })
        .collect()
}

/// True when every value flowing into layer `l`'s pre-activation is
/// guaranteed non-negative regardless of the network input: the direct input
/// (previous layer post-ReLU) and, if a shortcut feeds this layer, every
/// segment of the concatenated history it taps.
fn layer_inputs_guaranteed_nonneg<F: Scalar>(net: &Network<F>, l: usize) -> bool {
    if l == 0 || net.layers()[l - 1].activation() != Activation::ReLU {
        return false;
    }
    if net.shortcut_at(l - 1).is_none() {
        return true;
    }
    // The shortcut at l-1 taps the inputs of layers start..=l-1, where
    // `start` is the beginning of the run of consecutive shortcuts. The
    // input of layer k is the post-activation of layer k-1 — non-negative
    // only if k >= 1 and layer k-1 is ReLU.
    let mut start = l - 1;
    while start > 0 && net.shortcut_at(start - 1).is_some() {
        start -= 1;
    }
    if start == 0 {
        return false; // run taps the raw network input
    }
    (start - 1..l - 1).all(|k| net.layers()[k].activation() == Activation::ReLU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::synth_dataset;
    use crate::matrix::Matrix;
    use crate::network::{DenseLayer, ShortcutConnection};

    fn layer(rows: usize, cols: usize, data: &[f64], b: &[f64], a: Activation) -> DenseLayer<f64> {
        DenseLayer::new(
            Matrix::new(rows, cols, data.to_vec()).unwrap(),
            b.to_vec(),
            a,
        )
        .unwrap()
    }

    fn dataset(rows: &[(&[f64], usize)], n_classes: usize) -> Dataset<f64> {
        let cols = rows[0].0.len();
        let data: Vec<f64> = rows.iter().flat_map(|(f, _)| f.iter().copied()).collect();
        let labels = rows.iter().map(|&(_, l)| l).collect();
        Dataset::new(
            Matrix::new(rows.len(), cols, data).unwrap(),
            labels,
            n_classes,
            None,
        )
        .unwrap()
    }

    #[test]
    fn rates_match_hand_count_and_zero_is_inactive() {
        // One hidden neuron computing x - 1: pre is -1, 0, 1 on the three
        // samples. Strictly-positive counting gives rate 1/3 (the exact-zero
        // sample is inactive).
        let net = Network::new(
            1,
            vec![
                layer(1, 1, &[1.0], &[-1.0], Activation::ReLU),
                layer(2, 1, &[1.0, -1.0], &[0.0, 0.0], Activation::Softmax),
            ],
        )
        .unwrap();
        let ds = dataset(&[(&[0.0], 0), (&[1.0], 0), (&[2.0], 1)], 2);
        let p = activation_rates(&net, &ds, "toy").unwrap();
        assert_eq!(p.rates, vec![vec![1.0 / 3.0]]);
        assert_eq!(p.n_samples, 3);
        assert_eq!(p.dataset_tag, "toy");
        assert!(p.matches(&net));
    }

    #[test]
    fn rates_cover_hidden_layers_only_and_stay_in_range() {
        let net = Network::<f64>::glorot(6, &[9, 7], 4, 3).unwrap();
        let ds = synth_dataset::<f64>(40, 6, 4, 1).unwrap();
        let p = activation_rates(&net, &ds, "synth").unwrap();
        assert_eq!(p.hidden_widths(), vec![9, 7]);
        assert!(p.rates.iter().flatten().all(|&r| (0.0..=1.0).contains(&r)));
        // Integer counting: a second run is byte-identical.
        assert_eq!(p, activation_rates(&net, &ds, "synth").unwrap());
    }

    #[test]
    fn rates_reject_empty_or_mismatched_data() {
        let net = Network::<f64>::glorot(4, &[5], 2, 0).unwrap();
        let ds = synth_dataset::<f64>(10, 3, 2, 0).unwrap();
        assert!(activation_rates(&net, &ds, "x").is_err());
    }

    #[test]
    fn rates_include_shortcut_contributions() {
        // The shortcut pushes the hidden neuron of layer 1 positive; without
        // it the neuron would be stuck at zero.
        let mut net = Network::new(
            1,
            vec![
                layer(1, 1, &[0.0], &[0.0], Activation::ReLU),
                layer(1, 1, &[1.0], &[0.0], Activation::ReLU),
                layer(2, 1, &[1.0, 1.0], &[0.0, 0.0], Activation::Softmax),
            ],
        )
        .unwrap();
        let ds = dataset(&[(&[5.0], 0)], 2);
        let before = activation_rates(&net, &ds, "t").unwrap();
        assert_eq!(before.rates[1], vec![0.0]);
        net.attach_shortcut(
            0,
            ShortcutConnection::new(Matrix::new(1, 1, vec![2.0]).unwrap()),
        )
        .unwrap();
        let after = activation_rates(&net, &ds, "t").unwrap();
        assert_eq!(after.rates[1], vec![1.0]);
    }

    #[test]
    fn provable_detection_requires_all_three_sign_conditions() {
        // Layer 1 (second hidden): neuron 0 all-non-negative, neuron 1 has a
        // negative weight, neuron 2 a negative bias. Only neuron 0 counts.
        let net = Network::new(
            2,
            vec![
                layer(2, 2, &[1.0, -1.0, 0.5, 0.5], &[0.0, 0.0], Activation::ReLU),
                layer(
                    3,
                    2,
                    &[0.3, 0.0, 0.2, -0.1, 0.4, 0.4],
                    &[0.1, 0.2, -0.1],
                    Activation::ReLU,
                ),
                layer(2, 3, &[0.1; 6], &[0.0, 0.0], Activation::Softmax),
            ],
        )
        .unwrap();
        assert_eq!(detect_provable_linear(&net), vec![(1, 0)]);
    }

    #[test]
    fn first_hidden_layer_is_excluded_but_reported() {
        // All-positive neuron in layer 0: sign conditions hold, yet the
        // network input may be negative, so it must not be returned.
        let net = Network::new(
            2,
            vec![
                layer(2, 2, &[0.5, 0.5, -1.0, 1.0], &[0.1, 0.0], Activation::ReLU),
                layer(2, 2, &[-0.1; 4], &[0.0, 0.0], Activation::Softmax),
            ],
        )
        .unwrap();
        assert_eq!(detect_provable_linear(&net), vec![]);
        assert_eq!(first_layer_sign_candidates(&net), vec![0]);
    }

    #[test]
    fn zero_weight_zero_bias_neuron_is_provable() {
        // Pre-activation is identically 0; relu(0) == 0 keeps it linear.
        let net = Network::new(
            1,
            vec![
                layer(1, 1, &[1.0], &[0.0], Activation::ReLU),
                layer(1, 1, &[0.0], &[0.0], Activation::ReLU),
                layer(2, 1, &[1.0, 1.0], &[0.0, 0.0], Activation::Softmax),
            ],
        )
        .unwrap();
        assert_eq!(detect_provable_linear(&net), vec![(1, 0)]);
    }

    #[test]
    fn identity_predecessor_blocks_the_guarantee() {
        // Layer 0 is identity, so layer 1's inputs can be negative even
        // though its own signs qualify.
        let net = Network::new(
            1,
            vec![
                layer(1, 1, &[1.0], &[0.0], Activation::Identity),
                layer(1, 1, &[1.0], &[0.0], Activation::ReLU),
                layer(2, 1, &[1.0, 1.0], &[0.0, 0.0], Activation::Softmax),
            ],
        )
        .unwrap();
        assert_eq!(detect_provable_linear(&net), vec![]);
    }

    #[test]
    fn shortcut_run_reaching_network_input_disqualifies() {
        // Shortcut at layer 0 taps the raw input; layer 1's neurons cannot
        // be certified even with non-negative shortcut weights.
        let mut net = Network::new(
            1,
            vec![
                layer(1, 1, &[1.0], &[0.0], Activation::ReLU),
                layer(1, 1, &[1.0], &[0.5], Activation::ReLU),
                layer(2, 1, &[1.0, 1.0], &[0.0, 0.0], Activation::Softmax),
            ],
        )
        .unwrap();
        assert_eq!(detect_provable_linear(&net), vec![(1, 0)]);
        net.attach_shortcut(
            0,
            ShortcutConnection::new(Matrix::new(1, 1, vec![0.5]).unwrap()),
        )
        .unwrap();
        assert_eq!(detect_provable_linear(&net), vec![]);
    }

    #[test]
    fn negative_shortcut_weight_disqualifies_the_neuron() {
        // Shortcut starts at layer 1 (taps post-ReLU values only), so layer
        // 2 qualifies — unless the shortcut row carries a negative weight.
        let build = |sc_w: f64| {
            let mut net = Network::new(
                1,
                vec![
                    layer(1, 1, &[1.0], &[0.0], Activation::ReLU),
                    layer(1, 1, &[1.0], &[0.0], Activation::ReLU),
                    layer(1, 1, &[1.0], &[0.5], Activation::ReLU),
                    layer(2, 1, &[1.0, 1.0], &[0.0, 0.0], Activation::Softmax),
                ],
            )
            .unwrap();
            net.attach_shortcut(
                1,
                ShortcutConnection::new(Matrix::new(1, 1, vec![sc_w]).unwrap()),
            )
            .unwrap();
            net
        };
        // (1,0) is provable either way: unit weight, zero bias, ReLU input.
        assert_eq!(detect_provable_linear(&build(0.5)), vec![(1, 0), (2, 0)]);
        assert_eq!(detect_provable_linear(&build(-0.5)), vec![(1, 0)]);
    }
}
