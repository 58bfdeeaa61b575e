use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    ReLU,
    Softmax,
    /// Pass-through; useful for probing and fixtures, valid anywhere ReLU is.
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::ReLU => "relu",
            Activation::Softmax => "softmax",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "relu" => Ok(Activation::ReLU),
            "softmax" => Ok(Activation::Softmax),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::ModelFormat(format!(
                "unknown activation \"{other}\""
            ))),
        }
    }

    pub fn apply<F: Scalar>(self, z: &mut [F]) {
        match self {
            Activation::ReLU => {
                for v in z.iter_mut() {
                    if *v < F::zero() {
                        *v = F::zero();
                    }
                }
            }
            Activation::Softmax => {
                // Shift by the max for stability; finite inputs stay finite.
                let max = z.iter().copied().fold(F::neg_infinity(), F::max);
                let mut sum = F::zero();
                for v in z.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                for v in z.iter_mut() {
                    *v /= sum;
                }
            }
            Activation::Identity => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<F> {
    pub(crate) weights: Matrix<F>,
    pub(crate) biases: Vec<F>,
    pub(crate) activation: Activation,
}

impl<F: Scalar> DenseLayer<F> {
    pub fn new(weights: Matrix<F>, biases: Vec<F>, activation: Activation) -> Result<Self> {
        if biases.len() != weights.rows() {
            return Err(Error::Dimension(format!(
                "layer has {} output rows but {} biases",
                weights.rows(),
                biases.len()
            )));
        }
        Ok(Self {
            weights,
            biases,
            activation,
        })
    }

    pub fn weights(&self) -> &Matrix<F> {
        &self.weights
    }

    pub fn biases(&self) -> &[F] {
        &self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }
}

/// Weights carried around a folded block of neurons. A shortcut attached at
/// layer `L` consumes the input of layer `L` (possibly concatenated with the
/// inputs of earlier folded layers, newest first) and adds its output onto
/// the pre-activation of layer `L+1`. Shortcuts never carry a bias: the
/// folded neurons' biases are absorbed into layer `L+1`'s biases instead.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortcutConnection<F> {
    pub(crate) weights: Matrix<F>,
}

impl<F: Scalar> ShortcutConnection<F> {
    pub fn new(weights: Matrix<F>) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &Matrix<F> {
        &self.weights
    }

    pub fn src_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn dest_dim(&self) -> usize {
        self.weights.rows()
    }
}

/// Per-layer pre- and post-activation vectors from one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace<F> {
    pub pre: Vec<Vec<F>>,
    pub post: Vec<Vec<F>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ParamCounts {
    pub layer_params: usize,
    pub shortcut_params: usize,
    pub total_params: usize,
}

/// One structural defect found by [`Network::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ChainMismatch {
        layer: usize,
        expected: usize,
        actual: usize,
    },
    BiasLength {
        layer: usize,
        expected: usize,
        actual: usize,
    },
    EmptyLayer {
        layer: usize,
    },
    SoftmaxBeforeLast {
        layer: usize,
    },
    NonFinite {
        location: String,
    },
    ShortcutOnOutputLayer {
        layer: usize,
    },
    ShortcutSrcMismatch {
        layer: usize,
        expected: usize,
        actual: usize,
    },
    ShortcutDestMismatch {
        layer: usize,
        expected: usize,
        actual: usize,
    },
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::ChainMismatch { .. } => "chain_mismatch",
            Violation::BiasLength { .. } => "bias_length",
            Violation::EmptyLayer { .. } => "empty_layer",
            Violation::SoftmaxBeforeLast { .. } => "softmax_before_last",
            Violation::NonFinite { .. } => "non_finite",
            Violation::ShortcutOnOutputLayer { .. } => "shortcut_on_output_layer",
            Violation::ShortcutSrcMismatch { .. } => "shortcut_src_mismatch",
            Violation::ShortcutDestMismatch { .. } => "shortcut_dest_mismatch",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ChainMismatch { layer, expected, actual } => write!(
                f,
                "chain_mismatch: layer {layer} expects input width {expected}, got {actual}"
            ),
            Violation::BiasLength { layer, expected, actual } => write!(
                f,
                "bias_length: layer {layer} has {actual} biases for {expected} outputs"
            ),
            Violation::EmptyLayer { layer } => {
                write!(f, "empty_layer: layer {layer} has zero width")
            }
            Violation::SoftmaxBeforeLast { layer } => {
                write!(f, "softmax_before_last: softmax on non-final layer {layer}")
            }
            Violation::NonFinite { location } => {
                write!(f, "non_finite: {location}")
            }
            Violation::ShortcutOnOutputLayer { layer } => {
                write!(f, "shortcut_on_output_layer: shortcut at layer {layer} has no destination")
            }
            Violation::ShortcutSrcMismatch { layer, expected, actual } => write!(
                f,
                "shortcut_src_mismatch: shortcut at layer {layer} consumes {actual} inputs, expected {expected}"
            ),
            Violation::ShortcutDestMismatch { layer, expected, actual } => write!(
                f,
                "shortcut_dest_mismatch: shortcut at layer {layer} feeds {actual} outputs, expected {expected}"
            ),
        }
    }
}

/// Feedforward classifier: dense layers plus the shortcut connections left
/// behind by compression. Keys of `shortcuts` are layer indices (a shortcut
/// at `L` taps layer `L`'s input and feeds layer `L+1`'s pre-activation).
#[derive(Debug, Clone, PartialEq)]
pub struct Network<F> {
    pub(crate) input_dim: usize,
    pub(crate) layers: Vec<DenseLayer<F>>,
    pub(crate) shortcuts: BTreeMap<usize, ShortcutConnection<F>>,
}

impl<F: Scalar> Network<F> {
    pub fn new(input_dim: usize, layers: Vec<DenseLayer<F>>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Config("input_dim must be at least 1".into()));
        }
        if layers.is_empty() {
            return Err(Error::Config("a network needs at least one layer".into()));
        }
        let mut expected = input_dim;
        for (l, layer) in layers.iter().enumerate() {
            if layer.out_dim() == 0 {
                return Err(Error::Dimension(format!("layer {l} has zero width")));
            }
            if layer.in_dim() != expected {
                return Err(Error::Dimension(format!(
                    "layer {l} expects input width {expected}, got {}",
                    layer.in_dim()
                )));
            }
            expected = layer.out_dim();
        }
        Ok(Self {
            input_dim,
            layers,
            shortcuts: BTreeMap::new(),
        })
    }

    /// Fresh net with Glorot-uniform weights (zero biases), ReLU hidden
    /// layers, and a softmax output of width `n_classes`.
    pub fn glorot(input_dim: usize, hidden: &[usize], n_classes: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(input_dim, hidden, n_classes, |fan_in, fan_out, r, c| {
            let _ = (r, c);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            F::from_f64(rng.random_range(-limit..limit))
        })
    }

    /// Same architecture as [`Network::glorot`] but with every parameter
    /// zero; useful for size accounting where values are irrelevant.
    pub fn zeroed(input_dim: usize, hidden: &[usize], n_classes: usize) -> Result<Self> {
        Self::build(input_dim, hidden, n_classes, |_, _, _, _| F::zero())
    }

    fn build(
        input_dim: usize,
        hidden: &[usize],
        n_classes: usize,
        mut weight: impl FnMut(usize, usize, usize, usize) -> F,
    ) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::Config("n_classes must be at least 1".into()));
        }
        if hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be at least 1".into()));
        }
        let widths: Vec<usize> = hidden.iter().copied().chain([n_classes]).collect();
        let mut layers = Vec::with_capacity(widths.len());
        let mut fan_in = input_dim;
        for (i, &w) in widths.iter().enumerate() {
            let weights = Matrix::from_fn(w, fan_in, |r, c| weight(fan_in, w, r, c));
            let activation = if i + 1 == widths.len() {
                Activation::Softmax
            } else {
                Activation::ReLU
            };
            layers.push(DenseLayer::new(weights, vec![F::zero(); w], activation)?);
            fan_in = w;
        }
        Self::new(input_dim, layers)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::out_dim)
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[DenseLayer<F>] {
        &self.layers
    }

    pub fn shortcut_at(&self, layer: usize) -> Option<&ShortcutConnection<F>> {
        self.shortcuts.get(&layer)
    }

    pub fn shortcut_layers(&self) -> impl Iterator<Item = usize> + '_ {
        self.shortcuts.keys().copied()
    }

    /// Width of the vector flowing into layer `l`.
    pub fn layer_input_width(&self, l: usize) -> usize {
        if l == 0 {
            self.input_dim
        } else {
            self.layers[l - 1].out_dim()
        }
    }

    /// Source width a shortcut attached at `l` must consume: this layer's
    /// input, plus — when the run continues from `l-1` — everything the
    /// previous shortcut consumed.
    pub fn expected_shortcut_src(&self, l: usize) -> usize {
        let prior = self
            .shortcuts
            .get(&l.wrapping_sub(1))
            .map_or(0, ShortcutConnection::src_dim);
        self.layer_input_width(l) + if l == 0 { 0 } else { prior }
    }

    /// Attach a shortcut at layer `l`, checking its shape against the
    /// current topology (including any run continuing from `l-1`).
    pub fn attach_shortcut(&mut self, l: usize, sc: ShortcutConnection<F>) -> Result<()> {
        if l + 1 >= self.layers.len() {
            return Err(Error::Dimension(format!(
                "shortcut at layer {l} would feed past the output layer"
            )));
        }
        let expected_src = self.expected_shortcut_src(l);
        if sc.src_dim() != expected_src {
            return Err(Error::Dimension(format!(
                "shortcut at layer {l} consumes {} inputs, expected {expected_src}",
                sc.src_dim()
            )));
        }
        let expected_dest = self.layers[l + 1].out_dim();
        if sc.dest_dim() != expected_dest {
            return Err(Error::Dimension(format!(
                "shortcut at layer {l} feeds {} outputs, expected {expected_dest}",
                sc.dest_dim()
            )));
        }
        self.shortcuts.insert(l, sc);
        Ok(())
    }

    /// Run the network on one input vector.
    pub fn forward(&self, x: &[F]) -> Result<Vec<F>> {
        self.walk(x, |_, _, _| {})
    }

    /// Same pass as [`Network::forward`] (bit-identical output), also
    /// recording every layer's pre- and post-activation.
    pub fn forward_with_trace(&self, x: &[F]) -> Result<(Vec<F>, ForwardTrace<F>)> {
        let n = self.layers.len();
        let mut trace = ForwardTrace {
            pre: Vec::with_capacity(n),
            post: Vec::with_capacity(n),
        };
        let out = self.walk(x, |_, pre, post| {
            trace.pre.push(pre.to_vec());
            trace.post.push(post.to_vec());
        })?;
        Ok((out, trace))
    }

    fn walk(&self, x: &[F], mut on_layer: impl FnMut(usize, &[F], &[F])) -> Result<Vec<F>> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension(format!(
                "network expects input width {}, got {}",
                self.input_dim,
                x.len()
            )));
        }
        let mut current = x.to_vec();
        // Output of the shortcut attached at the previous layer, waiting to
        // be added onto this layer's pre-activation.
        let mut pending_skip: Option<Vec<F>> = None;
        // Concatenated inputs of the current run of consecutive shortcuts,
        // newest first; cleared whenever a layer has no shortcut.
        let mut cumulative: Vec<F> = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.in_dim() != current.len() {
                return Err(Error::Dimension(format!(
                    "layer {l} expects input width {}, got {}",
                    layer.in_dim(),
                    current.len()
                )));
            }
            let mut z = layer.weights.matvec(&current);
            for (zi, &bi) in z.iter_mut().zip(&layer.biases) {
                *zi += bi;
            }
            if let Some(skip) = pending_skip.take() {
                if skip.len() != z.len() {
                    return Err(Error::Dimension(format!(
                        "shortcut into layer {l} feeds {} outputs, layer has {}",
                        skip.len(),
                        z.len()
                    )));
                }
                for (zi, si) in z.iter_mut().zip(skip) {
                    *zi += si;
                }
            }
            if let Some(sc) = self.shortcuts.get(&l) {
                if l + 1 >= self.layers.len() {
                    return Err(Error::Dimension(format!(
                        "shortcut at layer {l} would feed past the output layer"
                    )));
                }
                let mut u = current.clone();
                u.extend_from_slice(&cumulative);
                if sc.src_dim() != u.len() {
                    return Err(Error::Dimension(format!(
                        "shortcut at layer {l} consumes {} inputs, got {}",
                        sc.src_dim(),
                        u.len()
                    )));
                }
                pending_skip = Some(sc.weights.matvec(&u));
                cumulative = u;
            } else {
                cumulative.clear();
            }
            let pre = z.clone();
            layer.activation.apply(&mut z);
            on_layer(l, &pre, &z);
            current = z;
        }
        Ok(current)
    }

    pub fn count_parameters(&self) -> ParamCounts {
        let layer_params = self
            .layers
            .iter()
            .map(|l| l.weights.rows() * l.weights.cols() + l.biases.len())
            .sum();
        let shortcut_params = self
            .shortcuts
            .values()
            .map(|s| s.weights.rows() * s.weights.cols())
            .sum();
        ParamCounts {
            layer_params,
            shortcut_params,
            total_params: layer_params + shortcut_params,
        }
    }

    /// Structural audit. An empty result means the network is well-formed:
    /// layer widths chain, biases match, softmax only on the final layer,
    /// every value finite, and every shortcut's shape consistent with its
    /// attachment point (including runs of consecutive shortcuts).
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut expected = self.input_dim;
        let last = self.layers.len().saturating_sub(1);
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.out_dim() == 0 {
                out.push(Violation::EmptyLayer { layer: l });
            }
            if layer.in_dim() != expected {
                out.push(Violation::ChainMismatch {
                    layer: l,
                    expected,
                    actual: layer.in_dim(),
                });
            }
            if layer.biases.len() != layer.out_dim() {
                out.push(Violation::BiasLength {
                    layer: l,
                    expected: layer.out_dim(),
                    actual: layer.biases.len(),
                });
            }
            if layer.activation == Activation::Softmax && l != last {
                out.push(Violation::SoftmaxBeforeLast { layer: l });
            }
            if !layer.weights.is_finite() || !layer.biases.iter().all(|b| b.is_finite()) {
                out.push(Violation::NonFinite {
                    location: format!("layer {l}"),
                });
            }
            expected = layer.out_dim();
        }
        for (&l, sc) in &self.shortcuts {
            if l + 1 >= self.layers.len() {
                out.push(Violation::ShortcutOnOutputLayer { layer: l });
                continue;
            }
            let expected_src = self.expected_shortcut_src(l);
            if sc.src_dim() != expected_src {
                out.push(Violation::ShortcutSrcMismatch {
                    layer: l,
                    expected: expected_src,
                    actual: sc.src_dim(),
                });
            }
            let expected_dest = self.layers[l + 1].out_dim();
            if sc.dest_dim() != expected_dest {
                out.push(Violation::ShortcutDestMismatch {
                    layer: l,
                    expected: expected_dest,
                    actual: sc.dest_dim(),
                });
            }
            if !sc.weights.is_finite() {
                out.push(Violation::NonFinite {
                    location: format!("shortcut at layer {l}"),
                });
            }
        }
        out
    }

    /// Delete the given neurons (sorted, duplicate-free) from a hidden
    /// layer, shrinking the next layer's fan-in to match. Only valid before
    /// compression: shortcut shapes would go stale.
    pub fn remove_hidden_neurons(&mut self, layer: usize, neurons: &[usize]) -> Result<()> {
        if !self.shortcuts.is_empty() {
            return Err(Error::Unsupported(
                "cannot remove neurons from a network that already has shortcuts".into(),
            ));
        }
        if layer + 1 >= self.layers.len() {
            return Err(Error::Plan(format!(
                "layer {layer} is the output layer; its neurons cannot be removed"
            )));
        }
        let width = self.layers[layer].out_dim();
        if neurons.is_empty() {
            return Ok(());
        }
        if neurons.windows(2).any(|w| w[0] >= w[1]) || *neurons.last().unwrap() >= width {
            return Err(Error::Plan(format!(
                "neuron list for layer {layer} must be sorted, unique, and below {width}"
            )));
        }
        if neurons.len() == width {
            return Err(Error::Plan(format!(
                "removing all {width} neurons would empty layer {layer}"
            )));
        }
        let target = &mut self.layers[layer];
        target.weights = target.weights.drop_rows(neurons);
        target.biases = std::mem::take(&mut target.biases)
            .into_iter()
            .enumerate()
            .filter(|(i, _)| neurons.binary_search(i).is_err())
            .map(|(_, b)| b)
            .collect();
        let next = &mut self.layers[layer + 1];
        next.weights = next.weights.drop_cols(neurons);
        Ok(())
    }
}
