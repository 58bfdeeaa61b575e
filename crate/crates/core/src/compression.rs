use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, ParamCounts, ShortcutConnection};
use crate::profiling::{detect_provable_linear, ActivationProfile};
use crate::scalar::Scalar;

/// Tolerance when comparing measured activation rates against the sweep's
/// threshold grid, absorbing float error in both (e.g. `1 - 19*0.05`).
pub const RATE_EPS: f64 = 1e-9;

/// Minimum number of linear neurons a layer must have before folding it is
/// worthwhile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerThreshold {
    /// Fold any non-empty selection, even if that grows the network.
    None,
    /// Fold only layers with at least this many linear neurons.
    Absolute(usize),
    /// Per-layer break-even count: fold exactly when the fold cannot
    /// increase the parameter total (ignoring shortcuts already present).
    Optimal,
}

impl fmt::Display for LayerThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerThreshold::None => write!(f, "none"),
            LayerThreshold::Absolute(k) => write!(f, "abs:{k}"),
            LayerThreshold::Optimal => write!(f, "optimal"),
        }
    }
}

impl FromStr for LayerThreshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(LayerThreshold::None),
            "optimal" => Ok(LayerThreshold::Optimal),
            _ => {
                let k = s
                    .strip_prefix("abs:")
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "layer threshold must be \"none\", \"optimal\", or \"abs:K\", got \"{s}\""
                        ))
                    })?;
                Ok(LayerThreshold::Absolute(k))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionConfig {
    /// Minimum activation rate for a neuron to count as empirically linear,
    /// in `[0, 1]`. At 1.0 only neurons active on every sample qualify.
    pub activation_threshold: f64,
    pub layer_threshold: LayerThreshold,
}

impl CompressionConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.activation_threshold.is_finite()
            || !(0.0..=1.0).contains(&self.activation_threshold)
        {
            return Err(Error::Config(format!(
                "activation threshold must be in [0, 1], got {}",
                self.activation_threshold
            )));
        }
        Ok(())
    }
}

/// Which neurons of one hidden layer to fold away. `selected` and
/// `survivors` are each sorted and together partition the layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerPlan {
    pub layer_index: usize,
    pub selected: Vec<usize>,
    pub survivors: Vec<usize>,
}

impl LayerPlan {
    /// Build a plan for a layer of `width` neurons; `selected` is sorted and
    /// deduplicated, survivors become the complement.
    pub fn new(layer_index: usize, mut selected: Vec<usize>, width: usize) -> Result<Self> {
        selected.sort_unstable();
        selected.dedup();
        if let Some(&last) = selected.last() {
            if last >= width {
                return Err(Error::Plan(format!(
                    "neuron {last} out of range for layer {layer_index} of width {width}"
                )));
            }
        }
        let survivors = (0..width)
            .filter(|i| selected.binary_search(i).is_err())
            .collect();
        Ok(Self {
            layer_index,
            selected,
            survivors,
        })
    }
}

/// Break-even linear-neuron count for folding a hidden layer whose
/// neighbours are `w_prev` wide (below) and `w_next` wide (above): the
/// smallest `n` with `parameter_delta(w_prev, w_next, n) <= 0`, i.e.
/// `ceil(w_prev * w_next / (w_prev + 1 + w_next))`.
pub fn optimal_layer_threshold(w_prev: usize, w_next: usize) -> usize {
    let d = w_prev + 1 + w_next;
    (w_prev * w_next).div_ceil(d)
}

/// Exact change in parameter count from folding `n_linear` neurons out of a
/// hidden layer with neighbour widths `w_prev`/`w_next` (no shortcut already
/// in place): the fold adds a `w_next x w_prev` shortcut and removes the
/// selected neurons' rows, columns, and biases.
pub fn parameter_delta(w_prev: usize, w_next: usize, n_linear: usize) -> i64 {
    w_prev as i64 * w_next as i64 - n_linear as i64 * (w_prev + 1 + w_next) as i64
}

/// Pick the neurons to fold in every hidden layer: those with activation
/// rate at least `activation_threshold` (within [`RATE_EPS`]), then gate
/// each layer by `layer_threshold`. Gated-out layers keep an empty
/// selection. Neighbour widths for the optimal gate come from the network
/// as given; shortcuts it may already carry are ignored.
pub fn select_linear<F: Scalar>(
    net: &Network<F>,
    profile: &ActivationProfile,
    cfg: &CompressionConfig,
) -> Result<Vec<LayerPlan>> {
    Ok(build_plans(net, profile, &[], cfg)?
        .into_iter()
        .map(|row| row.plan)
        .collect())
}

struct PlanRow {
    plan: LayerPlan,
    n_candidates: usize,
    n_forced: usize,
    gate_passed: bool,
    predicted_delta: i64,
}

fn build_plans<F: Scalar>(
    net: &Network<F>,
    profile: &ActivationProfile,
    forced: &[(usize, usize)],
    cfg: &CompressionConfig,
) -> Result<Vec<PlanRow>> {
    cfg.validate()?;
    if !profile.matches(net) {
        return Err(Error::Dimension(format!(
            "profile measured on hidden widths {:?}, network has {:?}",
            profile.hidden_widths(),
            net.layers()[..net.n_layers() - 1]
                .iter()
                .map(|l| l.out_dim())
                .collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::with_capacity(profile.rates.len());
    for (l, rates) in profile.rates.iter().enumerate() {
        let width = rates.len();
        let mut selected: Vec<usize> = (0..width)
            .filter(|&i| rates[i] >= cfg.activation_threshold - RATE_EPS)
            .collect();
        let n_rate_selected = selected.len();
        selected.extend(forced.iter().filter(|&&(fl, _)| fl == l).map(|&(_, j)| j));
        let plan = LayerPlan::new(l, selected, width)?;
        let n_candidates = plan.selected.len();
        let n_forced = n_candidates - n_rate_selected;

        let w_prev = net.layer_input_width(l);
        let w_next = net.layers()[l + 1].out_dim();
        let gate_passed = n_candidates > 0
            && match cfg.layer_threshold {
                LayerThreshold::None => true,
                LayerThreshold::Absolute(k) => n_candidates >= k,
                LayerThreshold::Optimal => n_candidates >= optimal_layer_threshold(w_prev, w_next),
            };
        let predicted_delta = if gate_passed {
            parameter_delta(w_prev, w_next, n_candidates)
        } else {
            0
        };
        rows.push(PlanRow {
            plan: if gate_passed {
                plan
            } else {
                LayerPlan::new(l, Vec::new(), width)?
            },
            n_candidates,
            n_forced,
            gate_passed,
            predicted_delta,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldOutcome {
    /// Every neuron was selected: the layer was deleted and its transform
    /// merged densely into the next layer.
    pub layer_deleted: bool,
    /// An existing shortcut fed the folded layer, so the new (or merged)
    /// connection also carries the composed prior-history weights.
    pub composed_prior: bool,
}

/// Fold the selected neurons of one hidden layer into the next layer.
///
/// The selected rows of the layer feed a new shortcut `S = V_sel * W_sel`
/// attached at the folded layer, their biases shift into the next layer
/// (`b' += V_sel * b_sel`), and the surviving neurons keep their dense path.
/// If a shortcut already feeds the folded layer, the new shortcut also
/// covers that history (`V_sel * S_prior_sel`), consuming the concatenation
/// of this layer's input followed by the prior shortcut's input — exactly
/// what the forward pass supplies for consecutive shortcuts. When every
/// neuron is selected the layer disappears instead: its transform merges
/// into the next layer's dense weights and any incoming shortcut re-attaches
/// one layer down, composed.
///
/// For inputs on which all selected neurons are genuinely linear, the folded
/// network's output equals the original's up to rounding.
///
/// Not allowed: folding the output layer, folding a layer that already has a
/// shortcut attached (it was folded before), or folding a layer whose next
/// layer has one (that shortcut's source would go stale).
pub fn fold_layer<F: Scalar>(net: &mut Network<F>, plan: &LayerPlan) -> Result<FoldOutcome> {
    let l = plan.layer_index;
    if l + 1 >= net.n_layers() {
        return Err(Error::Plan(format!(
            "layer {l} is the output layer or past it; only hidden layers fold"
        )));
    }
    let width = net.layers()[l].out_dim();
    let sel = &plan.selected;
    if sel.is_empty() {
        return Err(Error::Plan(format!("no neurons selected in layer {l}")));
    }
    if sel.windows(2).any(|w| w[0] >= w[1]) || sel[sel.len() - 1] >= width {
        return Err(Error::Plan(format!(
            "selection for layer {l} must be sorted, unique, and below {width}"
        )));
    }
    let complement: Vec<usize> = (0..width)
        .filter(|i| sel.binary_search(i).is_err())
        .collect();
    if plan.survivors != complement {
        return Err(Error::Plan(format!(
            "selected and survivors must partition layer {l}'s {width} neurons"
        )));
    }
    if net.shortcuts.contains_key(&l) {
        return Err(Error::Plan(format!(
            "layer {l} already has a shortcut; it was folded before"
        )));
    }
    if net.shortcuts.contains_key(&(l + 1)) {
        return Err(Error::Plan(format!(
            "layer {} has a shortcut whose source would go stale; fold layers bottom-up",
            l + 1
        )));
    }

    let incoming = if l > 0 {
        net.shortcuts.remove(&(l - 1))
    } else {
        None
    };
    let composed_prior = incoming.is_some();

    // S = V_sel * W_sel over this layer's input, V_sel * S_prior_sel over
    // the prior shortcut's input, and the bias shift V_sel * b_sel.
    let v_sel = net.layers[l + 1].weights.select_cols(sel);
    let x_block = v_sel.matmul(&net.layers[l].weights.select_rows(sel));
    let b_sel: Vec<F> = sel.iter().map(|&j| net.layers[l].biases[j]).collect();
    let bias_shift = v_sel.matvec(&b_sel);
    let prior_block = incoming
        .as_ref()
        .map(|sp| v_sel.matmul(&sp.weights.select_rows(sel)));

    for (b, s) in net.layers[l + 1].biases.iter_mut().zip(&bias_shift) {
        *b += *s;
    }

    if complement.is_empty() {
        // Whole layer folds: merge densely, no shortcut at l remains.
        net.layers[l + 1].weights = x_block;
        net.layers.remove(l);
        let tail: Vec<(usize, ShortcutConnection<F>)> = net
            .shortcuts
            .split_off(&l)
            .into_iter()
            .map(|(k, sc)| (k - 1, sc))
            .collect();
        net.shortcuts.extend(tail);
        if let Some(pb) = prior_block {
            net.shortcuts.insert(l - 1, ShortcutConnection::new(pb));
        }
        Ok(FoldOutcome {
            layer_deleted: true,
            composed_prior,
        })
    } else {
        net.layers[l + 1].weights = net.layers[l + 1].weights.drop_cols(sel);
        net.layers[l].weights = net.layers[l].weights.drop_rows(sel);
        net.layers[l].biases = complement
            .iter()
            .map(|&i| net.layers[l].biases[i])
            .collect();
        let mut sc_weights = x_block;
        if let Some(sp) = incoming {
            sc_weights = sc_weights.hconcat(prior_block.as_ref().expect("set when incoming"));
            net.shortcuts
                .insert(l - 1, ShortcutConnection::new(sp.weights.drop_rows(sel)));
        }
        net.shortcuts.insert(l, ShortcutConnection::new(sc_weights));
        Ok(FoldOutcome {
            layer_deleted: false,
            composed_prior,
        })
    }
}

/// What happened to one hidden layer during [`compress`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFoldReport {
    /// Index in the *original* network.
    pub layer_index: usize,
    pub width: usize,
    /// Neurons selected (rate threshold plus sign-provable ones).
    pub n_selected: usize,
    /// How many of those were selected by the sign proof alone.
    pub n_forced: usize,
    pub gate_passed: bool,
    pub folded: bool,
    /// The whole layer was removed (every neuron selected).
    pub deleted_layer: bool,
    /// The fold composed an incoming shortcut (consecutive folded layers).
    pub composed_prior: bool,
    /// Exact size change this fold alone would cause on a shortcut-free
    /// pair of neighbours; 0 when not folded.
    pub predicted_delta: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionSummary {
    pub activation_threshold: f64,
    pub layer_threshold: String,
    pub before: ParamCounts,
    pub after: ParamCounts,
    /// Sum of per-layer predictions; consecutive folds can make the
    /// measured value differ (composed history weights are not in the
    /// per-layer formula).
    pub predicted_delta: i64,
    pub measured_delta: i64,
    pub layers: Vec<LayerFoldReport>,
}

/// Single-shot compression: profile-driven selection (plus sign-provable
/// neurons, which are always added to the selection before gating), then
/// fold every passing layer from the input side upward. The input network
/// must not have shortcuts already — re-compressing a compressed network is
/// not supported.
pub fn compress<F: Scalar>(
    net: &Network<F>,
    profile: &ActivationProfile,
    cfg: &CompressionConfig,
) -> Result<(Network<F>, CompressionSummary)> {
    if !net.shortcuts.is_empty() {
        return Err(Error::Unsupported(
            "network already carries shortcuts; compression is single-shot".into(),
        ));
    }
    let forced = detect_provable_linear(net);
    let rows = build_plans(net, profile, &forced, cfg)?;
    let before = net.count_parameters();

    let mut out = net.clone();
    let mut deleted = 0usize;
    let mut reports = Vec::with_capacity(rows.len());
    for row in rows {
        let mut report = LayerFoldReport {
            layer_index: row.plan.layer_index,
            width: row.plan.selected.len() + row.plan.survivors.len(),
            n_selected: row.n_candidates,
            n_forced: row.n_forced,
            gate_passed: row.gate_passed,
            folded: false,
            deleted_layer: false,
            composed_prior: false,
            predicted_delta: row.predicted_delta,
        };
        if row.gate_passed {
            let shifted = LayerPlan {
                layer_index: row.plan.layer_index - deleted,
                selected: row.plan.selected,
                survivors: row.plan.survivors,
            };
            let outcome = fold_layer(&mut out, &shifted)?;
            report.folded = true;
            report.deleted_layer = outcome.layer_deleted;
            report.composed_prior = outcome.composed_prior;
            if outcome.layer_deleted {
                deleted += 1;
            }
        }
        reports.push(report);
    }

    let after = out.count_parameters();
    let summary = CompressionSummary {
        activation_threshold: cfg.activation_threshold,
        layer_threshold: cfg.layer_threshold.to_string(),
        before,
        after,
        predicted_delta: reports.iter().map(|r| r.predicted_delta).sum(),
        measured_delta: after.total_params as i64 - before.total_params as i64,
        layers: reports,
    };
    Ok((out, summary))
}
