use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compression::{
    compress, CompressionConfig, CompressionSummary, LayerThreshold, RATE_EPS,
};
use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::profiling::activation_rates;
use crate::scalar::Scalar;
use crate::training::{importance_prune, ImportancePruneConfig, PruneLog, TrainConfig, CE_CLAMP};

/// Mean cross-entropy and accuracy of a network on a dataset. Predictions
/// take the highest-probability class, ties resolved to the lowest index.
/// Samples are scored in parallel but reduced in index order, so the result
/// is independent of thread scheduling.
pub fn evaluate<F: Scalar>(net: &Network<F>, data: &Dataset<F>) -> Result<(f64, f64)> {
    if data.n_samples() == 0 {
        return Err(Error::Data("cannot evaluate on an empty dataset".into()));
    }
    if data.n_features() != net.input_dim() {
        return Err(Error::Dimension(format!(
            "network expects input width {}, dataset has {}",
            net.input_dim(),
            data.n_features()
        )));
    }
    if data.n_classes() > net.out_dim() {
        return Err(Error::Dimension(format!(
            "dataset has {} classes but the network only {} outputs",
            data.n_classes(),
            net.out_dim()
        )));
    }
    let scored: Vec<(f64, bool)> = (0..data.n_samples())
        .into_par_iter()
        .map(|i| -> Result<(f64, bool)> {
            let (x, label) = data.sample(i);
            let probs = net.forward(x)?;
            let p = probs[label].as_f64();
            if !p.is_finite() {
                return Err(Error::Data(format!(
                    "network produced a non-finite output on sample {i}"
                )));
            }
            let mut best = 0usize;
            for (j, v) in probs.iter().enumerate() {
                if *v > probs[best] {
                    best = j;
                }
            }
            Ok((-p.max(CE_CLAMP).ln(), best == label))
        })
        .collect::<Result<_>>()?;
    let n = scored.len() as f64;
    let loss = scored.iter().map(|(l, _)| l).sum::<f64>() / n;
    let accuracy = scored.iter().filter(|(_, c)| *c).count() as f64 / n;
    Ok((loss, accuracy))
}

/// Descending threshold grid: `1.0, 1.0 - step, ...` down to the last value
/// that is still positive (for `step = 0.05` that is 20 thresholds, ending
/// at 0.05).
pub fn threshold_grid(step: f64) -> Result<Vec<f64>> {
    if !step.is_finite() || step <= 0.0 || step > 1.0 {
        return Err(Error::Config(format!(
            "sweep step must be in (0, 1], got {step}"
        )));
    }
    let max_i = ((1.0 - RATE_EPS) / step).floor() as usize;
    Ok((0..=max_i).map(|i| 1.0 - i as f64 * step).collect())
}

/// Descriptive fields carried in a report's header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub dataset_tag: String,
    /// Layer widths as `input-hidden...-output`, e.g. `"5-16-16-3"`.
    pub architecture: String,
    pub layer_mode: String,
    pub seed: u64,
}

pub fn architecture_string<F: Scalar>(net: &Network<F>) -> String {
    let mut widths = vec![net.input_dim().to_string()];
    widths.extend(net.layers().iter().map(|l| l.out_dim().to_string()));
    widths.join("-")
}

/// One sweep measurement: the network compressed at `threshold`, sized and
/// scored on the held-out test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub threshold: f64,
    pub layer_params: usize,
    pub shortcut_params: usize,
    pub total_params: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub meta: ReportMeta,
    pub rows: Vec<ReportRow>,
}

/// Compress at every threshold of the grid and score each result on the
/// test set. Every threshold starts over from the same original network
/// (and therefore from a single profile measured on it once); results at
/// different thresholds are independent, not cumulative.
pub fn sweep<F: Scalar>(
    net: &Network<F>,
    prune_set: &Dataset<F>,
    test_set: &Dataset<F>,
    step: f64,
    gate: LayerThreshold,
    dataset_tag: &str,
    seed: u64,
) -> Result<CompressionReport> {
    let grid = threshold_grid(step)?;
    let profile = activation_rates(net, prune_set, dataset_tag)?;
    let mut rows = Vec::with_capacity(grid.len());
    for threshold in grid {
        let cfg = CompressionConfig {
            activation_threshold: threshold,
            layer_threshold: gate,
        };
        let (compressed, _) = compress(net, &profile, &cfg)?;
        let counts = compressed.count_parameters();
        let (loss, accuracy) = evaluate(&compressed, test_set)?;
        rows.push(ReportRow {
            threshold,
            layer_params: counts.layer_params,
            shortcut_params: counts.shortcut_params,
            total_params: counts.total_params,
            loss,
            accuracy,
        });
    }
    Ok(CompressionReport {
        meta: ReportMeta {
            dataset_tag: dataset_tag.to_string(),
            architecture: architecture_string(net),
            layer_mode: gate.to_string(),
            seed,
        },
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct TargetOutcome<F> {
    pub network: Network<F>,
    pub threshold_used: f64,
    /// Compressed size over original size.
    pub achieved_fraction: f64,
    pub target_reached: bool,
    pub summary: CompressionSummary,
}

/// Find the least aggressive threshold on the default grid (step 0.05,
/// optimal layer gate) whose compressed size is at most `fraction` of the
/// original. If even the most aggressive threshold cannot reach the target,
/// the smallest network found is returned with `target_reached == false`.
pub fn compress_to_fraction<F: Scalar>(
    net: &Network<F>,
    prune_set: &Dataset<F>,
    fraction: f64,
) -> Result<TargetOutcome<F>> {
    if !fraction.is_finite() || fraction <= 0.0 || fraction >= 1.0 {
        return Err(Error::Config(format!(
            "target fraction must be in (0, 1), got {fraction}"
        )));
    }
    let original = net.count_parameters().total_params as f64;
    let profile = activation_rates(net, prune_set, "target-search")?;
    let mut best: Option<TargetOutcome<F>> = None;
    for threshold in threshold_grid(0.05)? {
        let cfg = CompressionConfig {
            activation_threshold: threshold,
            layer_threshold: LayerThreshold::Optimal,
        };
        let (compressed, summary) = compress(net, &profile, &cfg)?;
        let achieved = compressed.count_parameters().total_params as f64 / original;
        let outcome = TargetOutcome {
            network: compressed,
            threshold_used: threshold,
            achieved_fraction: achieved,
            target_reached: achieved <= fraction,
            summary,
        };
        if outcome.target_reached {
            return Ok(outcome);
        }
        if best.as_ref().is_none_or(|b| achieved < b.achieved_fraction) {
            best = Some(outcome);
        }
    }
    Ok(best.expect("grid is never empty"))
}

#[derive(Debug, Clone)]
pub struct CombinedOutcome<F> {
    /// Sweep of the network as given.
    pub unpruned_report: CompressionReport,
    /// Sweep after importance pruning.
    pub pruned_report: CompressionReport,
    pub pruned_network: Network<F>,
    pub prune_log: PruneLog,
    /// `(loss, accuracy)` on the test set before any compression.
    pub original_eval: (f64, f64),
    pub pruned_eval: (f64, f64),
}

/// The two-stage protocol: sweep the trained network as-is, then importance-
/// prune a copy towards `importance_target` of its size (continuing SGD on
/// the train set) and sweep that too. Both sweeps use the optimal layer gate
/// and the same test set, so the reports are directly comparable.
#[allow(clippy::too_many_arguments)]
pub fn combined_run<F: Scalar>(
    net: &Network<F>,
    train_set: &Dataset<F>,
    prune_set: &Dataset<F>,
    test_set: &Dataset<F>,
    importance_target: f64,
    step: f64,
    train_cfg: &TrainConfig,
    dataset_tag: &str,
) -> Result<CombinedOutcome<F>> {
    let original_eval = evaluate(net, test_set)?;
    let unpruned_report = sweep(
        net,
        prune_set,
        test_set,
        step,
        LayerThreshold::Optimal,
        dataset_tag,
        train_cfg.seed,
    )?;

    let mut pruned = net.clone();
    let prune_log = importance_prune(
        &mut pruned,
        train_set,
        &ImportancePruneConfig::new(importance_target),
        train_cfg,
    )?;
    let pruned_eval = evaluate(&pruned, test_set)?;
    let pruned_report = sweep(
        &pruned,
        prune_set,
        test_set,
        step,
        LayerThreshold::Optimal,
        &format!("{dataset_tag}+importance-pruned"),
        train_cfg.seed,
    )?;
    Ok(CombinedOutcome {
        unpruned_report,
        pruned_report,
        pruned_network: pruned,
        prune_log,
        original_eval,
        pruned_eval,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

const CSV_HEADER: &str = "threshold,layer_params,shortcut_params,total_params,loss,accuracy";

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

/// Write a report. CSV leads with `# key: value` metadata comment lines and
/// the fixed column header; floats are printed with the shortest
/// representation that parses back to the same value, so emitting and
/// re-loading a report reproduces it exactly (and reruns are byte-identical).
pub fn emit_report(
    report: &CompressionReport,
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    match format {
        ReportFormat::Json => {
            serde_json::to_writer(&mut out, report)?;
            out.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            writeln!(out, "# dataset_tag: {}", one_line(&report.meta.dataset_tag))?;
            writeln!(
                out,
                "# architecture: {}",
                one_line(&report.meta.architecture)
            )?;
            writeln!(out, "# layer_mode: {}", one_line(&report.meta.layer_mode))?;
            writeln!(out, "# seed: {}", report.meta.seed)?;
            writeln!(out, "{CSV_HEADER}")?;
            for r in &report.rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.threshold,
                    r.layer_params,
                    r.shortcut_params,
                    r.total_params,
                    r.loss,
                    r.accuracy
                )?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Read back a report written by [`emit_report`].
pub fn load_report(path: impl AsRef<Path>, format: ReportFormat) -> Result<CompressionReport> {
    match format {
        ReportFormat::Json => {
            let file = File::open(path.as_ref())?;
            Ok(serde_json::from_reader(BufReader::new(file))?)
        }
        ReportFormat::Csv => load_report_csv(path.as_ref()),
    }
}

fn load_report_csv(path: &Path) -> Result<CompressionReport> {
    let bad =
        |line: usize, what: &str| Error::ReportFormat(format!("{}:{line}: {what}", path.display()));
    let mut meta = ReportMeta {
        dataset_tag: String::new(),
        architecture: String::new(),
        layer_mode: String::new(),
        seed: 0,
    };
    let mut seen_header = false;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let n = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let (key, value) = comment
                .split_once(':')
                .ok_or_else(|| bad(n, "metadata comment without ':'"))?;
            let value = value.trim().to_string();
            match key.trim() {
                "dataset_tag" => meta.dataset_tag = value,
                "architecture" => meta.architecture = value,
                "layer_mode" => meta.layer_mode = value,
                "seed" => {
                    meta.seed = value
                        .parse()
                        .map_err(|_| bad(n, "seed is not an integer"))?;
                }
                _ => {} // unknown metadata is ignored, not fatal
            }
            continue;
        }
        if !seen_header {
            if line != CSV_HEADER {
                return Err(bad(n, "missing or wrong column header"));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(n, "expected 6 columns"));
        }
        rows.push(ReportRow {
            threshold: fields[0].parse().map_err(|_| bad(n, "bad threshold"))?,
            layer_params: fields[1].parse().map_err(|_| bad(n, "bad layer_params"))?,
            shortcut_params: fields[2]
                .parse()
                .map_err(|_| bad(n, "bad shortcut_params"))?,
            total_params: fields[3].parse().map_err(|_| bad(n, "bad total_params"))?,
            loss: fields[4].parse().map_err(|_| bad(n, "bad loss"))?,
            accuracy: fields[5].parse().map_err(|_| bad(n, "bad accuracy"))?,
        });
    }
    if !seen_header {
        return Err(Error::ReportFormat(format!(
            "{}: no column header found",
            path.display()
        )));
    }
    Ok(CompressionReport { meta, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::synth_dataset;
    use crate::matrix::Matrix;
    use crate::network::{Activation, DenseLayer};
    use crate::training::train;

    #[test]
    fn evaluate_uniform_net_gives_log_c_and_ties_pick_lowest_index() {
        // All-zero weights: softmax is uniform over 3 classes, so the loss
        // is ln 3 and every prediction is class 0.
        let net = Network::<f64>::zeroed(4, &[5], 3).unwrap();
        let ds = synth_dataset::<f64>(9, 4, 3, 1).unwrap(); // labels 0,1,2 repeating
        let (loss, acc) = evaluate(&net, &ds).unwrap();
        assert!((loss - 3.0f64.ln()).abs() < 1e-12);
        assert!((acc - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_matches_hand_computation() {
        // Identity-ish net: output prob of the true class known exactly.
        let net = Network::new(
            1,
            vec![DenseLayer::new(
                Matrix::new(2, 1, vec![1.0, -1.0]).unwrap(),
                vec![0.0, 0.0],
                Activation::Softmax,
            )
            .unwrap()],
        )
        .unwrap();
        // x = 2: probs = softmax(2, -2) = (e^4/(e^4+1), ...)
        let ds = Dataset::new(
            Matrix::new(2, 1, vec![2.0, 2.0]).unwrap(),
            vec![0, 1],
            2,
            None,
        )
        .unwrap();
        let p0 = (4.0f64).exp() / ((4.0f64).exp() + 1.0);
        let expected = (-(p0.ln()) - (1.0 - p0).ln()) / 2.0;
        let (loss, acc) = evaluate(&net, &ds).unwrap();
        assert!((loss - expected).abs() < 1e-12);
        assert_eq!(acc, 0.5);
    }

    #[test]
    fn evaluate_rejects_mismatched_or_empty_data() {
        let net = Network::<f64>::zeroed(4, &[5], 3).unwrap();
        assert!(evaluate(&net, &synth_dataset::<f64>(5, 3, 3, 0).unwrap()).is_err());
        assert!(evaluate(&net, &synth_dataset::<f64>(5, 4, 5, 0).unwrap()).is_err());
        let empty = synth_dataset::<f64>(4, 4, 2, 0).unwrap().subset(&[]);
        assert!(evaluate(&net, &empty).is_err());
    }

    #[test]
    fn threshold_grid_frozen_shapes() {
        let g = threshold_grid(0.05).unwrap();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 1.0);
        assert!((g[19] - 0.05).abs() < 1e-9);
        assert!(g.windows(2).all(|w| w[0] > w[1]));

        assert_eq!(threshold_grid(0.5).unwrap(), vec![1.0, 0.5]);
        assert_eq!(threshold_grid(1.0).unwrap(), vec![1.0]);
        assert_eq!(threshold_grid(0.3).unwrap().len(), 4); // 1.0, 0.7, 0.4, 0.1

        assert!(threshold_grid(0.0).is_err());
        assert!(threshold_grid(-0.1).is_err());
        assert!(threshold_grid(1.5).is_err());
    }

    #[test]
    fn sweep_produces_one_row_per_threshold_on_the_same_test_set() {
        let mut net = Network::<f64>::glorot(5, &[10, 10], 3, 3).unwrap();
        let train_set = synth_dataset::<f64>(60, 5, 3, 10).unwrap();
        let prune_set = synth_dataset::<f64>(40, 5, 3, 11).unwrap();
        let test_set = synth_dataset::<f64>(40, 5, 3, 12).unwrap();
        train(
            &mut net,
            &train_set,
            &TrainConfig {
                epochs: 5,
                ..Default::default()
            },
        )
        .unwrap();

        let report = sweep(
            &net,
            &prune_set,
            &test_set,
            0.25,
            LayerThreshold::Optimal,
            "synth",
            7,
        )
        .unwrap();
        assert_eq!(report.rows.len(), 4);
        assert_eq!(report.meta.architecture, "5-10-10-3");
        assert_eq!(report.meta.layer_mode, "optimal");
        assert_eq!(report.rows[0].threshold, 1.0);
        for r in &report.rows {
            assert_eq!(r.total_params, r.layer_params + r.shortcut_params);
            assert!(r.loss.is_finite());
            assert!((0.0..=1.0).contains(&r.accuracy));
        }
        // Identical call, identical result (fresh-from-original semantics).
        let again = sweep(
            &net,
            &prune_set,
            &test_set,
            0.25,
            LayerThreshold::Optimal,
            "synth",
            7,
        )
        .unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn sweep_threshold_one_row_is_the_original_when_nothing_qualifies() {
        // Biases pulled down: no neuron is active on every sample, so the
        // t=1.0 compression is a no-op and the row equals the original
        // network's size and score exactly.
        let mut net = Network::<f64>::glorot(4, &[8, 8], 2, 5).unwrap();
        for l in 0..2 {
            for j in 0..8 {
                net.layers[l].biases[j] = -0.5;
            }
        }
        let prune_set = synth_dataset::<f64>(30, 4, 2, 1).unwrap();
        let test_set = synth_dataset::<f64>(30, 4, 2, 2).unwrap();
        let report = sweep(
            &net,
            &prune_set,
            &test_set,
            1.0,
            LayerThreshold::Optimal,
            "t",
            0,
        )
        .unwrap();
        let (loss, acc) = evaluate(&net, &test_set).unwrap();
        let counts = net.count_parameters();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].total_params, counts.total_params);
        assert_eq!(report.rows[0].loss, loss);
        assert_eq!(report.rows[0].accuracy, acc);
    }

    #[test]
    fn compress_to_fraction_picks_least_aggressive_reaching_threshold() {
        // Hidden layers always active: even t = 1.0 collapses everything,
        // so the search stops at the very first threshold.
        let mut net = Network::<f64>::glorot(6, &[12, 12], 3, 9).unwrap();
        for l in 0..2 {
            for j in 0..12 {
                net.layers[l].biases[j] = 100.0;
            }
        }
        let prune_set = synth_dataset::<f64>(30, 6, 3, 4).unwrap();
        let out = compress_to_fraction(&net, &prune_set, 0.5).unwrap();
        assert!(out.target_reached);
        assert_eq!(out.threshold_used, 1.0);
        assert!(out.achieved_fraction <= 0.5);
        assert!(out.network.validate().is_empty());
    }

    #[test]
    fn compress_to_fraction_flags_unreachable_targets() {
        // Dead hidden neurons (large negative biases): rates are all zero
        // and the sign conditions fail, so nothing ever folds.
        let mut net = Network::<f64>::glorot(6, &[12, 12], 3, 9).unwrap();
        for l in 0..2 {
            for j in 0..12 {
                net.layers[l].biases[j] = -10.0;
            }
        }
        let prune_set = synth_dataset::<f64>(30, 6, 3, 4).unwrap();
        let out = compress_to_fraction(&net, &prune_set, 0.9).unwrap();
        assert!(!out.target_reached);
        assert_eq!(out.achieved_fraction, 1.0);
        assert_eq!(out.network.count_parameters(), net.count_parameters());
        assert!(compress_to_fraction(&net, &prune_set, 0.0).is_err());
        assert!(compress_to_fraction(&net, &prune_set, 1.0).is_err());
    }

    #[test]
    fn report_round_trips_csv_and_json_exactly() {
        let report = CompressionReport {
            meta: ReportMeta {
                dataset_tag: "synth: blobs, n=100".into(),
                architecture: "5-10-3".into(),
                layer_mode: "abs:2".into(),
                seed: 42,
            },
            rows: vec![
                ReportRow {
                    threshold: 1.0,
                    layer_params: 93,
                    shortcut_params: 0,
                    total_params: 93,
                    loss: 1.0986122886681098,
                    accuracy: 1.0 / 3.0,
                },
                ReportRow {
                    threshold: 0.05,
                    layer_params: 33,
                    shortcut_params: 15,
                    total_params: 48,
                    loss: 0.1234567890123456,
                    accuracy: 0.9,
                },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        for (name, format) in [("r.csv", ReportFormat::Csv), ("r.json", ReportFormat::Json)] {
            let path = dir.path().join(name);
            emit_report(&report, &path, format).unwrap();
            assert_eq!(load_report(&path, format).unwrap(), report, "{name}");
            // Re-emitting what was loaded is byte-identical.
            let path2 = dir.path().join(format!("again-{name}"));
            emit_report(&load_report(&path, format).unwrap(), &path2, format).unwrap();
            assert_eq!(
                std::fs::read(&path).unwrap(),
                std::fs::read(&path2).unwrap()
            );
        }
    }

    #[test]
    fn report_csv_layout_is_stable() {
        let report = CompressionReport {
            meta: ReportMeta {
                dataset_tag: "tag".into(),
                architecture: "2-2".into(),
                layer_mode: "none".into(),
                seed: 1,
            },
            rows: vec![ReportRow {
                threshold: 0.95,
                layer_params: 6,
                shortcut_params: 2,
                total_params: 8,
                loss: 0.5,
                accuracy: 0.75,
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        emit_report(&report, &path, ReportFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "# dataset_tag: tag\n# architecture: 2-2\n# layer_mode: none\n# seed: 1\n\
             threshold,layer_params,shortcut_params,total_params,loss,accuracy\n\
             0.95,6,2,8,0.5,0.75\n"
        );
    }

    #[test]
    fn report_loader_rejects_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "threshold,nope\n1,2\n").unwrap();
        assert!(load_report(&path, ReportFormat::Csv).is_err());
        std::fs::write(&path, "# seed: twelve\n").unwrap();
        assert!(load_report(&path, ReportFormat::Csv).is_err());
        std::fs::write(
            &path,
            "threshold,layer_params,shortcut_params,total_params,loss,accuracy\n0.9,1,2\n",
        )
        .unwrap();
        assert!(load_report(&path, ReportFormat::Csv).is_err());
        std::fs::write(&path, "").unwrap();
        assert!(load_report(&path, ReportFormat::Csv).is_err());
    }

    #[test]
    fn combined_run_returns_comparable_reports() {
        let mut net = Network::<f64>::glorot(5, &[14, 14], 3, 30).unwrap();
        let train_set = synth_dataset::<f64>(90, 5, 3, 20).unwrap();
        let prune_set = synth_dataset::<f64>(40, 5, 3, 21).unwrap();
        let test_set = synth_dataset::<f64>(40, 5, 3, 22).unwrap();
        let tcfg = TrainConfig {
            epochs: 6,
            ..Default::default()
        };
        train(&mut net, &train_set, &tcfg).unwrap();

        let out = combined_run(
            &net, &train_set, &prune_set, &test_set, 0.7, 0.5, &tcfg, "synth",
        )
        .unwrap();
        assert_eq!(out.unpruned_report.rows.len(), 2);
        assert_eq!(out.pruned_report.rows.len(), 2);
        assert!(
            out.pruned_network.count_parameters().total_params
                <= net.count_parameters().total_params
        );
        assert_eq!(
            out.prune_log.final_params,
            out.pruned_network.count_parameters().total_params
        );
        assert!(out.original_eval.0.is_finite() && out.pruned_eval.0.is_finite());
        assert_eq!(out.unpruned_report.meta.layer_mode, "optimal");
        assert_ne!(
            out.unpruned_report.meta.dataset_tag,
            out.pruned_report.meta.dataset_tag
        );
    }
}
