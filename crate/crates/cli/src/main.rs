//! `linfold` — train, profile, and compress ReLU feedforward classifiers.
//!
//! Every subcommand writes its artifacts under `--out-dir` with fixed
//! filenames plus a `manifest.json` recording command, arguments, seeds,
//! paths, and outcome. Identical arguments and seeds reproduce primary
//! outputs byte for byte. Exit codes: 0 success, 1 runtime failure,
//! 2 usage error.

mod manifest;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use linfold::compression::{compress, CompressionConfig, LayerThreshold};
use linfold::dataio::{load_csv, load_idx, load_model, save_model, Dataset};
use linfold::harness::{
    architecture_string, combined_run, compress_to_fraction, emit_report, evaluate, sweep,
    CompressionReport, ReportFormat, ReportMeta, ReportRow,
};
use linfold::network::Network;
use linfold::presets::hidden_widths;
use linfold::profiling::{activation_rates, detect_provable_linear, first_layer_sign_candidates};
use linfold::training::{train, TrainConfig};

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "linfold",
    version,
    about = "Compress ReLU networks by folding linearly-behaving neurons into shortcuts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a fresh network on a dataset and save it
    Train(TrainArgs),
    /// Measure activation rates on a pruning set and report provably linear neurons
    Profile(ProfileArgs),
    /// Single-shot compression at one activation threshold
    Compress(CompressArgs),
    /// Compress at every threshold 1.00, 1.00-step, ... and report the trade-off curve
    Sweep(SweepArgs),
    /// Lower the threshold until the model fits a target parameter fraction
    Target(TargetArgs),
    /// Importance-prune, then sweep both the original and the pruned model
    Combined(CombinedArgs),
}

/// How to read a dataset argument: `file.csv` (needs --label-col) or an
/// IDX image/label pair `images.idx:labels.idx`.
#[derive(Args, Clone)]
struct CsvOpts {
    /// Label column: name (headered CSV) or 0-based index (--no-header)
    #[arg(long)]
    label_col: Option<String>,
    /// CSV file has no header row
    #[arg(long)]
    no_header: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Training data: CSV file or IDX pair `images:labels`
    #[arg(long)]
    data: String,
    #[command(flatten)]
    csv: CsvOpts,
    /// Architecture: preset (titanic, fashion, openml) or hidden widths like `64,32`
    #[arg(long)]
    arch: String,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Model file path; defaults to <out-dir>/model.json
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    model: PathBuf,
    /// Pruning set: CSV file or IDX pair `images:labels`
    #[arg(long)]
    data: String,
    #[command(flatten)]
    csv: CsvOpts,
    /// Dataset tag stored in the profile; defaults to the data path
    #[arg(long)]
    tag: Option<String>,
    /// Print per-layer counts of sign-qualified neurons
    #[arg(long)]
    report_provable: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CompressArgs {
    #[arg(long)]
    model: PathBuf,
    /// Pruning set: CSV file or IDX pair `images:labels`
    #[arg(long)]
    data: String,
    #[command(flatten)]
    csv: CsvOpts,
    /// Activation-rate threshold in [0, 1]
    #[arg(long)]
    threshold: f64,
    /// Layer gate: none, abs:K, or optimal
    #[arg(long, default_value = "optimal")]
    layer_mode: String,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Compressed model path; defaults to <out-dir>/model.json
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    prune_data: String,
    #[arg(long)]
    test_data: String,
    #[command(flatten)]
    csv: CsvOpts,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Layer gate: none, abs:K, or optimal
    #[arg(long, default_value = "optimal")]
    layer_mode: String,
    /// Recorded in the report metadata
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TargetArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    prune_data: String,
    /// Optional held-out set for the report row's loss/accuracy
    #[arg(long)]
    test_data: Option<String>,
    #[command(flatten)]
    csv: CsvOpts,
    /// Target size as a fraction of the original parameter count, in (0, 1)
    #[arg(long)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CombinedArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    train_data: String,
    #[arg(long)]
    prune_data: String,
    #[arg(long)]
    test_data: String,
    #[command(flatten)]
    csv: CsvOpts,
    /// Importance-pruning size target as a fraction of the input model
    #[arg(long, default_value_t = 0.60)]
    importance_target: f64,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

enum CmdError {
    /// Bad flag values; exit 2, nothing was attempted.
    Usage(String),
    /// Failure doing the work; exit 1, manifest records it.
    Runtime(String),
}

impl From<linfold::Error> for CmdError {
    fn from(e: linfold::Error) -> Self {
        CmdError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Runtime(e.to_string())
    }
}

type CmdResult<T> = Result<T, CmdError>;

fn usage(msg: impl Into<String>) -> CmdError {
    CmdError::Usage(msg.into())
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli.command));
}

fn run(command: Command) -> i32 {
    if let Err(msg) = apply_thread_cap() {
        eprintln!("error: {msg}");
        return 2;
    }
    let (name, out_dir) = match &command {
        Command::Train(a) => ("train", a.out_dir.clone()),
        Command::Profile(a) => ("profile", a.out_dir.clone()),
        Command::Compress(a) => ("compress", a.out_dir.clone()),
        Command::Sweep(a) => ("sweep", a.out_dir.clone()),
        Command::Target(a) => ("target", a.out_dir.clone()),
        Command::Combined(a) => ("combined", a.out_dir.clone()),
    };
    let mut man = RunManifest::new(name);
    let outcome = match command {
        Command::Train(a) => cmd_train(a, &mut man),
        Command::Profile(a) => cmd_profile(a, &mut man),
        Command::Compress(a) => cmd_compress(a, &mut man),
        Command::Sweep(a) => cmd_sweep(a, &mut man),
        Command::Target(a) => cmd_target(a, &mut man),
        Command::Combined(a) => cmd_combined(a, &mut man),
    };
    match outcome {
        Ok(()) => {
            man.status = "ok".to_string();
            if let Err(e) = man.write(&out_dir) {
                eprintln!("error: cannot write manifest: {e}");
                return 1;
            }
            0
        }
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CmdError::Runtime(msg)) => {
            // Partial outputs may exist; the manifest records the failure.
            man.status = "error".to_string();
            man.error = Some(msg.clone());
            if let Err(e) = man.write(&out_dir) {
                eprintln!("error: cannot write manifest: {e}");
            }
            eprintln!("error: {msg}");
            1
        }
    }
}

/// LINFOLD_THREADS caps the rayon pool for the whole process.
fn apply_thread_cap() -> Result<(), String> {
    let Ok(raw) = std::env::var("LINFOLD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("LINFOLD_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("LINFOLD_THREADS: {e}"))
}

// --- data plumbing -----------------------------------------------------------

/// `images:labels` means an IDX pair; anything else is a CSV path.
fn load_data(spec: &str, csv: &CsvOpts, man: &mut RunManifest) -> CmdResult<Dataset<f64>> {
    man.input(spec);
    if let Some((images, labels)) = spec.split_once(':') {
        return Ok(load_idx(images, labels)?);
    }
    let label_col = csv
        .label_col
        .as_deref()
        .ok_or_else(|| usage(format!("--label-col is required for CSV data ({spec})")))?;
    Ok(load_csv(spec, label_col, !csv.no_header)?)
}

fn load_net(path: &Path, man: &mut RunManifest) -> CmdResult<Network<f64>> {
    man.input(path);
    let (net, _labels) = load_model(path)?;
    Ok(net)
}

fn parse_arch(s: &str) -> CmdResult<Vec<usize>> {
    if let Some(widths) = hidden_widths(s) {
        return Ok(widths.to_vec());
    }
    s.split(',')
        .map(|w| w.trim().parse::<usize>().ok().filter(|&w| w > 0))
        .collect::<Option<Vec<usize>>>()
        .ok_or_else(|| {
            usage(format!(
                "--arch must be a preset (titanic, fashion, openml) or positive widths like 64,32; got {s:?}"
            ))
        })
}

fn parse_layer_mode(s: &str) -> CmdResult<LayerThreshold> {
    s.parse()
        .map_err(|e: linfold::Error| usage(format!("--layer-mode: {e}")))
}

fn unit_range(value: f64, flag: &str) -> CmdResult<f64> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(usage(format!("{flag} must be in [0, 1], got {value}")));
    }
    Ok(value)
}

// --- commands ----------------------------------------------------------------

fn cmd_train(a: TrainArgs, man: &mut RunManifest) -> CmdResult<()> {
    let hidden = parse_arch(&a.arch)?;
    if a.batch_size == 0 {
        return Err(usage("--batch-size must be at least 1"));
    }
    if !a.lr.is_finite() || a.lr < 0.0 {
        return Err(usage(format!(
            "--lr must be finite and non-negative, got {}",
            a.lr
        )));
    }
    man.seed = Some(a.seed);
    let data = load_data(&a.data, &a.csv, man)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        seed: a.seed,
    };
    let mut net = Network::glorot(data.n_features(), &hidden, data.n_classes(), a.seed)?;
    let log = train(&mut net, &data, &cfg)?;

    let model_path = a.out.unwrap_or_else(|| a.out_dir.join("model.json"));
    std::fs::create_dir_all(&a.out_dir)?;
    if let Some(parent) = model_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    save_model(&net, data.label_names(), man.output(&model_path))?;

    let (loss, acc) = evaluate(&net, &data)?;
    println!(
        "trained {} for {} epochs: train loss {loss:.4}, accuracy {acc:.4}",
        architecture_string(&net),
        log.epoch_losses.len()
    );
    println!("model written to {}", model_path.display());
    Ok(())
}

fn cmd_profile(a: ProfileArgs, man: &mut RunManifest) -> CmdResult<()> {
    let net = load_net(&a.model, man)?;
    let data = load_data(&a.data, &a.csv, man)?;
    let tag = a.tag.unwrap_or_else(|| a.data.clone());
    let profile = activation_rates(&net, &data, &tag)?;

    std::fs::create_dir_all(&a.out_dir)?;
    let path = man.output(a.out_dir.join("profile.json"));
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    serde_json::to_writer(&mut file, &profile).map_err(linfold::Error::from)?;
    std::io::Write::write_all(&mut file, b"\n")?;

    let provable = detect_provable_linear(&net);
    let excluded = first_layer_sign_candidates(&net);
    println!(
        "profiled {} neurons on {} samples; {} provably linear",
        profile.rates.iter().map(Vec::len).sum::<usize>(),
        profile.n_samples,
        provable.len()
    );
    if a.report_provable {
        for l in 0..profile.rates.len() {
            let count = provable.iter().filter(|&&(pl, _)| pl == l).count();
            println!("  layer {l}: {count} provably linear");
        }
        println!(
            "  excluded (first layer): {} sign-qualified candidates",
            excluded.len()
        );
    }
    println!("profile written to {}", path.display());
    Ok(())
}

fn cmd_compress(a: CompressArgs, man: &mut RunManifest) -> CmdResult<()> {
    let threshold = unit_range(a.threshold, "--threshold")?;
    let gate = parse_layer_mode(&a.layer_mode)?;
    let net = load_net(&a.model, man)?;
    let data = load_data(&a.data, &a.csv, man)?;

    let profile = activation_rates(&net, &data, &a.data)?;
    let cfg = CompressionConfig {
        activation_threshold: threshold,
        layer_threshold: gate,
    };
    let (compressed, summary) = compress(&net, &profile, &cfg)?;

    // Built-in oracle: rate-1.0 folds are exact on the profiled data, so at
    // threshold 1.0 any drift beyond float noise is a defect, not a trade-off.
    let (loss_before, _) = evaluate(&net, &data)?;
    let (loss_after, _) = evaluate(&compressed, &data)?;
    let drift = (loss_after - loss_before).abs();
    println!(
        "compressed {} -> {} params (predicted {:+}, measured {:+}); prune-set loss drift {drift:.3e}",
        summary.before.total_params,
        summary.after.total_params,
        summary.predicted_delta,
        summary.measured_delta
    );
    if threshold == 1.0 && drift > 1e-9 {
        return Err(CmdError::Runtime(format!(
            "equivalence self-check failed: loss drift {drift:.3e} at threshold 1.0"
        )));
    }

    std::fs::create_dir_all(&a.out_dir)?;
    let model_path = a.out.unwrap_or_else(|| a.out_dir.join("model.json"));
    if let Some(parent) = model_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    save_model(&compressed, None, man.output(&model_path))?;
    let summary_path = man.output(a.out_dir.join("summary.json"));
    let mut file = std::io::BufWriter::new(std::fs::File::create(&summary_path)?);
    serde_json::to_writer_pretty(&mut file, &summary).map_err(linfold::Error::from)?;
    std::io::Write::write_all(&mut file, b"\n")?;
    println!("model written to {}", model_path.display());
    Ok(())
}

fn cmd_sweep(a: SweepArgs, man: &mut RunManifest) -> CmdResult<()> {
    if !a.step.is_finite() || a.step <= 0.0 || a.step > 1.0 {
        return Err(usage(format!("--step must be in (0, 1], got {}", a.step)));
    }
    let gate = parse_layer_mode(&a.layer_mode)?;
    man.seed = Some(a.seed);
    let net = load_net(&a.model, man)?;
    let prune_set = load_data(&a.prune_data, &a.csv, man)?;
    let test_set = load_data(&a.test_data, &a.csv, man)?;

    let report = sweep(
        &net,
        &prune_set,
        &test_set,
        a.step,
        gate,
        &a.prune_data,
        a.seed,
    )?;
    std::fs::create_dir_all(&a.out_dir)?;
    let path = man.output(a.out_dir.join("report.csv"));
    emit_report(&report, &path, ReportFormat::Csv)?;
    let first = report.rows.first().expect("grid is never empty");
    let last = report.rows.last().expect("grid is never empty");
    println!(
        "swept {} thresholds: {} params at t={}, {} at t={}",
        report.rows.len(),
        first.total_params,
        first.threshold,
        last.total_params,
        last.threshold
    );
    println!("report written to {}", path.display());
    Ok(())
}

fn cmd_target(a: TargetArgs, man: &mut RunManifest) -> CmdResult<()> {
    if !a.fraction.is_finite() || a.fraction <= 0.0 || a.fraction >= 1.0 {
        return Err(usage(format!(
            "--fraction must be in (0, 1), got {}",
            a.fraction
        )));
    }
    man.seed = Some(a.seed);
    let net = load_net(&a.model, man)?;
    let prune_set = load_data(&a.prune_data, &a.csv, man)?;
    let eval_set = match &a.test_data {
        Some(spec) => load_data(spec, &a.csv, man)?,
        None => prune_set.clone(),
    };

    let out = compress_to_fraction(&net, &prune_set, a.fraction)?;
    if out.target_reached {
        println!(
            "reached {:.4} of original at threshold {}",
            out.achieved_fraction, out.threshold_used
        );
    } else {
        println!(
            "WARN: target fraction {} not reached; best {:.4} at threshold {}",
            a.fraction, out.achieved_fraction, out.threshold_used
        );
    }

    std::fs::create_dir_all(&a.out_dir)?;
    let model_path = man.output(a.out_dir.join("model.json"));
    save_model(&out.network, None, &model_path)?;

    let (loss, accuracy) = evaluate(&out.network, &eval_set)?;
    let counts = out.network.count_parameters();
    let report = CompressionReport {
        meta: ReportMeta {
            dataset_tag: a.prune_data.clone(),
            architecture: architecture_string(&net),
            layer_mode: "optimal".to_string(),
            seed: a.seed,
        },
        rows: vec![ReportRow {
            threshold: out.threshold_used,
            layer_params: counts.layer_params,
            shortcut_params: counts.shortcut_params,
            total_params: counts.total_params,
            loss,
            accuracy,
        }],
    };
    let report_path = man.output(a.out_dir.join("report.csv"));
    emit_report(&report, &report_path, ReportFormat::Csv)?;
    println!("model written to {}", model_path.display());
    Ok(())
}

fn cmd_combined(a: CombinedArgs, man: &mut RunManifest) -> CmdResult<()> {
    let importance_target = unit_range(a.importance_target, "--importance-target")?;
    if importance_target == 0.0 {
        return Err(usage("--importance-target must be positive"));
    }
    if !a.step.is_finite() || a.step <= 0.0 || a.step > 1.0 {
        return Err(usage(format!("--step must be in (0, 1], got {}", a.step)));
    }
    if a.batch_size == 0 {
        return Err(usage("--batch-size must be at least 1"));
    }
    if !a.lr.is_finite() || a.lr < 0.0 {
        return Err(usage(format!(
            "--lr must be finite and non-negative, got {}",
            a.lr
        )));
    }
    man.seed = Some(a.seed);
    let net = load_net(&a.model, man)?;
    let train_set = load_data(&a.train_data, &a.csv, man)?;
    let prune_set = load_data(&a.prune_data, &a.csv, man)?;
    let test_set = load_data(&a.test_data, &a.csv, man)?;

    let cfg = TrainConfig {
        epochs: 0, // importance pruning drives its own epochs
        batch_size: a.batch_size,
        learning_rate: a.lr,
        seed: a.seed,
    };
    let out = combined_run(
        &net,
        &train_set,
        &prune_set,
        &test_set,
        importance_target,
        a.step,
        &cfg,
        &a.prune_data,
    )?;

    std::fs::create_dir_all(&a.out_dir)?;
    let unpruned_path = man.output(a.out_dir.join("unpruned-report.csv"));
    emit_report(&out.unpruned_report, &unpruned_path, ReportFormat::Csv)?;
    let pruned_path = man.output(a.out_dir.join("pruned-report.csv"));
    emit_report(&out.pruned_report, &pruned_path, ReportFormat::Csv)?;
    let model_path = man.output(a.out_dir.join("pruned-model.json"));
    save_model(&out.pruned_network, None, &model_path)?;

    println!(
        "importance pruning: {} -> {} params over {} epochs (target {}reached)",
        out.prune_log.start_params,
        out.prune_log.final_params,
        out.prune_log.epochs.len(),
        if out.prune_log.target_reached {
            ""
        } else {
            "NOT "
        }
    );
    println!(
        "test accuracy: original {:.4}, pruned {:.4}",
        out.original_eval.1, out.pruned_eval.1
    );
    // Side-by-side reduction between the anchor row and the t=0.35 row,
    // when the step lands on it.
    let reduction = |r: &CompressionReport| {
        let at = |t: f64| r.rows.iter().find(|row| (row.threshold - t).abs() < 1e-9);
        Some(at(1.0)?.total_params as i64 - at(0.35)?.total_params as i64)
    };
    if let (Some(a), Some(b)) = (
        reduction(&out.unpruned_report),
        reduction(&out.pruned_report),
    ) {
        println!("params removed between t=1.0 and t=0.35: unpruned {a}, pruned {b}");
    }
    println!(
        "reports written to {} and {}",
        unpruned_path.display(),
        pruned_path.display()
    );
    Ok(())
}
