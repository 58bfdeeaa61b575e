use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{Activation, DenseLayer, Network, ShortcutConnection};

pub const MODEL_FORMAT_VERSION: &str = "1";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: String,
    input_dim: usize,
    layers: Vec<LayerRecord>,
    shortcuts: Vec<ShortcutRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    activation: String,
    in_dim: usize,
    out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ShortcutRecord {
    attached_at: usize,
    src_dim: usize,
    dest_dim: usize,
    /// Row-major `dest_dim x src_dim`; shortcuts carry no bias.
    weights: Vec<f64>,
}

/// Write a network (and optionally its class label names) as JSON. Values
/// are printed with the shortest representation that parses back to the same
/// `f64`, so save followed by load reproduces the network bit for bit.
pub fn save_model(
    net: &Network<f64>,
    labels: Option<&[String]>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION.to_string(),
        input_dim: net.input_dim(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerRecord {
                activation: l.activation().name().to_string(),
                in_dim: l.in_dim(),
                out_dim: l.out_dim(),
                weights: l.weights().as_slice().to_vec(),
                biases: l.biases().to_vec(),
            })
            .collect(),
        shortcuts: net
            .shortcut_layers()
            .map(|l| {
                let sc = net.shortcut_at(l).expect("key comes from the map");
                ShortcutRecord {
                    attached_at: l,
                    src_dim: sc.src_dim(),
                    dest_dim: sc.dest_dim(),
                    weights: sc.weights().as_slice().to_vec(),
                }
            })
            .collect(),
        labels: labels.map(<[String]>::to_vec),
    };
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    serde_json::to_writer(&mut out, &file)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Read a model written by [`save_model`]. The file's declared dimensions
/// are checked against the payload and the assembled network is fully
/// validated; nothing is returned on any failure.
pub fn load_model(path: impl AsRef<Path>) -> Result<(Network<f64>, Option<Vec<String>>)> {
    let path = path.as_ref();
    let file: ModelFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelVersion {
            found: file.format_version,
            expected: MODEL_FORMAT_VERSION.to_string(),
        });
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for (i, rec) in file.layers.iter().enumerate() {
        let weights = Matrix::new(rec.out_dim, rec.in_dim, rec.weights.clone())
            .map_err(|e| Error::ModelFormat(format!("layer {i}: {e}")))?;
        let layer = DenseLayer::new(
            weights,
            rec.biases.clone(),
            Activation::from_name(&rec.activation)?,
        )
        .map_err(|e| Error::ModelFormat(format!("layer {i}: {e}")))?;
        layers.push(layer);
    }
    let mut net =
        Network::new(file.input_dim, layers).map_err(|e| Error::ModelFormat(e.to_string()))?;

    // Runs of consecutive shortcuts validate left to right, so attach in
    // ascending order of attachment point.
    let mut shortcuts = file.shortcuts;
    shortcuts.sort_by_key(|s| s.attached_at);
    if shortcuts
        .windows(2)
        .any(|w| w[0].attached_at == w[1].attached_at)
    {
        return Err(Error::ModelFormat(
            "two shortcuts attached at the same layer".into(),
        ));
    }
    for rec in &shortcuts {
        let weights = Matrix::new(rec.dest_dim, rec.src_dim, rec.weights.clone()).map_err(|e| {
            Error::ModelFormat(format!("shortcut at layer {}: {e}", rec.attached_at))
        })?;
        net.attach_shortcut(rec.attached_at, ShortcutConnection::new(weights))
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
    }

    let violations = net.validate();
    if !violations.is_empty() {
        let codes: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Error::InvalidNetwork(codes.join("; ")));
    }
    Ok((net, file.labels))
}
