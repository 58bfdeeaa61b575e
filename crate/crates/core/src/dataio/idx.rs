use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const IMAGES_MAGIC: u32 = 2051; // u8 tensor, 3 dimensions
const LABELS_MAGIC: u32 = 2049; // u8 tensor, 1 dimension

fn read_u32_be(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Data(format!("truncated {what}: {e}")))?;
    Ok(u32::from_be_bytes(buf))
}

/// Load an IDX image/label file pair (the MNIST container format: big-endian
/// headers, u8 payload). Pixels are scaled to `[0, 1]` by dividing by 255;
/// each image becomes one flattened feature row. `n_classes` is taken as
/// `max label + 1`.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Dataset<f64>> {
    let mut images = BufReader::new(File::open(images_path.as_ref())?);
    let magic = read_u32_be(&mut images, "image header")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Data(format!(
            "bad image file magic {magic}, expected {IMAGES_MAGIC}"
        )));
    }
    let n = read_u32_be(&mut images, "image count")? as usize;
    let rows = read_u32_be(&mut images, "image height")? as usize;
    let cols = read_u32_be(&mut images, "image width")? as usize;
    let px = rows * cols;
    let mut raw = vec![0u8; n * px];
    images
        .read_exact(&mut raw)
        .map_err(|e| Error::Data(format!("truncated image data: {e}")))?;
    let features: Vec<f64> = raw.iter().map(|&b| f64::from(b) / 255.0).collect();

    let mut labels_file = BufReader::new(File::open(labels_path.as_ref())?);
    let magic = read_u32_be(&mut labels_file, "label header")?;
    if magic != LABELS_MAGIC {
        return Err(Error::Data(format!(
            "bad label file magic {magic}, expected {LABELS_MAGIC}"
        )));
    }
    let n_labels = read_u32_be(&mut labels_file, "label count")? as usize;
    if n_labels != n {
        return Err(Error::Data(format!("{n} images but {n_labels} labels")));
    }
    let mut raw_labels = vec![0u8; n];
    labels_file
        .read_exact(&mut raw_labels)
        .map_err(|e| Error::Data(format!("truncated label data: {e}")))?;
    let labels: Vec<usize> = raw_labels.iter().map(|&b| b as usize).collect();
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);

    Dataset::new(Matrix::new(n, px, features)?, labels, n_classes, None)
}
