//! Datasets and on-disk formats: delimited text and IDX loaders, synthetic
//! classification blobs, deterministic splitting, and the model JSON format.

mod idx;
mod model;
mod synth;
mod tabular;

pub use idx::load_idx;
pub use model::{load_model, save_model, MODEL_FORMAT_VERSION};
pub use synth::synth_dataset;
pub use tabular::load_csv;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// In-memory classification dataset: one feature row per sample, labels as
/// class indices below `n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    features: Matrix<F>,
    labels: Vec<usize>,
    n_classes: usize,
    label_names: Option<Vec<String>>,
}

impl<F: Scalar> Dataset<F> {
    pub fn new(
        features: Matrix<F>,
        labels: Vec<usize>,
        n_classes: usize,
        label_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::Data("n_classes must be at least 1".into()));
        }
        if features.rows() != labels.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Data(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        if let Some(names) = &label_names {
            if names.len() != n_classes {
                return Err(Error::Data(format!(
                    "{} label names for {n_classes} classes",
                    names.len()
                )));
            }
        }
        if !features.is_finite() {
            return Err(Error::Data("features contain non-finite values".into()));
        }
        Ok(Self {
            features,
            labels,
            n_classes,
            label_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self) -> &Matrix<F> {
        &self.features
    }

    pub fn sample(&self, i: usize) -> (&[F], usize) {
        (self.features.row(i), self.labels[i])
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_names(&self) -> Option<&[String]> {
        self.label_names.as_deref()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
            label_names: self.label_names.clone(),
        }
    }
}

/// Fractions for a train/prune/test split. They must be non-negative and
/// sum to 1; the split itself is a seeded shuffle, so the same spec on the
/// same dataset always produces the same three parts.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub prune_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train_fraction, self.prune_fraction, self.test_fraction];
        if parts.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::Config("split fractions must be non-negative".into()));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// Shuffle and partition into disjoint train/prune/test parts that together
/// cover every sample exactly once. A fraction greater than zero must yield
/// at least one sample, otherwise the dataset is too small for the requested
/// fractions and this errors rather than silently handing back an empty part.
pub fn split<F: Scalar>(
    ds: &Dataset<F>,
    spec: &SplitSpec,
) -> Result<(Dataset<F>, Dataset<F>, Dataset<F>)> {
    spec.validate()?;
    let n = ds.n_samples();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let n_train = ((spec.train_fraction * n as f64).round() as usize).min(n);
    let n_prune = ((spec.prune_fraction * n as f64).round() as usize).min(n - n_train);
    let n_test = n - n_train - n_prune;
    for (name, fraction, count) in [
        ("train", spec.train_fraction, n_train),
        ("prune", spec.prune_fraction, n_prune),
        ("test", spec.test_fraction, n_test),
    ] {
        if fraction > 0.0 && count == 0 {
            return Err(Error::Data(format!(
                "{name} fraction {fraction} yields no samples out of {n}"
            )));
        }
    }
    let train = ds.subset(&order[..n_train]);
    let prune = ds.subset(&order[n_train..n_train + n_prune]);
    let test = ds.subset(&order[n_train + n_prune..]);
    Ok((train, prune, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn toy(n: usize) -> Dataset<f64> {
        let features = Matrix::from_fn(n, 2, |r, c| (r * 2 + c) as f64);
        let labels = (0..n).map(|i| i % 3).collect();
        Dataset::new(features, labels, 3, None).unwrap()
    }

    #[test]
    fn new_rejects_label_out_of_range_and_row_mismatch() {
        let f = Matrix::from_fn(2, 1, |_, _| 0.0f64);
        assert!(Dataset::new(f.clone(), vec![0, 3], 3, None).is_err());
        assert!(Dataset::new(f.clone(), vec![0], 3, None).is_err());
        assert!(Dataset::new(f, vec![0, 1], 3, Some(vec!["a".into()])).is_err());
    }

    #[test]
    fn split_is_disjoint_exhaustive_and_deterministic() {
        let ds = toy(100);
        let spec = SplitSpec {
            train_fraction: 0.7,
            prune_fraction: 0.15,
            test_fraction: 0.15,
            seed: 5,
        };
        let (a, b, c) = split(&ds, &spec).unwrap();
        assert_eq!(a.n_samples() + b.n_samples() + c.n_samples(), 100);
        assert_eq!(a.n_samples(), 70);
        assert_eq!(b.n_samples(), 15);

        // Same seed reproduces the exact same parts.
        let (a2, _, _) = split(&ds, &spec).unwrap();
        assert_eq!(a, a2);

        // Rows across parts are disjoint: collect each part's feature rows
        // (all rows of `toy` are distinct).
        let mut seen = BTreeSet::new();
        for part in [&a, &b, &c] {
            for i in 0..part.n_samples() {
                let key = format!("{:?}", part.sample(i).0);
                assert!(seen.insert(key), "row appeared in two parts");
            }
        }
    }

    #[test]
    fn split_rounds_rather_than_truncates() {
        // 0.6 * 100 is 59.999...; truncation would give 59.
        let ds = toy(100);
        let (a, b, c) = split(
            &ds,
            &SplitSpec {
                train_fraction: 0.6,
                prune_fraction: 0.2,
                test_fraction: 0.2,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!((a.n_samples(), b.n_samples(), c.n_samples()), (60, 20, 20));
    }

    #[test]
    fn split_zero_fraction_gives_empty_part() {
        let ds = toy(10);
        let (a, b, c) = split(
            &ds,
            &SplitSpec {
                train_fraction: 0.8,
                prune_fraction: 0.0,
                test_fraction: 0.2,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!((a.n_samples(), b.n_samples(), c.n_samples()), (8, 0, 2));
    }

    #[test]
    fn split_errors_when_positive_fraction_starves() {
        let ds = toy(3);
        let err = split(
            &ds,
            &SplitSpec {
                train_fraction: 0.9,
                prune_fraction: 0.05,
                test_fraction: 0.05,
                seed: 0,
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("yields no samples"));
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let ds = toy(10);
        for spec in [
            SplitSpec {
                train_fraction: 0.5,
                prune_fraction: 0.5,
                test_fraction: 0.5,
                seed: 0,
            },
            SplitSpec {
                train_fraction: -0.1,
                prune_fraction: 0.6,
                test_fraction: 0.5,
                seed: 0,
            },
        ] {
            assert!(split(&ds, &spec).is_err());
        }
    }
}
