use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Gaussian-blob classification task: each class gets a mean drawn uniformly
/// from `[-4, 4]^d`, samples are the mean plus `N(0, 0.6^2)` noise, and
/// labels cycle round-robin so every class is (near-)equally represented.
/// Fully determined by the seed.
pub fn synth_dataset<F: Scalar>(
    n_samples: usize,
    n_features: usize,
    n_classes: usize,
    seed: u64,
) -> Result<Dataset<F>> {
    if n_samples == 0 || n_features == 0 || n_classes == 0 {
        return Err(Error::Config(
            "synth_dataset needs at least one sample, feature, and class".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| {
            (0..n_features)
                .map(|_| rng.random_range(-4.0..4.0))
                .collect()
        })
        .collect();
    let noise = Normal::new(0.0, 0.6).expect("constant stddev is valid");

    let mut data = Vec::with_capacity(n_samples * n_features);
    let mut labels = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let class = i % n_classes;
        labels.push(class);
        for &mean in &means[class] {
            data.push(F::from_f64(mean + noise.sample(&mut rng)));
        }
    }
    Dataset::new(
        Matrix::new(n_samples, n_features, data)?,
        labels,
        n_classes,
        None,
    )
}
