//! Shared helpers for the integration suites: seeded dataset generators and
//! a Kolmogorov-Smirnov distance.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use siri::numkit::chisq_cdf;
use siri::Dataset;

/// Standard normal predictors with an independent standard normal response.
pub fn null_gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset {
    let mut x = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        for j in 0..p {
            x[[i, j]] = rng.sample(StandardNormal);
        }
    }
    let y: Array1<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    Dataset::new(x, y).unwrap()
}

/// The two-variable interaction model y = x1 x2 + noise, noise variance 0.1.
pub fn interaction_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset {
    let mut x = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        for j in 0..p {
            x[[i, j]] = rng.sample(StandardNormal);
        }
    }
    let y: Array1<f64> = (0..n)
        .map(|i| {
            let e: f64 = rng.sample(StandardNormal);
            x[[i, 0]] * x[[i, 1]] + 0.1f64.sqrt() * e
        })
        .collect();
    Dataset::new(x, y).unwrap()
}

/// Two-sided KS distance between a sample and the chi-squared CDF.
pub fn ks_distance_chisq(sample: &mut [f64], dof: usize) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let f = chisq_cdf(x, dof);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
