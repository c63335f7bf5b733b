//! Order-fixed summation and Monte-Carlo estimates.

use serde::{Deserialize, Serialize};

/// Pairwise summation with a fixed reduction tree (results depend only on the
/// order of `xs`).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = pairwise_sum(xs) / n as f64;
        if n == 1 {
            return Estimate { mean, stderr: 0.0 };
        }
        let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&sq) / (n - 1) as f64;
        Estimate {
            mean,
            stderr: (var / n as f64).sqrt(),
        }
    }

    pub fn upper(&self, z: f64) -> f64 {
        self.mean + z * self.stderr
    }

    pub fn lower(&self, z: f64) -> f64 {
        self.mean - z * self.stderr
    }

    /// `|self - other|` in units of the combined standard error.
    pub fn z_distance(&self, other: &Estimate) -> f64 {
        let se = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        let diff = (self.mean - other.mean).abs();
        if se == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / se
        }
    }

    /// `|self - target|` in units of this estimate's standard error.
    pub fn z_from(&self, target: f64) -> f64 {
        self.z_distance(&Estimate {
            mean: target,
            stderr: 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_of_constant_has_zero_stderr() {
        let e = Estimate::from_samples(&[2.0; 100]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn stderr_of_coin() {
        let xs: Vec<f64> = (0..1000).map(|i| (i % 2) as f64).collect();
        let e = Estimate::from_samples(&xs);
        assert_eq!(e.mean, 0.5);
        assert!((e.stderr - (0.25f64 * 1000.0 / 999.0 / 1000.0).sqrt()).abs() < 1e-15);
    }
}
