//! Running moments and standard errors.

use serde::{Deserialize, Serialize};

/// A mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, stderr: f64::NAN, samples: 0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Estimate { mean, stderr: (var / n as f64).sqrt(), samples: n }
    }

    pub fn from_flags(flags: impl IntoIterator<Item = bool>) -> Self {
        let (mut k, mut n) = (0usize, 0usize);
        for f in flags {
            k += f as usize;
            n += 1;
        }
        Self::proportion(k, n)
    }

    pub fn proportion(successes: usize, trials: usize) -> Self {
        if trials == 0 {
            return Estimate { mean: f64::NAN, stderr: f64::NAN, samples: 0 };
        }
        let p = successes as f64 / trials as f64;
        Estimate { mean: p, stderr: (p * (1.0 - p) / trials as f64).sqrt(), samples: trials }
    }

    /// `|a - b|` measured in combined standard errors.
    pub fn z_distance(&self, other: &Estimate) -> f64 {
        let s = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        let d = (self.mean - other.mean).abs();
        if s == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / s
        }
    }

    pub fn agrees_with(&self, other: &Estimate, sigmas: f64) -> bool {
        self.z_distance(other) <= sigmas
    }
}

/// Batch-means standard error for a correlated trace.
pub fn batch_means(trace: &[f64], batches: usize) -> Estimate {
    let n = trace.len();
    let batches = batches.clamp(1, n.max(1));
    let len = n / batches;
    if len == 0 {
        return Estimate::from_samples(trace);
    }
    let means: Vec<f64> =
        (0..batches).map(|b| trace[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64).collect();
    let e = Estimate::from_samples(&means);
    Estimate { mean: trace[..batches * len].iter().sum::<f64>() / (batches * len) as f64, stderr: e.stderr, samples: n }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_moments() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert!((e.mean - 2.5).abs() < 1e-15);
        assert!((e.stderr - (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
        let p = Estimate::proportion(25, 100);
        assert!((p.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn z_distance_handles_zero_error() {
        let a = Estimate { mean: 1.0, stderr: 0.0, samples: 1 };
        assert_eq!(a.z_distance(&a), 0.0);
        let b = Estimate { mean: 2.0, stderr: 0.0, samples: 1 };
        assert!(a.z_distance(&b).is_infinite());
    }
}
