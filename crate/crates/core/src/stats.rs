//! Small statistical helpers for Monte Carlo estimates.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl Estimate {
    /// Frequency estimate for `hits` successes out of `trials` with the
    /// binomial standard error `sqrt(p(1-p)/n)`.
    pub fn binomial(hits: u64, trials: u64) -> Self {
        assert!(trials > 0, "binomial estimate needs at least one trial");
        let p = hits as f64 / trials as f64;
        Estimate {
            mean: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            samples: trials,
        }
    }

    /// Mean and standard error of a sample, summed in slice order.
    pub fn from_samples(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "estimate needs at least one sample");
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            std_error: (var / n).sqrt(),
            samples: values.len() as u64,
        }
    }

    /// `mean ≤ bound + k·SE`.
    pub fn within(&self, bound: f64, k: f64) -> bool {
        self.mean <= bound + k * self.std_error
    }
}

/// One-sided Clopper–Pearson upper confidence bound on a binomial proportion.
pub fn clopper_pearson_upper(hits: u64, trials: u64, confidence: f64) -> f64 {
    assert!(trials > 0);
    if hits >= trials {
        return 1.0;
    }
    let beta = Beta::new(hits as f64 + 1.0, (trials - hits) as f64).expect("positive shape");
    beta.inverse_cdf(confidence)
}
