use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{Error, Result};
use crate::pac::third;
use crate::scalar::Scalar;

/// Distribution of an annotator's private noise rate on `[0, 1/3]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "kebab-case",
    bound(deserialize = "T: Scalar + serde::de::DeserializeOwned")
)]
pub enum PriorModel<T> {
    /// `φ = 3`, `Φ(η) = 3η`.
    Uniform,
    /// Beta(a, b) on `[0, 1]` conditioned on `[0, 1/3]`. Requires `a ≤ 1` so
    /// the density stays positive at 0.
    TruncatedBeta { a: T, b: T },
    /// Piecewise-linear density through tabulated points, normalized to 1.
    Table(PriorTable<T>),
}

impl<T: Scalar> PriorModel<T> {
    pub fn truncated_beta(a: T, b: T) -> Result<Self> {
        if !(a > T::zero() && a <= T::one() && b > T::zero() && b.is_finite()) {
            return Err(Error::invalid(
                "truncated-beta prior",
                format!("need 0 < a ≤ 1 and b > 0, got a {a}, b {b}"),
            ));
        }
        Ok(PriorModel::TruncatedBeta { a, b })
    }

    pub fn table(knots: Vec<T>, densities: Vec<T>) -> Result<Self> {
        PriorTable::new(knots, densities).map(PriorModel::Table)
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            PriorModel::Uniform => Ok(PriorModel::Uniform),
            PriorModel::TruncatedBeta { a, b } => Self::truncated_beta(a, b),
            PriorModel::Table(t) => Self::table(t.knots, t.densities),
        }
    }

    pub fn density(&self, eta: T) -> T {
        if eta < T::zero() || eta > third::<T>() {
            return T::zero();
        }
        match self {
            PriorModel::Uniform => T::lit(3.0),
            PriorModel::TruncatedBeta { a, b } => {
                let (a, b, x) = (a.as_f64(), b.as_f64(), eta.as_f64());
                let log_pdf = (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b);
                T::lit(log_pdf.exp() / beta_reg(a, b, 1.0 / 3.0))
            }
            PriorModel::Table(t) => t.density(eta),
        }
    }

    pub fn cdf(&self, eta: T) -> T {
        if eta <= T::zero() {
            return T::zero();
        }
        if eta >= third::<T>() {
            return T::one();
        }
        match self {
            PriorModel::Uniform => T::lit(3.0) * eta,
            PriorModel::TruncatedBeta { a, b } => {
                let (a, b) = (a.as_f64(), b.as_f64());
                T::lit(beta_reg(a, b, eta.as_f64()) / beta_reg(a, b, 1.0 / 3.0))
            }
            PriorModel::Table(t) => t.cdf(eta),
        }
    }

    /// Quantile function on `[0, 1/3]`.
    pub fn inverse_cdf(&self, u: T) -> T {
        let u = u.max(T::zero()).min(T::one());
        match self {
            PriorModel::Uniform => u / T::lit(3.0),
            _ => {
                let (mut lo, mut hi) = (T::zero(), third::<T>());
                for _ in 0..200 {
                    let mid = (lo + hi) / T::lit(2.0);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.cdf(mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }

    /// Maps `u ∈ [0, 1)` to a draw from the prior conditioned on `[lo, hi]`.
    pub fn quantile_within(&self, lo: T, hi: T, u: T) -> T {
        let (flo, fhi) = (self.cdf(lo), self.cdf(hi));
        self.inverse_cdf(flo + u * (fhi - flo)).max(lo).min(hi)
    }
}

/// Knots span `[0, 1/3]` exactly; densities are positive and rescaled so the
/// trapezoid integral is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawPriorTable<T>",
    bound(deserialize = "T: Scalar + serde::de::DeserializeOwned")
)]
pub struct PriorTable<T> {
    knots: Vec<T>,
    densities: Vec<T>,
    #[serde(skip_serializing)]
    cumulative: Vec<T>,
}

impl<T: Scalar> PriorTable<T> {
    pub fn new(knots: Vec<T>, densities: Vec<T>) -> Result<Self> {
        Error::check_len("prior table densities", knots.len(), densities.len())?;
        if knots.len() < 2 {
            return Err(Error::invalid("prior table", "need at least two knots"));
        }
        if knots[0] != T::zero() || *knots.last().unwrap() != third::<T>() {
            return Err(Error::invalid("prior table", "knots must span exactly [0, 1/3]"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("prior table", "knots must be strictly increasing"));
        }
        if densities.iter().any(|d| !(d.is_finite() && *d > T::zero())) {
            return Err(Error::invalid("prior table", "densities must be positive"));
        }
        let areas: Vec<T> = knots
            .windows(2)
            .zip(densities.windows(2))
            .map(|(k, d)| (k[1] - k[0]) * (d[0] + d[1]) / T::lit(2.0))
            .collect();
        let total: T = areas.iter().copied().sum();
        let densities: Vec<T> = densities.iter().map(|&d| d / total).collect();
        let mut cumulative = vec![T::zero(); knots.len()];
        for j in 1..knots.len() {
            cumulative[j] = cumulative[j - 1] + areas[j - 1] / total;
        }
        Ok(PriorTable {
            knots,
            densities,
            cumulative,
        })
    }

    fn segment(&self, eta: T) -> usize {
        let n = self.knots.len();
        match self.knots.iter().position(|&k| k > eta) {
            Some(0) => 0,
            Some(p) => p - 1,
            None => n - 2,
        }
    }

    fn density(&self, eta: T) -> T {
        let j = self.segment(eta);
        let s = (eta - self.knots[j]) / (self.knots[j + 1] - self.knots[j]);
        self.densities[j] + s * (self.densities[j + 1] - self.densities[j])
    }

    fn cdf(&self, eta: T) -> T {
        let j = self.segment(eta);
        let dx = eta - self.knots[j];
        let h = self.knots[j + 1] - self.knots[j];
        let slope = (self.densities[j + 1] - self.densities[j]) / h;
        (self.cumulative[j] + self.densities[j] * dx + slope * dx * dx / T::lit(2.0)).min(T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn priors() -> Vec<PriorModel<f64>> {
        vec![
            PriorModel::Uniform,
            PriorModel::truncated_beta(1.0, 3.0).unwrap(),
            PriorModel::truncated_beta(0.7, 2.0).unwrap(),
            PriorModel::table(vec![0.0, 0.1, 0.25, 1.0 / 3.0], vec![1.0, 4.0, 2.0, 0.5]).unwrap(),
        ]
    }

    #[test]
    fn cdf_endpoints_and_positivity() {
        for p in priors() {
            assert_eq!(p.cdf(0.0), 0.0);
            assert!((p.cdf(1.0 / 3.0) - 1.0).abs() < 1e-12);
            for j in 1..100 {
                assert!(p.density(j as f64 / 300.0) > 0.0, "{p:?}");
            }
        }
    }

    #[test]
    fn cdf_consistent_with_density_by_quadrature() {
        for p in priors() {
            // composite Simpson on [0.01, eta]
            let lo = 0.01;
            for &eta in &[0.05, 0.1, 0.2, 0.3] {
                let n = 20_000;
                let h = (eta - lo) / n as f64;
                let mut s = p.density(lo) + p.density(eta);
                for j in 1..n {
                    let w = if j % 2 == 1 { 4.0 } else { 2.0 };
                    s += w * p.density(lo + j as f64 * h);
                }
                let integral = s * h / 3.0;
                let diff = p.cdf(eta) - p.cdf(lo);
                assert!((integral - diff).abs() < 1e-8, "{p:?} at {eta}: {integral} vs {diff}");
            }
        }
    }

    #[test]
    fn inverse_cdf_round_trips() {
        for p in priors() {
            for j in 1..20 {
                let u = j as f64 / 20.0;
                let eta = p.inverse_cdf(u);
                assert!((p.cdf(eta) - u).abs() < 1e-10, "{p:?} at {u}");
            }
        }
    }

    #[test]
    fn quantile_within_stays_inside() {
        for p in priors() {
            for j in 0..50 {
                let v = p.quantile_within(0.05, 0.3, j as f64 / 50.0);
                assert!((0.05..=0.3).contains(&v));
            }
        }
    }

    #[test]
    fn beta_requires_positive_density_at_zero() {
        assert!(PriorModel::truncated_beta(2.0, 2.0).is_err());
        assert!(PriorModel::truncated_beta(1.0, 0.0).is_err());
    }

    #[test]
    fn table_validation() {
        assert!(PriorModel::table(vec![0.0, 0.2], vec![1.0, 1.0]).is_err());
        assert!(PriorModel::table(vec![0.0, 1.0 / 3.0], vec![1.0, 0.0]).is_err());
        let t = PriorModel::table(vec![0.0f64, 1.0 / 3.0], vec![1.0, 1.0]).unwrap();
        assert!((t.density(0.2) - 3.0).abs() < 1e-12);
    }
}

#[derive(Deserialize)]
struct RawPriorTable<T> {
    knots: Vec<T>,
    densities: Vec<T>,
}

impl<T: Scalar> TryFrom<RawPriorTable<T>> for PriorTable<T> {
    type Error = Error;

    fn try_from(raw: RawPriorTable<T>) -> Result<Self> {
        PriorTable::new(raw.knots, raw.densities)
    }
}
