use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pac::third;
use crate::scalar::Scalar;

/// Per-example internal cost `c(η)` of an annotator with noise rate η.
///
/// Every model is bounded, continuously differentiable and strictly
/// decreasing on `[0, 1/3]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "kebab-case",
    bound(deserialize = "T: Scalar + serde::de::DeserializeOwned")
)]
pub enum CostModel<T> {
    /// `c(η) = intercept − slope·η` with `intercept > slope/3 > 0`.
    Linear { intercept: T, slope: T },
    /// `c(η) = scale·e^{−rate·η}`.
    Exponential { scale: T, rate: T },
    /// Monotone cubic Hermite interpolation through tabulated points.
    Table(CostTable<T>),
}

impl<T: Scalar> CostModel<T> {
    pub fn linear(intercept: T, slope: T) -> Result<Self> {
        if !(slope > T::zero() && intercept > slope / T::lit(3.0) && intercept.is_finite()) {
            return Err(Error::invalid(
                "linear cost",
                format!("need intercept > slope/3 > 0, got intercept {intercept}, slope {slope}"),
            ));
        }
        Ok(CostModel::Linear { intercept, slope })
    }

    pub fn exponential(scale: T, rate: T) -> Result<Self> {
        if !(scale > T::zero() && rate > T::zero() && scale.is_finite() && rate.is_finite()) {
            return Err(Error::invalid(
                "exponential cost",
                format!("need scale > 0 and rate > 0, got scale {scale}, rate {rate}"),
            ));
        }
        Ok(CostModel::Exponential { scale, rate })
    }

    pub fn table(knots: Vec<T>, values: Vec<T>) -> Result<Self> {
        CostTable::new(knots, values).map(CostModel::Table)
    }

    /// Re-validates a deserialized model.
    pub fn validated(self) -> Result<Self> {
        match self {
            CostModel::Linear { intercept, slope } => Self::linear(intercept, slope),
            CostModel::Exponential { scale, rate } => Self::exponential(scale, rate),
            CostModel::Table(t) => Self::table(t.knots, t.values),
        }
    }

    pub fn value(&self, eta: T) -> T {
        match self {
            CostModel::Linear { intercept, slope } => *intercept - *slope * eta,
            CostModel::Exponential { scale, rate } => *scale * (-*rate * eta).exp(),
            CostModel::Table(t) => t.eval(eta).0,
        }
    }

    pub fn derivative(&self, eta: T) -> T {
        match self {
            CostModel::Linear { slope, .. } => -*slope,
            CostModel::Exponential { scale, rate } => -*rate * *scale * (-*rate * eta).exp(),
            CostModel::Table(t) => t.eval(eta).1,
        }
    }

    /// The model multiplied by `factor > 0`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        if !(factor > T::zero() && factor.is_finite()) {
            return Err(Error::domain("cost scale", factor.as_f64(), "(0, ∞)"));
        }
        Ok(match self {
            CostModel::Linear { intercept, slope } => CostModel::Linear {
                intercept: *intercept * factor,
                slope: *slope * factor,
            },
            CostModel::Exponential { scale, rate } => CostModel::Exponential {
                scale: *scale * factor,
                rate: *rate,
            },
            CostModel::Table(t) => CostModel::Table(CostTable::new(
                t.knots.clone(),
                t.values.iter().map(|&v| v * factor).collect(),
            )?),
        })
    }
}

/// Tabulated cost curve. Knots must start at 0 and reach 1/3; values must be
/// positive and strictly decreasing. Slopes follow the Fritsch–Butland
/// harmonic-mean rule, which keeps the interpolant monotone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawCostTable<T>",
    bound(deserialize = "T: Scalar + serde::de::DeserializeOwned")
)]
pub struct CostTable<T> {
    knots: Vec<T>,
    values: Vec<T>,
    #[serde(skip_serializing)]
    slopes: Vec<T>,
}

impl<T: Scalar> CostTable<T> {
    pub fn new(knots: Vec<T>, values: Vec<T>) -> Result<Self> {
        Error::check_len("cost table values", knots.len(), values.len())?;
        if knots.len() < 2 {
            return Err(Error::invalid("cost table", "need at least two knots"));
        }
        if knots[0] != T::zero() || *knots.last().unwrap() < third::<T>() {
            return Err(Error::invalid("cost table", "knots must span [0, 1/3]"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("cost table", "knots must be strictly increasing"));
        }
        if values.windows(2).any(|w| !(w[1] < w[0])) || !(*values.last().unwrap() > T::zero()) {
            return Err(Error::invalid("cost table", "values must be positive and strictly decreasing"));
        }
        let secants: Vec<T> = knots
            .windows(2)
            .zip(values.windows(2))
            .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
            .collect();
        let n = knots.len();
        let mut slopes = vec![T::zero(); n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for j in 1..n - 1 {
            let (a, b) = (secants[j - 1], secants[j]);
            slopes[j] = T::lit(2.0) * a * b / (a + b);
        }
        let table = CostTable {
            knots,
            values,
            slopes,
        };
        // strict decrease of the interpolant, checked densely
        let grid = 2000;
        for j in 0..=grid {
            let eta = third::<T>() * T::from_usize_lossy(j) / T::from_usize_lossy(grid);
            if !(table.eval(eta).1 < T::zero()) {
                return Err(Error::invalid("cost table", format!("interpolant is not strictly decreasing near {eta}")));
            }
        }
        Ok(table)
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Value and derivative at `eta` (clamped to the knot range).
    fn eval(&self, eta: T) -> (T, T) {
        let n = self.knots.len();
        let eta = eta.max(self.knots[0]).min(self.knots[n - 1]);
        let j = match self.knots.iter().position(|&k| k > eta) {
            Some(0) => 0,
            Some(p) => p - 1,
            None => n - 2,
        };
        let h = self.knots[j + 1] - self.knots[j];
        let s = (eta - self.knots[j]) / h;
        let (y0, y1) = (self.values[j], self.values[j + 1]);
        let (m0, m1) = (self.slopes[j] * h, self.slopes[j + 1] * h);
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (two * s3 - three * s2 + T::one()) * y0
            + (s3 - two * s2 + s) * m0
            + (-two * s3 + three * s2) * y1
            + (s3 - s2) * m1;
        let six = T::lit(6.0);
        let four = T::lit(4.0);
        let dvalue = (six * s2 - six * s) * y0
            + (three * s2 - four * s + T::one()) * m0
            + (-six * s2 + six * s) * y1
            + (three * s2 - two * s) * m1;
        (value, dvalue / h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_validate() {
        assert!(CostModel::linear(1.0, 1.0).is_ok());
        assert!(CostModel::linear(0.3, 1.0).is_err());
        assert!(CostModel::linear(1.0, 0.0).is_err());
        assert!(CostModel::exponential(1.0, 0.0).is_err());
        assert!(CostModel::exponential(-1.0, 3.0).is_err());
        assert!(CostModel::table(vec![0.0, 0.2], vec![1.0, 0.5]).is_err());
        assert!(CostModel::table(vec![0.0, 1.0 / 3.0], vec![1.0, 1.0]).is_err());
        assert!(CostModel::table(vec![0.0f64, 0.1, 1.0 / 3.0], vec![1.0, 0.6, 0.5]).is_ok());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let models = [
            CostModel::linear(1.0, 1.0).unwrap(),
            CostModel::exponential(2.0, 30.0).unwrap(),
            CostModel::table(vec![0.0f64, 0.1, 0.2, 1.0 / 3.0], vec![1.0, 0.5, 0.3, 0.25]).unwrap(),
        ];
        for c in &models {
            for j in 1..40 {
                let eta = j as f64 / 120.0;
                let h = 1e-6;
                let fd = (c.value(eta + h) - c.value(eta - h)) / (2.0 * h);
                let d = c.derivative(eta);
                assert!((fd - d).abs() <= 1e-5 * d.abs().max(1.0), "{c:?} at {eta}: {fd} vs {d}");
                assert!(d < 0.0);
            }
        }
    }

    #[test]
    fn table_interpolates_knots() {
        let c = CostModel::table(vec![0.0f64, 0.1, 0.2, 1.0 / 3.0], vec![1.0, 0.5, 0.3, 0.25]).unwrap();
        for (k, v) in [(0.0, 1.0), (0.1, 0.5), (0.2, 0.3), (1.0 / 3.0, 0.25)] {
            assert!((c.value(k) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_scales_value_and_derivative() {
        let c = CostModel::exponential(1.0f64, 30.0).unwrap();
        let s = c.scaled(2.5).unwrap();
        assert!((s.value(0.1) - 2.5 * c.value(0.1)).abs() < 1e-15);
        assert!((s.derivative(0.1) - 2.5 * c.derivative(0.1)).abs() < 1e-13);
        assert!(c.scaled(0.0).is_err());
    }
}

#[derive(Deserialize)]
struct RawCostTable<T> {
    knots: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> TryFrom<RawCostTable<T>> for CostTable<T> {
    type Error = Error;

    fn try_from(raw: RawCostTable<T>) -> Result<Self> {
        CostTable::new(raw.knots, raw.values)
    }
}
