//! Closed-form PAC quantities for learning from several noisy annotators.
//!
//! An annotator with noise rate η contributes ψ(η) "nats" of evidence per
//! labelled example; a plan `(m₁, …, mₙ)` is feasible for the minimum
//! disagreement learner when `ln(N/δ) ≤ Σ mᵢ ψ(ηᵢ)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;
use crate::stats::Estimate;

/// Probability that an annotator flips the true label.
///
/// Valid noise rates lie in `[0, 1/2)`. Feasibility math further restricts
/// them to `[0, 1/3]`, which is checked where it matters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseRate<T>(T);

impl<T: Scalar> NoiseRate<T> {
    pub fn new(value: T) -> Result<Self> {
        if value.is_finite() && value >= T::zero() && value < T::lit(0.5) {
            Ok(NoiseRate(value))
        } else {
            Err(Error::domain("noise rate", value.as_f64(), "[0, 1/2)"))
        }
    }

    /// Builds a vector of noise rates, failing on the first invalid entry.
    pub fn vec(values: &[T]) -> Result<Vec<Self>> {
        values.iter().map(|&v| Self::new(v)).collect()
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }
}

/// The largest noise rate the feasibility bound covers.
#[inline]
pub fn third<T: Scalar>() -> T {
    T::one() / T::lit(3.0)
}

/// Learning target: accuracy ε, confidence δ, and the class size N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacParams<T> {
    epsilon: T,
    delta: T,
    concept_count: u64,
}

impl<T: Scalar> PacParams<T> {
    pub fn new(epsilon: T, delta: T, concept_count: u64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !(delta > T::zero() && delta < T::one()) {
            return Err(Error::domain("delta", delta.as_f64(), "(0, 1)"));
        }
        if concept_count < 2 {
            return Err(Error::domain("concept_count", concept_count as f64, "[2, ∞)"));
        }
        Ok(PacParams {
            epsilon,
            delta,
            concept_count,
        })
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn concept_count(&self) -> u64 {
        self.concept_count
    }
}

fn check_epsilon<T: Scalar>(epsilon: T) -> Result<()> {
    if epsilon > T::zero() && epsilon < T::one() {
        Ok(())
    } else {
        Err(Error::domain("epsilon", epsilon.as_f64(), "(0, 1)"))
    }
}

/// Number of examples bought from each annotator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnnotationPlan {
    counts: Vec<u64>,
}

impl AnnotationPlan {
    pub fn new(counts: Vec<u64>) -> Self {
        AnnotationPlan { counts }
    }

    pub fn zeros(n: usize) -> Self {
        AnnotationPlan { counts: vec![0; n] }
    }

    /// A plan that buys `count` examples from annotator `index` only.
    pub fn single(n: usize, index: usize, count: u64) -> Self {
        let mut counts = vec![0; n];
        counts[index] = count;
        AnnotationPlan { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// The same plan with one more example from annotator `index`.
    pub fn with_extra(&self, index: usize) -> Self {
        let mut counts = self.counts.clone();
        counts[index] += 1;
        AnnotationPlan { counts }
    }
}

impl From<Vec<u64>> for AnnotationPlan {
    fn from(counts: Vec<u64>) -> Self {
        AnnotationPlan::new(counts)
    }
}

/// `ln(N/δ)`, the evidence a feasible plan must accumulate.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogBudget<T>(T);

impl<T: Scalar> LogBudget<T> {
    pub fn new(value: T) -> Result<Self> {
        if value.is_finite() && value > T::zero() {
            Ok(LogBudget(value))
        } else {
            Err(Error::domain("log budget", value.as_f64(), "(0, ∞)"))
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }
}

pub fn log_budget<T: Scalar>(params: &PacParams<T>) -> LogBudget<T> {
    // N ≥ 2 and δ < 1 make the ratio exceed 2
    LogBudget((T::from_u64(params.concept_count).unwrap() / params.delta).ln())
}

fn check_feasibility_range<T: Scalar>(eta: T) -> Result<()> {
    if eta >= T::zero() && eta <= third::<T>() {
        Ok(())
    } else {
        Err(Error::domain("noise rate", eta.as_f64(), "[0, 1/3]"))
    }
}

/// `−ln(1 − ε·(1 − e^{−x}))`, evaluated without cancellation.
#[inline]
fn neg_log_mgf<T: Scalar>(x: T, epsilon: T) -> T {
    let hit = epsilon * -(-x).exp_m1();
    -(-hit).ln_1p()
}

/// The interior closed form `ψ(η) = −ln[1 − ε(1 − exp(−(1 − 3η)/8))]`,
/// continued to the closed interval `[0, 1/3]`.
pub fn psi_interior<T: Scalar>(eta: T, epsilon: T) -> Result<T> {
    check_epsilon(epsilon)?;
    check_feasibility_range(eta)?;
    Ok(neg_log_mgf((T::one() - T::lit(3.0) * eta) / T::lit(8.0), epsilon))
}

/// Information rate of one example from an annotator with noise rate `eta`.
///
/// Inside `(0, 1/3)` this is [`psi_interior`]. At exactly `0` it returns the
/// noiseless rate `−ln(1 − ε)` and at exactly `1/3` the value
/// `−ln[1 − ε(1 − e^{−1/18})]`; neither matches the interior formula's limit.
pub fn psi<T: Scalar>(eta: NoiseRate<T>, epsilon: T) -> Result<T> {
    check_epsilon(epsilon)?;
    let eta = eta.value();
    check_feasibility_range(eta)?;
    if eta == T::zero() {
        Ok(-(-epsilon).ln_1p())
    } else if eta == third::<T>() {
        Ok(neg_log_mgf(T::one() / T::lit(18.0), epsilon))
    } else {
        Ok(neg_log_mgf((T::one() - T::lit(3.0) * eta) / T::lit(8.0), epsilon))
    }
}

/// `Σ countsᵢ · ratesᵢ`, summed in index order.
pub fn coverage<T: Scalar>(counts: &[u64], rates: &[T]) -> T {
    counts
        .iter()
        .zip(rates)
        .fold(T::zero(), |acc, (&m, &r)| acc + T::from_u64(m).unwrap() * r)
}

/// Smallest count `m` with `m · rate ≥ budget` in floating point.
///
/// Starts from `⌈budget / rate⌉` and steps up when rounding leaves the product
/// one ulp short.
pub fn covering_count<T: Scalar>(budget: T, rate: T) -> u64 {
    debug_assert!(rate > T::zero() && budget > T::zero());
    let mut m = (budget / rate).ceil().to_u64().expect("count fits in u64");
    while T::from_u64(m).unwrap() * rate < budget {
        m += 1;
    }
    while m > 1 && T::from_u64(m - 1).unwrap() * rate >= budget {
        m -= 1;
    }
    m
}

fn rates<T: Scalar>(etas: &[NoiseRate<T>], epsilon: T) -> Result<Vec<T>> {
    etas.iter().map(|&e| psi(e, epsilon)).collect()
}

/// Whether the plan satisfies `ln(N/δ) ≤ Σ mᵢ ψ(ηᵢ)` (exact comparison).
pub fn is_feasible<T: Scalar>(
    plan: &AnnotationPlan,
    etas: &[NoiseRate<T>],
    params: &PacParams<T>,
) -> Result<bool> {
    Error::check_len("plan", etas.len(), plan.len())?;
    let rates = rates(etas, params.epsilon)?;
    Ok(log_budget(params).value() <= coverage(plan.counts(), &rates))
}

/// `⌈ln(N/δ) / ψ(η)⌉`: examples needed from a single annotator. For η = 0
/// this is the noiseless sample complexity m₀.
pub fn min_samples_single<T: Scalar>(eta: NoiseRate<T>, params: &PacParams<T>) -> Result<u64> {
    let rate = psi(eta, params.epsilon)?;
    Ok(covering_count(log_budget(params).value(), rate))
}

/// Smallest `m` such that buying `m` examples from every annotator is
/// feasible.
pub fn equal_split_plan<T: Scalar>(etas: &[NoiseRate<T>], params: &PacParams<T>) -> Result<AnnotationPlan> {
    if etas.is_empty() {
        return Err(Error::invalid("annotators", "no noise rates given"));
    }
    let rates = rates(etas, params.epsilon)?;
    let budget = log_budget(params).value();
    let total = rates.iter().fold(T::zero(), |acc, &r| acc + r);
    let mut m = covering_count(budget, total);
    // the index-order sum may differ from m·Σψ by an ulp
    while coverage(&vec![m; etas.len()], &rates) < budget {
        m += 1;
    }
    while m > 1 && coverage(&vec![m - 1; etas.len()], &rates) >= budget {
        m -= 1;
    }
    Ok(AnnotationPlan::new(vec![m; etas.len()]))
}

/// `exp(−Σ kᵢ(1 − 3ηᵢ)/8)`: bound on the probability that the target does
/// not beat a competitor when `kᵢ` of annotator i's examples fall in their
/// symmetric difference.
pub fn disagreement_chernoff_bound<T: Scalar>(ks: &[u64], etas: &[NoiseRate<T>]) -> Result<T> {
    Error::check_len("etas", ks.len(), etas.len())?;
    let mut exponent = T::zero();
    for (&k, eta) in ks.iter().zip(etas) {
        check_feasibility_range(eta.value())?;
        exponent = exponent + T::from_u64(k).unwrap() * (T::one() - T::lit(3.0) * eta.value());
    }
    Ok((-exponent / T::lit(8.0)).exp())
}

/// `Πᵢ [1 − ε(1 − e^{−(1−3ηᵢ)/8})]^{mᵢ}`: bound on the probability that a
/// fixed hypothesis of error ε looks no worse than the target.
pub fn e1_upper_bound<T: Scalar>(
    plan: &AnnotationPlan,
    etas: &[NoiseRate<T>],
    epsilon: T,
) -> Result<T> {
    Error::check_len("plan", etas.len(), plan.len())?;
    check_epsilon(epsilon)?;
    let mut product = T::one();
    for (&m, eta) in plan.counts().iter().zip(etas) {
        check_feasibility_range(eta.value())?;
        let x = (T::one() - T::lit(3.0) * eta.value()) / T::lit(8.0);
        let base = T::one() - epsilon * -(-x).exp_m1();
        product = product * base.powf(T::from_u64(m).unwrap());
    }
    Ok(product)
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        Err(Error::ZeroTrials)
    } else {
        Ok(())
    }
}

/// Monte Carlo estimate of `P(L_e(h) ≤ L_e(c_t))` for a hypothesis whose
/// symmetric difference with the target has mass `epsilon`.
///
/// Each example lands in the symmetric difference with probability ε; there a
/// correct label counts against `h` and a flipped label against the target.
/// Ties count as the event. Trial `t` uses stream `(seed, t)`.
pub fn mc_e1_probability(
    plan: &AnnotationPlan,
    etas: &[NoiseRate<f64>],
    epsilon: f64,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    Error::check_len("plan", etas.len(), plan.len())?;
    check_trials(trials)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::domain("epsilon", epsilon, "[0, 1]"));
    }
    let counts = plan.counts();
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = rng::stream(seed, t);
            let (mut against_h, mut against_target) = (0u64, 0u64);
            for (&m, eta) in counts.iter().zip(etas) {
                for _ in 0..m {
                    if rng.gen_bool(epsilon) {
                        if rng.gen_bool(eta.value()) {
                            against_target += 1;
                        } else {
                            against_h += 1;
                        }
                    }
                }
            }
            against_h <= against_target
        })
        .count() as u64;
    Ok(Estimate::binomial(hits, trials))
}

/// Monte Carlo estimate of `P(Z ≤ Σkᵢ/2)` where `Z` sums `kᵢ` Bernoulli
/// draws with success probability `1 − ηᵢ`.
pub fn mc_disagreement_probability(
    ks: &[u64],
    etas: &[NoiseRate<f64>],
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    Error::check_len("etas", ks.len(), etas.len())?;
    check_trials(trials)?;
    let total: u64 = ks.iter().sum();
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = rng::stream(seed, t);
            let mut z = 0u64;
            for (&k, eta) in ks.iter().zip(etas) {
                for _ in 0..k {
                    if !rng.gen_bool(eta.value()) {
                        z += 1;
                    }
                }
            }
            2 * z <= total
        })
        .count() as u64;
    Ok(Estimate::binomial(hits, trials))
}
