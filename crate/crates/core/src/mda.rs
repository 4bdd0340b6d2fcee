//! Desk-scale PAC experiments on a threshold concept class.
//!
//! Instances are `0..K`; concept `t ∈ 0..=K` labels `x` positive iff `x < t`,
//! so the class has exactly `K + 1` distinct members.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pac::{AnnotationPlan, NoiseRate, PacParams};
use crate::rng::{self, StreamRng};
use crate::stats::{clopper_pearson_upper, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdConceptClass {
    domain_size: usize,
}

impl ThresholdConceptClass {
    pub fn new(domain_size: usize) -> Result<Self> {
        if domain_size == 0 {
            return Err(Error::invalid("domain size", "must be positive"));
        }
        Ok(ThresholdConceptClass { domain_size })
    }

    /// The class whose size matches `params.concept_count()`.
    pub fn for_params<T: crate::Scalar>(params: &PacParams<T>) -> Result<Self> {
        Self::new(params.concept_count() as usize - 1)
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    /// `K + 1`.
    pub fn concept_count(&self) -> usize {
        self.domain_size + 1
    }

    #[inline]
    pub fn label(&self, concept: usize, x: usize) -> bool {
        x < concept
    }
}

/// Distribution `D` over the instance space.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplingDistribution {
    Uniform { domain_size: usize },
    Weighted { weights: Vec<f64> },
}

impl SamplingDistribution {
    pub fn uniform(domain_size: usize) -> Result<Self> {
        if domain_size == 0 {
            return Err(Error::invalid("distribution", "empty domain"));
        }
        Ok(SamplingDistribution::Uniform { domain_size })
    }

    pub fn weighted(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("distribution", "empty weight vector"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::invalid("distribution", format!("weight {w} is not a probability")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("distribution", format!("weights sum to {total}, not 1")));
        }
        Ok(SamplingDistribution::Weighted { weights })
    }

    /// A point mass at `x`.
    pub fn point(domain_size: usize, x: usize) -> Result<Self> {
        if x >= domain_size {
            return Err(Error::invalid("distribution", format!("point {x} outside domain {domain_size}")));
        }
        let mut weights = vec![0.0; domain_size];
        weights[x] = 1.0;
        Self::weighted(weights)
    }

    pub fn domain_size(&self) -> usize {
        match self {
            SamplingDistribution::Uniform { domain_size } => *domain_size,
            SamplingDistribution::Weighted { weights } => weights.len(),
        }
    }

    /// Probability mass of `{x : lo ≤ x < hi}`.
    pub fn mass(&self, lo: usize, hi: usize) -> f64 {
        match self {
            SamplingDistribution::Uniform { domain_size } => (hi - lo) as f64 / *domain_size as f64,
            SamplingDistribution::Weighted { weights } => weights[lo..hi].iter().sum(),
        }
    }

    fn sampler(&self) -> InstanceSampler {
        match self {
            SamplingDistribution::Uniform { domain_size } => InstanceSampler::Uniform(*domain_size),
            SamplingDistribution::Weighted { weights } => {
                InstanceSampler::Weighted(WeightedIndex::new(weights).expect("validated weights"))
            }
        }
    }
}

enum InstanceSampler {
    Uniform(usize),
    Weighted(WeightedIndex<f64>),
}

impl InstanceSampler {
    fn draw(&self, rng: &mut StreamRng) -> usize {
        match self {
            InstanceSampler::Uniform(k) => rng.gen_range(0..*k),
            InstanceSampler::Weighted(w) => w.sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub x: usize,
    pub y: bool,
    pub annotator: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub chosen_hypothesis: usize,
    pub true_error: f64,
    pub is_eps_bad: bool,
}

fn check_target(target: usize, dist: &SamplingDistribution) -> Result<()> {
    if target > dist.domain_size() {
        return Err(Error::invalid(
            "target",
            format!("concept {target} outside 0..={}", dist.domain_size()),
        ));
    }
    Ok(())
}

fn draw_dataset(
    plan: &AnnotationPlan,
    etas: &[NoiseRate<f64>],
    target: usize,
    sampler: &InstanceSampler,
    rng: &mut StreamRng,
) -> Vec<LabeledExample> {
    let mut data = Vec::with_capacity(plan.total() as usize);
    for (annotator, (&m, eta)) in plan.counts().iter().zip(etas).enumerate() {
        for _ in 0..m {
            let x = sampler.draw(rng);
            let flip = rng.gen_bool(eta.value());
            data.push(LabeledExample {
                x,
                y: (x < target) != flip,
                annotator,
            });
        }
    }
    data
}

/// Draws `plan[i]` examples from annotator `i`, instances i.i.d. from `dist`,
/// each label flipped independently with probability `etas[i]`.
pub fn sample_dataset(
    plan: &AnnotationPlan,
    etas: &[NoiseRate<f64>],
    target: usize,
    dist: &SamplingDistribution,
    seed: u64,
) -> Result<Vec<LabeledExample>> {
    Error::check_len("plan", etas.len(), plan.len())?;
    check_target(target, dist)?;
    let mut rng = rng::stream(seed, 0);
    Ok(draw_dataset(plan, etas, target, &dist.sampler(), &mut rng))
}

/// Number of examples whose label disagrees with concept `h`.
pub fn empirical_loss(dataset: &[LabeledExample], h: usize) -> u64 {
    dataset.iter().filter(|e| (e.x < h) != e.y).count() as u64
}

/// Minimum disagreement learner: the threshold with the smallest empirical
/// loss, ties going to the smallest index. Runs in `O(K + |dataset|)`.
pub fn mda(dataset: &[LabeledExample], class: &ThresholdConceptClass) -> Result<usize> {
    let k = class.domain_size();
    // delta[x] = change in loss when concept x+1 starts labelling x positive
    let mut delta = vec![0i64; k];
    let mut loss: i64 = 0;
    for e in dataset {
        if e.x >= k {
            return Err(Error::invalid("dataset", format!("instance {} outside 0..{k}", e.x)));
        }
        if e.y {
            loss += 1;
            delta[e.x] -= 1;
        } else {
            delta[e.x] += 1;
        }
    }
    let (mut best, mut best_loss) = (0, loss);
    for (x, d) in delta.iter().enumerate() {
        loss += d;
        if loss < best_loss {
            best = x + 1;
            best_loss = loss;
        }
    }
    Ok(best)
}

/// `P^D(c_t Δ h)`, exact for the uniform distribution.
pub fn true_error(h: usize, target: usize, dist: &SamplingDistribution) -> f64 {
    let (lo, hi) = if h <= target { (h, target) } else { (target, h) };
    dist.mass(lo, hi)
}

/// Outcome of a failure-rate experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureRate {
    pub estimate: Estimate,
    pub failures: u64,
    pub trials: u64,
}

impl FailureRate {
    /// One-sided Clopper–Pearson upper bound on the true failure probability.
    pub fn upper_bound(&self, confidence: f64) -> f64 {
        clopper_pearson_upper(self.failures, self.trials, confidence)
    }
}

/// Runs a single sample → learn → evaluate pipeline on stream `(seed, trial)`.
pub fn run_trial(
    plan: &AnnotationPlan,
    etas: &[NoiseRate<f64>],
    params: &PacParams<f64>,
    target: usize,
    dist: &SamplingDistribution,
    seed: u64,
    trial: u64,
) -> Result<TrialReport> {
    let class = checked_class(plan, etas, params, target, dist)?;
    Ok(trial_with(plan, etas, params.epsilon(), target, dist, &dist.sampler(), &class, seed, trial))
}

fn checked_class(
    plan: &AnnotationPlan,
    etas: &[NoiseRate<f64>],
    params: &PacParams<f64>,
    target: usize,
    dist: &SamplingDistribution,
) -> Result<ThresholdConceptClass> {
    Error::check_len("plan", etas.len(), plan.len())?;
    let class = ThresholdConceptClass::new(dist.domain_size())?;
    if class.concept_count() as u64 != params.concept_count() {
        return Err(Error::invalid(
            "concept count",
            format!(
                "threshold class over {} points has {} concepts, params say {}",
                class.domain_size(),
                class.concept_count(),
                params.concept_count()
            ),
        ));
    }
    check_target(target, dist)?;
    Ok(class)
}

#[allow(clippy::too_many_arguments)]
fn trial_with(
    plan: &AnnotationPlan,
    etas: &[NoiseRate<f64>],
    epsilon: f64,
    target: usize,
    dist: &SamplingDistribution,
    sampler: &InstanceSampler,
    class: &ThresholdConceptClass,
    seed: u64,
    trial: u64,
) -> TrialReport {
    let mut rng = rng::stream(seed, trial);
    let data = draw_dataset(plan, etas, target, sampler, &mut rng);
    let chosen = mda(&data, class).expect("sampled instances lie in the domain");
    let err = true_error(chosen, target, dist);
    TrialReport {
        chosen_hypothesis: chosen,
        true_error: err,
        is_eps_bad: err > epsilon,
    }
}

/// Fraction of `trials` independent runs in which the learner returns an
/// ε-bad hypothesis.
pub fn estimate_failure_rate(
    plan: &AnnotationPlan,
    etas: &[NoiseRate<f64>],
    params: &PacParams<f64>,
    target: usize,
    dist: &SamplingDistribution,
    trials: u64,
    seed: u64,
) -> Result<FailureRate> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let class = checked_class(plan, etas, params, target, dist)?;
    let sampler = dist.sampler();
    let failures = (0..trials)
        .into_par_iter()
        .filter(|&t| trial_with(plan, etas, params.epsilon(), target, dist, &sampler, &class, seed, t).is_eps_bad)
        .count() as u64;
    Ok(FailureRate {
        estimate: Estimate::binomial(failures, trials),
        failures,
        trials,
    })
}
