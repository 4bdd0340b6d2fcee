//! Seeded property suites behind the `verify` command.

use pacmech::harness::{audit_outcome, dsic_sweep, elicitation_premium, Audit, IncentiveReport};
use pacmech::mechanism::{BidInterval, Mechanism, PaymentVariant};
use pacmech::pac::{psi, LogBudget, NoiseRate};
use pacmech::plan::{verify_rounding_bounds, PlanProblem, RoundingBoundReport};
use pacmech::rng::stream;
use pacmech::Result;
use rand::Rng;
use rayon::prelude::*;

/// `profiles` bid vectors `[truth, opponent₁, …]`, uniform on the interval.
/// Profile `p` is drawn from stream `p` of `seed`.
pub fn random_profiles(interval: &BidInterval<f64>, profiles: usize, opponents: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..profiles)
        .map(|p| {
            let mut rng = stream(seed, p as u64);
            (0..=opponents)
                .map(|_| rng.gen_range(interval.lo()..=interval.hi()))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCheck {
    pub bids: Vec<f64>,
    pub integral: IncentiveReport<f64>,
    pub critical_price: IncentiveReport<f64>,
    pub audit: Audit,
    /// `c(q) − c(η̂)` for the truthful winner.
    pub premium: f64,
}

/// Best-response sweeps for agent 0 under both payment rules, plus ex-post
/// audits of the truthful outcome, on every profile.
pub fn dsic_matrix(mech: &Mechanism<f64>, profiles: &[Vec<f64>], grid_points: usize) -> Result<Vec<ProfileCheck>> {
    let grid = mech.interval().grid(grid_points);
    profiles
        .par_iter()
        .map(|bids| {
            let truth = bids[0];
            let integral = dsic_sweep(mech, 0, truth, bids, &grid, PaymentVariant::Integral)?;
            let critical_price = dsic_sweep(mech, 0, truth, bids, &grid, PaymentVariant::CriticalPrice)?;
            let profile = mech.profile(bids.clone())?;
            let outcome = mech.run_auction(&profile, PaymentVariant::Integral)?;
            Ok(ProfileCheck {
                bids: bids.clone(),
                integral,
                critical_price,
                audit: audit_outcome(mech, &outcome, &profile)?,
                premium: elicitation_premium(mech, &outcome, &profile)?,
            })
        })
        .collect()
}

/// A random plan instance whose default caps `⌈L/ψᵢ⌉` are at most
/// `max_cap`, and a noiseless sample size `m₀ ∈ 1..=20`.
pub fn random_plan_instance(rng: &mut impl Rng, max_annotators: usize, max_cap: u64) -> (PlanProblem<f64>, u64) {
    let n = rng.gen_range(1..=max_annotators);
    let epsilon = rng.gen_range(0.05..0.95);
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
    let rates: Vec<f64> = (0..n)
        .map(|_| {
            let eta = NoiseRate::new(rng.gen_range(0.0..=1.0 / 3.0)).expect("sampled rate is valid");
            psi(eta, epsilon).expect("sampled rate is in range")
        })
        .collect();
    let min_rate = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let budget = rng.gen_range(0.01..0.999) * max_cap as f64 * min_rate;
    let problem = PlanProblem::new(weights, rates, LogBudget::new(budget).expect("positive budget"))
        .expect("sampled problem is valid");
    (problem, rng.gen_range(1..=20))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingBoundSummary {
    pub instances: usize,
    pub additive_failures: usize,
    pub premise_instances: usize,
    pub multiplicative_failures: usize,
    /// Largest `alg − opt − w_{i*}` (non-positive when the additive bound holds).
    pub max_additive_excess: f64,
    pub reports: Vec<RoundingBoundReport<f64>>,
}

/// Runs [`verify_rounding_bounds`] on `instances` random problems; instance `k` uses
/// stream `k` of `seed`.
pub fn rounding_bound_suite(instances: usize, max_annotators: usize, max_cap: u64, seed: u64) -> Result<RoundingBoundSummary> {
    let reports = (0..instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k as u64);
            let (problem, m0) = random_plan_instance(&mut rng, max_annotators, max_cap);
            verify_rounding_bounds(&problem, m0, None)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RoundingBoundSummary {
        instances,
        additive_failures: reports.iter().filter(|r| !r.additive_ok).count(),
        premise_instances: reports.iter().filter(|r| r.premise_holds).count(),
        multiplicative_failures: reports.iter().filter(|r| !r.multiplicative_ok).count(),
        max_additive_excess: reports
            .iter()
            .map(|r| r.alg - r.opt - r.winner_weight)
            .fold(f64::NEG_INFINITY, f64::max),
        reports,
    })
}
