//! Cost-optimal annotation plans when noise rates are known.
//!
//! The integer program is `min Σ wᵢ mᵢ` subject to `Σ mᵢ ψᵢ ≥ L`, `mᵢ ∈ ℕ₀`.
//! Its LP relaxation puts all mass on the annotator with the smallest
//! `wᵢ/ψᵢ`; rounding that solution up gives the single-winner plan used by
//! the auction. [`solve_exact`] is a branch-and-bound oracle for small
//! instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pac::{coverage, covering_count, AnnotationPlan, LogBudget};
use crate::scalar::Scalar;

/// Default limit on `Π(capᵢ + 1)` for [`solve_exact`].
pub const ENUMERATION_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanProblem<T> {
    weights: Vec<T>,
    rates: Vec<T>,
    budget: LogBudget<T>,
}

impl<T: Scalar> PlanProblem<T> {
    /// `weights` are per-example costs (`c(ηᵢ)` or virtual costs), `rates`
    /// the corresponding `ψ(ηᵢ)`.
    pub fn new(weights: Vec<T>, rates: Vec<T>, budget: LogBudget<T>) -> Result<Self> {
        Error::check_len("rates", weights.len(), rates.len())?;
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > T::zero())) {
            return Err(Error::domain("weight", w.as_f64(), "(0, ∞)"));
        }
        if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > T::zero())) {
            return Err(Error::domain("rate", r.as_f64(), "(0, ∞)"));
        }
        Ok(PlanProblem {
            weights,
            rates,
            budget,
        })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn rates(&self) -> &[T] {
        &self.rates
    }

    pub fn budget(&self) -> LogBudget<T> {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Σ planᵢ · weightsᵢ` in index order.
    pub fn objective(&self, plan: &AnnotationPlan) -> T {
        coverage(plan.counts(), &self.weights)
    }

    pub fn is_feasible(&self, plan: &AnnotationPlan) -> bool {
        coverage(plan.counts(), &self.rates) >= self.budget.value()
    }

    /// Index of the smallest `wᵢ/ψᵢ`, smallest index on ties.
    pub fn min_ratio_index(&self) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (i, (&w, &r)) in self.weights.iter().zip(&self.rates).enumerate() {
            let ratio = w / r;
            if best.is_none_or(|(_, b)| ratio < b) {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    /// `⌈L/ψᵢ⌉` for every annotator: the count at which one annotator alone
    /// covers the budget.
    pub fn default_caps(&self) -> Vec<u64> {
        self.rates
            .iter()
            .map(|&r| covering_count(self.budget.value(), r))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    LpRound,
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanSolution<T> {
    pub plan: AnnotationPlan,
    pub objective: T,
    pub method: SolveMethod,
}

/// LP relaxation rounded up: buy `⌈L/ψ_{i*}⌉` examples from the min-ratio
/// annotator `i*` and nothing from anyone else.
pub fn solve_lp_round<T: Scalar>(problem: &PlanProblem<T>) -> Result<PlanSolution<T>> {
    let winner = problem
        .min_ratio_index()
        .ok_or_else(|| Error::invalid("plan problem", "no annotators"))?;
    let count = covering_count(problem.budget.value(), problem.rates[winner]);
    let plan = AnnotationPlan::single(problem.len(), winner, count);
    Ok(PlanSolution {
        objective: problem.objective(&plan),
        plan,
        method: SolveMethod::LpRound,
    })
}

struct Search<'a, T> {
    problem: &'a PlanProblem<T>,
    caps: &'a [u64],
    // suffix_reach[i] = Σ_{j ≥ i} caps_j ψ_j
    suffix_reach: Vec<T>,
    current: Vec<u64>,
    best: Option<(Vec<u64>, T)>,
}

impl<T: Scalar> Search<'_, T> {
    fn descend(&mut self, i: usize, cost: T, reach: T) {
        let budget = self.problem.budget.value();
        if let Some((_, best)) = &self.best {
            if cost >= *best {
                return;
            }
        }
        if reach + self.suffix_reach[i] < budget {
            return;
        }
        let (w, r) = (self.problem.weights[i], self.problem.rates[i]);
        let last = i + 1 == self.caps.len();
        if last {
            // only the smallest feasible count can be optimal
            let mut m = 0u64;
            if reach < budget {
                let gap = budget - reach;
                m = (gap / r).floor().to_u64().unwrap_or(u64::MAX).min(self.caps[i]);
                while m <= self.caps[i] && reach + T::from_u64(m).unwrap() * r < budget {
                    m += 1;
                }
                if m > self.caps[i] {
                    return;
                }
                while m > 0 && reach + T::from_u64(m - 1).unwrap() * r >= budget {
                    m -= 1;
                }
            }
            self.current[i] = m;
            let plan_cost = cost + T::from_u64(m).unwrap() * w;
            if self.best.as_ref().is_none_or(|(_, b)| plan_cost < *b) {
                // confirm with the canonical index-order sums
                let plan = AnnotationPlan::new(self.current.clone());
                if self.problem.is_feasible(&plan) {
                    let obj = self.problem.objective(&plan);
                    if self.best.as_ref().is_none_or(|(_, b)| obj < *b) {
                        self.best = Some((self.current.clone(), obj));
                    }
                }
            }
            self.current[i] = 0;
            return;
        }
        for m in 0..=self.caps[i] {
            let mf = T::from_u64(m).unwrap();
            self.current[i] = m;
            self.descend(i + 1, cost + mf * w, reach + mf * r);
        }
        self.current[i] = 0;
    }
}

/// Exact minimum-cost plan with `planᵢ ≤ capsᵢ` by depth-first branch and
/// bound. Among plans of equal objective the lexicographically smallest wins.
///
/// `caps` defaults to [`PlanProblem::default_caps`], which never cuts off an
/// optimum.
pub fn solve_exact<T: Scalar>(problem: &PlanProblem<T>, caps: Option<&[u64]>) -> Result<PlanSolution<T>> {
    solve_exact_with_limit(problem, caps, ENUMERATION_LIMIT)
}

pub fn solve_exact_with_limit<T: Scalar>(
    problem: &PlanProblem<T>,
    caps: Option<&[u64]>,
    limit: f64,
) -> Result<PlanSolution<T>> {
    if problem.is_empty() {
        return Err(Error::invalid("plan problem", "no annotators"));
    }
    let default_caps;
    let caps = match caps {
        Some(c) => {
            Error::check_len("caps", problem.len(), c.len())?;
            c
        }
        None => {
            default_caps = problem.default_caps();
            &default_caps
        }
    };
    let size: f64 = caps.iter().map(|&c| c as f64 + 1.0).product();
    if size > limit {
        return Err(Error::EnumerationBudget { size, limit });
    }
    let n = problem.len();
    let mut suffix_reach = vec![T::zero(); n + 1];
    for i in (0..n).rev() {
        suffix_reach[i] = suffix_reach[i + 1] + T::from_u64(caps[i]).unwrap() * problem.rates[i];
    }
    let mut search = Search {
        problem,
        caps,
        suffix_reach,
        current: vec![0; n],
        best: None,
    };
    search.descend(0, T::zero(), T::zero());
    let (counts, objective) = search.best.ok_or(Error::NoFeasiblePlan)?;
    Ok(PlanSolution {
        plan: AnnotationPlan::new(counts),
        objective,
        method: SolveMethod::Exact,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingBoundReport<T> {
    pub alg: T,
    pub opt: T,
    pub winner: usize,
    pub winner_weight: T,
    pub additive_ok: bool,
    /// `L/ψ_{i*} ≥ m₀ ≥ 1`, under which the multiplicative bound is claimed.
    pub premise_holds: bool,
    /// `alg ≤ opt·(1 + 1/m₀)`; vacuously true when the premise fails.
    pub multiplicative_ok: bool,
}

/// Checks `ALG ≤ OPT + w_{i*} ≤ OPT(1 + 1/m₀)` on one instance.
pub fn verify_rounding_bounds<T: Scalar>(
    problem: &PlanProblem<T>,
    m0: u64,
    caps: Option<&[u64]>,
) -> Result<RoundingBoundReport<T>> {
    let alg = solve_lp_round(problem)?;
    let opt = solve_exact(problem, caps)?;
    let winner = problem.min_ratio_index().expect("non-empty problem");
    let w = problem.weights[winner];
    let additive_ok = alg.objective <= opt.objective + w;
    let m0f = T::from_u64(m0).unwrap();
    let premise_holds = m0 >= 1 && problem.budget.value() / problem.rates[winner] >= m0f;
    let multiplicative_ok = !premise_holds || alg.objective <= opt.objective * (T::one() + T::one() / m0f);
    Ok(RoundingBoundReport {
        alg: alg.objective,
        opt: opt.objective,
        winner,
        winner_weight: w,
        additive_ok,
        premise_holds,
        multiplicative_ok,
    })
}
