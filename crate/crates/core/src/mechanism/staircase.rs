//! The winner's allocation `a(t) = ⌈L/ψ(t)⌉` as a function of its bid, and
//! the payments built on it.
//!
//! `L/ψ(t)` is continuous and increasing, so `a` steps up by exactly one at
//! each breakpoint `t_k = ψ⁻¹(L/k)`: `a(t) = k` on `(t_{k−1}, t_k]`.

use crate::error::{Error, Result};
use crate::pac::{covering_count, psi_interior};
use crate::scalar::Scalar;

use super::{BidInterval, CostModel};

/// Inverse of the interior ψ: `η = (1 + 8·ln(1 − (1 − e^{−s})/ε)) / 3`.
pub fn psi_inverse<T: Scalar>(s: T, epsilon: T) -> Result<T> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(Error::domain("epsilon", epsilon.as_f64(), "(0, 1)"));
    }
    let top = psi_interior(T::zero(), epsilon)?;
    if !(s > T::zero() && s <= top) {
        return Err(Error::domain("information rate", s.as_f64(), format!("(0, {}]", top)));
    }
    let inner = (-s).exp_m1() / epsilon;
    Ok((T::one() + T::lit(8.0) * inner.ln_1p()) / T::lit(3.0))
}

/// Precomputed breakpoints of the allocation staircase over a bid interval,
/// with running sums of `c(t_k)` so that payments cost O(1).
#[derive(Debug, Clone)]
pub struct Staircase<T> {
    budget: T,
    epsilon: T,
    // allocation at the bottom of the interval
    base: u64,
    // breakpoints[j] = t_{base + j}
    breakpoints: Vec<T>,
    // prefix[j] = Σ_{i < j} c(breakpoints[i])
    prefix: Vec<T>,
}

impl<T: Scalar> Staircase<T> {
    pub fn new(budget: T, epsilon: T, cost: &CostModel<T>, interval: &BidInterval<T>) -> Result<Self> {
        let base = covering_count(budget, psi_interior(interval.lo(), epsilon)?);
        let top = covering_count(budget, psi_interior(interval.hi(), epsilon)?);
        let mut breakpoints = Vec::with_capacity((top - base) as usize);
        let mut prefix = Vec::with_capacity((top - base) as usize + 1);
        prefix.push(T::zero());
        for k in base..top {
            let t = psi_inverse(budget / T::from_u64(k).unwrap(), epsilon)?;
            prefix.push(*prefix.last().unwrap() + cost.value(t));
            breakpoints.push(t);
        }
        Ok(Staircase {
            budget,
            epsilon,
            base,
            breakpoints,
            prefix,
        })
    }

    /// `⌈L/ψ(t)⌉`.
    pub fn allocation(&self, t: T) -> u64 {
        covering_count(self.budget, psi_interior(t, self.epsilon).expect("bid inside [0, 1/3]"))
    }

    /// Jump locations `t_k` for `k` in `[from, to)`.
    pub fn breakpoints(&self, from: u64, to: u64) -> &[T] {
        let lo = (from.max(self.base) - self.base) as usize;
        let hi = (to.max(self.base) - self.base) as usize;
        &self.breakpoints[lo.min(self.breakpoints.len())..hi.min(self.breakpoints.len())]
    }

    fn prefix(&self, k: u64) -> T {
        let j = (k.max(self.base) - self.base) as usize;
        self.prefix[j.min(self.prefix.len() - 1)]
    }

    /// `a(bid)·c(bid) − ∫_q^{bid} a(t)c'(t) dt` for a winner with critical bid
    /// `q ≤ bid` (the allocation is zero below `q`).
    ///
    /// Integrating by parts over the staircase turns the integral into
    /// `a(q)·c(q) + Σ_{a(q) ≤ k < a(bid)} c(t_k)`.
    pub fn integral_payment(&self, cost: &CostModel<T>, critical: T, bid: T) -> T {
        let aq = self.allocation(critical);
        let ab = self.allocation(bid);
        T::from_u64(aq).unwrap() * cost.value(critical) + (self.prefix(ab) - self.prefix(aq))
    }

    /// `a(bid)·c(q)`: the per-example critical price for every unit.
    pub fn critical_price_payment(&self, cost: &CostModel<T>, critical: T, bid: T) -> T {
        T::from_u64(self.allocation(bid)).unwrap() * cost.value(critical)
    }
}
