//! Single-winner procurement auction for labelled examples.
//!
//! Annotators bid noise rates. The learner ranks them by the score
//! `v(η)/ψ(η)`, where `v(η) = c(η) − (1 − Φ(η))/φ(η) · c'(η)` is the virtual
//! cost, and buys `⌈ln(N/δ)/ψ(η̂)⌉` examples from the lowest score. When the
//! score is non-increasing on the bid interval (regularity) the allocation is
//! monotone in the bid, which makes truthful bidding a dominant strategy
//! under the integral payment rule.

mod cost;
mod prior;
mod staircase;

pub use cost::{CostModel, CostTable};
pub use prior::{PriorModel, PriorTable};
pub use staircase::{psi_inverse, Staircase};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pac::{coverage, log_budget, psi_interior, third, AnnotationPlan, PacParams};
use crate::scalar::Scalar;

/// Grid size used when a [`Mechanism`] checks regularity on construction.
pub const REGULARITY_GRID: usize = 1000;
/// Absolute slack allowed between consecutive scores on the regularity grid.
pub const REGULARITY_TOLERANCE: f64 = 1e-9;

/// The closed range `[lo, hi] ⊂ (0, 1/3)` of admissible bids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidInterval<T> {
    lo: T,
    hi: T,
}

impl<T: Scalar> BidInterval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo > T::zero() && lo <= hi && hi < third::<T>()) {
            return Err(Error::invalid(
                "bid interval",
                format!("need 0 < lo ≤ hi < 1/3, got [{lo}, {hi}]"),
            ));
        }
        Ok(BidInterval { lo, hi })
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn contains(&self, eta: T) -> bool {
        eta >= self.lo && eta <= self.hi
    }

    /// `points` equally spaced values from `lo` to `hi` inclusive.
    pub fn grid(&self, points: usize) -> Vec<T> {
        match points {
            0 => vec![],
            1 => vec![self.lo],
            _ => {
                let step = (self.hi - self.lo) / T::from_usize_lossy(points - 1);
                (0..points)
                    .map(|j| if j + 1 == points { self.hi } else { self.lo + step * T::from_usize_lossy(j) })
                    .collect()
            }
        }
    }
}

impl Default for BidInterval<f64> {
    fn default() -> Self {
        BidInterval { lo: 0.05, hi: 0.30 }
    }
}

/// Reported noise rates, one per annotator, all inside the bid interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BidProfile<T> {
    bids: Vec<T>,
}

impl<T: Scalar> BidProfile<T> {
    pub fn new(bids: Vec<T>, interval: &BidInterval<T>) -> Result<Self> {
        if bids.is_empty() {
            return Err(Error::invalid("bid profile", "no bids"));
        }
        if let Some(b) = bids.iter().find(|b| !interval.contains(**b)) {
            return Err(Error::domain(
                "bid",
                b.as_f64(),
                format!("[{}, {}]", interval.lo(), interval.hi()),
            ));
        }
        Ok(BidProfile { bids })
    }

    pub fn bids(&self) -> &[T] {
        &self.bids
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }

    /// The same profile with annotator `i` bidding `bid` instead.
    pub fn with_bid(&self, i: usize, bid: T, interval: &BidInterval<T>) -> Result<Self> {
        let mut bids = self.bids.clone();
        bids[i] = bid;
        BidProfile::new(bids, interval)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaymentVariant {
    /// `a·c(η̂) − ∫ a(t)c'(t) dt`.
    Integral,
    /// `a·c(q)`, the per-example critical price.
    CriticalPrice,
}

impl PaymentVariant {
    pub fn name(self) -> &'static str {
        match self {
            PaymentVariant::Integral => "integral",
            PaymentVariant::CriticalPrice => "critical-price",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome<T> {
    pub winner: Option<usize>,
    pub allocation: AnnotationPlan,
    pub payments: Vec<T>,
    pub critical_bid: Option<T>,
    pub payment_variant: PaymentVariant,
    pub scores: Vec<T>,
}

/// Virtual cost `v(η) = c(η) − (1 − Φ(η))/φ(η) · c'(η)`. Never below `c(η)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct VirtualCost<T>(T);

impl<T: Scalar> VirtualCost<T> {
    pub fn value(self) -> T {
        self.0
    }
}

pub fn virtual_cost<T: Scalar>(eta: T, cost: &CostModel<T>, prior: &PriorModel<T>) -> Result<VirtualCost<T>> {
    let density = prior.density(eta);
    if !(density > T::zero()) {
        return Err(Error::invalid("prior", format!("density vanishes at {eta}")));
    }
    let hazard = (T::one() - prior.cdf(eta)) / density;
    Ok(VirtualCost(cost.value(eta) - hazard * cost.derivative(eta)))
}

/// `v(η)/ψ(η)` with the interior ψ.
pub fn score<T: Scalar>(eta: T, cost: &CostModel<T>, prior: &PriorModel<T>, epsilon: T) -> Result<T> {
    Ok(virtual_cost(eta, cost, prior)?.value() / psi_interior(eta, epsilon)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport<T> {
    pub is_regular: bool,
    /// Largest `score(η_{j+1}) − score(η_j)` over the grid (≤ 0 when the
    /// score decreases everywhere).
    pub max_violation: T,
    pub violating_eta: Option<T>,
    pub grid_points: usize,
}

/// Checks that the score is non-increasing on a uniform grid over the
/// interval, allowing [`REGULARITY_TOLERANCE`] between neighbours.
pub fn check_regularity<T: Scalar>(
    cost: &CostModel<T>,
    prior: &PriorModel<T>,
    epsilon: T,
    interval: &BidInterval<T>,
    grid_points: usize,
) -> Result<RegularityReport<T>> {
    let grid = interval.grid(grid_points.max(1));
    let scores = grid
        .iter()
        .map(|&e| score(e, cost, prior, epsilon))
        .collect::<Result<Vec<T>>>()?;
    let mut max_violation = T::neg_infinity();
    let mut violating_eta = None;
    let mut is_regular = true;
    for (j, w) in scores.windows(2).enumerate() {
        let step = w[1] - w[0];
        let slack = T::lit(REGULARITY_TOLERANCE) + T::epsilon() * T::lit(4.0) * w[0].abs().max(w[1].abs());
        if step > slack {
            is_regular = false;
            if step > max_violation {
                violating_eta = Some(grid[j + 1]);
            }
        }
        max_violation = max_violation.max(step);
    }
    if scores.len() < 2 {
        max_violation = T::zero();
    }
    Ok(RegularityReport {
        is_regular,
        max_violation,
        violating_eta,
        grid_points: grid.len(),
    })
}

/// Prior assignment: one prior shared by everyone or one per annotator.
#[derive(Debug, Clone, PartialEq)]
pub enum Priors<T> {
    Shared(PriorModel<T>),
    PerAnnotator(Vec<PriorModel<T>>),
}

impl<T: Scalar> Priors<T> {
    pub fn get(&self, i: usize) -> &PriorModel<T> {
        match self {
            Priors::Shared(p) => p,
            Priors::PerAnnotator(ps) => &ps[i],
        }
    }

    fn distinct(&self) -> Vec<&PriorModel<T>> {
        match self {
            Priors::Shared(p) => vec![p],
            Priors::PerAnnotator(ps) => {
                let mut out: Vec<&PriorModel<T>> = Vec::new();
                for p in ps {
                    if !out.contains(&p) {
                        out.push(p);
                    }
                }
                out
            }
        }
    }

    fn check_profile(&self, n: usize) -> Result<()> {
        match self {
            Priors::Shared(_) => Ok(()),
            Priors::PerAnnotator(ps) => Error::check_len("priors", ps.len(), n),
        }
    }
}

/// An auction configuration whose regularity has been established.
#[derive(Debug, Clone)]
pub struct Mechanism<T: Scalar> {
    params: PacParams<T>,
    cost: CostModel<T>,
    priors: Priors<T>,
    interval: BidInterval<T>,
    regularity: RegularityReport<T>,
    staircase: Staircase<T>,
}

impl<T: Scalar> Mechanism<T> {
    /// Builds the mechanism, refusing configurations whose score increases
    /// somewhere on a [`REGULARITY_GRID`]-point grid.
    pub fn new(params: PacParams<T>, cost: CostModel<T>, priors: Priors<T>, interval: BidInterval<T>) -> Result<Self> {
        let m = Self::new_unchecked(params, cost, priors, interval)?;
        if !m.regularity.is_regular {
            return Err(Error::NotRegular {
                violating_eta: m.regularity.violating_eta.map_or(f64::NAN, |e| e.as_f64()),
                max_violation: m.regularity.max_violation.as_f64(),
            });
        }
        Ok(m)
    }

    /// Builds the mechanism even when regularity fails. Monotonicity, and
    /// with it truthfulness, is then not guaranteed.
    pub fn new_unchecked(
        params: PacParams<T>,
        cost: CostModel<T>,
        priors: Priors<T>,
        interval: BidInterval<T>,
    ) -> Result<Self> {
        let mut worst: Option<RegularityReport<T>> = None;
        for p in priors.distinct() {
            let r = check_regularity(&cost, p, params.epsilon(), &interval, REGULARITY_GRID)?;
            if worst.as_ref().is_none_or(|w| r.max_violation > w.max_violation) {
                worst = Some(RegularityReport {
                    is_regular: r.is_regular && worst.as_ref().is_none_or(|w| w.is_regular),
                    ..r
                });
            } else if let Some(w) = worst.as_mut() {
                w.is_regular &= r.is_regular;
            }
        }
        let regularity = worst.ok_or_else(|| Error::invalid("priors", "no prior given"))?;
        let staircase = Staircase::new(log_budget(&params).value(), params.epsilon(), &cost, &interval)?;
        Ok(Mechanism {
            params,
            cost,
            priors,
            interval,
            regularity,
            staircase,
        })
    }

    pub fn params(&self) -> &PacParams<T> {
        &self.params
    }

    pub fn cost(&self) -> &CostModel<T> {
        &self.cost
    }

    pub fn priors(&self) -> &Priors<T> {
        &self.priors
    }

    pub fn prior(&self, i: usize) -> &PriorModel<T> {
        self.priors.get(i)
    }

    pub fn interval(&self) -> &BidInterval<T> {
        &self.interval
    }

    pub fn regularity(&self) -> &RegularityReport<T> {
        &self.regularity
    }

    pub fn staircase(&self) -> &Staircase<T> {
        &self.staircase
    }

    pub fn budget(&self) -> T {
        log_budget(&self.params).value()
    }

    pub fn profile(&self, bids: Vec<T>) -> Result<BidProfile<T>> {
        BidProfile::new(bids, &self.interval)
    }

    /// Score of annotator `i` bidding `eta`.
    pub fn score(&self, i: usize, eta: T) -> Result<T> {
        score(eta, &self.cost, self.priors.get(i), self.params.epsilon())
    }

    /// `⌈ln(N/δ)/ψ(eta)⌉`.
    pub fn allocation(&self, eta: T) -> u64 {
        self.staircase.allocation(eta)
    }

    fn scores(&self, bids: &[T]) -> Result<Vec<T>> {
        bids.iter().enumerate().map(|(i, &b)| self.score(i, b)).collect()
    }

    fn best_rival(scores: &[T], i: usize) -> Option<T> {
        scores
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, &s)| s)
            .fold(None, |acc: Option<T>, s| Some(acc.map_or(s, |a| a.min(s))))
    }

    /// Smallest bid in the interval with which annotator `i` still attains the
    /// lowest score against the others' bids (`bids[i]` is ignored).
    ///
    /// Returns `lo` when `i` wins everywhere and `None` when it cannot win
    /// even at `hi`.
    pub fn critical_bid(&self, i: usize, bids: &[T]) -> Result<Option<T>> {
        let scores = bids
            .iter()
            .enumerate()
            .map(|(j, &b)| if j == i { Ok(T::zero()) } else { self.score(j, b) })
            .collect::<Result<Vec<T>>>()?;
        let target = match Self::best_rival(&scores, i) {
            None => return Ok(Some(self.interval.lo)),
            Some(t) => t,
        };
        self.critical_bid_against(i, target)
    }

    fn critical_bid_against(&self, i: usize, target: T) -> Result<Option<T>> {
        let (mut lo, mut hi) = (self.interval.lo, self.interval.hi);
        if self.score(i, lo)? <= target {
            return Ok(Some(lo));
        }
        if self.score(i, hi)? > target {
            return Ok(None);
        }
        // score(lo) > target ≥ score(hi); bisect until lo and hi are adjacent
        loop {
            let mid = lo + (hi - lo) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.score(i, mid)? <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(hi))
    }

    /// Runs the auction: lowest score wins (smallest index on ties), gets
    /// `⌈L/ψ(bid)⌉` examples and is paid under `variant`; everyone else gets
    /// nothing.
    pub fn run_auction(&self, bids: &BidProfile<T>, variant: PaymentVariant) -> Result<AuctionOutcome<T>> {
        self.priors.check_profile(bids.len())?;
        let b = bids.bids();
        let scores = self.scores(b)?;
        let mut winner = 0;
        for (j, &s) in scores.iter().enumerate() {
            if s < scores[winner] {
                winner = j;
            }
        }
        let critical = match Self::best_rival(&scores, winner) {
            None => Some(self.interval.lo),
            Some(target) => self.critical_bid_against(winner, target)?,
        }
        .ok_or(Error::MissingCriticalBid { winner })?
        .min(b[winner]);
        let count = self.allocation(b[winner]);
        let pay = match variant {
            PaymentVariant::Integral => self.staircase.integral_payment(&self.cost, critical, b[winner]),
            PaymentVariant::CriticalPrice => self.staircase.critical_price_payment(&self.cost, critical, b[winner]),
        };
        let mut payments = vec![T::zero(); b.len()];
        payments[winner] = pay;
        Ok(AuctionOutcome {
            winner: Some(winner),
            allocation: AnnotationPlan::single(b.len(), winner, count),
            payments,
            critical_bid: Some(critical),
            payment_variant: variant,
            scores,
        })
    }

    /// Winner payment of annotator `i` under the integral rule; 0 for losers.
    pub fn integral_payment(&self, i: usize, bids: &BidProfile<T>) -> Result<T> {
        Ok(self.run_auction(bids, PaymentVariant::Integral)?.payments[i])
    }

    /// Winner payment of annotator `i` under the critical-price rule.
    pub fn critical_price_payment(&self, i: usize, bids: &BidProfile<T>) -> Result<T> {
        Ok(self.run_auction(bids, PaymentVariant::CriticalPrice)?.payments[i])
    }

    /// Whether the allocation satisfies `ln(N/δ) ≤ Σ aᵢ ψ(η̂ᵢ)`.
    pub fn is_pac_compatible(&self, outcome: &AuctionOutcome<T>, bids: &BidProfile<T>) -> Result<bool> {
        Error::check_len("allocation", bids.len(), outcome.allocation.len())?;
        let rates = bids
            .bids()
            .iter()
            .map(|&b| psi_interior(b, self.params.epsilon()))
            .collect::<Result<Vec<T>>>()?;
        Ok(self.budget() <= coverage(outcome.allocation.counts(), &rates))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> PacParams<f64> {
        PacParams::new(0.1, 0.05, 100).unwrap()
    }

    fn exp_cost() -> CostModel<f64> {
        CostModel::exponential(1.0, 30.0).unwrap()
    }

    fn regular() -> Mechanism<f64> {
        Mechanism::new(params(), exp_cost(), Priors::Shared(PriorModel::Uniform), BidInterval::default()).unwrap()
    }

    #[test]
    fn virtual_cost_examples() {
        let lin = CostModel::linear(1.0f64, 1.0).unwrap();
        let u = PriorModel::Uniform;
        for &eta in &[0.0, 0.05, 0.2, 0.3] {
            let v = virtual_cost(eta, &lin, &u).unwrap().value();
            assert!((v - (4.0 / 3.0 - 2.0 * eta)).abs() < 1e-15);
        }
        assert_eq!(virtual_cost(1.0 / 3.0, &lin, &u).unwrap().value(), lin.value(1.0 / 3.0));
        let v = virtual_cost(0.2, &exp_cost(), &u).unwrap().value();
        assert!((v - 5.0 * (-6.0f64).exp()).abs() < 1e-16);
        assert!((v - 0.012394).abs() < 1e-6);
    }

    #[test]
    fn score_examples() {
        let u = PriorModel::Uniform;
        let c = exp_cost();
        assert!((score(0.1, &c, &u, 0.1).unwrap() - 47.34069932519886).abs() < 1e-9);
        assert!((score(0.2, &c, &u, 0.1).unwrap() - 2.535035436417572).abs() < 1e-10);
        let scaled = c.scaled(3.0).unwrap();
        for &e in &[0.07, 0.15, 0.28] {
            let a = score(e, &c, &u, 0.1).unwrap();
            let b = score(e, &scaled, &u, 0.1).unwrap();
            assert!((b - 3.0 * a).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn regularity_examples() {
        let iv = BidInterval::default();
        let lin = CostModel::linear(1.0, 1.0).unwrap();
        let r = check_regularity(&lin, &PriorModel::Uniform, 0.1, &iv, 1000).unwrap();
        assert!(!r.is_regular);
        assert!(r.max_violation > 0.0);
        assert!(r.violating_eta.is_some());
        let s05 = score(0.05, &lin, &PriorModel::Uniform, 0.1).unwrap();
        let s25 = score(0.25, &lin, &PriorModel::Uniform, 0.1).unwrap();
        assert!((s05 - 121.7365709637).abs() < 1e-8 && (s25 - 270.4381537149).abs() < 1e-8);

        let r = check_regularity(&exp_cost(), &PriorModel::Uniform, 0.1, &iv, 1000).unwrap();
        assert!(r.is_regular, "{r:?}");
        assert!(r.max_violation < 0.0);

        let r = check_regularity(&lin, &PriorModel::Uniform, 0.1, &iv, 1).unwrap();
        assert!(r.is_regular);
    }

    #[test]
    fn irregular_mechanism_is_refused() {
        let lin = CostModel::linear(1.0, 1.0).unwrap();
        let e = Mechanism::new(params(), lin.clone(), Priors::Shared(PriorModel::Uniform), BidInterval::default());
        assert!(matches!(e, Err(Error::NotRegular { .. })));
        let m = Mechanism::new_unchecked(params(), lin, Priors::Shared(PriorModel::Uniform), BidInterval::default())
            .unwrap();
        assert!(!m.regularity().is_regular);
    }

    #[test]
    fn bid_profile_validation() {
        let m = regular();
        assert!(m.profile(vec![]).is_err());
        assert!(m.profile(vec![0.1, 0.31]).is_err());
        assert!(BidInterval::new(0.0, 0.2).is_err());
        assert!(BidInterval::new(0.2, 0.1).is_err());
        assert!(BidInterval::new(0.1, 1.0 / 3.0).is_err());
    }

    #[test]
    fn single_bidder_is_uncontested() {
        let m = regular();
        let bids = m.profile(vec![0.17]).unwrap();
        let o = m.run_auction(&bids, PaymentVariant::CriticalPrice).unwrap();
        assert_eq!(o.winner, Some(0));
        assert_eq!(o.critical_bid, Some(0.05));
        let a = m.allocation(0.17);
        assert_eq!(o.allocation.counts(), &[a]);
        assert_eq!(o.payments[0], a as f64 * m.cost().value(0.05));
        assert_eq!(m.critical_bid(0, &[0.17]).unwrap(), Some(0.05));
    }

    #[test]
    fn two_bidder_example() {
        let m = regular();
        let bids = m.profile(vec![0.1, 0.2]).unwrap();
        let o = m.run_auction(&bids, PaymentVariant::CriticalPrice).unwrap();
        assert_eq!(o.winner, Some(1));
        assert_eq!(o.allocation.counts(), &[0, 1555]);
        assert_eq!(o.payments[0], 0.0);
        let q = o.critical_bid.unwrap();
        // same cost and prior, so the threshold is the rival's bid
        assert!((q - 0.1).abs() < 1e-12);
        assert!((m.score(1, q).unwrap() - m.score(0, 0.1).unwrap()).abs() < 1e-8);
        assert!((o.payments[1] - 1555.0 * m.cost().value(q)).abs() < 1e-12);
        assert!(m.is_pac_compatible(&o, &bids).unwrap());
    }

    #[test]
    fn critical_bid_cases() {
        let m = regular();
        // competitor at the top of the interval has the lowest possible score
        assert_eq!(m.critical_bid(0, &[0.0, 0.3]).unwrap(), Some(0.3));
        assert_eq!(m.critical_bid(0, &[0.0, 0.05]).unwrap(), Some(0.05));
        // identical competitor ties at its own bid
        let q = m.critical_bid(0, &[0.0, 0.1]).unwrap().unwrap();
        assert!((q - 0.1).abs() < 1e-9);
        // interval whose top score cannot beat the rival
        let narrow = Mechanism::new(
            params(),
            exp_cost(),
            Priors::Shared(PriorModel::Uniform),
            BidInterval::new(0.05, 0.15).unwrap(),
        )
        .unwrap();
        let low = narrow.score(1, 0.15).unwrap() * 0.5;
        assert_eq!(narrow.critical_bid_against(0, low).unwrap(), None);
    }

    #[test]
    fn critical_bid_separates_win_and_loss() {
        let m = regular();
        let others = [0.0, 0.12, 0.18];
        let q = m.critical_bid(0, &others).unwrap().unwrap();
        for (bid, wins) in [(q - 1e-6, false), (q + 1e-6, true)] {
            let bids = m.profile(vec![bid, 0.12, 0.18]).unwrap();
            let o = m.run_auction(&bids, PaymentVariant::Integral).unwrap();
            assert_eq!(o.winner == Some(0), wins, "bid {bid}");
        }
    }

    #[test]
    fn integral_payment_covers_cost_and_losers_get_nothing() {
        let m = regular();
        let bids = m.profile(vec![0.1, 0.2, 0.15]).unwrap();
        let o = m.run_auction(&bids, PaymentVariant::Integral).unwrap();
        let w = o.winner.unwrap();
        assert!(o.payments[w] >= o.allocation.counts()[w] as f64 * m.cost().value(0.2));
        assert_eq!(m.integral_payment(0, &bids).unwrap(), 0.0);
        assert_eq!(m.integral_payment(w, &bids).unwrap(), o.payments[w]);
        let cp = m.critical_price_payment(w, &bids).unwrap();
        assert!(cp > 0.0);
    }

    #[test]
    fn per_annotator_priors_are_used() {
        let priors = Priors::PerAnnotator(vec![PriorModel::Uniform, PriorModel::truncated_beta(1.0, 2.0).unwrap()]);
        let m = Mechanism::new(params(), exp_cost(), priors, BidInterval::default()).unwrap();
        assert_ne!(m.score(0, 0.2).unwrap(), m.score(1, 0.2).unwrap());
        let bids = m.profile(vec![0.1, 0.2, 0.3]).unwrap();
        assert!(m.run_auction(&bids, PaymentVariant::Integral).is_err());
    }

    #[test]
    fn works_in_f32() {
        let p = PacParams::new(0.1f32, 0.05, 100).unwrap();
        let m = Mechanism::new(
            p,
            CostModel::exponential(1.0f32, 30.0).unwrap(),
            Priors::Shared(PriorModel::Uniform),
            BidInterval::new(0.05f32, 0.3).unwrap(),
        )
        .unwrap();
        let bids = m.profile(vec![0.1, 0.2]).unwrap();
        let o = m.run_auction(&bids, PaymentVariant::Integral).unwrap();
        assert_eq!(o.winner, Some(1));
        assert!((o.allocation.counts()[1] as i64 - 1555).abs() <= 1);
    }

    proptest! {
        #[test]
        fn virtual_cost_dominates_cost(eta in 0.05f64..0.3, k in 1.0f64..40.0) {
            let c = CostModel::exponential(1.0, k).unwrap();
            for p in [PriorModel::Uniform, PriorModel::truncated_beta(1.0, 4.0).unwrap()] {
                let v = virtual_cost(eta, &c, &p).unwrap().value();
                prop_assert!(v >= c.value(eta) && v > 0.0);
            }
        }

        #[test]
        fn allocation_is_weakly_monotone(others in proptest::collection::vec(0.05f64..0.3, 1..4), a in 0.05f64..0.3, b in 0.05f64..0.3) {
            let m = regular();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let mut bids = vec![lo];
            bids.extend(&others);
            let o_lo = m.run_auction(&m.profile(bids.clone()).unwrap(), PaymentVariant::Integral).unwrap();
            bids[0] = hi;
            let o_hi = m.run_auction(&m.profile(bids).unwrap(), PaymentVariant::Integral).unwrap();
            prop_assert!(o_hi.allocation.counts()[0] >= o_lo.allocation.counts()[0]);
        }

        #[test]
        fn permutation_equivariance(bids in proptest::collection::vec(0.05f64..0.3, 2..5), rot in 0usize..4) {
            let m = regular();
            let n = bids.len();
            let r = rot % n;
            let mut rotated = bids.clone();
            rotated.rotate_left(r);
            let a = m.run_auction(&m.profile(bids).unwrap(), PaymentVariant::Integral).unwrap();
            let b = m.run_auction(&m.profile(rotated).unwrap(), PaymentVariant::Integral).unwrap();
            let wa = a.winner.unwrap();
            let wb = b.winner.unwrap();
            // ties aside, the same annotator wins after relabelling
            prop_assume!(a.scores.iter().filter(|&&s| s == a.scores[wa]).count() == 1);
            prop_assert_eq!((wb + r) % n, wa);
            prop_assert_eq!(a.allocation.counts()[wa], b.allocation.counts()[wb]);
            prop_assert!((a.payments[wa] - b.payments[wb]).abs() <= 1e-12 * a.payments[wa]);
        }

        #[test]
        fn cost_scaling_keeps_winner(bids in proptest::collection::vec(0.05f64..0.3, 1..4), lambda in 0.1f64..10.0) {
            let m = regular();
            let s = Mechanism::new(params(), exp_cost().scaled(lambda).unwrap(), Priors::Shared(PriorModel::Uniform), BidInterval::default()).unwrap();
            let a = m.run_auction(&m.profile(bids.clone()).unwrap(), PaymentVariant::Integral).unwrap();
            let b = s.run_auction(&s.profile(bids).unwrap(), PaymentVariant::Integral).unwrap();
            prop_assert_eq!(a.winner, b.winner);
            prop_assert_eq!(&a.allocation, &b.allocation);
            let w = a.winner.unwrap();
            prop_assert!((b.payments[w] - lambda * a.payments[w]).abs() <= 1e-9 * b.payments[w]);
        }

        #[test]
        fn outcomes_are_pac_compatible(bids in proptest::collection::vec(0.05f64..0.3, 1..5)) {
            let m = regular();
            let p = m.profile(bids).unwrap();
            let o = m.run_auction(&p, PaymentVariant::CriticalPrice).unwrap();
            prop_assert!(m.is_pac_compatible(&o, &p).unwrap());
            prop_assert!(o.payments.iter().all(|&x| x >= 0.0));
        }
    }
}
