//! Strategic verification of the auction.
//!
//! Deterministic tools ([`utility`], [`dsic_sweep`], [`audit_outcome`],
//! [`elicitation_premium`]) work for any [`Scalar`]. The Monte Carlo tools
//! ([`expected_rules`], [`wme_identity_check`], [`bic_sweep`]) draw opponent
//! types from the mechanism's priors truncated to the bid interval and are
//! `f64` only.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanism::{AuctionOutcome, BidProfile, Mechanism, PaymentVariant};
use crate::pac::{coverage, psi_interior};
use crate::rng::{child_seed, stream};
use crate::scalar::Scalar;
use crate::stats::Estimate;

/// Ex-post utility below this counts as a loss in [`audit_outcome`].
pub const IR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UtilityRecord<T> {
    pub reported: T,
    pub truth: T,
    pub utility: T,
    pub allocation: u64,
    pub payment: T,
}

/// Runs the auction on `bids` and returns annotator `i`'s payment minus its
/// true cost `a_i·c(truth)`.
pub fn utility<T: Scalar>(
    mech: &Mechanism<T>,
    bids: &BidProfile<T>,
    i: usize,
    truth: T,
    variant: PaymentVariant,
) -> Result<UtilityRecord<T>> {
    if i >= bids.len() {
        return Err(Error::invalid("agent", format!("index {i} out of {} bidders", bids.len())));
    }
    let outcome = mech.run_auction(bids, variant)?;
    let allocation = outcome.allocation.counts()[i];
    let payment = outcome.payments[i];
    Ok(UtilityRecord {
        reported: bids.bids()[i],
        truth,
        utility: payment - T::from_usize_lossy(allocation as usize) * mech.cost().value(truth),
        allocation,
        payment,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncentiveReport<T> {
    pub agent: usize,
    pub truth: T,
    pub best_report: T,
    /// `max_r u(r) − u(truth)`; never negative because the truth is always
    /// evaluated.
    pub regret: T,
    pub grid_size: usize,
}

/// Best response of agent `i` with type `truth` over `grid`, the others
/// bidding `bids` (entry `i` is replaced by each report in turn).
pub fn dsic_sweep<T: Scalar>(
    mech: &Mechanism<T>,
    i: usize,
    truth: T,
    bids: &[T],
    grid: &[T],
    variant: PaymentVariant,
) -> Result<IncentiveReport<T>> {
    if i >= bids.len() {
        return Err(Error::invalid("agent", format!("index {i} out of {} bidders", bids.len())));
    }
    let eval = |r: T| -> Result<T> {
        let mut b = bids.to_vec();
        b[i] = r;
        Ok(utility(mech, &mech.profile(b)?, i, truth, variant)?.utility)
    };
    let truthful = eval(truth)?;
    let utilities = grid.par_iter().map(|&r| eval(r)).collect::<Result<Vec<T>>>()?;
    let mut best_report = truth;
    let mut best = truthful;
    for (&r, &u) in grid.iter().zip(&utilities) {
        if u > best {
            best = u;
            best_report = r;
        }
    }
    Ok(IncentiveReport {
        agent: i,
        truth,
        best_report,
        regret: best - truthful,
        grid_size: grid.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Audit {
    pub ir_ok: bool,
    pub pac_ok: bool,
}

/// Ex-post checks of an outcome produced from truthful `bids`.
pub fn audit_outcome<T: Scalar>(mech: &Mechanism<T>, outcome: &AuctionOutcome<T>, bids: &BidProfile<T>) -> Result<Audit> {
    Error::check_len("outcome allocation", bids.len(), outcome.allocation.len())?;
    Error::check_len("outcome payments", bids.len(), outcome.payments.len())?;
    let eps = mech.params().epsilon();
    let ir_ok = bids
        .bids()
        .iter()
        .zip(outcome.allocation.counts())
        .zip(&outcome.payments)
        .all(|((&b, &a), &p)| p - T::from_usize_lossy(a as usize) * mech.cost().value(b) >= -T::lit(IR_TOLERANCE));
    let rates = bids
        .bids()
        .iter()
        .map(|&b| psi_interior(b, eps))
        .collect::<Result<Vec<T>>>()?;
    let pac_ok = mech.budget() <= coverage(outcome.allocation.counts(), &rates);
    Ok(Audit { ir_ok, pac_ok })
}

/// `c(q) − c(η̂_winner)`, the per-example price paid above the winner's
/// reported cost.
pub fn elicitation_premium<T: Scalar>(mech: &Mechanism<T>, outcome: &AuctionOutcome<T>, bids: &BidProfile<T>) -> Result<T> {
    let w = outcome
        .winner
        .ok_or_else(|| Error::invalid("outcome", "no winner"))?;
    let q = outcome
        .critical_bid
        .ok_or(Error::MissingCriticalBid { winner: w })?;
    Ok(mech.cost().value(q) - mech.cost().value(bids.bids()[w]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedRules {
    pub report: f64,
    /// Expected number of examples bought from the agent.
    pub alpha: Estimate,
    /// Expected payment to the agent.
    pub pi: Estimate,
}

fn check_agent(mech: &Mechanism<f64>, bidders: usize, i: usize, samples: u64) -> Result<()> {
    if i >= bidders {
        return Err(Error::invalid("agent", format!("index {i} out of {bidders} bidders")));
    }
    if samples == 0 {
        return Err(Error::ZeroTrials);
    }
    if let crate::mechanism::Priors::PerAnnotator(ps) = mech.priors() {
        Error::check_len("priors", ps.len(), bidders)?;
    }
    Ok(())
}

fn draw_profile(mech: &Mechanism<f64>, bidders: usize, i: usize, report: f64, seed: u64, sample: u64) -> Vec<f64> {
    let mut rng = stream(seed, sample);
    let iv = mech.interval();
    (0..bidders)
        .map(|j| {
            if j == i {
                report
            } else {
                mech.prior(j).quantile_within(iv.lo(), iv.hi(), rng.gen::<f64>())
            }
        })
        .collect()
}

/// Per-sample `(a_i, p_i)` for `samples` opponent draws.
fn sample_rules(
    mech: &Mechanism<f64>,
    bidders: usize,
    i: usize,
    report: f64,
    variant: PaymentVariant,
    samples: u64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    (0..samples)
        .into_par_iter()
        .map(|s| {
            let bids = mech.profile(draw_profile(mech, bidders, i, report, seed, s))?;
            let o = mech.run_auction(&bids, variant)?;
            Ok((o.allocation.counts()[i] as f64, o.payments[i]))
        })
        .collect()
}

/// Expected allocation and payment of agent `i` reporting `report` when the
/// other `bidders − 1` annotators bid types drawn from their priors.
///
/// Sample `s` uses stream `s` of `seed`. With a single bidder there is
/// nothing to sample and the result is exact.
pub fn expected_rules(
    mech: &Mechanism<f64>,
    bidders: usize,
    i: usize,
    report: f64,
    variant: PaymentVariant,
    samples: u64,
    seed: u64,
) -> Result<ExpectedRules> {
    check_agent(mech, bidders, i, samples)?;
    let draws = if bidders == 1 {
        sample_rules(mech, 1, 0, report, variant, 1, seed)?
    } else {
        sample_rules(mech, bidders, i, report, variant, samples, seed)?
    };
    let (a, p): (Vec<f64>, Vec<f64>) = draws.into_iter().unzip();
    Ok(ExpectedRules {
        report,
        alpha: Estimate::from_samples(&a),
        pi: Estimate::from_samples(&p),
    })
}

/// Expected allocation only; skips the payment computation.
pub fn expected_allocation(
    mech: &Mechanism<f64>,
    bidders: usize,
    i: usize,
    report: f64,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    check_agent(mech, bidders, i, samples)?;
    let samples = if bidders == 1 { 1 } else { samples };
    let a = mech.allocation(report) as f64;
    let s_i = mech.score(i, report)?;
    let draws = (0..samples)
        .into_par_iter()
        .map(|s| {
            let bids = draw_profile(mech, bidders, i, report, seed, s);
            for (j, &b) in bids.iter().enumerate() {
                if j == i {
                    continue;
                }
                let s_j = mech.score(j, b)?;
                // smallest index wins ties
                if s_j < s_i || (s_j == s_i && j < i) {
                    return Ok(0.0);
                }
            }
            Ok(a)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_samples(&draws))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityPoint {
    pub report: f64,
    pub alpha: Estimate,
    pub pi: Estimate,
    /// `π − α·c` at the report, estimated per sample.
    pub surplus: Estimate,
    /// Trapezoid estimate of `−∫_{lo}^{report} α c'`.
    pub integral: Estimate,
    /// `(surplus − integral) / SE`, the standardized identity gap.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WmeReport {
    pub points: Vec<IdentityPoint>,
    /// Largest standardized decrease `(α_k − α_{k+1}) / SE` between
    /// neighbouring reports.
    pub max_alpha_drop_z: f64,
    pub wme_ok: bool,
    pub max_abs_z: f64,
    pub identity_ok: bool,
}

/// Monte Carlo check that the expected allocation is non-decreasing in the
/// report and that the expected integral payment satisfies
/// `π(r) = α(r)c(r) − ∫_{lo}^{r} α(t)c'(t) dt`.
///
/// `reports` points are spread over the bid interval; the integral uses a
/// trapezoid rule on a grid `refine` times finer whose α values come from
/// independent sample families. Both checks allow `k_sigma` standard errors.
#[allow(clippy::too_many_arguments)]
pub fn wme_identity_check(
    mech: &Mechanism<f64>,
    bidders: usize,
    i: usize,
    reports: usize,
    refine: usize,
    samples: u64,
    seed: u64,
    k_sigma: f64,
) -> Result<WmeReport> {
    if reports < 2 || refine == 0 {
        return Err(Error::invalid("identity check", "need at least two reports and refine ≥ 1"));
    }
    let iv = mech.interval();
    let fine = iv.grid((reports - 1) * refine + 1);
    let h = (iv.hi() - iv.lo()) / (fine.len() - 1) as f64;
    let fine_seed = child_seed(seed, u64::MAX);
    let slopes = fine
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let a = expected_allocation(mech, bidders, i, t, samples, child_seed(fine_seed, j as u64))?;
            Ok((a, -mech.cost().derivative(t)))
        })
        .collect::<Result<Vec<(Estimate, f64)>>>()?;

    let mut points = Vec::with_capacity(reports);
    let mut sum = 0.0;
    for k in 0..reports {
        let r = fine[k * refine];
        if k > 0 {
            for j in (k - 1) * refine..k * refine {
                let (l, u) = (&slopes[j], &slopes[j + 1]);
                sum += 0.5 * h * (l.0.mean * l.1 + u.0.mean * u.1);
            }
        }
        // endpoint weights h/2, interior h
        let mut var = 0.0;
        for (j, (a, g)) in slopes.iter().enumerate().take(k * refine + 1) {
            let w = if j == 0 || j == k * refine { 0.5 * h } else { h };
            var += (w * g * a.std_error).powi(2);
        }
        if k == 0 {
            var = 0.0;
        }
        let draws = if bidders == 1 {
            sample_rules(mech, 1, 0, r, PaymentVariant::Integral, 1, child_seed(seed, k as u64))?
        } else {
            sample_rules(mech, bidders, i, r, PaymentVariant::Integral, samples, child_seed(seed, k as u64))?
        };
        let c = mech.cost().value(r);
        let a: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let p: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let d: Vec<f64> = draws.iter().map(|d| d.1 - d.0 * c).collect();
        let surplus = Estimate::from_samples(&d);
        let integral = Estimate {
            mean: sum,
            std_error: var.sqrt(),
            samples: samples * (k * refine + 1) as u64,
        };
        let se = surplus.std_error.hypot(integral.std_error);
        let gap = surplus.mean - integral.mean;
        let z = if se > 0.0 { gap / se } else if gap == 0.0 { 0.0 } else { gap.signum() * f64::INFINITY };
        points.push(IdentityPoint {
            report: r,
            alpha: Estimate::from_samples(&a),
            pi: Estimate::from_samples(&p),
            surplus,
            integral,
            z,
        });
    }

    let max_alpha_drop_z = points
        .windows(2)
        .map(|w| {
            let drop = w[0].alpha.mean - w[1].alpha.mean;
            let se = w[0].alpha.std_error.hypot(w[1].alpha.std_error);
            if drop <= 0.0 {
                drop / se.max(f64::MIN_POSITIVE)
            } else if se > 0.0 {
                drop / se
            } else {
                f64::INFINITY
            }
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let max_abs_z = points.iter().map(|p| p.z.abs()).fold(0.0, f64::max);
    Ok(WmeReport {
        wme_ok: max_alpha_drop_z <= k_sigma,
        identity_ok: max_abs_z <= k_sigma,
        max_alpha_drop_z,
        max_abs_z,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BicReport {
    pub truth: f64,
    pub best_report: f64,
    /// `U(best) − U(truth)` over common opponent draws.
    pub regret: Estimate,
    pub utilities: Vec<(f64, Estimate)>,
}

/// Sweep of expected utility `π(r) − α(r)c(truth)` over `grid`. Every report
/// faces the same opponent draws, so differences are estimated with common
/// random numbers. The result is statistical and carries standard errors.
#[allow(clippy::too_many_arguments)]
pub fn bic_sweep(
    mech: &Mechanism<f64>,
    bidders: usize,
    i: usize,
    truth: f64,
    grid: &[f64],
    variant: PaymentVariant,
    samples: u64,
    seed: u64,
) -> Result<BicReport> {
    check_agent(mech, bidders, i, samples)?;
    let samples = if bidders == 1 { 1 } else { samples };
    let c = mech.cost().value(truth);
    let per_report = |r: f64| -> Result<Vec<f64>> {
        Ok(sample_rules(mech, bidders, i, r, variant, samples, seed)?
            .into_iter()
            .map(|(a, p)| p - a * c)
            .collect())
    };
    let truthful = per_report(truth)?;
    let mut utilities = Vec::with_capacity(grid.len());
    let mut best_report = truth;
    let mut regret = Estimate {
        mean: 0.0,
        std_error: 0.0,
        samples,
    };
    for &r in grid {
        let u = per_report(r)?;
        utilities.push((r, Estimate::from_samples(&u)));
        let diff: Vec<f64> = u.iter().zip(&truthful).map(|(x, y)| x - y).collect();
        let d = Estimate::from_samples(&diff);
        if d.mean > regret.mean {
            regret = d;
            best_report = r;
        }
    }
    Ok(BicReport {
        truth,
        best_report,
        regret,
        utilities,
    })
}
