//! The five subcommands. Each is a pure function of the resolved config.

use pacmech::harness::{bic_sweep, wme_identity_check};
use pacmech::mda::{estimate_failure_rate, run_trial};
use pacmech::mechanism::{virtual_cost, Mechanism, PaymentVariant};
use pacmech::pac::{coverage, equal_split_plan, is_feasible, log_budget, min_samples_single, psi};
use pacmech::plan::{solve_exact, solve_lp_round, PlanProblem, PlanSolution};
use pacmech::rng::child_seed;
use pacmech::Error;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{Cell, Metadata, ResultTable};
use crate::suites::{dsic_matrix, random_profiles, rounding_bound_suite};

/// A rendered experiment and whether it met its pass condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: ResultTable,
    pub passed: bool,
}

/// `ψ(ηᵢ)` with the boundary values at 0 and 1/3.
fn rates(cfg: &ExperimentConfig) -> Result<Vec<f64>, CliError> {
    let eps = cfg.pac.epsilon;
    Ok(cfg
        .etas()?
        .into_iter()
        .map(|e| psi(e, eps))
        .collect::<pacmech::Result<Vec<f64>>>()?)
}

pub fn feasibility(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let params = cfg.params()?;
    let etas = cfg.etas()?;
    let rates = rates(cfg)?;
    let plan = cfg.plan();
    let mut t = ResultTable::new(
        Metadata::new("feasibility", cfg),
        &[
            "row",
            "annotator",
            "eta",
            "psi",
            "min_samples",
            "count",
            "contribution",
            "log_budget",
            "coverage",
            "feasible",
        ],
    );
    for (i, (&eta, &rate)) in etas.iter().zip(&rates).enumerate() {
        let count = plan.as_ref().map(|p| p.counts()[i]);
        t.push(vec![
            ("row", "annotator".into()),
            ("annotator", (i + 1).into()),
            ("eta", eta.value().into()),
            ("psi", rate.into()),
            ("min_samples", min_samples_single(eta, &params)?.into()),
            ("count", count.into()),
            ("contribution", count.map(|c| c as f64 * rate).into()),
        ]);
    }
    let feasible = plan.as_ref().map(|p| is_feasible(p, &etas, &params)).transpose()?;
    t.push(vec![
        ("row", "summary".into()),
        ("log_budget", log_budget(&params).value().into()),
        ("coverage", plan.as_ref().map(|p| coverage(p.counts(), &rates)).into()),
        ("feasible", feasible.into()),
    ]);
    Ok(Report {
        table: t,
        passed: feasible.unwrap_or(true),
    })
}

pub fn plan(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let weights = cfg.annotators.weights.clone().ok_or_else(|| CliError::Config {
        path: "annotators.weights".into(),
        message: "required by the plan command".into(),
    })?;
    let params = cfg.params()?;
    let rates = rates(cfg)?;
    let problem = PlanProblem::new(weights.clone(), rates.clone(), log_budget(&params))?;
    let mut t = ResultTable::new(
        Metadata::new("plan", cfg),
        &["method", "annotator", "eta", "psi", "weight", "count", "objective", "feasible", "note"],
    );
    let mut emit = |name: &str, sol: Result<PlanSolution<f64>, Error>| -> Result<(), CliError> {
        match sol {
            Ok(s) => {
                for (i, &c) in s.plan.counts().iter().enumerate() {
                    t.push(vec![
                        ("method", name.into()),
                        ("annotator", (i + 1).into()),
                        ("eta", cfg.annotators.etas[i].into()),
                        ("psi", rates[i].into()),
                        ("weight", weights[i].into()),
                        ("count", c.into()),
                    ]);
                }
                t.push(vec![
                    ("method", name.into()),
                    ("count", s.plan.total().into()),
                    ("objective", s.objective.into()),
                    ("feasible", problem.is_feasible(&s.plan).into()),
                ]);
                Ok(())
            }
            Err(e @ Error::EnumerationBudget { .. }) => {
                t.push(vec![("method", name.into()), ("note", e.to_string().into())]);
                Ok(())
            }
            Err(e) => Err(e.into()),
        }
    };
    emit("lp-round", solve_lp_round(&problem))?;
    emit("exact", solve_exact(&problem, cfg.annotators.caps.as_deref()))?;
    Ok(Report { table: t, passed: true })
}

pub fn simulate_mda(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let params = cfg.params()?;
    let etas = cfg.etas()?;
    let dist = cfg.distribution()?;
    let target = cfg.target();
    let plan = match cfg.plan() {
        Some(p) => p,
        None => equal_split_plan(&etas, &params)?,
    };
    let feasible = is_feasible(&plan, &etas, &params)?;
    let trials = cfg.mda.trials;
    if trials == 1 {
        let r = run_trial(&plan, &etas, &params, target, &dist, cfg.seed, 0)?;
        let mut t = ResultTable::new(
            Metadata::new("simulate-mda", cfg),
            &["trial", "chosen_hypothesis", "true_error", "eps_bad"],
        );
        t.push(vec![
            ("trial", 0u64.into()),
            ("chosen_hypothesis", r.chosen_hypothesis.into()),
            ("true_error", r.true_error.into()),
            ("eps_bad", r.is_eps_bad.into()),
        ]);
        return Ok(Report {
            table: t,
            passed: !r.is_eps_bad,
        });
    }
    let rate = estimate_failure_rate(&plan, &etas, &params, target, &dist, trials, cfg.seed)?;
    let upper = rate.upper_bound(cfg.mda.confidence);
    let pass = upper < params.delta();
    let mut t = ResultTable::new(
        Metadata::new("simulate-mda", cfg),
        &[
            "trials",
            "failures",
            "failure_rate",
            "std_error",
            "upper_bound",
            "confidence",
            "delta",
            "plan_total",
            "plan_feasible",
            "pass",
        ],
    );
    t.push(vec![
        ("trials", trials.into()),
        ("failures", rate.failures.into()),
        ("failure_rate", rate.estimate.mean.into()),
        ("std_error", rate.estimate.std_error.into()),
        ("upper_bound", upper.into()),
        ("confidence", cfg.mda.confidence.into()),
        ("delta", params.delta().into()),
        ("plan_total", plan.total().into()),
        ("plan_feasible", feasible.into()),
        ("pass", pass.into()),
    ]);
    Ok(Report { table: t, passed: pass })
}

/// Builds the mechanism, refusing an irregular configuration unless
/// `auction.allow_irregular` is set.
pub fn mechanism(cfg: &ExperimentConfig) -> Result<Mechanism<f64>, CliError> {
    let build = if cfg.auction.allow_irregular {
        Mechanism::new_unchecked
    } else {
        Mechanism::new
    };
    Ok(build(cfg.params()?, cfg.cost()?, cfg.priors()?, cfg.interval()?)?)
}

pub fn auction(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let mech = mechanism(cfg)?;
    let bids = mech.profile(cfg.auction.bids.clone())?;
    let variant = cfg.auction.payment;
    let o = mech.run_auction(&bids, variant)?;
    let mut t = ResultTable::new(
        Metadata::new("auction", cfg),
        &[
            "row",
            "annotator",
            "bid",
            "score",
            "virtual_cost",
            "allocation",
            "payment",
            "critical_bid",
            "premium",
            "regular",
            "variant",
        ],
    );
    for (i, &b) in bids.bids().iter().enumerate() {
        t.push(vec![
            ("row", "annotator".into()),
            ("annotator", (i + 1).into()),
            ("bid", b.into()),
            ("score", o.scores[i].into()),
            ("virtual_cost", virtual_cost(b, mech.cost(), mech.prior(i))?.value().into()),
            ("allocation", o.allocation.counts()[i].into()),
            ("payment", o.payments[i].into()),
        ]);
    }
    let w = o.winner.expect("a non-empty auction has a winner");
    let q = o.critical_bid.expect("winner has a critical bid");
    t.push(vec![
        ("row", "winner".into()),
        ("annotator", (w + 1).into()),
        ("bid", bids.bids()[w].into()),
        ("score", o.scores[w].into()),
        ("allocation", o.allocation.counts()[w].into()),
        ("payment", o.payments[w].into()),
        ("critical_bid", q.into()),
        ("premium", (mech.cost().value(q) - mech.cost().value(bids.bids()[w])).into()),
        ("regular", mech.regularity().is_regular.into()),
        ("variant", variant.name().into()),
    ]);
    Ok(Report { table: t, passed: true })
}

/// Kind of a verification row; only `Hard` rows decide the exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Hard,
    Statistical,
    Measured,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Hard => "hard",
            Kind::Statistical => "statistical",
            Kind::Measured => "measured",
        }
    }
}

struct Check {
    property: &'static str,
    kind: Kind,
    pass: bool,
    statistic: f64,
    threshold: f64,
    ci: Option<(f64, f64)>,
    detail: String,
}

pub fn verify(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let v = &cfg.verify;
    let mech = Mechanism::new_unchecked(cfg.params()?, cfg.cost()?, cfg.priors()?, cfg.interval()?)?;
    let mut checks = Vec::new();

    let reg = mech.regularity();
    checks.push(Check {
        property: "regularity",
        kind: Kind::Hard,
        pass: reg.is_regular,
        statistic: reg.max_violation,
        threshold: pacmech::mechanism::REGULARITY_TOLERANCE,
        ci: None,
        detail: format!(
            "{} grid points{}",
            reg.grid_points,
            reg.violating_eta.map_or(String::new(), |e| format!(", score rises at {e}"))
        ),
    });

    let bidders = v.opponents + 1;
    let priors_fit = match mech.priors() {
        pacmech::mechanism::Priors::PerAnnotator(ps) => ps.len() == bidders,
        pacmech::mechanism::Priors::Shared(_) => true,
    };
    if !priors_fit {
        return Err(CliError::Config {
            path: "auction.priors".into(),
            message: format!("verify needs {bidders} priors (verify.opponents + 1)"),
        });
    }

    let profiles = random_profiles(mech.interval(), v.profiles, v.opponents, child_seed(cfg.seed, 1));
    let matrix = dsic_matrix(&mech, &profiles, v.grid)?;
    let max_by = |f: &dyn Fn(&crate::suites::ProfileCheck) -> f64| matrix.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let min_by = |f: &dyn Fn(&crate::suites::ProfileCheck) -> f64| matrix.iter().map(f).fold(f64::INFINITY, f64::min);
    let dsic_integral = max_by(&|c| c.integral.regret);
    checks.push(Check {
        property: "dsic-integral",
        kind: Kind::Hard,
        pass: dsic_integral <= 1e-6,
        statistic: dsic_integral,
        threshold: 1e-6,
        ci: None,
        detail: format!("max regret over {} profiles × {} reports", v.profiles, v.grid),
    });
    let dsic_critical = max_by(&|c| c.critical_price.regret);
    checks.push(Check {
        property: "dsic-critical-price",
        kind: Kind::Measured,
        pass: dsic_critical <= 1e-6,
        statistic: dsic_critical,
        threshold: 1e-6,
        ci: None,
        detail: format!(
            "{} of {} profiles gain by misreporting",
            matrix.iter().filter(|c| c.critical_price.regret > 1e-6).count(),
            matrix.len()
        ),
    });
    checks.push(Check {
        property: "ex-post-ir",
        kind: Kind::Hard,
        pass: matrix.iter().all(|c| c.audit.ir_ok),
        statistic: matrix.iter().filter(|c| !c.audit.ir_ok).count() as f64,
        threshold: 0.0,
        ci: None,
        detail: "failing truthful profiles, integral rule".into(),
    });
    checks.push(Check {
        property: "pac-compatible",
        kind: Kind::Hard,
        pass: matrix.iter().all(|c| c.audit.pac_ok),
        statistic: matrix.iter().filter(|c| !c.audit.pac_ok).count() as f64,
        threshold: 0.0,
        ci: None,
        detail: "failing truthful profiles".into(),
    });
    let premium = min_by(&|c| c.premium);
    checks.push(Check {
        property: "elicitation-premium",
        kind: Kind::Hard,
        pass: premium >= 0.0,
        statistic: premium,
        threshold: 0.0,
        ci: None,
        detail: "min c(q) − c(winning bid)".into(),
    });

    let wme = wme_identity_check(
        &mech,
        bidders,
        0,
        v.wme_reports,
        v.wme_refine,
        v.wme_samples,
        child_seed(cfg.seed, 2),
        v.k_sigma,
    )?;
    checks.push(Check {
        property: "wme",
        kind: Kind::Statistical,
        pass: wme.wme_ok,
        statistic: wme.max_alpha_drop_z,
        threshold: v.k_sigma,
        ci: None,
        detail: format!("max standardized drop of alpha over {} reports", v.wme_reports),
    });
    checks.push(Check {
        property: "payment-identity",
        kind: Kind::Statistical,
        pass: wme.identity_ok,
        statistic: wme.max_abs_z,
        threshold: v.k_sigma,
        ci: None,
        detail: format!("max |z| of pi − alpha·c − ∫alpha·(−c'), {} samples per point", v.wme_samples),
    });

    let truths = mech.interval().grid(v.bic_truths);
    let grid = mech.interval().grid(v.bic_grid);
    let mut worst: Option<pacmech::harness::BicReport> = None;
    for (k, &truth) in truths.iter().enumerate() {
        let r = bic_sweep(
            &mech,
            bidders,
            0,
            truth,
            &grid,
            PaymentVariant::Integral,
            v.bic_samples,
            child_seed(cfg.seed, 100 + k as u64),
        )?;
        if worst.as_ref().is_none_or(|w| r.regret.mean > w.regret.mean) {
            worst = Some(r);
        }
    }
    let worst = worst.expect("at least one truth");
    let (m, se) = (worst.regret.mean, worst.regret.std_error);
    checks.push(Check {
        property: "bic-integral",
        kind: Kind::Statistical,
        pass: m <= v.k_sigma * se,
        statistic: m,
        threshold: v.k_sigma * se,
        ci: Some((m - v.k_sigma * se, m + v.k_sigma * se)),
        detail: format!("worst expected regret at truth {}, best report {}", worst.truth, worst.best_report),
    });

    let t3 = rounding_bound_suite(
        v.plan_bound_instances,
        v.plan_bound_max_annotators,
        v.plan_bound_max_cap,
        child_seed(cfg.seed, 4),
    )?;
    checks.push(Check {
        property: "plan-additive-bound",
        kind: Kind::Hard,
        pass: t3.additive_failures == 0,
        statistic: t3.max_additive_excess,
        threshold: 0.0,
        ci: None,
        detail: format!("max alg − opt − w over {} instances", t3.instances),
    });
    checks.push(Check {
        property: "plan-multiplicative-bound",
        kind: Kind::Hard,
        pass: t3.multiplicative_failures == 0,
        statistic: t3.multiplicative_failures as f64,
        threshold: 0.0,
        ci: None,
        detail: format!("failures among {} instances meeting the premise", t3.premise_instances),
    });

    let mut t = ResultTable::new(
        Metadata::new("verify", cfg),
        &["property", "kind", "pass", "statistic", "threshold", "ci_low", "ci_high", "detail"],
    );
    let passed = checks.iter().all(|c| c.kind != Kind::Hard || c.pass);
    for c in checks {
        t.push(vec![
            ("property", c.property.into()),
            ("kind", c.kind.name().into()),
            ("pass", c.pass.into()),
            ("statistic", c.statistic.into()),
            ("threshold", c.threshold.into()),
            ("ci_low", c.ci.map(|x| x.0).into()),
            ("ci_high", c.ci.map(|x| x.1).into()),
            ("detail", Cell::Text(c.detail)),
        ]);
    }
    Ok(Report { table: t, passed })
}
