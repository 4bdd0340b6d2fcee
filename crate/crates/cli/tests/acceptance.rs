//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs as a plain binary (`harness = false`).

use std::process::{Command, ExitCode};
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use pacmech::harness::wme_identity_check;
use pacmech::mda::{estimate_failure_rate, mda, LabeledExample, SamplingDistribution, ThresholdConceptClass};
use pacmech::mechanism::{check_regularity, BidInterval, CostModel, Mechanism, PriorModel, Priors};
use pacmech::pac::{
    disagreement_chernoff_bound, e1_upper_bound, equal_split_plan, is_feasible, mc_disagreement_probability,
    mc_e1_probability, psi, AnnotationPlan, NoiseRate, PacParams,
};
use pacmech::rng::stream;
use pacmech_cli::suites::{dsic_matrix, random_profiles, rounding_bound_suite};
use rand::Rng;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------------------
// Fixed-point oracle with 256 fractional bits for criterion 1.

const BITS: u32 = 256;

#[derive(Clone, Debug)]
struct Fix(BigInt);

impl Fix {
    fn one() -> Fix {
        Fix(BigInt::one() << BITS)
    }

    fn ratio(num: i64, den: i64) -> Fix {
        Fix((BigInt::from(num) << BITS) / BigInt::from(den))
    }

    fn add(&self, o: &Fix) -> Fix {
        Fix(&self.0 + &o.0)
    }

    fn sub(&self, o: &Fix) -> Fix {
        Fix(&self.0 - &o.0)
    }

    fn mul(&self, o: &Fix) -> Fix {
        Fix((&self.0 * &o.0) >> BITS)
    }

    fn div(&self, o: &Fix) -> Fix {
        Fix((&self.0 << BITS) / &o.0)
    }

    fn div_int(&self, k: i64) -> Fix {
        Fix(&self.0 / BigInt::from(k))
    }

    fn neg(&self) -> Fix {
        Fix(-&self.0)
    }

    fn negligible(&self) -> bool {
        self.0.abs() < BigInt::from(16)
    }

    /// Taylor series; fine for |x| < 1.
    fn exp(&self) -> Fix {
        let mut sum = Fix::one();
        let mut term = Fix::one();
        for k in 1.. {
            term = term.mul(self).div_int(k);
            if term.negligible() {
                break;
            }
            sum = sum.add(&term);
        }
        sum
    }

    /// `ln y = 2 atanh((y − 1)/(y + 1))`; fine for y near 1.
    fn ln(&self) -> Fix {
        let z = self.sub(&Fix::one()).div(&self.add(&Fix::one()));
        let z2 = z.mul(&z);
        let mut power = z.clone();
        let mut sum = Fix(BigInt::zero());
        for k in 0.. {
            let term = power.div_int(2 * k + 1);
            if term.negligible() {
                break;
            }
            sum = sum.add(&term);
            power = power.mul(&z2);
        }
        sum.add(&sum)
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap() / 2f64.powi(BITS as i32)
    }
}

/// `−ln(1 − ε(1 − e^{−x}))` in fixed point.
fn oracle_rate(x: &Fix, eps: &Fix) -> f64 {
    let inner = Fix::one().sub(&eps.mul(&Fix::one().sub(&x.neg().exp())));
    inner.ln().neg().to_f64()
}

fn criterion_1() -> Outcome {
    let eps = Fix::ratio(1, 10);
    // interior at η = 1/10: x = (1 − 3/10)/8 = 7/80
    let cases = [
        ("psi(0.1)", 0.1, oracle_rate(&Fix::ratio(7, 80), &eps)),
        ("psi(0)", 0.0, Fix::one().sub(&eps).ln().neg().to_f64()),
        ("psi(1/3)", 1.0 / 3.0, oracle_rate(&Fix::ratio(1, 18), &eps)),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, eta, want) in cases {
        let got = psi(NoiseRate::new(eta).unwrap(), 0.1).unwrap();
        let rel = ((got - want) / want).abs();
        worst = worst.max(rel);
        parts.push(format!("{name}={got:.15e}"));
    }
    outcome(worst <= 1e-12, format!("{}; max rel err {worst:.1e}", parts.join(", ")))
}

fn criterion_2() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut cell = 0;
    for &k in &[4u64, 8, 16] {
        for &eta in &[0.0, 0.1, 0.2, 0.3] {
            let etas = [NoiseRate::new(eta).unwrap()];
            let bound = disagreement_chernoff_bound(&[k], &etas).unwrap();
            let est = mc_disagreement_probability(&[k], &etas, 1_000_000, SEED + cell).unwrap();
            cell += 1;
            worst = worst.max((est.mean - bound) / est.std_error.max(f64::MIN_POSITIVE));
            if !est.within(bound, 4.0) {
                return outcome(false, format!("k={k} eta={eta}: mc {} > bound {bound} + 4·{}", est.mean, est.std_error));
            }
        }
    }
    outcome(true, format!("12 cells, 1e6 trials each; max (mc − bound)/SE = {worst:.2}"))
}

fn criterion_3() -> Outcome {
    let mut cell = 0;
    let mut tightest = f64::INFINITY;
    for &eta in &[0.05, 0.15, 0.25, 0.3] {
        for &eps in &[0.1, 0.3] {
            for &m in &[10u64, 50, 200] {
                let etas = [NoiseRate::new(eta).unwrap()];
                let plan = AnnotationPlan::new(vec![m]);
                let bound = e1_upper_bound(&plan, &etas, eps).unwrap();
                let est = mc_e1_probability(&plan, &etas, eps, 200_000, SEED + 100 + cell).unwrap();
                cell += 1;
                tightest = tightest.min(bound + 4.0 * est.std_error - est.mean);
                if !est.within(bound, 4.0) {
                    return outcome(false, format!("eta={eta} eps={eps} m={m}: mc {} > bound {bound}", est.mean));
                }
            }
        }
    }
    outcome(true, format!("24 cells, 2e5 trials each; min slack {tightest:.3e}"))
}

fn criterion_4() -> Outcome {
    let params = PacParams::new(0.1, 0.1, 101).unwrap();
    let etas = NoiseRate::vec(&[0.1, 0.2]).unwrap();
    let plan = equal_split_plan(&etas, &params).unwrap();
    let feasible = is_feasible(&plan, &etas, &params).unwrap();
    let dist = SamplingDistribution::uniform(100).unwrap();
    let rate = estimate_failure_rate(&plan, &etas, &params, 50, &dist, 2000, SEED).unwrap();
    let upper = rate.upper_bound(0.99);
    outcome(
        feasible && upper < 0.1,
        format!(
            "plan {:?}, {} of 2000 trials eps-bad, 99% upper bound {upper:.4}",
            plan.counts(),
            rate.failures
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = stream(SEED, 5);
    for case in 0..10_000 {
        let k = rng.gen_range(1..=20usize);
        let n = rng.gen_range(0..=200usize);
        let data: Vec<LabeledExample> = (0..n)
            .map(|_| LabeledExample {
                x: rng.gen_range(0..k),
                y: rng.gen_bool(0.5),
                annotator: 0,
            })
            .collect();
        // exhaustive scan: concept h labels x positive iff x < h
        let mut best = (u64::MAX, 0usize);
        for h in 0..=k {
            let loss = data.iter().filter(|e| (e.x < h) != e.y).count() as u64;
            if loss < best.0 {
                best = (loss, h);
            }
        }
        let got = mda(&data, &ThresholdConceptClass::new(k).unwrap()).unwrap();
        if got != best.1 {
            return outcome(false, format!("dataset {case}: mda {got}, scan {}", best.1));
        }
    }
    outcome(true, "10000 random datasets agree exactly")
}

fn criterion_6() -> Outcome {
    let s = rounding_bound_suite(1000, 4, 50, SEED).unwrap();
    outcome(
        s.additive_failures == 0 && s.multiplicative_failures == 0,
        format!(
            "additive failures {}/{}, multiplicative failures {}/{} premise instances, max alg − opt − w = {:.4}",
            s.additive_failures, s.instances, s.multiplicative_failures, s.premise_instances, s.max_additive_excess
        ),
    )
}

fn regular_mechanism() -> Mechanism<f64> {
    Mechanism::new(
        PacParams::new(0.1, 0.05, 100).unwrap(),
        CostModel::exponential(1.0, 30.0).unwrap(),
        Priors::Shared(PriorModel::Uniform),
        BidInterval::new(0.05, 0.30).unwrap(),
    )
    .unwrap()
}

fn criteria_7_and_8() -> (Outcome, Outcome) {
    let mech = regular_mechanism();
    let profiles = random_profiles(mech.interval(), 50, 2, SEED);
    let checks = dsic_matrix(&mech, &profiles, 200).unwrap();
    let regret = checks.iter().map(|c| c.integral.regret).fold(0.0, f64::max);
    let critical = checks.iter().map(|c| c.critical_price.regret).fold(0.0, f64::max);
    let ir = checks.iter().filter(|c| c.audit.ir_ok).count();
    let pac = checks.iter().filter(|c| c.audit.pac_ok).count();
    (
        outcome(
            regret <= 1e-6,
            format!("max regret {regret:.3e} over 50 profiles × 200 reports (critical-price rule, measured only: {critical:.3e})"),
        ),
        outcome(ir == 50 && pac == 50, format!("IR {ir}/50, PAC-compatible {pac}/50")),
    )
}

fn criterion_9() -> Outcome {
    let mech = regular_mechanism();
    let r = wme_identity_check(&mech, 3, 0, 30, 10, 100_000, SEED, 4.0).unwrap();
    outcome(
        r.wme_ok && r.identity_ok,
        format!(
            "30 reports, 1e5 samples each; max alpha drop {:.2} SE, max identity gap {:.2} SE",
            r.max_alpha_drop_z, r.max_abs_z
        ),
    )
}

/// Closed-form interior rate for the grid oracle.
fn rate(eta: f64, eps: f64) -> f64 {
    -(1.0 - eps * (1.0 - (-(1.0 - 3.0 * eta) / 8.0).exp())).ln()
}

fn criterion_10() -> Outcome {
    let iv = BidInterval::new(0.05, 0.30).unwrap();
    let grid = iv.grid(1000);
    // uniform prior: (1 − Φ)/φ = (1 − 3η)/3
    let linear = |e: f64| ((1.0 - e) + (1.0 - 3.0 * e) / 3.0) / rate(e, 0.1);
    let exponential = |e: f64| (-30.0 * e).exp() * (1.0 + 10.0 * (1.0 - 3.0 * e)) / rate(e, 0.1);
    let rises = |f: &dyn Fn(f64) -> f64| grid.windows(2).any(|w| f(w[1]) > f(w[0]) + 1e-9);
    let lin = check_regularity(&CostModel::linear(1.0, 1.0).unwrap(), &PriorModel::Uniform, 0.1, &iv, 1000).unwrap();
    let exp = check_regularity(&CostModel::exponential(1.0, 30.0).unwrap(), &PriorModel::Uniform, 0.1, &iv, 1000).unwrap();
    let oracle_lin = rises(&linear);
    let oracle_exp = rises(&exponential);
    outcome(
        !lin.is_regular && oracle_lin && exp.is_regular && !oracle_exp,
        format!(
            "linear: regular={} (oracle rises={oracle_lin}); exponential k=30: regular={} (oracle rises={oracle_exp})",
            lin.is_regular, exp.is_regular
        ),
    )
}

fn criterion_11() -> Outcome {
    let dir = std::env::temp_dir().join(format!("pacmech-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("config.toml");
    std::fs::write(
        &config,
        r#"
seed = 7

[pac]
epsilon = 0.1
delta = 0.1
concept_count = 101

[annotators]
etas = [0.1, 0.2]
weights = [2.0, 1.0]

[mda]
trials = 200

[auction]
bids = [0.1, 0.2, 0.15]

[verify]
profiles = 4
grid = 40
wme_reports = 4
wme_refine = 2
wme_samples = 500
bic_truths = 2
bic_grid = 5
bic_samples = 200
plan_bound_instances = 20
"#,
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_pacmech");
    let run = |cmd: &str, format: &str| {
        Command::new(bin)
            .args([cmd, "--config", config.to_str().unwrap(), "--format", format])
            .output()
            .unwrap()
    };
    let mut checked = 0;
    for cmd in ["feasibility", "plan", "simulate-mda", "auction", "verify"] {
        for format in ["csv", "json"] {
            let (a, b) = (run(cmd, format), run(cmd, format));
            if a.stdout.is_empty() || a.stdout != b.stdout || a.status.code() != b.status.code() {
                return outcome(false, format!("{cmd} --format {format} differs between runs"));
            }
            checked += 1;
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    outcome(true, format!("{checked} command/format pairs byte-identical across two runs"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: &str, name: &str, start: Instant, o: Outcome| {
        let status = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "{status} criterion {n:>2} {name}: {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
    };
    let t = Instant::now();
    report("1", "psi against 256-bit oracle", t, criterion_1());
    let t = Instant::now();
    report("2", "disagreement bound dominance", t, criterion_2());
    let t = Instant::now();
    report("3", "product bound dominance", t, criterion_3());
    let t = Instant::now();
    report("4", "empirical PAC guarantee", t, criterion_4());
    let t = Instant::now();
    report("5", "MDA equals exhaustive scan", t, criterion_5());
    let t = Instant::now();
    report("6", "rounded plan bounds", t, criterion_6());
    let t = Instant::now();
    let (c7, c8) = criteria_7_and_8();
    report("7", "truthfulness of integral payment", t, c7);
    report("8", "ex-post IR and PAC compatibility", t, c8);
    let t = Instant::now();
    report("9", "monotone expected allocation and payment identity", t, criterion_9());
    let t = Instant::now();
    report("10", "regularity classifier", t, criterion_10());
    let t = Instant::now();
    report("11", "deterministic CLI output", t, criterion_11());
    if failed == 0 {
        println!("acceptance: all 11 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
