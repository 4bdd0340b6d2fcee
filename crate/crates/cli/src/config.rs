//! Experiment configuration.
//!
//! One TOML document drives every command. Omitted keys take the defaults
//! below, and the fully resolved document is echoed into each result's
//! metadata so that it alone reproduces the run.

use pacmech::mechanism::{BidInterval, CostModel, PaymentVariant, PriorModel, Priors};
use pacmech::pac::{AnnotationPlan, NoiseRate, PacParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub pac: PacSection,
    pub annotators: AnnotatorSection,
    pub mda: MdaSection,
    pub auction: AuctionSection,
    pub verify: VerifySection,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacSection {
    pub epsilon: f64,
    pub delta: f64,
    pub concept_count: u64,
}

impl Default for PacSection {
    fn default() -> Self {
        PacSection {
            epsilon: 0.1,
            delta: 0.05,
            concept_count: 100,
        }
    }
}

/// Annotators for the feasibility, plan and simulate-mda commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotatorSection {
    pub etas: Vec<f64>,
    /// Per-example prices; required by `plan`.
    pub weights: Option<Vec<f64>>,
    /// A plan to test (`feasibility`) or to simulate (`simulate-mda`).
    pub plan: Option<Vec<u64>>,
    /// Upper bounds for the exact plan solver.
    pub caps: Option<Vec<u64>>,
    /// Noiseless sample size used by the multiplicative plan bound.
    pub m0: u64,
}

impl Default for AnnotatorSection {
    fn default() -> Self {
        AnnotatorSection {
            etas: vec![0.0],
            weights: None,
            plan: None,
            caps: None,
            m0: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform,
    Weighted { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MdaSection {
    pub trials: u64,
    /// Target threshold; defaults to the middle of the domain.
    pub target: Option<usize>,
    pub distribution: DistributionSpec,
    /// Confidence of the reported upper bound on the failure rate.
    pub confidence: f64,
}

impl Default for MdaSection {
    fn default() -> Self {
        MdaSection {
            trials: 2000,
            target: None,
            distribution: DistributionSpec::Uniform,
            confidence: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuctionSection {
    pub bids: Vec<f64>,
    pub cost: CostModel<f64>,
    pub prior: PriorModel<f64>,
    /// Per-annotator priors; overrides `prior` when present.
    pub priors: Option<Vec<PriorModel<f64>>>,
    pub interval: [f64; 2],
    pub payment: PaymentVariant,
    pub allow_irregular: bool,
}

impl Default for AuctionSection {
    fn default() -> Self {
        AuctionSection {
            bids: vec![0.1, 0.2],
            cost: CostModel::Exponential { scale: 1.0, rate: 30.0 },
            prior: PriorModel::Uniform,
            priors: None,
            interval: [0.05, 0.30],
            payment: PaymentVariant::Integral,
            allow_irregular: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Random (truth, opponents) profiles for the best-response sweep.
    pub profiles: usize,
    pub opponents: usize,
    /// Reports per best-response sweep.
    pub grid: usize,
    pub wme_reports: usize,
    pub wme_refine: usize,
    pub wme_samples: u64,
    pub bic_truths: usize,
    pub bic_grid: usize,
    pub bic_samples: u64,
    pub k_sigma: f64,
    pub plan_bound_instances: usize,
    pub plan_bound_max_annotators: usize,
    pub plan_bound_max_cap: u64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            profiles: 50,
            opponents: 2,
            grid: 200,
            wme_reports: 30,
            wme_refine: 10,
            wme_samples: 20_000,
            bic_truths: 5,
            bic_grid: 21,
            bic_samples: 2_000,
            k_sigma: 4.0,
            plan_bound_instances: 1000,
            plan_bound_max_annotators: 4,
            plan_bound_max_cap: 50,
        }
    }
}

fn at(path: impl Into<String>) -> impl FnOnce(pacmech::Error) -> CliError {
    let path = path.into();
    move |e| CliError::Config {
        path,
        message: e.to_string(),
    }
}

fn bad(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every section against the invariants of the domain types it
    /// builds, reporting the first offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params()?;
        let a = &self.annotators;
        if a.etas.is_empty() {
            return Err(bad("annotators.etas", "at least one annotator is required"));
        }
        self.etas()?;
        let n = a.etas.len();
        if let Some(w) = &a.weights {
            if w.len() != n {
                return Err(bad("annotators.weights", format!("expected {n} entries, found {}", w.len())));
            }
            if let Some(j) = w.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(bad(format!("annotators.weights[{j}]"), "must be positive and finite"));
            }
        }
        if let Some(p) = &a.plan {
            if !p.is_empty() && p.len() != n {
                return Err(bad("annotators.plan", format!("expected {n} entries, found {}", p.len())));
            }
        }
        if let Some(c) = &a.caps {
            if c.len() != n {
                return Err(bad("annotators.caps", format!("expected {n} entries, found {}", c.len())));
            }
        }

        let m = &self.mda;
        if m.trials == 0 {
            return Err(bad("mda.trials", "must be at least 1"));
        }
        if !(m.confidence > 0.0 && m.confidence < 1.0) {
            return Err(bad("mda.confidence", "must lie in (0, 1)"));
        }
        let k = self.domain_size();
        if let Some(t) = m.target {
            if t > k {
                return Err(bad("mda.target", format!("threshold {t} outside 0..={k}")));
            }
        }
        if let DistributionSpec::Weighted { weights } = &m.distribution {
            if weights.len() != k {
                return Err(bad(
                    "mda.distribution.weights",
                    format!("expected {k} entries (concept_count − 1), found {}", weights.len()),
                ));
            }
        }
        self.distribution()?;

        let interval = self.interval()?;
        self.cost()?;
        self.priors()?;
        let au = &self.auction;
        if au.bids.is_empty() {
            return Err(bad("auction.bids", "at least one bid is required"));
        }
        for (j, &b) in au.bids.iter().enumerate() {
            if !interval.contains(b) {
                return Err(bad(
                    format!("auction.bids[{j}]"),
                    format!("{b} outside the bid interval [{}, {}]", interval.lo(), interval.hi()),
                ));
            }
        }
        if let Some(ps) = &au.priors {
            if ps.len() != au.bids.len() {
                return Err(bad(
                    "auction.priors",
                    format!("expected {} entries, found {}", au.bids.len(), ps.len()),
                ));
            }
        }

        let v = &self.verify;
        for (name, value) in [
            ("verify.profiles", v.profiles),
            ("verify.grid", v.grid),
            ("verify.wme_refine", v.wme_refine),
            ("verify.bic_truths", v.bic_truths),
            ("verify.bic_grid", v.bic_grid),
            ("verify.plan_bound_max_annotators", v.plan_bound_max_annotators),
        ] {
            if value == 0 {
                return Err(bad(name, "must be at least 1"));
            }
        }
        if v.wme_reports < 2 {
            return Err(bad("verify.wme_reports", "must be at least 2"));
        }
        if v.wme_samples == 0 {
            return Err(bad("verify.wme_samples", "must be at least 1"));
        }
        if v.bic_samples == 0 {
            return Err(bad("verify.bic_samples", "must be at least 1"));
        }
        if v.plan_bound_max_cap == 0 {
            return Err(bad("verify.plan_bound_max_cap", "must be at least 1"));
        }
        if !(v.k_sigma.is_finite() && v.k_sigma > 0.0) {
            return Err(bad("verify.k_sigma", "must be positive"));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PacParams<f64>, CliError> {
        PacParams::new(self.pac.epsilon, self.pac.delta, self.pac.concept_count).map_err(at("pac"))
    }

    pub fn etas(&self) -> Result<Vec<NoiseRate<f64>>, CliError> {
        self.annotators
            .etas
            .iter()
            .enumerate()
            .map(|(j, &e)| {
                if !(0.0..=1.0 / 3.0).contains(&e) {
                    return Err(bad(format!("annotators.etas[{j}]"), format!("{e} outside [0, 1/3]")));
                }
                NoiseRate::new(e).map_err(at(format!("annotators.etas[{j}]")))
            })
            .collect()
    }

    /// The supplied plan; an empty list means no examples from anyone.
    pub fn plan(&self) -> Option<AnnotationPlan> {
        self.annotators.plan.as_ref().map(|p| {
            if p.is_empty() {
                AnnotationPlan::zeros(self.annotators.etas.len())
            } else {
                AnnotationPlan::new(p.clone())
            }
        })
    }

    /// Size of the threshold-class domain, `concept_count − 1`.
    pub fn domain_size(&self) -> usize {
        self.pac.concept_count.saturating_sub(1) as usize
    }

    pub fn target(&self) -> usize {
        self.mda.target.unwrap_or(self.domain_size() / 2)
    }

    pub fn distribution(&self) -> Result<pacmech::mda::SamplingDistribution, CliError> {
        use pacmech::mda::SamplingDistribution;
        match &self.mda.distribution {
            DistributionSpec::Uniform => SamplingDistribution::uniform(self.domain_size()),
            DistributionSpec::Weighted { weights } => SamplingDistribution::weighted(weights.clone()),
        }
        .map_err(at("mda.distribution"))
    }

    pub fn interval(&self) -> Result<BidInterval<f64>, CliError> {
        let [lo, hi] = self.auction.interval;
        BidInterval::new(lo, hi).map_err(at("auction.interval"))
    }

    pub fn cost(&self) -> Result<CostModel<f64>, CliError> {
        self.auction.cost.clone().validated().map_err(at("auction.cost"))
    }

    pub fn priors(&self) -> Result<Priors<f64>, CliError> {
        match &self.auction.priors {
            Some(ps) => ps
                .iter()
                .enumerate()
                .map(|(j, p)| p.clone().validated().map_err(at(format!("auction.priors[{j}]"))))
                .collect::<Result<Vec<_>, _>>()
                .map(Priors::PerAnnotator),
            None => self
                .auction
                .prior
                .clone()
                .validated()
                .map(Priors::Shared)
                .map_err(at("auction.prior")),
        }
    }

    /// Canonical JSON of the resolved configuration.
    pub fn canonical_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON text, hex encoded.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.canonical_json()).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
