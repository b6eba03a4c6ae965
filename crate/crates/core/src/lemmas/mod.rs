//! Numerical verifiers for the quantitative inequalities behind the
//! construction. Every verifier returns [`LemmaReport`]s comparing a measured
//! quantity with the bound it is supposed to respect.

mod chain;
mod equivalence;
mod incidence;
mod probe;
mod signs;

pub use chain::check_parameter_chain;
pub use equivalence::{
    converse_epsilon, tightest_equivalence_check, verify_approx_eigenvector, verify_goodness_equivalence,
    verify_support_characterization,
};
pub use incidence::{
    mc_subspace_volume, small_support_incidence, verify_pick_gamma, IncidenceMode, PICK_GAMMA_REGIME, STRUCTURE_BUDGET,
};
pub use probe::{verify_counterexample_probe, ProbeOutcome, PROBE_ALPHA};
pub use signs::{
    best_fit_frame, exhaustive_two_sign_vectors, find_lambda_sweep, verify_approx_orthonormal,
    verify_approx_orthonormal_instance, verify_find_lambda, verify_sigma_spread, verify_sign_continuity,
    verify_two_sign_vectors, verify_typicality_probability,
};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::seed::Seed;

pub const LEMMA_IDS: &[&str] = &[
    "goodness_equivalence",
    "support_characterization",
    "approx_eigenvector",
    "subspace_volume",
    "structured_incidence",
    "pick_gamma",
    "sign_continuity",
    "typicality",
    "two_sign_vectors",
    "find_lambda",
    "approx_orthonormal",
    "sigma_spread",
    "parameter_chain",
    "counterexample_probe",
];

/// Ids whose verifiers are Monte-Carlo estimates.
pub const MC_LEMMA_IDS: &[&str] = &["subspace_volume", "structured_incidence", "pick_gamma", "typicality"];

/// Minimum trial count accepted by the Monte-Carlo verifiers.
pub const MIN_MC_TRIALS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `measured ≤ bound`; margin `bound − measured`.
    AtMost,
    /// `measured ≥ bound`; margin `measured − bound`.
    AtLeast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Hypotheses not met; nothing asserted.
    NotApplicable,
    /// A measurement recorded without an assertion.
    Evidence,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub lemma_id: String,
    pub instance: String,
    pub relation: Relation,
    pub bound_value: f64,
    pub measured_value: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub trials: u64,
    pub seed: Option<Seed>,
    pub status: Status,
    pub passed: bool,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub details: Map<String, Value>,
}

impl LemmaReport {
    pub fn check(
        lemma_id: &str,
        instance: impl Into<String>,
        relation: Relation,
        bound: f64,
        measured: f64,
        tolerance: f64,
    ) -> Self {
        let margin = match relation {
            Relation::AtMost => bound - measured,
            Relation::AtLeast => measured - bound,
        };
        let passed = margin >= -tolerance;
        Self {
            lemma_id: lemma_id.to_string(),
            instance: instance.into(),
            relation,
            bound_value: bound,
            measured_value: measured,
            margin,
            tolerance,
            trials: 1,
            seed: None,
            status: if passed { Status::Pass } else { Status::Fail },
            passed,
            details: Map::new(),
        }
    }

    /// Nothing is measured; margin is NaN so `passed` is false.
    pub fn not_applicable(lemma_id: &str, instance: impl Into<String>, reason: impl Into<String>) -> Self {
        let mut r = Self::check(lemma_id, instance, Relation::AtMost, f64::NAN, f64::NAN, 0.0);
        r.status = Status::NotApplicable;
        r.passed = false;
        r.with_detail("reason", reason.into())
    }

    /// Recorded measurement without an assertion; `passed` still reflects the
    /// margin.
    pub fn evidence(mut self) -> Self {
        self.status = Status::Evidence;
        self
    }

    /// Tightens the margin with further checks that must also hold.
    pub fn with_extra_margins(mut self, extra: &[f64]) -> Self {
        for &m in extra {
            if m < self.margin || m.is_nan() {
                self.margin = m;
            }
        }
        self.passed = self.margin >= -self.tolerance;
        if self.status != Status::Evidence {
            self.status = if self.passed { Status::Pass } else { Status::Fail };
        }
        self
    }

    pub fn with_seed(mut self, seed: Seed) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_detail(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }

    pub fn is_failure(&self) -> bool {
        self.status == Status::Fail
    }
}

/// Collapses per-trial reports into one: the worst margin wins, trials add
/// up, and the number of violations is recorded. Inapplicable trials are
/// counted but do not contribute a margin.
pub(crate) fn aggregate(
    lemma_id: &str,
    instance: impl Into<String>,
    reports: &[LemmaReport],
    seed: Option<Seed>,
) -> LemmaReport {
    let instance = instance.into();
    let applicable: Vec<&LemmaReport> = reports.iter().filter(|r| r.status != Status::NotApplicable).collect();
    let skipped = reports.len() - applicable.len();
    let Some(worst) = applicable.iter().copied().min_by(|a, b| a.margin.total_cmp(&b.margin)) else {
        let mut r = LemmaReport::not_applicable(lemma_id, instance, "no applicable trial");
        r.trials = reports.len() as u64;
        r.seed = seed;
        return r;
    };
    let violations = applicable.iter().filter(|r| !r.passed).count();
    let mut out = LemmaReport::check(
        lemma_id,
        instance,
        worst.relation,
        worst.bound_value,
        worst.measured_value,
        worst.tolerance,
    )
    .with_trials(reports.iter().map(|r| r.trials).sum())
    .with_detail("violations", violations)
    .with_detail("not_applicable", skipped);
    out.margin = worst.margin;
    out.passed = violations == 0;
    out.status = if out.passed { Status::Pass } else { Status::Fail };
    out.seed = seed;
    out
}

/// Binomial standard error of a frequency at probability `p`.
pub(crate) fn standard_error(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).max(0.0).sqrt()
}

/// Number of Monte-Carlo trials per independent RNG stream.
pub(crate) const MC_CHUNK: u64 = 1 << 14;

/// Counts hits over `trials` draws split into fixed chunks, each with its own
/// derived stream, so the count does not depend on the thread count.
pub(crate) fn mc_count<F>(trials: u64, seed: Seed, section: &str, hit: F) -> u64
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> bool + Sync,
{
    use rayon::prelude::*;
    let chunks = trials.div_ceil(MC_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.derive(section, c).rng();
            let len = MC_CHUNK.min(trials - c * MC_CHUNK);
            (0..len).filter(|_| hit(&mut rng)).count() as u64
        })
        .sum()
}
