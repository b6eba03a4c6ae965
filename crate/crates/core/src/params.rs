//! The parameter set of the counterexample construction and the exact check
//! of the inequalities that tie it together.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exact::{Exact, Interval};

/// Euclidean distortion constant used throughout the construction.
pub const DISTORTION: i64 = 2;

const START_BITS: u32 = 64;
const MAX_BITS: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub gamma: Exact,
    pub beta: Exact,
    pub eta: Exact,
    pub alpha: Exact,
    pub rho: Exact,
    pub c: Exact,
    pub xi: Exact,
    pub delta: Exact,
}

impl ParameterSet {
    /// `γ = 2^-37, β = 2^-6, η = α = ρ = 2^-40, c = 2^-205, ξ = 2^-403, δ = 2^-506`.
    pub fn reference() -> Self {
        Self {
            gamma: Exact::pow2(-37),
            beta: Exact::pow2(-6),
            eta: Exact::pow2(-40),
            alpha: Exact::pow2(-40),
            rho: Exact::pow2(-40),
            c: Exact::pow2(-205),
            xi: Exact::pow2(-403),
            delta: Exact::pow2(-506),
        }
    }

    /// Every parameter set to the same value.
    pub fn uniform(value: Exact) -> Self {
        Self {
            gamma: value.clone(),
            beta: value.clone(),
            eta: value.clone(),
            alpha: value.clone(),
            rho: value.clone(),
            c: value.clone(),
            xi: value.clone(),
            delta: value,
        }
    }

    fn fields(&self) -> [(&'static str, &Exact); 8] {
        [
            ("gamma", &self.gamma),
            ("beta", &self.beta),
            ("eta", &self.eta),
            ("alpha", &self.alpha),
            ("rho", &self.rho),
            ("c", &self.c),
            ("xi", &self.xi),
            ("delta", &self.delta),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.fields() {
            if !v.0.is_positive() {
                return domain(format!("parameter {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// `ζ = ξ/(αc)`.
    pub fn zeta(&self) -> Exact {
        Exact(&self.xi.0 / (&self.alpha.0 * &self.c.0))
    }

    /// `ε = δ²/(8C²)` with `C = 2`.
    pub fn epsilon(&self) -> Exact {
        let c2 = BigRational::from_integer((DISTORTION * DISTORTION * 8).into());
        Exact(&self.delta.0 * &self.delta.0 / c2)
    }

    /// Enclosure of `σ = (8πζ + 9δ)/η`.
    pub fn sigma(&self, bits: u32) -> Interval {
        let pi = Interval::pi(bits);
        let num = &(&Interval::int(8) * &pi) * &ex(&self.zeta()) + &Interval::int(9) * &ex(&self.delta);
        num.div(&ex(&self.eta)).expect("eta is positive")
    }
}

fn ex(e: &Exact) -> Interval {
    Interval::exact(e.0.clone())
}

fn rat(n: i64, d: i64) -> Interval {
    Interval::exact(BigRational::new(n.into(), d.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    Below,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionResult {
    pub id: &'static str,
    pub statement: &'static str,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// `1 − lhs/rhs` at the deciding precision.
    pub slack: f64,
    pub bits: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub parameters: ParameterSet,
    pub conditions: Vec<ConditionResult>,
    pub all_hold: bool,
    /// Condition with the smallest slack.
    pub binding: &'static str,
    pub zeta: Exact,
    pub epsilon: Exact,
    pub sigma_enclosure: (f64, f64),
}

type Sides = fn(&ParameterSet, u32) -> (Interval, Interval);

struct Condition {
    id: &'static str,
    statement: &'static str,
    cmp: Comparison,
    sides: Sides,
}

const CONDITIONS: &[Condition] = &[
    Condition {
        id: "norm_strongly_2_euclidean",
        statement: "delta + eta <= 2 - sqrt(2)",
        cmp: Comparison::AtMost,
        sides: |p, b| (ex(&p.delta) + ex(&p.eta), Interval::int(2) - Interval::int(2).sqrt(b).expect("positive")),
    },
    Condition {
        id: "eigenspace_closeness_within_gamma",
        statement: "3 delta + 2 eta <= gamma",
        cmp: Comparison::AtMost,
        sides: |p, _| (Interval::int(3) * ex(&p.delta) + Interval::int(2) * ex(&p.eta), ex(&p.gamma)),
    },
    Condition {
        id: "typical_points_exist",
        statement: "xi < alpha c",
        cmp: Comparison::Below,
        sides: |p, _| (ex(&p.xi), ex(&p.alpha) * ex(&p.c)),
    },
    Condition {
        id: "small_coordinates_within_gamma",
        statement: "alpha <= gamma",
        cmp: Comparison::AtMost,
        sides: |p, _| (ex(&p.alpha), ex(&p.gamma)),
    },
    Condition {
        id: "beta_at_most_one",
        statement: "beta <= 1",
        cmp: Comparison::AtMost,
        sides: |p, _| (ex(&p.beta), Interval::int(1)),
    },
    Condition {
        id: "beta_survives_pruning",
        statement: "beta <= 1/48",
        cmp: Comparison::AtMost,
        sides: |p, _| (ex(&p.beta), rat(1, 48)),
    },
    Condition {
        id: "rho_within_gamma",
        statement: "rho <= gamma",
        cmp: Comparison::AtMost,
        sides: |p, _| (ex(&p.rho), ex(&p.gamma)),
    },
    Condition {
        id: "single_pair_support_contradiction",
        statement: "(2 pi xi / (alpha c rho))^2 + beta^2/2 < 1/4",
        cmp: Comparison::Below,
        sides: |p, b| {
            let den = ex(&p.alpha) * ex(&p.c) * ex(&p.rho);
            let ratio = (Interval::int(2) * Interval::pi(b) * ex(&p.xi)).div(&den).expect("positive");
            (ratio.square() + ex(&p.beta).square() * rat(1, 2), rat(1, 4))
        },
    },
    Condition {
        id: "sign_flip_budget",
        statement: "c + xi^-2 delta^2 <= beta^4/256",
        cmp: Comparison::AtMost,
        sides: |p, _| (flip_budget(p), ex(&p.beta).square().square() * rat(1, 256)),
    },
    Condition {
        id: "sigma_small",
        statement: "sigma <= beta^2 eta^2 / 2^10",
        cmp: Comparison::AtMost,
        sides: |p, b| (p.sigma(b), ex(&p.beta).square() * ex(&p.eta).square() * rat(1, 1024)),
    },
    Condition {
        id: "few_values_approximation_within_gamma",
        statement: "alpha + 4 delta + 2 eta + 512 eta^-1 beta^-2 sigma + 1024 eta^-1 beta^-2 (c + xi^-2 delta^2)^(1/2) <= gamma",
        cmp: Comparison::AtMost,
        sides: |p, b| {
            let inv = (ex(&p.eta) * ex(&p.beta).square()).recip().expect("positive");
            let root = flip_budget(p).sqrt(b + 64).expect("positive");
            let lhs = ex(&p.alpha)
                + Interval::int(4) * ex(&p.delta)
                + Interval::int(2) * ex(&p.eta)
                + Interval::int(512) * &inv * p.sigma(b)
                + Interval::int(1024) * &inv * root;
            (lhs, ex(&p.gamma))
        },
    },
    Condition {
        id: "spread_beats_four_dim_fit",
        statement: "beta^2/8 + 5 delta/eta < beta / (2 sqrt(5))",
        cmp: Comparison::Below,
        sides: |p, b| {
            let lhs = ex(&p.beta).square() * rat(1, 8) + (Interval::int(5) * ex(&p.delta)).div(&ex(&p.eta)).expect("positive");
            let den = Interval::int(2) * Interval::int(5).sqrt(b).expect("positive");
            (lhs, ex(&p.beta).div(&den).expect("positive"))
        },
    },
];

/// `c + ξ^{-2} δ²`
fn flip_budget(p: &ParameterSet) -> Interval {
    let ratio = &p.delta.0 / &p.xi.0;
    Interval::exact(&p.c.0 + &ratio * &ratio)
}

pub fn condition_ids() -> Vec<&'static str> {
    CONDITIONS.iter().map(|c| c.id).collect()
}

fn decide(cond: &Condition, p: &ParameterSet) -> Result<ConditionResult> {
    let mut bits = START_BITS;
    loop {
        let (lhs, rhs) = (cond.sides)(p, bits);
        let verdict = match cond.cmp {
            Comparison::AtMost => lhs.le(&rhs),
            Comparison::Below => lhs.lt(&rhs),
        };
        if let Some(holds) = verdict {
            let rhs_mid = (rhs.lo() + rhs.hi()) / BigRational::from_integer(2.into());
            let lhs_mid = (lhs.lo() + lhs.hi()) / BigRational::from_integer(2.into());
            let slack = (BigRational::one() - lhs_mid / rhs_mid).to_f64().unwrap_or(f64::NAN);
            return Ok(ConditionResult {
                id: cond.id,
                statement: cond.statement,
                holds,
                lhs: lhs.midpoint_f64(),
                rhs: rhs.midpoint_f64(),
                slack,
                bits,
            });
        }
        if bits >= MAX_BITS {
            return Err(Error::Undecidable {
                condition: cond.id.to_string(),
                bits,
            });
        }
        bits *= 2;
    }
}

/// Decides every condition in exact arithmetic, raising the precision of the
/// irrational enclosures until each comparison is settled.
pub fn evaluate_chain(p: &ParameterSet) -> Result<ChainReport> {
    p.validate()?;
    let conditions = CONDITIONS.iter().map(|c| decide(c, p)).collect::<Result<Vec<_>>>()?;
    let binding = conditions
        .iter()
        .min_by(|a, b| a.slack.total_cmp(&b.slack))
        .expect("non-empty")
        .id;
    let sigma = p.sigma(START_BITS);
    Ok(ChainReport {
        parameters: p.clone(),
        all_hold: conditions.iter().all(|c| c.holds),
        conditions,
        binding,
        zeta: p.zeta(),
        epsilon: p.epsilon(),
        sigma_enclosure: (sigma.lo().to_f64().unwrap_or(0.0), sigma.hi().to_f64().unwrap_or(0.0)),
    })
}
