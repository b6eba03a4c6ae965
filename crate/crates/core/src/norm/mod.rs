//! The norm `‖x‖ = ⟨x, (I+P)x⟩^{1/2} + η n^{-1/2} ‖x‖₁`, its dual, its support
//! functionals, and the goodness functional built on top of them.

mod ascent;
mod dual;
mod goodness;

pub use ascent::{maximize_ratio, AscentOptions, AscentResult, Numerator};
pub use dual::{dual_norm, dual_norm_by_ascent, DualNorm, DualSolver};
pub use goodness::{goodness, goodness_with, rank_one_projection_norm, GoodnessCertificate, DEFAULT_GOODNESS_TOL};

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::{check_dim, domain, Result};
use crate::linalg::{default_rank, sample_projection, ProjectionPair, Vector};
use crate::seed::Seed;

/// `η` used for desk-scale experiments.
pub const DESK_ETA: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NormSpec {
    proj: ProjectionPair,
    eta: f64,
    /// `η n^{-1/2}`
    weight: f64,
}

impl NormSpec {
    pub fn new(proj: ProjectionPair, eta: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return domain(format!("eta must be finite and non-negative, got {eta}"));
        }
        let n = proj.dim();
        Ok(Self {
            weight: eta / (n as f64).sqrt(),
            proj,
            eta,
        })
    }

    /// Plain Euclidean norm (`P = 0`, `η = 0`).
    pub fn euclidean(n: usize) -> Self {
        Self::new(ProjectionPair::zero(n), 0.0).expect("eta 0 is valid")
    }

    /// Haar-random projection of rank `⌊n/2⌋`.
    pub fn sample(n: usize, eta: f64, seed: Seed) -> Result<Self> {
        Self::new(sample_projection(n, default_rank(n), seed)?, eta)
    }

    pub fn proj(&self) -> &ProjectionPair {
        &self.proj
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dim(&self) -> usize {
        self.proj.dim()
    }

    pub fn l1_weight(&self) -> f64 {
        self.weight
    }

    /// Euclidean distortion bound `C = √2 + η`.
    pub fn distortion(&self) -> f64 {
        SQRT_2 + self.eta
    }

    /// `η ≤ 2 − √2`, so that the space is strongly 2-Euclidean.
    pub fn is_strongly_2_euclidean(&self) -> bool {
        self.eta <= 2.0 - SQRT_2
    }

    pub fn apply_a(&self, x: &Vector) -> Vector {
        x + self.proj.apply_p(x)
    }

    /// `A^{-1} = I − P/2` since `P` is idempotent.
    pub fn apply_a_inv(&self, x: &Vector) -> Vector {
        x - self.proj.apply_p(x) * 0.5
    }

    pub fn norm(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.eval(x))
    }

    pub fn norm_a(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.eval_a(x))
    }

    pub(crate) fn eval_a(&self, x: &Vector) -> f64 {
        let px = self.proj.apply_p(x);
        (x.norm_squared() + x.dot(&px)).max(0.0).sqrt()
    }

    pub(crate) fn eval(&self, x: &Vector) -> f64 {
        self.eval_a(x) + self.weight * x.lp_norm(1)
    }

    /// Subgradient `Ax/‖x‖_A + η n^{-1/2} sign(x)` with `sign(0) = 0`, and the
    /// norm value. Returns the zero vector at `x = 0`.
    pub(crate) fn eval_with_gradient(&self, x: &Vector) -> (f64, Vector) {
        let ax = self.apply_a(x);
        let na = x.dot(&ax).max(0.0).sqrt();
        if na == 0.0 {
            return (0.0, Vector::zeros(x.len()));
        }
        let mut g = ax / na;
        for (gi, xi) in g.iter_mut().zip(x.iter()) {
            *gi += self.weight * sign0(*xi);
        }
        (na + self.weight * x.lp_norm(1), g)
    }
}

pub(crate) fn sign0(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Support functional `f = Ax/‖x‖_A + η n^{-1/2} s` at `base`, with `s` a
/// selection of the multivalued sign of `base`.
#[derive(Debug, Clone, Serialize)]
pub struct SupportFunctional {
    pub f: Vector,
    pub base: Vector,
    pub sign_choice: Vector,
}

/// `sign_choice` defaults to `0` at zero coordinates of `x`.
pub fn support_functional(
    spec: &NormSpec,
    x: &Vector,
    sign_choice: Option<&Vector>,
) -> Result<SupportFunctional> {
    check_dim(spec.dim(), x.len())?;
    if x.iter().all(|&v| v == 0.0) {
        return domain("support functional undefined at the origin");
    }
    let s = match sign_choice {
        Some(s) => {
            check_dim(spec.dim(), s.len())?;
            for (i, (&si, &xi)) in s.iter().zip(x.iter()).enumerate() {
                let ok = if xi != 0.0 {
                    si == sign0(xi)
                } else {
                    (-1.0..=1.0).contains(&si)
                };
                if !ok {
                    return domain(format!("sign choice {si} at coordinate {i} is inconsistent with x = {xi}"));
                }
            }
            s.clone()
        }
        None => x.map(sign0),
    };
    let ax = spec.apply_a(x);
    let na = spec.eval_a(x);
    let f = ax / na + &s * spec.l1_weight();
    Ok(SupportFunctional {
        f,
        base: x.clone(),
        sign_choice: s,
    })
}
