use serde::Serialize;

use super::ascent::{maximize_ratio, AscentOptions};
use super::dual::DualSolver;
use super::NormSpec;
use crate::error::{check_dim, domain, Result};
use crate::linalg::{sample_unit_sphere_with, Vector};
use crate::seed::Seed;

pub const DEFAULT_GOODNESS_TOL: f64 = 1e-7;

/// `‖x'‖·‖x'‖* − 1` for `x' = x/|x|`, which is also `‖P_x‖ − 1` for the
/// orthogonal rank-one projection onto `span{x}`.
#[derive(Debug, Clone, Serialize)]
pub struct GoodnessCertificate {
    pub x: Vector,
    /// Deficiency with values below `tol` reported as `0`.
    pub deficiency: f64,
    pub raw_deficiency: f64,
    /// Unit-norm `y` attaining `⟨x', y⟩ ≈ ‖x'‖*`.
    pub witness: Vector,
    pub tol: f64,
}

impl GoodnessCertificate {
    /// `x` is γ-good when the deficiency is at most `gamma`.
    pub fn is_good(&self, gamma: f64) -> bool {
        self.deficiency <= gamma
    }
}

pub fn goodness(spec: &NormSpec, x: &Vector, tol: f64) -> Result<GoodnessCertificate> {
    goodness_with(&mut DualSolver::new(spec), spec, x, tol)
}

/// As [`goodness`], reusing a warm-started solver across calls.
pub fn goodness_with(solver: &mut DualSolver<'_>, spec: &NormSpec, x: &Vector, tol: f64) -> Result<GoodnessCertificate> {
    check_dim(spec.dim(), x.len())?;
    let r = x.norm();
    if r == 0.0 {
        return domain("goodness undefined at the origin");
    }
    let unit = x / r;
    let primal = spec.eval(&unit);
    let d = solver.solve(&unit, tol / (4.0 * primal))?;
    let raw = primal * d.value - 1.0;
    Ok(GoodnessCertificate {
        x: x.clone(),
        deficiency: if raw < tol { 0.0 } else { raw },
        raw_deficiency: raw,
        witness: d.maximizer,
        tol,
    })
}

/// `‖P_x‖ = sup_y ‖P_x y‖ / ‖y‖` for `P_x y = ⟨x', y⟩ x'`, maximized directly
/// by multistart ascent. Starts are `x'` plus `starts − 1` random directions.
pub fn rank_one_projection_norm(
    spec: &NormSpec,
    x: &Vector,
    starts: usize,
    seed: Seed,
    opts: &AscentOptions,
) -> Result<f64> {
    check_dim(spec.dim(), x.len())?;
    let r = x.norm();
    if r == 0.0 {
        return domain("projection onto the zero vector");
    }
    let unit = x / r;
    let scale = spec.eval(&unit);
    let numerator = |y: &Vector| {
        let c = unit.dot(y);
        (c.abs() * scale, &unit * (c.signum() * scale))
    };
    let mut rng = seed.rng();
    let mut inits = vec![unit.clone()];
    inits.extend((1..starts.max(1)).map(|_| sample_unit_sphere_with(&mut rng, x.len())));
    Ok(maximize_ratio(spec, &numerator, &inits, opts).value)
}
