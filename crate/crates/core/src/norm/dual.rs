use serde::Serialize;

use super::ascent::{maximize_ratio, AscentOptions, AscentResult};
use super::NormSpec;
use crate::error::{check_dim, domain, Error, Result};
use crate::linalg::{sample_unit_sphere_with, Vector};
use crate::seed::Seed;

/// A two-sided estimate of `‖z‖* = sup{⟨z,y⟩ : ‖y‖ ≤ 1}`.
#[derive(Debug, Clone, Serialize)]
pub struct DualNorm {
    /// Certified upper bound, returned as the value.
    pub value: f64,
    /// `⟨z, maximizer⟩`, a lower bound.
    pub lower: f64,
    /// Feasible point with `‖maximizer‖ = 1`.
    pub maximizer: Vector,
    pub iterations: usize,
}

/// Dual norm of `z`, bracketed to within `tol · |z|`.
pub fn dual_norm(spec: &NormSpec, z: &Vector, tol: f64) -> Result<DualNorm> {
    DualSolver::new(spec).solve(z, tol)
}

const INNER_MAX_ITER: usize = 400;
const OUTER_MAX_ITER: usize = 100;
/// `2/(L+μ)` for the box QP, whose Hessian `I − P/2` has spectrum in `{1/2, 1}`.
const INNER_STEP: f64 = 4.0 / 3.0;

/// Dual-norm solver that keeps the last split as a warm start, which pays off
/// when it is called on a sequence of nearby functionals.
///
/// The dual unit ball of a sum of two norms is the Minkowski sum of the two
/// dual balls, so
///
/// ```text
/// ‖z‖* = min_t { t : z = z₁ + z₂, ⟨z₁, A⁻¹z₁⟩^{1/2} ≤ t, |z₂|_∞ ≤ t η n^{-1/2} }.
/// ```
///
/// For fixed `t` the best `z₂` solves a box-constrained quadratic program;
/// `g(t) = min ‖z − z₂‖_{A⁻¹}` is convex and decreasing, and the root of
/// `g(t) = t` is found by Newton's method started from a lower bound. The
/// maximizer is recovered as `y ∝ A⁻¹(z − z₂)`.
#[derive(Debug, Clone)]
pub struct DualSolver<'a> {
    spec: &'a NormSpec,
    warm: Option<Vector>,
}

impl<'a> DualSolver<'a> {
    pub fn new(spec: &'a NormSpec) -> Self {
        Self { spec, warm: None }
    }

    pub fn solve(&mut self, z: &Vector, tol: f64) -> Result<DualNorm> {
        check_dim(self.spec.dim(), z.len())?;
        let scale = z.norm();
        if scale == 0.0 {
            return domain("dual norm requested for the zero functional");
        }
        let w = self.spec.l1_weight();
        if w == 0.0 {
            return Ok(self.closed_form(z));
        }

        // Lower bound from the quadratic part alone.
        let y0 = self.spec.apply_a_inv(z);
        let mut t = z.dot(&y0) / self.spec.eval(&y0);
        let mut lo = t;
        let mut hi = scale;

        let mut z2 = match self.warm.take() {
            Some(prev) if prev.len() == z.len() => prev,
            _ => Vector::zeros(z.len()),
        };
        let mut iterations = 0;
        let mut g = 0.0;
        let mut y = y0;
        for _ in 0..OUTER_MAX_ITER {
            let (gt, yt, inner) = self.inner(z, t * w, &mut z2);
            iterations += inner;
            g = gt;
            y = yt;
            let phi = g - t;
            if phi >= 0.0 {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
            if phi.abs() <= 1e-15 * t.max(scale * 1e-3) {
                break;
            }
            // g'(t) = -<z₂, y>/(t g)
            let slope = if t > 0.0 && g > 0.0 { z2.dot(&y) / (t * g) } else { 0.0 };
            let mut next = t + phi / (1.0 + slope.max(0.0));
            if !(next > lo && next < hi) || next == t {
                next = 0.5 * (lo + hi);
            }
            if (hi - lo) <= 1e-16 * hi {
                break;
            }
            t = next;
        }

        let upper = g.max(t);
        let value_lo = z.dot(&y) / self.spec.eval(&y);
        let maximizer = &y / self.spec.eval(&y);
        self.warm = Some(z2);
        if upper - value_lo > tol * scale {
            return Err(Error::NonConvergence {
                context: "dual norm",
                lower: value_lo,
                upper,
            });
        }
        Ok(DualNorm {
            value: upper,
            lower: value_lo,
            maximizer,
            iterations,
        })
    }

    fn closed_form(&self, z: &Vector) -> DualNorm {
        let y = self.spec.apply_a_inv(z);
        let value = z.dot(&y).max(0.0).sqrt();
        let ny = self.spec.eval(&y);
        DualNorm {
            value,
            lower: z.dot(&y) / ny,
            maximizer: y / ny,
            iterations: 0,
        }
    }

    /// Projected gradient on `min ½‖z − z₂‖²_{A⁻¹}` over `|z₂|_∞ ≤ radius`.
    /// Returns `(‖z − z₂‖_{A⁻¹}, A⁻¹(z − z₂), iterations)`.
    fn inner(&self, z: &Vector, radius: f64, z2: &mut Vector) -> (f64, Vector, usize) {
        clip(z2, radius);
        let zmax = z.amax();
        let mut iters = 0;
        loop {
            let r = z - &*z2;
            let y = self.spec.apply_a_inv(&r);
            iters += 1;
            let mut change = 0.0f64;
            for (zi, yi) in z2.iter_mut().zip(y.iter()) {
                let next = (*zi + INNER_STEP * yi).clamp(-radius, radius);
                change = change.max((next - *zi).abs());
                *zi = next;
            }
            if change <= 1e-16 * zmax || iters >= INNER_MAX_ITER {
                let r = z - &*z2;
                let y = self.spec.apply_a_inv(&r);
                return (r.dot(&y).max(0.0).sqrt(), y, iters);
            }
        }
    }
}

fn clip(v: &mut Vector, radius: f64) {
    for x in v.iter_mut() {
        *x = x.clamp(-radius, radius);
    }
}

/// Direct maximization of `⟨z, y⟩ / ‖y‖` by multistart projected ascent,
/// independent of the splitting used by [`dual_norm`]. Starts are `z`
/// itself plus `starts − 1` uniform random directions.
pub fn dual_norm_by_ascent(
    spec: &NormSpec,
    z: &Vector,
    starts: usize,
    seed: Seed,
    opts: &AscentOptions,
) -> Result<AscentResult> {
    check_dim(spec.dim(), z.len())?;
    if z.norm() == 0.0 {
        return domain("dual norm requested for the zero functional");
    }
    let mut rng = seed.rng();
    let mut inits = vec![z.clone()];
    inits.extend((1..starts.max(1)).map(|_| sample_unit_sphere_with(&mut rng, z.len())));
    let numerator = |y: &Vector| (z.dot(y), z.clone());
    Ok(maximize_ratio(spec, &numerator, &inits, opts))
}
