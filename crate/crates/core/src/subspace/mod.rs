//! Two-dimensional subspaces in the sinusoidal parametrization
//! `x(θ) = u sinθ + v cosθ`, with `x(θ)ᵢ = rᵢ sin(θ + φᵢ)`.

mod signs;
mod sweep;

pub use signs::{
    prune_cascade, sigma_set, sign_decomposition, PruneOutcome, PruneStage, SignDecomposition, SignSetAnalysis,
};
pub use sweep::{
    analyze_subspace, euclidean_constant, projection_op_norm, worst_goodness, EuclideanConstant, ProjectionNorm,
    SubspaceReport, WorstGoodness, DEFAULT_GRID,
};

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{check_dim, domain, Result};
use crate::linalg::{Frame, ProjectionPair, Vector, STRUCTURAL_TOL};
use crate::seed::Seed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoDSubspace {
    u: Vector,
    v: Vector,
    r: Vec<f64>,
    phi: Vec<f64>,
}

/// Builds the parametrization from a spanning pair. Pairs that are not
/// orthonormal within `1e-10` are re-orthonormalized.
pub fn make_subspace(u: &Vector, v: &Vector) -> Result<TwoDSubspace> {
    check_dim(u.len(), v.len())?;
    if u.len() < 2 {
        return domain("a 2-D subspace needs ambient dimension at least 2");
    }
    let orthonormal = (u.norm() - 1.0).abs() <= STRUCTURAL_TOL
        && (v.norm() - 1.0).abs() <= STRUCTURAL_TOL
        && u.dot(v).abs() <= STRUCTURAL_TOL;
    let (u, v) = if orthonormal {
        (u.clone(), v.clone())
    } else {
        let f = Frame::orthonormalize(u.len(), &[u.clone(), v.clone()])?;
        (f.column(0), f.column(1))
    };
    let r = u.iter().zip(v.iter()).map(|(a, b)| a.hypot(*b)).collect();
    let phi = u
        .iter()
        .zip(v.iter())
        .map(|(a, b)| if *a == 0.0 && *b == 0.0 { 0.0 } else { b.atan2(*a).rem_euclid(TAU) })
        .collect();
    Ok(TwoDSubspace { u, v, r, phi })
}

impl TwoDSubspace {
    /// Haar-random plane.
    pub fn random(n: usize, seed: Seed) -> Result<Self> {
        Self::from_frame(&Frame::random(n, 2, seed)?)
    }

    pub fn from_frame(frame: &Frame) -> Result<Self> {
        if frame.dim() != 2 {
            return domain(format!("expected a 2-frame, got dimension {}", frame.dim()));
        }
        make_subspace(&frame.column(0), &frame.column(1))
    }

    /// Random plane inside `range(P)`.
    pub fn random_in_range(proj: &ProjectionPair, seed: Seed) -> Result<Self> {
        let range = proj.range_frame();
        let inner = Frame::random(range.dim(), 2, seed)?;
        make_subspace(&range.embed(&inner.column(0)), &range.embed(&inner.column(1)))
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn u(&self) -> &Vector {
        &self.u
    }

    pub fn v(&self) -> &Vector {
        &self.v
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.r
    }

    pub fn phases(&self) -> &[f64] {
        &self.phi
    }

    pub fn frame(&self) -> Frame {
        Frame::from_columns(self.dim(), &[self.u.clone(), self.v.clone()]).expect("stored pair is orthonormal")
    }

    /// `x(θ) = u sinθ + v cosθ`.
    pub fn point(&self, theta: f64) -> Vector {
        let (s, c) = theta.sin_cos();
        &self.u * s + &self.v * c
    }

    /// `x(θ)ᵢ` from the stored amplitude and phase.
    pub fn coordinate(&self, theta: f64, i: usize) -> f64 {
        self.r[i] * (theta + self.phi[i]).sin()
    }

    /// Coefficients of `x` in the `(u, v)` basis and the distance of `x` from
    /// the plane.
    pub fn decompose(&self, x: &Vector) -> (f64, f64, f64) {
        let a = self.u.dot(x);
        let b = self.v.dot(x);
        let rest = (x - &self.u * a - &self.v * b).norm();
        (a, b, rest)
    }
}

/// `E = {i : rᵢ ≥ α n^{-1/2}}`.
pub fn e_set(y: &TwoDSubspace, alpha: f64) -> Result<Vec<usize>> {
    if !(alpha > 0.0) {
        return domain(format!("alpha must be positive, got {alpha}"));
    }
    let threshold = alpha / (y.dim() as f64).sqrt();
    Ok((0..y.dim()).filter(|&i| y.r[i] >= threshold).collect())
}

/// `θ` is typical when (i) fewer than `c|E|` indices of `E` have
/// `|x(θ)ᵢ| < ξ n^{-1/2}`, and (ii) no index of `E` has `θ + φᵢ ≡ 0 (mod π)`.
/// Condition (ii) compares the phase sum exactly.
pub fn typical_check(y: &TwoDSubspace, theta: f64, xi: f64, c: f64, alpha: f64) -> Result<bool> {
    let e = e_set(y, alpha)?;
    Ok(is_typical(y, &e, theta, xi, c))
}

pub(crate) fn is_typical(y: &TwoDSubspace, e: &[usize], theta: f64, xi: f64, c: f64) -> bool {
    !phase_hit(y, e, theta) && (small_count(y, e, theta, xi) as f64) < c * e.len() as f64
}

pub(crate) fn small_count(y: &TwoDSubspace, e: &[usize], theta: f64, xi: f64) -> usize {
    let threshold = xi / (y.dim() as f64).sqrt();
    e.iter().filter(|&&i| y.coordinate(theta, i).abs() < threshold).count()
}

fn phase_hit(y: &TwoDSubspace, e: &[usize], theta: f64) -> bool {
    e.iter().any(|&i| (theta + y.phi[i]).rem_euclid(PI) == 0.0)
}

/// `(d(x, PX), d(x, QX)) = (|Qx|, |Px|)` for a unit vector `x`.
pub fn closeness_to_eigenspaces(proj: &ProjectionPair, x: &Vector) -> Result<(f64, f64)> {
    check_dim(proj.dim(), x.len())?;
    if (x.norm() - 1.0).abs() > STRUCTURAL_TOL {
        return domain(format!("expected a unit vector, |x| = {}", x.norm()));
    }
    Ok((proj.apply_q(x).norm(), proj.apply_p(x).norm()))
}
