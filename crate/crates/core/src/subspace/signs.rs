use std::cmp::Ordering;
use std::collections::HashSet;
use std::f64::consts::TAU;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{e_set, is_typical, TwoDSubspace};
use crate::error::{check_dim, domain, Error, Result};
use crate::linalg::{Vector, STRUCTURAL_TOL};
use crate::norm::{sign0, NormSpec};

#[derive(Debug, Clone, Serialize)]
pub struct SignSetAnalysis {
    pub e: Vec<usize>,
    /// `φᵢ` for `i ∈ E`, in the order of `e`.
    pub phases: Vec<f64>,
    /// Distinct vectors `n^{-1/2} P_E sign(x(θ))` over typical grid angles.
    pub sigma_samples: Vec<Vector>,
    /// Centrally symmetric `β`-separated subset; pairs are stored adjacently
    /// as `(v, −v)`.
    pub v: Vec<Vector>,
    /// Number of antipodal pairs in `v`.
    pub k: usize,
    /// Largest distance from a sample to `v`.
    pub kappa: f64,
    pub beta: f64,
    pub typical_angles: usize,
    pub grid: usize,
}

/// Collects `Σ` over the typical angles of a uniform grid on `[0, 2π)` and
/// greedily extracts a maximal centrally symmetric `β`-separated subset.
pub fn sigma_set(
    y: &TwoDSubspace,
    alpha: f64,
    xi: f64,
    c: f64,
    beta: f64,
    grid: usize,
) -> Result<SignSetAnalysis> {
    if !(beta > 0.0 && beta <= 1.0) {
        return domain(format!("beta must lie in (0, 1], got {beta}"));
    }
    if !(xi > 0.0 && xi < 1.0 && c > 0.0 && c < 1.0) {
        return domain(format!("need 0 < xi, c < 1, got xi = {xi}, c = {c}"));
    }
    if grid == 0 {
        return domain("grid must be non-empty");
    }
    let n = y.dim();
    let e = e_set(y, alpha)?;
    let scale = 1.0 / (n as f64).sqrt();
    let mut seen = HashSet::new();
    let mut samples = Vec::new();
    let mut typical_angles = 0;
    for k in 0..grid {
        let theta = TAU * k as f64 / grid as f64;
        if !is_typical(y, &e, theta, xi, c) {
            continue;
        }
        typical_angles += 1;
        let pattern: Vec<i8> = e.iter().map(|&i| sign0(y.coordinate(theta, i)) as i8).collect();
        if seen.insert(pattern.clone()) {
            let mut s = Vector::zeros(n);
            for (&i, &p) in e.iter().zip(&pattern) {
                s[i] = p as f64 * scale;
            }
            samples.push(s);
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptySigma);
    }

    let mut v: Vec<Vector> = Vec::new();
    for s in &samples {
        if v.iter().all(|m| (s - m).norm() >= beta) {
            v.push(s.clone());
            v.push(-s);
        }
    }
    let kappa = net_radius(&samples, &v);
    Ok(SignSetAnalysis {
        phases: e.iter().map(|&i| y.phases()[i]).collect(),
        e,
        k: v.len() / 2,
        sigma_samples: samples,
        v,
        kappa,
        beta,
        typical_angles,
        grid,
    })
}

fn net_radius(samples: &[Vector], v: &[Vector]) -> f64 {
    samples
        .iter()
        .map(|s| v.iter().map(|m| (s - m).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct PruneStage {
    pub threshold: f64,
    /// Representative of the removed pair, if the set was not yet separated.
    pub removed: Option<Vector>,
    pub pairs: usize,
    pub kappa: f64,
    /// `κ` bound carried through the removals: `β, 4β, 16β, 64β`.
    pub kappa_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PruneOutcome {
    pub stages: Vec<PruneStage>,
    pub v: Vec<Vector>,
    pub k: usize,
    pub kappa: f64,
    pub kappa_bound: f64,
    /// Threshold at which the remaining pairs were found separated.
    pub separated_at: Option<f64>,
    pub reduced_to_single_pair: bool,
}

/// The member of `±v` whose first non-zero coordinate is positive.
fn canonical(v: &Vector) -> Vector {
    match v.iter().find(|x| **x != 0.0) {
        Some(x) if *x < 0.0 => -v,
        _ => v.clone(),
    }
}

fn lex_cmp(a: &Vector, b: &Vector) -> Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Repeatedly tests the pairs of `V` for `3β`, `12β`, `48β` separation and,
/// while a test fails, drops the lexicographically later pair of the closest
/// two. Each removal grows the net radius bound by the threshold.
pub fn prune_cascade(analysis: &SignSetAnalysis) -> PruneOutcome {
    let beta = analysis.beta;
    let mut reps: Vec<Vector> = analysis.v.iter().step_by(2).map(canonical).collect();
    let mut bound = beta;
    let mut stages = Vec::new();
    let mut separated_at = None;
    for factor in [3.0, 12.0, 48.0] {
        if reps.len() <= 1 {
            break;
        }
        let threshold = factor * beta;
        let mut closest = (f64::INFINITY, 0, 0);
        for i in 0..reps.len() {
            for j in i + 1..reps.len() {
                let d = (&reps[i] - &reps[j]).norm().min((&reps[i] + &reps[j]).norm());
                if d < closest.0 {
                    closest = (d, i, j);
                }
            }
        }
        if closest.0 > threshold {
            separated_at = Some(threshold);
            break;
        }
        let (_, i, j) = closest;
        let drop = if lex_cmp(&reps[i], &reps[j]) == Ordering::Greater { i } else { j };
        let removed = reps.remove(drop);
        bound += threshold;
        let v = with_antipodes(&reps);
        stages.push(PruneStage {
            threshold,
            removed: Some(removed),
            pairs: reps.len(),
            kappa: net_radius(&analysis.sigma_samples, &v),
            kappa_bound: bound,
        });
    }
    let v = with_antipodes(&reps);
    PruneOutcome {
        kappa: net_radius(&analysis.sigma_samples, &v),
        k: reps.len(),
        reduced_to_single_pair: reps.len() == 1 && separated_at.is_none(),
        v,
        kappa_bound: bound,
        separated_at,
        stages,
    }
}

fn with_antipodes(reps: &[Vector]) -> Vec<Vector> {
    reps.iter().flat_map(|r| [r.clone(), -r]).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SignDecomposition {
    pub x: Vector,
    /// Point whose signs are used; equal to `x`.
    pub y: Vector,
    /// `⟨f, y⟩` for the support functional `f` at `y`, i.e. `‖y‖`.
    pub lambda: f64,
    /// `1/λ`.
    pub mu: f64,
    pub mu_at_least_third: bool,
    /// `(λ − 2/‖y‖_A)/η`; absent when `η = 0`.
    pub alpha_y: Option<f64>,
    /// `(λ − 1/‖y‖_A)/η`; absent when `η = 0`.
    pub beta_y: Option<f64>,
    /// Least-squares coefficients of `η n^{-1/2} sign(y)` on `Py` and `Qy`.
    pub coef_p: f64,
    pub coef_q: f64,
    /// Distance from `η n^{-1/2} sign(y)` to `span{Py, Qy}`.
    pub residual: f64,
    /// Distance from `η n^{-1/2} sign(y)` to `PY + QY`.
    pub residual_4d: f64,
    /// `|η n^{-1/2} sign(y) − λy + Ay/‖y‖_A|`.
    pub model_residual: f64,
}

/// Least-squares fit of the scaled sign vector of a unit `x ∈ Y`.
pub fn sign_decomposition(spec: &NormSpec, y: &TwoDSubspace, x: &Vector) -> Result<SignDecomposition> {
    check_dim(spec.dim(), y.dim())?;
    check_dim(spec.dim(), x.len())?;
    if (x.norm() - 1.0).abs() > STRUCTURAL_TOL {
        return domain(format!("expected a unit vector, |x| = {}", x.norm()));
    }
    let (_, _, off) = y.decompose(x);
    if off > STRUCTURAL_TOL {
        return domain(format!("x is at distance {off:e} from the plane"));
    }
    let n = spec.dim();
    let target = x.map(sign0) * spec.l1_weight();
    let proj = spec.proj();
    let px = proj.apply_p(x);
    let qx = proj.apply_q(x);

    let pair = DMatrix::from_columns(&[px.clone(), qx.clone()]);
    let (coefs, residual) = least_squares(&pair, &target);
    let four = DMatrix::from_columns(&[
        proj.apply_p(y.u()),
        proj.apply_p(y.v()),
        proj.apply_q(y.u()),
        proj.apply_q(y.v()),
    ]);
    let (_, residual_4d) = least_squares(&four, &target);

    let na = spec.eval_a(x);
    let lambda = spec.eval(x);
    let eta = spec.eta();
    let (alpha_y, beta_y) = if eta > 0.0 {
        (Some((lambda - 2.0 / na) / eta), Some((lambda - 1.0 / na) / eta))
    } else {
        (None, None)
    };
    let model = &target - x * lambda + spec.apply_a(x) / na;
    debug_assert_eq!(target.len(), n);
    Ok(SignDecomposition {
        x: x.clone(),
        y: x.clone(),
        lambda,
        mu: 1.0 / lambda,
        mu_at_least_third: 3.0 >= lambda,
        alpha_y,
        beta_y,
        coef_p: coefs[0],
        coef_q: coefs[1],
        residual,
        residual_4d,
        model_residual: model.norm(),
    })
}

/// Minimum-norm least squares via SVD; rank-deficient columns (such as
/// `Qx = 0`) get zero coefficients.
fn least_squares(m: &DMatrix<f64>, b: &Vector) -> (Vector, f64) {
    let svd = m.clone().svd(true, true);
    let cutoff = 1e-12 * svd.singular_values.max().max(1e-300);
    let coefs = svd.solve(b, cutoff).expect("both factors were computed");
    let residual = (b - m * &coefs).norm();
    (coefs, residual)
}
