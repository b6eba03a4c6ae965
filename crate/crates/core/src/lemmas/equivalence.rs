use std::f64::consts::PI;

use super::{LemmaReport, Relation};
use crate::error::{check_dim, domain, Result};
use crate::linalg::{ProjectionPair, Vector, STRUCTURAL_TOL};
use crate::norm::{goodness, support_functional, NormSpec};
use crate::params::DISTORTION;
use crate::subspace::{analyze_subspace, SubspaceReport, TwoDSubspace};

const EQUIVALENCE_ID: &str = "goodness_equivalence";
const SUPPORT_ID: &str = "support_characterization";
const EIGEN_ID: &str = "approx_eigenvector";

/// Both directions of the equivalence between "every point of `Y` is good"
/// and "`Y` is strongly Euclidean and well complemented", at a fixed `ε`.
///
/// Direction 1: ratio and projection norm `≤ 1+ε` imply every sampled
/// deficiency is `≤ 2ε+ε²`. Direction 2: every sampled deficiency `≤ ε ≤ 1/9π²`
/// implies projection norm `≤ 1+ε` and ratio `≤ 1+3π√ε`.
pub fn verify_goodness_equivalence(
    spec: &NormSpec,
    y: &TwoDSubspace,
    epsilon: f64,
    grid: usize,
    tol: f64,
) -> Result<[LemmaReport; 2]> {
    if !(epsilon >= 0.0) {
        return domain(format!("epsilon must be non-negative, got {epsilon}"));
    }
    let report = analyze_subspace(spec, y, grid, 1.0, tol)?;
    Ok(equivalence_from(&report, epsilon, epsilon, tol))
}

/// Runs both directions with the smallest `ε` for which each precondition
/// holds on the measured subspace.
pub fn tightest_equivalence_check(
    spec: &NormSpec,
    y: &TwoDSubspace,
    grid: usize,
    tol: f64,
) -> Result<[LemmaReport; 2]> {
    let report = analyze_subspace(spec, y, grid, 1.0, tol)?;
    let eps1 = (report.euclidean_ratio - 1.0).max(report.proj_op_norm - 1.0).max(0.0);
    let eps2 = report.worst_goodness.max(0.0);
    Ok(equivalence_from(&report, eps1, eps2, tol))
}

fn equivalence_from(r: &SubspaceReport, eps1: f64, eps2: f64, tol: f64) -> [LemmaReport; 2] {
    let ratio = r.euclidean_ratio;
    let pn = r.proj_op_norm;
    let worst = r.worst_goodness;

    let inst1 = format!("strong euclidean and complemented => good, eps = {eps1:e}");
    let first = if ratio <= 1.0 + eps1 + tol && pn <= 1.0 + eps1 + tol {
        LemmaReport::check(EQUIVALENCE_ID, inst1, Relation::AtMost, 2.0 * eps1 + eps1 * eps1, worst, tol)
    } else {
        LemmaReport::not_applicable(
            EQUIVALENCE_ID,
            inst1,
            format!("euclidean ratio {ratio} or projection norm {pn} exceeds 1 + eps"),
        )
    };

    let inst2 = format!("good => strong euclidean and complemented, eps = {eps2:e}");
    let second = if eps2 > 1.0 / (9.0 * PI * PI) {
        LemmaReport::not_applicable(EQUIVALENCE_ID, inst2, format!("eps = {eps2} exceeds 1/(9 pi^2)"))
    } else if worst > eps2 + tol {
        LemmaReport::not_applicable(EQUIVALENCE_ID, inst2, format!("worst deficiency {worst} exceeds eps"))
    } else {
        let ratio_bound = 1.0 + 3.0 * PI * eps2.sqrt();
        LemmaReport::check(EQUIVALENCE_ID, inst2, Relation::AtMost, 1.0 + eps2, pn, tol)
            .with_extra_margins(&[ratio_bound - ratio])
            .with_detail("ratio_bound", ratio_bound)
    };

    [first, second].map(|rep| {
        rep.with_trials(r.grid_resolution.div_ceil(2) as u64)
            .with_detail("euclidean_ratio", ratio)
            .with_detail("proj_op_norm", pn)
            .with_detail("worst_deficiency", worst)
    })
}

/// `((1+δ)(1+2δ)/(1−Cδ) + 2Cδ) − 1`, the deficiency allowed for a point whose
/// normalized support functional is within `δ`.
pub fn converse_epsilon(delta: f64, c: f64) -> f64 {
    (1.0 + delta) * (1.0 + 2.0 * delta) / (1.0 - c * delta) + 2.0 * c * delta - 1.0
}

/// Links goodness of `x` with closeness of `x` to its own support functional.
///
/// With `z` the support functional rescaled to `|z| = |x|`: if `|x − z| ≤ δ|x|`
/// and `Cδ < 1` the deficiency is at most [`converse_epsilon`]. Otherwise, if
/// `x` is not `δ²/8C²`-good, the dual witness certifies it.
pub fn verify_support_characterization(spec: &NormSpec, x: &Vector, delta: f64) -> Result<LemmaReport> {
    check_dim(spec.dim(), x.len())?;
    if x.norm() == 0.0 {
        return domain("support characterization at the origin");
    }
    if !(delta > 0.0) {
        return domain(format!("delta must be positive, got {delta}"));
    }
    let instance = format!("delta = {delta}");
    if !spec.is_strongly_2_euclidean() {
        return Ok(LemmaReport::not_applicable(SUPPORT_ID, instance, "norm is not 2-equivalent to |.|"));
    }
    let c = DISTORTION as f64;
    let r = x.norm();
    let f = support_functional(spec, x, None)?.f;
    let z = &f * (r / f.norm());
    let d = (x - &z).norm() / r;
    let cert = goodness(spec, x, 1e-9)?;
    let deficiency = cert.raw_deficiency.max(0.0);

    let report = if d <= delta && c * delta < 1.0 {
        LemmaReport::check(SUPPORT_ID, instance, Relation::AtMost, converse_epsilon(delta, c), deficiency, 1e-9)
    } else {
        let threshold = delta * delta / (8.0 * c * c);
        let unit = x / r;
        let witnessed = unit.dot(&cert.witness) * spec.eval(&unit) - 1.0;
        if witnessed > threshold {
            LemmaReport::check(SUPPORT_ID, instance, Relation::AtLeast, threshold, witnessed, 0.0)
                .with_detail("delta_equivalent", (8.0 * c * c * witnessed).sqrt())
        } else {
            LemmaReport::not_applicable(
                SUPPORT_ID,
                instance,
                "x is delta^2/8C^2-good but not delta-close to its own support functional",
            )
        }
    };
    Ok(report.with_detail("support_distance", d).with_detail("deficiency", deficiency))
}

/// If `|Ay − νy|² = τ ≤ 1/4` then `min(|Py|², |Qy|²) ≤ 2τ`.
pub fn verify_approx_eigenvector(proj: &ProjectionPair, y: &Vector, nu: f64) -> Result<LemmaReport> {
    check_dim(proj.dim(), y.len())?;
    if (y.norm() - 1.0).abs() > STRUCTURAL_TOL {
        return domain(format!("expected a unit vector, |y| = {}", y.norm()));
    }
    let py = proj.apply_p(y);
    let ay = y + &py;
    let tau = (ay - y * nu).norm_squared();
    let instance = format!("nu = {nu}");
    if tau > 0.25 {
        return Ok(LemmaReport::not_applicable(EIGEN_ID, instance, format!("tau = {tau} exceeds 1/4")));
    }
    let measured = py.norm_squared().min(proj.apply_q(y).norm_squared());
    Ok(LemmaReport::check(EIGEN_ID, instance, Relation::AtMost, 2.0 * tau, measured, 1e-12).with_detail("tau", tau))
}
