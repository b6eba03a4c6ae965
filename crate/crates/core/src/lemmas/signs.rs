use std::collections::HashSet;
use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use rand::Rng;

use super::{aggregate, mc_count, standard_error, LemmaReport, Relation};
use crate::error::{check_dim, domain, Result};
use crate::linalg::{distance_to_subspace, haar_frame_with, Frame, Vector};
use crate::norm::sign0;
use crate::seed::Seed;
use crate::subspace::{e_set, small_count, SignSetAnalysis, TwoDSubspace};

const CONTINUITY_ID: &str = "sign_continuity";
const TYPICALITY_ID: &str = "typicality";
const TWO_SIGN_ID: &str = "two_sign_vectors";
const LAMBDA_ID: &str = "find_lambda";
const ORTHONORMAL_ID: &str = "approx_orthonormal";
const SPREAD_ID: &str = "sigma_spread";

/// Indices with `|xᵢ| ≥ ξ n^{-1/2}` whose sign differs in `y` number at most
/// `ξ^{-2} |x − y|² n`.
pub fn verify_sign_continuity(x: &Vector, y: &Vector, xi: f64) -> Result<LemmaReport> {
    check_dim(x.len(), y.len())?;
    if !(xi > 0.0) {
        return domain(format!("xi must be positive, got {xi}"));
    }
    let n = x.len() as f64;
    let threshold = xi / n.sqrt();
    let count = x
        .iter()
        .zip(y.iter())
        .filter(|(a, b)| a.abs() >= threshold && sign0(**a) != sign0(**b))
        .count();
    let delta2 = (x - y).norm_squared();
    let bound = delta2 * n / (xi * xi);
    Ok(
        LemmaReport::check(CONTINUITY_ID, format!("n = {}, xi = {xi}", x.len()), Relation::AtMost, bound, count as f64, 0.0)
            .with_detail("delta", delta2.sqrt()),
    )
}

/// Fraction of uniform `θ` with at least `c|E|` small coordinates of `x(θ)`
/// inside `E`, compared with `ξ/(αc)`.
pub fn verify_typicality_probability(
    y: &TwoDSubspace,
    xi: f64,
    c: f64,
    alpha: f64,
    theta_trials: u64,
    seed: Seed,
) -> Result<LemmaReport> {
    if !(xi >= 0.0 && xi < 1.0 && c > 0.0 && c < 1.0) {
        return domain(format!("need 0 <= xi < 1 and 0 < c < 1, got xi = {xi}, c = {c}"));
    }
    if theta_trials == 0 {
        return domain("at least one trial is required");
    }
    let e = e_set(y, alpha)?;
    let instance = format!("n = {}, xi = {xi}, c = {c}, alpha = {alpha}", y.dim());
    if e.is_empty() {
        return Ok(LemmaReport::not_applicable(TYPICALITY_ID, instance, "E is empty"));
    }
    let needed = c * e.len() as f64;
    let failures = mc_count(theta_trials, seed, TYPICALITY_ID, |rng| {
        let theta = rng.random::<f64>() * TAU;
        small_count(y, &e, theta, xi) as f64 >= needed
    });
    let freq = failures as f64 / theta_trials as f64;
    let bound = xi / (alpha * c);
    Ok(LemmaReport::check(
        TYPICALITY_ID,
        instance,
        Relation::AtMost,
        bound,
        freq,
        4.0 * standard_error(bound.min(1.0), theta_trials),
    )
    .with_trials(theta_trials)
    .with_seed(seed)
    .with_detail("e_size", e.len()))
}

/// `(min_λ |u − λv|, λ*)` with `λ* = ⟨u,v⟩/|v|²`.
fn projection_residual(u: &[f64], v: &[f64]) -> (f64, f64) {
    let vv: f64 = v.iter().map(|a| a * a).sum();
    let lambda = u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / vv;
    let res = u.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
    (res, lambda)
}

/// `(min, bound, r, s)` for sign vectors on a common support.
fn two_sign_core(u: &[f64], v: &[f64]) -> (f64, f64, usize, usize) {
    let n = u.len();
    let m = u.iter().filter(|a| **a != 0.0).count();
    let r = u.iter().zip(v).filter(|(a, b)| **a != 0.0 && a == b).count();
    let s = m - r;
    let (min, _) = projection_residual(u, v);
    let bound = 2.0 * ((r * s) as f64 / (m * n) as f64).sqrt();
    (min, bound, r, s)
}

/// Two vectors taking the values `±n^{-1/2}` on a common set `E` of size `m`
/// and agreeing on `r` of its coordinates satisfy
/// `min_λ |u − λv| ≥ 2 (rs/mn)^{1/2}` with `s = m − r`.
pub fn verify_two_sign_vectors(u: &Vector, v: &Vector) -> Result<LemmaReport> {
    check_dim(u.len(), v.len())?;
    let n = u.len();
    let level = 1.0 / (n as f64).sqrt();
    for (a, b) in u.iter().zip(v.iter()) {
        let on = |t: f64| (t.abs() - level).abs() <= 1e-12 * level;
        if (*a == 0.0) != (*b == 0.0) || (*a != 0.0 && !(on(*a) && on(*b))) {
            return domain("entries must be ±n^{-1/2} on a common support and zero elsewhere");
        }
    }
    if u.iter().all(|a| *a == 0.0) {
        return domain("common support is empty");
    }
    let (min, bound, r, s) = two_sign_core(u.as_slice(), v.as_slice());
    Ok(LemmaReport::check(TWO_SIGN_ID, format!("n = {n}, r = {r}, s = {s}"), Relation::AtLeast, bound, min, 1e-12))
}

/// Every pair of sign patterns on all `n` coordinates, for each `n ≤ n_max`;
/// one report per `n` with the worst case.
pub fn exhaustive_two_sign_vectors(n_max: usize) -> Vec<LemmaReport> {
    use rayon::prelude::*;
    (1..=n_max)
        .map(|n| {
            let level = 1.0 / (n as f64).sqrt();
            let vec_of = |bits: u32| -> Vec<f64> {
                (0..n).map(|i| if bits >> i & 1 == 1 { -level } else { level }).collect()
            };
            let patterns = 1u32 << n;
            let (worst_gap, worst_min, worst_bound, violations) = (0..patterns)
                .into_par_iter()
                .map(|a| {
                    let u = vec_of(a);
                    let mut acc = (f64::INFINITY, 0.0, 0.0, 0usize);
                    for b in 0..patterns {
                        let (min, bound, _, _) = two_sign_core(&u, &vec_of(b));
                        if min - bound < -1e-12 {
                            acc.3 += 1;
                        }
                        if min - bound < acc.0 {
                            acc = (min - bound, min, bound, acc.3);
                        }
                    }
                    acc
                })
                .reduce(
                    || (f64::INFINITY, 0.0, 0.0, 0),
                    |x, y| {
                        let v = x.3 + y.3;
                        if y.0 < x.0 {
                            (y.0, y.1, y.2, v)
                        } else {
                            (x.0, x.1, x.2, v)
                        }
                    },
                );
            let cases = u64::from(patterns) * u64::from(patterns);
            let mut rep = LemmaReport::check(
                TWO_SIGN_ID,
                format!("exhaustive n = {n}"),
                Relation::AtLeast,
                worst_bound,
                worst_min,
                1e-12,
            )
            .with_trials(cases)
            .with_detail("violations", violations);
            rep.margin = worst_gap;
            rep
        })
        .collect()
}

/// For orthogonal `x, y`, `u = ax + by` and `v = cx + dy`:
/// `|u − λ*v| ≤ |x||y||ad − bc| / |v|` at `λ* = (ac|x|² + bd|y|²)/|v|²`.
pub fn verify_find_lambda(a: f64, b: f64, c: f64, d: f64, x: &Vector, y: &Vector) -> Result<LemmaReport> {
    find_lambda_with_tol(a, b, c, d, x, y, 1e-12)
}

fn find_lambda_with_tol(a: f64, b: f64, c: f64, d: f64, x: &Vector, y: &Vector, tol: f64) -> Result<LemmaReport> {
    check_dim(x.len(), y.len())?;
    if x.dot(y).abs() > 1e-10 {
        return domain(format!("x and y must be orthogonal, <x,y> = {}", x.dot(y)));
    }
    let instance = format!("n = {}, det = {}", x.len(), a * d - b * c);
    let u = x * a + y * b;
    let v = x * c + y * d;
    let vv = v.norm_squared();
    if vv == 0.0 {
        return Ok(LemmaReport::not_applicable(LAMBDA_ID, instance, "v = 0"));
    }
    let (x2, y2) = (x.norm_squared(), y.norm_squared());
    let lambda = (a * c * x2 + b * d * y2) / vv;
    let residual = (&u - &v * lambda).norm();
    let bound = (x2 * y2).sqrt() * (a * d - b * c).abs() / vv.sqrt();
    Ok(LemmaReport::check(LAMBDA_ID, instance, Relation::AtMost, bound, residual, tol).with_detail("lambda", lambda))
}

/// Random coefficients and random orthogonal pairs of random lengths.
pub fn find_lambda_sweep(n: usize, trials: u64, seed: Seed, tol: f64) -> Result<LemmaReport> {
    if n < 2 {
        return domain("orthogonal pairs need n >= 2");
    }
    let mut reports = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = seed.derive(LAMBDA_ID, t).rng();
        let f = haar_frame_with(&mut rng, n, 2);
        let x = f.column(0) * rng.random_range(0.1..10.0);
        let y = f.column(1) * rng.random_range(0.1..10.0);
        let [a, b, c, d]: [f64; 4] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        reports.push(find_lambda_with_tol(a, b, c, d, &x, &y, tol)?);
    }
    Ok(aggregate(LAMBDA_ID, format!("sweep n = {n}"), &reports, Some(seed)))
}

/// `maxᵢ d(uᵢ, W) ≥ k^{-1/2}` for an orthonormal `k`-frame `U` and a
/// subspace `W` of dimension below `k`.
pub fn verify_approx_orthonormal_instance(u: &Frame, w: &Frame) -> Result<LemmaReport> {
    check_dim(u.ambient(), w.ambient())?;
    let k = u.dim();
    if k == 0 || w.dim() >= k {
        return domain(format!("need dim W < k, got dim W = {} and k = {k}", w.dim()));
    }
    let mut max = 0.0f64;
    for i in 0..k {
        max = max.max(distance_to_subspace(&u.column(i), w)?);
    }
    Ok(LemmaReport::check(
        ORTHONORMAL_ID,
        format!("k = {k}, n = {}, dim W = {}", u.ambient(), w.dim()),
        Relation::AtLeast,
        1.0 / (k as f64).sqrt(),
        max,
        1e-9,
    ))
}

/// Alternates adversarial `W ⊂ span(U)`, where the bound is attained in
/// aggregate, with Haar-random `W`.
pub fn verify_approx_orthonormal(k: usize, n: usize, trials: u64, seed: Seed) -> Result<LemmaReport> {
    if k == 0 || k > n {
        return domain(format!("need 1 <= k <= n, got k = {k}, n = {n}"));
    }
    let mut reports = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = seed.derive(ORTHONORMAL_ID, t).rng();
        let u = haar_frame_with(&mut rng, n, k);
        let w = if t % 2 == 0 {
            let inner = haar_frame_with(&mut rng, k, k - 1);
            Frame::from_columns(n, &inner.columns().iter().map(|c| u.embed(c)).collect::<Vec<_>>())?
        } else {
            haar_frame_with(&mut rng, n, k - 1)
        };
        reports.push(verify_approx_orthonormal_instance(&u, &w)?);
    }
    Ok(aggregate(ORTHONORMAL_ID, format!("sweep k = {k}, n = {n}"), &reports, Some(seed)))
}

/// Leading `dim` left singular vectors of the matrix with columns `vectors`.
pub fn best_fit_frame(vectors: &[Vector], dim: usize) -> Result<Frame> {
    let Some(first) = vectors.first() else {
        return domain("no vectors to fit");
    };
    let n = first.len();
    let m = DMatrix::from_columns(vectors);
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    if order.len() < dim {
        return domain(format!("only {} vectors for a {dim}-dimensional fit", order.len()));
    }
    let cols: Vec<Vector> = order[..dim].iter().map(|&j| u.column(j).into_owned()).collect();
    Frame::orthonormalize(n, &cols)
}

/// Sign patterns on `E` realizable as `sign(sin(θ + φᵢ))` with no zero.
fn realizable_patterns(phases: &[f64]) -> HashSet<Vec<bool>> {
    let mut cuts: Vec<f64> = phases
        .iter()
        .flat_map(|p| {
            let c = (-p).rem_euclid(PI);
            [c, c + PI]
        })
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut out = HashSet::new();
    for (i, &lo) in cuts.iter().enumerate() {
        let hi = if i + 1 < cuts.len() { cuts[i + 1] } else { cuts[0] + TAU };
        if hi - lo <= 0.0 {
            continue;
        }
        let theta = 0.5 * (lo + hi);
        out.insert(phases.iter().map(|p| (theta + p).sin() > 0.0).collect());
    }
    out
}

/// Why the analysis cannot have come from a plane, if it cannot.
fn inconsistency(a: &SignSetAnalysis) -> Option<String> {
    let Some(first) = a.sigma_samples.first() else {
        return Some("no samples".into());
    };
    let n = first.len();
    let level = 1.0 / (n as f64).sqrt();
    if a.phases.len() != a.e.len() {
        return Some("phases do not match E".into());
    }
    let realizable = realizable_patterns(&a.phases);
    for (j, s) in a.sigma_samples.iter().enumerate() {
        if s.len() != n {
            return Some(format!("sample {j} has the wrong dimension"));
        }
        let mut pattern = Vec::with_capacity(a.e.len());
        for i in 0..n {
            let inside = a.e.contains(&i);
            let ok = if inside { (s[i].abs() - level).abs() <= 1e-12 * level } else { s[i] == 0.0 };
            if !ok {
                return Some(format!("sample {j} is not a sign vector supported on E"));
            }
        }
        pattern.extend(a.e.iter().map(|&i| s[i] > 0.0));
        if !realizable.contains(&pattern) {
            return Some(format!("sample {j} is not a half-circle pattern of the phases"));
        }
    }
    if a.v.len() != 2 * a.k {
        return Some("net size does not match k".into());
    }
    for (i, p) in a.v.iter().enumerate() {
        if !a.sigma_samples.iter().any(|s| (s - p).norm() <= 1e-12 || (s + p).norm() <= 1e-12) {
            return Some(format!("net point {i} is not in ±Σ"));
        }
        for q in &a.v[..i] {
            if (p - q).norm() < a.beta - 1e-12 {
                return Some("net is not beta-separated".into());
            }
        }
    }
    None
}

/// With at least five `β`-separated antipodal pairs of sign patterns, no
/// 4-dimensional `W` comes within `β/2√5` of every sample.
pub fn verify_sigma_spread(analysis: &SignSetAnalysis, w: &Frame, beta: f64) -> Result<LemmaReport> {
    if w.dim() != 4 {
        return domain(format!("W must be 4-dimensional, got {}", w.dim()));
    }
    if !(beta > 0.0) {
        return domain(format!("beta must be positive, got {beta}"));
    }
    let instance = format!("k = {}, beta = {beta}, |E| = {}", analysis.k, analysis.e.len());
    if analysis.k < 5 {
        return Ok(LemmaReport::not_applicable(SPREAD_ID, instance, format!("k = {} < 5", analysis.k)));
    }
    if let Some(why) = inconsistency(analysis) {
        return Ok(LemmaReport::not_applicable(SPREAD_ID, instance, format!("inconsistent instance: {why}")));
    }
    let mut max = 0.0f64;
    for s in &analysis.sigma_samples {
        max = max.max(distance_to_subspace(s, w)?);
    }
    Ok(LemmaReport::check(SPREAD_ID, instance, Relation::AtLeast, beta / (2.0 * 5f64.sqrt()), max, 1e-9)
        .with_trials(analysis.sigma_samples.len() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lemmas::Status;
    use crate::linalg::sample_unit_sphere;
    use crate::subspace::{make_subspace, sigma_set};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn e(n: usize, i: usize) -> Vector {
        Vector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })
    }

    #[test]
    fn sign_continuity_examples() {
        let x = Vector::from_element(4, 0.5);
        assert_eq!(verify_sign_continuity(&x, &x, 0.3).unwrap().measured_value, 0.0);
        let mut y = x.clone();
        y[0] = -0.5;
        let r = verify_sign_continuity(&x, &y, 1.0).unwrap();
        assert_eq!((r.measured_value, r.bound_value), (1.0, 4.0));
        assert!(r.passed);
        assert_eq!(verify_sign_continuity(&x, &y, 1.01).unwrap().measured_value, 0.0);
    }

    #[test]
    fn sign_continuity_random_perturbations() {
        for t in 0..300 {
            let seed = Seed::new(1).derive("c", t);
            let x = sample_unit_sphere(32, seed);
            let noise = sample_unit_sphere(32, seed.derive("n", 0)) * (0.3 * (t % 7) as f64 / 7.0);
            let r = verify_sign_continuity(&x, &(&x + noise), 0.5).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn typicality_matches_arc_measure() {
        let y = make_subspace(&e(2, 0), &e(2, 1)).unwrap();
        let trials = 400_000;
        let r = verify_typicality_probability(&y, 0.1, 0.5, 0.1, trials, Seed::new(2)).unwrap();
        assert!(r.passed);
        let a = 0.1 / 2f64.sqrt();
        let exact = 4.0 * a.asin() / PI;
        assert!((r.measured_value - exact).abs() <= 4.0 * standard_error(exact, trials));

        let r = verify_typicality_probability(&y, 0.0, 0.5, 0.1, 1000, Seed::new(2)).unwrap();
        assert_eq!(r.measured_value, 0.0);
        let r = verify_typicality_probability(&y, 0.9, 0.5, 0.1, 1000, Seed::new(2)).unwrap();
        assert!(r.bound_value >= 1.0 && r.passed);
        let r = verify_typicality_probability(&y, 0.1, 0.5, 100.0, 1000, Seed::new(2)).unwrap();
        assert_eq!(r.status, Status::NotApplicable);
    }

    #[test]
    fn two_sign_examples() {
        let u = Vector::from_element(4, 0.5);
        let v = Vector::from_vec(vec![0.5, 0.5, -0.5, -0.5]);
        let r = verify_two_sign_vectors(&u, &v).unwrap();
        assert!((r.measured_value - 1.0).abs() < 1e-15 && (r.bound_value - 1.0).abs() < 1e-15);
        assert!(r.passed);
        let r = verify_two_sign_vectors(&u, &u).unwrap();
        assert!(r.measured_value < 1e-15 && r.bound_value == 0.0);
        let r = verify_two_sign_vectors(&u, &(-&u)).unwrap();
        assert!(r.measured_value < 1e-15 && r.bound_value == 0.0);
        assert!(verify_two_sign_vectors(&u, &Vector::from_vec(vec![0.5, 0.5, 0.1, -0.5])).is_err());
        assert!(verify_two_sign_vectors(&u, &Vector::from_vec(vec![0.5, 0.5, 0.0, -0.5])).is_err());
    }

    #[test]
    fn two_sign_with_partial_support() {
        let l = 1.0 / 3.0;
        let u = Vector::from_vec(vec![l, l, -l, l, 0.0, 0.0, l, 0.0, 0.0]);
        let v = Vector::from_vec(vec![l, -l, -l, -l, 0.0, 0.0, l, 0.0, 0.0]);
        let r = verify_two_sign_vectors(&u, &v).unwrap();
        assert!(r.passed);
        assert!((r.bound_value - 2.0 * (6.0f64 / 45.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exhaustive_small_dimensions() {
        let reps = exhaustive_two_sign_vectors(6);
        assert_eq!(reps.len(), 6);
        for r in &reps {
            assert!(r.passed, "{r:?}");
            assert_eq!(r.details["violations"], 0);
        }
        assert_eq!(reps[5].trials, 4096);
    }

    /// Minimum of `|u − λv|²` over an evenly spaced `λ` grid.
    fn grid_min_sq(u: &[f64], v: &[f64], lo: f64, hi: f64, points: usize) -> f64 {
        (0..points)
            .map(|k| {
                let lam = lo + (hi - lo) * k as f64 / (points - 1) as f64;
                u.iter().zip(v).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn closed_form_minimizers_match_grid_search() {
        let mut rng = Seed::new(3).rng();
        for _ in 0..3 {
            let n = 8;
            let l = 1.0 / (n as f64).sqrt();
            let u: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { l } else { -l }).collect();
            let v: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { l } else { -l }).collect();
            let (min, _) = projection_residual(&u, &v);
            assert!((grid_min_sq(&u, &v, -2.0, 2.0, 1_000_000) - min * min).abs() < 1e-9);

            let f = Frame::random(6, 2, Seed::new(rng.random())).unwrap();
            let x = f.column(0) * 2.0;
            let y = f.column(1) * 0.5;
            let [a, b, c, d]: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            let r = verify_find_lambda(a, b, c, d, &x, &y).unwrap();
            let u = &x * a + &y * b;
            let v = &x * c + &y * d;
            let reach = 1.01 * u.norm() / v.norm();
            let g = grid_min_sq(u.as_slice(), v.as_slice(), -reach, reach, 1_000_000);
            assert!((g - r.measured_value.powi(2)).abs() < 1e-9, "{g} {}", r.measured_value);
        }
    }

    #[test]
    fn find_lambda_examples() {
        let r = verify_find_lambda(1.0, 0.0, 0.0, 1.0, &e(3, 0), &e(3, 1)).unwrap();
        assert_eq!(r.details["lambda"], 0.0);
        assert_eq!((r.measured_value, r.bound_value), (1.0, 1.0));
        assert!(r.passed);
        let r = verify_find_lambda(2.0, 4.0, 1.0, 2.0, &e(3, 0), &e(3, 1)).unwrap();
        assert!(r.measured_value < 1e-15 && r.bound_value == 0.0);
        let r = verify_find_lambda(1.0, 1.0, 0.0, 0.0, &e(3, 0), &e(3, 1)).unwrap();
        assert_eq!(r.status, Status::NotApplicable);
        assert!(verify_find_lambda(1.0, 0.0, 0.0, 1.0, &e(3, 0), &(e(3, 0) + e(3, 1))).is_err());
    }

    #[test]
    fn find_lambda_sweep_has_no_violations() {
        let r = find_lambda_sweep(6, 5000, Seed::new(4), 1e-9).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.details["violations"], 0);
    }

    #[test]
    fn approx_orthonormal_examples() {
        let u = Frame::from_columns(2, &[e(2, 0), e(2, 1)]).unwrap();
        let w = Frame::from_columns(2, &[(e(2, 0) + e(2, 1)) * FRAC_1_SQRT_2]).unwrap();
        let r = verify_approx_orthonormal_instance(&u, &w).unwrap();
        assert!((r.measured_value - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(r.passed);
        let u1 = Frame::from_columns(3, &[e(3, 2)]).unwrap();
        let r = verify_approx_orthonormal_instance(&u1, &Frame::empty(3)).unwrap();
        assert_eq!((r.measured_value, r.bound_value), (1.0, 1.0));
        assert!(verify_approx_orthonormal_instance(&u1, &u1).is_err());
    }

    #[test]
    fn approx_orthonormal_sweep() {
        let r = verify_approx_orthonormal(5, 10, 4000, Seed::new(5)).unwrap();
        assert!(r.passed, "{r:?}");
        // adversarial subspaces come close to the bound
        assert!(r.margin < 0.2);
    }

    #[test]
    fn realizable_patterns_are_half_circles() {
        let phases = [0.3, 1.1, 2.0, 2.2, 4.0, 5.9];
        let pats = realizable_patterns(&phases);
        assert_eq!(pats.len(), 12);
        for p in &pats {
            let neg: Vec<bool> = p.iter().map(|b| !b).collect();
            assert!(pats.contains(&neg));
        }
        // antipodal phases share their zeros
        let spaced: Vec<f64> = (0..6).map(|i| TAU * i as f64 / 6.0 + 0.1).collect();
        let pats = realizable_patterns(&spaced);
        assert_eq!(pats.len(), 6);
        assert!(pats.iter().all(|p| p.iter().filter(|b| **b).count() == 3));
    }

    #[test]
    fn sigma_spread_on_sampled_plane() {
        let y = TwoDSubspace::random(64, Seed::new(6)).unwrap();
        let beta = 0.05;
        let a = sigma_set(&y, 0.5, 0.05, 0.5, beta, 2048).unwrap();
        assert!(a.k >= 5, "k = {}", a.k);
        let fit = best_fit_frame(&a.sigma_samples, 4).unwrap();
        let r = verify_sigma_spread(&a, &fit, beta).unwrap();
        assert!(r.passed, "{r:?}");
        let random = Frame::random(64, 4, Seed::new(7)).unwrap();
        assert!(verify_sigma_spread(&a, &random, beta).unwrap().passed);
        assert!(verify_sigma_spread(&a, &Frame::random(64, 3, Seed::new(7)).unwrap(), beta).is_err());
    }

    #[test]
    fn block_patterns_inside_w_are_inconsistent() {
        // patterns constant on four blocks of two coordinates lie in the span
        // of the block indicators, but most are not half circles
        let n = 8;
        let l = 1.0 / (n as f64).sqrt();
        let blocks = |mask: u32| Vector::from_fn(n, |i, _| if mask >> (i / 2) & 1 == 1 { l } else { -l });
        let masks = [0b0001u32, 0b0011, 0b0101, 0b0111, 0b1001];
        let mut samples = Vec::new();
        let mut v = Vec::new();
        for &m in &masks {
            samples.push(blocks(m));
            samples.push(-blocks(m));
            v.push(blocks(m));
            v.push(-blocks(m));
        }
        let phases: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64 + 0.05).collect();
        let a = SignSetAnalysis {
            e: (0..n).collect(),
            phases,
            sigma_samples: samples.clone(),
            v,
            k: 5,
            kappa: 0.0,
            beta: 0.5,
            typical_angles: 0,
            grid: 0,
        };
        let w = best_fit_frame(&samples, 4).unwrap();
        for s in &samples {
            assert!(distance_to_subspace(s, &w).unwrap() < 1e-12);
        }
        let r = verify_sigma_spread(&a, &w, 0.5).unwrap();
        assert_eq!(r.status, Status::NotApplicable);
        assert!(r.details["reason"].as_str().unwrap().contains("inconsistent"));
    }
}
