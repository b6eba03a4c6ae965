use nalgebra::DMatrix;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::Serialize;

use super::{mc_count, standard_error, LemmaReport, Relation, MIN_MC_TRIALS};
use crate::error::{domain, Error, Result};
use crate::linalg::{haar_frame_with, sample_projection, subspace_incidence_probability, Frame};
use crate::seed::Seed;

const VOLUME_ID: &str = "subspace_volume";
const INCIDENCE_ID: &str = "structured_incidence";
const PICK_ID: &str = "pick_gamma";

/// Largest number of structured subspaces enumerated exactly; beyond it a
/// random sample of this size is used instead.
pub const STRUCTURE_BUDGET: u64 = 100_000;

/// Largest `γ` for which the projection-selection bound is asserted.
pub const PICK_GAMMA_REGIME: f64 = 1.0 / (1u64 << 37) as f64;

/// Slack for deciding `d ≤ γ` with eigenvalue-based distances.
const DISTANCE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IncidenceMode {
    /// Unit vectors with at most `k` distinct coordinate values.
    DistinctValues,
    /// Unit vectors supported on at most `r` coordinates.
    SmallSupport,
}

/// `min(1, exp(log_prefactor) γ^exponent)`.
fn capped_bound(log_prefactor: f64, gamma: f64, exponent: i64) -> f64 {
    let log = if exponent == 0 { log_prefactor } else { log_prefactor + exponent as f64 * gamma.ln() };
    if log >= 0.0 {
        1.0
    } else {
        log.exp()
    }
}

/// Frequency of `d(x, Y) ≤ γ` for a uniform unit `x` and a fixed `m`-dimensional
/// `Y`, compared with the Beta-distribution probability (within 4 standard
/// errors) and with `min(1, 24ⁿ γ^{n−m})` from above.
pub fn mc_subspace_volume(n: usize, m: usize, gamma: f64, trials: u64, seed: Seed) -> Result<LemmaReport> {
    if trials < MIN_MC_TRIALS {
        return Err(Error::Config(format!("{trials} trials refused; at least {MIN_MC_TRIALS} are required")));
    }
    let oracle = subspace_incidence_probability(n, m, gamma)?;
    let g2 = gamma * gamma;
    let hits = mc_count(trials, seed, VOLUME_ID, |rng| {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let tail: f64 = g[m..].iter().map(|v| v * v).sum();
        let head: f64 = g[..m].iter().map(|v| v * v).sum();
        tail <= g2 * (head + tail)
    });
    let freq = hits as f64 / trials as f64;
    let bound = capped_bound(n as f64 * 24f64.ln(), gamma, (n - m) as i64);
    let tol = 4.0 * standard_error(bound, trials);
    let oracle_se = standard_error(oracle, trials);
    let oracle_margin = 4.0 * oracle_se - (freq - oracle).abs();
    let hypothesis = (n as f64 + 1.0) * 2f64.ln() + gamma.ln() >= 0.0;
    Ok(
        LemmaReport::check(VOLUME_ID, format!("n = {n}, m = {m}, gamma = {gamma:e}"), Relation::AtMost, bound, freq, tol)
            .with_extra_margins(&[oracle_margin - tol])
            .with_trials(trials)
            .with_seed(seed)
            .with_detail("hits", hits)
            .with_detail("oracle", oracle)
            .with_detail("oracle_se", oracle_se)
            .with_detail("oracle_margin", oracle_margin)
            .with_detail("hypothesis_holds", hypothesis),
    )
}

/// Orthonormal bases of the structured subspaces, or a sample of them when
/// there are more than [`STRUCTURE_BUDGET`].
fn structured_subspaces(n: usize, size: usize, mode: IncidenceMode, seed: Seed) -> (Vec<DMatrix<f64>>, bool) {
    match mode {
        IncidenceMode::SmallSupport => {
            if size >= n {
                return (vec![DMatrix::identity(n, n)], false);
            }
            let count = binomial(n, size);
            if count <= STRUCTURE_BUDGET as f64 {
                let mut out = Vec::new();
                let mut idx: Vec<usize> = (0..size).collect();
                loop {
                    out.push(support_basis(n, &idx));
                    if !next_combination(&mut idx, n) {
                        break;
                    }
                }
                (out, false)
            } else {
                let mut rng = seed.derive("structures", 0).rng();
                let out = (0..STRUCTURE_BUDGET)
                    .map(|_| {
                        let mut idx = sample_indices(&mut rng, n, size).into_vec();
                        idx.sort_unstable();
                        support_basis(n, &idx)
                    })
                    .collect();
                (out, true)
            }
        }
        IncidenceMode::DistinctValues => {
            let blocks = size.min(n);
            if stirling2(n, blocks) <= STRUCTURE_BUDGET as f64 {
                let mut out = Vec::new();
                let mut labels = vec![0usize; n];
                partitions(&mut labels, 1, 1, blocks, &mut |l| out.push(partition_basis(l, blocks)));
                (out, false)
            } else {
                let mut rng = seed.derive("structures", 0).rng();
                let mut out = Vec::with_capacity(STRUCTURE_BUDGET as usize);
                while out.len() < STRUCTURE_BUDGET as usize {
                    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..blocks)).collect();
                    if (0..blocks).all(|b| labels.contains(&b)) {
                        out.push(partition_basis(&labels, blocks));
                    }
                }
                (out, true)
            }
        }
    }
}

fn support_basis(n: usize, support: &[usize]) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(n, support.len());
    for (j, &i) in support.iter().enumerate() {
        b[(i, j)] = 1.0;
    }
    b
}

/// Normalized block indicators; disjoint blocks make them orthonormal.
fn partition_basis(labels: &[usize], blocks: usize) -> DMatrix<f64> {
    let n = labels.len();
    let mut b = DMatrix::zeros(n, blocks);
    for (i, &l) in labels.iter().enumerate() {
        b[(i, l)] = 1.0;
    }
    for mut col in b.column_iter_mut() {
        let s = col.norm();
        col /= s;
    }
    b
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Restricted growth strings with exactly `blocks` distinct labels.
fn partitions(labels: &mut [usize], pos: usize, used: usize, blocks: usize, emit: &mut impl FnMut(&[usize])) {
    let n = labels.len();
    if pos == n {
        if used == blocks {
            emit(labels);
        }
        return;
    }
    if blocks - used > n - pos {
        return;
    }
    for l in 0..=used.min(blocks - 1) {
        labels[pos] = l;
        partitions(labels, pos + 1, used.max(l + 1), blocks, emit);
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn stirling2(n: usize, k: usize) -> f64 {
    let mut row = vec![0.0f64; k + 1];
    row[0] = 1.0;
    for _ in 0..n {
        for j in (1..=k).rev() {
            row[j] = j as f64 * row[j] + row[j - 1];
        }
        row[0] = 0.0;
    }
    row[k]
}

fn any_within(structured: &[DMatrix<f64>], y: &Frame, gamma: f64) -> bool {
    structured.iter().any(|s| crate::linalg::min_sphere_distance(s, y) <= gamma + DISTANCE_SLACK)
}

/// Frequency with which the `γ`-expansion of a random `m`-dimensional subspace
/// contains a structured unit vector, compared from above with
/// `(3/γ)^k (48k)^n γ^{n−m}` (distinct values) or `288ⁿ γ^{n−m−r}` (support).
pub fn small_support_incidence(
    n: usize,
    m: usize,
    size: usize,
    gamma: f64,
    mode: IncidenceMode,
    trials: u64,
    seed: Seed,
) -> Result<LemmaReport> {
    if m < 1 || m > n {
        return domain(format!("subspace dimension {m} must lie in [1, {n}]"));
    }
    if size == 0 {
        return domain("structure size must be positive");
    }
    if !(gamma >= 0.0) {
        return domain(format!("gamma must be non-negative, got {gamma}"));
    }
    if trials == 0 {
        return domain("at least one trial is required");
    }
    let (structured, sampled) = structured_subspaces(n, size, mode, seed);
    let hits = mc_count(trials, seed, INCIDENCE_ID, |rng| any_within(&structured, &haar_frame_with(rng, n, m), gamma));
    let freq = hits as f64 / trials as f64;
    let (bound, label) = match mode {
        IncidenceMode::DistinctValues => {
            let k = size as f64;
            let log = k * (3f64.ln() - gamma.ln()) + n as f64 * (48.0 * k).ln();
            let bound = if gamma == 0.0 { 1.0 } else { capped_bound(log, gamma, n as i64 - m as i64) };
            (bound, "k")
        }
        IncidenceMode::SmallSupport => {
            (capped_bound(n as f64 * 288f64.ln(), gamma, n as i64 - m as i64 - size as i64), "r")
        }
    };
    let tol = 4.0 * standard_error(bound, trials);
    Ok(LemmaReport::check(
        INCIDENCE_ID,
        format!("{mode:?} n = {n}, m = {m}, {label} = {size}, gamma = {gamma:e}"),
        Relation::AtMost,
        bound,
        freq,
        tol,
    )
    .with_trials(trials)
    .with_seed(seed)
    .with_detail("hits", hits)
    .with_detail("structured_subspaces", structured.len())
    .with_detail("sampled_structures", sampled))
}

/// Frequency with which a random rank-`n/2` projection has `PX_{2γ}` or
/// `QX_{2γ}` containing a unit vector of support at most `n/4`, compared with
/// `(2/3)ⁿ`. The bound is asserted only for `γ ≤ 2^{-37}`.
pub fn verify_pick_gamma(n: usize, gamma: f64, trials: u64, seed: Seed) -> Result<LemmaReport> {
    if n < 4 || n % 2 != 0 {
        return domain(format!("n must be even and at least 4, got {n}"));
    }
    if !(gamma > 0.0) {
        return domain(format!("gamma must be positive, got {gamma}"));
    }
    if trials == 0 {
        return domain("at least one trial is required");
    }
    let (supports, sampled) = structured_subspaces(n, n / 4, IncidenceMode::SmallSupport, seed);
    let hits = (0..trials)
        .map(|t| -> Result<bool> {
            let proj = sample_projection(n, n / 2, seed.derive(PICK_ID, t))?;
            Ok(any_within(&supports, &proj.range_frame(), 2.0 * gamma)
                || any_within(&supports, &proj.kernel_frame(), 2.0 * gamma))
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&h| h)
        .count() as u64;
    let freq = hits as f64 / trials as f64;
    let bound = (2.0f64 / 3.0).powi(n as i32);
    let instance = format!("n = {n}, gamma = {gamma:e}");
    let report = if gamma <= PICK_GAMMA_REGIME {
        LemmaReport::check(PICK_ID, instance, Relation::AtMost, bound, freq, 4.0 * standard_error(bound, trials))
    } else {
        LemmaReport::not_applicable(PICK_ID, instance, "gamma above the small-gamma regime 2^-37")
    };
    Ok(report
        .with_trials(trials)
        .with_seed(seed)
        .with_detail("frequency", freq)
        .with_detail("hits", hits)
        .with_detail("sampled_structures", sampled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lemmas::Status;

    #[test]
    fn enumeration_counts() {
        assert_eq!(binomial(6, 2), 15.0);
        assert_eq!(stirling2(6, 3), 90.0);
        assert_eq!(stirling2(10, 3), 9330.0);
        let mut count = 0;
        partitions(&mut vec![0; 6], 1, 1, 3, &mut |_| count += 1);
        assert_eq!(count, 90);
        let (s, sampled) = structured_subspaces(6, 2, IncidenceMode::SmallSupport, Seed::new(0));
        assert_eq!(s.len(), 15);
        assert!(!sampled);
        let (s, _) = structured_subspaces(5, 2, IncidenceMode::DistinctValues, Seed::new(0));
        assert_eq!(s.len(), 15);
        for b in &s {
            assert!((b.transpose() * b - DMatrix::<f64>::identity(2, 2)).norm() < 1e-15);
        }
    }

    #[test]
    fn oversized_enumeration_falls_back_to_sampling() {
        let (s, sampled) = structured_subspaces(40, 6, IncidenceMode::SmallSupport, Seed::new(0));
        assert!(sampled);
        assert_eq!(s.len() as u64, STRUCTURE_BUDGET);
    }

    #[test]
    fn volume_matches_arcsine_law() {
        let r = mc_subspace_volume(2, 1, 0.1, 200_000, Seed::new(1)).unwrap();
        assert!(r.passed, "{r:?}");
        // P(|sin U| ≤ 0.1) for U uniform on the circle
        let exact = 2.0 * 0.1f64.asin() / std::f64::consts::PI;
        assert!((r.details["oracle"].as_f64().unwrap() - exact).abs() < 1e-12);
        assert!((r.measured_value - exact).abs() < 4.0 * standard_error(exact, 200_000));
    }

    #[test]
    fn volume_edge_cases() {
        let r = mc_subspace_volume(5, 2, 1.0, 1000, Seed::new(2)).unwrap();
        assert_eq!(r.measured_value, 1.0);
        assert_eq!(r.bound_value, 1.0);
        assert!(r.passed);
        assert!(mc_subspace_volume(2, 1, 0.1, 999, Seed::new(2)).is_err());
        let r = mc_subspace_volume(20, 10, 1e-4, 20_000, Seed::new(3)).unwrap();
        assert_eq!(r.details["hits"], 0);
        assert!(r.bound_value < 1e-12);
        assert_eq!(r.details["hypothesis_holds"], true);
        assert!(r.passed);
    }

    #[test]
    fn volume_is_reproducible() {
        let a = mc_subspace_volume(3, 1, 0.3, 40_000, Seed::new(4)).unwrap();
        let b = mc_subspace_volume(3, 1, 0.3, 40_000, Seed::new(4)).unwrap();
        assert_eq!(a.margin.to_bits(), b.margin.to_bits());
    }

    #[test]
    fn full_support_always_qualifies() {
        let r = small_support_incidence(5, 2, 5, 0.0, IncidenceMode::SmallSupport, 100, Seed::new(5)).unwrap();
        assert_eq!(r.measured_value, 1.0);
        assert!(r.passed);
    }

    #[test]
    fn coordinate_axes_union_of_caps() {
        // a random line is within 0.01 of the i-th axis with the Beta
        // probability; the events are disjoint at this γ
        let trials = 400_000;
        let r = small_support_incidence(6, 1, 1, 0.01, IncidenceMode::SmallSupport, trials, Seed::new(6)).unwrap();
        assert!(r.passed);
        let single = subspace_incidence_probability(6, 1, 0.01).unwrap();
        let p = 6.0 * single;
        assert!((r.measured_value - p).abs() <= 4.0 * standard_error(p, trials), "{} vs {p}", r.measured_value);
    }

    #[test]
    fn constant_vectors_single_cap() {
        let trials = 200_000;
        let r = small_support_incidence(6, 3, 1, 0.05, IncidenceMode::DistinctValues, trials, Seed::new(7)).unwrap();
        let p = subspace_incidence_probability(6, 3, 0.05).unwrap();
        assert!((r.measured_value - p).abs() <= 4.0 * standard_error(p, trials).max(1.0 / trials as f64));
        assert!(r.passed);
    }

    #[test]
    fn pick_gamma_regimes() {
        let r = verify_pick_gamma(8, PICK_GAMMA_REGIME, 500, Seed::new(8)).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.measured_value, 0.0);
        let r = verify_pick_gamma(8, 1.0, 50, Seed::new(8)).unwrap();
        assert_eq!(r.status, Status::NotApplicable);
        assert_eq!(r.details["frequency"], 1.0);
        assert!(verify_pick_gamma(7, 0.1, 10, Seed::new(8)).is_err());
    }

    #[test]
    fn pick_gamma_frequency_is_monotone_in_n() {
        let f8 = verify_pick_gamma(8, 0.06, 1000, Seed::new(9)).unwrap().details["frequency"].as_f64().unwrap();
        let f10 = verify_pick_gamma(10, 0.06, 1000, Seed::new(9)).unwrap().details["frequency"].as_f64().unwrap();
        let se = standard_error(f8.max(f10).max(1e-3), 1000);
        assert!(f10 <= f8 + 4.0 * se, "{f8} {f10}");
    }
}
