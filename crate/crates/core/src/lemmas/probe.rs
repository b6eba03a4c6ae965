use rayon::prelude::*;
use serde::Serialize;

use super::{LemmaReport, Relation};
use crate::error::{domain, Result};
use crate::norm::NormSpec;
use crate::seed::Seed;
use crate::subspace::{analyze_subspace, SubspaceReport, TwoDSubspace};

const PROBE_ID: &str = "counterexample_probe";

/// `α` used for the `E` set recorded with each probed subspace.
pub const PROBE_ALPHA: f64 = 1.0 / (1u64 << 40) as f64;

/// Consistency tolerance for the projection-norm cross-check.
const PROBE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct ProbeOutcome {
    pub report: LemmaReport,
    pub subspaces: Vec<SubspaceReport>,
    /// Smallest worst-case deficiency over the probed subspaces.
    pub floor: f64,
    pub argmin: Option<usize>,
    pub enclosure_width: f64,
    /// Subspaces whose analysis failed, with the error.
    pub errors: Vec<(usize, String)>,
}

/// Worst-case goodness over Haar-random planes. The floor is recorded as
/// evidence, together with whether it exceeds the grid enclosure width.
/// Subspace `t` is drawn from `seed.derive("probe", t)`.
pub fn verify_counterexample_probe(spec: &NormSpec, subspace_trials: usize, grid: usize, seed: Seed) -> Result<ProbeOutcome> {
    if subspace_trials == 0 {
        return domain("at least one subspace is required");
    }
    let n = spec.dim();
    let results: Vec<Result<SubspaceReport>> = (0..subspace_trials)
        .into_par_iter()
        .map(|t| {
            let y = TwoDSubspace::random(n, seed.derive("probe", t as u64))?;
            analyze_subspace(spec, &y, grid, PROBE_ALPHA, PROBE_TOL)
        })
        .collect();
    let mut subspaces = Vec::with_capacity(subspace_trials);
    let mut errors = Vec::new();
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(rep) => subspaces.push(rep),
            Err(e @ crate::Error::DimensionMismatch { .. }) | Err(e @ crate::Error::Domain(_)) => return Err(e),
            Err(e) => errors.push((t, e.to_string())),
        }
    }
    let argmin = subspaces
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.worst_goodness.total_cmp(&b.1.worst_goodness))
        .map(|(i, _)| i);
    let floor = argmin.map_or(f64::NAN, |i| subspaces[i].worst_goodness);
    let width = subspaces.iter().map(|s| s.enclosure_width).fold(0.0, f64::max);
    let mean = subspaces.iter().map(|s| s.worst_goodness).sum::<f64>() / subspaces.len().max(1) as f64;
    let report = LemmaReport::check(
        PROBE_ID,
        format!("n = {n}, eta = {}, subspaces = {subspace_trials}, grid = {grid}", spec.eta()),
        Relation::AtLeast,
        0.0,
        floor,
        0.0,
    )
    .evidence()
    .with_trials(subspace_trials as u64)
    .with_seed(seed)
    .with_detail("floor", floor)
    .with_detail("mean_worst_deficiency", mean)
    .with_detail("enclosure_width", width)
    .with_detail("floor_exceeds_enclosure", floor > width)
    .with_detail("analysis_errors", errors.len());
    Ok(ProbeOutcome {
        report,
        subspaces,
        floor,
        argmin,
        enclosure_width: width,
        errors,
    })
}
