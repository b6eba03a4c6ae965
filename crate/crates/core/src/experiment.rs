//! Seeded batch runs: configuration, orchestration of the verifiers and the
//! machine-readable report.
//!
//! All randomness derives from the master seed. Each lemma owns the stream
//! `Seed::new(seed).derive(lemma_id, 0)`; the norm is sampled from
//! `derive("projection", 0)` and the sandwich points from `derive("sandwich", i)`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lemmas::{self, IncidenceMode, LemmaReport, Relation, Status, LEMMA_IDS, MC_LEMMA_IDS};
use crate::linalg::{default_rank, sample_projection, sample_unit_sphere, Frame, ProjectionPair, Vector};
use crate::norm::{NormSpec, DESK_ETA};
use crate::params::ParameterSet;
use crate::seed::Seed;
use crate::subspace::{sigma_set, SubspaceReport, TwoDSubspace};

pub const SCHEMA_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "NORMLAB_THREADS";
pub const SANDWICH_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub eta: f64,
    /// Rank of the sampled projection; `⌊n/2⌋` when absent.
    pub rank: Option<usize>,
    pub seed: u64,
    pub subspace_trials: usize,
    pub grid_size: usize,
    pub mc_trials: u64,
    pub sandwich_points: usize,
    /// Run the norm sandwich check.
    pub sandwich: bool,
    pub lemma_selection: Vec<String>,
    pub parameter_set: Option<ParameterSet>,
    /// Replaces the default subspace-volume instances with `(n, m, γ)`.
    pub volume_m: Option<usize>,
    pub volume_gamma: Option<f64>,
    pub tol: f64,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 64,
            eta: DESK_ETA,
            rank: None,
            seed: Seed::default().master,
            subspace_trials: 200,
            grid_size: 2048,
            mc_trials: 100_000,
            sandwich_points: 10_000,
            sandwich: true,
            lemma_selection: LEMMA_IDS.iter().map(|s| s.to_string()).collect(),
            parameter_set: None,
            volume_m: None,
            volume_gamma: None,
            tol: 1e-9,
            output_path: None,
            format: OutputFormat::Json,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn selects(&self, id: &str) -> bool {
        self.lemma_selection.iter().any(|s| s == id)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be finite and non-negative, got {}", self.eta));
        }
        if let Some(r) = self.rank {
            if r > self.n {
                return bad(format!("rank {r} exceeds n = {}", self.n));
            }
        }
        if self.grid_size < 64 {
            return bad(format!("grid_size must be at least 64, got {}", self.grid_size));
        }
        let sweeps = ["goodness_equivalence", "counterexample_probe"];
        if self.grid_size < 256 && sweeps.iter().any(|id| self.selects(id)) {
            return bad(format!("grid_size must be at least 256 for subspace sweeps, got {}", self.grid_size));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.subspace_trials == 0 {
            return bad("subspace_trials must be positive".into());
        }
        if self.sandwich && self.sandwich_points == 0 {
            return bad("sandwich_points must be positive".into());
        }
        for id in &self.lemma_selection {
            if !LEMMA_IDS.contains(&id.as_str()) {
                return bad(format!("unknown lemma id `{id}`; valid ids: {}", LEMMA_IDS.join(", ")));
            }
        }
        if self.mc_trials < lemmas::MIN_MC_TRIALS && MC_LEMMA_IDS.iter().any(|id| self.selects(id)) {
            return bad(format!(
                "mc_trials must be at least {} when a Monte-Carlo lemma is selected, got {}",
                lemmas::MIN_MC_TRIALS,
                self.mc_trials
            ));
        }
        match (self.volume_m, self.volume_gamma) {
            (Some(m), Some(g)) => {
                if m < 1 || m >= self.n {
                    return bad(format!("volume_m must lie in [1, n), got {m}"));
                }
                if !(0.0..=1.0).contains(&g) {
                    return bad(format!("volume_gamma must lie in [0, 1], got {g}"));
                }
            }
            (None, None) => {}
            _ => return bad("volume_m and volume_gamma must be given together".into()),
        }
        if let Some(p) = &self.parameter_set {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub points: usize,
    pub distortion: f64,
    /// Largest `(|x| − ‖x‖)/|x|`.
    pub lower_violation: f64,
    /// Largest `(‖x‖ − (√2+η)|x|)/|x|`.
    pub upper_violation: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub report: LemmaReport,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct Summary {
    pub passed: bool,
    pub pass: usize,
    pub fail: usize,
    pub not_applicable: usize,
    pub evidence: usize,
    pub failing_ids: Vec<String>,
    pub goodness_floor: Option<f64>,
    pub enclosure_width: Option<f64>,
    pub floor_exceeds_enclosure: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VersionInfo {
    pub schema: u32,
    pub crate_version: &'static str,
    pub rng: &'static str,
}

impl Default for VersionInfo {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            crate_version: env!("CARGO_PKG_VERSION"),
            rng: "ChaCha8 seeded by master; child stream = splitmix(stream, fnv1a(section), index)",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub sandwich: Option<SandwichReport>,
    pub subspaces: Vec<SubspaceReport>,
    pub lemmas: Vec<LemmaReport>,
    pub summary: Summary,
    /// Wall-clock seconds per section.
    pub timing: BTreeMap<String, f64>,
    pub version: VersionInfo,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.summary.passed
    }

    /// All rows for tabular output: the sandwich check first, then lemmas.
    pub fn rows(&self) -> Vec<&LemmaReport> {
        self.sandwich.iter().map(|s| &s.report).chain(self.lemmas.iter()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in self.rows() {
            w.serialize(CsvRow::from(r)).map_err(|e| Error::Config(format!("csv output: {e}")))?;
        }
        w.flush().map_err(|e| Error::Config(format!("csv output: {e}")))?;
        Ok(())
    }

    /// Writes in `format` to `path`, or to stdout when no path is given.
    pub fn write(&self, path: Option<&Path>, format: OutputFormat) -> Result<()> {
        let io = |e: std::io::Error| Error::Config(format!("cannot write report: {e}"));
        let mut sink: Box<dyn Write> = match path {
            Some(p) => Box::new(std::fs::File::create(p).map_err(io)?),
            None => Box::new(std::io::stdout().lock()),
        };
        match format {
            OutputFormat::Json => writeln!(sink, "{}", self.to_json()).map_err(io)?,
            OutputFormat::Csv => self.write_csv(&mut sink)?,
        }
        sink.flush().map_err(io)
    }
}

#[derive(Debug, Serialize)]
pub struct CsvRow<'a> {
    pub lemma_id: &'a str,
    pub instance: &'a str,
    pub status: Status,
    pub passed: bool,
    pub relation: Relation,
    pub bound_value: f64,
    pub measured_value: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub trials: u64,
    pub seed_master: Option<u64>,
    pub seed_stream: Option<u64>,
}

impl<'a> From<&'a LemmaReport> for CsvRow<'a> {
    fn from(r: &'a LemmaReport) -> Self {
        Self {
            lemma_id: &r.lemma_id,
            instance: &r.instance,
            status: r.status,
            passed: r.passed,
            relation: r.relation,
            bound_value: r.bound_value,
            measured_value: r.measured_value,
            margin: r.margin,
            tolerance: r.tolerance,
            trials: r.trials,
            seed_master: r.seed.map(|s| s.master),
            seed_stream: r.seed.map(|s| s.stream),
        }
    }
}

/// Sizes the global worker pool from `NORMLAB_THREADS` when it is set.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(Some(threads))
}

/// `|x| ≤ ‖x‖ ≤ (√2+η)|x|` on random points of random length.
pub fn sandwich_check(spec: &NormSpec, points: usize, seed: Seed) -> SandwichReport {
    let d = spec.distortion();
    let stats: Vec<(f64, f64, f64)> = (0..points)
        .into_par_iter()
        .map(|i| {
            let s = seed.derive("sandwich", i as u64);
            let x = sample_unit_sphere(spec.dim(), s) * (1e-3f64).powf(1.0 - 2.0 * (i % 7) as f64 / 6.0);
            let e = x.norm();
            let v = spec.eval(&x);
            ((e - v) / e, (v - d * e) / e, v / e)
        })
        .collect();
    let lower = stats.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let upper = stats.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let min_ratio = stats.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    let max_ratio = stats.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
    let report = LemmaReport::check(
        "norm_sandwich",
        format!("n = {}, eta = {}, points = {points}", spec.dim(), spec.eta()),
        Relation::AtMost,
        0.0,
        lower.max(upper),
        SANDWICH_SLACK,
    )
    .with_trials(points as u64)
    .with_seed(seed);
    SandwichReport {
        points,
        distortion: d,
        lower_violation: lower,
        upper_violation: upper,
        min_ratio,
        max_ratio,
        report,
    }
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    spec: &'a NormSpec,
    seed: Seed,
}

struct LemmaOutput {
    reports: Vec<LemmaReport>,
    subspaces: Vec<SubspaceReport>,
    probe: Option<(f64, f64)>,
}

impl From<Vec<LemmaReport>> for LemmaOutput {
    fn from(reports: Vec<LemmaReport>) -> Self {
        Self {
            reports,
            subspaces: Vec::new(),
            probe: None,
        }
    }
}

fn random_unit(n: usize, seed: Seed, i: u64) -> Vector {
    sample_unit_sphere(n, seed.derive("point", i))
}

fn run_lemma(id: &str, ctx: &Context<'_>) -> Result<LemmaOutput> {
    let cfg = ctx.config;
    let spec = ctx.spec;
    let n = cfg.n;
    let seed = ctx.seed.derive(id, 0);
    let planes = cfg.subspace_trials.min(8);
    let grid = cfg.grid_size;
    let out: Vec<LemmaReport> = match id {
        "goodness_equivalence" => {
            let mut out = Vec::new();
            let euclid = NormSpec::euclidean(n);
            let y = TwoDSubspace::random(n, seed.derive("euclidean", 0))?;
            for r in lemmas::verify_goodness_equivalence(&euclid, &y, 0.0, grid, cfg.tol)? {
                out.push(r.with_seed(seed));
            }
            if spec.proj().rank() >= 2 {
                let flat = NormSpec::new(spec.proj().clone(), 0.0)?;
                let mut dirs = [Vec::new(), Vec::new()];
                for t in 0..planes {
                    let y = TwoDSubspace::random_in_range(flat.proj(), seed.derive("range", t as u64))?;
                    let [a, b] = lemmas::verify_goodness_equivalence(&flat, &y, 0.0, grid, cfg.tol)?;
                    dirs[0].push(a);
                    dirs[1].push(b);
                }
                for (d, reps) in dirs.iter().enumerate() {
                    let inst = format!("planes in range(P), eta = 0, eps = 0, direction {}", d + 1);
                    out.push(lemmas_aggregate(id, inst, reps, seed));
                }
            }
            let mut dirs = [Vec::new(), Vec::new()];
            for t in 0..planes {
                let y = TwoDSubspace::random(n, seed.derive("random", t as u64))?;
                let [a, b] = lemmas::tightest_equivalence_check(spec, &y, grid, cfg.tol)?;
                dirs[0].push(a);
                dirs[1].push(b);
            }
            for (d, reps) in dirs.iter().enumerate() {
                let inst = format!("random planes, smallest admissible eps, direction {}", d + 1);
                out.push(lemmas_aggregate(id, inst, reps, seed));
            }
            out
        }
        "support_characterization" => {
            let points = cfg.subspace_trials.min(32);
            let mut out = Vec::new();
            for delta in [0.01, 0.1, 1.0] {
                let reps = (0..points)
                    .map(|t| lemmas::verify_support_characterization(spec, &random_unit(n, seed, t as u64), delta))
                    .collect::<Result<Vec<_>>>()?;
                out.push(lemmas_aggregate(id, format!("random points, delta = {delta}"), &reps, seed));
            }
            if spec.proj().rank() >= 1 {
                let x = spec.proj().range_frame().column(0);
                out.push(lemmas::verify_support_characterization(spec, &x, 0.1)?.with_seed(seed));
            }
            out
        }
        "approx_eigenvector" => {
            let proj = ProjectionPair::coordinate(2, 1);
            let y = Vector::from_vec(vec![std::f64::consts::FRAC_1_SQRT_2; 2]);
            let equality = lemmas::verify_approx_eigenvector(&proj, &y, 1.5)?;
            let reps = (0..cfg.subspace_trials)
                .map(|t| {
                    let y = random_unit(n, seed, t as u64);
                    let nu = y.dot(&spec.apply_a(&y));
                    lemmas::verify_approx_eigenvector(spec.proj(), &y, nu)
                })
                .collect::<Result<Vec<_>>>()?;
            vec![equality, lemmas_aggregate(id, "random unit vectors, Rayleigh quotient", &reps, seed)]
        }
        "subspace_volume" => {
            let instances = match (cfg.volume_m, cfg.volume_gamma) {
                (Some(m), Some(g)) => vec![(n, m, g)],
                _ => vec![(2, 1, 0.1), (n, n / 2, 0.5), (20, 10, 1e-4)],
            };
            instances
                .into_iter()
                .enumerate()
                .filter(|(_, (n, m, _))| *m >= 1 && m < n)
                .map(|(i, (n, m, g))| lemmas::mc_subspace_volume(n, m, g, cfg.mc_trials, seed.derive("instance", i as u64)))
                .collect::<Result<Vec<_>>>()?
        }
        "structured_incidence" => [
            (6, 1, 1, 0.01, IncidenceMode::SmallSupport),
            (8, 3, 2, 0.2, IncidenceMode::SmallSupport),
            (6, 3, 1, 0.05, IncidenceMode::DistinctValues),
            (6, 2, 2, 0.3, IncidenceMode::DistinctValues),
        ]
        .into_iter()
        .enumerate()
        .map(|(i, (n, m, s, g, mode))| {
            lemmas::small_support_incidence(n, m, s, g, mode, cfg.mc_trials, seed.derive("instance", i as u64))
        })
        .collect::<Result<Vec<_>>>()?,
        "pick_gamma" => {
            let trials = (cfg.mc_trials / 10).max(1000);
            vec![lemmas::verify_pick_gamma(8, lemmas::PICK_GAMMA_REGIME, trials, seed)?]
        }
        "sign_continuity" => {
            let reps = (0..cfg.subspace_trials)
                .map(|t| {
                    let x = random_unit(n, seed, t as u64);
                    let scale = 0.5 * (t % 10) as f64 / 10.0;
                    let y = &x + sample_unit_sphere(n, seed.derive("noise", t as u64)) * scale;
                    lemmas::verify_sign_continuity(&x, &y, 0.5)
                })
                .collect::<Result<Vec<_>>>()?;
            vec![lemmas_aggregate(id, format!("random perturbations, n = {n}, xi = 0.5"), &reps, seed)]
        }
        "typicality" => {
            let y = TwoDSubspace::random(n, seed.derive("plane", 0))?;
            let coord = crate::subspace::make_subspace(&unit(2, 0), &unit(2, 1))?;
            vec![
                lemmas::verify_typicality_probability(&y, 0.05, 0.5, 0.5, cfg.mc_trials, seed.derive("instance", 0))?,
                lemmas::verify_typicality_probability(&coord, 0.1, 0.5, 0.1, cfg.mc_trials, seed.derive("instance", 1))?,
            ]
        }
        "two_sign_vectors" => lemmas::exhaustive_two_sign_vectors(10),
        "find_lambda" => vec![lemmas::find_lambda_sweep(6, cfg.mc_trials, seed, cfg.tol)?],
        "approx_orthonormal" => vec![lemmas::verify_approx_orthonormal(5, 10, cfg.mc_trials, seed)?],
        "sigma_spread" => {
            let beta = 0.05;
            let y = TwoDSubspace::random(n, seed.derive("plane", 0))?;
            match sigma_set(&y, 0.5, 0.05, 0.5, beta, grid) {
                Ok(a) if a.sigma_samples.len() >= 4 && n >= 4 => {
                    let fit = lemmas::best_fit_frame(&a.sigma_samples, 4)?;
                    let random = Frame::random(n, 4, seed.derive("frame", 0))?;
                    vec![
                        relabel(lemmas::verify_sigma_spread(&a, &fit, beta)?, "best-fit W").with_seed(seed),
                        relabel(lemmas::verify_sigma_spread(&a, &random, beta)?, "random W").with_seed(seed),
                    ]
                }
                Ok(a) => vec![LemmaReport::not_applicable(id, "random plane", format!("only {} samples", a.sigma_samples.len()))],
                Err(Error::EmptySigma) => vec![LemmaReport::not_applicable(id, "random plane", "no typical angle")],
                Err(e) => return Err(e),
            }
        }
        "parameter_chain" => {
            let p = cfg.parameter_set.clone().unwrap_or_else(ParameterSet::reference);
            vec![lemmas::check_parameter_chain(&p)?]
        }
        "counterexample_probe" => {
            let outcome = lemmas::verify_counterexample_probe(spec, cfg.subspace_trials, grid, seed)?;
            return Ok(LemmaOutput {
                reports: vec![outcome.report],
                subspaces: outcome.subspaces,
                probe: Some((outcome.floor, outcome.enclosure_width)),
            });
        }
        other => return Err(Error::Config(format!("unknown lemma id `{other}`"))),
    };
    Ok(out.into())
}

fn unit(n: usize, i: usize) -> Vector {
    Vector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })
}

fn relabel(mut r: LemmaReport, prefix: &str) -> LemmaReport {
    r.instance = format!("{prefix}, {}", r.instance);
    r
}

fn lemmas_aggregate(id: &str, instance: impl Into<String>, reps: &[LemmaReport], seed: Seed) -> LemmaReport {
    lemmas::aggregate(id, instance, reps, Some(seed))
}

/// Samples the norm, runs the selected sections and assembles the report.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let master = Seed::new(config.seed);
    let mut timing = BTreeMap::new();
    let clock = Instant::now();
    let rank = config.rank.unwrap_or(default_rank(config.n));
    let proj = if rank == 0 {
        ProjectionPair::zero(config.n)
    } else {
        sample_projection(config.n, rank, master.derive("projection", 0))?
    };
    let spec = NormSpec::new(proj, config.eta)?;
    timing.insert("norm".to_string(), clock.elapsed().as_secs_f64());

    let sandwich = if config.sandwich {
        let clock = Instant::now();
        let s = sandwich_check(&spec, config.sandwich_points, master.derive("sandwich", 0));
        timing.insert("sandwich".to_string(), clock.elapsed().as_secs_f64());
        Some(s)
    } else {
        None
    };

    let ctx = Context {
        config,
        spec: &spec,
        seed: master,
    };
    let clock = Instant::now();
    let outputs: Vec<(String, f64, Result<LemmaOutput>)> = config
        .lemma_selection
        .par_iter()
        .map(|id| {
            let t = Instant::now();
            let out = run_lemma(id, &ctx);
            (id.clone(), t.elapsed().as_secs_f64(), out)
        })
        .collect();
    timing.insert("lemmas".to_string(), clock.elapsed().as_secs_f64());

    let mut lemma_reports = Vec::new();
    let mut subspaces = Vec::new();
    let mut summary = Summary::default();
    for (id, secs, out) in outputs {
        timing.insert(format!("lemma:{id}"), secs);
        let out = out?;
        lemma_reports.extend(out.reports);
        subspaces.extend(out.subspaces);
        if let Some((floor, width)) = out.probe {
            summary.goodness_floor = Some(floor);
            summary.enclosure_width = Some(width);
            summary.floor_exceeds_enclosure = Some(floor > width);
        }
    }

    let rows = sandwich.iter().map(|s| &s.report).chain(lemma_reports.iter());
    for r in rows {
        match r.status {
            Status::Pass => summary.pass += 1,
            Status::Fail => {
                summary.fail += 1;
                if !summary.failing_ids.contains(&r.lemma_id) {
                    summary.failing_ids.push(r.lemma_id.clone());
                }
            }
            Status::NotApplicable => summary.not_applicable += 1,
            Status::Evidence => summary.evidence += 1,
        }
    }
    summary.passed = summary.fail == 0;
    timing.insert("total".to_string(), clock.elapsed().as_secs_f64());

    Ok(RunReport {
        config: config.clone(),
        sandwich,
        subspaces,
        lemmas: lemma_reports,
        summary,
        timing,
        version: VersionInfo::default(),
    })
}
