use std::f64::consts::TAU;

use serde::Serialize;

use super::{e_set, TwoDSubspace};
use crate::error::{check_dim, domain, Error, Result};
use crate::linalg::Vector;
use crate::norm::{maximize_ratio, AscentOptions, DualNorm, DualSolver, NormSpec, DEFAULT_GOODNESS_TOL};
use crate::seed::Seed;

pub const DEFAULT_GRID: usize = 2048;
const SWEEP_DUAL_TOL: f64 = 1e-10;

/// Uniform grid of `grid` points on `[0, 2π)`; only the half in `[0, π)` is
/// evaluated since every quantity here is invariant under `θ ↦ θ + π`.
fn half_grid(grid: usize) -> Vec<f64> {
    (0..grid.div_ceil(2)).map(|k| TAU * k as f64 / grid as f64).collect()
}

fn half_spacing(grid: usize) -> f64 {
    0.5 * TAU / grid as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct EuclideanConstant {
    /// `max ‖x(θ)‖ / min ‖x(θ)‖` over the grid; a lower bound for the true ratio.
    pub ratio: f64,
    /// Certified upper bound for the true ratio.
    pub ratio_upper: f64,
    /// Best strong-Euclidean scale, `min ‖x(θ)‖`.
    pub scale_t: f64,
    pub max_norm: f64,
    pub enclosure_width: f64,
    pub grid: usize,
}

pub fn euclidean_constant(spec: &NormSpec, y: &TwoDSubspace, grid: usize) -> Result<EuclideanConstant> {
    check_dim(spec.dim(), y.dim())?;
    if grid < 64 {
        return domain(format!("grid size {grid} below the minimum of 64"));
    }
    let norms: Vec<f64> = half_grid(grid).iter().map(|&t| spec.eval(&y.point(t))).collect();
    Ok(euclidean_from_norms(spec, &norms, grid))
}

/// `|‖x(θ)‖ − ‖x(θ')‖| ≤ (√2+η)|θ − θ'|` and `‖x‖ ≥ |x| = 1` bound the true
/// extremes between grid points.
fn euclidean_from_norms(spec: &NormSpec, norms: &[f64], grid: usize) -> EuclideanConstant {
    let max = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = spec.distortion() * half_spacing(grid);
    let ratio = max / min;
    let ratio_upper = ((max + slack) / (min - slack).max(1.0)).min(spec.distortion());
    EuclideanConstant {
        ratio,
        ratio_upper: ratio_upper.max(ratio),
        scale_t: min,
        max_norm: max,
        enclosure_width: ratio_upper.max(ratio) - ratio,
        grid,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WorstGoodness {
    pub theta_star: f64,
    /// Largest grid deficiency, with values below the goodness tolerance
    /// reported as `0`.
    pub deficiency: f64,
    /// Certified upper bound for the supremum over the whole circle.
    pub upper: f64,
    /// `2(√2+η) · h/2` for grid spacing `h`.
    pub enclosure_width: f64,
    pub grid: usize,
    /// Grid angles where the dual solver failed, with the error text.
    pub failures: Vec<(f64, String)>,
}

pub fn worst_goodness(spec: &NormSpec, y: &TwoDSubspace, grid: usize) -> Result<WorstGoodness> {
    check_dim(spec.dim(), y.dim())?;
    if grid < 256 {
        return domain(format!("grid size {grid} below the minimum of 256"));
    }
    Ok(Sweep::run(spec, y, grid).worst_goodness(spec))
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionNorm {
    /// Best value found, `max(ascent, certified lower bound)`.
    pub value: f64,
    /// Certified lower bound from the dual characterization.
    pub lower: f64,
    /// Certified upper bound from the dual characterization.
    pub upper: f64,
    /// Point attaining `value` by ascent.
    pub argmax: Vector,
}

/// Grid used for the dual-characterization bounds inside
/// [`projection_op_norm`].
const PROJECTION_GRID: usize = 1024;

/// `‖P_Y‖ = sup ‖P_Y x‖ / ‖x‖` by multistart ascent, cross-checked against
/// the dual characterization `‖P_Y‖ = sup_{w∈Y} ‖w‖* / ‖w|_Y‖_{Y*}`.
///
/// Fails with [`Error::NonConvergence`] when the ascent falls more than `tol`
/// below the certified lower bound.
pub fn projection_op_norm(spec: &NormSpec, y: &TwoDSubspace, tol: f64) -> Result<ProjectionNorm> {
    check_dim(spec.dim(), y.dim())?;
    let sweep = Sweep::run(spec, y, PROJECTION_GRID);
    sweep.projection_norm(spec, y, tol)
}

#[derive(Debug, Clone, Serialize)]
pub struct SubspaceReport {
    pub euclidean_ratio: f64,
    pub euclidean_ratio_upper: f64,
    pub scale_t: f64,
    pub proj_op_norm: f64,
    pub proj_op_norm_lower: f64,
    pub proj_op_norm_upper: f64,
    pub worst_goodness: f64,
    pub worst_goodness_upper: f64,
    pub theta_star: f64,
    pub enclosure_width: f64,
    #[serde(rename = "E")]
    pub e_set: Vec<usize>,
    pub grid_resolution: usize,
    pub failures: usize,
}

/// All per-subspace measurements from one shared sweep of the dual norm.
pub fn analyze_subspace(
    spec: &NormSpec,
    y: &TwoDSubspace,
    grid: usize,
    alpha: f64,
    tol: f64,
) -> Result<SubspaceReport> {
    check_dim(spec.dim(), y.dim())?;
    if grid < 256 {
        return domain(format!("grid size {grid} below the minimum of 256"));
    }
    let sweep = Sweep::run(spec, y, grid);
    let eu = euclidean_from_norms(spec, &sweep.norms, grid);
    let wg = sweep.worst_goodness(spec);
    let pn = sweep.projection_norm(spec, y, tol)?;
    Ok(SubspaceReport {
        euclidean_ratio: eu.ratio,
        euclidean_ratio_upper: eu.ratio_upper,
        scale_t: eu.scale_t,
        proj_op_norm: pn.value,
        proj_op_norm_lower: pn.lower,
        proj_op_norm_upper: pn.upper,
        worst_goodness: wg.deficiency,
        worst_goodness_upper: wg.upper,
        theta_star: wg.theta_star,
        enclosure_width: wg.enclosure_width,
        e_set: e_set(y, alpha)?,
        grid_resolution: grid,
        failures: wg.failures.len(),
    })
}

/// `‖x(θ)‖` and `‖x(θ)‖*` on the half grid. The dual solver is warm-started
/// from the previous angle, so the sweep is sequential.
struct Sweep {
    grid: usize,
    thetas: Vec<f64>,
    norms: Vec<f64>,
    duals: Vec<Option<DualNorm>>,
    failures: Vec<(f64, String)>,
}

impl Sweep {
    fn run(spec: &NormSpec, y: &TwoDSubspace, grid: usize) -> Self {
        let thetas = half_grid(grid);
        let mut solver = DualSolver::new(spec);
        let mut norms = Vec::with_capacity(thetas.len());
        let mut duals = Vec::with_capacity(thetas.len());
        let mut failures = Vec::new();
        for &t in &thetas {
            let x = y.point(t);
            norms.push(spec.eval(&x));
            match solver.solve(&x, SWEEP_DUAL_TOL) {
                Ok(d) => duals.push(Some(d)),
                Err(e) => {
                    failures.push((t, e.to_string()));
                    duals.push(None);
                }
            }
        }
        Self {
            grid,
            thetas,
            norms,
            duals,
            failures,
        }
    }

    fn worst_goodness(&self, spec: &NormSpec) -> WorstGoodness {
        let mut best = (0.0, f64::NEG_INFINITY);
        for ((&t, &n), d) in self.thetas.iter().zip(&self.norms).zip(&self.duals) {
            if let Some(d) = d {
                let def = n * d.value - 1.0;
                if def > best.1 {
                    best = (t, def);
                }
            }
        }
        let width = 2.0 * spec.distortion() * half_spacing(self.grid);
        WorstGoodness {
            theta_star: best.0,
            deficiency: if best.1 < DEFAULT_GOODNESS_TOL { 0.0 } else { best.1 },
            upper: best.1.max(0.0) + width,
            enclosure_width: width,
            grid: self.grid,
            failures: self.failures.clone(),
        }
    }

    /// For `w = x(ψ)`, `‖w|_Y‖ = max_θ |cos(ψ − θ)| / ‖x(θ)‖`, a
    /// `(1 + C)`-Lipschitz function of `θ`; the ratio `‖w‖*/‖w|_Y‖` is
    /// `(C + C²)`-Lipschitz in `ψ`.
    fn projection_norm(&self, spec: &NormSpec, y: &TwoDSubspace, tol: f64) -> Result<ProjectionNorm> {
        let c = spec.distortion();
        let h2 = half_spacing(self.grid);
        let m = self.thetas.len();
        let cos_table: Vec<f64> = (0..self.grid).map(|k| (TAU * k as f64 / self.grid as f64).cos().abs()).collect();

        let mut lower = (1.0f64, None::<usize>);
        let mut upper_grid = 1.0f64;
        for j in 0..m {
            let Some(d) = &self.duals[j] else { continue };
            let restricted = (0..m)
                .map(|k| cos_table[(j + self.grid - k) % self.grid] / self.norms[k])
                .fold(0.0, f64::max);
            let lo = d.lower / (restricted + (1.0 + c) * h2);
            if lo > lower.0 {
                lower = (lo, Some(j));
            }
            upper_grid = upper_grid.max(d.value / restricted);
        }
        let upper = upper_grid + (c + c * c) * h2;

        let (pu, pv) = (y.u().clone(), y.v().clone());
        let numerator = |x: &Vector| {
            let a = pu.dot(x);
            let b = pv.dot(x);
            let px = &pu * a + &pv * b;
            let (val, g) = spec.eval_with_gradient(&px);
            let ga = pu.dot(&g);
            let gb = pv.dot(&g);
            (val, &pu * ga + &pv * gb)
        };
        let mut starts = Vec::new();
        if let Some(j) = lower.1 {
            starts.push(self.duals[j].as_ref().expect("index of a solved angle").maximizer.clone());
        }
        starts.push(pu.clone());
        starts.push(pv.clone());
        let mut rng = Seed::default().derive("projection_op_norm", 0).rng();
        for _ in 0..2 {
            starts.push(crate::linalg::sample_unit_sphere_with(&mut rng, y.dim()));
        }
        let opts = AscentOptions {
            max_iter: 5_000,
            ..AscentOptions::default()
        };
        let best = maximize_ratio(spec, &numerator, &starts, &opts);
        if best.value < lower.0 - tol || best.value > upper + tol {
            return Err(Error::NonConvergence {
                context: "projection operator norm",
                lower: lower.0,
                upper,
            });
        }
        Ok(ProjectionNorm {
            value: best.value.max(lower.0),
            lower: lower.0,
            upper,
            argmax: best.argmax,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sample_unit_sphere, ProjectionPair};
    use crate::norm::DESK_ETA;
    use crate::subspace::make_subspace;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn e(n: usize, i: usize) -> Vector {
        Vector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })
    }

    fn mixed_plane() -> (NormSpec, TwoDSubspace) {
        // u = p ∈ PX, v = q ∈ QX
        let spec = NormSpec::new(ProjectionPair::coordinate(4, 2), 0.0).unwrap();
        (spec, make_subspace(&e(4, 0), &e(4, 2)).unwrap())
    }

    #[test]
    fn euclidean_constant_examples() {
        let spec = NormSpec::euclidean(5);
        let y = TwoDSubspace::random(5, Seed::new(1)).unwrap();
        let ec = euclidean_constant(&spec, &y, 64).unwrap();
        assert!((ec.ratio - 1.0).abs() < 1e-15);

        let proj = ProjectionPair::coordinate(6, 3);
        let spec = NormSpec::new(proj.clone(), 0.0).unwrap();
        let y = TwoDSubspace::random_in_range(&proj, Seed::new(2)).unwrap();
        let ec = euclidean_constant(&spec, &y, 256).unwrap();
        assert!((ec.ratio - 1.0).abs() < 1e-14);
        assert!((ec.scale_t - SQRT_2).abs() < 1e-14);

        let (spec, y) = mixed_plane();
        let ec = euclidean_constant(&spec, &y, 2048).unwrap();
        assert!((ec.ratio - SQRT_2).abs() < 1e-12, "{}", ec.ratio);
        assert!(ec.ratio_upper >= SQRT_2);
        assert!(euclidean_constant(&spec, &y, 32).is_err());
    }

    #[test]
    fn euclidean_ratio_enclosure_contains_dense_value() {
        let spec = NormSpec::sample(12, DESK_ETA, Seed::new(3)).unwrap();
        let y = TwoDSubspace::random(12, Seed::new(4)).unwrap();
        let coarse = euclidean_constant(&spec, &y, 64).unwrap();
        let fine = euclidean_constant(&spec, &y, 1 << 16).unwrap();
        assert!(fine.ratio >= coarse.ratio - 1e-12);
        assert!(fine.ratio <= coarse.ratio_upper + 1e-12);
    }

    #[test]
    fn norm_is_centrally_symmetric_on_the_circle() {
        let spec = NormSpec::sample(10, DESK_ETA, Seed::new(5)).unwrap();
        let y = TwoDSubspace::random(10, Seed::new(6)).unwrap();
        for k in 0..100 {
            let t = 0.0637 * k as f64;
            let a = spec.eval(&y.point(t));
            assert!((a - spec.eval(&y.point(t + std::f64::consts::PI))).abs() < 1e-12);
            assert!((a - spec.eval(&y.point(t + TAU))).abs() < 1e-12);
        }
    }

    #[test]
    fn worst_goodness_examples() {
        let spec = NormSpec::euclidean(4);
        let y = TwoDSubspace::random(4, Seed::new(7)).unwrap();
        assert_eq!(worst_goodness(&spec, &y, 256).unwrap().deficiency, 0.0);

        let proj = ProjectionPair::coordinate(6, 3);
        let spec = NormSpec::new(proj.clone(), 0.0).unwrap();
        let y = TwoDSubspace::random_in_range(&proj, Seed::new(8)).unwrap();
        assert_eq!(worst_goodness(&spec, &y, 256).unwrap().deficiency, 0.0);

        let (spec, y) = mixed_plane();
        let wg = worst_goodness(&spec, &y, 1024).unwrap();
        assert!((wg.deficiency - (3.0 / (2.0 * SQRT_2) - 1.0)).abs() < 1e-9, "{}", wg.deficiency);
        assert!((wg.theta_star - FRAC_PI_4).abs() < 1e-12);
        assert!(wg.failures.is_empty());
        assert!(worst_goodness(&spec, &y, 128).is_err());
    }

    #[test]
    fn doubling_the_grid_stays_inside_the_enclosure() {
        let spec = NormSpec::sample(16, DESK_ETA, Seed::new(9)).unwrap();
        let y = TwoDSubspace::random(16, Seed::new(10)).unwrap();
        let a = worst_goodness(&spec, &y, 512).unwrap();
        let b = worst_goodness(&spec, &y, 1024).unwrap();
        assert!(b.deficiency >= a.deficiency - 1e-12);
        assert!(b.deficiency - a.deficiency <= a.enclosure_width);
    }

    #[test]
    fn projection_norm_examples() {
        let spec = NormSpec::euclidean(5);
        let y = TwoDSubspace::random(5, Seed::new(11)).unwrap();
        let pn = projection_op_norm(&spec, &y, 1e-6).unwrap();
        assert!((pn.value - 1.0).abs() < 1e-9);

        let proj = ProjectionPair::coordinate(4, 2);
        let spec = NormSpec::new(proj.clone(), 0.0).unwrap();
        let y = TwoDSubspace::random_in_range(&proj, Seed::new(12)).unwrap();
        let pn = projection_op_norm(&spec, &y, 1e-6).unwrap();
        assert!((pn.value - 1.0).abs() < 1e-9, "{}", pn.value);
    }

    /// Dense grid over the sphere in three dimensions.
    fn sphere_net_oracle(spec: &NormSpec, y: &TwoDSubspace, steps: usize) -> f64 {
        let mut best = 0.0f64;
        for a in 0..steps {
            let t = std::f64::consts::PI * a as f64 / steps as f64;
            for b in 0..2 * steps {
                let p = std::f64::consts::PI * b as f64 / steps as f64;
                let x = Vector::from_vec(vec![t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]);
                let (ca, cb, _) = y.decompose(&x);
                let px = y.u() * ca + y.v() * cb;
                best = best.max(spec.eval(&px) / spec.eval(&x));
            }
        }
        best
    }

    #[test]
    fn projection_norm_against_sphere_net() {
        for s in 0..3 {
            let spec = NormSpec::sample(3, 0.2, Seed::new(20 + s)).unwrap();
            let y = TwoDSubspace::random(3, Seed::new(30 + s)).unwrap();
            let pn = projection_op_norm(&spec, &y, 1e-6).unwrap();
            let oracle = sphere_net_oracle(&spec, &y, 600);
            assert!(pn.value >= oracle - 1e-9, "{} < {oracle}", pn.value);
            assert!(pn.value - oracle < 2e-3, "{} vs {oracle}", pn.value);
            assert!(pn.lower <= pn.value + 1e-12 && pn.value <= pn.upper);
        }
    }

    #[test]
    fn projection_norm_at_least_one() {
        for s in 0..4 {
            let spec = NormSpec::sample(20, DESK_ETA, Seed::new(40 + s)).unwrap();
            let y = TwoDSubspace::random(20, Seed::new(50 + s)).unwrap();
            let pn = projection_op_norm(&spec, &y, 1e-6).unwrap();
            assert!(pn.value >= 1.0 - 1e-9);
            let x = sample_unit_sphere(20, Seed::new(60 + s));
            let (a, b, _) = y.decompose(&x);
            let ratio = spec.eval(&(y.u() * a + y.v() * b)) / spec.eval(&x);
            assert!(ratio <= pn.value + 1e-12);
        }
    }

    #[test]
    fn full_report() {
        let spec = NormSpec::sample(16, DESK_ETA, Seed::new(70)).unwrap();
        let y = TwoDSubspace::random(16, Seed::new(71)).unwrap();
        let rep = analyze_subspace(&spec, &y, 512, 0.1, 1e-6).unwrap();
        assert!(rep.euclidean_ratio >= 1.0);
        assert!(rep.proj_op_norm >= 1.0 - 1e-9);
        assert!(rep.worst_goodness >= 0.0);
        assert!(rep.worst_goodness <= rep.worst_goodness_upper);
    }
}
