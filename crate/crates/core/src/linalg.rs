//! Dense linear algebra shared by the rest of the crate: Haar-random
//! projections, orthonormal frames, sphere sampling, nets, and the exact
//! distribution of the distance from a random unit vector to a subspace.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{check_dim, domain, Error, Result};
use crate::seed::Seed;

pub type Vector = DVector<f64>;

/// Tolerance for structural identities (orthonormality, idempotency).
pub const STRUCTURAL_TOL: f64 = 1e-10;
/// Tolerance for spectral checks.
pub const SPECTRAL_TOL: f64 = 1e-8;

/// An orthogonal projection `P` together with its complement `Q = I - P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    p: DMatrix<f64>,
    q: DMatrix<f64>,
    rank: usize,
}

impl ProjectionPair {
    /// Wraps an explicit projection matrix. The matrix is symmetrized by
    /// copying its upper triangle; idempotency is checked at `1e-10 * n`.
    pub fn from_projection(p: DMatrix<f64>) -> Result<Self> {
        let n = p.nrows();
        if n == 0 || p.ncols() != n {
            return domain("projection matrix must be square and non-empty");
        }
        if p.iter().any(|v| !v.is_finite()) {
            return domain("projection matrix has non-finite entries");
        }
        let p = symmetrize(p);
        let defect = (&p * &p - &p).norm();
        if defect > STRUCTURAL_TOL * n as f64 {
            return domain(format!("matrix is not idempotent (defect {defect:e})"));
        }
        let trace = p.trace();
        let rank = trace.round();
        if (trace - rank).abs() > SPECTRAL_TOL {
            return domain(format!("trace {trace} is not an integer"));
        }
        Ok(Self::assemble(p, rank as usize))
    }

    pub fn zero(n: usize) -> Self {
        Self::assemble(DMatrix::zeros(n, n), 0)
    }

    pub fn identity(n: usize) -> Self {
        Self::assemble(DMatrix::identity(n, n), n)
    }

    /// Coordinate projection onto the first `rank` axes.
    pub fn coordinate(n: usize, rank: usize) -> Self {
        let p = DMatrix::from_fn(n, n, |i, j| if i == j && i < rank { 1.0 } else { 0.0 });
        Self::assemble(p, rank)
    }

    fn assemble(p: DMatrix<f64>, rank: usize) -> Self {
        let n = p.nrows();
        let q = DMatrix::identity(n, n) - &p;
        Self { p, q, rank }
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn apply_p(&self, x: &Vector) -> Vector {
        &self.p * x
    }

    pub fn apply_q(&self, x: &Vector) -> Vector {
        &self.q * x
    }

    /// `‖P·P − P‖_F`
    pub fn idempotency_defect(&self) -> f64 {
        (&self.p * &self.p - &self.p).norm()
    }

    /// Orthonormal basis of `range(P)` (eigenvectors with eigenvalue ~1).
    pub fn range_frame(&self) -> Frame {
        eigen_frame(&self.p, |lambda| lambda > 0.5)
    }

    /// Orthonormal basis of `range(Q)`.
    pub fn kernel_frame(&self) -> Frame {
        eigen_frame(&self.p, |lambda| lambda <= 0.5)
    }
}

fn eigen_frame(p: &DMatrix<f64>, keep: impl Fn(f64) -> bool) -> Frame {
    let n = p.nrows();
    let eig = p.clone().symmetric_eigen();
    let cols: Vec<Vector> = (0..n)
        .filter(|&i| keep(eig.eigenvalues[i]))
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    Frame::orthonormalize(n, &cols).expect("eigenvectors of a symmetric matrix are independent")
}

fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            m[(i, j)] = m[(j, i)];
        }
    }
    m
}

/// Samples `P = U Uᵀ` where `U` orthonormalizes an `n × rank` standard
/// Gaussian matrix, so `range(P)` is Haar-distributed on the Grassmannian.
pub fn sample_projection(n: usize, rank: usize, seed: Seed) -> Result<ProjectionPair> {
    if rank < 1 || rank > n {
        return domain(format!("rank {rank} outside [1, {n}]"));
    }
    if rank == n {
        return Ok(ProjectionPair::identity(n));
    }
    let mut rng = seed.rng();
    let u = haar_frame_with(&mut rng, n, rank);
    let p = symmetrize(&u.basis * u.basis.transpose());
    Ok(ProjectionPair::assemble(p, rank))
}

/// Rank used for the norm's projection: `⌊n/2⌋`.
pub fn default_rank(n: usize) -> usize {
    n / 2
}

/// A list of orthonormal vectors stored as the columns of an `n × k` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    basis: DMatrix<f64>,
}

impl Frame {
    pub fn empty(n: usize) -> Self {
        Self {
            basis: DMatrix::zeros(n, 0),
        }
    }

    /// Accepts columns that are already orthonormal within `1e-10`.
    pub fn from_columns(n: usize, cols: &[Vector]) -> Result<Self> {
        for c in cols {
            check_dim(n, c.len())?;
        }
        let basis = columns_to_matrix(n, cols);
        let gram = basis.transpose() * &basis;
        let k = cols.len();
        let defect = (gram - DMatrix::<f64>::identity(k, k)).amax();
        if defect > STRUCTURAL_TOL {
            return domain(format!("columns are not orthonormal (defect {defect:e})"));
        }
        Ok(Self { basis })
    }

    /// Modified Gram–Schmidt (two passes). Fails on (numerically) dependent input.
    pub fn orthonormalize(n: usize, cols: &[Vector]) -> Result<Self> {
        let mut out: Vec<Vector> = Vec::with_capacity(cols.len());
        for c in cols {
            check_dim(n, c.len())?;
            let scale = c.norm();
            if scale == 0.0 {
                return domain("zero vector cannot be orthonormalized");
            }
            let mut v = c.clone();
            for _ in 0..2 {
                for b in &out {
                    let d = b.dot(&v);
                    v.axpy(-d, b, 1.0);
                }
            }
            let r = v.norm();
            if r <= 1e-12 * scale {
                return domain("vectors are linearly dependent");
            }
            out.push(v / r);
        }
        Ok(Self {
            basis: columns_to_matrix(n, &out),
        })
    }

    pub fn random(n: usize, k: usize, seed: Seed) -> Result<Self> {
        if k > n {
            return domain(format!("frame dimension {k} exceeds ambient {n}"));
        }
        Ok(haar_frame_with(&mut seed.rng(), n, k))
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn column(&self, j: usize) -> Vector {
        self.basis.column(j).into_owned()
    }

    pub fn columns(&self) -> Vec<Vector> {
        (0..self.dim()).map(|j| self.column(j)).collect()
    }

    /// Orthogonal projection `W Wᵀ x`.
    pub fn project(&self, x: &Vector) -> Vector {
        if self.dim() == 0 {
            return Vector::zeros(x.len());
        }
        &self.basis * (self.basis.transpose() * x)
    }

    /// Maps coefficients in the frame to ambient coordinates.
    pub fn embed(&self, coeffs: &Vector) -> Vector {
        &self.basis * coeffs
    }
}

fn columns_to_matrix(n: usize, cols: &[Vector]) -> DMatrix<f64> {
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> DMatrix<f64> {
    let data: Vec<f64> = (0..n * k).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_vec(n, k, data)
}

/// Orthonormal `k`-frame with Haar-distributed span: QR of a Gaussian matrix
/// with the signs fixed so that `R` has a positive diagonal.
pub(crate) fn haar_frame_with<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Frame {
    if k == 0 {
        return Frame::empty(n);
    }
    let g = gaussian_matrix(rng, n, k);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Frame { basis: q }
}

/// `|x − W Wᵀ x|`; for an empty frame this is `|x|`.
pub fn distance_to_subspace(x: &Vector, w: &Frame) -> Result<f64> {
    check_dim(w.ambient(), x.len())?;
    Ok((x - w.project(x)).norm())
}

/// Uniform point of `S^{n−1}` (normalized Gaussian).
pub fn sample_unit_sphere(n: usize, seed: Seed) -> Vector {
    sample_unit_sphere_with(&mut seed.rng(), n)
}

pub fn sample_unit_sphere_with<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    assert!(n >= 1, "sphere dimension must be at least 1");
    loop {
        let g = Vector::from_fn(n, |_, _| rng.sample(StandardNormal));
        let r = g.norm();
        if r > 1e-300 {
            return g / r;
        }
    }
}

/// Minimal Euclidean distance from the unit sphere of `span(structured)` to
/// `span(y)`, i.e. the sine of the smallest principal angle between the two
/// subspaces. `structured` must have orthonormal columns.
pub fn min_sphere_distance(structured: &DMatrix<f64>, y: &Frame) -> f64 {
    let residual = if y.dim() == 0 {
        structured.clone()
    } else {
        structured - y.basis() * (y.basis().transpose() * structured)
    };
    residual.singular_values().min()
}

/// `P[d(x, Y) ≤ γ]` for `x` uniform on `S^{n−1}` and a fixed `m`-dimensional
/// `Y`: the squared residual `|Q x|²` is `Beta((n−m)/2, m/2)` distributed.
pub fn subspace_incidence_probability(n: usize, m: usize, gamma: f64) -> Result<f64> {
    if m < 1 || m >= n {
        return domain(format!("subspace dimension {m} must lie in [1, {n})"));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return domain(format!("gamma {gamma} outside [0, 1]"));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    if gamma == 1.0 {
        return Ok(1.0);
    }
    let a = (n - m) as f64 / 2.0;
    let b = m as f64 / 2.0;
    statrs::function::beta::checked_beta_reg(a, b, gamma * gamma)
        .map_err(|e| Error::Domain(format!("incomplete beta: {e}")))
}

/// A finite subset of the unit sphere of a subspace with a sampled covering
/// certificate.
#[derive(Debug, Clone, Serialize)]
pub struct GammaNet {
    #[serde(skip)]
    pub points: Vec<Vector>,
    pub gamma: f64,
    pub cardinality: usize,
    /// `⌈(3/γ)^m⌉`
    pub budget: f64,
    pub certificate_samples: usize,
    /// Certificate points that remained farther than `gamma` from the net.
    pub uncovered: usize,
}

impl GammaNet {
    pub fn certified(&self) -> bool {
        self.uncovered == 0
    }
}

const NET_CERTIFICATE_SAMPLES: usize = 100_000;
const NET_MAX_DIM: usize = 12;

/// Greedy centrally symmetric `γ`-separated set on the unit sphere of
/// `span(frame)`, grown until random candidates stop landing outside it, then
/// certified by `10^5` fresh uniform points. Points missed by the certificate
/// are added and certification is repeated.
pub fn gamma_net(gamma: f64, frame: &Frame, seed: Seed) -> Result<GammaNet> {
    let budget = (3.0 / gamma).powi(frame.dim() as i32).ceil();
    gamma_net_with_budget(gamma, frame, seed, budget)
}

/// [`gamma_net`] with an explicit cardinality budget.
pub fn gamma_net_with_budget(gamma: f64, frame: &Frame, seed: Seed, budget: f64) -> Result<GammaNet> {
    let m = frame.dim();
    if m == 0 || m > NET_MAX_DIM {
        return domain(format!("net dimension {m} outside [1, {NET_MAX_DIM}]"));
    }
    if !(gamma > 0.0) {
        return domain("gamma must be positive");
    }
    let mut rng = seed.derive("net-grow", 0).rng();
    let mut net: Vec<Vector> = Vec::new();

    let push_pair = |net: &mut Vec<Vector>, c: Vector| -> Result<()> {
        net.push(-&c);
        net.push(c);
        if net.len() as f64 > budget {
            return Err(Error::NetBudgetExceeded {
                budget,
                reached: net.len(),
            });
        }
        Ok(())
    };

    let covered = |net: &[Vector], c: &Vector| net.iter().any(|p| (p - c).norm() <= gamma);

    let patience = 2_000 * m;
    let mut misses = 0;
    while misses < patience {
        let c = sample_unit_sphere_with(&mut rng, m);
        if covered(&net, &c) {
            misses += 1;
        } else {
            push_pair(&mut net, c)?;
            misses = 0;
        }
    }

    let mut uncovered = 0;
    for round in 0..8u64 {
        let mut cert = seed.derive("net-certify", round).rng();
        uncovered = 0;
        for _ in 0..NET_CERTIFICATE_SAMPLES {
            let c = sample_unit_sphere_with(&mut cert, m);
            if !covered(&net, &c) {
                uncovered += 1;
                push_pair(&mut net, c)?;
            }
        }
        if uncovered == 0 {
            break;
        }
    }

    let points: Vec<Vector> = net.iter().map(|c| frame.embed(c)).collect();
    Ok(GammaNet {
        cardinality: points.len(),
        points,
        gamma,
        budget,
        certificate_samples: NET_CERTIFICATE_SAMPLES,
        uncovered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn e(n: usize, i: usize) -> Vector {
        let mut v = Vector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn full_rank_projection_is_identity() {
        let pp = sample_projection(2, 2, Seed::new(3)).unwrap();
        assert_eq!(pp.p(), &DMatrix::identity(2, 2));
        assert_eq!(pp.q(), &DMatrix::zeros(2, 2));
    }

    #[test]
    fn half_rank_projection_spectrum() {
        let pp = sample_projection(4, 2, Seed::new(11)).unwrap();
        assert!((pp.p().trace() - 2.0).abs() < SPECTRAL_TOL);
        let mut ev: Vec<f64> = pp.p().clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (got, want) in ev.iter().zip([0.0, 0.0, 1.0, 1.0]) {
            assert!((got - want).abs() < SPECTRAL_TOL, "{ev:?}");
        }
        assert!(pp.idempotency_defect() <= STRUCTURAL_TOL * 4.0);
        assert_eq!(pp.p(), &pp.p().transpose());
        assert_eq!(pp.p() + pp.q(), DMatrix::identity(4, 4));
    }

    #[test]
    fn projection_is_deterministic() {
        let a = sample_projection(4, 2, Seed::with_stream(9, 1)).unwrap();
        let b = sample_projection(4, 2, Seed::with_stream(9, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn projection_rank_errors() {
        assert!(sample_projection(4, 0, Seed::new(0)).is_err());
        assert!(sample_projection(4, 5, Seed::new(0)).is_err());
    }

    #[test]
    fn from_projection_rejects_non_idempotent() {
        let m = DMatrix::from_diagonal_element(3, 3, 0.5);
        assert!(ProjectionPair::from_projection(m).is_err());
        let ok = ProjectionPair::from_projection(DMatrix::from_diagonal(&Vector::from_vec(vec![1.0, 0.0, 1.0])))
            .unwrap();
        assert_eq!(ok.rank(), 2);
    }

    #[test]
    fn range_and_kernel_frames_split_space() {
        let pp = sample_projection(6, 3, Seed::new(5)).unwrap();
        let r = pp.range_frame();
        let k = pp.kernel_frame();
        assert_eq!((r.dim(), k.dim()), (3, 3));
        for c in r.columns() {
            assert!((pp.apply_p(&c) - &c).norm() < 1e-10);
        }
        for c in k.columns() {
            assert!(pp.apply_p(&c).norm() < 1e-10);
        }
    }

    #[test]
    fn distance_examples() {
        let w1 = Frame::from_columns(2, &[e(2, 0)]).unwrap();
        assert_eq!(distance_to_subspace(&e(2, 0), &w1).unwrap(), 0.0);
        let w2 = Frame::from_columns(2, &[e(2, 1)]).unwrap();
        assert_eq!(distance_to_subspace(&e(2, 0), &w2).unwrap(), 1.0);
        let diag = Vector::from_vec(vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        let w3 = Frame::from_columns(2, &[diag]).unwrap();
        assert!((distance_to_subspace(&e(2, 0), &w3).unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
        let empty = Frame::empty(3);
        let x = Vector::from_vec(vec![3.0, 0.0, 4.0]);
        assert_eq!(distance_to_subspace(&x, &empty).unwrap(), 5.0);
    }

    #[test]
    fn distance_dimension_mismatch() {
        let w = Frame::from_columns(2, &[e(2, 0)]).unwrap();
        assert!(matches!(
            distance_to_subspace(&e(3, 0), &w),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn orthonormalize_rejects_dependent() {
        let a = Vector::from_vec(vec![1.0, 2.0]);
        let b = Vector::from_vec(vec![2.0, 4.0]);
        assert!(Frame::orthonormalize(2, &[a, b]).is_err());
    }

    #[test]
    fn sphere_samples() {
        for s in 0..20 {
            let x = sample_unit_sphere(1, Seed::new(s));
            assert!(x[0] == 1.0 || x[0] == -1.0);
            let y = sample_unit_sphere(7, Seed::new(s));
            assert!((y.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_coordinate_means() {
        // variance of a coordinate is 1/3, so 5 sigma at 1e5 samples is ~0.009
        let mut rng = Seed::new(42).rng();
        let trials = 100_000;
        let mut sum = Vector::zeros(3);
        for _ in 0..trials {
            sum += sample_unit_sphere_with(&mut rng, 3);
        }
        let mean = sum / trials as f64;
        assert!(mean.amax() < 0.02, "{mean}");
    }

    #[test]
    fn incidence_probability_examples() {
        assert_eq!(subspace_incidence_probability(5, 2, 1.0).unwrap(), 1.0);
        assert_eq!(subspace_incidence_probability(5, 2, 0.0).unwrap(), 0.0);
        let arc = 2.0 / PI * 0.1f64.asin();
        let p = subspace_incidence_probability(2, 1, 0.1).unwrap();
        assert!((p - arc).abs() < 1e-12, "{p} vs {arc}");
        assert!((p - 0.063768).abs() < 1e-6);
        assert!(subspace_incidence_probability(5, 2, 1.5).is_err());
        assert!(subspace_incidence_probability(5, 5, 0.5).is_err());
    }

    #[test]
    fn incidence_probability_tiny_gamma() {
        let p = subspace_incidence_probability(20, 10, 1e-4).unwrap();
        assert!(p < 1e-30, "{p}");
    }

    #[test]
    fn net_on_a_line() {
        let f = Frame::from_columns(3, &[e(3, 1)]).unwrap();
        let net = gamma_net(1.0, &f, Seed::new(1)).unwrap();
        assert_eq!(net.cardinality, 2);
        assert!(net.certified());
        assert!((&net.points[0] + &net.points[1]).norm() < 1e-15);
    }

    #[test]
    fn net_on_a_circle() {
        let f = Frame::random(5, 2, Seed::new(2)).unwrap();
        let net = gamma_net(0.5, &f, Seed::new(3)).unwrap();
        assert!(net.cardinality <= 36, "{}", net.cardinality);
        assert!(net.certified());
        for p in &net.points {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_net_is_one_antipodal_pair() {
        let f = Frame::random(4, 2, Seed::new(8)).unwrap();
        let net = gamma_net(1.9, &f, Seed::new(9)).unwrap();
        assert_eq!(net.cardinality, 2);
        assert!((&net.points[0] + &net.points[1]).norm() < 1e-15);
    }

    #[test]
    fn net_budget_is_reported() {
        let f = Frame::random(6, 2, Seed::new(4)).unwrap();
        let err = gamma_net_with_budget(0.3, &f, Seed::new(5), 6.0).unwrap_err();
        assert!(matches!(err, Error::NetBudgetExceeded { reached: 8, .. }), "{err:?}");
    }

    #[test]
    fn principal_angle_distance() {
        let y = Frame::from_columns(3, &[e(3, 0)]).unwrap();
        let s = DMatrix::from_columns(&[e(3, 0), e(3, 1)]);
        assert!(min_sphere_distance(&s, &y) < 1e-15);
        let s2 = DMatrix::from_columns(&[e(3, 1)]);
        assert!((min_sphere_distance(&s2, &y) - 1.0).abs() < 1e-15);
    }
}
