use serde::Serialize;

use super::NormSpec;
use crate::linalg::Vector;

/// A positively homogeneous function maximized against the norm.
pub trait Numerator {
    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector);
}

impl<F> Numerator for F
where
    F: Fn(&Vector) -> (f64, Vector),
{
    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        self(x)
    }
}

#[derive(Debug, Clone)]
pub struct AscentOptions {
    pub max_iter: usize,
    /// Stop once three consecutive accepted steps each gain less than
    /// `rel_tol · f`.
    pub rel_tol: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            rel_tol: 1e-15,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AscentResult {
    pub value: f64,
    pub argmax: Vector,
    pub iterations: usize,
    /// Index of the start that produced the best value.
    pub best_start: usize,
    pub converged: bool,
}

/// Multistart projected ascent for `sup N(x) / ‖x‖`.
///
/// Each iterate is written `x = p − m` with `p, m ≥ 0`, which turns the ℓ1 part
/// of the denominator into the linear term `η n^{-1/2} Σ(pᵢ + mᵢ)`; the only
/// non-smoothness left is the orthant constraint, handled by projection.
/// Steps use Armijo backtracking; `p` and `m` are kept complementary and the
/// iterate is rescaled to `|x| = 1` after every step.
pub fn maximize_ratio<N: Numerator + ?Sized>(
    spec: &NormSpec,
    numerator: &N,
    starts: &[Vector],
    opts: &AscentOptions,
) -> AscentResult {
    let mut best: Option<AscentResult> = None;
    for (k, x0) in starts.iter().enumerate() {
        let mut r = ascend(spec, numerator, x0, opts);
        r.best_start = k;
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    best.expect("at least one start")
}

struct Point {
    p: Vector,
    m: Vector,
    f: f64,
    gp: Vector,
    gm: Vector,
}

fn evaluate<N: Numerator + ?Sized>(spec: &NormSpec, num: &N, p: Vector, m: Vector) -> Point {
    let w = spec.l1_weight();
    let x = &p - &m;
    let (nv, gn) = num.value_and_gradient(&x);
    let ax = spec.apply_a(&x);
    let na = x.dot(&ax).max(0.0).sqrt();
    let d = na + w * (p.sum() + m.sum());
    if na == 0.0 || d == 0.0 {
        let zeros = Vector::zeros(x.len());
        return Point {
            p,
            m,
            f: f64::NEG_INFINITY,
            gp: zeros.clone(),
            gm: zeros,
        };
    }
    let f = nv / d;
    let ga = ax / na;
    let gp = (&gn - &ga * f).add_scalar(-f * w) / d;
    let gm = (-&gn + &ga * f).add_scalar(-f * w) / d;
    Point { p, m, f, gp, gm }
}

fn normalize(p: &mut Vector, m: &mut Vector) {
    for (a, b) in p.iter_mut().zip(m.iter_mut()) {
        let c = a.min(*b);
        *a -= c;
        *b -= c;
    }
    let r = (&*p - &*m).norm();
    if r > 0.0 {
        *p /= r;
        *m /= r;
    }
}

fn ascend<N: Numerator + ?Sized>(spec: &NormSpec, num: &N, x0: &Vector, opts: &AscentOptions) -> AscentResult {
    let mut p = x0.map(|v| v.max(0.0));
    let mut m = x0.map(|v| (-v).max(0.0));
    normalize(&mut p, &mut m);
    let mut cur = evaluate(spec, num, p, m);
    let mut step = 1.0;
    let mut small_gains = 0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        let mut accepted = None;
        for _ in 0..60 {
            let mut np = (&cur.p + &cur.gp * step).map(|v| v.max(0.0));
            let mut nm = (&cur.m + &cur.gm * step).map(|v| v.max(0.0));
            let moved = (&np - &cur.p).norm_squared() + (&nm - &cur.m).norm_squared();
            if moved == 0.0 {
                break;
            }
            normalize(&mut np, &mut nm);
            let cand = evaluate(spec, num, np, nm);
            if cand.f >= cur.f + 1e-4 * moved / step {
                accepted = Some(cand);
                break;
            }
            step *= 0.3;
        }
        match accepted {
            None => {
                converged = true;
                break;
            }
            Some(next) => {
                let gain = next.f - cur.f;
                cur = next;
                step = (step * 2.0).min(1e6);
                if gain <= opts.rel_tol * cur.f.abs() {
                    small_gains += 1;
                    if small_gains >= 3 {
                        converged = true;
                        break;
                    }
                } else {
                    small_gains = 0;
                }
            }
        }
    }

    AscentResult {
        value: cur.f,
        argmax: &cur.p - &cur.m,
        iterations,
        best_start: 0,
        converged,
    }
}
