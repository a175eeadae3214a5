//! Lambda lengths in the upper half-plane and randomized checks of the resolution identities.
//!
//! Horocycles are given by a center on the real line (or at infinity) and a diameter (or the
//! height of the horizontal line for a center at infinity). Isometries are real 2x2 matrices with
//! determinant ±1; negative determinant acts by the anti-Möbius map, which agrees with the
//! Möbius formula on the boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HyperbolicError {
    #[error("horocycles share the center {0}")]
    CoincidentCenters(f64),
    #[error("both horocycles are centered at infinity")]
    BothInfinite,
    #[error("horocycle size must be positive, got {0}")]
    NonPositiveSize(f64),
    #[error("|det| = {0} is not 1")]
    NotUnimodular(f64),
    #[error("zero trace (elliptic element or reflection)")]
    ZeroTrace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Center {
    Finite(f64),
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horocycle {
    pub center: Center,
    /// Euclidean diameter, or the height of the horizontal line when centered at infinity.
    pub size: f64,
}

impl Horocycle {
    pub fn new(u: f64, h: f64) -> Result<Self, HyperbolicError> {
        if h <= 0.0 || !h.is_finite() {
            return Err(HyperbolicError::NonPositiveSize(h));
        }
        Ok(Horocycle { center: Center::Finite(u), size: h })
    }

    pub fn at_infinity(height: f64) -> Result<Self, HyperbolicError> {
        if height <= 0.0 || !height.is_finite() {
            return Err(HyperbolicError::NonPositiveSize(height));
        }
        Ok(Horocycle { center: Center::Infinity, size: height })
    }

    fn finite(u: f64, h: f64) -> Self {
        Horocycle { center: Center::Finite(u), size: h }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    pub m: [[f64; 2]; 2],
}

impl Isometry {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, HyperbolicError> {
        let det = a * d - b * c;
        if (det.abs() - 1.0).abs() > 1e-12 {
            return Err(HyperbolicError::NotUnimodular(det.abs()));
        }
        Ok(Isometry { m: [[a, b], [c, d]] })
    }

    /// Rescales an invertible matrix to `|det| = 1`.
    pub fn normalized(a: f64, b: f64, c: f64, d: f64) -> Self {
        let s = (a * d - b * c).abs().sqrt();
        Isometry { m: [[a / s, b / s], [c / s, d / s]] }
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Isometry { m: [[a, 0.0], [0.0, d]] }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn preserves_orientation(&self) -> bool {
        self.det() > 0.0
    }

    pub fn mul(&self, o: &Isometry) -> Isometry {
        let (a, b) = (self.m, o.m);
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Isometry { m }
    }

    /// Adjugate over determinant.
    pub fn inverse(&self) -> Isometry {
        let d = self.det();
        let [[a, b], [c, e]] = self.m;
        Isometry { m: [[e / d, -b / d], [-c / d, a / d]] }
    }

    pub fn apply(&self, h: &Horocycle) -> Horocycle {
        let [[a, b], [c, d]] = self.m;
        let det = self.det().abs();
        match h.center {
            Center::Finite(u) => {
                let den = c * u + d;
                if den == 0.0 {
                    Horocycle { center: Center::Infinity, size: det / (c * c * h.size) }
                } else {
                    Horocycle::finite((a * u + b) / den, det * h.size / (den * den))
                }
            }
            Center::Infinity => {
                if c == 0.0 {
                    Horocycle { center: Center::Infinity, size: h.size * (a / d).abs() }
                } else {
                    Horocycle::finite(a / c, det / (c * c * h.size))
                }
            }
        }
    }
}

/// Penner lambda length of the decorated geodesic joining two horocycles.
pub fn lambda_arc(p: &Horocycle, q: &Horocycle) -> Result<f64, HyperbolicError> {
    match (p.center, q.center) {
        (Center::Finite(u), Center::Finite(v)) => {
            if u == v {
                return Err(HyperbolicError::CoincidentCenters(u));
            }
            Ok((v - u).abs() / (p.size * q.size).sqrt())
        }
        (Center::Infinity, Center::Finite(_)) => Ok((p.size / q.size).sqrt()),
        (Center::Finite(_), Center::Infinity) => Ok((q.size / p.size).sqrt()),
        (Center::Infinity, Center::Infinity) => Err(HyperbolicError::BothInfinite),
    }
}

/// Lambda length of a closed curve with holonomy `m`: `|tr m|`.
pub fn lambda_closed(m: &Isometry) -> Result<f64, HyperbolicError> {
    let t = m.trace().abs();
    if t == 0.0 {
        return Err(HyperbolicError::ZeroTrace);
    }
    Ok(t)
}

pub fn rel_error(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    (lhs - rhs).abs() / scale
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BranchReport {
    pub name: String,
    pub samples: usize,
    pub failures: usize,
    pub excluded: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub rng_seed: u64,
    pub tolerance: f64,
    pub branches: Vec<BranchReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.branches.iter().all(|b| b.failures == 0 && b.samples > 0)
    }

    pub fn samples(&self) -> usize {
        self.branches.iter().map(|b| b.samples).min().unwrap_or(0)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.branches.iter().map(|b| b.max_rel_error).fold(0.0, f64::max)
    }
}

/// One sample: `Some((lhs, rhs))`, or `None` when the sampler rejects the draw.
type Sampler = dyn Fn(&mut ChaCha8Rng) -> Option<(f64, f64)>;

fn run_branch(name: &str, index: u64, samples: usize, seed: u64, tol: f64, f: &Sampler) -> BranchReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut r = BranchReport { name: name.to_string(), samples: 0, failures: 0, excluded: 0, max_rel_error: 0.0 };
    while r.samples < samples {
        if r.excluded > 100 * samples {
            break;
        }
        match f(&mut rng) {
            None => r.excluded += 1,
            Some((lhs, rhs)) => {
                let e = rel_error(lhs, rhs);
                r.samples += 1;
                if e.is_nan() || e > tol {
                    r.failures += 1;
                }
                r.max_rel_error = r.max_rel_error.max(e);
            }
        }
    }
    r
}

/// A family of randomized identity checks.
pub trait IdentitySuite: Send + Sync {
    fn name(&self) -> &'static str;
    fn branches(&self) -> Vec<(&'static str, Box<Sampler>)>;

    fn run(&self, samples: usize, rng_seed: u64, tol: f64) -> SuiteReport {
        let branches = self
            .branches()
            .iter()
            .enumerate()
            .map(|(i, (n, f))| run_branch(n, i as u64, samples, rng_seed, tol, f.as_ref()))
            .collect();
        SuiteReport { suite: self.name().to_string(), rng_seed, tolerance: tol, branches }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn random_isometry(rng: &mut ChaCha8Rng, det_sign: f64) -> Option<Isometry> {
    let a: f64 = rng.gen_range(-3.0..3.0);
    let b: f64 = rng.gen_range(-3.0..3.0);
    let c: f64 = rng.gen_range(-3.0..3.0);
    let d: f64 = rng.gen_range(-3.0..3.0);
    let det = a * d - b * c;
    if det.abs() < 0.05 || det.signum() != det_sign {
        return None;
    }
    Some(Isometry::normalized(a, b, c, d))
}

fn random_isometry_any(rng: &mut ChaCha8Rng) -> Option<Isometry> {
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    random_isometry(rng, sign)
}

pub struct Ptolemy;

impl IdentitySuite for Ptolemy {
    fn name(&self) -> &'static str {
        "ptolemy"
    }

    fn branches(&self) -> Vec<(&'static str, Box<Sampler>)> {
        vec![(
            "quadrilateral",
            Box::new(|rng| {
                let mut u: Vec<f64> = (0..4).map(|_| rng.gen_range(-10.0..10.0)).collect();
                u.sort_by(f64::total_cmp);
                if u.windows(2).any(|w| w[1] - w[0] < 1e-3) {
                    return None;
                }
                let g = random_isometry_any(rng)?;
                let hs: Vec<Horocycle> = u
                    .iter()
                    .map(|&x| g.apply(&Horocycle::finite(x, log_uniform(rng, 0.01, 10.0))))
                    .collect();
                if hs.iter().any(|h| h.center == Center::Infinity) {
                    return None;
                }
                let l = |i: usize, j: usize| lambda_arc(&hs[i], &hs[j]).unwrap();
                Some((l(0, 2) * l(1, 3), l(0, 1) * l(2, 3) + l(1, 2) * l(3, 0)))
            }),
        )]
    }
}

pub struct TraceSkein;

impl IdentitySuite for TraceSkein {
    fn name(&self) -> &'static str {
        "trace_skein"
    }

    fn branches(&self) -> Vec<(&'static str, Box<Sampler>)> {
        let combo = |sa: f64, sb: f64| -> Box<Sampler> {
            Box::new(move |rng| {
                let mut a = random_isometry(rng, sa)?;
                let mut b = random_isometry(rng, sb)?;
                if a.trace().abs() < 1e-6 || b.trace().abs() < 1e-6 {
                    return None;
                }
                // representatives with positive trace
                if a.trace() < 0.0 {
                    a = a.mul(&Isometry::diag(-1.0, -1.0));
                }
                if b.trace() < 0.0 {
                    b = b.mul(&Isometry::diag(-1.0, -1.0));
                }
                let lhs = a.trace() * b.trace();
                let rhs = a.mul(&b).trace() + b.det() * a.mul(&b.inverse()).trace();
                Some((lhs, rhs))
            })
        };
        vec![
            ("det(+,+)", combo(1.0, 1.0)),
            ("det(+,-)", combo(1.0, -1.0)),
            ("det(-,+)", combo(-1.0, 1.0)),
            ("det(-,-)", combo(-1.0, -1.0)),
        ]
    }
}

/// Triple of horocycles exchanged by a glide reflection around a crosscap.
#[derive(Debug, Clone, Copy)]
pub struct AntiSelfTriple {
    pub mu: f64,
    pub u: Horocycle,
    pub w: Horocycle,
    pub v: Horocycle,
    pub d: Isometry,
}

/// Builds the triple with `lambda(U, V) = c` and `|tr D| = d`.
pub fn antiself_triple(c: f64, d: f64) -> AntiSelfTriple {
    let mu = (d + (d * d + 4.0).sqrt()) / 2.0;
    let u0 = c / (mu * mu - 1.0 / (mu * mu));
    let u = Horocycle::finite(u0, 1.0);
    let w = Horocycle::finite(-mu * mu * u0, mu * mu);
    let v = Horocycle::finite(mu.powi(4) * u0, mu.powi(4));
    AntiSelfTriple { mu, u, w, v, d: Isometry::diag(mu, -1.0 / mu) }
}

fn horo_err(a: &Horocycle, b: &Horocycle) -> f64 {
    match (a.center, b.center) {
        (Center::Finite(x), Center::Finite(y)) => rel_error(x, y).max(rel_error(a.size, b.size)),
        _ => f64::INFINITY,
    }
}

pub struct AntiSelf;

impl IdentitySuite for AntiSelf {
    fn name(&self) -> &'static str {
        "antiself"
    }

    fn branches(&self) -> Vec<(&'static str, Box<Sampler>)> {
        vec![(
            "triple",
            Box::new(|rng| {
                let c = log_uniform(rng, 0.01, 100.0);
                let d = log_uniform(rng, 0.01, 100.0);
                let t = antiself_triple(c, d);
                // fold every sub-check into one relative error against lambda(U, V) = c
                let e = [
                    horo_err(&t.d.apply(&t.u), &t.w),
                    horo_err(&t.d.apply(&t.w), &t.v),
                    rel_error(lambda_closed(&t.d).ok()?, d),
                    rel_error(lambda_arc(&t.u, &t.w).ok()?, c / d),
                    rel_error(lambda_arc(&t.w, &t.v).ok()?, c / d),
                ]
                .into_iter()
                .fold(0.0, f64::max);
                let lhs = lambda_arc(&t.u, &t.v).ok()?;
                Some((lhs, c * (1.0 + e)))
            }),
        )]
    }
}

pub struct DSquared;

impl IdentitySuite for DSquared {
    fn name(&self) -> &'static str {
        "d_squared"
    }

    fn branches(&self) -> Vec<(&'static str, Box<Sampler>)> {
        vec![(
            "mu",
            Box::new(|rng| {
                let mu: f64 = rng.gen_range(1.0..=100.0);
                if mu <= 1.0 {
                    return None;
                }
                let d = Isometry::diag(mu, -1.0 / mu);
                let l = lambda_closed(&d).ok()?;
                Some((lambda_closed(&d.mul(&d)).ok()?, l * l + 2.0))
            }),
        )]
    }
}

pub struct ArcCurve;

impl IdentitySuite for ArcCurve {
    fn name(&self) -> &'static str {
        "arc_curve"
    }

    fn branches(&self) -> Vec<(&'static str, Box<Sampler>)> {
        fn check(b: Isometry, u: f64, v: f64, h: f64, k: f64) -> Option<(f64, f64)> {
            let (pu, pv) = (Horocycle::finite(u, h), Horocycle::finite(v, k));
            let la = lambda_arc(&pu, &pv).ok()?;
            let lb = lambda_closed(&b).ok()?;
            let le = lambda_arc(&pu, &b.apply(&pv)).ok()?;
            let lf = lambda_arc(&b.apply(&pu), &pv).ok()?;
            Some((la * lb, le + lf))
        }
        vec![
            (
                "two_sided",
                Box::new(|rng| {
                    let eta = rng.gen_range(1.01..10.0);
                    let (u, v) = (-log_uniform(rng, 0.01, 10.0), log_uniform(rng, 0.01, 10.0));
                    let (h, k) = (log_uniform(rng, 0.01, 10.0), log_uniform(rng, 0.01, 10.0));
                    check(Isometry::diag(eta, 1.0 / eta), u, v, h, k)
                }),
            ),
            (
                "one_sided",
                Box::new(|rng| {
                    // the resolution is crossing-free only for -eta^2 v < u < -v / eta^2
                    let eta: f64 = rng.gen_range(1.01..10.0);
                    let v = log_uniform(rng, 0.01, 10.0);
                    let s: f64 = rng.gen_range(-0.99..0.99);
                    let u = -v * eta.powf(2.0 * s);
                    let (h, k) = (log_uniform(rng, 0.01, 10.0), log_uniform(rng, 0.01, 10.0));
                    check(Isometry::diag(eta, -1.0 / eta), u, v, h, k)
                }),
            ),
        ]
    }
}

pub struct SelfIntersection;

impl IdentitySuite for SelfIntersection {
    fn name(&self) -> &'static str {
        "self_intersection"
    }

    fn branches(&self) -> Vec<(&'static str, Box<Sampler>)> {
        // a = (U, B V), c = (U, V), d = (V, B U); lambda(a) = lambda(b) lambda(c) + lambda(d)
        fn check(b: Isometry, u: f64, v: f64, h: f64, k: f64) -> Option<(f64, f64)> {
            let (pu, pv) = (Horocycle::finite(u, h), Horocycle::finite(v, k));
            let la = lambda_arc(&pu, &b.apply(&pv)).ok()?;
            let lc = lambda_arc(&pu, &pv).ok()?;
            let ld = lambda_arc(&pv, &b.apply(&pu)).ok()?;
            let lb = lambda_closed(&b).ok()?;
            Some((la, lb * lc + ld))
        }
        vec![
            (
                "two_sided",
                Box::new(|rng| {
                    // u < v < eta^2 u
                    let eta: f64 = rng.gen_range(1.01..10.0);
                    let u = log_uniform(rng, 0.01, 10.0);
                    let s: f64 = rng.gen_range(0.01..0.99);
                    let v = u * eta.powf(2.0 * s);
                    let (h, k) = (log_uniform(rng, 0.01, 10.0), log_uniform(rng, 0.01, 10.0));
                    check(Isometry::diag(eta, 1.0 / eta), u, v, h, k)
                }),
            ),
            (
                "one_sided",
                Box::new(|rng| {
                    let eta: f64 = rng.gen_range(1.01..10.0);
                    let u = log_uniform(rng, 0.01, 10.0);
                    let v = u + log_uniform(rng, 0.01, 10.0);
                    let (h, k) = (log_uniform(rng, 0.01, 10.0), log_uniform(rng, 0.01, 10.0));
                    check(Isometry::diag(eta, -1.0 / eta), u, v, h, k)
                }),
            ),
        ]
    }
}

pub struct IsometryInvariance;

impl IdentitySuite for IsometryInvariance {
    fn name(&self) -> &'static str {
        "isometry_invariance"
    }

    fn branches(&self) -> Vec<(&'static str, Box<Sampler>)> {
        vec![
            (
                "lambda_arc",
                Box::new(|rng| {
                    let p = Horocycle::finite(rng.gen_range(-10.0..10.0), log_uniform(rng, 0.01, 10.0));
                    let q = Horocycle::finite(rng.gen_range(-10.0..10.0), log_uniform(rng, 0.01, 10.0));
                    let g = random_isometry_any(rng)?;
                    Some((lambda_arc(&p, &q).ok()?, lambda_arc(&g.apply(&p), &g.apply(&q)).ok()?))
                }),
            ),
            (
                "trace_conjugation",
                Box::new(|rng| {
                    let m = random_isometry_any(rng)?;
                    let g = random_isometry_any(rng)?;
                    if m.trace().abs() < 1e-6 {
                        return None;
                    }
                    let conj = g.mul(&m).mul(&g.inverse());
                    Some((lambda_closed(&m).ok()?, lambda_closed(&conj).ok()?))
                }),
            ),
        ]
    }
}

/// All suites, in report order.
pub fn suites() -> Vec<Box<dyn IdentitySuite>> {
    vec![
        Box::new(Ptolemy),
        Box::new(TraceSkein),
        Box::new(AntiSelf),
        Box::new(DSquared),
        Box::new(ArcCurve),
        Box::new(SelfIntersection),
        Box::new(IsometryInvariance),
    ]
}

pub fn suite(name: &str) -> Option<Box<dyn IdentitySuite>> {
    suites().into_iter().find(|s| s.name() == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(u: f64, d: f64) -> Horocycle {
        Horocycle::new(u, d).unwrap()
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_arc(&h(0.0, 1.0), &h(1.0, 1.0)).unwrap(), 1.0);
        assert_eq!(lambda_arc(&h(0.0, 4.0), &h(3.0, 1.0)).unwrap(), 1.5);
        assert!(lambda_arc(&h(1.0, 1.0), &h(1.0, 2.0)).is_err());
        let inf = Horocycle::at_infinity(4.0).unwrap();
        assert_eq!(lambda_arc(&inf, &h(0.0, 1.0)).unwrap(), 2.0);
        assert!(Horocycle::new(0.0, 0.0).is_err());
    }

    #[test]
    fn infinity_limit_agrees() {
        // send the center 0 to infinity with z -> -1/z
        let g = Isometry::new(0.0, -1.0, 1.0, 0.0).unwrap();
        let (p, q) = (h(0.0, 0.5), h(2.0, 3.0));
        let (gp, gq) = (g.apply(&p), g.apply(&q));
        assert_eq!(gp.center, Center::Infinity);
        assert!(rel_error(lambda_arc(&gp, &gq).unwrap(), lambda_arc(&p, &q).unwrap()) < 1e-12);
    }

    #[test]
    fn closed_examples() {
        assert_eq!(lambda_closed(&Isometry::diag(2.0, 0.5)).unwrap(), 2.5);
        assert_eq!(lambda_closed(&Isometry::diag(2.0, -0.5)).unwrap(), 1.5);
        assert!(lambda_closed(&Isometry::new(0.0, 1.0, -1.0, 0.0).unwrap()).is_err());
        assert!(Isometry::new(2.0, 0.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn skein_example() {
        let a = Isometry::diag(2.0, 0.5);
        let lhs = a.trace() * a.trace();
        let rhs = a.mul(&a).trace() + a.det() * a.mul(&a.inverse()).trace();
        assert_eq!(lhs, 6.25);
        assert_eq!(rhs, 4.25 + 2.0);
        let id = a.mul(&a.inverse());
        assert!((id.m[0][0] - 1.0).abs() < 1e-12 && id.m[0][1].abs() < 1e-12);
    }

    #[test]
    fn antiself_example() {
        let t = antiself_triple(3.0, 1.5);
        assert!((t.mu - 2.0).abs() < 1e-12);
        assert!(rel_error(lambda_arc(&t.u, &t.v).unwrap(), 3.0) < 1e-12);
        assert!(rel_error(lambda_arc(&t.u, &t.w).unwrap(), 2.0) < 1e-12);
        let t2 = antiself_triple(6.0, 1.5);
        assert!(rel_error(lambda_arc(&t2.u, &t2.v).unwrap(), 6.0) < 1e-12);
    }

    #[test]
    fn d_squared_example() {
        let d = Isometry::diag(2.0, -0.5);
        assert_eq!(lambda_closed(&d).unwrap(), 1.5);
        assert_eq!(lambda_closed(&d.mul(&d)).unwrap(), 4.25);
    }

    #[test]
    fn resolution_examples() {
        // arc and curve, eta = 2, U = (-1, 1), V = (1, 1)
        let (u, v) = (h(-1.0, 1.0), h(1.0, 1.0));
        for (b, lb) in [(Isometry::diag(2.0, 0.5), 2.5), (Isometry::diag(2.0, -0.5), 1.5)] {
            let la = lambda_arc(&u, &v).unwrap();
            assert_eq!(la, 2.0);
            assert_eq!(lambda_closed(&b).unwrap(), lb);
            let sum = lambda_arc(&u, &b.apply(&v)).unwrap() + lambda_arc(&b.apply(&u), &v).unwrap();
            assert!(rel_error(la * lb, sum) < 1e-12);
        }
        // non-simple arc, eta = 2, u = 1, v = 2
        let b = Isometry::diag(2.0, 0.5);
        let (u, v) = (h(1.0, 1.0), h(2.0, 1.0));
        let la = lambda_arc(&u, &b.apply(&v)).unwrap();
        assert!(rel_error(la, 3.5) < 1e-12);
        let rhs = 2.5 * lambda_arc(&u, &v).unwrap() + lambda_arc(&v, &b.apply(&u)).unwrap();
        assert!(rel_error(la, rhs) < 1e-12);
    }

    #[test]
    fn suites_pass_small() {
        for s in suites() {
            let r = s.run(200, 11, 1e-9);
            assert!(r.passed(), "{r:?}");
        }
        assert!(suite("ptolemy").is_some());
        assert!(suite("nope").is_none());
    }
}
