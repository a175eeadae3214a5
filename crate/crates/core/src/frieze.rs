//! Lambda lengths of a homotopy class of curves between two boundary components: the grid
//! recurrence, SL2-tiling checks, and the closed formula through zig-zag seeds of a polygon.
//!
//! Cells are addressed by `(i, j)`, where `i` labels a marked point on the first boundary and
//! `j` one on the second. Internally the grid uses `(a, b)` with `i = a` and `j = j0 + b * epsilon`,
//! so that every recurrence square is axis-aligned regardless of `epsilon`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::gluing::{ElemId, QuasiTriangulation};
use crate::laurent::{LaurentError, LaurentPoly, VarRegistry};
use crate::seed::{Seed, SeedError};

#[derive(Debug, Error)]
pub enum FriezeError {
    #[error("division by zero while computing cell ({0}, {1})")]
    DivisionByZero(i64, i64),
    #[error("cell ({i}, {j}): {source}")]
    NonExact { i: i64, j: i64, source: LaurentError },
    #[error(transparent)]
    Laurent(#[from] LaurentError),
    #[error("boundary condition violated at ({i}, {j}): expected {expected}, found {found}")]
    BoundaryConflict { i: i64, j: i64, expected: String, found: String },
    #[error("cell ({0}, {1}) is not determined by the staircase")]
    Unreachable(i64, i64),
    #[error("invalid frieze spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error("no flip sequence reaches the arc {{0,{0}}}")]
    Path(u32),
    #[error("closed formula uses `{0}`, which has no counterpart in the grid")]
    UnmappedVariable(String),
}

/// Values the grid can be filled with: floats, exact rationals or Laurent polynomials.
pub trait Value: Clone + Send + Sync + fmt::Debug {
    fn add(&self, o: &Self) -> Result<Self, LaurentError>;
    fn sub(&self, o: &Self) -> Result<Self, LaurentError>;
    fn mul(&self, o: &Self) -> Result<Self, LaurentError>;
    /// Exact division in symbolic mode.
    fn div(&self, o: &Self) -> Result<Self, LaurentError>;
    /// Integer constant in the same ring as `self`.
    fn int(&self, c: &BigInt) -> Self;
    fn is_zero(&self) -> bool;
    /// Exact equality, or relative agreement to 1e-9 for floats.
    fn agrees(&self, o: &Self) -> bool;
    fn is_positive(&self) -> bool;
    fn is_positive_integer(&self) -> bool;
    fn render(&self) -> String;
}

impl Value for f64 {
    fn add(&self, o: &Self) -> Result<Self, LaurentError> {
        Ok(self + o)
    }
    fn sub(&self, o: &Self) -> Result<Self, LaurentError> {
        Ok(self - o)
    }
    fn mul(&self, o: &Self) -> Result<Self, LaurentError> {
        Ok(self * o)
    }
    fn div(&self, o: &Self) -> Result<Self, LaurentError> {
        if *o == 0.0 {
            return Err(LaurentError::DivisionByZero);
        }
        Ok(self / o)
    }
    fn int(&self, c: &BigInt) -> Self {
        num_traits::ToPrimitive::to_f64(c).unwrap_or(f64::NAN)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn agrees(&self, o: &Self) -> bool {
        crate::hyperbolic::rel_error(*self, *o) <= 1e-9
    }
    fn is_positive(&self) -> bool {
        *self > 0.0
    }
    fn is_positive_integer(&self) -> bool {
        *self > 0.0 && self.fract() == 0.0
    }
    fn render(&self) -> String {
        format!("{self}")
    }
}

impl Value for BigRational {
    fn add(&self, o: &Self) -> Result<Self, LaurentError> {
        Ok(self + o)
    }
    fn sub(&self, o: &Self) -> Result<Self, LaurentError> {
        Ok(self - o)
    }
    fn mul(&self, o: &Self) -> Result<Self, LaurentError> {
        Ok(self * o)
    }
    fn div(&self, o: &Self) -> Result<Self, LaurentError> {
        if Zero::is_zero(o) {
            return Err(LaurentError::DivisionByZero);
        }
        Ok(self / o)
    }
    fn int(&self, c: &BigInt) -> Self {
        BigRational::from_integer(c.clone())
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn agrees(&self, o: &Self) -> bool {
        self == o
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_positive_integer(&self) -> bool {
        Signed::is_positive(self) && self.is_integer()
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl Value for LaurentPoly {
    fn add(&self, o: &Self) -> Result<Self, LaurentError> {
        self.try_add(o)
    }
    fn sub(&self, o: &Self) -> Result<Self, LaurentError> {
        self.try_sub(o)
    }
    fn mul(&self, o: &Self) -> Result<Self, LaurentError> {
        self.try_mul(o)
    }
    fn div(&self, o: &Self) -> Result<Self, LaurentError> {
        self.exact_div(o)
    }
    fn int(&self, c: &BigInt) -> Self {
        LaurentPoly::constant(self.registry(), c.clone())
    }
    fn is_zero(&self) -> bool {
        LaurentPoly::is_zero(self)
    }
    fn agrees(&self, o: &Self) -> bool {
        self.serialize() == o.serialize()
    }
    fn is_positive(&self) -> bool {
        self.has_positive_coefficients()
    }
    fn is_positive_integer(&self) -> bool {
        false
    }
    fn render(&self) -> String {
        self.serialize()
    }
}

#[derive(Debug, Clone)]
pub struct FriezeSpec<V> {
    pub p: usize,
    pub q: usize,
    pub epsilon: i64,
    /// `boundary_d[i]` is the lambda length of the segment `{i, i+1}` on the first boundary.
    pub boundary_d: Vec<V>,
    pub boundary_dp: Vec<V>,
    pub self_class: bool,
}

impl<V: Value> FriezeSpec<V> {
    pub fn new(epsilon: i64, boundary_d: Vec<V>, boundary_dp: Vec<V>, self_class: bool) -> Result<Self, FriezeError> {
        if epsilon != 1 && epsilon != -1 {
            return Err(FriezeError::InvalidSpec(format!("epsilon must be +1 or -1, got {epsilon}")));
        }
        if boundary_d.is_empty() || boundary_dp.is_empty() {
            return Err(FriezeError::InvalidSpec("boundary arrays must be non-empty".into()));
        }
        if self_class {
            if boundary_d.len() != boundary_dp.len() {
                return Err(FriezeError::InvalidSpec("self class needs p = q".into()));
            }
            // with epsilon = +1 the pinned rows force lambda(i, i+2) = 0
            if epsilon != -1 {
                return Err(FriezeError::InvalidSpec("self class boundary conditions require epsilon = -1".into()));
            }
        }
        Ok(FriezeSpec { p: boundary_d.len(), q: boundary_dp.len(), epsilon, boundary_d, boundary_dp, self_class })
    }

    /// All boundary lambda lengths equal to `one`.
    pub fn coefficient_free(p: usize, q: usize, epsilon: i64, one: V) -> Result<Self, FriezeError> {
        Self::new(epsilon, vec![one.clone(); p], vec![one; q], false)
    }

    pub fn is_coefficient_free(&self) -> bool {
        let one = self.boundary_d[0].int(&BigInt::one());
        self.boundary_d.iter().chain(&self.boundary_dp).all(|v| v.agrees(&one))
    }

    /// `lambda` of the segment `{i, i+1}` on the first boundary.
    pub fn seg_d(&self, i: i64) -> &V {
        &self.boundary_d[i.rem_euclid(self.p as i64) as usize]
    }

    /// `lambda` of the segment `{j, j+epsilon}` on the second boundary.
    pub fn seg_dp(&self, j: i64) -> &V {
        let lo = if self.epsilon == 1 { j } else { j - 1 };
        &self.boundary_dp[lo.rem_euclid(self.q as i64) as usize]
    }
}

/// The zig-zag initial data: `upper[l] = lambda(i0-l, j0+l*eps)` and
/// `lower[l] = lambda(i0-l-1, j0+l*eps)` for `l = 0..len`.
#[derive(Debug, Clone)]
pub struct Staircase<V> {
    pub i0: i64,
    pub j0: i64,
    pub upper: Vec<V>,
    pub lower: Vec<V>,
}

impl<V: Value> Staircase<V> {
    pub fn new(i0: i64, j0: i64, upper: Vec<V>, lower: Vec<V>) -> Result<Self, FriezeError> {
        if upper.len() != lower.len() || upper.is_empty() {
            return Err(FriezeError::InvalidSpec("staircase rows must have the same non-zero length".into()));
        }
        Ok(Staircase { i0, j0, upper, lower })
    }

    pub fn constant(i0: i64, j0: i64, len: usize, v: V) -> Self {
        Staircase { i0, j0, upper: vec![v.clone(); len], lower: vec![v; len] }
    }

    pub fn len(&self) -> usize {
        self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty()
    }

    /// The largest window the staircase determines.
    pub fn reachable(&self, epsilon: i64) -> Window {
        let k = self.len() as i64;
        let (j1, j2) = (self.j0, self.j0 + (k - 1) * epsilon);
        Window { i_min: self.i0 - k, i_max: self.i0, j_min: j1.min(j2), j_max: j1.max(j2) }
    }
}

/// Inclusive rectangle of cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub i_min: i64,
    pub i_max: i64,
    pub j_min: i64,
    pub j_max: i64,
}

impl Window {
    pub fn cells(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (self.i_min..=self.i_max).flat_map(move |i| (self.j_min..=self.j_max).map(move |j| (i, j)))
    }

    pub fn contains(&self, (i, j): (i64, i64)) -> bool {
        (self.i_min..=self.i_max).contains(&i) && (self.j_min..=self.j_max).contains(&j)
    }
}

#[derive(Debug, Clone)]
pub struct TilingGrid<V> {
    pub spec: FriezeSpec<V>,
    pub staircase: Staircase<V>,
    pub window: Window,
    cells: BTreeMap<(i64, i64), V>,
}

impl<V: Value> TilingGrid<V> {
    pub fn get(&self, i: i64, j: i64) -> Option<&V> {
        self.cells.get(&(i, j))
    }

    /// Window cells in row-major order.
    pub fn window_cells(&self) -> Vec<((i64, i64), &V)> {
        self.window.cells().map(|c| (c, &self.cells[&c])).collect()
    }

    pub fn all_positive(&self) -> bool {
        self.window_cells().iter().all(|(_, v)| v.is_positive())
    }

    pub fn all_positive_integers(&self) -> bool {
        self.window_cells().iter().all(|(_, v)| v.is_positive_integer())
    }

    pub fn set(&mut self, i: i64, j: i64, v: V) {
        self.cells.insert((i, j), v);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,value\n");
        for ((i, j), v) in self.window_cells() {
            s.push_str(&format!("{i},{j},{}\n", v.render()));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<_> = self.window_cells().into_iter().map(|((i, j), v)| json!([i, j, v.render()])).collect();
        json!({
            "p": self.spec.p,
            "q": self.spec.q,
            "epsilon": self.spec.epsilon,
            "self_class": self.spec.self_class,
            "window": [self.window.i_min, self.window.i_max, self.window.j_min, self.window.j_max],
            "cells": rows,
        })
    }
}

fn pin<V: Value>(spec: &FriezeSpec<V>, i: i64, j: i64) -> Option<V> {
    if !spec.self_class {
        return None;
    }
    match j - i {
        0 => Some(spec.boundary_d[0].int(&BigInt::one())),
        1 => Some(spec.seg_d(i).clone()),
        _ => None,
    }
}

fn in_domain<V>(spec: &FriezeSpec<V>, i: i64, j: i64) -> bool {
    !spec.self_class || j >= i
}

/// Fills `window` from the staircase with the recurrence
/// `l(i,j) l(i+1,j+e) = l(i+1,j) l(i,j+e) + d(i,i+1) d'(j,j+e)`.
pub fn extend<V: Value>(spec: &FriezeSpec<V>, staircase: &Staircase<V>, window: Window) -> Result<TilingGrid<V>, FriezeError> {
    let (i0, j0, eps) = (staircase.i0, staircase.j0, spec.epsilon);
    let k = staircase.len() as i64;
    let to_ij = |a: i64, b: i64| (a, j0 + b * eps);
    let mut known: BTreeMap<(i64, i64), V> = BTreeMap::new();

    let put = |known: &mut BTreeMap<(i64, i64), V>, a: i64, b: i64, v: V| -> Result<(), FriezeError> {
        let (i, j) = to_ij(a, b);
        if let Some(p) = pin(spec, i, j) {
            if !p.agrees(&v) {
                return Err(FriezeError::BoundaryConflict { i, j, expected: p.render(), found: v.render() });
            }
        }
        known.insert((a, b), v);
        Ok(())
    };
    for l in 0..k {
        put(&mut known, i0 - l, l, staircase.upper[l as usize].clone())?;
        put(&mut known, i0 - l - 1, l, staircase.lower[l as usize].clone())?;
    }
    if spec.self_class {
        for a in i0 - k..=i0 {
            for b in 0..k {
                let (i, j) = to_ij(a, b);
                if let Some(p) = pin(spec, i, j) {
                    known.entry((a, b)).or_insert(p);
                }
            }
        }
    }

    let boundary = |a: i64, b: i64| -> Result<V, LaurentError> {
        let (i, j) = to_ij(a, b);
        spec.seg_d(i).mul(spec.seg_dp(j))
    };
    // forward along anti-diagonals a + b = i0 + t, then backward
    for forward in [true, false] {
        for t in 1..=k {
            let s = if forward { i0 + t } else { i0 - 1 - t };
            type Cell<V> = Result<Option<((i64, i64), V)>, FriezeError>;
            let computed: Vec<Cell<V>> = (0..k)
                .into_par_iter()
                .map(|b| {
                    let a = s - b;
                    let (i, j) = to_ij(a, b);
                    if known.contains_key(&(a, b)) && pin(spec, i, j).is_none() {
                        return Ok(None);
                    }
                    // (a, b) is the far corner of its square, forward or backward
                    let (base, side1, side2, sq) = if forward {
                        ((a - 1, b - 1), (a, b - 1), (a - 1, b), (a - 1, b - 1))
                    } else {
                        ((a + 1, b + 1), (a + 1, b), (a, b + 1), (a, b))
                    };
                    let corners = [(a, b), base, side1, side2];
                    if corners.iter().any(|&(x, y)| !in_domain(spec, x, j0 + y * eps)) {
                        return Ok(None);
                    }
                    let (Some(d), Some(x), Some(y)) = (known.get(&base), known.get(&side1), known.get(&side2)) else {
                        return Ok(None);
                    };
                    if d.is_zero() {
                        return Err(FriezeError::DivisionByZero(i, j));
                    }
                    let num = x.mul(y).and_then(|xy| xy.add(&boundary(sq.0, sq.1)?));
                    let v = num.and_then(|n| n.div(d)).map_err(|source| FriezeError::NonExact { i, j, source })?;
                    Ok(Some(((a, b), v)))
                })
                .collect();
            for r in computed {
                if let Some(((a, b), v)) = r? {
                    put(&mut known, a, b, v)?;
                }
            }
        }
    }

    let mut cells = BTreeMap::new();
    for (&(a, b), v) in &known {
        cells.insert(to_ij(a, b), v.clone());
    }
    for c in window.cells() {
        if !cells.contains_key(&c) {
            return Err(FriezeError::Unreachable(c.0, c.1));
        }
    }
    Ok(TilingGrid { spec: spec.clone(), staircase: staircase.clone(), window, cells })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquareViolation {
    pub i: i64,
    pub j: i64,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshReport {
    pub squares: usize,
    pub violations: Vec<SquareViolation>,
}

impl MeshReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every square of the window whose four corners lie in it against the recurrence.
pub fn check_mesh<V: Value>(grid: &TilingGrid<V>) -> MeshReport {
    let spec = &grid.spec;
    let e = spec.epsilon;
    let squares: Vec<(i64, i64)> = grid
        .window
        .cells()
        .filter(|&(i, j)| grid.window.contains((i + 1, j + e)) && in_domain(spec, i + 1, j))
        .collect();
    let mut violations: Vec<SquareViolation> = squares
        .par_iter()
        .filter_map(|&(i, j)| {
            let c = |x: i64, y: i64| &grid.cells[&(x, y)];
            let lhs = c(i, j).mul(c(i + 1, j + e)).ok()?;
            let rhs = c(i + 1, j)
                .mul(c(i, j + e))
                .and_then(|x| x.add(&spec.seg_d(i).mul(spec.seg_dp(j))?))
                .ok()?;
            (!lhs.agrees(&rhs)).then(|| SquareViolation { i, j, lhs: lhs.render(), rhs: rhs.render() })
        })
        .collect();
    violations.sort_by_key(|v| (v.i, v.j));
    MeshReport { squares: squares.len(), violations }
}

/// Unit-determinant check of a coefficient-free grid.
pub fn check_sl2<V: Value>(grid: &TilingGrid<V>) -> Result<MeshReport, FriezeError> {
    if !grid.spec.is_coefficient_free() {
        return Err(FriezeError::InvalidSpec("SL2 check needs all boundary values equal to 1".into()));
    }
    Ok(check_mesh(grid))
}

/// Signed polygon label of vertex `v` of the `m`-gon, in `(k - m, k]`.
fn signed(v: u32, k: u32, m: u32) -> i64 {
    if v <= k {
        v as i64
    } else {
        v as i64 - m as i64
    }
}

fn label_name(a: i64, b: i64) -> String {
    let f = |x: i64| if x < 0 { format!("m{}", -x) } else { x.to_string() };
    format!("x_{}_{}", f(a), f(b))
}

/// The zig-zag triangulation `{-i, i+2}, {-i, i+1}` of the `m`-gon, as vertex pairs.
pub fn zigzag_diagonals(m: u32) -> Vec<(u32, u32)> {
    let v = |x: i64| x.rem_euclid(m as i64) as u32;
    (2..=m as i64 - 2)
        .map(|d| if d % 2 == 0 { (v(-(d - 2) / 2), v((d + 2) / 2)) } else { (v(-(d - 1) / 2), v((d + 1) / 2)) })
        .collect()
}

/// `x_{0,k}` expanded in the zig-zag seed of the `m`-gon.
#[derive(Debug, Clone)]
pub struct ClosedFormula {
    pub k: u32,
    pub m: u32,
    pub poly: LaurentPoly,
    /// Signed endpoint labels of each registry variable.
    pub labels: Vec<(i64, i64)>,
    pub path: Vec<String>,
}

/// Which endpoint of `{0, k}` the greedy flip sequence grows from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Source,
    Target,
}

fn crosses(x: (u32, u32), y: (u32, u32)) -> bool {
    let inside = |v: u32| x.0 < v && v < x.1;
    let ends = [x.0, x.1];
    if ends.contains(&y.0) || ends.contains(&y.1) {
        return false;
    }
    inside(y.0) != inside(y.1)
}

pub fn closed_formula_xk(k: u32, m: u32) -> Result<ClosedFormula, FriezeError> {
    closed_formula_via(k, m, Anchor::Source)
}

/// Mutates from the zig-zag seed until `{0, k}` appears. Each step flips the crossing arc whose
/// replacement is incident to the anchor, so the number of crossings drops by one.
pub fn closed_formula_via(k: u32, m: u32, anchor: Anchor) -> Result<ClosedFormula, FriezeError> {
    if k < 2 {
        return Err(FriezeError::InvalidSpec("closed formula needs k >= 2".into()));
    }
    // labels 2-k ..= k must be distinct vertices
    if m < (2 * k - 1).max(4) {
        return Err(FriezeError::InvalidSpec(format!("the {m}-gon is too small for k = {k}; need m >= {}", (2 * k - 1).max(4))));
    }
    let name = |i: u32, j: u32| {
        let (a, b) = (signed(i, k, m), signed(j, k, m));
        label_name(a.min(b), a.max(b))
    };
    let tri = QuasiTriangulation::polygon(m, &zigzag_diagonals(m), &name).map_err(SeedError::from)?;
    let mut seed = Seed::initial(tri)?;
    let target = (0, k);
    let pivot = if anchor == Anchor::Source { 0 } else { k };
    let found = |s: &Seed| -> Option<ElemId> {
        s.flippables_sorted().into_iter().find(|&e| s.triangulation().endpoints(e) == Some(target))
    };
    let mut steps = 0;
    let id = loop {
        if let Some(e) = found(&seed) {
            break e;
        }
        steps += 1;
        if steps > m * m {
            return Err(FriezeError::Path(k));
        }
        let tri = seed.triangulation();
        let next = seed.flippables_sorted().into_iter().find(|&e| {
            tri.endpoints(e).is_some_and(|x| crosses(x, target))
                && tri.flip(e).ok().and_then(|f| f.tri.endpoints(f.new)).is_some_and(|(a, b)| a == pivot || b == pivot)
        });
        let Some(e) = next else { return Err(FriezeError::Path(k)) };
        seed = seed.mutate(e)?.0;
    };
    let reg = seed.registry().clone();
    let labels = reg
        .names()
        .iter()
        .map(|n| {
            let parse = |s: &str| s.strip_prefix('m').map_or_else(|| s.parse::<i64>().unwrap(), |t| -t.parse::<i64>().unwrap());
            let mut it = n.trim_start_matches("x_").split('_');
            (parse(it.next().unwrap()), parse(it.next().unwrap()))
        })
        .collect();
    Ok(ClosedFormula { k, m, poly: seed.var(id).clone(), labels, path: seed.trace().to_vec() })
}

impl ClosedFormula {
    /// Substitutes grid data: zig-zag arcs become staircase cells, polygon boundary segments
    /// become boundary lambda lengths.
    pub fn evaluate<V: Value>(&self, spec: &FriezeSpec<V>, st: &Staircase<V>) -> Result<V, FriezeError> {
        let reg: &VarRegistry = self.poly.registry();
        let (i0, j0, e) = (st.i0, st.j0, spec.epsilon);
        let value = |idx: usize| -> Result<V, FriezeError> {
            let (a, b) = self.labels[idx];
            let unmapped = || FriezeError::UnmappedVariable(reg.name(idx).to_string());
            let cell = |row: &[V], l: i64| row.get(l as usize).cloned().ok_or_else(unmapped);
            if a <= 0 && b >= 2 && b == -a + 2 {
                cell(&st.upper, -a)
            } else if a < 0 && b >= 2 && b == -a + 1 {
                cell(&st.lower, b - 2)
            } else if b <= 0 && b - a == 1 {
                Ok(spec.seg_d(i0 + a).clone())
            } else if a >= 2 && b - a == 1 {
                Ok(spec.seg_dp(j0 + (a - 2) * e).clone())
            } else {
                Err(unmapped())
            }
        };
        let template = st.upper[0].clone();
        let mut total = template.int(&BigInt::zero());
        for (exps, c) in self.poly.terms() {
            let mut num = template.int(c);
            let mut den = template.int(&BigInt::one());
            for (idx, &x) in exps.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                let v = value(idx)?;
                for _ in 0..x.unsigned_abs() {
                    if x > 0 {
                        num = num.mul(&v)?;
                    } else {
                        den = den.mul(&v)?;
                    }
                }
            }
            total = total.add(&num.div(&den)?)?;
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormRow {
    pub k: u32,
    pub cell: (i64, i64),
    pub formula: String,
    pub recurrence: String,
    pub ok: bool,
}

/// Compares `X_k` against the recurrence at `(i0, j0 + (k-2) eps)` for `k = 2..=k_max`.
pub fn verify_closed_formula<V: Value>(spec: &FriezeSpec<V>, st: &Staircase<V>, k_max: u32) -> Result<Vec<ClosedFormRow>, FriezeError> {
    if (st.len() as u32) + 1 < k_max {
        return Err(FriezeError::InvalidSpec(format!("staircase of length {} is too short for k = {k_max}", st.len())));
    }
    let grid = extend(spec, st, st.reachable(spec.epsilon))?;
    let mut rows = Vec::new();
    for k in 2..=k_max {
        let f = closed_formula_xk(k, (2 * k - 1).max(4))?;
        let cell = (st.i0, st.j0 + (k as i64 - 2) * spec.epsilon);
        let lhs = f.evaluate(spec, st)?;
        let rhs = grid.get(cell.0, cell.1).ok_or(FriezeError::Unreachable(cell.0, cell.1))?;
        rows.push(ClosedFormRow { k, cell, ok: lhs.agrees(rhs), formula: lhs.render(), recurrence: rhs.render() });
    }
    Ok(rows)
}

/// Generic symbolic data: staircase generators `u0.., w0..` and boundary generators `d0.., e0..`.
pub fn symbolic_setup(p: usize, q: usize, epsilon: i64, len: usize) -> Result<(FriezeSpec<LaurentPoly>, Staircase<LaurentPoly>), FriezeError> {
    let names: Vec<String> = (0..len)
        .map(|l| format!("u{l}"))
        .chain((0..len).map(|l| format!("w{l}")))
        .chain((0..p).map(|i| format!("d{i}")))
        .chain((0..q).map(|j| format!("e{j}")))
        .collect();
    let reg = VarRegistry::new(names)?;
    let var = |i: usize| LaurentPoly::var(&reg, i);
    let spec = FriezeSpec::new(
        epsilon,
        (0..p).map(|i| var(2 * len + i)).collect(),
        (0..q).map(|j| var(2 * len + p + j)).collect(),
        false,
    )?;
    let st = Staircase::new(0, 0, (0..len).map(var).collect(), (0..len).map(|l| var(len + l)).collect())?;
    Ok((spec, st))
}

/// The AR quiver on a window: arrows `(i,j) -> (i+1,j)` and `(i,j) -> (i,j+eps)`.
#[derive(Debug, Clone)]
pub struct ArGrid {
    pub p: usize,
    pub q: usize,
    pub epsilon: i64,
    pub window: Window,
    pub vertices: Vec<(i64, i64)>,
    pub arrows: Vec<((i64, i64), (i64, i64))>,
}

impl ArGrid {
    pub fn sigma0(&self, (i, j): (i64, i64)) -> (i64, i64) {
        (i + 1, j)
    }

    pub fn sigma1(&self, (i, j): (i64, i64)) -> (i64, i64) {
        (i, j + self.epsilon)
    }

    pub fn tau(&self, (i, j): (i64, i64)) -> (i64, i64) {
        (i - 1, j - self.epsilon)
    }

    pub fn tau_inv(&self, (i, j): (i64, i64)) -> (i64, i64) {
        (i + 1, j + self.epsilon)
    }

    pub fn label(&self, (i, j): (i64, i64)) -> (i64, i64) {
        (i.rem_euclid(self.p as i64), j.rem_euclid(self.q as i64))
    }

    pub fn out_degree(&self, v: (i64, i64)) -> usize {
        self.arrows.iter().filter(|a| a.0 == v).count()
    }

    pub fn in_degree(&self, v: (i64, i64)) -> usize {
        self.arrows.iter().filter(|a| a.1 == v).count()
    }

    pub fn to_dot(&self) -> String {
        let id = |(i, j): (i64, i64)| format!("\"{i},{j}\"");
        let mut s = String::from("digraph ar {\n");
        for &v in &self.vertices {
            let (li, lj) = self.label(v);
            s.push_str(&format!("  {} [label=\"({li},{lj})\"];\n", id(v)));
        }
        for &(x, y) in &self.arrows {
            s.push_str(&format!("  {} -> {};\n", id(x), id(y)));
        }
        s.push_str("}\n");
        s
    }
}

pub fn ar_grid<V>(spec: &FriezeSpec<V>, window: Window) -> ArGrid {
    let vertices: Vec<_> = window.cells().collect();
    let mut g = ArGrid { p: spec.p, q: spec.q, epsilon: spec.epsilon, window, vertices, arrows: Vec::new() };
    for &v in &g.vertices {
        for w in [g.sigma0(v), g.sigma1(v)] {
            if window.contains(w) {
                g.arrows.push((v, w));
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn classical_growth() {
        let spec = FriezeSpec::coefficient_free(1, 1, 1, r(1)).unwrap();
        let st = Staircase::constant(0, 0, 3, r(1));
        let g = extend(&spec, &st, st.reachable(1)).unwrap();
        // anti-diagonal after the ones, then the next along the ray
        assert_eq!(g.get(0, 1), Some(&r(2)));
        assert_eq!(g.get(0, 2), Some(&r(5)));
        assert_eq!(g.get(-1, 0), Some(&r(1)));
        assert_eq!(g.get(-2, 0), Some(&r(2)));
        assert_eq!(g.get(-3, 0), Some(&r(5)));
        assert!(check_sl2(&g).unwrap().ok());
        assert!(g.all_positive_integers());
    }

    #[test]
    fn growth_along_ray() {
        // forward diagonal from 1,1,1 to 2, then (2*2+1)/1 = 5
        let spec = FriezeSpec::coefficient_free(1, 1, 1, 1.0f64).unwrap();
        let st = Staircase::constant(0, 0, 2, 1.0);
        let g = extend(&spec, &st, st.reachable(1)).unwrap();
        assert_eq!(g.get(0, 1), Some(&2.0));
        let st = Staircase::new(0, 0, vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        let g = extend(&spec, &st, st.reachable(1)).unwrap();
        assert_eq!(g.get(0, 1), Some(&3.0));
        assert_eq!(g.get(-2, 0), Some(&1.0));
    }

    #[test]
    fn perturbed_entry_is_localized() {
        let spec = FriezeSpec::coefficient_free(2, 3, 1, r(1)).unwrap();
        let st = Staircase::constant(0, 0, 4, r(1));
        let mut g = extend(&spec, &st, st.reachable(1)).unwrap();
        assert!(check_sl2(&g).unwrap().ok());
        g.set(-2, 1, r(100));
        let rep = check_sl2(&g).unwrap();
        let cells: Vec<_> = rep.violations.iter().map(|v| (v.i, v.j)).collect();
        assert_eq!(cells, vec![(-3, 0), (-3, 1), (-2, 0), (-2, 1)]);
    }

    #[test]
    fn symbolic_laurent_and_unit_determinants() {
        for eps in [1, -1] {
            let (spec, st) = symbolic_setup(7, 7, eps, 6).unwrap();
            let g = extend(&spec, &st, st.reachable(eps)).unwrap();
            assert!(check_mesh(&g).ok());
            assert!(g.all_positive());
        }
        let reg = VarRegistry::new((0..12).map(|l| format!("s{l}"))).unwrap();
        let one = LaurentPoly::one(&reg);
        let spec = FriezeSpec::coefficient_free(1, 1, 1, one).unwrap();
        let st = Staircase::new(0, 0, (0..6).map(|l| LaurentPoly::var(&reg, l)).collect(), (6..12).map(|l| LaurentPoly::var(&reg, l)).collect()).unwrap();
        let g = extend(&spec, &st, st.reachable(1)).unwrap();
        assert!(check_sl2(&g).unwrap().ok());
    }

    #[test]
    fn self_class_reproduces_boundary() {
        let bd: Vec<BigRational> = vec![r(2), r(3), r(1), r(5)];
        let spec = FriezeSpec::new(-1, bd.clone(), bd.clone(), true).unwrap();
        let st = Staircase::new(3, 3, vec![r(1); 4], (0..4).map(|l| bd[(2 - l as i64).rem_euclid(4) as usize].clone()).collect()).unwrap();
        let g = extend(&spec, &st, Window { i_min: 0, i_max: 3, j_min: 0, j_max: 3 });
        // the upper triangle is not reachable from the lower rows; only check what is filled
        let g = match g {
            Ok(g) => g,
            Err(FriezeError::Unreachable(..)) => extend(&spec, &st, Window { i_min: 0, i_max: 0, j_min: 0, j_max: 1 }).unwrap(),
            Err(e) => panic!("{e}"),
        };
        for i in -1..=3 {
            if let Some(v) = g.get(i, i + 1) {
                assert_eq!(v, spec.seg_d(i));
            }
            if let Some(v) = g.get(i, i) {
                assert_eq!(v, &r(1));
            }
        }
        // the first unpinned row is 2 d_i d_{i+1}
        assert_eq!(g.get(0, 2), Some(&(r(2) * r(2) * r(3))));
        let bad = Staircase::new(3, 3, vec![r(2); 4], vec![r(1); 4]).unwrap();
        assert!(matches!(extend(&spec, &bad, bad.reachable(-1)), Err(FriezeError::BoundaryConflict { .. })));
        assert!(FriezeSpec::new(1, bd.clone(), bd, true).is_err());
    }

    #[test]
    fn closed_formula_small() {
        let x2 = closed_formula_xk(2, 4).unwrap();
        assert_eq!(x2.poly.serialize(), "+1 * x_0_2");
        let x3 = closed_formula_xk(3, 5).unwrap();
        assert_eq!(x3.poly.num_terms(), 2);
        assert!(x3.poly.has_positive_coefficients());
        // brute-force Ptolemy in the quadrilateral (-1, 0, 2, 3)
        let reg = x3.poly.registry();
        let v = |n: &str| LaurentPoly::var_named(reg, n).unwrap();
        let expect = (&(&v("x_m1_0") * &v("x_2_3")) + &(&v("x_0_2") * &v("x_m1_3"))).exact_div(&v("x_m1_2")).unwrap();
        assert_eq!(x3.poly, expect);
        for k in 2..=6 {
            let f = closed_formula_xk(k, (2 * k - 1).max(4)).unwrap();
            assert!(f.poly.has_positive_coefficients(), "k = {k}");
        }
        assert!(closed_formula_xk(4, 5).is_err());
    }

    #[test]
    fn closed_formula_path_independent() {
        for k in [3, 4] {
            let a = closed_formula_via(k, 2 * k - 1, Anchor::Source).unwrap();
            let b = closed_formula_via(k, 2 * k - 1, Anchor::Target).unwrap();
            assert_eq!(a.poly, b.poly);
            if k == 4 {
                assert_ne!(a.path, b.path);
            }
        }
    }

    #[test]
    fn closed_formula_matches_recurrence() {
        for eps in [1, -1] {
            let spec = FriezeSpec::new(eps, vec![r(2), r(1), r(3)], vec![r(1), r(4)], false).unwrap();
            let st = Staircase::new(1, -2, (1..=5).map(r).collect(), (2..=6).map(r).collect()).unwrap();
            for row in verify_closed_formula(&spec, &st, 6).unwrap() {
                assert!(row.ok, "{row:?}");
            }
            let (spec, st) = symbolic_setup(6, 6, eps, 3).unwrap();
            for row in verify_closed_formula(&spec, &st, 4).unwrap() {
                assert!(row.ok, "{row:?}");
            }
        }
    }

    #[test]
    fn ar_quiver() {
        let spec = FriezeSpec::coefficient_free(1, 1, -1, 1.0).unwrap();
        let w = Window { i_min: 0, i_max: 4, j_min: 0, j_max: 4 };
        let g = ar_grid(&spec, w);
        for &v in &g.vertices {
            assert_eq!(g.tau_inv(v), g.sigma0(g.sigma1(v)));
            assert_eq!(g.tau_inv(v), g.sigma1(g.sigma0(v)));
            assert_eq!(g.tau(g.tau_inv(v)), v);
            assert_eq!(g.label(v), (0, 0));
            if v.0 > 0 && v.0 < 4 && v.1 > 0 && v.1 < 4 {
                assert_eq!((g.in_degree(v), g.out_degree(v)), (2, 2));
            }
        }
        assert!(g.to_dot().contains("\"0,1\" -> \"0,0\""));
    }
}
