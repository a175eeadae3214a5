//! Quasi-seeds and quasi-mutation.
//!
//! A seed pairs a quasi-triangulation with one Laurent polynomial per flippable element.
//! Mutation applies the exchange relation of the local flip case and divides exactly,
//! so every stored variable is a genuine Laurent polynomial in the initial generators.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gluing::{ElemId, ElementKind, FlipCase, GluingError, QuasiTriangulation};
use crate::laurent::{LaurentError, LaurentPoly, VarRegistry};

#[derive(Debug, Clone, Error)]
pub enum SeedError {
    #[error(transparent)]
    Gluing(#[from] GluingError),
    #[error("Laurent phenomenon violated flipping `{element}` after trace {trace:?}: {source}")]
    LaurentViolation {
        element: String,
        trace: Vec<String>,
        #[source]
        source: LaurentError,
    },
    #[error(transparent)]
    Laurent(#[from] LaurentError),
    #[error("unknown element `{0}`")]
    UnknownName(String),
    #[error("seed JSON: {0}")]
    Json(String),
}

/// Names freshly created variables.
pub trait Namer: Send + Sync {
    fn name(&self, x: &LaurentPoly) -> Option<String>;
}

/// Lookup by canonical serialization.
#[derive(Debug, Clone, Default)]
pub struct TableNamer {
    table: HashMap<String, String>,
}

impl TableNamer {
    pub fn new(entries: impl IntoIterator<Item = (LaurentPoly, String)>) -> Self {
        TableNamer { table: entries.into_iter().map(|(p, n)| (p.serialize(), n)).collect() }
    }
}

impl Namer for TableNamer {
    fn name(&self, x: &LaurentPoly) -> Option<String> {
        self.table.get(&x.serialize()).cloned()
    }
}

/// Names variables expressed in a different registry by evaluating both sides at a shared
/// exact rational point.
#[derive(Debug, Clone)]
pub struct EvalNamer {
    point: Vec<BigRational>,
    by_value: HashMap<BigRational, String>,
}

impl EvalNamer {
    /// `point` assigns values to the generators of the registry the namer will be queried in;
    /// `known` lists already-evaluated values for each name.
    pub fn new(point: Vec<BigRational>, known: impl IntoIterator<Item = (BigRational, String)>) -> Self {
        EvalNamer { point, by_value: known.into_iter().collect() }
    }
}

impl Namer for EvalNamer {
    fn name(&self, x: &LaurentPoly) -> Option<String> {
        let v = x.eval_rational(&self.point).ok()?;
        self.by_value.get(&v).cloned()
    }
}

/// Sorted canonical serializations of a quasi-cluster.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClusterKey(pub Vec<String>);

impl ClusterKey {
    /// 64-bit FNV-1a over the serialized key, as 12 hex digits.
    pub fn short_hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for s in &self.0 {
            for b in s.bytes().chain(std::iter::once(0u8)) {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        format!("{:012x}", h >> 16)
    }
}

impl fmt::Display for ClusterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.join(", "))
    }
}

#[derive(Clone)]
pub struct Seed {
    tri: QuasiTriangulation,
    reg: Arc<VarRegistry>,
    vars: BTreeMap<ElemId, LaurentPoly>,
    boundary_vars: BTreeMap<ElemId, LaurentPoly>,
    trace: Vec<String>,
    namer: Option<Arc<dyn Namer>>,
}

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Seed").field("key", &self.key()).field("trace", &self.trace).finish()
    }
}

impl Seed {
    /// Every flippable element and every boundary segment becomes its own generator.
    pub fn initial(tri: QuasiTriangulation) -> Result<Self, SeedError> {
        let flippable = tri.flippables();
        let boundary = tri.boundary_segments();
        let names: Vec<String> = flippable.iter().chain(&boundary).map(|&e| tri.name(e).to_string()).collect();
        let reg = VarRegistry::new(names)?;
        let vars = flippable.iter().enumerate().map(|(i, &e)| (e, LaurentPoly::var(&reg, i))).collect();
        let n = flippable.len();
        let boundary_vars = boundary.iter().enumerate().map(|(i, &e)| (e, LaurentPoly::var(&reg, n + i))).collect();
        Ok(Seed { tri, reg, vars, boundary_vars, trace: Vec::new(), namer: None })
    }

    /// The built-in seed of `M_2` carrying the variable names `a, b, c, d, c_a, c_b`.
    pub fn moebius2_named() -> Result<Self, SeedError> {
        let s = Seed::initial(QuasiTriangulation::moebius(2)?)?;
        // from {a, c_a}: a -> d, c_a -> c; then in {a, c}: a -> b; in {d, c_a}: c_a -> c_b
        let mut table = Vec::new();
        for (path, name) in [(&["a"][..], "d"), (&["c_a"][..], "c"), (&["c_a", "a"][..], "b"), (&["a", "c_a"][..], "c_b")] {
            let last = path.len() - 1;
            let (fin, id) = s.mutate_path(&path[..last])?.mutate_named(path[last])?;
            table.push((fin.var(id).clone(), name.to_string()));
        }
        Ok(s.with_namer(Arc::new(TableNamer::new(table))))
    }

    pub fn with_namer(mut self, namer: Arc<dyn Namer>) -> Self {
        self.namer = Some(namer);
        self
    }

    pub fn namer(&self) -> Option<&Arc<dyn Namer>> {
        self.namer.as_ref()
    }

    pub fn triangulation(&self) -> &QuasiTriangulation {
        &self.tri
    }

    pub fn registry(&self) -> &Arc<VarRegistry> {
        &self.reg
    }

    pub fn trace(&self) -> &[String] {
        &self.trace
    }

    pub fn vars(&self) -> &BTreeMap<ElemId, LaurentPoly> {
        &self.vars
    }

    pub fn boundary_vars(&self) -> &BTreeMap<ElemId, LaurentPoly> {
        &self.boundary_vars
    }

    /// Variable of a flippable element or boundary segment.
    pub fn var(&self, e: ElemId) -> &LaurentPoly {
        self.vars.get(&e).or_else(|| self.boundary_vars.get(&e)).expect("element has a variable")
    }

    pub fn var_by_name(&self, name: &str) -> Option<&LaurentPoly> {
        self.tri.find(name).map(|e| self.var(e))
    }

    pub fn rename(&mut self, e: ElemId, name: impl Into<String>) {
        self.tri.rename(e, name);
    }

    /// Flippable elements ordered by the serialization of their variables.
    pub fn flippables_sorted(&self) -> Vec<ElemId> {
        let mut v: Vec<(String, ElemId)> = self.vars.iter().map(|(e, p)| (p.serialize(), *e)).collect();
        v.sort();
        v.into_iter().map(|(_, e)| e).collect()
    }

    pub fn key(&self) -> ClusterKey {
        let mut v: Vec<String> = self.vars.values().map(|p| p.serialize()).collect();
        v.sort();
        ClusterKey(v)
    }

    /// Right-hand side of the exchange relation for flipping `t`.
    pub fn exchange_rhs(&self, t: ElemId) -> Result<(FlipCase, LaurentPoly), SeedError> {
        let case = self.tri.classify_flip(t)?;
        let x = |e| self.var(e);
        let rhs = match case {
            FlipCase::TwoTriangles { a, b, c, d } => &(x(a) * x(c)) + &(x(b) * x(d)),
            FlipCase::AntiSelfToCurve { outer } => x(outer).clone(),
            FlipCase::CurveToAntiSelf { rim } => x(rim).clone(),
            FlipCase::TriangleAnnulus { a, b, d } => {
                let s = x(a) + x(b);
                &(&s * &s) + &(&(x(d) * x(d)) * &(x(a) * x(b)))
            }
        };
        Ok((case, rhs))
    }

    /// Quasi-mutation at `t`; returns the new seed and the id of the new element.
    pub fn mutate(&self, t: ElemId) -> Result<(Seed, ElemId), SeedError> {
        let (_, rhs) = self.exchange_rhs(t)?;
        let name = self.tri.name(t).to_string();
        let x_new = rhs.exact_div(self.var(t)).map_err(|source| SeedError::LaurentViolation {
            element: name.clone(),
            trace: self.trace.clone(),
            source,
        })?;
        let flip = self.tri.flip(t)?;
        let mut tri = flip.tri;
        if let Some(n) = self.namer.as_ref().and_then(|n| n.name(&x_new)) {
            tri.rename(flip.new, n);
        }
        let mut vars = self.vars.clone();
        vars.remove(&t);
        vars.insert(flip.new, x_new);
        let mut trace = self.trace.clone();
        trace.push(name);
        Ok((
            Seed { tri, reg: self.reg.clone(), vars, boundary_vars: self.boundary_vars.clone(), trace, namer: self.namer.clone() },
            flip.new,
        ))
    }

    pub fn mutate_named(&self, name: &str) -> Result<(Seed, ElemId), SeedError> {
        let t = self.tri.find(name).ok_or_else(|| SeedError::UnknownName(name.to_string()))?;
        self.mutate(t)
    }

    /// Follows a sequence of element names.
    pub fn mutate_path<S: AsRef<str>>(&self, path: &[S]) -> Result<Seed, SeedError> {
        let mut s = self.clone();
        for p in path {
            s = s.mutate_named(p.as_ref())?.0;
        }
        Ok(s)
    }

    /// Same triangulation with its current variables taken as fresh generators, named after
    /// the elements. The namer is dropped.
    pub fn rebased(&self) -> Result<Seed, SeedError> {
        let mut s = Seed::initial(self.tri.clone())?;
        s.trace = self.trace.clone();
        Ok(s)
    }

    /// Values of this seed's generators chosen so that the seed's own variables evaluate as
    /// they would in `point` (a point for this seed's registry).
    pub fn eval_all(&self, point: &[BigRational]) -> Result<BTreeMap<ElemId, BigRational>, SeedError> {
        let mut out = BTreeMap::new();
        for (e, p) in self.vars.iter().chain(&self.boundary_vars) {
            out.insert(*e, p.eval_rational(point)?);
        }
        Ok(out)
    }

    pub fn all_positive(&self) -> bool {
        self.vars.values().all(|p| p.has_positive_coefficients())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let vars = |m: &BTreeMap<ElemId, LaurentPoly>| -> Vec<serde_json::Value> {
            m.iter()
                .map(|(e, p)| serde_json::json!({"id": e.0, "name": self.tri.name(*e), "expansion": p.serialize()}))
                .collect()
        };
        serde_json::json!({
            "registry": self.reg.names(),
            "triangulation": self.tri.to_json(),
            "vars": vars(&self.vars),
            "boundary": vars(&self.boundary_vars),
            "trace": self.trace,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Seed, SeedError> {
        let bad = |m: &str| SeedError::Json(m.to_string());
        let names: Vec<String> =
            serde_json::from_value(v["registry"].clone()).map_err(|e| SeedError::Json(e.to_string()))?;
        let reg = VarRegistry::new(names)?;
        Self::from_json_in(v, &reg).map_err(|e| match e {
            SeedError::Json(m) => bad(&m),
            e => e,
        })
    }

    /// As [`from_json`](Self::from_json) with a shared registry (checked against the dump).
    pub fn from_json_in(v: &serde_json::Value, reg: &Arc<VarRegistry>) -> Result<Seed, SeedError> {
        let names: Vec<String> =
            serde_json::from_value(v["registry"].clone()).map_err(|e| SeedError::Json(e.to_string()))?;
        if names != reg.names() {
            return Err(SeedError::Json("registry differs".into()));
        }
        let tri = QuasiTriangulation::from_json(&v["triangulation"])?;
        let read = |key: &str| -> Result<BTreeMap<ElemId, LaurentPoly>, SeedError> {
            let arr = v[key].as_array().ok_or_else(|| SeedError::Json(format!("missing `{key}`")))?;
            let mut m = BTreeMap::new();
            for x in arr {
                let id = x["id"].as_u64().ok_or_else(|| SeedError::Json("missing id".into()))?;
                let text = x["expansion"].as_str().ok_or_else(|| SeedError::Json("missing expansion".into()))?;
                m.insert(ElemId(id as u32), LaurentPoly::parse(reg, text)?);
            }
            Ok(m)
        };
        let vars = read("vars")?;
        let boundary_vars = read("boundary")?;
        for e in vars.keys() {
            if tri.element(*e).map(|x| x.kind) == Some(ElementKind::BoundarySegment) || tri.element(*e).is_none() {
                return Err(SeedError::Json(format!("variable attached to non-flippable {e}")));
            }
        }
        if vars.len() != tri.flippables().len() || boundary_vars.len() != tri.boundary_segments().len() {
            return Err(SeedError::Json("variable count does not match triangulation".into()));
        }
        let trace = serde_json::from_value(v["trace"].clone()).unwrap_or_default();
        Ok(Seed { tri, reg: reg.clone(), vars, boundary_vars, trace, namer: None })
    }
}

/// Random positive rational in `[1/den, num]`, deterministic given the generator.
pub fn random_positive_rational<R: rand::Rng>(rng: &mut R) -> BigRational {
    let n: i64 = rng.gen_range(1..=997);
    let d: i64 = rng.gen_range(1..=89);
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden(s: &Seed, text: &str) -> LaurentPoly {
        LaurentPoly::parse(s.registry(), text).unwrap()
    }

    #[test]
    fn initial_seed_generators() {
        let s = Seed::initial(QuasiTriangulation::disc(4).unwrap()).unwrap();
        assert_eq!(s.vars().len(), 1);
        assert_eq!(s.boundary_vars().len(), 4);
        let s = Seed::initial(QuasiTriangulation::moebius(1).unwrap()).unwrap();
        assert_eq!(s.registry().len(), 2);
    }

    #[test]
    fn m2_golden_path() {
        // start at {c_a, d}
        let s0 = Seed::initial(QuasiTriangulation::moebius(2).unwrap()).unwrap();
        let (s1, d) = s0.mutate_named("a").unwrap();
        let mut s1 = s1.rebased().unwrap();
        s1.rename(d, "d");
        let s1 = s1.rebased().unwrap();
        let (s2, cb) = s1.mutate_named("c_a").unwrap();
        assert_eq!(s2.var(cb), &golden(&s1, "(z^2+2*z*y+y^2+d^2*z*y)/c_a"));
        let (s3, b) = s2.mutate_named("d").unwrap();
        assert_eq!(s3.var(b), &golden(&s1, "(z^2+2*z*y+y^2+d^2*z*y)/(c_a*d)"));
        let (s4, a) = s1.mutate_named("d").unwrap();
        assert_eq!(s4.var(a), &golden(&s1, "c_a/d"));
        let (_, c) = s4.mutate_named("c_a").unwrap();
        assert_eq!(s4.mutate_named("c_a").unwrap().0.var(c), &golden(&s1, "(z+y)/d"));
        // case 2 from {a, c_a} returns d
        let (s5, d2) = s4.mutate(a).unwrap();
        assert_eq!(s5.var(d2), &golden(&s1, "d"));
    }

    #[test]
    fn involution_and_exchange_symmetry() {
        let s = Seed::initial(QuasiTriangulation::moebius(3).unwrap()).unwrap();
        for t in s.flippables_sorted() {
            let (s1, t1) = s.mutate(t).unwrap();
            let (s2, _) = s1.mutate(t1).unwrap();
            assert_eq!(s2.key(), s.key());
            let (_, rhs) = s1.exchange_rhs(t1).unwrap();
            assert_eq!(rhs, s.var(t) * s1.var(t1));
        }
    }

    #[test]
    fn named_m2() {
        let s = Seed::moebius2_named().unwrap();
        let (s1, d) = s.mutate_named("a").unwrap();
        assert_eq!(s1.triangulation().name(d), "d");
        assert!(s.mutate_named("y").is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = Seed::initial(QuasiTriangulation::moebius(3).unwrap()).unwrap().mutate_path(&["t1", "t3"]).unwrap();
        let back = Seed::from_json(&s.to_json()).unwrap();
        assert_eq!(back.key(), s.key());
        assert_eq!(back.trace(), s.trace());
    }
}
