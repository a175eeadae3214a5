//! Orientation double cover of a non-orientable surface, orbit mutations, the quotient map
//! on variables, and the exchange-matrix form of the exchange relation.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::gluing::{ElemId, Element, ElementKind, Face, FlipCase, Glue, GluingError, QuasiTriangulation, SlotRef};
use crate::laurent::{LaurentPoly, VarRegistry};
use crate::seed::{Seed, SeedError};

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("surface is orientable; its double cover is trivial")]
    Orientable,
    #[error("quasi-triangulation contains a one-sided curve, which does not lift to a triangulation")]
    OneSidedCurve,
    #[error("double cover failed validation: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Gluing(#[from] GluingError),
    #[error(transparent)]
    Seed(#[from] SeedError),
}

/// Lift of a triangulation to the orientation double cover. Base element `e` lifts to
/// total elements `2e` and `2e + 1`; the deck involution swaps the two.
#[derive(Debug, Clone)]
pub struct DoubleCover {
    pub base: QuasiTriangulation,
    pub total: QuasiTriangulation,
}

pub fn lift_ids(e: ElemId) -> [ElemId; 2] {
    [ElemId(2 * e.0), ElemId(2 * e.0 + 1)]
}

impl DoubleCover {
    pub fn build(base: &QuasiTriangulation) -> Result<DoubleCover, CoverError> {
        if base.is_orientable() {
            return Err(CoverError::Orientable);
        }
        if !base.one_sided_curves().is_empty() {
            return Err(CoverError::OneSidedCurve);
        }
        let sig = base.signature().double_cover().ok_or(CoverError::Orientable)?;
        let nf = base.faces().len();
        // copy 1 is the mirror image: slot i sits at (3 - i) % 3
        let pos = |copy: usize, i: usize| if copy == 0 { i } else { (3 - i) % 3 };
        let mut faces = Vec::with_capacity(2 * nf);
        let mut glue = vec![[None; 3]; 2 * nf];
        let mut owner: BTreeMap<SlotRef, ElemId> = BTreeMap::new();
        for face in base.faces() {
            let Face::Triangle { sides, corners } = face else { unreachable!("no annuli without one-sided curves") };
            for copy in 0..2 {
                let mut s = [ElemId(0); 3];
                let c = if copy == 0 { *corners } else { [corners[1], corners[0], corners[2]] };
                for i in 0..3 {
                    s[pos(copy, i)] = sides[i];
                }
                faces.push(Face::Triangle { sides: s, corners: c });
            }
        }
        // assign lifts: an arc's two preimages are the two components of its slot pairing
        let mut next_copy: BTreeMap<ElemId, u32> = BTreeMap::new();
        for f in 0..nf {
            for i in 0..3 {
                let here = SlotRef { face: f, slot: i };
                let e = base.side(here);
                match base.glue_at(here) {
                    None => {
                        for copy in 0..2 {
                            owner.insert(SlotRef { face: 2 * f + copy, slot: pos(copy, i) }, lift_ids(e)[copy]);
                        }
                    }
                    Some(g) => {
                        let r = g.reversing as usize;
                        for copy in 0..2 {
                            let a = SlotRef { face: 2 * f + copy, slot: pos(copy, i) };
                            let gc = copy ^ r;
                            let b = SlotRef { face: 2 * g.to.face + gc, slot: pos(gc, g.to.slot) };
                            glue[a.face][a.slot] = Some(Glue { to: b, reversing: false });
                            if !owner.contains_key(&a) {
                                let k = next_copy.entry(e).or_insert(0);
                                let id = lift_ids(e)[*k as usize];
                                *k += 1;
                                owner.insert(a, id);
                                owner.insert(b, id);
                            }
                        }
                    }
                }
            }
        }
        for (f, face) in faces.iter_mut().enumerate() {
            if let Face::Triangle { sides, .. } = face {
                for (k, s) in sides.iter_mut().enumerate() {
                    *s = owner[&SlotRef { face: f, slot: k }];
                }
            }
        }
        let mut elements = Vec::new();
        for e in base.elements() {
            for (copy, id) in lift_ids(e.id).into_iter().enumerate() {
                elements.push(Element { id, kind: e.kind, name: format!("{}_{copy}", e.name) });
            }
        }
        let raw = QuasiTriangulation::from_parts(sig.clone(), elements, faces, glue);
        // preimages of a marked point P get labels 2P and 2P + 1
        let mut label = BTreeMap::new();
        let mut seen: BTreeMap<u32, u32> = BTreeMap::new();
        for class in raw.vertex_classes() {
            let (f, k) = class[0];
            let Face::Triangle { corners, .. } = raw.faces()[f] else { unreachable!() };
            let p = corners[k];
            let sheet = seen.entry(p).or_insert(0);
            for pos in class {
                label.insert(pos, 2 * p + *sheet);
            }
            *sheet += 1;
        }
        let total = raw.with_corner_labels(|f, k| label[&(f, k)]);
        total.validate(&sig).map_err(CoverError::Invalid)?;
        Ok(DoubleCover { base: base.clone(), total })
    }

    pub fn tau(e: ElemId) -> ElemId {
        ElemId(e.0 ^ 1)
    }

    pub fn project(e: ElemId) -> ElemId {
        ElemId(e.0 / 2)
    }
}

/// The quotient map on variables: both lifts of a base generator go to that generator.
/// Total generators are matched to base generators by name (`{base}_{0|1}`).
#[derive(Debug, Clone)]
pub struct Projection {
    base: Arc<VarRegistry>,
    index: Vec<usize>,
}

impl Projection {
    pub fn new(total: &Arc<VarRegistry>, base: &Arc<VarRegistry>) -> Option<Projection> {
        let index = total
            .names()
            .iter()
            .map(|n| n.rsplit_once('_').and_then(|(b, _)| base.index_of(b)))
            .collect::<Option<Vec<_>>>()?;
        Some(Projection { base: base.clone(), index })
    }

    pub fn apply(&self, p: &LaurentPoly) -> LaurentPoly {
        p.map_vars(&self.base, |i| self.index[i])
    }
}

/// Sparse skew-symmetric matrix indexed by element ids.
pub type Matrix = BTreeMap<(ElemId, ElemId), i64>;

fn entry(m: &Matrix, i: ElemId, j: ElemId) -> i64 {
    m.get(&(i, j)).copied().unwrap_or(0)
}

/// Signed adjacency of a coherently oriented triangulation, over arcs and boundary segments.
pub fn exchange_matrix(t: &QuasiTriangulation) -> Matrix {
    let mut m = Matrix::new();
    for face in t.faces() {
        if let Face::Triangle { sides, .. } = face {
            for k in 0..3 {
                let (a, b) = (sides[k], sides[(k + 1) % 3]);
                if a != b {
                    *m.entry((a, b)).or_default() += 1;
                    *m.entry((b, a)).or_default() -= 1;
                }
            }
        }
    }
    m.retain(|_, v| *v != 0);
    m
}

/// Standard matrix mutation at `k`.
pub fn mutate_matrix(m: &Matrix, k: ElemId) -> Matrix {
    let idx: BTreeSet<ElemId> = m.keys().flat_map(|(i, j)| [*i, *j]).chain([k]).collect();
    let mut out = Matrix::new();
    for &i in &idx {
        for &j in &idx {
            let b = entry(m, i, j);
            let v = if i == k || j == k {
                -b
            } else {
                let (bik, bkj) = (entry(m, i, k), entry(m, k, j));
                b + (bik.abs() * bkj + bik * bkj.abs()) / 2
            };
            if v != 0 {
                out.insert((i, j), v);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ExchangeRuleReport {
    pub arc: String,
    /// `{b+, -b-}` agrees between the two lifts of the arc.
    pub well_defined: bool,
    /// `b+` and `b-` agree componentwise between the two lifts.
    pub literal_lift_equality: bool,
    pub relation_holds: bool,
    pub orientation_independent: bool,
    pub matrix_mutation_holds: Option<bool>,
    pub max_entry: i64,
    pub lhs: String,
    pub rhs: String,
}

type Exponents = BTreeMap<ElemId, i64>;

/// `b+` and `b-` for base arc `t` read from the row of one lift.
fn b_pm(m: &Matrix, row: ElemId, base_elems: &[ElemId], lifts: &dyn Fn(ElemId) -> Vec<ElemId>) -> (Exponents, Exponents) {
    let mut plus = Exponents::new();
    let mut minus = Exponents::new();
    for &v in base_elems {
        let (mut p, mut n) = (0, 0);
        for w in lifts(v) {
            let b = entry(m, row, w);
            p += b.max(0);
            n += b.min(0);
        }
        plus.insert(v, p);
        minus.insert(v, n);
    }
    (plus, minus)
}

fn monomial(seed: &Seed, exps: &Exponents, sign: i64) -> LaurentPoly {
    let mut out = LaurentPoly::one(seed.registry());
    for (v, e) in exps {
        let e = sign * e;
        let x = seed.var(*v);
        if e > 0 {
            out = &out * &x.pow(e as u32);
        } else if e < 0 {
            out = out.exact_div(&x.pow((-e) as u32)).expect("monomial division");
        }
    }
    out
}

/// Checks `x_t x_t' = prod x_v^{b+} + prod x_v^{-b-}` with `b±` read from the oriented double
/// cover, plus well-definedness, orientation independence and matrix mutation.
pub fn exchange_rule(seed: &Seed, t: ElemId) -> Result<ExchangeRuleReport, CoverError> {
    let base = seed.triangulation();
    let base_elems: Vec<ElemId> = base.elements().filter(|e| e.kind != ElementKind::OneSidedCurve).map(|e| e.id).collect();
    type Lifts = Box<dyn Fn(ElemId) -> Vec<ElemId>>;
    let (total, rows, lifts): (QuasiTriangulation, Vec<ElemId>, Lifts) =
        if base.is_orientable() {
            (base.oriented().expect("orientable"), vec![t], Box::new(|v| vec![v]))
        } else {
            let c = DoubleCover::build(base)?;
            (c.total, lift_ids(t).to_vec(), Box::new(|v| lift_ids(v).to_vec()))
        };
    let m = exchange_matrix(&total);
    let pm: Vec<_> = rows.iter().map(|&r| b_pm(&m, r, &base_elems, &lifts)).collect();
    let neg = |e: &Exponents| e.iter().map(|(k, v)| (*k, -v)).collect::<Exponents>();
    // the deck involution reverses orientation, so the row of the other lift yields the same
    // two monomials with b+ and -b- exchanged
    let literal_lift_equality = pm.iter().all(|x| *x == pm[0]);
    let pairs: Vec<BTreeSet<Exponents>> = pm.iter().map(|(p, n)| BTreeSet::from([p.clone(), neg(n)])).collect();
    let well_defined = pairs.iter().all(|x| *x == pairs[0]);
    let (plus, minus) = pm[0].clone();
    let rhs = &monomial(seed, &plus, 1) + &monomial(seed, &minus, -1);
    let (next, new) = seed.mutate(t)?;
    let lhs = seed.var(t) * next.var(new);
    // opposite orientation of the cover
    let mr = exchange_matrix(&total.reversed());
    let (p2, n2) = b_pm(&mr, rows[0], &base_elems, &lifts);
    let pair = BTreeSet::from([plus.clone(), neg(&minus)]);
    let pair2 = BTreeSet::from([p2, neg(&n2)]);
    let max_entry = m.values().map(|v| v.abs()).max().unwrap_or(0);
    // matrix after flipping every lift, against the cover of the flipped triangulation
    let matrix_mutation_holds = if matches!(base.classify_flip(t)?, FlipCase::TwoTriangles { .. }) {
        let mut mm = m.clone();
        let mut tot = total.clone();
        let mut renamed = BTreeMap::new();
        for &r in &rows {
            mm = mutate_matrix(&mm, r);
            let f = tot.flip(r)?;
            renamed.insert(f.new, r);
            tot = f.tri;
        }
        let fresh: Matrix =
            exchange_matrix(&tot).into_iter().map(|((i, j), v)| ((*renamed.get(&i).unwrap_or(&i), *renamed.get(&j).unwrap_or(&j)), v)).collect();
        let arcs: BTreeSet<ElemId> =
            tot.flippables().into_iter().map(|e| *renamed.get(&e).unwrap_or(&e)).collect();
        let keys: BTreeSet<(ElemId, ElemId)> = mm.keys().chain(fresh.keys()).copied().filter(|(i, _)| arcs.contains(i)).collect();
        Some(keys.into_iter().all(|(i, j)| entry(&mm, i, j) == entry(&fresh, i, j)))
    } else {
        None
    };
    Ok(ExchangeRuleReport {
        arc: base.name(t).to_string(),
        well_defined,
        literal_lift_equality,
        relation_holds: lhs == rhs,
        orientation_independent: pair == pair2,
        matrix_mutation_holds,
        max_entry,
        lhs: lhs.serialize(),
        rhs: rhs.serialize(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitReport {
    pub arc: String,
    pub mutable: bool,
    pub commute: bool,
    pub matches_lift: bool,
    pub projection_holds: bool,
}

impl OrbitReport {
    pub fn ok(&self) -> bool {
        self.commute && self.matches_lift && self.projection_holds
    }
}

/// Walks a base seed and its lifted seed in lockstep, checking that mutating both lifts of an
/// arc (in either order) is the lift of mutating the arc.
#[derive(Debug, Clone)]
pub struct OrbitWalker {
    pub base: Seed,
    pub total: Seed,
    /// base element id → its two lifts in the current total triangulation
    lifts: BTreeMap<ElemId, [ElemId; 2]>,
    pi: Projection,
}

impl OrbitWalker {
    pub fn new(base_tri: &QuasiTriangulation) -> Result<OrbitWalker, CoverError> {
        let cover = DoubleCover::build(base_tri)?;
        let base = Seed::initial(base_tri.clone())?;
        let total = Seed::initial(cover.total)?;
        let lifts = base_tri.elements().map(|e| (e.id, lift_ids(e.id))).collect();
        let pi = Projection::new(total.registry(), base.registry()).expect("lift names");
        Ok(OrbitWalker { base, total, lifts, pi })
    }

    pub fn projection(&self) -> &Projection {
        &self.pi
    }

    /// Arcs whose flip is again an arc.
    pub fn mutable_arcs(&self) -> Vec<ElemId> {
        let t = self.base.triangulation();
        t.flippables()
            .into_iter()
            .filter(|&e| matches!(t.classify_flip(e), Ok(FlipCase::TwoTriangles { .. })))
            .collect()
    }

    fn projection_holds(&self) -> bool {
        self.lifts.iter().all(|(b, ls)| {
            let want = self.base.var(*b);
            ls.iter().all(|l| &self.pi.apply(self.total.var(*l)) == want)
        })
    }

    /// Mutates at base arc `t`. The walker advances only when every check passes.
    pub fn step(&mut self, t: ElemId) -> Result<OrbitReport, CoverError> {
        let bt = self.base.triangulation();
        let mutable = matches!(bt.classify_flip(t)?, FlipCase::TwoTriangles { .. });
        let arc = bt.name(t).to_string();
        let [l0, l1] = self.lifts[&t];
        let (a1, n0) = self.total.mutate(l0)?;
        let (a2, n1) = a1.mutate(l1)?;
        let (b1, m1) = self.total.mutate(l1)?;
        let (b2, m0) = b1.mutate(l0)?;
        let commute = a2.key() == b2.key()
            && a2.triangulation().canonical_label() == b2.triangulation().canonical_label()
            && a2.var(n0) == b2.var(m0)
            && a2.var(n1) == b2.var(m1);
        if !mutable {
            return Ok(OrbitReport { arc, mutable, commute, matches_lift: false, projection_holds: false });
        }
        let (base2, new) = self.base.mutate(t)?;
        let fresh = DoubleCover::build(base2.triangulation())?;
        let half = |l: u32| l / 2;
        let matches_lift =
            a2.triangulation().canonical_label_with(&half) == fresh.total.canonical_label_with(&half);
        let mut lifts = self.lifts.clone();
        lifts.remove(&t);
        lifts.insert(new, [n0, n1]);
        let mut total = a2;
        let name = base2.triangulation().name(new).to_string();
        total.rename(n0, format!("{name}_0"));
        total.rename(n1, format!("{name}_1"));
        let prev = (std::mem::replace(&mut self.base, base2), std::mem::replace(&mut self.total, total), std::mem::replace(&mut self.lifts, lifts));
        let projection_holds = self.projection_holds();
        let report = OrbitReport { arc, mutable, commute, matches_lift, projection_holds };
        if !report.ok() {
            self.base = prev.0;
            self.total = prev.1;
            self.lifts = prev.2;
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moebius_covers_are_annuli() {
        for n in 1..=4 {
            let base = QuasiTriangulation::moebius(n).unwrap();
            let c = DoubleCover::build(&base).unwrap();
            let sig = c.total.infer_signature().unwrap();
            assert!(sig.orientable);
            assert_eq!(sig.boundary, vec![n, n]);
            assert_eq!(c.total.flippables().len(), 2 * base.flippables().len());
            assert!(c.total.is_coherently_oriented());
        }
    }

    #[test]
    fn rejects_orientable_and_curves() {
        assert!(matches!(DoubleCover::build(&QuasiTriangulation::disc(5).unwrap()), Err(CoverError::Orientable)));
        let m = QuasiTriangulation::moebius(1).unwrap();
        let f = m.flip(m.flippables()[0]).unwrap().tri;
        assert!(matches!(DoubleCover::build(&f), Err(CoverError::OneSidedCurve)));
    }

    #[test]
    fn m1_orbit_does_not_commute() {
        let mut w = OrbitWalker::new(&QuasiTriangulation::moebius(1).unwrap()).unwrap();
        let t = w.base.triangulation().flippables()[0];
        let r = w.step(t).unwrap();
        assert!(!r.mutable);
        assert!(!r.commute);
    }

    #[test]
    fn m2_orbit_steps() {
        let mut w = OrbitWalker::new(&QuasiTriangulation::moebius(2).unwrap()).unwrap();
        for _ in 0..6 {
            let t = w.mutable_arcs()[0];
            let r = w.step(t).unwrap();
            assert!(r.ok(), "{r:?}");
        }
    }

    #[test]
    fn disc_exchange_rule_is_ptolemy() {
        let s = Seed::initial(QuasiTriangulation::disc(6).unwrap()).unwrap();
        for t in s.triangulation().flippables() {
            let r = exchange_rule(&s, t).unwrap();
            assert!(r.relation_holds && r.well_defined && r.orientation_independent, "{r:?}");
            assert_eq!(r.matrix_mutation_holds, Some(true));
        }
    }

    #[test]
    fn moebius_exchange_rule() {
        for n in [2, 3] {
            let mut w = OrbitWalker::new(&QuasiTriangulation::moebius(n).unwrap()).unwrap();
            for step in 0..8 {
                let arcs = w.mutable_arcs();
                for &t in &arcs {
                    let r = exchange_rule(&w.base, t).unwrap();
                    assert!(r.relation_holds && r.well_defined && r.orientation_independent, "{r:?}");
                    assert_eq!(r.matrix_mutation_holds, Some(true), "{r:?}");
                    assert!(r.max_entry <= 2);
                }
                let t = arcs[step % arcs.len()];
                assert!(w.step(t).unwrap().ok());
            }
        }
    }

    #[test]
    fn matrix_mutation_involutive() {
        let t = QuasiTriangulation::disc(6).unwrap();
        let m = exchange_matrix(&t);
        let k = t.flippables()[0];
        assert_eq!(mutate_matrix(&mutate_matrix(&m, k), k), m);
    }
}
