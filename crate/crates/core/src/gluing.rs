//! Quasi-triangulations as half-edge gluing data, and the four local flip rewrites.
//!
//! A face is either a triangle (three slots) or a crosscap annulus (one rim slot plus a
//! one-sided core curve). Each triangle carries a local cyclic orientation: slot `k` runs
//! from corner `k` to corner `k+1`. Two slots holding the same arc are paired, and the
//! pairing is flagged *reversing* when the two local orientations disagree across it.
//! An anti-self-folded triangle is a triangle whose two slots are paired with each other
//! by a reversing pairing. Corners carry marked-point labels.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::surface::{Preset, SurfaceSignature};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GluingError {
    #[error("element `{0}` is not in the triangulation")]
    UnknownElement(String),
    #[error("boundary segment `{0}` cannot be flipped")]
    BoundaryNotFlippable(String),
    #[error("arc `{0}` bounds a self-folded triangle, which cannot occur without punctures")]
    SelfFolded(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("invalid gluing: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("gluing JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElemId(pub u32);

impl fmt::Display for ElemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Arc,
    BoundarySegment,
    OneSidedCurve,
}

impl ElementKind {
    pub fn is_flippable(self) -> bool {
        self != ElementKind::BoundarySegment
    }

    fn tag(self) -> u32 {
        match self {
            ElementKind::Arc => 1,
            ElementKind::BoundarySegment => 2,
            ElementKind::OneSidedCurve => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub id: ElemId,
    pub kind: ElementKind,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Face {
    Triangle { sides: [ElemId; 3], corners: [u32; 3] },
    Annulus { rim: ElemId, core: ElemId, corner: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Triangle,
    AntiSelfFolded,
    CrosscapAnnulus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotRef {
    pub face: usize,
    pub slot: usize,
}

const fn sr(face: usize, slot: usize) -> SlotRef {
    SlotRef { face, slot }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Glue {
    pub to: SlotRef,
    pub reversing: bool,
}

/// Local configuration of a flip, naming the elements entering the exchange relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipCase {
    /// Triangles `(a,b,t)` and `(c,d,t)` with `a` opposite `c`.
    TwoTriangles { a: ElemId, b: ElemId, c: ElemId, d: ElemId },
    AntiSelfToCurve { outer: ElemId },
    CurveToAntiSelf { rim: ElemId },
    TriangleAnnulus { a: ElemId, b: ElemId, d: ElemId },
}

impl FlipCase {
    pub fn tag(&self) -> &'static str {
        match self {
            FlipCase::TwoTriangles { .. } => "two_triangles",
            FlipCase::AntiSelfToCurve { .. } => "anti_self_to_curve",
            FlipCase::CurveToAntiSelf { .. } => "curve_to_anti_self",
            FlipCase::TriangleAnnulus { .. } => "triangle_annulus",
        }
    }
}

/// Result of a flip: the new triangulation, the case that applied, and the new element.
#[derive(Debug, Clone)]
pub struct Flip {
    pub tri: QuasiTriangulation,
    pub case: FlipCase,
    pub new: ElemId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiTriangulation {
    signature: SurfaceSignature,
    elements: BTreeMap<ElemId, Element>,
    faces: Vec<Face>,
    glue: Vec<[Option<Glue>; 3]>,
    next_id: u32,
}

struct Uf(Vec<usize>);

impl Uf {
    fn new(n: usize) -> Self {
        Uf((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let n = self.0[y];
            self.0[y] = r;
            y = n;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

/// Frame of a two-triangle flip: `F = [t, A, B]` with corners `(P, Q, R)` and the other
/// triangle, re-oriented to agree with `F` across `t`, as `[t, X, Y]` with corners `(Q, P, S)`.
struct QuadFrame {
    f: usize,
    g: usize,
    rev: bool,
    a: SlotRef,
    b: SlotRef,
    x: SlotRef,
    y: SlotRef,
    p: u32,
    q: u32,
    r: u32,
    s: u32,
}

impl QuasiTriangulation {
    pub fn signature(&self) -> &SurfaceSignature {
        &self.signature
    }

    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.elements.values()
    }

    pub fn element(&self, id: ElemId) -> Option<&Element> {
        self.elements.get(&id)
    }

    pub fn name(&self, id: ElemId) -> &str {
        &self.elements[&id].name
    }

    pub fn kind(&self, id: ElemId) -> ElementKind {
        self.elements[&id].kind
    }

    pub fn find(&self, name: &str) -> Option<ElemId> {
        self.elements.values().find(|e| e.name == name).map(|e| e.id)
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn glue_at(&self, s: SlotRef) -> Option<Glue> {
        self.glue[s.face][s.slot]
    }

    /// Arcs and one-sided curves, in id order.
    pub fn flippables(&self) -> Vec<ElemId> {
        self.elements.values().filter(|e| e.kind.is_flippable()).map(|e| e.id).collect()
    }

    pub fn boundary_segments(&self) -> Vec<ElemId> {
        self.elements
            .values()
            .filter(|e| e.kind == ElementKind::BoundarySegment)
            .map(|e| e.id)
            .collect()
    }

    pub fn one_sided_curves(&self) -> Vec<ElemId> {
        self.elements.values().filter(|e| e.kind == ElementKind::OneSidedCurve).map(|e| e.id).collect()
    }

    pub fn rename(&mut self, id: ElemId, name: impl Into<String>) {
        if let Some(e) = self.elements.get_mut(&id) {
            e.name = name.into();
        }
    }

    fn slot_count(&self, f: usize) -> usize {
        match self.faces[f] {
            Face::Triangle { .. } => 3,
            Face::Annulus { .. } => 1,
        }
    }

    pub fn side(&self, s: SlotRef) -> ElemId {
        match &self.faces[s.face] {
            Face::Triangle { sides, .. } => sides[s.slot],
            Face::Annulus { rim, .. } => *rim,
        }
    }

    /// Marked points at the start and end of a slot, in the face's own orientation.
    pub fn slot_endpoints(&self, s: SlotRef) -> (u32, u32) {
        match &self.faces[s.face] {
            Face::Triangle { corners, .. } => (corners[s.slot], corners[(s.slot + 1) % 3]),
            Face::Annulus { corner, .. } => (*corner, *corner),
        }
    }

    /// All slots occupied by `id`, in face order.
    pub fn slots_of(&self, id: ElemId) -> Vec<SlotRef> {
        let mut out = Vec::new();
        for (f, face) in self.faces.iter().enumerate() {
            match face {
                Face::Triangle { sides, .. } => {
                    for (k, s) in sides.iter().enumerate() {
                        if *s == id {
                            out.push(sr(f, k));
                        }
                    }
                }
                Face::Annulus { rim, .. } => {
                    if *rim == id {
                        out.push(sr(f, 0));
                    }
                }
            }
        }
        out
    }

    /// Unordered endpoints of an arc or boundary segment.
    pub fn endpoints(&self, id: ElemId) -> Option<(u32, u32)> {
        let s = *self.slots_of(id).first()?;
        let (a, b) = self.slot_endpoints(s);
        Some((a.min(b), a.max(b)))
    }

    pub fn face_kind(&self, f: usize) -> FaceKind {
        match &self.faces[f] {
            Face::Annulus { .. } => FaceKind::CrosscapAnnulus,
            Face::Triangle { .. } => {
                let self_glued = (0..3).any(|k| matches!(self.glue[f][k], Some(g) if g.to.face == f));
                if self_glued {
                    FaceKind::AntiSelfFolded
                } else {
                    FaceKind::Triangle
                }
            }
        }
    }

    fn fresh_id(&mut self) -> ElemId {
        let id = ElemId(self.next_id);
        self.next_id += 1;
        id
    }

    fn lookup(&self, t: ElemId) -> Result<&Element, GluingError> {
        self.elements.get(&t).ok_or_else(|| GluingError::UnknownElement(t.to_string()))
    }

    fn quad_frame(&self, t: ElemId) -> QuadFrame {
        let slots = self.slots_of(t);
        let (sf, sg) = (slots[0], slots[1]);
        let (f, i, g, j) = (sf.face, sf.slot, sg.face, sg.slot);
        let rev = self.glue[f][i].expect("arc slots are paired").reversing;
        let Face::Triangle { corners: cf, .. } = self.faces[f] else { unreachable!() };
        let Face::Triangle { corners: cg, .. } = self.faces[g] else { unreachable!() };
        let (x, y) = if rev {
            (sr(g, (j + 2) % 3), sr(g, (j + 1) % 3))
        } else {
            (sr(g, (j + 1) % 3), sr(g, (j + 2) % 3))
        };
        QuadFrame {
            f,
            g,
            rev,
            a: sr(f, (i + 1) % 3),
            b: sr(f, (i + 2) % 3),
            x,
            y,
            p: cf[i],
            q: cf[(i + 1) % 3],
            r: cf[(i + 2) % 3],
            s: cg[(j + 2) % 3],
        }
    }

    pub fn classify_flip(&self, t: ElemId) -> Result<FlipCase, GluingError> {
        let el = self.lookup(t)?;
        match el.kind {
            ElementKind::BoundarySegment => Err(GluingError::BoundaryNotFlippable(el.name.clone())),
            ElementKind::OneSidedCurve => {
                for face in &self.faces {
                    if let Face::Annulus { rim, core, .. } = face {
                        if *core == t {
                            return Ok(FlipCase::CurveToAntiSelf { rim: *rim });
                        }
                    }
                }
                Err(GluingError::Invalid(vec![format!("one-sided curve `{}` has no annulus", el.name)]))
            }
            ElementKind::Arc => {
                let slots = self.slots_of(t);
                if slots.len() != 2 {
                    return Err(GluingError::Invalid(vec![format!("arc `{}` occupies {} slots", el.name, slots.len())]));
                }
                let (s0, s1) = (slots[0], slots[1]);
                if s0.face == s1.face {
                    if !self.glue[s0.face][s0.slot].is_some_and(|g| g.reversing) {
                        return Err(GluingError::SelfFolded(el.name.clone()));
                    }
                    let o = 3 - s0.slot - s1.slot;
                    return Ok(FlipCase::AntiSelfToCurve { outer: self.side(sr(s0.face, o)) });
                }
                match (&self.faces[s0.face], &self.faces[s1.face]) {
                    (Face::Triangle { .. }, Face::Triangle { .. }) => {
                        let fr = self.quad_frame(t);
                        Ok(FlipCase::TwoTriangles {
                            a: self.side(fr.a),
                            b: self.side(fr.b),
                            c: self.side(fr.x),
                            d: self.side(fr.y),
                        })
                    }
                    (Face::Triangle { sides, .. }, Face::Annulus { core, .. })
                    | (Face::Annulus { core, .. }, Face::Triangle { sides, .. }) => {
                        let ts = if matches!(self.faces[s0.face], Face::Triangle { .. }) { s0 } else { s1 };
                        Ok(FlipCase::TriangleAnnulus {
                            a: sides[(ts.slot + 1) % 3],
                            b: sides[(ts.slot + 2) % 3],
                            d: *core,
                        })
                    }
                    _ => Err(GluingError::Unsupported(format!(
                        "arc `{}` is the rim of two annuli (closed surface with one marked point)",
                        el.name
                    ))),
                }
            }
        }
    }

    /// Moves the gluing of `old` slots to `new` positions. `toggle` flips flags for slots of a
    /// face whose orientation was reversed. Partners outside the moved set are updated in place.
    fn move_slots(&mut self, moves: &[(SlotRef, SlotRef)], saved: &[Option<Glue>], toggle: &dyn Fn(SlotRef) -> bool) {
        let remap = |s: SlotRef| moves.iter().find(|(o, _)| *o == s).map(|(_, n)| *n);
        for ((old, new), g) in moves.iter().zip(saved) {
            let Some(g) = g else {
                self.glue[new.face][new.slot] = None;
                continue;
            };
            let partner = remap(g.to).unwrap_or(g.to);
            let reversing = g.reversing ^ toggle(*old) ^ toggle(g.to);
            self.glue[new.face][new.slot] = Some(Glue { to: partner, reversing });
            if remap(g.to).is_none() {
                self.glue[partner.face][partner.slot] = Some(Glue { to: *new, reversing });
            }
        }
    }

    pub fn flip(&self, t: ElemId) -> Result<Flip, GluingError> {
        let case = self.classify_flip(t)?;
        let mut out = self.clone();
        let old_name = self.name(t).to_string();
        let new = out.fresh_id();
        match case {
            FlipCase::TwoTriangles { .. } => {
                let fr = self.quad_frame(t);
                let (f, g) = (fr.f, fr.g);
                let moves = [(fr.a, sr(f, 2)), (fr.y, sr(f, 1)), (fr.b, sr(g, 1)), (fr.x, sr(g, 2))];
                let saved: Vec<Option<Glue>> = moves.iter().map(|(o, _)| self.glue[o.face][o.slot]).collect();
                out.faces[f] = Face::Triangle {
                    sides: [new, self.side(fr.y), self.side(fr.a)],
                    corners: [fr.r, fr.s, fr.q],
                };
                out.faces[g] = Face::Triangle {
                    sides: [new, self.side(fr.b), self.side(fr.x)],
                    corners: [fr.s, fr.r, fr.p],
                };
                out.glue[f] = [None; 3];
                out.glue[g] = [None; 3];
                let rev = fr.rev;
                out.move_slots(&moves, &saved, &|s| rev && s.face == g);
                out.glue[f][0] = Some(Glue { to: sr(g, 0), reversing: false });
                out.glue[g][0] = Some(Glue { to: sr(f, 0), reversing: false });
                out.elements.insert(new, Element { id: new, kind: ElementKind::Arc, name: format!("{old_name}'") });
            }
            FlipCase::AntiSelfToCurve { outer } => {
                let slots = self.slots_of(t);
                let f = slots[0].face;
                let o = 3 - slots[0].slot - slots[1].slot;
                let Face::Triangle { corners, .. } = self.faces[f] else { unreachable!() };
                let saved = [self.glue[f][o]];
                out.faces[f] = Face::Annulus { rim: outer, core: new, corner: corners[o] };
                out.glue[f] = [None; 3];
                out.move_slots(&[(sr(f, o), sr(f, 0))], &saved, &|_| false);
                out.elements.insert(
                    new,
                    Element { id: new, kind: ElementKind::OneSidedCurve, name: format!("{old_name}'") },
                );
            }
            FlipCase::CurveToAntiSelf { rim } => {
                let f = self
                    .faces
                    .iter()
                    .position(|face| matches!(face, Face::Annulus { core, .. } if *core == t))
                    .expect("classified");
                let Face::Annulus { corner, .. } = self.faces[f] else { unreachable!() };
                let saved = [self.glue[f][0]];
                out.faces[f] = Face::Triangle { sides: [new, new, rim], corners: [corner; 3] };
                out.glue[f] = [None; 3];
                out.move_slots(&[(sr(f, 0), sr(f, 2))], &saved, &|_| false);
                out.glue[f][0] = Some(Glue { to: sr(f, 1), reversing: true });
                out.glue[f][1] = Some(Glue { to: sr(f, 0), reversing: true });
                out.elements.insert(new, Element { id: new, kind: ElementKind::Arc, name: format!("{old_name}'") });
            }
            FlipCase::TriangleAnnulus { a, b, d } => {
                let slots = self.slots_of(t);
                let (ts, asl) = if matches!(self.faces[slots[0].face], Face::Triangle { .. }) {
                    (slots[0], slots[1])
                } else {
                    (slots[1], slots[0])
                };
                let (f, i, g) = (ts.face, ts.slot, asl.face);
                let Face::Triangle { corners, .. } = self.faces[f] else { unreachable!() };
                let (p, q) = (corners[i], corners[(i + 2) % 3]);
                let moves = [(sr(f, (i + 2) % 3), sr(f, 1)), (sr(f, (i + 1) % 3), sr(f, 2))];
                let saved: Vec<Option<Glue>> = moves.iter().map(|(o, _)| self.glue[o.face][o.slot]).collect();
                out.faces[f] = Face::Triangle { sides: [new, b, a], corners: [q, q, p] };
                out.faces[g] = Face::Annulus { rim: new, core: d, corner: q };
                out.glue[f] = [None; 3];
                out.glue[g] = [None; 3];
                out.move_slots(&moves, &saved, &|_| false);
                out.glue[f][0] = Some(Glue { to: sr(g, 0), reversing: false });
                out.glue[g][0] = Some(Glue { to: sr(f, 0), reversing: false });
                out.elements.insert(new, Element { id: new, kind: ElementKind::Arc, name: format!("{old_name}'") });
            }
        }
        out.elements.remove(&t);
        Ok(Flip { tri: out, case, new })
    }

    /// Union-find classes of triangle/annulus corners under the gluing. Node `3f+k` is corner
    /// `k` of face `f` (annuli use `k = 0`).
    fn corner_classes(&self) -> (Uf, Vec<usize>) {
        let n = 3 * self.faces.len();
        let mut uf = Uf::new(n);
        let node = |s: SlotRef, end: bool, faces: &[Face]| match faces[s.face] {
            Face::Triangle { .. } => 3 * s.face + if end { (s.slot + 1) % 3 } else { s.slot },
            Face::Annulus { .. } => 3 * s.face,
        };
        for f in 0..self.faces.len() {
            for k in 0..self.slot_count(f) {
                if let Some(g) = self.glue[f][k] {
                    let a = sr(f, k);
                    let (a0, a1) = (node(a, false, &self.faces), node(a, true, &self.faces));
                    let (b0, b1) = (node(g.to, false, &self.faces), node(g.to, true, &self.faces));
                    if g.reversing {
                        uf.union(a0, b0);
                        uf.union(a1, b1);
                    } else {
                        uf.union(a0, b1);
                        uf.union(a1, b0);
                    }
                }
            }
        }
        let mut live = Vec::new();
        for (f, face) in self.faces.iter().enumerate() {
            match face {
                Face::Triangle { .. } => live.extend([3 * f, 3 * f + 1, 3 * f + 2]),
                Face::Annulus { .. } => live.push(3 * f),
            }
        }
        (uf, live)
    }

    fn corner_label(&self, node: usize) -> u32 {
        match &self.faces[node / 3] {
            Face::Triangle { corners, .. } => corners[node % 3],
            Face::Annulus { corner, .. } => *corner,
        }
    }

    /// Orientation classes of faces, or `None` when the gluing is non-orientable.
    fn orientation(&self) -> Option<Vec<bool>> {
        if self.faces.iter().any(|f| matches!(f, Face::Annulus { .. })) {
            return None;
        }
        let mut o: Vec<Option<bool>> = vec![None; self.faces.len()];
        for start in 0..self.faces.len() {
            if o[start].is_some() {
                continue;
            }
            o[start] = Some(false);
            let mut q = VecDeque::from([start]);
            while let Some(f) = q.pop_front() {
                for k in 0..3 {
                    let Some(g) = self.glue[f][k] else { continue };
                    let want = o[f].unwrap() ^ g.reversing;
                    match o[g.to.face] {
                        None => {
                            o[g.to.face] = Some(want);
                            q.push_back(g.to.face);
                        }
                        Some(v) if v != want => return None,
                        _ => {}
                    }
                }
            }
        }
        Some(o.into_iter().map(|x| x.unwrap()).collect())
    }

    pub fn is_orientable(&self) -> bool {
        self.orientation().is_some()
    }

    /// Topological type read off the gluing (Euler characteristic, orientability and the
    /// boundary cycles).
    pub fn infer_signature(&self) -> Result<SurfaceSignature, String> {
        let (mut uf, live) = self.corner_classes();
        let mut classes = BTreeSet::new();
        for &c in &live {
            classes.insert(uf.find(c));
        }
        let v = classes.len() as i64;
        let e = self.elements.len() as i64;
        let f = self.faces.len() as i64;
        let chi = v - e + f;
        // Boundary cycles on marked points.
        let class_list: Vec<usize> = classes.iter().copied().collect();
        let pos = |c: usize| class_list.binary_search(&c).unwrap();
        let mut buf = Uf::new(class_list.len());
        let mut incid = vec![0usize; class_list.len()];
        for b in self.boundary_segments() {
            let slots = self.slots_of(b);
            if slots.len() != 1 {
                return Err(format!("boundary segment `{}` occupies {} slots", self.name(b), slots.len()));
            }
            let s = slots[0];
            let (n0, n1) = match self.faces[s.face] {
                Face::Triangle { .. } => (3 * s.face + s.slot, 3 * s.face + (s.slot + 1) % 3),
                Face::Annulus { .. } => (3 * s.face, 3 * s.face),
            };
            let (c0, c1) = (pos(uf.find(n0)), pos(uf.find(n1)));
            incid[c0] += 1;
            incid[c1] += 1;
            buf.union(c0, c1);
        }
        if incid.iter().any(|&d| d != 2) {
            return Err("some marked point is not on exactly one boundary circle (puncture or pinched boundary)".into());
        }
        let mut comp: BTreeMap<usize, u32> = BTreeMap::new();
        for i in 0..class_list.len() {
            *comp.entry(buf.find(i)).or_default() += 1;
        }
        let mut boundary: Vec<u32> = comp.values().copied().collect();
        boundary.sort_unstable();
        let n = boundary.len() as i64;
        if !self.connected() {
            return Err("gluing is disconnected".into());
        }
        let (orientable, genus) = if self.is_orientable() {
            let g2 = 2 - chi - n;
            if g2 < 0 || g2 % 2 != 0 {
                return Err(format!("inconsistent Euler characteristic {chi}"));
            }
            (true, (g2 / 2) as u32)
        } else {
            let k = 2 - chi - n;
            if k < 1 {
                return Err(format!("inconsistent Euler characteristic {chi}"));
            }
            (false, k as u32)
        };
        Ok(SurfaceSignature { orientable, genus, boundary, punctures: 0 })
    }

    fn connected(&self) -> bool {
        if self.faces.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.faces.len()];
        seen[0] = true;
        let mut q = VecDeque::from([0usize]);
        while let Some(f) = q.pop_front() {
            for k in 0..self.slot_count(f) {
                if let Some(g) = self.glue[f][k] {
                    if !seen[g.to.face] {
                        seen[g.to.face] = true;
                        q.push_back(g.to.face);
                    }
                }
            }
        }
        seen.into_iter().all(|x| x)
    }

    /// Checks every structural invariant and that the gluing realizes `s`.
    pub fn validate(&self, s: &SurfaceSignature) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        let mut count: BTreeMap<ElemId, usize> = BTreeMap::new();
        let mut cores: BTreeMap<ElemId, usize> = BTreeMap::new();
        for (f, face) in self.faces.iter().enumerate() {
            match face {
                Face::Triangle { sides, .. } => {
                    for x in sides {
                        *count.entry(*x).or_default() += 1;
                    }
                }
                Face::Annulus { rim, core, .. } => {
                    *count.entry(*rim).or_default() += 1;
                    *cores.entry(*core).or_default() += 1;
                    if self.elements.get(rim).is_some_and(|e| e.kind == ElementKind::OneSidedCurve) {
                        errs.push(format!("annulus {f} has a one-sided rim"));
                    }
                }
            }
        }
        for id in count.keys().chain(cores.keys()) {
            if !self.elements.contains_key(id) {
                errs.push(format!("slot references unknown element {id}"));
            }
        }
        for e in self.elements.values() {
            let c = count.get(&e.id).copied().unwrap_or(0);
            let k = cores.get(&e.id).copied().unwrap_or(0);
            let ok = match e.kind {
                ElementKind::Arc => c == 2 && k == 0,
                ElementKind::BoundarySegment => c == 1 && k == 0,
                ElementKind::OneSidedCurve => c == 0 && k == 1,
            };
            if !ok {
                errs.push(format!("arc multiplicity: `{}` ({:?}) occupies {c} slots and {k} cores", e.name, e.kind));
            }
        }
        for f in 0..self.faces.len() {
            for k in 0..3 {
                let g = self.glue[f][k];
                if k >= self.slot_count(f) {
                    if g.is_some() {
                        errs.push(format!("annulus {f} has a pairing on slot {k}"));
                    }
                    continue;
                }
                let here = sr(f, k);
                let Some(el) = self.elements.get(&self.side(here)) else { continue };
                match (el.kind, g) {
                    (ElementKind::BoundarySegment, Some(_)) => errs.push(format!("boundary `{}` is paired", el.name)),
                    (ElementKind::Arc, None) => errs.push(format!("arc `{}` has an unpaired slot", el.name)),
                    (ElementKind::Arc, Some(g)) => {
                        if g.to.face >= self.faces.len() || g.to.slot >= self.slot_count(g.to.face) {
                            errs.push(format!("pairing of `{}` points outside the faces", el.name));
                            continue;
                        }
                        if g.to == here || self.side(g.to) != el.id {
                            errs.push(format!("pairing of `{}` does not join its two slots", el.name));
                        }
                        if self.glue[g.to.face][g.to.slot] != Some(Glue { to: here, reversing: g.reversing }) {
                            errs.push(format!("pairing of `{}` is not symmetric", el.name));
                        }
                        if g.to.face == f && !g.reversing {
                            errs.push(format!("self-folded triangle at `{}`", el.name));
                        }
                    }
                    _ => {}
                }
            }
        }
        if !errs.is_empty() {
            return Err(errs);
        }
        let (mut uf, live) = self.corner_classes();
        let mut label_of: BTreeMap<usize, u32> = BTreeMap::new();
        let mut class_of: BTreeMap<u32, usize> = BTreeMap::new();
        for &c in &live {
            let r = uf.find(c);
            let l = self.corner_label(c);
            if *label_of.entry(r).or_insert(l) != l {
                errs.push(format!("corner labels disagree at marked point {l}"));
            }
            if *class_of.entry(l).or_insert(r) != r {
                errs.push(format!("marked point label {l} used by two distinct vertices"));
            }
        }
        let flippable = self.flippables().len();
        if flippable != s.rank() {
            errs.push(format!("{flippable} flippable elements but rank is {}", s.rank()));
        }
        let annuli = self.faces.iter().filter(|f| matches!(f, Face::Annulus { .. })).count();
        if annuli != self.one_sided_curves().len() {
            errs.push("number of annuli differs from number of one-sided curves".into());
        }
        match self.infer_signature() {
            Ok(sig) if sig.normalized() == s.normalized() => {}
            Ok(sig) => errs.push(format!("gluing realizes {sig}, expected {s}")),
            Err(e) => errs.push(e),
        }
        if self.signature.normalized() != s.normalized() {
            errs.push(format!("triangulation is tagged {} but {} was requested", self.signature, s));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Reverses the local orientation of the faces selected by `which`.
    pub fn reorient(&self, which: &[bool]) -> QuasiTriangulation {
        let mut out = self.clone();
        let pos = |f: usize, k: usize| if which[f] && matches!(self.faces[f], Face::Triangle { .. }) { (3 - k) % 3 } else { k };
        for (f, face) in self.faces.iter().enumerate() {
            if !which[f] {
                continue;
            }
            if let Face::Triangle { sides, corners } = face {
                out.faces[f] = Face::Triangle {
                    sides: [sides[0], sides[2], sides[1]],
                    corners: [corners[1], corners[0], corners[2]],
                };
            }
        }
        for f in 0..self.faces.len() {
            for k in 0..3 {
                out.glue[f][pos(f, k)] = self.glue[f][k].map(|g| Glue {
                    to: sr(g.to.face, pos(g.to.face, g.to.slot)),
                    reversing: g.reversing ^ which[f] ^ which[g.to.face],
                });
            }
        }
        out
    }

    /// Every face reversed.
    pub fn reversed(&self) -> QuasiTriangulation {
        self.reorient(&vec![true; self.faces.len()])
    }

    /// For an orientable gluing, an equivalent one whose pairings all preserve orientation.
    pub fn oriented(&self) -> Option<QuasiTriangulation> {
        let o = self.orientation()?;
        Some(self.reorient(&o))
    }

    /// Element-id and face renumbering (used to test relabeling invariance).
    pub fn relabeled(&self, face_order: &[usize], ids: &BTreeMap<ElemId, ElemId>) -> QuasiTriangulation {
        let mut inv = vec![0; face_order.len()];
        for (new, &old) in face_order.iter().enumerate() {
            inv[old] = new;
        }
        let m = |x: &ElemId| ids[x];
        let faces = face_order
            .iter()
            .map(|&old| match &self.faces[old] {
                Face::Triangle { sides, corners } => Face::Triangle { sides: [m(&sides[0]), m(&sides[1]), m(&sides[2])], corners: *corners },
                Face::Annulus { rim, core, corner } => Face::Annulus { rim: m(rim), core: m(core), corner: *corner },
            })
            .collect();
        let glue = face_order
            .iter()
            .map(|&old| self.glue[old].map(|g| g.map(|g| Glue { to: sr(inv[g.to.face], g.to.slot), reversing: g.reversing })))
            .collect();
        let elements = self.elements.values().map(|e| (m(&e.id), Element { id: m(&e.id), ..e.clone() })).collect();
        let next_id = ids.values().map(|x| x.0 + 1).max().unwrap_or(0).max(self.next_id);
        QuasiTriangulation { signature: self.signature.clone(), elements, faces, glue, next_id }
    }

    /// Label invariant under renaming of elements and faces and under re-orienting faces.
    /// Marked points act as fixed anchors.
    pub fn canonical_label(&self) -> Vec<u8> {
        self.canonical_label_with(&|c| c)
    }

    /// As [`canonical_label`](Self::canonical_label) with marked points passed through `anchor`.
    pub fn canonical_label_with(&self, anchor: &dyn Fn(u32) -> u32) -> Vec<u8> {
        let mut starts = Vec::new();
        for (f, face) in self.faces.iter().enumerate() {
            if matches!(face, Face::Triangle { .. }) {
                for e in 0..3 {
                    starts.push((f, e, false));
                    starts.push((f, e, true));
                }
            }
        }
        if starts.is_empty() {
            starts.extend((0..self.faces.len()).map(|f| (f, 0, false)));
        }
        let best = starts.into_iter().map(|s| self.encode_from(s, anchor)).min().unwrap_or_default();
        best.iter().flat_map(|x| x.to_be_bytes()).collect()
    }

    fn encode_from(&self, start: (usize, usize, bool), anchor: &dyn Fn(u32) -> u32) -> Vec<u32> {
        let mut order = vec![start];
        let mut index: Vec<Option<usize>> = vec![None; self.faces.len()];
        index[start.0] = Some(0);
        let mut code = Vec::with_capacity(16 * self.faces.len());
        let frame_pos = |face: &Face, entry: usize, rev: bool, slot: usize| match face {
            Face::Triangle { .. } if rev => (entry + 3 - slot) % 3,
            Face::Triangle { .. } => (slot + 3 - entry) % 3,
            Face::Annulus { .. } => 0,
        };
        let mut qi = 0;
        while qi < order.len() {
            let (f, entry, rev) = order[qi];
            qi += 1;
            let slots: Vec<(usize, u32)> = match &self.faces[f] {
                Face::Triangle { corners, .. } => {
                    code.push(10);
                    (0..3)
                        .map(|k| {
                            let s = if rev { (entry + 3 - k) % 3 } else { (entry + k) % 3 };
                            let c = if rev { corners[(s + 1) % 3] } else { corners[s] };
                            (s, c)
                        })
                        .collect()
                }
                Face::Annulus { corner, .. } => {
                    code.push(11);
                    vec![(0, *corner)]
                }
            };
            for (s, c) in slots {
                code.push(anchor(c));
                code.push(self.elements[&self.side(sr(f, s))].kind.tag());
                match self.glue[f][s] {
                    None => code.push(u32::MAX),
                    Some(g) => {
                        let pf = g.to.face;
                        let annulus = matches!(self.faces[f], Face::Annulus { .. }) || matches!(self.faces[pf], Face::Annulus { .. });
                        if let Some(idx) = index[pf] {
                            let (_, pe, prev) = order[idx];
                            let consistent = if annulus { 2 } else { (rev ^ prev ^ g.reversing) as u32 };
                            code.extend([idx as u32, frame_pos(&self.faces[pf], pe, prev, g.to.slot) as u32, consistent]);
                        } else {
                            let prev = if matches!(self.faces[pf], Face::Annulus { .. }) { false } else { rev ^ g.reversing };
                            index[pf] = Some(order.len());
                            code.extend([order.len() as u32, 0, if annulus { 2 } else { 0 }]);
                            order.push((pf, g.to.slot, prev));
                        }
                    }
                }
            }
        }
        code
    }

    /// Corner positions `(face, k)` grouped by the vertex they glue up to, in order of the
    /// smallest position of each group.
    pub fn vertex_classes(&self) -> Vec<Vec<(usize, usize)>> {
        let (mut uf, live) = self.corner_classes();
        let mut groups: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for c in live {
            groups.entry(uf.find(c)).or_default().push((c / 3, c % 3));
        }
        groups.into_values().collect()
    }

    /// Same gluing with every corner relabeled by `label(face, k)`.
    pub fn with_corner_labels(&self, label: impl Fn(usize, usize) -> u32) -> QuasiTriangulation {
        let mut out = self.clone();
        for (f, face) in out.faces.iter_mut().enumerate() {
            match face {
                Face::Triangle { corners, .. } => {
                    for (k, c) in corners.iter_mut().enumerate() {
                        *c = label(f, k);
                    }
                }
                Face::Annulus { corner, .. } => *corner = label(f, 0),
            }
        }
        out
    }

    /// Raw assembly without validation; callers run [`validate`](Self::validate).
    pub fn from_parts(
        signature: SurfaceSignature,
        elements: Vec<Element>,
        faces: Vec<Face>,
        glue: Vec<[Option<Glue>; 3]>,
    ) -> QuasiTriangulation {
        let elements: BTreeMap<ElemId, Element> = elements.into_iter().map(|e| (e.id, e)).collect();
        let next_id = elements.keys().map(|x| x.0 + 1).max().unwrap_or(0);
        QuasiTriangulation { signature, elements, faces, glue, next_id }
    }

    /// Whether every pairing preserves the local orientations.
    pub fn is_coherently_oriented(&self) -> bool {
        self.glue.iter().flatten().flatten().all(|g| !g.reversing)
    }

    // ---- constructors ----

    fn assemble(
        signature: SurfaceSignature,
        elems: Vec<(ElementKind, String)>,
        faces: Vec<Face>,
        reversing: &[ElemId],
    ) -> QuasiTriangulation {
        let elements: BTreeMap<ElemId, Element> = elems
            .into_iter()
            .enumerate()
            .map(|(i, (kind, name))| (ElemId(i as u32), Element { id: ElemId(i as u32), kind, name }))
            .collect();
        let next_id = elements.len() as u32;
        let mut t = QuasiTriangulation { signature, glue: vec![[None; 3]; faces.len()], elements, faces, next_id };
        for e in t.flippables() {
            let s = t.slots_of(e);
            if s.len() == 2 {
                let r = reversing.contains(&e);
                t.glue[s[0].face][s[0].slot] = Some(Glue { to: s[1], reversing: r });
                t.glue[s[1].face][s[1].slot] = Some(Glue { to: s[0], reversing: r });
            }
        }
        t
    }

    /// Triangulation of the convex `m`-gon with vertices `0..m` and the given diagonals.
    /// `name(i, j)` names the arc or boundary segment between `i < j`.
    pub fn polygon(m: u32, diagonals: &[(u32, u32)], name: &dyn Fn(u32, u32) -> String) -> Result<Self, GluingError> {
        let signature = SurfaceSignature::disc(m).map_err(|e| GluingError::Unsupported(e.to_string()))?;
        let key = |a: u32, b: u32| (a.min(b), a.max(b));
        let mut elems = Vec::new();
        let mut id_of: BTreeMap<(u32, u32), ElemId> = BTreeMap::new();
        for &(a, b) in diagonals {
            let k = key(a, b);
            if k.0 == k.1 || k.1 >= m || (k.1 - k.0) % m == 1 || (k.0 == 0 && k.1 == m - 1) || id_of.contains_key(&k) {
                return Err(GluingError::Invalid(vec![format!("bad diagonal ({a},{b})")]));
            }
            id_of.insert(k, ElemId(elems.len() as u32));
            elems.push((ElementKind::Arc, name(k.0, k.1)));
        }
        for i in 0..m {
            let k = key(i, (i + 1) % m);
            id_of.insert(k, ElemId(elems.len() as u32));
            elems.push((ElementKind::BoundarySegment, name(k.0, k.1)));
        }
        let mut faces = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                for k in j + 1..m {
                    if let (Some(&a), Some(&b), Some(&c)) = (id_of.get(&(i, j)), id_of.get(&(j, k)), id_of.get(&(i, k))) {
                        faces.push(Face::Triangle { sides: [a, b, c], corners: [i, j, k] });
                    }
                }
            }
        }
        if faces.len() != (m - 2) as usize {
            return Err(GluingError::Invalid(vec!["diagonals do not form a triangulation".into()]));
        }
        let t = Self::assemble(signature.clone(), elems, faces, &[]);
        t.validate(&signature).map_err(GluingError::Invalid)?;
        Ok(t)
    }

    /// Fan triangulation of the disc with `b` marked points.
    pub fn disc(b: u32) -> Result<Self, GluingError> {
        let diags: Vec<(u32, u32)> = (2..b.saturating_sub(1)).map(|k| (0, k)).collect();
        Self::polygon(b, &diags, &|i, j| {
            if j == i + 1 {
                format!("b{}", i + 1)
            } else if i == 0 && j == b - 1 {
                format!("b{b}")
            } else {
                format!("t{}", j - 1)
            }
        })
    }

    /// Moebius strip with `n` marked points: a fan over the boundary segments closed by a loop,
    /// plus one anti-self-folded triangle around the crosscap. `M_2` uses the names
    /// `a` (inner arc), `c_a` (loop) and boundaries `y`, `z`.
    pub fn moebius(n: u32) -> Result<Self, GluingError> {
        let signature = SurfaceSignature::moebius(n).map_err(|e| GluingError::Unsupported(e.to_string()))?;
        let mut elems: Vec<(ElementKind, String)> = Vec::new();
        // ids: diagonals delta_2..delta_{n-1}, loop, inner arc, boundaries beta_0..beta_{n-1}
        let diag = |k: u32| ElemId(k - 2);
        for k in 2..n {
            elems.push((ElementKind::Arc, format!("t{}", k - 1)));
        }
        let loop_id = ElemId(elems.len() as u32);
        let inner_id = if n >= 2 {
            elems.push((ElementKind::Arc, format!("t{}", n - 1)));
            ElemId(elems.len() as u32)
        } else {
            loop_id
        };
        elems.push((ElementKind::Arc, format!("t{n}")));
        let beta0 = elems.len() as u32;
        for i in 0..n {
            elems.push((ElementKind::BoundarySegment, format!("b{}", i + 1)));
        }
        let beta = |i: u32| ElemId(beta0 + i);
        if n == 2 {
            elems[loop_id.0 as usize].1 = "c_a".into();
            elems[inner_id.0 as usize].1 = "a".into();
            elems[beta(0).0 as usize].1 = "y".into();
            elems[beta(1).0 as usize].1 = "z".into();
        }
        let mut faces = Vec::new();
        for k in 1..n {
            let s0 = if k == 1 { beta(0) } else { diag(k) };
            let s2 = if k + 1 == n { loop_id } else { diag(k + 1) };
            faces.push(Face::Triangle { sides: [s0, beta(k), s2], corners: [0, k, (k + 1) % n] });
        }
        let outer = if n == 1 { beta(0) } else { loop_id };
        faces.push(Face::Triangle { sides: [inner_id, inner_id, outer], corners: [0, 0, 0] });
        let t = Self::assemble(signature.clone(), elems, faces, &[inner_id]);
        t.validate(&signature).map_err(GluingError::Invalid)?;
        Ok(t)
    }

    /// Annulus with `p` outer and `q` inner marked points: a ladder of `p + q` bridging arcs.
    pub fn annulus(p: u32, q: u32) -> Result<Self, GluingError> {
        let signature = SurfaceSignature::annulus(p, q).map_err(|e| GluingError::Unsupported(e.to_string()))?;
        let n = p + q;
        let mut elems: Vec<(ElementKind, String)> = (0..n).map(|k| (ElementKind::Arc, format!("t{}", k + 1))).collect();
        for k in 0..n {
            elems.push((ElementKind::BoundarySegment, format!("b{}", k + 1)));
        }
        let e = |k: u32| ElemId(k % n);
        let seg = |k: u32| ElemId(n + k);
        let mut faces = Vec::new();
        for k in 0..p {
            faces.push(Face::Triangle { sides: [seg(k), e(k + 1), e(k)], corners: [k, (k + 1) % p, p] });
        }
        for j in 0..q {
            faces.push(Face::Triangle {
                sides: [e(p + j), e(p + j + 1), seg(p + j)],
                corners: [p + j, 0, p + (j + 1) % q],
            });
        }
        let t = Self::assemble(signature.clone(), elems, faces, &[]);
        t.validate(&signature).map_err(GluingError::Invalid)?;
        Ok(t)
    }

    pub fn from_preset(p: Preset) -> Result<Self, GluingError> {
        match p {
            Preset::Disc(b) => Self::disc(b),
            Preset::Moebius(n) => Self::moebius(n),
            Preset::Annulus(a, b) => Self::annulus(a, b),
        }
    }

    /// Built-in initial triangulation for signatures that have one.
    pub fn initial(s: &SurfaceSignature) -> Result<Self, GluingError> {
        let p = Preset::from_signature(s)
            .ok_or_else(|| GluingError::Unsupported(format!("no built-in triangulation for {s}; supply a gluing file")))?;
        Self::from_preset(p)
    }

    // ---- JSON ----

    pub fn to_json(&self) -> serde_json::Value {
        let doc = GluingDoc {
            signature: self.signature.clone(),
            elements: self.elements.values().map(|e| ElemDoc { id: e.id.0, name: e.name.clone(), kind: e.kind }).collect(),
            faces: self
                .faces
                .iter()
                .enumerate()
                .map(|(f, face)| match face {
                    Face::Triangle { sides, corners } => {
                        let sides = sides.map(|s| s.0);
                        if self.face_kind(f) == FaceKind::AntiSelfFolded {
                            FaceDoc::AntiSelfFolded { sides, corners: *corners }
                        } else {
                            FaceDoc::Triangle { sides, corners: *corners }
                        }
                    }
                    Face::Annulus { rim, core, corner } => FaceDoc::CrosscapAnnulus { rim: rim.0, core: core.0, corner: *corner },
                })
                .collect(),
            pairings: {
                let mut v = Vec::new();
                for f in 0..self.faces.len() {
                    for k in 0..3 {
                        if let Some(g) = self.glue[f][k] {
                            if (f, k) < (g.to.face, g.to.slot) {
                                v.push(PairDoc { a: [f, k], b: [g.to.face, g.to.slot], reversing: g.reversing });
                            }
                        }
                    }
                }
                v
            },
        };
        serde_json::to_value(doc).expect("gluing serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, GluingError> {
        let doc: GluingDoc = serde_json::from_value(v.clone()).map_err(|e| GluingError::Json(e.to_string()))?;
        doc.signature.validate().map_err(|e| GluingError::Json(e.to_string()))?;
        let mut elements = BTreeMap::new();
        for e in doc.elements {
            let id = ElemId(e.id);
            if elements.insert(id, Element { id, kind: e.kind, name: e.name }).is_some() {
                return Err(GluingError::Json(format!("duplicate element id {}", e.id)));
            }
        }
        let mut anti_self = Vec::new();
        let faces: Vec<Face> = doc
            .faces
            .into_iter()
            .enumerate()
            .map(|(f, fd)| match fd {
                FaceDoc::Triangle { sides, corners } => Face::Triangle { sides: sides.map(ElemId), corners },
                FaceDoc::AntiSelfFolded { sides, corners } => {
                    anti_self.push(f);
                    Face::Triangle { sides: sides.map(ElemId), corners }
                }
                FaceDoc::CrosscapAnnulus { rim, core, corner } => Face::Annulus { rim: ElemId(rim), core: ElemId(core), corner },
            })
            .collect();
        let mut glue = vec![[None; 3]; faces.len()];
        for p in doc.pairings {
            let (a, b) = (sr(p.a[0], p.a[1]), sr(p.b[0], p.b[1]));
            if a.face >= faces.len() || b.face >= faces.len() || a.slot > 2 || b.slot > 2 {
                return Err(GluingError::Json("pairing refers to a missing slot".into()));
            }
            glue[a.face][a.slot] = Some(Glue { to: b, reversing: p.reversing });
            glue[b.face][b.slot] = Some(Glue { to: a, reversing: p.reversing });
        }
        let next_id = elements.keys().map(|x| x.0 + 1).max().unwrap_or(0);
        let t = QuasiTriangulation { signature: doc.signature.clone(), elements, faces, glue, next_id };
        for f in anti_self {
            if t.face_kind(f) != FaceKind::AntiSelfFolded {
                return Err(GluingError::Invalid(vec![format!("face {f} is tagged anti-self-folded but has no self pairing")]));
            }
        }
        t.validate(&doc.signature).map_err(GluingError::Invalid)?;
        Ok(t)
    }
}

#[derive(Serialize, Deserialize)]
struct GluingDoc {
    signature: SurfaceSignature,
    elements: Vec<ElemDoc>,
    faces: Vec<FaceDoc>,
    pairings: Vec<PairDoc>,
}

#[derive(Serialize, Deserialize)]
struct ElemDoc {
    id: u32,
    name: String,
    kind: ElementKind,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum FaceDoc {
    Triangle { sides: [u32; 3], corners: [u32; 3] },
    AntiSelfFolded { sides: [u32; 3], corners: [u32; 3] },
    CrosscapAnnulus { rim: u32, core: u32, corner: u32 },
}

#[derive(Serialize, Deserialize)]
struct PairDoc {
    a: [usize; 2],
    b: [usize; 2],
    reversing: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(t: &QuasiTriangulation, n: &str) -> ElemId {
        t.find(n).unwrap()
    }

    #[test]
    fn constructors_validate() {
        for b in 4..=9 {
            let t = QuasiTriangulation::disc(b).unwrap();
            assert_eq!(t.flippables().len(), (b - 3) as usize);
        }
        for n in 1..=6 {
            let t = QuasiTriangulation::moebius(n).unwrap();
            assert_eq!(t.flippables().len(), n as usize);
        }
        for (p, q) in [(1, 1), (2, 1), (2, 3)] {
            QuasiTriangulation::annulus(p, q).unwrap();
        }
    }

    #[test]
    fn disc4_has_two_triangles() {
        let t = QuasiTriangulation::disc(4).unwrap();
        assert_eq!(t.faces().len(), 2);
        let case = t.classify_flip(t.flippables()[0]).unwrap();
        let FlipCase::TwoTriangles { a, b, c, d } = case else { panic!() };
        for x in [a, b, c, d] {
            assert_eq!(t.kind(x), ElementKind::BoundarySegment);
        }
    }

    #[test]
    fn moebius1_inner_arc_flips_to_curve() {
        let t = QuasiTriangulation::moebius(1).unwrap();
        let a = t.flippables()[0];
        assert_eq!(t.face_kind(0), FaceKind::AntiSelfFolded);
        assert!(matches!(t.classify_flip(a).unwrap(), FlipCase::AntiSelfToCurve { .. }));
        let fl = t.flip(a).unwrap();
        assert_eq!(fl.tri.kind(fl.new), ElementKind::OneSidedCurve);
        fl.tri.validate(t.signature()).unwrap();
    }

    #[test]
    fn moebius2_case4_names() {
        let t = QuasiTriangulation::moebius(2).unwrap();
        let fl = t.flip(id(&t, "a")).unwrap();
        let mut t2 = fl.tri;
        t2.rename(fl.new, "d");
        let case = t2.classify_flip(id(&t2, "c_a")).unwrap();
        assert_eq!(case, FlipCase::TriangleAnnulus { a: id(&t2, "y"), b: id(&t2, "z"), d: id(&t2, "d") });
    }

    #[test]
    fn boundary_not_flippable() {
        let t = QuasiTriangulation::disc(5).unwrap();
        let b = t.boundary_segments()[0];
        assert!(matches!(t.classify_flip(b), Err(GluingError::BoundaryNotFlippable(_))));
        assert!(matches!(t.classify_flip(ElemId(999)), Err(GluingError::UnknownElement(_))));
    }

    #[test]
    fn arc_multiplicity_diagnostic() {
        let t = QuasiTriangulation::disc(5).unwrap();
        let mut v = t.to_json();
        // put the first arc into a third slot by overwriting a boundary side
        let arc = t.flippables()[0].0;
        let faces = v["faces"].as_array_mut().unwrap();
        let sides = faces[0]["sides"].as_array_mut().unwrap();
        sides[0] = serde_json::json!(arc);
        sides[1] = serde_json::json!(arc);
        let err = QuasiTriangulation::from_json(&v).unwrap_err();
        assert!(err.to_string().contains("arc multiplicity"), "{err}");
    }

    #[test]
    fn json_round_trip() {
        for t in [QuasiTriangulation::moebius(3).unwrap(), QuasiTriangulation::annulus(2, 1).unwrap()] {
            let back = QuasiTriangulation::from_json(&t.to_json()).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn distinct_m2_triangulations_have_distinct_labels() {
        let t = QuasiTriangulation::moebius(2).unwrap();
        // {a, c_a} -> flip a -> {d, c_a} -> flip c_a -> {d, c_b} -> flip d -> {b, c_b}
        let f1 = t.flip(id(&t, "a")).unwrap().tri;
        let ca = f1.find("c_a").unwrap();
        let f2 = f1.flip(ca).unwrap().tri;
        let d = f2.one_sided_curves()[0];
        let f3 = f2.flip(d).unwrap().tri;
        assert_eq!(f3.faces().iter().filter(|_| true).count(), 2);
        assert_ne!(t.canonical_label(), f3.canonical_label());
    }
}
