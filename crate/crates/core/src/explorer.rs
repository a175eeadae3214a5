//! Breadth-first enumeration of the quasi-exchange graph, the variable catalogue,
//! structural checks and the monomial rank check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gluing::{ElementKind, FlipCase};
use crate::laurent::{LaurentPoly, VarRegistry};
use crate::seed::{random_positive_rational, ClusterKey, EvalNamer, Seed, SeedError};
use crate::surface::SurfaceSignature;

pub const DEFAULT_MAX_SEEDS: usize = 100_000;
/// Default budget for surfaces of infinite type, where expansions grow with BFS depth.
pub const INFINITE_TYPE_MAX_SEEDS: usize = 60;

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error("unknown cluster {0}")]
    UnknownVertex(String),
    #[error("exploration is partial; the surface is not verified finite")]
    Partial,
    #[error("graph JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy)]
pub struct ExploreOptions {
    pub max_seeds: usize,
    pub arcs_only: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { max_seeds: DEFAULT_MAX_SEEDS, arcs_only: false }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ExploreStats {
    pub vertices: usize,
    pub edges: usize,
    pub variables: usize,
    pub partial: bool,
    pub arcs_only: bool,
    pub positive: bool,
    pub warnings: Vec<String>,
    /// Distinct clusters whose triangulations have the same canonical label.
    pub label_collisions: Vec<String>,
}

/// One catalogue entry: a cluster variable with its display name.
#[derive(Debug, Clone)]
pub struct CatalogueEntry {
    pub name: String,
    pub kind: ElementKind,
    pub poly: LaurentPoly,
}

#[derive(Debug, Clone)]
pub struct ExchangeGraph {
    pub signature: SurfaceSignature,
    pub registry: Arc<VarRegistry>,
    pub root: ClusterKey,
    pub vertices: BTreeMap<ClusterKey, Seed>,
    /// Directed adjacency: for each vertex, flipped variable name and the neighbor reached.
    pub adjacency: BTreeMap<ClusterKey, Vec<(String, ClusterKey)>>,
    /// Keyed by canonical serialization.
    pub catalogue: BTreeMap<String, CatalogueEntry>,
    pub stats: ExploreStats,
}

type Expansion = Result<Vec<(String, Seed)>, SeedError>;

fn expand(seed: &Seed, arcs_only: bool) -> Expansion {
    let mut out = Vec::new();
    for t in seed.flippables_sorted() {
        if arcs_only && matches!(seed.triangulation().classify_flip(t)?, FlipCase::AntiSelfToCurve { .. }) {
            continue;
        }
        let (s, _) = seed.mutate(t)?;
        out.push((seed.var(t).serialize(), s));
    }
    Ok(out)
}

/// Breadth-first search over quasi-clusters from `start`, deduplicated by [`ClusterKey`].
/// When the budget is hit the partial graph is returned with `stats.partial` set.
pub fn explore(start: &Seed, opts: ExploreOptions) -> Result<ExchangeGraph, SeedError> {
    let root = start.key();
    let mut vertices = BTreeMap::new();
    let mut labels: BTreeMap<Vec<u8>, ClusterKey> = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut collisions = Vec::new();
    labels.insert(start.triangulation().canonical_label(), root.clone());
    vertices.insert(root.clone(), start.clone());
    let mut adjacency: BTreeMap<ClusterKey, Vec<(String, ClusterKey)>> = BTreeMap::new();
    let mut frontier = vec![root.clone()];
    let mut partial = false;
    while !frontier.is_empty() {
        let results: Vec<Expansion> = frontier.par_iter().map(|k| expand(&vertices[k], opts.arcs_only)).collect();
        let mut next = BTreeSet::new();
        for (k, res) in frontier.iter().zip(results) {
            let adj = adjacency.entry(k.clone()).or_default();
            for (flipped, s) in res? {
                let key = s.key();
                adj.push((flipped, key.clone()));
                if let Some(existing) = vertices.get(&key) {
                    if existing.triangulation().canonical_label() != s.triangulation().canonical_label() {
                        warnings.push(format!(
                            "cluster {} reached with two combinatorially different triangulations",
                            key.short_hash()
                        ));
                    }
                    continue;
                }
                if vertices.len() >= opts.max_seeds {
                    partial = true;
                    continue;
                }
                let label = s.triangulation().canonical_label();
                if let Some(other) = labels.get(&label) {
                    collisions.push(format!(
                        "clusters {} and {} have combinatorially identical triangulations",
                        other.short_hash(),
                        key.short_hash()
                    ));
                } else {
                    labels.insert(label, key.clone());
                }
                vertices.insert(key.clone(), s);
                next.insert(key);
            }
        }
        frontier = next.into_iter().collect();
    }
    // keep only edges between retained vertices
    for adj in adjacency.values_mut() {
        adj.retain(|(_, k)| vertices.contains_key(k));
    }
    let mut g = ExchangeGraph {
        signature: start.triangulation().signature().clone(),
        registry: start.registry().clone(),
        root,
        vertices,
        adjacency,
        catalogue: BTreeMap::new(),
        stats: ExploreStats { partial, arcs_only: opts.arcs_only, warnings, label_collisions: collisions, ..Default::default() },
    };
    g.build_catalogue(start);
    Ok(g)
}

impl ExchangeGraph {
    /// Names every variable (initial element name, then the seed's namer, then `v{k}`) and
    /// renames the elements of every stored seed accordingly.
    fn build_catalogue(&mut self, start: &Seed) {
        let mut catalogue: BTreeMap<String, CatalogueEntry> = BTreeMap::new();
        for (e, p) in start.vars() {
            let t = start.triangulation();
            catalogue.insert(p.serialize(), CatalogueEntry { name: t.name(*e).to_string(), kind: t.kind(*e), poly: p.clone() });
        }
        let mut used: BTreeSet<String> = catalogue.values().map(|c| c.name.clone()).collect();
        used.extend(start.boundary_vars().keys().map(|e| start.triangulation().name(*e).to_string()));
        let mut fresh = 0usize;
        // BFS order keeps the fallback numbering stable
        let order = self.bfs_order();
        for k in &order {
            let s = &self.vertices[k];
            for e in s.flippables_sorted() {
                let p = s.var(e);
                let ser = p.serialize();
                if catalogue.contains_key(&ser) {
                    continue;
                }
                let mut name = s.namer().and_then(|n| n.name(p)).filter(|n| !used.contains(n));
                if name.is_none() {
                    loop {
                        fresh += 1;
                        let cand = format!("v{fresh}");
                        if !used.contains(&cand) {
                            name = Some(cand);
                            break;
                        }
                    }
                }
                let name = name.unwrap();
                used.insert(name.clone());
                catalogue.insert(ser, CatalogueEntry { name, kind: s.triangulation().kind(e), poly: p.clone() });
            }
        }
        for s in self.vertices.values_mut() {
            let ids: Vec<_> = s.vars().iter().map(|(e, p)| (*e, catalogue[&p.serialize()].name.clone())).collect();
            for (e, n) in ids {
                s.rename(e, n);
            }
        }
        for adj in self.adjacency.values_mut() {
            for (label, _) in adj.iter_mut() {
                *label = catalogue[label.as_str()].name.clone();
            }
        }
        self.stats.vertices = self.vertices.len();
        self.stats.edges = self.undirected_edges().len();
        self.stats.variables = catalogue.len();
        self.stats.positive = catalogue.values().all(|c| c.poly.has_positive_coefficients());
        self.catalogue = catalogue;
    }

    fn bfs_order(&self) -> Vec<ClusterKey> {
        let mut seen = BTreeSet::from([self.root.clone()]);
        let mut order = vec![self.root.clone()];
        let mut i = 0;
        while i < order.len() {
            if let Some(adj) = self.adjacency.get(&order[i]) {
                for (_, k) in adj {
                    if seen.insert(k.clone()) {
                        order.push(k.clone());
                    }
                }
            }
            i += 1;
        }
        order
    }

    pub fn root_seed(&self) -> &Seed {
        &self.vertices[&self.root]
    }

    pub fn name_of(&self, p: &LaurentPoly) -> Option<&str> {
        self.catalogue.get(&p.serialize()).map(|c| c.name.as_str())
    }

    pub fn find_vertex(&self, names: &[&str]) -> Option<&ClusterKey> {
        let want: BTreeSet<&str> = names.iter().copied().collect();
        self.vertices.iter().find_map(|(k, s)| {
            let have: BTreeSet<&str> = s.vars().keys().map(|e| s.triangulation().name(*e)).collect();
            (have == want).then_some(k)
        })
    }

    pub fn degree(&self, k: &ClusterKey) -> usize {
        self.adjacency.get(k).map_or(0, |a| a.len())
    }

    /// Undirected edges `(k1, k2, "t/t'")` with `k1 <= k2`.
    pub fn undirected_edges(&self) -> BTreeSet<(ClusterKey, ClusterKey, String)> {
        let mut out = BTreeSet::new();
        for (k, adj) in &self.adjacency {
            for (label, k2) in adj {
                if k <= k2 {
                    let back = self
                        .adjacency
                        .get(k2)
                        .and_then(|a| a.iter().find(|(_, x)| x == k))
                        .map(|(l, _)| l.clone())
                        .unwrap_or_default();
                    out.insert((k.clone(), k2.clone(), format!("{label}/{back}")));
                }
            }
        }
        out
    }

    /// Vertex label (set of variable names).
    pub fn vertex_names(&self, k: &ClusterKey) -> Vec<String> {
        let s = &self.vertices[k];
        let mut v: Vec<String> = s.vars().keys().map(|e| s.triangulation().name(*e).to_string()).collect();
        v.sort();
        v
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph exchange {\n");
        if self.stats.partial {
            out.push_str("  // partial: true\n");
        }
        for k in self.vertices.keys() {
            let _ = writeln!(out, "  \"{}\" [label=\"{}\"];", k.short_hash(), self.vertex_names(k).join(" "));
        }
        for (a, b, l) in self.undirected_edges() {
            let _ = writeln!(out, "  \"{}\" -- \"{}\" [label=\"{}\"];", a.short_hash(), b.short_hash(), l);
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "surface": self.signature,
            "partial": self.stats.partial,
            "arcs_only": self.stats.arcs_only,
            "registry": self.registry.names(),
            "root": self.root.0,
            "stats": self.stats,
            "catalogue": self.catalogue.values().map(|c| serde_json::json!({
                "name": c.name, "kind": c.kind, "expansion": c.poly.serialize()
            })).collect::<Vec<_>>(),
            "vertices": self.vertices.iter().map(|(k, s)| serde_json::json!({
                "key": k.0, "hash": k.short_hash(), "seed": s.to_json()
            })).collect::<Vec<_>>(),
            "adjacency": self.adjacency.iter().map(|(k, a)| serde_json::json!({
                "key": k.0, "out": a.iter().map(|(l, k2)| serde_json::json!({"flip": l, "to": k2.0})).collect::<Vec<_>>()
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<ExchangeGraph, ExploreError> {
        let js = |e: serde_json::Error| ExploreError::Json(e.to_string());
        let signature: SurfaceSignature = serde_json::from_value(v["surface"].clone()).map_err(js)?;
        let names: Vec<String> = serde_json::from_value(v["registry"].clone()).map_err(js)?;
        let registry = VarRegistry::new(names).map_err(SeedError::from)?;
        let root = ClusterKey(serde_json::from_value(v["root"].clone()).map_err(js)?);
        let mut vertices = BTreeMap::new();
        for x in v["vertices"].as_array().ok_or_else(|| ExploreError::Json("missing vertices".into()))? {
            let key = ClusterKey(serde_json::from_value(x["key"].clone()).map_err(js)?);
            let seed = Seed::from_json_in(&x["seed"], &registry)?;
            if seed.key() != key {
                return Err(ExploreError::Json(format!("seed does not match key {}", key.short_hash())));
            }
            vertices.insert(key, seed);
        }
        let mut adjacency = BTreeMap::new();
        for x in v["adjacency"].as_array().ok_or_else(|| ExploreError::Json("missing adjacency".into()))? {
            let key = ClusterKey(serde_json::from_value(x["key"].clone()).map_err(js)?);
            let mut out = Vec::new();
            for y in x["out"].as_array().into_iter().flatten() {
                let l = y["flip"].as_str().unwrap_or_default().to_string();
                out.push((l, ClusterKey(serde_json::from_value(y["to"].clone()).map_err(js)?)));
            }
            adjacency.insert(key, out);
        }
        let mut catalogue = BTreeMap::new();
        for x in v["catalogue"].as_array().ok_or_else(|| ExploreError::Json("missing catalogue".into()))? {
            let poly = LaurentPoly::parse(&registry, x["expansion"].as_str().unwrap_or_default()).map_err(SeedError::from)?;
            let kind: ElementKind = serde_json::from_value(x["kind"].clone()).map_err(js)?;
            let name = x["name"].as_str().unwrap_or_default().to_string();
            catalogue.insert(poly.serialize(), CatalogueEntry { name, kind, poly });
        }
        let stats: ExploreStats = ExploreStats {
            vertices: vertices.len(),
            partial: v["partial"].as_bool().unwrap_or(false),
            arcs_only: v["arcs_only"].as_bool().unwrap_or(false),
            ..Default::default()
        };
        let mut g = ExchangeGraph { signature, registry, root, vertices, adjacency, catalogue, stats };
        g.stats.edges = g.undirected_edges().len();
        g.stats.variables = g.catalogue.len();
        g.stats.positive = g.catalogue.values().all(|c| c.poly.has_positive_coefficients());
        Ok(g)
    }

    /// Every variable of the catalogue expressed in the quasi-cluster `target`, keyed by name.
    pub fn expansions_in(&self, target: &ClusterKey) -> Result<BTreeMap<String, LaurentPoly>, ExploreError> {
        let seed = self.vertices.get(target).ok_or_else(|| ExploreError::UnknownVertex(target.short_hash()))?;
        let rebased = seed.rebased()?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x51ab_1e5e_ed00_0001);
        let old_point: Vec<BigRational> = (0..self.registry.len()).map(|_| random_positive_rational(&mut rng)).collect();
        let values = seed.eval_all(&old_point)?;
        let reg = rebased.registry().clone();
        let new_point: Vec<BigRational> = reg
            .names()
            .iter()
            .map(|n| values[&seed.triangulation().find(n).expect("registry from element names")].clone())
            .collect();
        let known: Vec<(BigRational, String)> = self
            .catalogue
            .values()
            .map(|c| Ok((c.poly.eval_rational(&old_point)?, c.name.clone())))
            .collect::<Result<_, SeedError>>()?;
        let rebased = rebased.with_namer(Arc::new(EvalNamer::new(new_point, known)));
        let g = explore(&rebased, ExploreOptions { max_seeds: self.vertices.len().max(1), arcs_only: self.stats.arcs_only })?;
        if g.stats.partial {
            return Err(ExploreError::Partial);
        }
        Ok(g.catalogue.into_values().map(|c| (c.name, c.poly)).collect())
    }

    /// Mutates along the edge `(k, flip)` and returns the key reached.
    pub fn remutate(&self, k: &ClusterKey, flip: &str) -> Result<ClusterKey, ExploreError> {
        let s = self.vertices.get(k).ok_or_else(|| ExploreError::UnknownVertex(k.short_hash()))?;
        Ok(s.mutate_named(flip)?.0.key())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StructureReport {
    pub checks: Vec<Check>,
}

impl StructureReport {
    pub fn push(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), pass, detail: detail.into() });
    }

    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Regularity, closed-form counts, edge consistency and budget status.
pub fn verify_structure(g: &ExchangeGraph, s: &SurfaceSignature) -> StructureReport {
    let mut r = StructureReport::default();
    r.push("finite", !g.stats.partial, if g.stats.partial { "budget exceeded; not verified finite" } else { "exploration closed" });
    let n = s.rank();
    let degrees: BTreeSet<usize> = g.vertices.keys().map(|k| g.degree(k)).collect();
    let simple = g.adjacency.iter().all(|(k, a)| {
        let ends: BTreeSet<&ClusterKey> = a.iter().map(|(_, x)| x).collect();
        ends.len() == a.len() && !ends.contains(k)
    });
    if g.stats.partial {
        // truncation leaves frontier vertices with missing neighbors
        r.push("regular", true, "not checked on a partial graph");
    } else if !g.stats.arcs_only {
        r.push("regular", degrees.len() == 1 && degrees.contains(&n) && simple, format!("degrees {degrees:?}, rank {n}"));
    } else if !s.orientable {
        r.push("degree_drop_detected", degrees.iter().any(|&d| d < n), format!("degrees {degrees:?}, rank {n}"));
    } else {
        r.push("regular", degrees.len() == 1 && degrees.contains(&n) && simple, format!("degrees {degrees:?}, rank {n}"));
    }
    if let Some((quasi, arcs)) = s.count_quasi_arcs_closed_form() {
        let want = if g.stats.arcs_only { arcs } else { quasi };
        r.push(
            "closed_form",
            g.catalogue.len() as u64 == want,
            format!("{} variables, closed form {want}", g.catalogue.len()),
        );
    }
    let mut bad = Vec::new();
    for (k, adj) in &g.adjacency {
        for (flip, k2) in adj {
            match g.remutate(k, flip) {
                Ok(x) if &x == k2 => {}
                _ => bad.push(format!("{}--{flip}", k.short_hash())),
            }
        }
    }
    r.push("edges_remutate", bad.is_empty(), if bad.is_empty() { "all edges consistent".to_string() } else { bad.join(", ") });
    r.push(
        "positivity",
        g.stats.positive,
        if g.stats.positive { "all coefficients positive" } else { "negative coefficient found" },
    );
    // a mapping class fixing the boundary (a Dehn twist) relabels clusters without changing
    // the combinatorics, so collisions only indicate a problem on surfaces of finite type
    let c = &g.stats.label_collisions;
    if s.count_quasi_arcs_closed_form().is_some() {
        r.push("label_collisions", c.is_empty(), c.join("; "));
    } else {
        r.push("label_collisions", true, format!("{} clusters share a triangulation with an earlier one", c.len()));
    }
    r.push("dedup_consistent", g.stats.warnings.is_empty(), g.stats.warnings.join("; "));
    r
}

#[derive(Debug, Clone, Serialize)]
pub struct RankReport {
    pub monomials: usize,
    pub rows: usize,
    pub rank: usize,
    pub full_rank: bool,
    pub duplicate_injected: bool,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct RankOptions {
    pub max_degree: u32,
    /// Rows as a multiple of the number of monomials.
    pub oversample: usize,
    pub rng_seed: u64,
    pub inject_duplicate: bool,
}

/// Quasi-cluster monomials of total degree at most `d`, as sorted `(variable, exponent)` lists.
pub fn quasi_cluster_monomials(g: &ExchangeGraph, d: u32) -> Vec<Vec<(String, u32)>> {
    let mut set: BTreeSet<Vec<(String, u32)>> = BTreeSet::new();
    for s in g.vertices.values() {
        let vars: Vec<String> = s.vars().values().map(|p| p.serialize()).collect();
        let mut exps = vec![0u32; vars.len()];
        'enumerate: loop {
            let mut mono: Vec<(String, u32)> =
                vars.iter().zip(&exps).filter(|(_, &e)| e > 0).map(|(v, &e)| (v.clone(), e)).collect();
            mono.sort();
            set.insert(mono);
            // next exponent vector with total <= d
            let mut i = 0;
            loop {
                if i == exps.len() {
                    break 'enumerate;
                }
                exps[i] += 1;
                if exps.iter().sum::<u32>() <= d {
                    break;
                }
                exps[i] = 0;
                i += 1;
            }
        }
    }
    set.into_iter().collect()
}

/// Evaluates every quasi-cluster monomial at random points and computes the exact rank.
/// Boundary generators get one random value for the whole check, so independence is tested
/// over the coefficient ring rather than over the integers.
pub fn monomial_rank_check(g: &ExchangeGraph, opts: RankOptions) -> Result<RankReport, ExploreError> {
    if g.stats.partial {
        return Err(ExploreError::Partial);
    }
    let monos = quasi_cluster_monomials(g, opts.max_degree);
    let polys: BTreeMap<&str, &LaurentPoly> = g.catalogue.iter().map(|(k, c)| (k.as_str(), &c.poly)).collect();
    let mut cols = monos.len();
    if opts.inject_duplicate {
        cols += 1;
    }
    let rows = (opts.oversample.max(1) * cols).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let root = g.root_seed();
    let nflip = root.vars().len();
    let boundary: Vec<BigRational> = (nflip..g.registry.len()).map(|_| random_positive_rational(&mut rng)).collect();
    let points: Vec<Vec<BigRational>> = (0..rows)
        .map(|_| {
            let mut p: Vec<BigRational> = (0..nflip).map(|_| random_positive_rational(&mut rng)).collect();
            p.extend(boundary.iter().cloned());
            p
        })
        .collect();
    let matrix: Vec<Vec<BigRational>> = points
        .par_iter()
        .map(|p| {
            let vals: BTreeMap<&str, BigRational> =
                polys.iter().map(|(k, q)| (*k, q.eval_rational(p).expect("positive point"))).collect();
            let mut row: Vec<BigRational> = monos
                .iter()
                .map(|m| {
                    m.iter().fold(BigRational::one(), |acc, (v, e)| acc * num_traits::pow::pow(vals[v.as_str()].clone(), *e as usize))
                })
                .collect();
            if opts.inject_duplicate {
                let dup = row.get(1).cloned().unwrap_or_else(BigRational::one);
                row.push(dup);
            }
            row
        })
        .collect();
    let rank = rational_rank(matrix);
    Ok(RankReport {
        monomials: monos.len(),
        rows,
        rank,
        full_rank: rank == cols,
        duplicate_injected: opts.inject_duplicate,
        rng_seed: opts.rng_seed,
    })
}

/// Exact rank: denominators are cleared row by row, then fraction-free (Bareiss) elimination
/// keeps every entry an integer minor of the cleared matrix.
pub fn rational_rank(m: Vec<Vec<BigRational>>) -> usize {
    let mut a: Vec<Vec<BigInt>> = m
        .into_iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            row.iter().map(|x| x.numer() * (&l / x.denom())).collect()
        })
        .collect();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(rank, p);
        let (top, rest) = a.split_at_mut(rank + 1);
        let prow = &top[rank];
        let pv = &prow[c];
        rest.par_iter_mut().for_each(|row| {
            let f = row[c].clone();
            for j in c..cols {
                row[j] = (pv * &row[j] - &f * &prow[j]) / &prev;
            }
        });
        prev = pv.clone();
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Integer helper used by tests: `BigRational` from an `i64`.
pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gluing::QuasiTriangulation;

    fn m(n: u32, arcs_only: bool) -> ExchangeGraph {
        let s = Seed::initial(QuasiTriangulation::moebius(n).unwrap()).unwrap();
        explore(&s, ExploreOptions { arcs_only, ..Default::default() }).unwrap()
    }

    #[test]
    fn m2_quasi_cycle() {
        let g = explore(&Seed::moebius2_named().unwrap(), ExploreOptions::default()).unwrap();
        assert_eq!(g.vertices.len(), 6);
        assert_eq!(g.catalogue.len(), 6);
        assert_eq!(g.undirected_edges().len(), 6);
        let names: BTreeSet<&str> = g.catalogue.values().map(|c| c.name.as_str()).collect();
        assert_eq!(names, BTreeSet::from(["a", "b", "c", "d", "c_a", "c_b"]));
        let rep = verify_structure(&g, &g.signature.clone());
        assert!(rep.ok(), "{rep:?}");
    }

    #[test]
    fn m2_arcs_only_not_regular() {
        let g = m(2, true);
        let rep = verify_structure(&g, &g.signature.clone());
        assert!(rep.ok(), "{rep:?}");
        assert_eq!(g.catalogue.len(), 5);
    }

    #[test]
    fn m3_counts() {
        assert_eq!(m(3, false).vertices.len(), 22);
        assert_eq!(m(3, true).vertices.len(), 16);
        assert_eq!(m(3, false).catalogue.len(), 13);
    }

    #[test]
    fn budget_partial() {
        let s = Seed::initial(QuasiTriangulation::moebius(3).unwrap()).unwrap();
        let g = explore(&s, ExploreOptions { max_seeds: 5, arcs_only: false }).unwrap();
        assert!(g.stats.partial);
        assert_eq!(g.vertices.len(), 5);
        assert!(g.to_dot().contains("partial: true"));
    }

    #[test]
    fn rank_small() {
        let s = Seed::initial(QuasiTriangulation::disc(4).unwrap()).unwrap();
        let g = explore(&s, ExploreOptions::default()).unwrap();
        let opts = RankOptions { max_degree: 2, oversample: 2, rng_seed: 7, inject_duplicate: false };
        let r = monomial_rank_check(&g, opts).unwrap();
        assert_eq!(r.monomials, 5);
        assert!(r.full_rank);
        let r = monomial_rank_check(&g, RankOptions { inject_duplicate: true, ..opts }).unwrap();
        assert!(!r.full_rank);
    }

    #[test]
    fn rank_of_known_matrix() {
        let m = vec![vec![rat(1), rat(2)], vec![rat(2), rat(4)], vec![rat(0), rat(0)]];
        assert_eq!(rational_rank(m), 1);
    }
}
