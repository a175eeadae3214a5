use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use qcluster::cover::{exchange_rule, DoubleCover, OrbitWalker};
use qcluster::explorer::{monomial_rank_check, ExploreError, RankOptions, DEFAULT_MAX_SEEDS, INFINITE_TYPE_MAX_SEEDS};
use qcluster::frieze::{self, check_mesh, extend, ar_grid, FriezeSpec, Staircase, Value, Window};
use qcluster::hyperbolic;
use qcluster::{explore, verify_structure, ElemId, ExploreOptions, FlipCase, LaurentPoly, Preset, QuasiTriangulation, Seed, SeedError, SurfaceSignature, VarRegistry};

use crate::{Cli, Command, Format, Mode, SurfaceArgs};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Input problems exit with 1, mathematical violations with 2.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Math(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Math(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(s) | CliError::Math(s) => f.write_str(s),
        }
    }
}

fn input(e: impl fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn math(e: impl fmt::Display) -> CliError {
    CliError::Math(e.to_string())
}

fn seed_err(e: SeedError) -> CliError {
    match e {
        SeedError::UnknownName(_) => input(e),
        e => math(e),
    }
}

fn explore_err(e: ExploreError) -> CliError {
    match e {
        ExploreError::Seed(s) => seed_err(s),
        ExploreError::UnknownVertex(_) => input(e),
        ExploreError::Partial => CliError::Input("exploration exceeded the seed budget".into()),
        e => math(e),
    }
}

type Out = Result<(String, u8), CliError>;

pub fn run(cli: &Cli) -> Out {
    let seed = cli.rng_seed;
    match &cli.cmd {
        Command::Explore { surface, arcs_only, max_seeds } => cmd_explore(surface, *arcs_only, *max_seeds, cli.format, seed),
        Command::Variables { surface, target } => cmd_variables(surface, target.as_deref(), cli.format, seed),
        Command::Flip { surface, seq, start } => cmd_flip(surface, seq, start.as_deref(), seed),
        Command::Cover { surface, paths, path_len, instances } => cmd_cover(surface, *paths, *path_len, *instances, seed),
        Command::Frieze { p, q, epsilon, size, mode, k_max, generic_boundary, staircase, ar } => {
            let f = FriezeArgs {
                p: *p,
                q: *q,
                epsilon: *epsilon,
                size: *size,
                mode: *mode,
                k_max: k_max.unwrap_or(if *mode == Mode::Symbolic { 4 } else { 6 }),
                generic: *generic_boundary,
                staircase: staircase.clone(),
                ar: *ar,
            };
            cmd_frieze(&f, cli.format, seed)
        }
        Command::Verify { samples, tolerance, suite } => cmd_verify(*samples, *tolerance, suite, cli.format, seed),
        Command::Classify { surface } => cmd_classify(surface, seed),
        Command::Basis { surface, max_degree, oversample, inject_duplicate } => {
            cmd_basis(surface, *max_degree, *oversample, *inject_duplicate, cli.format, seed)
        }
    }
}

fn header(surface: &str, seed: u64) -> String {
    format!("# qcluster {VERSION} surface={surface} rng_seed={seed}\n")
}

fn load(args: &SurfaceArgs) -> Result<(SurfaceSignature, Seed), CliError> {
    let sig = match (&args.surface, &args.surface_json) {
        (Some(p), _) => p.parse::<Preset>().map_err(input)?.signature().map_err(input)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
            SurfaceSignature::from_json(&text).map_err(input)?
        }
        (None, None) => return Err(input("no surface given")),
    };
    let seed = if sig.is_moebius() && sig.boundary[0] == 2 {
        Seed::moebius2_named()
    } else {
        Seed::initial(QuasiTriangulation::initial(&sig).map_err(input)?)
    }
    .map_err(seed_err)?;
    Ok((sig, seed))
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn budget(sig: &SurfaceSignature) -> usize {
    if sig.count_quasi_arcs_closed_form().is_some() {
        DEFAULT_MAX_SEEDS
    } else {
        INFINITE_TYPE_MAX_SEEDS
    }
}

fn cmd_explore(args: &SurfaceArgs, arcs_only: bool, max_seeds: Option<usize>, format: Format, rng_seed: u64) -> Out {
    let (sig, seed) = load(args)?;
    let max_seeds = max_seeds.unwrap_or_else(|| budget(&sig));
    let g = explore(&seed, ExploreOptions { max_seeds, arcs_only }).map_err(seed_err)?;
    let rep = verify_structure(&g, &sig);
    let code = if g.stats.partial {
        1
    } else if rep.ok() {
        0
    } else {
        2
    };
    let head = header(&sig.to_string(), rng_seed);
    let out = match format {
        Format::Dot => format!("// {head}{}", g.to_dot()),
        Format::Json => {
            let checks: Vec<_> = rep.checks.iter().map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail})).collect();
            let v = json!({"header": head.trim_end(), "stats": g.stats, "checks": checks, "graph": g.to_json()});
            format!("{}\n", serde_json::to_string_pretty(&v).map_err(math)?)
        }
        Format::Text | Format::Csv => {
            let degrees: BTreeSet<usize> = g.vertices.keys().map(|k| g.degree(k)).collect();
            let regular = match (degrees.len(), degrees.iter().next()) {
                (1, Some(d)) => format!("yes({d})"),
                _ => format!("no({})", degrees.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("/")),
            };
            let mut s = head;
            let _ = writeln!(s, "vertices: {}, variables: {}, regular: {regular}", g.stats.vertices, g.stats.variables);
            let _ = writeln!(s, "edges: {}", g.stats.edges);
            let _ = writeln!(s, "mode: {}", if arcs_only { "arcs-only" } else { "quasi" });
            match sig.count_quasi_arcs_closed_form() {
                Some((q, a)) => {
                    let _ = writeln!(s, "finite type; closed form quasi-arcs: {q}; arcs: {a}");
                }
                None => s.push_str("infinite type\n"),
            }
            if g.stats.partial {
                let _ = writeln!(s, "partial: true (budget of {max_seeds} seeds exceeded)");
            }
            for c in &rep.checks {
                let _ = writeln!(s, "check {}: {} ({})", c.name, if c.pass { "ok" } else { "FAIL" }, c.detail);
            }
            for w in &g.stats.warnings {
                let _ = writeln!(s, "warning: {w}");
            }
            s
        }
    };
    Ok((out, code))
}

fn cmd_variables(args: &SurfaceArgs, target: Option<&str>, format: Format, rng_seed: u64) -> Out {
    let (sig, seed) = load(args)?;
    let g = explore(&seed, ExploreOptions { max_seeds: budget(&sig), arcs_only: false }).map_err(seed_err)?;
    let key = match target {
        Some(t) => {
            let names: Vec<&str> = t.split(',').map(str::trim).collect();
            g.find_vertex(&names).ok_or_else(|| input(format!("no quasi-cluster {{{t}}}")))?.clone()
        }
        None => g.root.clone(),
    };
    let ex = g.expansions_in(&key).map_err(explore_err)?;
    let head = header(&sig.to_string(), rng_seed);
    let out = if format == Format::Json {
        let v = json!({"header": head.trim_end(), "cluster": g.vertex_names(&key), "variables": ex.iter().map(|(k, p)| (k.clone(), p.serialize())).collect::<BTreeMap<_, _>>()});
        format!("{}\n", serde_json::to_string_pretty(&v).map_err(math)?)
    } else {
        let mut s = head;
        let _ = writeln!(s, "cluster: {{{}}}", g.vertex_names(&key).join(", "));
        for (name, p) in &ex {
            let _ = writeln!(s, "{name} = {}", p.serialize());
        }
        s
    };
    Ok((out, 0))
}

fn cmd_flip(args: &SurfaceArgs, seq: &str, start: Option<&str>, rng_seed: u64) -> Out {
    let (sig, seed) = load(args)?;
    let g = explore(&seed, ExploreOptions { max_seeds: budget(&sig), arcs_only: false }).map_err(seed_err)?;
    let key = match start {
        Some(t) => {
            let names: Vec<&str> = t.split(',').map(str::trim).collect();
            g.find_vertex(&names).ok_or_else(|| input(format!("no quasi-cluster {{{t}}}")))?.clone()
        }
        None => g.root.clone(),
    };
    let ex = g.expansions_in(&key).map_err(explore_err)?;
    let by_value: BTreeMap<String, String> = ex.iter().map(|(n, p)| (p.serialize(), n.clone())).collect();
    let mut s = g.vertices[&key].rebased().map_err(seed_err)?;
    let mut out = header(&sig.to_string(), rng_seed);
    let _ = writeln!(out, "start: {{{}}}", g.vertex_names(&key).join(", "));
    for (i, step) in seq.split(',').map(str::trim).filter(|x| !x.is_empty()).enumerate() {
        let (mut next, new) = s.mutate_named(step).map_err(seed_err)?;
        let p = next.var(new).serialize();
        let name = by_value.get(&p).cloned().unwrap_or_else(|| format!("?{}", i + 1));
        next.rename(new, name.clone());
        let _ = writeln!(out, "{}. {step} -> {name} = {p}", i + 1);
        s = next;
    }
    let mut names: Vec<String> = s.vars().keys().map(|e| s.triangulation().name(*e).to_string()).collect();
    names.sort();
    let _ = writeln!(out, "end: {{{}}}", names.join(", "));
    Ok((out, 0))
}

fn two_triangle(s: &Seed) -> Vec<ElemId> {
    let t = s.triangulation();
    s.flippables_sorted().into_iter().filter(|&e| matches!(t.classify_flip(e), Ok(FlipCase::TwoTriangles { .. }))).collect()
}

fn cmd_cover(args: &SurfaceArgs, paths: usize, path_len: usize, instances: usize, rng_seed: u64) -> Out {
    let (sig, seed) = load(args)?;
    let base = seed.triangulation().clone();
    let cover = DoubleCover::build(&base).map_err(input)?;
    let mut out = header(&sig.to_string(), rng_seed);
    let mut failures = 0usize;
    let _ = writeln!(out, "cover: {} (validated)", cover.total.signature());

    // every arc of every triangulation
    let g = explore(&seed, ExploreOptions { max_seeds: budget(&sig), arcs_only: true }).map_err(seed_err)?;
    let (mut checked, mut bad, mut nonmutable, mut noncommuting) = (0, 0, 0, 0);
    for v in g.vertices.values() {
        let tri = v.triangulation();
        for t in tri.flippables() {
            let mut w = OrbitWalker::new(tri).map_err(math)?;
            let r = w.step(t).map_err(math)?;
            if r.mutable {
                checked += 1;
                if !r.ok() {
                    bad += 1;
                    let _ = writeln!(out, "orbit failure at {}: {r:?}", r.arc);
                }
            } else {
                nonmutable += 1;
                if !r.commute {
                    noncommuting += 1;
                }
            }
        }
    }
    failures += bad;
    let _ = writeln!(
        out,
        "orbit, all triangulations: {} triangulations, mutable arcs {}/{checked} ok; non-mutable arcs {nonmutable} (non-commuting {noncommuting})",
        g.vertices.len(),
        checked - bad
    );
    if g.stats.partial {
        let _ = writeln!(out, "warning: triangulation enumeration partial");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (mut steps, mut bad) = (0, 0);
    for _ in 0..paths {
        let mut w = OrbitWalker::new(&base).map_err(math)?;
        for _ in 0..path_len {
            let arcs = w.mutable_arcs();
            if arcs.is_empty() {
                break;
            }
            let t = arcs[rng.gen_range(0..arcs.len())];
            let r = w.step(t).map_err(math)?;
            steps += 1;
            if !r.ok() {
                bad += 1;
                let _ = writeln!(out, "orbit failure at {}: {r:?}", r.arc);
                break;
            }
        }
    }
    failures += bad;
    let _ = writeln!(out, "orbit, random paths: {paths} paths, {steps} steps, failures {bad}");

    let (mut done, mut bad) = (0, 0);
    for _ in 0..instances {
        let mut s = seed.clone();
        for _ in 0..rng.gen_range(0..=path_len) {
            let arcs = two_triangle(&s);
            if arcs.is_empty() {
                break;
            }
            s = s.mutate(arcs[rng.gen_range(0..arcs.len())]).map_err(seed_err)?.0;
        }
        let arcs = two_triangle(&s);
        if arcs.is_empty() {
            continue;
        }
        let t = arcs[rng.gen_range(0..arcs.len())];
        let r = exchange_rule(&s, t).map_err(math)?;
        done += 1;
        if !(r.well_defined && r.relation_holds && r.orientation_independent && r.matrix_mutation_holds != Some(false)) {
            bad += 1;
            let _ = writeln!(out, "exchange rule failure at {}: {} != {}", r.arc, r.lhs, r.rhs);
        }
    }
    failures += bad;
    let _ = writeln!(out, "exchange rule: {done} instances, failures {bad}");
    let _ = writeln!(out, "cover checks: {}", if failures == 0 { "pass" } else { "FAIL" });
    Ok((out, if failures == 0 { 0 } else { 2 }))
}

struct FriezeArgs {
    p: usize,
    q: usize,
    epsilon: i64,
    size: usize,
    mode: Mode,
    k_max: u32,
    generic: bool,
    staircase: Option<String>,
    ar: bool,
}

fn frieze_report<V: Value>(f: &FriezeArgs, spec: &FriezeSpec<V>, st: &Staircase<V>, format: Format, out: &mut String) -> Result<bool, CliError> {
    let n = f.size as i64;
    let e = f.epsilon;
    let (j1, j2) = (st.j0, st.j0 + (n - 1) * e);
    let window = Window { i_min: st.i0 - n + 1, i_max: st.i0, j_min: j1.min(j2), j_max: j1.max(j2) };
    if f.ar {
        let g = ar_grid(spec, window);
        if format == Format::Dot {
            out.push_str(&g.to_dot());
        } else {
            let _ = writeln!(out, "ar quiver: {} vertices, {} arrows", g.vertices.len(), g.arrows.len());
        }
        return Ok(true);
    }
    let grid = extend(spec, st, window).map_err(math)?;
    let mesh = check_mesh(&grid);
    let rows = frieze::verify_closed_formula(spec, st, f.k_max).map_err(math)?;
    let closed_ok = rows.iter().all(|r| r.ok);
    match format {
        Format::Csv => out.push_str(&grid.to_csv()),
        Format::Json => {
            let mut v = grid.to_json();
            v["mesh_violations"] = json!(mesh.violations.len());
            v["closed_formula"] = json!(rows.iter().map(|r| json!({"k": r.k, "cell": [r.cell.0, r.cell.1], "ok": r.ok})).collect::<Vec<_>>());
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).map_err(math)?);
        }
        Format::Text | Format::Dot => {
            let _ = writeln!(
                out,
                "window: i in [{}, {}], j in [{}, {}] ({} cells)",
                window.i_min,
                window.i_max,
                window.j_min,
                window.j_max,
                f.size * f.size
            );
            let _ = writeln!(out, "mesh relation: {} squares, {} violations", mesh.squares, mesh.violations.len());
            for v in mesh.violations.iter().take(10) {
                let _ = writeln!(out, "  violation at ({}, {}): {} != {}", v.i, v.j, v.lhs, v.rhs);
            }
            if spec.is_coefficient_free() {
                let _ = writeln!(out, "unit determinants: {}/{}", mesh.squares - mesh.violations.len(), mesh.squares);
            }
            let _ = writeln!(out, "positive entries: {}", yes(grid.all_positive()));
            if f.mode != Mode::Symbolic {
                let _ = writeln!(out, "positive integers: {}", yes(grid.all_positive_integers()));
            }
            for r in &rows {
                let _ = writeln!(out, "closed formula k={} at ({}, {}): {}", r.k, r.cell.0, r.cell.1, if r.ok { "ok" } else { "MISMATCH" });
                if !r.ok {
                    let _ = writeln!(out, "  formula {} vs recurrence {}", r.formula, r.recurrence);
                }
            }
        }
    }
    Ok(mesh.ok() && closed_ok)
}

fn staircase_ints(f: &FriezeArgs, len: usize) -> Result<(Vec<i64>, Vec<i64>), CliError> {
    match &f.staircase {
        None => Ok((vec![1; len], vec![1; len])),
        Some(s) => {
            let v: Vec<i64> = s.split(',').map(|x| x.trim().parse::<i64>()).collect::<Result<_, _>>().map_err(input)?;
            if !v.len().is_multiple_of(2) || v.len() / 2 < len || v.iter().any(|&x| x <= 0) {
                return Err(input(format!("--staircase needs 2 x {len} positive integers (upper row, then lower row)")));
            }
            let (a, b) = v.split_at(v.len() / 2);
            Ok((a.to_vec(), b.to_vec()))
        }
    }
}

fn cmd_frieze(f: &FriezeArgs, format: Format, rng_seed: u64) -> Out {
    if f.size < 2 {
        return Err(input("--size must be at least 2"));
    }
    let len = f.size.max(f.k_max as usize);
    let (up, low) = staircase_ints(f, len)?;
    let len = up.len();
    let mut out = header("none", rng_seed);
    if format == Format::Dot {
        out = format!("// {out}");
    }
    if format == Format::Text {
        let _ = writeln!(
            out,
            "frieze: p={} q={} epsilon={} mode={} boundary={}",
            f.p,
            f.q,
            f.epsilon,
            match f.mode {
                Mode::Numeric => "numeric",
                Mode::Float => "float",
                Mode::Symbolic => "symbolic",
            },
            if f.generic { "generic" } else { "coefficient-free" }
        );
    }
    let ok = match f.mode {
        Mode::Numeric => {
            let r = |x: i64| BigRational::from_integer(BigInt::from(x));
            let bd = |n: usize, off: i64| (0..n as i64).map(|i| if f.generic { r(i + off + 1) } else { r(1) }).collect();
            let spec = FriezeSpec::new(f.epsilon, bd(f.p, 0), bd(f.q, 1), false).map_err(input)?;
            let st = Staircase::new(0, 0, up.iter().map(|&x| r(x)).collect(), low.iter().map(|&x| r(x)).collect()).map_err(input)?;
            frieze_report(f, &spec, &st, format, &mut out)?
        }
        Mode::Float => {
            let bd = |n: usize, off: usize| (0..n).map(|i| if f.generic { (i + off + 1) as f64 } else { 1.0 }).collect();
            let spec = FriezeSpec::new(f.epsilon, bd(f.p, 0), bd(f.q, 1), false).map_err(input)?;
            let st = Staircase::new(0, 0, up.iter().map(|&x| x as f64).collect(), low.iter().map(|&x| x as f64).collect()).map_err(input)?;
            frieze_report(f, &spec, &st, format, &mut out)?
        }
        Mode::Symbolic => {
            let (spec, st) = if f.generic {
                frieze::symbolic_setup(f.p, f.q, f.epsilon, len).map_err(input)?
            } else {
                let names: Vec<String> = (0..len).map(|l| format!("u{l}")).chain((0..len).map(|l| format!("w{l}"))).collect();
                let reg = VarRegistry::new(names).map_err(math)?;
                let spec = FriezeSpec::coefficient_free(f.p, f.q, f.epsilon, LaurentPoly::one(&reg)).map_err(input)?;
                let st = Staircase::new(0, 0, (0..len).map(|l| LaurentPoly::var(&reg, l)).collect(), (0..len).map(|l| LaurentPoly::var(&reg, len + l)).collect())
                    .map_err(input)?;
                (spec, st)
            };
            frieze_report(f, &spec, &st, format, &mut out)?
        }
    };
    if format == Format::Text {
        let _ = writeln!(out, "frieze checks: {}", if ok { "pass" } else { "FAIL" });
    }
    Ok((out, if ok { 0 } else { 2 }))
}

fn cmd_verify(samples: usize, tol: f64, only: &[String], format: Format, rng_seed: u64) -> Out {
    let suites: Vec<Box<dyn hyperbolic::IdentitySuite>> = if only.is_empty() {
        hyperbolic::suites()
    } else {
        only.iter().map(|n| hyperbolic::suite(n).ok_or_else(|| input(format!("unknown suite `{n}`")))).collect::<Result<_, _>>()?
    };
    let reports: Vec<hyperbolic::SuiteReport> = suites.iter().map(|s| s.run(samples, rng_seed, tol)).collect();
    let ok = reports.iter().all(|r| r.passed() && r.samples() >= samples);
    let head = header("none", rng_seed);
    let out = if format == Format::Json {
        let v = json!({"header": head.trim_end(), "reports": reports, "pass": ok});
        format!("{}\n", serde_json::to_string_pretty(&v).map_err(math)?)
    } else {
        let mut s = head;
        for r in &reports {
            for b in &r.branches {
                let _ = writeln!(
                    s,
                    "{}/{}: samples={} failures={} excluded={} max_rel_error={:.3e} rng_seed={} {}",
                    r.suite,
                    b.name,
                    b.samples,
                    b.failures,
                    b.excluded,
                    b.max_rel_error,
                    r.rng_seed,
                    if b.failures == 0 && b.samples >= samples { "PASS" } else { "FAIL" }
                );
            }
        }
        let _ = writeln!(s, "verify: {}", if ok { "all identity suites pass" } else { "FAIL" });
        s
    };
    Ok((out, if ok { 0 } else { 2 }))
}

fn cmd_classify(args: &SurfaceArgs, rng_seed: u64) -> Out {
    let (sig, _) = load(args)?;
    let mut s = header(&sig.to_string(), rng_seed);
    let _ = writeln!(s, "orientable: {}, rank: {}, euler characteristic: {}", yes(sig.orientable), sig.rank(), sig.euler_characteristic());
    match sig.count_quasi_arcs_closed_form() {
        Some((q, a)) => {
            let _ = writeln!(s, "finite type; quasi-arcs: {q}; arcs: {a}");
        }
        None => s.push_str("infinite type\n"),
    }
    Ok((s, 0))
}

fn cmd_basis(args: &SurfaceArgs, max_degree: u32, oversample: usize, inject: bool, format: Format, rng_seed: u64) -> Out {
    let (sig, seed) = load(args)?;
    let g = explore(&seed, ExploreOptions { max_seeds: budget(&sig), arcs_only: false }).map_err(seed_err)?;
    let r = monomial_rank_check(&g, RankOptions { max_degree, oversample, rng_seed, inject_duplicate: inject }).map_err(explore_err)?;
    let ok = if inject { !r.full_rank } else { r.full_rank };
    let head = header(&sig.to_string(), rng_seed);
    let out = if format == Format::Json {
        format!("{}\n", serde_json::to_string_pretty(&json!({"header": head.trim_end(), "report": r, "pass": ok})).map_err(math)?)
    } else {
        let cols = r.monomials + usize::from(inject);
        let mut s = head;
        let _ = writeln!(s, "monomials: {} (degree <= {max_degree}), rows: {}, rank: {}/{cols}", r.monomials, r.rows, r.rank);
        let _ = writeln!(s, "full rank: {}", yes(r.full_rank));
        if inject {
            let _ = writeln!(s, "duplicate column caught: {}", yes(!r.full_rank));
        }
        let _ = writeln!(s, "basis check: {}", if ok { "pass" } else { "FAIL" });
        s
    };
    Ok((out, if ok { 0 } else { 2 }))
}
