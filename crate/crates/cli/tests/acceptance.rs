//! End-to-end acceptance run. Every criterion drives the `qcluster` binary, checks its report
//! against values computed here, and prints one pass/fail line.

use std::cell::RefCell;
use std::process::Command;
use std::time::{Duration, Instant};

use qcluster::{LaurentPoly, VarRegistry};

const BIN: &str = env!("CARGO_BIN_EXE_qcluster");

struct Run {
    out: String,
    code: i32,
}

#[derive(Default)]
struct Harness {
    /// every command issued by criteria 1 to 9, with its output
    log: RefCell<Vec<(Vec<String>, String)>>,
}

impl Harness {
    fn exec(args: &[String], threads: Option<usize>) -> Run {
        let mut cmd = Command::new(BIN);
        cmd.args(args);
        if let Some(t) = threads {
            cmd.arg("--threads").arg(t.to_string());
        }
        let o = cmd.output().expect("spawn qcluster");
        Run { out: String::from_utf8(o.stdout).expect("utf8 output"), code: o.status.code().unwrap_or(-1) }
    }

    fn run(&self, args: &[&str]) -> Run {
        let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        let r = Self::exec(&args, Some(1));
        self.log.borrow_mut().push((args, r.out.clone()));
        r
    }
}

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok_exit(r: &Run, what: &str) -> Check {
    ensure(r.code == 0, || format!("{what}: exit {} with output\n{}", r.code, r.out))
}

fn field<'a>(out: &'a str, prefix: &str) -> Result<&'a str, String> {
    out.lines()
        .find_map(|l| l.strip_prefix(prefix))
        .ok_or_else(|| format!("no line starting with {prefix:?} in\n{out}"))
}

/// (vertices, variables, regular-degree) from an explore report.
fn explore_counts(out: &str) -> Result<(usize, usize, Option<usize>), String> {
    let line = field(out, "vertices: ")?;
    let parts: Vec<&str> = line.split(", ").collect();
    let num = |s: &str| s.parse::<usize>().map_err(|e| format!("{s:?}: {e}"));
    let v = num(parts[0])?;
    let x = num(parts.get(1).and_then(|p| p.strip_prefix("variables: ")).ok_or("variables")?)?;
    let reg = parts.get(2).and_then(|p| p.strip_prefix("regular: yes(")).and_then(|p| p.strip_suffix(')'));
    Ok((v, x, reg.map(num).transpose()?))
}

fn checks_all_ok(out: &str) -> Check {
    let bad: Vec<&str> = out.lines().filter(|l| l.starts_with("check ") && !l.contains(": ok")).collect();
    ensure(bad.is_empty(), || format!("failed checks: {bad:?}"))?;
    ensure(!out.contains("NonExact") && !out.contains("warning"), || format!("unexpected warning in\n{out}"))
}

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn catalan(n: u64) -> u64 {
    binom(2 * n, n) / (n + 1)
}

fn c1_m2_enumeration(h: &Harness) -> Check {
    let r = h.run(&["explore", "--surface", "moebius:2"]);
    ok_exit(&r, "explore")?;
    let (v, x, reg) = explore_counts(&r.out)?;
    let n = 2usize;
    ensure(v == 6, || format!("{v} quasi-triangulations"))?;
    ensure(x == (3 * n * n - n + 2) / 2, || format!("{x} variables"))?;
    ensure(reg == Some(2), || format!("regularity {reg:?}"))?;
    // a connected 2-regular graph on six vertices with six edges is a hexagon
    ensure(field(&r.out, "edges: ")? == "6", || "edge count".into())?;
    checks_all_ok(&r.out)
}

fn c2_m2_golden(h: &Harness) -> Check {
    let r = h.run(&["variables", "--surface", "moebius:2", "--target", "c_a,d"]);
    ok_exit(&r, "variables")?;
    let reg = VarRegistry::new(["c_a", "d", "y", "z"]).map_err(|e| e.to_string())?;
    let g = |i| LaurentPoly::var(&reg, i);
    let (ca, d, y, z) = (g(0), g(1), g(2), g(3));
    let div = |p: &LaurentPoly, q: &LaurentPoly| p.exact_div(q).map_err(|e| e.to_string());
    let num = &(&(&(&z * &z) + &(&(&z * &y) * &LaurentPoly::constant(&reg, 2))) + &(&y * &y)) + &(&(&(&d * &d) * &z) * &y);
    let expected = [
        ("c_b", div(&num, &ca)?),
        ("b", div(&num, &(&ca * &d))?),
        ("c", div(&(&z + &y), &d)?),
        ("a", div(&ca, &d)?),
    ];
    for (name, want) in expected {
        let got = field(&r.out, &format!("{name} = "))?;
        ensure(got == want.serialize(), || format!("{name}: got {got}, want {}", want.serialize()))?;
        let parsed = LaurentPoly::parse(&reg, got).map_err(|e| e.to_string())?;
        ensure(parsed == want, || format!("{name}: parse mismatch"))?;
    }
    Ok(())
}

fn c3_m3_enumeration(h: &Harness) -> Check {
    let q = h.run(&["explore", "--surface", "moebius:3"]);
    ok_exit(&q, "explore quasi")?;
    let a = h.run(&["explore", "--surface", "moebius:3", "--arcs-only"]);
    ok_exit(&a, "explore arcs-only")?;
    let (vq, xq, _) = explore_counts(&q.out)?;
    let (va, xa, _) = explore_counts(&a.out)?;
    ensure(vq == 22, || format!("quasi mode: {vq} vertices"))?;
    ensure(va == 16, || format!("arcs-only: {va} vertices"))?;
    ensure(xq == 13 && xa == 12, || format!("variables {xq} / {xa}"))?;
    checks_all_ok(&q.out)?;
    checks_all_ok(&a.out)
}

fn c4_discs(h: &Harness) -> Check {
    for b in 4u64..=8 {
        let s = format!("disc:{b}");
        let r = h.run(&["explore", "--surface", &s, "--arcs-only"]);
        ok_exit(&r, &s)?;
        let (v, x, _) = explore_counts(&r.out)?;
        ensure(v as u64 == catalan(b - 2), || format!("{s}: {v} triangulations"))?;
        ensure(x as u64 == b * (b - 3) / 2, || format!("{s}: {x} variables"))?;
        ensure(r.out.contains("check positivity: ok"), || format!("{s}: positivity not reported"))?;
        checks_all_ok(&r.out)?;
    }
    Ok(())
}

fn c5_moebius_sweep(h: &Harness) -> Check {
    for n in 1usize..=5 {
        let s = format!("moebius:{n}");
        let q = h.run(&["explore", "--surface", &s]);
        ok_exit(&q, &s)?;
        let a = h.run(&["explore", "--surface", &s, "--arcs-only"]);
        ok_exit(&a, &s)?;
        let (_, xq, _) = explore_counts(&q.out)?;
        let (_, xa, _) = explore_counts(&a.out)?;
        ensure(xq == (3 * n * n - n + 2) / 2, || format!("{s}: {xq} quasi-arcs"))?;
        ensure(xa == n * (3 * n - 1) / 2, || format!("{s}: {xa} arcs"))?;
        checks_all_ok(&q.out)?;
        checks_all_ok(&a.out)?;
    }
    Ok(())
}

fn c6_double_cover(h: &Harness) -> Check {
    for n in 1..=3 {
        let s = format!("moebius:{n}");
        let r = h.run(&["cover", "--surface", &s, "--seed", "11", "--paths", "100", "--instances", "50"]);
        ok_exit(&r, &s)?;
        ensure(field(&r.out, "cover: ")? == format!("orientable(g=0;b=[{n},{n}]) (validated)"), || format!("{s}: cover line"))?;
        ensure(field(&r.out, "cover checks: ")? == "pass", || format!("{s}: {}", r.out))?;
        let orbit = field(&r.out, "orbit, all triangulations: ")?;
        match n {
            1 => ensure(orbit.ends_with("non-mutable arcs 1 (non-commuting 1)"), || format!("M1 counterexample: {orbit}"))?,
            2 => ensure(orbit.starts_with("4 triangulations") && orbit.contains("6/6 ok"), || format!("M2: {orbit}"))?,
            _ => {
                let paths = field(&r.out, "orbit, random paths: ")?;
                ensure(paths.starts_with("100 paths") && paths.ends_with("failures 0"), || format!("M3 paths: {paths}"))?;
                let ex = field(&r.out, "exchange rule: ")?;
                ensure(ex == "50 instances, failures 0", || format!("M3 exchange rule: {ex}"))?;
            }
        }
    }
    Ok(())
}

fn c7_hyperbolic(h: &Harness) -> Check {
    let r = h.run(&["verify", "--samples", "1000", "--tolerance", "1e-9", "--seed", "42"]);
    ok_exit(&r, "verify")?;
    let want = [
        "ptolemy/quadrilateral",
        "trace_skein/det(+,+)",
        "trace_skein/det(+,-)",
        "trace_skein/det(-,+)",
        "trace_skein/det(-,-)",
        "antiself/triple",
        "d_squared/mu",
        "arc_curve/two_sided",
        "arc_curve/one_sided",
        "self_intersection/two_sided",
        "self_intersection/one_sided",
    ];
    for w in want {
        let line = field(&r.out, &format!("{w}: "))?;
        let samples: usize = line
            .split_whitespace()
            .find_map(|t| t.strip_prefix("samples="))
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| format!("{w}: {line}"))?;
        ensure(samples >= 1000 && line.contains("failures=0 ") && line.ends_with("PASS"), || format!("{w}: {line}"))?;
    }
    Ok(())
}

fn c8_frieze(h: &Harness) -> Check {
    for eps in ["1", "-1"] {
        let r = h.run(&["frieze", "--epsilon", eps, "--size", "10", "--mode", "numeric", "--k-max", "6"]);
        ok_exit(&r, "frieze numeric")?;
        ensure(field(&r.out, "unit determinants: ")? == "81/81", || format!("eps {eps}: {}", r.out))?;
        ensure(field(&r.out, "positive integers: ")? == "yes", || format!("eps {eps}: not all positive integers"))?;
        for k in 2..=6 {
            let l = field(&r.out, &format!("closed formula k={k} "))?;
            ensure(l.ends_with(": ok"), || format!("eps {eps} k={k}: {l}"))?;
        }
        let s = h.run(&["frieze", "--epsilon", eps, "--size", "6", "--mode", "symbolic", "--k-max", "4"]);
        ok_exit(&s, "frieze symbolic")?;
        for k in 2..=4 {
            let l = field(&s.out, &format!("closed formula k={k} "))?;
            ensure(l.ends_with(": ok"), || format!("symbolic eps {eps} k={k}: {l}"))?;
        }
        ensure(field(&s.out, "frieze checks: ")? == "pass", || "symbolic frieze".into())?;
    }
    Ok(())
}

fn c9_basis(h: &Harness) -> Check {
    let r = h.run(&["basis", "--surface", "moebius:2", "--max-degree", "3", "--oversample", "3", "--seed", "5"]);
    ok_exit(&r, "basis")?;
    ensure(r.out.lines().next().is_some_and(|l| l.ends_with("rng_seed=5")), || "seed not logged".into())?;
    ensure(field(&r.out, "full rank: ")? == "yes", || r.out.clone())?;
    let d = h.run(&["basis", "--surface", "moebius:2", "--max-degree", "3", "--oversample", "3", "--seed", "5", "--inject-duplicate"]);
    ok_exit(&d, "basis with duplicate")?;
    ensure(field(&d.out, "duplicate column caught: ")? == "yes", || d.out.clone())
}

fn c10_determinism(h: &Harness) -> Check {
    let log = h.log.borrow();
    ensure(!log.is_empty(), || "nothing to replay".into())?;
    for (args, first) in log.iter() {
        for threads in [1, 4] {
            let again = Harness::exec(args, Some(threads));
            ensure(&again.out == first, || format!("{args:?} differs with --threads {threads}"))?;
        }
    }
    Ok(())
}

fn main() {
    type Criterion = fn(&Harness) -> Check;
    let criteria: [(&str, Criterion, Duration); 10] = [
        ("m2_enumeration", c1_m2_enumeration, Duration::from_secs(1)),
        ("m2_golden_variables", c2_m2_golden, Duration::from_secs(1)),
        ("m3_enumeration", c3_m3_enumeration, Duration::from_secs(10)),
        ("disc_sequence", c4_discs, Duration::from_secs(60)),
        ("moebius_formula_sweep", c5_moebius_sweep, Duration::from_secs(300)),
        ("double_cover", c6_double_cover, Duration::from_secs(120)),
        ("hyperbolic_suites", c7_hyperbolic, Duration::from_secs(30)),
        ("frieze", c8_frieze, Duration::from_secs(60)),
        ("basis_independence", c9_basis, Duration::from_secs(60)),
        ("determinism", c10_determinism, Duration::from_secs(600)),
    ];
    let h = Harness::default();
    let mut failed = Vec::new();
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = f(&h).and_then(|_| {
            let el = t.elapsed();
            ensure(el <= *limit, || format!("took {el:.2?}, limit {limit:?}"))
        });
        let el = t.elapsed();
        match res {
            Ok(()) => println!("[PASS] {} {name} ({el:.2?})", i + 1),
            Err(e) => {
                println!("[FAIL] {} {name} ({el:.2?}): {e}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", criteria.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
