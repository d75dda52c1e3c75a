//! End-to-end acceptance run. Prints one line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::process::Command;
use std::time::Instant;

use minmax_core::catalog::{build_star, p_residual, q_residual, solve_p, solve_q, StarExample, StarVariant};
use minmax_core::domain::{lift_lightlike, EdgeSigns, PolygonDomain, Sign};
use minmax_core::export::{load_example, run_verify, Example, SignedExample};
use minmax_core::feasibility::{check_js, check_lightlike, random_cross_check, ViolationKind};
use minmax_core::harmonic::dilatation;
use minmax_core::mesh::GridSpec;
use minmax_core::sp::{
    line_residual, sp_lightlike_line_search, sp_symmetry_test, surface_samples, Aabb, Isometry, SpSurface,
    LINE_HALF_LENGTH,
};
use minmax_core::surfaces::{check_conformality, check_corner_signs, VerificationReport};
use minmax_core::ComplexVal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const SEED: u64 = 7;

fn star(variant: StarVariant, n: u32, r: f64) -> StarExample {
    build_star(n, r, variant).expect("star example builds")
}

fn signed(id: &str) -> SignedExample {
    match load_example(id).expect("catalog id resolves") {
        Example::Signed(s) => *s,
        _ => panic!("{id} is not a signed example"),
    }
}

fn suite(id: &str, names: &[&str]) -> VerificationReport {
    let ex = load_example(id).expect("catalog id resolves");
    let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    run_verify(&ex, &names, SEED).expect("checks run")
}

/// Fails with the first failing check, or summarises the worst measurement.
fn require(label: &str, r: &VerificationReport) -> Outcome {
    if let Some(c) = r.checks.iter().find(|c| !c.pass) {
        return Err(format!("{label}: {} measured {:e} against {:e}", c.id, c.measured, c.tolerance));
    }
    Ok(format!("{label}: {} checks", r.checks.len()))
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn dilatation_closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let pts: Vec<ComplexVal> =
        (0..200).map(|_| ComplexVal::from_polar(rng.gen_range(0.1..0.95), rng.gen_range(0.0..2.0 * PI))).collect();
    let mut worst = 0.0f64;
    let cases = [(StarVariant::Alternating, 2), (StarVariant::Alternating, 3), (StarVariant::Alternating, 4), (StarVariant::Alternating, 5), (StarVariant::ConvexFlip, 4), (StarVariant::ConvexFlip, 6)];
    for (variant, n) in cases {
        let ex = star(variant, n, 0.4);
        let d = dilatation(ex.map()).map_err(|e| e.to_string())?;
        for &w in &pts {
            let expect = match variant {
                StarVariant::Alternating => w.powu(2 * (n - 1)),
                StarVariant::ConvexFlip => -w.powu(n - 2),
            };
            let got = d.eval(w).map_err(|e| e.to_string())?;
            worst = worst.max((got - expect).norm() / expect.norm());
        }
    }
    ensure(worst < 1e-6, format!("relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:.2e}"))
}

fn root_equations() -> Outcome {
    let mut worst = 0.0f64;
    for n in 2..=6 {
        for r in [0.2, 0.4, 1.0] {
            let p = solve_p(n, r).map_err(|e| e.to_string())?;
            worst = worst.max(p_residual(n, r, p).abs());
            if r == 1.0 {
                ensure(p == 0.5, format!("p({n}, 1) = {p}"))?;
            }
        }
    }
    for n in [4, 6, 8] {
        for r in [0.2, 0.4, 0.6] {
            if r < (PI / n as f64).cos() {
                let q = solve_q(n, r).map_err(|e| e.to_string())?;
                worst = worst.max(q_residual(n, r, q).abs());
            }
        }
    }
    ensure(worst < 1e-12, format!("residual {worst:e}"))?;
    Ok(format!("max residual {worst:.2e}"))
}

fn conformality() -> Outcome {
    let grid = GridSpec::new(64, 256, 1.0 - 1e-3).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for id in ["star1:4:0.4", "star2:4:0.4"] {
        let r = check_conformality(&signed(id).height, &grid).map_err(|e| e.to_string())?;
        require(id, &r)?;
        worst = r.checks.iter().filter(|c| c.id.starts_with("conformality")).map(|c| c.measured).fold(worst, f64::max);
    }
    Ok(format!("max residual {worst:.2e} on 64x256"))
}

fn duality() -> Outcome {
    let r = suite("star1:4:0.4", &["duality"]);
    require("star1:4:0.4", &r)?;
    Ok(format!("20 pairs, max gap {:.2e}", r.get("duality").unwrap().measured))
}

fn lightlike_degeneration() -> Outcome {
    let mut min_exp = f64::INFINITY;
    for id in ["star1:4:0.4", "star2:4:0.4"] {
        let r = suite(id, &["lightlike"]);
        require(id, &r)?;
        min_exp = r.checks.iter().filter(|c| c.id.ends_with("exponent")).map(|c| c.measured).fold(min_exp, f64::min);
    }
    Ok(format!("smallest exponent {min_exp:.3}"))
}

fn log_asymptotics() -> Outcome {
    let r = suite("star1:4:0.4", &["asymptotics"]);
    require("star1:4:0.4", &r)?;
    let worst = |suffix: &str| r.checks.iter().filter(|c| c.id.ends_with(suffix)).map(|c| c.measured).fold(0.0, f64::max);
    Ok(format!("re {:.1e}, f* {:.1e}, t* {:.1e}", worst(".re"), worst(".fstar"), worst(".tstar")))
}

fn reflection() -> Outcome {
    let r = suite("star1:4:0.4", &["symmetry", "branchpoints"]);
    require("star1:4:0.4", &r)?;
    let sym = r.checks.iter().filter(|c| c.id.starts_with("symmetry")).map(|c| c.measured).fold(0.0, f64::max);
    Ok(format!("symmetries {sym:.1e}, null defect {:.1e}", r.get("axis.max-conj-null").unwrap().measured))
}

fn lipschitz() -> Outcome {
    let mut sat = 0.0f64;
    for id in ["star1:4:0.4", "star2:4:0.4"] {
        let r = suite(id, &["lipschitz"]);
        require(id, &r)?;
        sat = sat.max(r.get("lipschitz.saturation").unwrap().measured);
    }
    Ok(format!("100 chords each, saturation gap {sat:.1e}"))
}

fn feasibility() -> Outcome {
    let cross = random_cross_check(200, 8, SEED).map_err(|e| e.to_string())?;
    ensure(cross.agreements == cross.total && cross.total == 200, format!("{} of {} agree", cross.agreements, cross.total))?;
    let c = ComplexVal::new;
    let square = PolygonDomain::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0)]).unwrap();
    let s = EdgeSigns::parse("+-+-").unwrap();
    ensure(check_js(&square, &s).unwrap().is_feasible(), "square infeasible")?;
    ensure(check_lightlike(&lift_lightlike(&square, &s, 0.0).unwrap(), &square).unwrap().is_feasible(), "square lift infeasible")?;
    let tri = PolygonDomain::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
    let s = EdgeSigns::parse("+++").unwrap();
    ensure(check_js(&tri, &s).unwrap().kind() == Some(ViolationKind::ClosureDefect), "triangle not a closure defect")?;
    ensure(
        check_lightlike(&lift_lightlike(&tri, &s, 0.0).unwrap(), &tri).unwrap().kind() == Some(ViolationKind::ClosureDefect),
        "lifted triangle not a closure defect",
    )?;
    for id in ["star1:4:0.4", "star2:4:0.4"] {
        require(id, &suite(id, &["feasibility"]))?;
    }
    Ok(format!("{} random polygons agree ({} feasible)", cross.total, cross.feasible))
}

fn corner_law() -> Outcome {
    for id in ["star1:4:0.4", "star2:4:0.4"] {
        require(id, &suite(id, &["corners"]))?;
    }
    let ex = signed("star2:4:0.4");
    let mut bad: Vec<Sign> = ex.signs.as_slice().to_vec();
    // Corner 1 is convex. Equal edge lengths keep closure.
    ensure(bad[0] != bad[1] && bad[1] != bad[3], "unexpected star signs")?;
    bad.swap(1, 3);
    let r = check_corner_signs(&ex.height, &ex.polygon, &EdgeSigns::new(bad.clone())).map_err(|e| e.to_string())?;
    ensure(!r.pass, "flipped edge not flagged")?;
    let js = check_js(&ex.polygon, &EdgeSigns::new(bad)).map_err(|e| e.to_string())?;
    ensure(js.kind() == Some(ViolationKind::ConvexCornerSameSign), format!("feasibility gave {:?}", js.kind()))?;
    Ok(format!("violating configuration flagged at {} places", r.measured))
}

fn sp_family() -> Outcome {
    for p in [0.1, 1.0 / 3.0, 0.5, FRAC_1_SQRT_2, 0.9] {
        let s = SpSurface::new(p).unwrap();
        ensure(s.eval([0.0; 3]).abs() < 1e-15, format!("F_{p}(0) = {}", s.eval([0.0; 3])))?;
        let samples = surface_samples(&s, Aabb::cube(2.0 * PI), 200, SEED);
        let point = sp_symmetry_test(&s, Isometry::PointReflection { center: [0.0; 3] }, &samples);
        ensure(point.pass, format!("point symmetry fails at p = {p}"))?;
    }
    let mut notes = Vec::new();
    for (p, line_tol, swap_holds) in [(FRAC_1_SQRT_2, 1e-8, true), (1.0 / 3.0, 1e-6, false)] {
        let s = SpSurface::new(p).unwrap();
        let samples = surface_samples(&s, Aabb::cube(2.0 * PI), 200, SEED);
        let swap = sp_symmetry_test(&s, Isometry::Swap, &samples);
        if swap_holds {
            ensure(swap.pass, format!("swap fails at p = {p}: {:e}", swap.max_residual))?;
        } else {
            ensure(swap.max_residual > 1e-3, format!("swap residual {:e} at p = {p}", swap.max_residual))?;
        }
        let mut seeds = vec![[0.0; 3]];
        seeds.extend(surface_samples(&s, Aabb::cube(PI), 3, SEED));
        let found = sp_lightlike_line_search(&s, &seeds, 1e-6);
        let best = found
            .iter()
            .min_by(|a, b| a.residual.total_cmp(&b.residual))
            .ok_or_else(|| format!("no line found at p = {p}"))?;
        ensure(best.residual < line_tol, format!("line residual {:e} at p = {p}", best.residual))?;
        let d = best.direction;
        let tilted = [d[0] * (1.0 + 1e-2), d[1] * (1.0 + 1e-2), 1.0];
        let off = line_residual(&s, best.point, tilted, LINE_HALF_LENGTH);
        ensure(off >= 10.0 * best.residual.max(1e-6), format!("perturbed residual only {off:e} at p = {p}"))?;
        notes.push(format!("p={p:.4}: {} lines, best {:.0e}", found.len(), best.residual));
    }
    Ok(notes.join("; "))
}

fn run_bin(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(env!("CARGO_BIN_EXE_minmax")).args(args).output().map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let mut bytes = Vec::new();
    for k in 0..2 {
        let json = path(&format!("report{k}.json"));
        let out = run_bin(&["verify", "--example", "star1:4:0.4", "--suite", "all", "--seed", "7", "--json", &json])?;
        ensure(out.status.code() == Some(0), format!("verify exited with {:?}", out.status.code()))?;
        let obj = path(&format!("mesh{k}.obj"));
        let out = run_bin(&["build", "--example", "star1:4:0.4", "--surface", "max", "--grid", "32x128", "--out", &obj])?;
        ensure(out.status.success(), "build failed")?;
        bytes.push((std::fs::read(&json).unwrap(), std::fs::read(&obj).unwrap()));
    }
    ensure(bytes[0].0 == bytes[1].0, "JSON reports differ")?;
    ensure(bytes[0].1 == bytes[1].1, "OBJ files differ")?;
    Ok(format!("{} JSON bytes, {} OBJ bytes identical", bytes[0].0.len(), bytes[0].1.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("dilatation closed forms", dilatation_closed_forms),
        ("root equations", root_equations),
        ("conformality", conformality),
        ("duality", duality),
        ("lightlike degeneration", lightlike_degeneration),
        ("logarithmic asymptotics", log_asymptotics),
        ("reflection symmetries", reflection),
        ("1-Lipschitz", lipschitz),
        ("feasibility", feasibility),
        ("corner sign law", corner_law),
        ("S_p family", sp_family),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} ({secs:.1}s)", k + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} ({secs:.1}s)", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
