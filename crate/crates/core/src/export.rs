//! Example resolution, mesh building and the verification suite.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{resolve, CatalogEntry, CatalogId, StarExample};
use crate::domain::{lift_lightlike, DomainDescriptor, EdgeSigns, PolygonDomain};
use crate::error::{Error, Result};
use crate::feasibility::{check_js, check_lightlike, random_cross_check, FeasibilityReport};
use crate::harmonic::{HarmonicMap, StepBoundaryFunction};
use crate::height::{calibrate_branch, edge_jumps, edge_probes, HeightFunction};
use crate::mesh::{GridSpec, MeshBuffer, MeshMetadata};
use crate::numerics::ComplexVal;
use crate::reflection::{axis_features, check_symmetries, extend, half_disk_map_for_vertex, reflection_hypothesis, ExtendedSurface};
use crate::sp::{
    line_residual, sp_lightlike_line_search, sp_sample, sp_symmetry_test, surface_samples, Aabb, Isometry, SpSurface,
    LINE_HALF_LENGTH,
};
use crate::surfaces::{
    check_conformality, check_corner_signs, check_duality, check_lightlike_degeneration, check_lipschitz,
    check_lipschitz_saturation, check_log_asymptotics, check_normals, default_degeneration_radii, eval_surface,
    CheckResult, SurfaceKind, VerificationReport,
};

/// Names accepted by [`parse_suite`], in run order.
pub const CHECK_NAMES: [&str; 9] = [
    "conformality",
    "duality",
    "lipschitz",
    "lightlike",
    "corners",
    "asymptotics",
    "symmetry",
    "branchpoints",
    "feasibility",
];

pub const REPORT_SCHEMA: u32 = 1;

/// Half-width of the box used for level-set examples.
pub const SP_BOX_HALF: f64 = 2.0 * PI;

/// A signed domain with its height function.
#[derive(Clone, Debug)]
pub struct SignedExample {
    pub polygon: PolygonDomain,
    pub signs: EdgeSigns,
    pub height: HeightFunction,
}

impl From<StarExample> for SignedExample {
    fn from(s: StarExample) -> Self {
        Self { polygon: s.polygon, signs: s.signs, height: s.height }
    }
}

#[derive(Clone, Debug)]
pub enum Example {
    Signed(Box<SignedExample>),
    /// A domain without boundary data: only the feasibility check applies.
    Domain(PolygonDomain, EdgeSigns),
    Sp(SpSurface),
}

/// Builds the height function of a descriptor that carries arcs.
pub fn example_from_descriptor(d: &DomainDescriptor) -> Result<Example> {
    let polygon = d.polygon()?;
    let signs = d.edge_signs()?;
    let Some(arcs) = &d.arcs else {
        return Ok(Example::Domain(polygon, signs));
    };
    let boundary = StepBoundaryFunction::from_descriptors(arcs)?;
    if !boundary.values_are_vertices_of(&polygon) {
        return Err(Error::InvalidInput("arc values are not the polygon vertices".into()));
    }
    let map = HarmonicMap::with_univalence_check(boundary);
    let hf = HeightFunction::path_integrated(map)?;
    let probes = edge_probes(hf.map(), &polygon)?;
    let height = calibrate_branch(&hf, &signs, &probes)?.dual_normalized()?;
    Ok(Example::Signed(Box::new(SignedExample { polygon, signs, height })))
}

/// Resolves a catalog id, or failing that a path to a domain descriptor.
pub fn load_example(id: &str) -> Result<Example> {
    match id.parse::<CatalogId>() {
        Ok(cid) => Ok(match resolve(&cid)? {
            CatalogEntry::Star(s) => Example::Signed(Box::new((*s).into())),
            CatalogEntry::Sp(s) => Example::Sp(s),
        }),
        Err(e) => {
            let path = Path::new(id);
            if !path.is_file() {
                return Err(e);
            }
            example_from_descriptor(&DomainDescriptor::from_json(&std::fs::read_to_string(path)?)?)
        }
    }
}

/// First vertex admitting a reflection.
pub fn default_extension_vertex(ex: &SignedExample) -> Result<usize> {
    (0..ex.polygon.len())
        .find(|&v| reflection_hypothesis(&ex.polygon, &ex.signs, v).is_ok())
        .ok_or_else(|| Error::HypothesisViolated("no corner admits a reflection".into()))
}

pub fn extended_surface(ex: &SignedExample, vertex: usize) -> Result<ExtendedSurface> {
    let psi = half_disk_map_for_vertex(&ex.height, &ex.polygon, vertex)?;
    extend(&ex.height, &ex.polygon, &ex.signs, vertex, psi)
}

/// Samples a surface on a polar grid. Level-set examples ignore `kind` and
/// use `grid.n_radial` as the lattice resolution.
pub fn build_mesh(example: &Example, label: &str, kind: SurfaceKind, grid: &GridSpec, extended: Option<usize>) -> Result<MeshBuffer> {
    let metadata = MeshMetadata { surface: kind.name().to_string(), example: label.to_string(), grid: grid.to_string() };
    match example {
        Example::Sp(s) => {
            let lm = sp_sample(s, Aabb::cube(SP_BOX_HALF), grid.n_radial)?;
            let mut mesh = lm.mesh;
            mesh.metadata = MeshMetadata { surface: "level-set".into(), ..metadata };
            Ok(mesh)
        }
        Example::Domain(..) => Err(Error::InvalidInput(format!("`{label}` carries no boundary data"))),
        Example::Signed(ex) => {
            let points = grid.points();
            let vertices = match extended {
                Some(v) => {
                    let ext = extended_surface(ex, v)?;
                    points.iter().map(|&w| ext.position(kind, w)).collect::<Result<Vec<_>>>()?
                }
                None => points.iter().map(|&w| Ok(eval_surface(kind, &ex.height, w)?.position)).collect::<Result<Vec<_>>>()?,
            };
            MeshBuffer::from_parts(vertices, grid.triangles(), metadata)
        }
    }
}

/// `all` or a comma-separated list of check names.
pub fn parse_suite(s: &str) -> Result<Vec<String>> {
    if s.trim() == "all" {
        return Ok(CHECK_NAMES.iter().map(|c| c.to_string()).collect());
    }
    let mut out: Vec<String> = Vec::new();
    for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
        if !CHECK_NAMES.contains(&name) {
            return Err(Error::UnknownCheck(name.to_string()));
        }
        if !out.iter().any(|o| o == name) {
            out.push(name.to_string());
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("empty suite".into()));
    }
    Ok(out)
}

/// Random parameter point with `|w| ≤ rmax`, uniform in area.
fn random_point(rng: &mut ChaCha8Rng, rmax: f64) -> ComplexVal {
    ComplexVal::from_polar(rmax * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI))
}

fn random_pairs(rng: &mut ChaCha8Rng, count: usize, rmax: f64) -> Vec<(ComplexVal, ComplexVal)> {
    (0..count).map(|_| (random_point(rng, rmax), random_point(rng, rmax))).collect()
}

/// Chords whose image segment lies in the domain.
fn admissible_chords(ex: &SignedExample, rng: &mut ChaCha8Rng, count: usize) -> Result<Vec<(ComplexVal, ComplexVal)>> {
    let m = ex.height.map();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count {
            return Err(Error::NoConvergence(format!("only {} admissible chords found", out.len())));
        }
        let (a, b) = (random_point(rng, 0.95), random_point(rng, 0.95));
        let (za, zb) = (m.eval_f(a)?, m.eval_f(b)?);
        if (0..=64).all(|k| ex.polygon.contains(za + (zb - za) * (k as f64 / 64.0))) {
            out.push((a, b));
        }
    }
    Ok(out)
}

fn feasibility_result(id: &str, r: &FeasibilityReport) -> Result<CheckResult> {
    let mut c = CheckResult::at_least(id, r.margin.unwrap_or(0.0), 0.0, vec![]);
    c.pass = r.is_feasible();
    if let Some(v) = &r.violated_condition {
        c = c.with_detail(serde_json::to_string(v)?);
    }
    Ok(c)
}

fn feasibility_checks(p: &PolygonDomain, s: &EdgeSigns, seed: u64) -> Result<Vec<CheckResult>> {
    let js = check_js(p, s)?;
    let ll = check_lightlike(&lift_lightlike(p, s, 0.0)?, p)?;
    let cross = random_cross_check(200, 8, seed)?;
    let mut agree = CheckResult::at_least("feasibility.cross-check", cross.agreements as f64, cross.total as f64, vec![]);
    agree.detail = Some(format!("{} of {} agree, {} feasible", cross.agreements, cross.total, cross.feasible));
    Ok(vec![
        feasibility_result("feasibility.js", &js)?,
        feasibility_result("feasibility.lightlike", &ll)?,
        agree,
    ])
}

/// Symmetry and lightlike-line checks of a level-set example.
fn sp_checks(s: &SpSurface, name: &str, seed: u64) -> Result<Vec<CheckResult>> {
    let samples = surface_samples(s, Aabb::cube(SP_BOX_HALF), 200, seed);
    if samples.is_empty() {
        return Err(Error::EmptyLevelSet);
    }
    match name {
        "symmetry" => {
            let origin = CheckResult::at_most("symmetry.origin", s.eval([0.0; 3]).abs(), 1e-15, vec![]);
            let swap = sp_symmetry_test(s, Isometry::Swap, &samples);
            let expected = (s.p - s.q).abs() < 1e-12;
            let mut swap_check = CheckResult::at_most("symmetry.swap", swap.max_residual, 1e-6, vec![]);
            swap_check.pass = if expected { swap.pass } else { swap.max_residual > 1e-3 };
            swap_check.detail = Some(if expected { "expected symmetric" } else { "expected asymmetric" }.to_string());
            let point = sp_symmetry_test(s, Isometry::PointReflection { center: [0.0; 3] }, &samples);
            Ok(vec![origin, swap_check, CheckResult::at_most("symmetry.point", point.max_residual, 1e-6, vec![])])
        }
        "lightlike" => {
            let mut seeds = vec![[0.0; 3]];
            seeds.extend(surface_samples(s, Aabb::cube(PI), 3, seed));
            let found = sp_lightlike_line_search(s, &seeds, 1e-6);
            let Some(best) = found.iter().min_by(|a, b| a.residual.total_cmp(&b.residual)) else {
                let mut c = CheckResult::at_most("lightlike.line", f64::INFINITY, 1e-6, vec![]);
                c.pass = false;
                return Ok(vec![c]);
            };
            let d = best.direction;
            let tilted = [d[0] * (1.0 + 1e-2), d[1] * (1.0 + 1e-2), 1.0];
            let off = line_residual(s, best.point, tilted, LINE_HALF_LENGTH);
            let line = CheckResult::at_most("lightlike.line", best.residual, 1e-6, vec![])
                .with_detail(format!("{} candidates", found.len()));
            let ratio = off / best.residual.max(1e-6);
            Ok(vec![line, CheckResult::at_least("lightlike.sensitivity", ratio, 10.0, vec![])])
        }
        other => Err(Error::InvalidInput(format!("check `{other}` does not apply to level-set examples"))),
    }
}

fn signed_checks(ex: &SignedExample, name: &str, seed: u64) -> Result<Vec<CheckResult>> {
    let (hf, p, s) = (&ex.height, &ex.polygon, &ex.signs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match name {
        "conformality" => {
            let mut r = check_conformality(hf, &GridSpec::new(64, 256, 1.0 - 1e-3)?)?;
            let pts: Vec<ComplexVal> = (0..50).map(|_| random_point(&mut rng, 0.9)).collect();
            r.merge(check_normals(hf, &pts, 1e-6)?);
            r.checks
        }
        "duality" => vec![check_duality(hf, p, &random_pairs(&mut rng, 20, 0.9), 1e-6)?],
        "lipschitz" => {
            let chords = admissible_chords(ex, &mut rng, 100)?;
            vec![check_lipschitz(hf, p, &chords)?, check_lipschitz_saturation(hf, p)?]
        }
        "lightlike" => {
            let radii = default_degeneration_radii();
            let mut out = Vec::new();
            for e in 0..p.len() {
                out.extend(check_lightlike_degeneration(hf, p, s, e, &radii)?.checks);
            }
            out
        }
        "corners" => vec![check_corner_signs(hf, p, s)?],
        "asymptotics" => {
            let mut out = Vec::new();
            let mut jumps = edge_jumps(hf.map(), p)?;
            jumps.sort_unstable();
            for k in jumps {
                out.extend(check_log_asymptotics(hf, p, s, k, 0.0)?.checks);
            }
            out
        }
        "symmetry" => {
            let ext = extended_surface(ex, default_extension_vertex(ex)?)?;
            check_symmetries(&ext, 200, seed, 1e-10)?.checks
        }
        "branchpoints" => {
            let ext = extended_surface(ex, default_extension_vertex(ex)?)?;
            axis_features(&ext, 2001)?.checks().checks
        }
        "feasibility" => feasibility_checks(p, s, seed)?,
        other => return Err(Error::UnknownCheck(other.to_string())),
    })
}

/// Runs the named checks in the given order with a fixed seed.
pub fn run_verify(example: &Example, suite: &[String], seed: u64) -> Result<VerificationReport> {
    let mut checks = Vec::new();
    for name in suite {
        if !CHECK_NAMES.contains(&name.as_str()) {
            return Err(Error::UnknownCheck(name.clone()));
        }
        log::info!("running {name}");
        match example {
            Example::Signed(ex) => checks.extend(signed_checks(ex, name, seed)?),
            Example::Sp(s) => {
                if name == "symmetry" || name == "lightlike" {
                    checks.extend(sp_checks(s, name, seed)?);
                }
            }
            Example::Domain(p, s) => {
                if name == "feasibility" {
                    checks.extend(feasibility_checks(p, s, seed)?);
                } else {
                    return Err(Error::InvalidInput(format!("check `{name}` needs boundary data")));
                }
            }
        }
    }
    Ok(VerificationReport::new(checks))
}

/// Body of the JSON report.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyOutput<'a> {
    pub schema: u32,
    pub example: &'a str,
    pub seed: u64,
    pub suite: &'a [String],
    pub pass: bool,
    pub checks: &'a [CheckResult],
}

pub fn report_json(example: &str, seed: u64, suite: &[String], report: &VerificationReport) -> Result<String> {
    let out = VerifyOutput { schema: REPORT_SCHEMA, example, seed, suite, pass: report.passed(), checks: &report.checks };
    let mut s = serde_json::to_string_pretty(&out)?;
    s.push('\n');
    Ok(s)
}

/// Verdicts of both checkers on one domain.
#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityOutput {
    pub schema: u32,
    pub js: FeasibilityReport,
    pub lightlike: FeasibilityReport,
    pub agree: bool,
}

pub fn feasibility_of(d: &DomainDescriptor) -> Result<FeasibilityOutput> {
    let p = d.polygon()?;
    let s = d.edge_signs()?;
    let js = check_js(&p, &s)?;
    let lightlike = check_lightlike(&lift_lightlike(&p, &s, 0.0)?, &p)?;
    let agree = js.verdict == lightlike.verdict;
    Ok(FeasibilityOutput { schema: REPORT_SCHEMA, js, lightlike, agree })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_are_checked() {
        assert_eq!(parse_suite("all").unwrap().len(), CHECK_NAMES.len());
        assert_eq!(parse_suite("corners, duality,corners").unwrap(), vec!["corners", "duality"]);
        assert!(matches!(parse_suite("corners,bogus"), Err(Error::UnknownCheck(n)) if n == "bogus"));
    }

    #[test]
    fn all_plus_triangle_reports_closure_defect() {
        let d = DomainDescriptor::from_json(r#"{"vertices":[[0,0],[1,0],[0,1]],"signs":["+","+","+"]}"#).unwrap();
        let ex = example_from_descriptor(&d).unwrap();
        let r = run_verify(&ex, &["feasibility".to_string()], 1).unwrap();
        let js = r.get("feasibility.js").unwrap();
        assert!(!js.pass);
        assert!(js.detail.as_deref().unwrap().contains("ClosureDefect"));
    }
}
