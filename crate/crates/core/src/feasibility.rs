//! Solvability of the infinite boundary value problem over a signed polygon,
//! in its perimeter form and in its lightlike form.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{enumerate_subpolygons, lift_lightlike, interior_angles, EdgeSigns, LightlikePolygon, PolygonDomain, Sign};
use crate::error::{Error, Result};
use crate::numerics::{bisect, ComplexVal, Tolerance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Feasible,
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    ClosureDefect,
    ConvexCornerSameSign,
    PerimeterBound,
    TimelikeChord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// Vertex indices refer to the input polygon.
    Polygon { indices: Vec<usize>, alpha: f64, beta: f64, gamma: f64 },
    Chord { i: usize, j: usize, dt: f64, dz: f64 },
    Corner { vertex: usize, angle: f64, sign: Sign },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub verdict: Verdict,
    pub violated_condition: Option<Violation>,
    /// Smallest slack of the strict inequalities, in length units.
    pub margin: Option<f64>,
    /// Set when the verdict rests on a slack below `1e-10·γ`.
    pub degenerate: bool,
}

impl FeasibilityReport {
    fn feasible(margin: Option<f64>) -> Self {
        Self { verdict: Verdict::Feasible, violated_condition: None, margin, degenerate: false }
    }

    fn infeasible(kind: ViolationKind, witness: Witness, margin: Option<f64>, degenerate: bool) -> Self {
        Self { verdict: Verdict::Infeasible, violated_condition: Some(Violation { kind, witness }), margin, degenerate }
    }

    pub fn is_feasible(&self) -> bool {
        self.verdict == Verdict::Feasible
    }

    pub fn kind(&self) -> Option<ViolationKind> {
        self.violated_condition.as_ref().map(|v| v.kind)
    }
}

const STRAIGHT_TOL: f64 = 1e-12;

/// Drops vertices at straight corners whose two edges carry the same sign.
/// Returns the reduced polygon, its signs and the original index of each
/// kept vertex.
pub fn merge_straight_edges(p: &PolygonDomain, s: &EdgeSigns) -> Result<(PolygonDomain, Vec<Sign>, Vec<usize>)> {
    let n = p.len();
    let angles = interior_angles(p);
    let keep: Vec<usize> = (0..n)
        .filter(|&v| !((angles[v] - PI).abs() < STRAIGHT_TOL && s.get(v + n - 1) == s.get(v)))
        .collect();
    let poly = PolygonDomain::new(keep.iter().map(|&k| p.vertex(k)).collect())?;
    let signs = keep.iter().map(|&k| s.get(k)).collect();
    Ok((poly, signs, keep))
}

fn signed_lengths(p: &PolygonDomain, signs: &[Sign]) -> (f64, f64) {
    (0..p.len()).fold((0.0, 0.0), |(a, b), e| match signs[e] {
        Sign::Plus => (a + p.edge_length(e), b),
        Sign::Minus => (a, b + p.edge_length(e)),
    })
}

fn convex_same_sign(p: &PolygonDomain, signs: &[Sign], keep: &[usize]) -> Option<Witness> {
    let n = p.len();
    let angles = interior_angles(p);
    (0..n).find_map(|v| {
        let prev = (v + n - 1) % n;
        (angles[v] < PI - STRAIGHT_TOL && signs[prev] == signs[v]).then(|| Witness::Corner {
            vertex: keep[v],
            angle: angles[v],
            sign: signs[v],
        })
    })
}

/// Closure `α = β` and the strict perimeter bounds `2α_P < γ_P`,
/// `2β_P < γ_P` over every proper subpolygon.
pub fn check_js(p: &PolygonDomain, s: &EdgeSigns) -> Result<FeasibilityReport> {
    if s.len() != p.len() {
        return Err(Error::InvalidInput(format!("{} signs for {} edges", s.len(), p.len())));
    }
    let (q, signs, keep) = merge_straight_edges(p, s)?;
    let gamma = q.perimeter();
    let (alpha, beta) = signed_lengths(&q, &signs);
    if (alpha - beta).abs() > 1e-12 * gamma {
        let w = Witness::Polygon { indices: keep.clone(), alpha, beta, gamma };
        return Ok(FeasibilityReport::infeasible(ViolationKind::ClosureDefect, w, None, false));
    }
    if let Some(w) = convex_same_sign(&q, &signs, &keep) {
        return Ok(FeasibilityReport::infeasible(ViolationKind::ConvexCornerSameSign, w, None, false));
    }
    let n = q.len();
    let mut margin = f64::INFINITY;
    for sub in enumerate_subpolygons(&q)? {
        if sub.indices.len() == n {
            continue;
        }
        let m = sub.indices.len();
        let (mut a, mut b) = (0.0, 0.0);
        for k in 0..m {
            if sub.side_is_parent_edge(k, n) {
                let e = sub.indices[k];
                match signs[e] {
                    Sign::Plus => a += q.edge_length(e),
                    Sign::Minus => b += q.edge_length(e),
                }
            }
        }
        let g = sub.polygon.perimeter();
        let slack = (g - 2.0 * a).min(g - 2.0 * b);
        margin = margin.min(slack);
        if slack < 1e-10 * gamma {
            let w = Witness::Polygon { indices: sub.indices.iter().map(|&k| keep[k]).collect(), alpha: a, beta: b, gamma: g };
            return Ok(FeasibilityReport::infeasible(ViolationKind::PerimeterBound, w, Some(slack), slack > 0.0));
        }
    }
    Ok(FeasibilityReport::feasible(margin.is_finite().then_some(margin)))
}

/// Closure of the lifted boundary and spacelike chords between all pairs of
/// its vertices joined inside the domain.
pub fn check_lightlike(g: &LightlikePolygon, p: &PolygonDomain) -> Result<FeasibilityReport> {
    if !g.projects_onto(p) {
        return Err(Error::ProjectionMismatch);
    }
    let n = p.len();
    let gamma = p.perimeter();
    let dts: Vec<f64> = (0..n).map(|e| g.height(e + 1) - g.height(e)).collect();
    if !g.closed {
        let (alpha, beta) = dts.iter().fold((0.0, 0.0), |(a, b), &d| if d > 0.0 { (a + d, b) } else { (a, b - d) });
        let w = Witness::Polygon { indices: (0..n).collect(), alpha, beta, gamma };
        return Ok(FeasibilityReport::infeasible(ViolationKind::ClosureDefect, w, None, false));
    }
    let signs = EdgeSigns::new(dts.iter().map(|&d| Sign::from_value(d)).collect());
    let (q, qs, keep) = merge_straight_edges(p, &signs)?;
    if let Some(w) = convex_same_sign(&q, &qs, &keep) {
        return Ok(FeasibilityReport::infeasible(ViolationKind::ConvexCornerSameSign, w, None, false));
    }
    let m = q.len();
    let mut margin = f64::INFINITY;
    for i in 0..m {
        for j in i + 2..m {
            if (j + 1) % m == i || !q.chord_admissible(i, j) {
                continue;
            }
            let (a, b) = (keep[i], keep[j]);
            let dt = (g.height(b) - g.height(a)).abs();
            let dz = (p.vertex(b) - p.vertex(a)).norm();
            let slack = dz - dt;
            margin = margin.min(slack);
            if slack < 1e-10 * gamma {
                let w = Witness::Chord { i: a, j: b, dt, dz };
                return Ok(FeasibilityReport::infeasible(ViolationKind::TimelikeChord, w, Some(slack), slack > 0.0));
            }
        }
    }
    Ok(FeasibilityReport::feasible(margin.is_finite().then_some(margin)))
}

/// A random star-shaped signed polygon with `3..=max_vertices` vertices.
/// Most draws alternate the signs at convex corners. With `close` one radius
/// is then adjusted by bisection until the signed lengths balance; `None`
/// when the draw cannot be completed.
pub fn random_signed_polygon(rng: &mut impl Rng, max_vertices: usize, close: bool) -> Option<(PolygonDomain, EdgeSigns)> {
    let n = rng.gen_range(3..=max_vertices.max(3));
    let mut cuts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
    cuts.sort_by(f64::total_cmp);
    let mut radii: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..1.5)).collect();
    let points = |radii: &[f64]| -> Vec<ComplexVal> { (0..n).map(|k| ComplexVal::from_polar(radii[k], cuts[k])).collect() };
    let draft = PolygonDomain::new(points(&radii)).ok()?;
    let random_sign = |rng: &mut dyn rand::RngCore| if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus };
    let mut signs: Vec<Sign> = (0..n).map(|_| random_sign(rng)).collect();
    if rng.gen_bool(0.8) {
        // Walk the corners from a reflex one, if any, so that the last
        // corner visited is free.
        let angles = interior_angles(&draft);
        let start = (0..n).find(|&v| angles[v] >= PI).unwrap_or(0);
        for step in 1..n {
            let v = (start + step) % n;
            if angles[v] < PI {
                signs[v] = signs[(v + n - 1) % n].flipped();
            }
        }
    }
    if close {
        let k = rng.gen_range(0..n);
        let deficit = |r: f64| {
            let mut rs = radii.clone();
            rs[k] = r;
            let pts = points(&rs);
            (0..n).map(|e| signs[e].value() * (pts[(e + 1) % n] - pts[e]).norm()).sum::<f64>()
        };
        let tol = Tolerance::new(1e-15, 1e-15, 200).ok()?;
        radii[k] = bisect(deficit, 1e-3, 20.0, &tol).ok()?;
    }
    let p = PolygonDomain::new(points(&radii)).ok()?;
    Some((p, EdgeSigns::new(signs)))
}

/// Outcome of comparing both checkers on random polygons.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub total: usize,
    pub agreements: usize,
    pub feasible: usize,
    /// Sizes of the polygons on which the checkers disagreed.
    pub disagreements: Vec<usize>,
}

/// Runs both checkers on `count` random signed polygons with at most
/// `max_vertices` vertices, about half of them forced to close.
pub fn random_cross_check(count: usize, max_vertices: usize, seed: u64) -> Result<CrossCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CrossCheck::default();
    while out.total < count {
        let close = rng.gen_bool(0.5);
        let Some((p, s)) = random_signed_polygon(&mut rng, max_vertices, close) else { continue };
        let js = check_js(&p, &s)?;
        let ll = check_lightlike(&lift_lightlike(&p, &s, 0.0)?, &p)?;
        out.total += 1;
        if js.verdict == ll.verdict {
            out.agreements += 1;
        } else {
            out.disagreements.push(p.len());
        }
        if js.is_feasible() {
            out.feasible += 1;
        }
    }
    Ok(out)
}
