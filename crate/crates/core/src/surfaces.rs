//! The four surfaces built from `(f, F)` and the numerical checks of their
//! identities and boundary behaviour.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{interior_angles, EdgeSigns, PolygonDomain, Sign};
use crate::error::{check_in_disk, Error, Result};
use crate::harmonic::conjugate_of;
use crate::height::{edge_jumps, edge_probes, probe_signs, HeightFunction};
use crate::mesh::GridSpec;
use crate::numerics::{fit_slope, integrate_interval, ComplexVal, Tolerance};

const I: ComplexVal = ComplexVal::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceKind {
    /// `(f, Re F)` in Euclidean space.
    Min,
    /// `(f, Im F)` in Lorentz–Minkowski space.
    Max,
    /// `(f*, Im F)`.
    MinConj,
    /// `(f*, −Re F)`.
    MaxConj,
}

impl SurfaceKind {
    pub const ALL: [SurfaceKind; 4] = [SurfaceKind::Min, SurfaceKind::Max, SurfaceKind::MinConj, SurfaceKind::MaxConj];

    pub fn is_lorentzian(self) -> bool {
        matches!(self, SurfaceKind::Max | SurfaceKind::MaxConj)
    }

    pub fn dual(self) -> Self {
        match self {
            SurfaceKind::Min => SurfaceKind::Max,
            SurfaceKind::Max => SurfaceKind::Min,
            SurfaceKind::MinConj => SurfaceKind::MaxConj,
            SurfaceKind::MaxConj => SurfaceKind::MinConj,
        }
    }

    pub fn conjugate(self) -> Self {
        match self {
            SurfaceKind::Min => SurfaceKind::MinConj,
            SurfaceKind::MinConj => SurfaceKind::Min,
            SurfaceKind::Max => SurfaceKind::MaxConj,
            SurfaceKind::MaxConj => SurfaceKind::Max,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::Min => "min",
            SurfaceKind::Max => "max",
            SurfaceKind::MinConj => "min-conj",
            SurfaceKind::MaxConj => "max-conj",
        }
    }
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SurfaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SurfaceKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown surface `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub w: ComplexVal,
    pub position: [f64; 3],
    pub normal: [f64; 3],
    pub metric_det: f64,
}

/// Everything the surfaces need at one parameter point.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Jet {
    pub f: ComplexVal,
    pub fstar: ComplexVal,
    pub big_f: ComplexVal,
    pub hp: ComplexVal,
    pub gp: ComplexVal,
    pub d_f: ComplexVal,
    /// `c·√ω = F′/(2i·h′)`.
    pub s: ComplexVal,
}

pub(crate) fn jet(hf: &HeightFunction, w: ComplexVal) -> Result<Jet> {
    let m = hf.map();
    let (h, g) = m.eval_h_g_unchecked(w);
    let (hp, gp) = m.eval_hp_gp_unchecked(w);
    Ok(Jet {
        f: m.eval_f_unchecked(w),
        fstar: conjugate_of(h, g),
        big_f: hf.eval_unchecked(w)?,
        hp,
        gp,
        d_f: hf.derivative_unchecked(w)?,
        s: hf.signed_sqrt_omega(w)?,
    })
}

/// Position of a surface given `f`, `f*` and `F`.
pub fn position(kind: SurfaceKind, f: ComplexVal, fstar: ComplexVal, big_f: ComplexVal) -> [f64; 3] {
    match kind {
        SurfaceKind::Min => [f.re, f.im, big_f.re],
        SurfaceKind::Max => [f.re, f.im, big_f.im],
        SurfaceKind::MinConj => [fstar.re, fstar.im, big_f.im],
        SurfaceKind::MaxConj => [fstar.re, fstar.im, -big_f.re],
    }
}

/// `∂X/∂w` for each coordinate.
pub fn phi_vectors(kind: SurfaceKind, hp: ComplexVal, gp: ComplexVal, d_f: ComplexVal) -> [ComplexVal; 3] {
    let (xw, yw) = match kind {
        SurfaceKind::Min | SurfaceKind::Max => ((hp + gp) / 2.0, (hp - gp) / (2.0 * I)),
        SurfaceKind::MinConj | SurfaceKind::MaxConj => (-I * (hp + gp) / 2.0, -(hp - gp) / 2.0),
    };
    let tw = match kind {
        SurfaceKind::Min => d_f / 2.0,
        SurfaceKind::Max | SurfaceKind::MinConj => -I * d_f / 2.0,
        SurfaceKind::MaxConj => -d_f / 2.0,
    };
    [xw, yw, tw]
}

fn metric_sign(kind: SurfaceKind) -> f64 {
    if kind.is_lorentzian() {
        -1.0
    } else {
        1.0
    }
}

/// Conformal factor `λ²` with `ds² = λ²|dw|²`.
pub fn metric_factor(kind: SurfaceKind, phi: &[ComplexVal; 3]) -> f64 {
    2.0 * (phi[0].norm_sqr() + phi[1].norm_sqr() + metric_sign(kind) * phi[2].norm_sqr())
}

/// `|Σ ±Φ_k²| / Σ|Φ_k|²`.
pub fn conformality_residual(kind: SurfaceKind, phi: &[ComplexVal; 3]) -> f64 {
    let q = phi[0] * phi[0] + phi[1] * phi[1] + metric_sign(kind) * phi[2] * phi[2];
    q.norm() / (phi[0].norm_sqr() + phi[1].norm_sqr() + phi[2].norm_sqr())
}

/// `∇φ` of the minimal graph.
pub fn grad_phi(s: ComplexVal) -> (f64, f64) {
    let k = 1.0 - s.norm_sqr();
    (-2.0 * s.im / k, -2.0 * s.re / k)
}

/// `∇ψ` of the maximal graph.
pub fn grad_psi(s: ComplexVal) -> (f64, f64) {
    let k = 1.0 + s.norm_sqr();
    (2.0 * s.re / k, -2.0 * s.im / k)
}

pub fn normal_min(s: ComplexVal) -> [f64; 3] {
    let a = s.norm_sqr();
    let k = 1.0 + a;
    [2.0 * s.im / k, 2.0 * s.re / k, (1.0 - a) / k]
}

pub fn normal_max(s: ComplexVal) -> [f64; 3] {
    let a = s.norm_sqr();
    let k = 1.0 - a;
    [2.0 * s.re / k, -2.0 * s.im / k, (1.0 + a) / k]
}

fn sample_from_jet(kind: SurfaceKind, w: ComplexVal, j: &Jet) -> SurfaceSample {
    let phi = phi_vectors(kind, j.hp, j.gp, j.d_f);
    SurfaceSample {
        w,
        position: position(kind, j.f, j.fstar, j.big_f),
        normal: if kind.is_lorentzian() { normal_max(j.s) } else { normal_min(j.s) },
        metric_det: metric_factor(kind, &phi),
    }
}

pub fn eval_surface(kind: SurfaceKind, hf: &HeightFunction, w: ComplexVal) -> Result<SurfaceSample> {
    check_in_disk(w)?;
    Ok(sample_from_jet(kind, w, &jet(hf, w)?))
}

/// Result of one named check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
    /// Parameter points where the worst values were seen.
    pub locations: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    pub fn at_most(id: impl Into<String>, measured: f64, tolerance: f64, locations: Vec<[f64; 2]>) -> Self {
        Self { id: id.into(), pass: measured <= tolerance, measured, tolerance, locations, detail: None }
    }

    pub fn at_least(id: impl Into<String>, measured: f64, tolerance: f64, locations: Vec<[f64; 2]>) -> Self {
        Self { id: id.into(), pass: measured >= tolerance, measured, tolerance, locations, detail: None }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn new(mut checks: Vec<CheckResult>) -> Self {
        checks.sort_by(|a, b| a.id.cmp(&b.id));
        Self { checks }
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        self.checks.sort_by(|a, b| a.id.cmp(&b.id));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, id: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.id == id)
    }
}

fn loc(w: ComplexVal) -> [f64; 2] {
    [w.re, w.im]
}

/// Index and value of the largest entry, NaN counting as largest.
fn worst(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v.is_nan() || v > bv { (i, v) } else { (bi, bv) })
}

/// Conformality of all four surfaces, isometry of the conjugates and the
/// spacelike bound, over the points of `grid`.
pub fn check_conformality(hf: &HeightFunction, grid: &GridSpec) -> Result<VerificationReport> {
    let pts = grid.points();
    let jets = pts.par_iter().map(|&w| jet(hf, w)).collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    for kind in SurfaceKind::ALL {
        let res: Vec<f64> =
            jets.iter().map(|j| conformality_residual(kind, &phi_vectors(kind, j.hp, j.gp, j.d_f))).collect();
        let (i, v) = worst(&res);
        checks.push(CheckResult::at_most(format!("conformality.{kind}"), v, 1e-8, vec![loc(pts[i])]));
    }
    for (a, b) in [(SurfaceKind::Min, SurfaceKind::MinConj), (SurfaceKind::Max, SurfaceKind::MaxConj)] {
        let res: Vec<f64> = jets
            .iter()
            .map(|j| {
                let ma = metric_factor(a, &phi_vectors(a, j.hp, j.gp, j.d_f));
                let mb = metric_factor(b, &phi_vectors(b, j.hp, j.gp, j.d_f));
                (ma - mb).abs() / ma.abs().max(f64::MIN_POSITIVE)
            })
            .collect();
        let (i, v) = worst(&res);
        checks.push(CheckResult::at_most(format!("isometry.{a}"), v, 1e-10, vec![loc(pts[i])]));
    }
    // Spacelike: |∇ψ| < 1 and |∇ψ|² against 4|ω|/(1+|ω|)².
    let res: Vec<f64> = jets
        .iter()
        .map(|j| {
            let (px, py) = grad_psi(j.s);
            let g2 = px * px + py * py;
            let om = (j.gp / j.hp).norm();
            if g2 >= 1.0 {
                f64::INFINITY
            } else {
                (g2 - 4.0 * om / (1.0 + om).powi(2)).abs()
            }
        })
        .collect();
    let (i, v) = worst(&res);
    checks.push(CheckResult::at_most("spacelike", v, 1e-10, vec![loc(pts[i])]));
    Ok(VerificationReport::new(checks))
}

/// Solves `f(w) = z` by Newton's method from `w0`.
pub fn local_inverse(hf: &HeightFunction, z: ComplexVal, w0: ComplexVal) -> Result<ComplexVal> {
    let m = hf.map();
    let mut w = w0;
    for _ in 0..50 {
        let d = z - m.eval_f_unchecked(w);
        if d.norm() < 1e-13 * (1.0 + z.norm()) {
            return Ok(w);
        }
        let (hp, gp) = m.eval_hp_gp_unchecked(w);
        let det = hp.norm_sqr() - gp.norm_sqr();
        w += (hp.conj() * d - gp.conj() * d.conj()) / det;
        check_in_disk(w)?;
    }
    Err(Error::NoConvergence(format!("local inverse of f at {z}")))
}

fn fd_gradient(hf: &HeightFunction, w: ComplexVal, height: impl Fn(ComplexVal) -> f64, h: f64) -> Result<(f64, f64)> {
    let z = hf.map().eval_f_unchecked(w);
    let at = |dz: ComplexVal| -> Result<f64> { Ok(height(hf.eval(local_inverse(hf, z + dz, w)?)?)) };
    let diff = |e: ComplexVal| -> Result<f64> {
        Ok((-at(e * 2.0 * h)? + 8.0 * at(e * h)? - 8.0 * at(-e * h)? + at(-e * 2.0 * h)?) / (12.0 * h))
    };
    Ok((diff(ComplexVal::new(1.0, 0.0))?, diff(I)?))
}

/// Both representations of each unit normal at the given points: finite
/// differences of the graphs through local inversion of `f` against the
/// closed expressions in `√ω`.
pub fn check_normals(hf: &HeightFunction, samples: &[ComplexVal], tol: f64) -> Result<VerificationReport> {
    let diffs = samples
        .par_iter()
        .map(|&w| -> Result<(f64, f64)> {
            let span = hf.map().eval_f_unchecked(w).norm().max(1.0);
            let h = 1e-4 * span;
            let s = hf.signed_sqrt_omega(w)?;
            let (fx, fy) = fd_gradient(hf, w, |v| v.re, h)?;
            let wmin = (1.0 + fx * fx + fy * fy).sqrt();
            let nmin = [-fx / wmin, -fy / wmin, 1.0 / wmin];
            let (gx, gy) = fd_gradient(hf, w, |v| v.im, h)?;
            let wmax = (1.0 - gx * gx - gy * gy).sqrt();
            let nmax = [gx / wmax, gy / wmax, 1.0 / wmax];
            let dist = |a: [f64; 3], b: [f64; 3]| {
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
                d / b.iter().map(|x| x * x).sum::<f64>().sqrt()
            };
            Ok((dist(nmin, normal_min(s)), dist(nmax, normal_max(s))))
        })
        .collect::<Result<Vec<_>>>()?;
    let (a, b): (Vec<f64>, Vec<f64>) = diffs.into_iter().unzip();
    let (ia, va) = worst(&a);
    let (ib, vb) = worst(&b);
    Ok(VerificationReport::new(vec![
        CheckResult::at_most("normals.min", va, tol, vec![loc(samples[ia])]),
        CheckResult::at_most("normals.max", vb, tol, vec![loc(samples[ib])]),
    ]))
}

fn quad_tol() -> Tolerance {
    Tolerance::new(1e-13, 1e-12, 100_000).expect("valid tolerance")
}

/// `∫ −φ_y/W dx + φ_x/W dy` along the image of the segment `wa → wb`.
pub fn duality_integral(hf: &HeightFunction, p: &PolygonDomain, wa: ComplexVal, wb: ComplexVal) -> Result<f64> {
    let m = hf.map();
    let d = wb - wa;
    for k in 0..=16 {
        let z = m.eval_f_unchecked(wa + d * (k as f64 / 16.0));
        if !p.contains_closed(z, 1e-9) {
            return Err(Error::PathLeavesDomain(format!("image of {wa} -> {wb} exits at {z}")));
        }
    }
    let v = integrate_interval(
        |t| {
            let w = wa + d * t;
            let (hp, gp) = m.eval_hp_gp_unchecked(w);
            let dz = hp * d + (gp * d).conj();
            let s = hf.signed_sqrt_omega(w).unwrap_or(ComplexVal::new(f64::NAN, f64::NAN));
            let (px, py) = grad_phi(s);
            let wgt = (1.0 + px * px + py * py).sqrt();
            ComplexVal::new(-py / wgt * dz.re + px / wgt * dz.im, 0.0)
        },
        0.0,
        1.0,
        &quad_tol(),
    )?;
    Ok(v.re)
}

pub fn check_duality(hf: &HeightFunction, p: &PolygonDomain, pairs: &[(ComplexVal, ComplexVal)], tol: f64) -> Result<CheckResult> {
    let errs = pairs
        .par_iter()
        .map(|&(a, b)| -> Result<f64> {
            let lhs = hf.eval(b)?.im - hf.eval(a)?.im;
            let rhs = match duality_integral(hf, p, a, b) {
                Err(Error::PathLeavesDomain(_)) => {
                    let mid = (a + b) * 0.5;
                    duality_integral(hf, p, a, mid)? + duality_integral(hf, p, mid, b)?
                }
                other => other?,
            };
            Ok((lhs - rhs).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    let (i, v) = if errs.is_empty() { (0, 0.0) } else { worst(&errs) };
    let locs = pairs.get(i).map(|&(a, b)| vec![loc(a), loc(b)]).unwrap_or_default();
    Ok(CheckResult::at_most("duality", v, tol, locs))
}

/// `|ψ(z_a) − ψ(z_b)| − |z_a − z_b|` over chords whose image segment lies in
/// the domain; chords leaving it are skipped.
pub fn check_lipschitz(hf: &HeightFunction, p: &PolygonDomain, chords: &[(ComplexVal, ComplexVal)]) -> Result<CheckResult> {
    let m = hf.map();
    let vals = chords
        .par_iter()
        .map(|&(a, b)| -> Result<Option<f64>> {
            let (za, zb) = (m.eval_f(a)?, m.eval_f(b)?);
            let inside = (0..=64).all(|k| p.contains(za + (zb - za) * (k as f64 / 64.0)));
            if !inside {
                return Ok(None);
            }
            Ok(Some((hf.eval(a)?.im - hf.eval(b)?.im).abs() - (za - zb).norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    let used: Vec<(usize, f64)> = vals.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect();
    let (i, v) = used.iter().copied().fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let v = if used.is_empty() { 0.0 } else { v };
    let locs = chords.get(i).map(|&(a, b)| vec![loc(a), loc(b)]).unwrap_or_default();
    Ok(CheckResult::at_most("lipschitz", v, 1e-9, locs))
}

/// Limit of `g(1 − h)` as `h → 0`, by Richardson extrapolation over
/// `h = 2^{-k}`, `k = 8..=16`.
pub fn radial_limit(g: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let ks: Vec<i32> = (8..=16).collect();
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let mut row = vec![g(1.0 - 2f64.powi(-k))?];
        for j in 1..=i {
            let f = 2f64.powi(j as i32);
            let v = row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / (f - 1.0);
            row.push(v);
        }
        table.push(row);
    }
    Ok(*table.last().and_then(|r| r.last()).expect("non-empty table"))
}

/// Radial limit of `ψ = Im F` at the middle of arc `k`.
pub fn psi_on_arc(hf: &HeightFunction, k: usize) -> Result<f64> {
    let b = hf.map().boundary();
    let e = ComplexVal::from_polar(1.0, b.arc_mid(k));
    radial_limit(|r| Ok(hf.eval(e * r)?.im))
}

/// Boundary chords along signed edges: `|Δψ|` between the arcs on either
/// side of each edge against the edge length.
pub fn check_lipschitz_saturation(hf: &HeightFunction, p: &PolygonDomain) -> Result<CheckResult> {
    let jumps = edge_jumps(hf.map(), p)?;
    let n = hf.map().len();
    let mut worst_v = 0.0f64;
    let mut at = vec![];
    for (e, &k) in jumps.iter().enumerate() {
        let d = (psi_on_arc(hf, k)? - psi_on_arc(hf, k + n - 1)?).abs();
        let gap = (d - p.edge_length(e)).abs();
        if gap > worst_v || at.is_empty() {
            worst_v = worst_v.max(gap);
            at = vec![loc(hf.map().jump_point(k))];
        }
    }
    Ok(CheckResult::at_most("lipschitz.saturation", worst_v, 1e-3, at))
}

/// Measurements along the ray to the jump point of one edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerationProfile {
    pub edge: usize,
    pub sign: Sign,
    pub distances: Vec<f64>,
    /// `1 − σ ∂ψ/∂τ`.
    pub defects: Vec<f64>,
    /// `1 − |∇ψ|²`.
    pub metric: Vec<f64>,
    pub heights: Vec<f64>,
    pub exponent: f64,
}

/// Default radii for the degeneration rays: `1 − ε`, `ε` from `10^-1.5`
/// down to `10^-5`.
pub fn default_degeneration_radii() -> Vec<f64> {
    (0..15).map(|k| 1.0 - 10f64.powf(-1.5 - 3.5 * k as f64 / 14.0)).collect()
}

pub fn degeneration_profile(hf: &HeightFunction, p: &PolygonDomain, signs: &EdgeSigns, edge: usize, radii: &[f64]) -> Result<DegenerationProfile> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("radii must increase".into()));
    }
    let m = hf.map();
    let jumps = edge_jumps(m, p)?;
    let k = *jumps.get(edge).ok_or_else(|| Error::InvalidInput(format!("no edge {edge}")))?;
    let b = m.jump_point(k);
    let (z0, z1) = p.edge(edge);
    let len = (z1 - z0).norm();
    let tau = (z1 - z0) / len;
    let sigma = signs.get(edge);
    let mut prof = DegenerationProfile {
        edge,
        sign: sigma,
        distances: vec![],
        defects: vec![],
        metric: vec![],
        heights: vec![],
        exponent: f64::NAN,
    };
    for &r in radii {
        let w = b * r;
        let z = m.eval_f(w)?;
        let along = ((z - z0) * tau.conj()).re;
        let d = ((z - z0) * tau.conj()).im.abs();
        let s = hf.signed_sqrt_omega(w)?;
        let (px, py) = grad_psi(s);
        prof.distances.push(d);
        prof.defects.push(1.0 - sigma.value() * (px * tau.re + py * tau.im));
        prof.metric.push(1.0 - px * px - py * py);
        prof.heights.push(hf.eval(w)?.re);
        if r == radii[radii.len() - 1] && !(0.05 * len..=0.95 * len).contains(&along) {
            return Err(Error::RayMissesEdge { edge });
        }
    }
    let xs: Vec<f64> = prof.distances.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = prof.defects.iter().map(|d| d.abs().max(f64::MIN_POSITIVE).ln()).collect();
    prof.exponent = fit_slope(&xs, &ys)?.slope;
    Ok(prof)
}

/// Tame degeneration toward one edge: the fitted exponent, the metric
/// collapse and the monotone divergence of `φ` with the edge sign.
pub fn check_lightlike_degeneration(hf: &HeightFunction, p: &PolygonDomain, signs: &EdgeSigns, edge: usize, radii: &[f64]) -> Result<VerificationReport> {
    let prof = degeneration_profile(hf, p, signs, edge, radii)?;
    let b = hf.map().jump_point(edge_jumps(hf.map(), p)?[edge]);
    let at = vec![loc(b)];
    let sigma = prof.sign.value();
    let monotone = prof.heights.windows(2).all(|w| sigma * (w[1] - w[0]) > 0.0) && prof.heights.len() >= 10;
    let metric_last = *prof.metric.last().unwrap_or(&f64::NAN);
    let metric_decreasing = prof.metric.windows(2).all(|w| w[1] < w[0]);
    Ok(VerificationReport::new(vec![
        CheckResult::at_least(format!("lightlike.edge{edge}.exponent"), prof.exponent, 1.8, at.clone()),
        CheckResult {
            id: format!("lightlike.edge{edge}.divergence"),
            pass: monotone,
            measured: sigma * (prof.heights.last().unwrap_or(&f64::NAN) - prof.heights[0]),
            tolerance: 0.0,
            locations: at.clone(),
            detail: None,
        },
        CheckResult {
            id: format!("lightlike.edge{edge}.metric"),
            pass: metric_decreasing && metric_last < 1e-6,
            measured: metric_last,
            tolerance: 1e-6,
            locations: at,
            detail: None,
        },
    ]))
}

/// Corner sign law: at every convex corner the two edges carry different
/// signs, both as declared and as read off the height function, and the
/// two readings agree on every edge.
pub fn check_corner_signs(hf: &HeightFunction, p: &PolygonDomain, s: &EdgeSigns) -> Result<CheckResult> {
    let numeric = probe_signs(hf, &edge_probes(hf.map(), p)?)?;
    Ok(corner_sign_result(p, s, &numeric))
}

pub(crate) fn corner_sign_result(p: &PolygonDomain, s: &EdgeSigns, numeric: &[Sign]) -> CheckResult {
    let n = p.len();
    let angles = interior_angles(p);
    let mut bad = Vec::new();
    for v in 0..n {
        let prev = (v + n - 1) % n;
        let convex = angles[v] < PI - 1e-12;
        let declared_same = s.get(prev) == s.get(v);
        let numeric_same = numeric[prev] == numeric[v];
        if convex && (declared_same || numeric_same) {
            bad.push(p.vertex(v));
        }
        if numeric[v] != s.get(v) {
            let (a, b) = p.edge(v);
            bad.push((a + b) * 0.5);
        }
    }
    CheckResult {
        id: "corners".into(),
        pass: bad.is_empty(),
        measured: bad.len() as f64,
        tolerance: 0.0,
        locations: bad.into_iter().map(loc).collect(),
        detail: None,
    }
}

/// Slopes near one jump point along the ray `w = b(1 − ε e^{iθ})`.
pub fn check_log_asymptotics(hf: &HeightFunction, p: &PolygonDomain, signs: &EdgeSigns, jump: usize, ray_angle: f64) -> Result<VerificationReport> {
    let m = hf.map();
    let n = m.len();
    if jump >= n {
        return Err(Error::NotAJumpPoint(jump));
    }
    let jumps = edge_jumps(m, p)?;
    let edge = jumps.iter().position(|&k| k == jump).ok_or(Error::NotAJumpPoint(jump))?;
    let sigma = signs.get(edge).value();
    let b = m.jump_point(jump);
    let jv = m.jump(jump);
    let size = jv.norm();
    let c = -sigma;
    let eps: Vec<f64> = (0..9).map(|k| 10f64.powf(-3.0 - 0.5 * k as f64)).collect();
    let ray = |theta: f64, e: f64| b * (1.0 - e * ComplexVal::from_polar(1.0, theta));
    let alpha = |w: ComplexVal| (I * (1.0 - b.conj() * w)).arg();
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let mut re = vec![];
    let mut im = vec![];
    let mut fs = vec![];
    for &e in &eps {
        let w = ray(ray_angle, e);
        let v = hf.eval(w)?;
        re.push(v.re);
        im.push(v.im - c * size / PI * alpha(w));
        fs.push(m.eval_fstar(w)?);
    }
    let at = vec![loc(b)];
    let expect_re = c * size / PI;
    let re_slope = fit_slope(&xs, &re)?.slope;
    let im_drift = fit_slope(&xs, &im)?.slope.abs();
    // The same limit must be reached from a second direction.
    let psi2 = psi_on_arc(hf, jump)?;
    let spread = [-PI / 4.0, ray_angle, PI / 4.0]
        .iter()
        .map(|&th| -> Result<f64> {
            let w = ray(th, eps[eps.len() - 1]);
            Ok((hf.eval(w)?.im - c * size / PI * alpha(w) - psi2).abs())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    let fre = fit_slope(&xs, &fs.iter().map(|z| z.re).collect::<Vec<_>>())?.slope;
    let fim = fit_slope(&xs, &fs.iter().map(|z| z.im).collect::<Vec<_>>())?.slope;
    let expect_f = jv / PI;
    let f_err = (fre - expect_f.re).abs().max((fim - expect_f.im).abs()) / (size / PI);
    let jump_psi = psi2 - psi_on_arc(hf, jump + n - 1)?;
    let id = |s: &str| format!("asymptotics.jump{jump}.{s}");
    Ok(VerificationReport::new(vec![
        CheckResult::at_most(id("re"), (re_slope - expect_re).abs() / expect_re.abs(), 0.02, at.clone()),
        CheckResult::at_most(id("im"), im_drift.max(spread), 1e-3, at.clone()),
        CheckResult::at_most(id("fstar"), f_err, 0.02, at.clone()),
        CheckResult::at_most(id("tstar"), (jump_psi - sigma * size).abs(), 1e-3, at),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_star, StarVariant};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(count: usize, rmax: f64, seed: u64) -> Vec<ComplexVal> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| ComplexVal::from_polar(rmax * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI)))
            .collect()
    }

    #[test]
    fn min_at_origin_sits_over_the_centre() {
        let ex = build_star(4, 0.4, StarVariant::Alternating).unwrap();
        let s = eval_surface(SurfaceKind::Min, &ex.height, ComplexVal::new(0.0, 0.0)).unwrap();
        assert!(s.position[0].abs() < 1e-15 && s.position[1].abs() < 1e-15);
        assert_eq!(s.position[2], ex.height.base_value().re);
        assert!(eval_surface(SurfaceKind::Min, &ex.height, ComplexVal::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn normals_are_unit_in_their_metrics() {
        let ex = build_star(4, 0.4, StarVariant::Alternating).unwrap();
        for w in random_points(50, 0.95, 3) {
            let mn = eval_surface(SurfaceKind::Min, &ex.height, w).unwrap().normal;
            assert!((mn.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12 && mn[2] > 0.0);
            let mx = eval_surface(SurfaceKind::Max, &ex.height, w).unwrap().normal;
            assert!((mx[0] * mx[0] + mx[1] * mx[1] - mx[2] * mx[2] + 1.0).abs() < 1e-9 * mx[2] * mx[2]);
            let om = ex.height.signed_sqrt_omega(w).unwrap().norm_sqr();
            assert!((mx[2] - (1.0 + om) / (1.0 - om)).abs() < 1e-12 * mx[2]);
        }
    }

    #[test]
    fn gradient_of_phi_matches_local_inversion() {
        let ex = build_star(4, 0.4, StarVariant::Alternating).unwrap();
        for w in random_points(50, 0.9, 5) {
            let s = ex.height.signed_sqrt_omega(w).unwrap();
            let om = s.norm_sqr();
            let (fx, fy) = fd_gradient(&ex.height, w, |v| v.re, 1e-4).unwrap();
            let want = 4.0 * om / (1.0 - om).powi(2);
            assert!((fx * fx + fy * fy - want).abs() < 1e-6 * want.max(1.0));
        }
    }

    #[test]
    fn dual_of_conjugate_is_conjugate_of_dual() {
        let ex = build_star(4, 0.4, StarVariant::Alternating).unwrap();
        let w = ComplexVal::new(0.3, -0.2);
        for k in SurfaceKind::ALL {
            let a = eval_surface(k.conjugate().dual(), &ex.height, w).unwrap();
            let b = eval_surface(k.dual().conjugate(), &ex.height, w).unwrap();
            assert_eq!(a, b);
        }
        let x = eval_surface(SurfaceKind::Min.conjugate().dual(), &ex.height, w).unwrap();
        let fs = ex.map().eval_fstar(w).unwrap();
        assert_eq!(x.position, [fs.re, fs.im, -ex.height.eval(w).unwrap().re]);
    }

    #[test]
    fn duality_trivial_pair_and_orientation() {
        let ex = build_star(4, 0.4, StarVariant::Alternating).unwrap();
        let w = ComplexVal::new(0.2, 0.1);
        assert_eq!(duality_integral(&ex.height, &ex.polygon, w, w).unwrap(), 0.0);
        let a = ComplexVal::new(0.1, 0.3);
        let b = ComplexVal::new(-0.4, 0.2);
        let lhs = ex.height.eval(b).unwrap().im - ex.height.eval(a).unwrap().im;
        assert!((duality_integral(&ex.height, &ex.polygon, a, b).unwrap() - lhs).abs() < 1e-8);
        // The reversed parametrization w -> f(conj w) keeps φ with
        // F~(w) = conj F(conj w); its ψ~ = Im F~ integrates the relation with
        // the opposite sign.
        let reversed_psi = |w: ComplexVal| ex.height.eval(w.conj()).unwrap().conj().im;
        let along = duality_integral(&ex.height, &ex.polygon, a.conj(), b.conj()).unwrap();
        let a2 = a.conj();
        let b2 = b.conj();
        assert!((along + (reversed_psi(b2) - reversed_psi(a2))).abs() < 1e-8);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in SurfaceKind::ALL {
            assert_eq!(k.name().parse::<SurfaceKind>().unwrap(), k);
        }
        assert!("saddle".parse::<SurfaceKind>().is_err());
    }

    #[test]
    fn radial_limit_of_polynomial_is_exact() {
        let v = radial_limit(|r| Ok(3.0 + 2.0 * r - r * r)).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn corner_checker_flags_same_sign_convex_corner() {
        let p = PolygonDomain::new(vec![
            ComplexVal::new(0.0, 0.0),
            ComplexVal::new(1.0, 0.0),
            ComplexVal::new(1.0, 1.0),
            ComplexVal::new(0.0, 1.0),
        ])
        .unwrap();
        let s = EdgeSigns::parse("++--").unwrap();
        let r = corner_sign_result(&p, &s, s.as_slice());
        assert!(!r.pass);
        let ok = EdgeSigns::parse("+-+-").unwrap();
        assert!(corner_sign_result(&p, &ok, ok.as_slice()).pass);
    }
}
