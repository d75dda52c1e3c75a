//! Extension of the surfaces across a constant arc of the boundary data.
//!
//! The upper half disk is sent onto the disk by
//! `Ψ(w) = q·(Z − a)/(Z − ā)` with `Z = ((1 + w)/(1 − w))²`, so that the
//! diameter `(−1, 1)` lands on the chosen arc, `Ψ(−1) = p` and `Ψ(1) = q`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{interior_angles, EdgeSigns, PolygonDomain, Sign};
use crate::error::{Error, Result};
use crate::harmonic::conjugate_of;
use crate::height::HeightFunction;
use crate::numerics::ComplexVal;
use crate::surfaces::{position, CheckResult, SurfaceKind, VerificationReport};

const ONE: ComplexVal = ComplexVal::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// The arc runs counterclockwise from `w1` to `w2`.
    CounterClockwise,
    Clockwise,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfDiskMap {
    /// `Ψ(−1)`.
    pub p: ComplexVal,
    /// `Ψ(1)`.
    pub q: ComplexVal,
    a: ComplexVal,
    /// Counterclockwise start and end of the arc.
    arc: (ComplexVal, ComplexVal),
}

/// Whether `z` lies on the counterclockwise arc from `start` to `end`.
pub fn on_ccw_arc(start: ComplexVal, end: ComplexVal, z: ComplexVal) -> bool {
    let span = (end / start).arg().rem_euclid(TAU);
    let at = (z / start).arg().rem_euclid(TAU);
    at <= span
}

pub fn build_half_disk_map(w1: ComplexVal, w2: ComplexVal, side: Orientation) -> Result<HalfDiskMap> {
    if !((w1.norm() - 1.0).abs() < 1e-12 && (w2.norm() - 1.0).abs() < 1e-12) {
        return Err(Error::InvalidInput("arc endpoints must lie on the unit circle".into()));
    }
    if (w1 - w2).norm() < 1e-14 {
        return Err(Error::DegenerateArc);
    }
    let arc = match side {
        Orientation::CounterClockwise => (w1, w2),
        Orientation::Clockwise => (w2, w1),
    };
    let make = |p: ComplexVal, q: ComplexVal| {
        let phi = ((p / q).arg() / 2.0).rem_euclid(PI);
        HalfDiskMap { p, q, a: ComplexVal::from_polar(1.0, phi), arc }
    };
    let m = make(arc.0, arc.1);
    if on_ccw_arc(arc.0, arc.1, m.eval(ComplexVal::new(0.0, 0.0))) {
        Ok(m)
    } else {
        Ok(make(arc.1, arc.0))
    }
}

impl HalfDiskMap {
    fn z_of(w: ComplexVal) -> ComplexVal {
        let zeta = (ONE + w) / (ONE - w);
        zeta * zeta
    }

    pub fn eval(&self, w: ComplexVal) -> ComplexVal {
        let z = Self::z_of(w);
        self.q * (z - self.a) / (z - self.a.conj())
    }

    pub fn derivative(&self, w: ComplexVal) -> ComplexVal {
        let zeta = (ONE + w) / (ONE - w);
        let dz = 2.0 * zeta * 2.0 / ((ONE - w) * (ONE - w));
        let z = zeta * zeta;
        let d = z - self.a.conj();
        self.q * (self.a - self.a.conj()) / (d * d) * dz
    }

    pub fn arc(&self) -> (ComplexVal, ComplexVal) {
        self.arc
    }

    pub fn on_arc(&self, z: ComplexVal) -> bool {
        on_ccw_arc(self.arc.0, self.arc.1, z)
    }
}

/// Surfaces over the whole disk obtained by reflecting across the arc that
/// carries one vertex.
#[derive(Clone, Debug)]
pub struct ExtendedSurface {
    hf: HeightFunction,
    psi: HalfDiskMap,
    vertex: usize,
    z0: ComplexVal,
    t0: f64,
}

/// The half-disk map onto the arc whose boundary value is vertex `vertex`.
pub fn half_disk_map_for_vertex(hf: &HeightFunction, p: &PolygonDomain, vertex: usize) -> Result<HalfDiskMap> {
    let k = arc_of_vertex(hf, p, vertex)?;
    let m = hf.map();
    build_half_disk_map(m.jump_point(k), m.jump_point((k + 1) % m.len()), Orientation::CounterClockwise)
}

fn arc_of_vertex(hf: &HeightFunction, p: &PolygonDomain, vertex: usize) -> Result<usize> {
    if vertex >= p.len() {
        return Err(Error::InvalidInput(format!("no vertex {vertex}")));
    }
    let b = hf.map().boundary();
    (0..b.len())
        .find(|&k| b.value(k) == p.vertex(vertex))
        .ok_or_else(|| Error::InvalidInput(format!("vertex {vertex} is not a boundary value")))
}

/// A straight corner between two edges of equal sign cannot be reflected
/// across.
pub fn reflection_hypothesis(p: &PolygonDomain, signs: &EdgeSigns, vertex: usize) -> Result<()> {
    let n = p.len();
    if vertex >= n {
        return Err(Error::InvalidInput(format!("no vertex {vertex}")));
    }
    let angle = interior_angles(p)[vertex];
    let prev = (vertex + n - 1) % n;
    if (angle - PI).abs() < 1e-12 && signs.get(prev) == signs.get(vertex) {
        return Err(Error::HypothesisViolated(format!("straight corner {vertex} between edges of equal sign")));
    }
    Ok(())
}

pub fn extend(hf: &HeightFunction, p: &PolygonDomain, signs: &EdgeSigns, vertex: usize, psi: HalfDiskMap) -> Result<ExtendedSurface> {
    reflection_hypothesis(p, signs, vertex)?;
    let k = arc_of_vertex(hf, p, vertex)?;
    let mid = psi.eval(ComplexVal::new(0.0, 0.0));
    let b = hf.map().boundary();
    if b.arc_at(mid.arg()) != k {
        return Err(Error::InvalidInput(format!("the reflection arc does not carry vertex {vertex}")));
    }
    let t0 = hf.eval_unchecked(mid)?.im;
    Ok(ExtendedSurface { hf: hf.clone(), psi, vertex, z0: p.vertex(vertex), t0 })
}

impl ExtendedSurface {
    pub fn psi(&self) -> &HalfDiskMap {
        &self.psi
    }

    pub fn vertex(&self) -> usize {
        self.vertex
    }

    pub fn corner(&self) -> ComplexVal {
        self.z0
    }

    fn check(w: ComplexVal) -> Result<()> {
        if w.norm() < 1.0 && w.re.is_finite() && w.im.is_finite() {
            Ok(())
        } else {
            Err(Error::OutsideDisk { re: w.re, im: w.im })
        }
    }

    fn upper(&self, w: ComplexVal) -> Result<(ComplexVal, ComplexVal, ComplexVal)> {
        let z = self.psi.eval(w);
        let m = self.hf.map();
        let (h, g) = m.eval_h_g_unchecked(z);
        let big_f = self.hf.eval_unchecked(z)? - ComplexVal::new(0.0, self.t0);
        Ok((m.eval_f_unchecked(z) - self.z0, conjugate_of(h, g), big_f))
    }

    /// `(f̃, f̃*, F̃)` at `w`.
    pub fn eval(&self, w: ComplexVal) -> Result<(ComplexVal, ComplexVal, ComplexVal)> {
        Self::check(w)?;
        if w.im >= 0.0 {
            self.upper(w)
        } else {
            let (f, fs, big_f) = self.upper(w.conj())?;
            Ok((-f, fs, big_f.conj()))
        }
    }

    pub fn position(&self, kind: SurfaceKind, w: ComplexVal) -> Result<[f64; 3]> {
        let (f, fs, big_f) = self.eval(w)?;
        Ok(position(kind, f, fs, big_f))
    }

    /// `dF̃/du` on the axis, real there.
    pub fn axis_slope(&self, u: f64) -> Result<f64> {
        let w = ComplexVal::new(u, 0.0);
        let z = self.psi.eval(w);
        Ok((self.hf.derivative_unchecked(z)? * self.psi.derivative(w)).re)
    }

    /// `|(h∘Ψ)′|` on the axis.
    pub fn axis_hprime(&self, u: f64) -> f64 {
        let w = ComplexVal::new(u, 0.0);
        let (hp, _) = self.hf.map().eval_hp_gp_unchecked(self.psi.eval(w));
        (hp * self.psi.derivative(w)).norm()
    }
}

fn sigma(x: [f64; 3]) -> [f64; 3] {
    [-x[0], -x[1], x[2]]
}

fn tau(x: [f64; 3]) -> [f64; 3] {
    [-x[0], -x[1], -x[2]]
}

fn rho(x: [f64; 3]) -> [f64; 3] {
    [x[0], x[1], -x[2]]
}

fn gap(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn loc(w: ComplexVal) -> [f64; 2] {
    [w.re, w.im]
}

/// Mirror-pair symmetry residuals, one check per identity.
pub fn check_symmetries(ext: &ExtendedSurface, pairs: usize, seed: u64, tol: f64) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ws: Vec<ComplexVal> = (0..pairs)
        .map(|_| ComplexVal::from_polar(0.95 * rng.gen::<f64>().sqrt(), rng.gen_range(0.02..PI - 0.02)))
        .collect();
    let cases: [(&str, SurfaceKind, fn([f64; 3]) -> [f64; 3]); 4] = [
        ("symmetry.sigma", SurfaceKind::Min, sigma),
        ("symmetry.tau", SurfaceKind::Max, tau),
        ("symmetry.rho", SurfaceKind::MinConj, rho),
        ("symmetry.fold", SurfaceKind::MaxConj, |x| x),
    ];
    let mut checks = Vec::new();
    for (id, kind, iso) in cases {
        let mut worst = (0.0f64, ComplexVal::new(0.0, 0.0));
        for &w in &ws {
            let a = ext.position(kind, w)?;
            let b = ext.position(kind, w.conj())?;
            let r = gap(b, iso(a)) / (1.0 + gap(a, [0.0; 3]));
            if r > worst.0 {
                worst = (r, w);
            }
        }
        checks.push(CheckResult::at_most(id, worst.0, tol, vec![loc(worst.1)]));
    }
    // The extension must continue analytically across the axis: mean values
    // over circles that straddle it reproduce the centre values.
    let nodes = 128;
    let mut worst_h = (0.0f64, ComplexVal::new(0.0, 0.0));
    for j in 0..7 {
        let c = ComplexVal::new(-0.45 + 0.15 * j as f64, 0.0);
        let (f0, fs0, big0) = ext.eval(c)?;
        let mut acc = (ComplexVal::new(0.0, 0.0), ComplexVal::new(0.0, 0.0), ComplexVal::new(0.0, 0.0));
        for k in 0..nodes {
            let w = c + ComplexVal::from_polar(0.25, TAU * (k as f64 + 0.5) / nodes as f64);
            let (f, fs, big) = ext.eval(w)?;
            acc.0 += f;
            acc.1 += fs;
            acc.2 += big;
        }
        let scale = 1.0 + big0.norm() + f0.norm() + fs0.norm();
        let r = [(acc.0 / nodes as f64 - f0).norm(), (acc.1 / nodes as f64 - fs0).norm(), (acc.2 / nodes as f64 - big0).norm()]
            .into_iter()
            .fold(0.0, f64::max)
            / scale;
        if r > worst_h.0 {
            worst_h = (r, c);
        }
    }
    checks.push(CheckResult::at_most("symmetry.continuation", worst_h.0, tol, vec![loc(worst_h.1)]));
    Ok(VerificationReport::new(checks))
}

/// What the axis `(−1, 1)` is mapped to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisFeatures {
    /// `max |f̃(u)|`: the minimal extension contains a vertical segment.
    pub min_vertical_offset: f64,
    /// Diameter of the maximal axis image.
    pub max_point_spread: f64,
    /// `max |t̃*(u)|` for the conjugate minimal surface.
    pub min_conj_plane: f64,
    /// Worst relative null-curve defect of the conjugate maximal axis image.
    pub null_defect: f64,
    /// Zeros of `(h∘Ψ)′` on the axis.
    pub branch_points: Vec<f64>,
    /// `|(h∘Ψ)′|` at each branch point.
    pub branch_residuals: Vec<f64>,
    /// Maximal intervals on which `Re F̃` is monotone, with its direction.
    pub monotone: Vec<(f64, f64, Sign)>,
}

pub fn axis_features(ext: &ExtendedSurface, n_samples: usize) -> Result<AxisFeatures> {
    let n = n_samples.max(16);
    let us: Vec<f64> = (0..n).map(|k| -0.95 + 1.9 * k as f64 / (n - 1) as f64).collect();
    let mut min_vertical: f64 = 0.0;
    let mut plane: f64 = 0.0;
    let mut spread: f64 = 0.0;
    let first = ext.position(SurfaceKind::Max, ComplexVal::new(us[0], 0.0))?;
    for &u in &us {
        let w = ComplexVal::new(u, 0.0);
        let (f, _, big_f) = ext.eval(w)?;
        min_vertical = min_vertical.max(f.norm());
        plane = plane.max(big_f.im.abs());
        spread = spread.max(gap(ext.position(SurfaceKind::Max, w)?, first));
    }

    let slopes = us.iter().map(|&u| ext.axis_slope(u)).collect::<Result<Vec<_>>>()?;
    let mut branch_points = Vec::new();
    let mut monotone = Vec::new();
    let mut start = us[0];
    for k in 1..n {
        if slopes[k - 1] == 0.0 || slopes[k - 1].signum() != slopes[k].signum() {
            let (mut lo, mut hi) = (us[k - 1], us[k]);
            let s_lo = slopes[k - 1].signum();
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if ext.axis_slope(mid)?.signum() == s_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            monotone.push((start, root, Sign::from_value(slopes[k - 1])));
            start = root;
            branch_points.push(root);
        }
    }
    monotone.push((start, us[n - 1], Sign::from_value(slopes[n - 1])));
    let branch_residuals = branch_points.iter().map(|&u| ext.axis_hprime(u)).collect();

    let h = 1e-5;
    let mut null_defect: f64 = 0.0;
    let mut samples = Vec::new();
    for &u in &us {
        let d = |kind: SurfaceKind| -> Result<[f64; 3]> {
            let a = ext.position(kind, ComplexVal::new(u + h, 0.0))?;
            let b = ext.position(kind, ComplexVal::new(u - h, 0.0))?;
            Ok([(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h), (a[2] - b[2]) / (2.0 * h)])
        };
        let v = d(SurfaceKind::MaxConj)?;
        samples.push((v[0] * v[0] + v[1] * v[1], v[2] * v[2]));
    }
    let top = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    for (planar, vertical) in samples {
        if planar > 1e-6 * top {
            null_defect = null_defect.max((planar - vertical).abs() / planar);
        }
    }
    Ok(AxisFeatures {
        min_vertical_offset: min_vertical,
        max_point_spread: spread,
        min_conj_plane: plane,
        null_defect,
        branch_points,
        branch_residuals,
        monotone,
    })
}

impl AxisFeatures {
    pub fn checks(&self) -> VerificationReport {
        let bp = self.branch_residuals.iter().copied().fold(0.0, f64::max);
        VerificationReport::new(vec![
            CheckResult::at_most("axis.min-vertical", self.min_vertical_offset, 1e-9, vec![]),
            CheckResult::at_most("axis.max-point", self.max_point_spread, 1e-9, vec![]),
            CheckResult::at_most("axis.min-conj-plane", self.min_conj_plane, 1e-9, vec![]),
            CheckResult::at_most("axis.max-conj-null", self.null_defect, 1e-6, vec![]),
            CheckResult::at_most(
                "axis.branch-points",
                bp,
                1e-8,
                self.branch_points.iter().map(|&u| [u, 0.0]).collect(),
            ),
        ])
    }
}
