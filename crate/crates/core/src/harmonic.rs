//! Harmonic maps of the disk given as Poisson integrals of step functions.
//!
//! With jump points `b_k = e^{iθ_k}` and jumps `J_k = v_k − v_{k−1}` the map
//! splits as `f = h + conj(g)` with
//!
//! ```text
//! h(w) = f(0) − (1/2πi) Σ J_k Log(1 − w·conj(b_k))
//! g(w) =      − (1/2πi) Σ conj(J_k) Log(1 − w·conj(b_k))
//! ```
//!
//! so that `h′(w) = (1/2πi) Σ J_k / (b_k − w)` and `g′` likewise with
//! conjugated jumps.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::domain::PolygonDomain;
use crate::error::{check_in_disk, Error, Result};
use crate::numerics::{continue_sqrt, ComplexVal, PathSpec, Tolerance};

const I: ComplexVal = ComplexVal::new(0.0, 1.0);

/// Wire form of one arc.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcDescriptor {
    pub start: f64,
    pub value: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub start: f64,
    pub value: ComplexVal,
}

#[derive(Serialize, Deserialize)]
struct StepWire {
    arcs: Vec<ArcDescriptor>,
}

/// Piecewise-constant boundary data on the unit circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepWire", into = "StepWire")]
pub struct StepBoundaryFunction {
    arcs: Vec<Arc>,
}

impl TryFrom<StepWire> for StepBoundaryFunction {
    type Error = Error;

    fn try_from(w: StepWire) -> Result<Self> {
        Self::from_descriptors(&w.arcs)
    }
}

impl From<StepBoundaryFunction> for StepWire {
    fn from(s: StepBoundaryFunction) -> Self {
        StepWire { arcs: s.descriptors() }
    }
}

impl StepBoundaryFunction {
    /// Arcs are given in cyclic order; start angles are reduced to `[0, 2π)`
    /// and must increase cyclically.
    pub fn new(arcs: Vec<Arc>) -> Result<Self> {
        if arcs.is_empty() {
            return Err(Error::InvalidInput("no arcs".into()));
        }
        let arcs: Vec<Arc> = arcs
            .into_iter()
            .map(|a| Arc { start: a.start.rem_euclid(TAU), value: a.value })
            .collect();
        if arcs.iter().any(|a| !a.start.is_finite() || !a.value.re.is_finite() || !a.value.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite arc data".into()));
        }
        let n = arcs.len();
        if n > 1 {
            let descents = (0..n).filter(|&k| arcs[(k + 1) % n].start <= arcs[k].start).count();
            if descents != 1 {
                return Err(Error::InvalidInput("arc start angles must increase cyclically".into()));
            }
            if (0..n).any(|k| arcs[k].value == arcs[(k + 1) % n].value) {
                return Err(Error::InvalidInput("consecutive arcs share a value".into()));
            }
        }
        Ok(Self { arcs })
    }

    pub fn from_descriptors(d: &[ArcDescriptor]) -> Result<Self> {
        Self::new(
            d.iter()
                .map(|a| Arc { start: a.start, value: ComplexVal::new(a.value[0], a.value[1]) })
                .collect(),
        )
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn descriptors(&self) -> Vec<ArcDescriptor> {
        self.arcs
            .iter()
            .map(|a| ArcDescriptor { start: a.start, value: [a.value.re, a.value.im] })
            .collect()
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn value(&self, k: usize) -> ComplexVal {
        self.arcs[k % self.len()].value
    }

    pub fn start(&self, k: usize) -> f64 {
        self.arcs[k % self.len()].start
    }

    /// Angular length of arc `k`.
    pub fn arc_length(&self, k: usize) -> f64 {
        let n = self.len();
        if n == 1 {
            return TAU;
        }
        let d = self.start(k + 1) - self.start(k);
        if d > 0.0 {
            d
        } else {
            d + TAU
        }
    }

    /// Midpoint angle of arc `k`.
    pub fn arc_mid(&self, k: usize) -> f64 {
        self.start(k) + 0.5 * self.arc_length(k)
    }

    /// Index of the arc containing angle `theta`.
    pub fn arc_at(&self, theta: f64) -> usize {
        let t = theta.rem_euclid(TAU);
        (0..self.len())
            .find(|&k| (t - self.start(k)).rem_euclid(TAU) < self.arc_length(k))
            .unwrap_or(0)
    }

    /// Value of the step function at angle `theta`.
    pub fn eval(&self, theta: f64) -> ComplexVal {
        self.value(self.arc_at(theta))
    }

    /// Whether every value is a vertex of `p`.
    pub fn values_are_vertices_of(&self, p: &PolygonDomain) -> bool {
        self.arcs.iter().all(|a| p.vertices().contains(&a.value))
    }
}

/// The Poisson integral `f = h + conj(g)` of a step function.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicMap {
    boundary: StepBoundaryFunction,
    points: Vec<ComplexVal>,
    jumps: Vec<ComplexVal>,
    f0: ComplexVal,
    univalent: Option<bool>,
}

impl HarmonicMap {
    pub fn new(boundary: StepBoundaryFunction) -> Self {
        let n = boundary.len();
        let points = (0..n).map(|k| ComplexVal::from_polar(1.0, boundary.start(k))).collect();
        let jumps = if n == 1 {
            vec![ComplexVal::new(0.0, 0.0)]
        } else {
            (0..n).map(|k| boundary.value(k) - boundary.value(k + n - 1)).collect()
        };
        let f0 = (0..n).map(|k| boundary.value(k) * boundary.arc_length(k)).sum::<ComplexVal>() / TAU;
        Self { boundary, points, jumps, f0, univalent: None }
    }

    /// Builds the map and records the sampled univalence verdict.
    pub fn with_univalence_check(boundary: StepBoundaryFunction) -> Self {
        let mut m = Self::new(boundary);
        m.univalent = Some(m.check_univalence(64, 256));
        m
    }

    pub fn boundary(&self) -> &StepBoundaryFunction {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Jump point `b_k`, the start of arc `k`.
    pub fn jump_point(&self, k: usize) -> ComplexVal {
        self.points[k % self.len()]
    }

    /// `J_k = v_k − v_{k−1}`.
    pub fn jump(&self, k: usize) -> ComplexVal {
        self.jumps[k % self.len()]
    }

    pub fn jump_points(&self) -> &[ComplexVal] {
        &self.points
    }

    pub fn jumps(&self) -> &[ComplexVal] {
        &self.jumps
    }

    pub fn center_value(&self) -> ComplexVal {
        self.f0
    }

    pub fn univalent(&self) -> Option<bool> {
        self.univalent
    }

    pub fn eval_f(&self, w: ComplexVal) -> Result<ComplexVal> {
        check_in_disk(w)?;
        Ok(self.eval_f_unchecked(w))
    }

    /// `f` on the closed disk minus the jump points.
    pub fn eval_f_unchecked(&self, w: ComplexVal) -> ComplexVal {
        let s: ComplexVal = self
            .points
            .iter()
            .zip(&self.jumps)
            .map(|(b, j)| j * (1.0 - w * b.conj()).arg())
            .sum();
        self.f0 - s / PI
    }

    pub fn eval_hp_gp(&self, w: ComplexVal) -> Result<(ComplexVal, ComplexVal)> {
        check_in_disk(w)?;
        Ok(self.eval_hp_gp_unchecked(w))
    }

    pub fn eval_hp_gp_unchecked(&self, w: ComplexVal) -> (ComplexVal, ComplexVal) {
        let mut hp = ComplexVal::new(0.0, 0.0);
        let mut gp = ComplexVal::new(0.0, 0.0);
        for (b, j) in self.points.iter().zip(&self.jumps) {
            let d = 1.0 / (b - w);
            hp += j * d;
            gp += j.conj() * d;
        }
        let k = 1.0 / (TAU * I);
        (hp * k, gp * k)
    }

    /// Holomorphic parts `(h, g)` normalized by `h(0) = f(0)`, `g(0) = 0`.
    pub fn eval_h_g(&self, w: ComplexVal) -> Result<(ComplexVal, ComplexVal)> {
        check_in_disk(w)?;
        Ok(self.eval_h_g_unchecked(w))
    }

    pub fn eval_h_g_unchecked(&self, w: ComplexVal) -> (ComplexVal, ComplexVal) {
        let mut sh = ComplexVal::new(0.0, 0.0);
        let mut sg = ComplexVal::new(0.0, 0.0);
        for (b, j) in self.points.iter().zip(&self.jumps) {
            let l = (1.0 - w * b.conj()).ln();
            sh += j * l;
            sg += j.conj() * l;
        }
        let k = 1.0 / (TAU * I);
        (self.f0 - sh * k, -sg * k)
    }

    /// The conjugate map `f* = −i(h − conj(g))`.
    pub fn eval_fstar(&self, w: ComplexVal) -> Result<ComplexVal> {
        let (h, g) = self.eval_h_g(w)?;
        Ok(conjugate_of(h, g))
    }

    pub fn eval_fstar_unchecked(&self, w: ComplexVal) -> ComplexVal {
        let (h, g) = self.eval_h_g_unchecked(w);
        conjugate_of(h, g)
    }

    /// Sampled univalence: positive Jacobian on an `n_r × n_a` polar grid and
    /// a simple, positively oriented image of the outermost ring.
    pub fn check_univalence(&self, n_r: usize, n_a: usize) -> bool {
        let r_max = 0.99;
        for i in 1..=n_r {
            let r = r_max * i as f64 / n_r as f64;
            for j in 0..n_a {
                let w = ComplexVal::from_polar(r, TAU * j as f64 / n_a as f64);
                let (hp, gp) = self.eval_hp_gp_unchecked(w);
                if !(hp.norm_sqr() - gp.norm_sqr() > 0.0) {
                    return false;
                }
            }
        }
        let ring: Vec<ComplexVal> = (0..n_a)
            .map(|j| self.eval_f_unchecked(ComplexVal::from_polar(r_max, TAU * j as f64 / n_a as f64)))
            .collect();
        PolygonDomain::new(ring).is_ok()
    }

    /// Map obtained by the parameter change `w ↦ conj(w)` followed by
    /// complex conjugation of values: `f̃(w) = conj(f(conj(w)))`.
    pub fn mirrored(&self) -> Result<Self> {
        let n = self.boundary.len();
        let arcs = (0..n)
            .rev()
            .map(|k| Arc { start: -(self.boundary.start(k) + self.boundary.arc_length(k)), value: self.boundary.value(k).conj() })
            .collect();
        Ok(Self::new(StepBoundaryFunction::new(arcs)?))
    }
}

/// `−i(h − conj(g))`, the conjugate of `h + conj(g)`.
pub fn conjugate_of(h: ComplexVal, g: ComplexVal) -> ComplexVal {
    -I * (h - g.conj())
}

/// Closed-form tag `sign · w^power`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialTag {
    pub negative: bool,
    pub power: u32,
}

impl MonomialTag {
    pub fn eval(&self, w: ComplexVal) -> ComplexVal {
        let v = w.powu(self.power);
        if self.negative {
            -v
        } else {
            v
        }
    }
}

impl std::fmt::Display for MonomialTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}w^{}", if self.negative { "-" } else { "" }, self.power)
    }
}

/// The analytic dilatation `ω = g′/h′`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dilatation {
    map: HarmonicMap,
    tag: Option<MonomialTag>,
}

/// Deterministic sample points with radii in `[0.1, 0.9]`.
fn tag_samples(count: usize) -> Vec<ComplexVal> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let r = 0.1 + 0.8 * (k as f64 + 0.5) / count as f64;
            ComplexVal::from_polar(r, golden * k as f64)
        })
        .collect()
}

const MAX_TAG_POWER: u32 = 64;

pub fn dilatation(m: &HarmonicMap) -> Result<Dilatation> {
    let d = Dilatation { map: m.clone(), tag: None };
    let samples = tag_samples(200);
    let values = samples.iter().map(|&w| d.eval(w)).collect::<Result<Vec<_>>>()?;
    let tag = (0..=MAX_TAG_POWER)
        .flat_map(|power| [false, true].map(|negative| MonomialTag { negative, power }))
        .find(|t| {
            samples
                .iter()
                .zip(&values)
                .all(|(&w, &v)| (v - t.eval(w)).norm() <= 1e-8 * t.eval(w).norm())
        });
    Ok(Dilatation { tag, ..d })
}

impl Dilatation {
    pub fn tag(&self) -> Option<MonomialTag> {
        self.tag
    }

    pub fn map(&self) -> &HarmonicMap {
        &self.map
    }

    pub fn eval(&self, w: ComplexVal) -> Result<ComplexVal> {
        check_in_disk(w)?;
        self.eval_unchecked(w)
    }

    pub fn eval_unchecked(&self, w: ComplexVal) -> Result<ComplexVal> {
        let (hp, gp) = self.map.eval_hp_gp_unchecked(w);
        let scale: f64 = self.map.jumps.iter().map(|j| j.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
        if hp.norm() <= 1e-14 * scale {
            return Err(Error::IndeterminateQuotient { re: w.re, im: w.im });
        }
        Ok(gp / hp)
    }
}

/// Evaluator for a single-valued branch of `√ω`.
#[derive(Clone, Debug, PartialEq)]
pub enum SqrtDilatation {
    /// `coef · w^half_power`.
    Monomial { coef: ComplexVal, half_power: u32 },
    /// `w^(order/2) · s(w)` with `s` continued radially from `s(0) = seed`.
    Continued { dilatation: Dilatation, order: u32, seed: ComplexVal },
}

/// Number of samples on a loop when counting zeros by winding number.
const LOOP_SAMPLES: usize = 1024;

fn winding(values: &[ComplexVal]) -> f64 {
    let n = values.len();
    (0..n).map(|k| (values[(k + 1) % n] / values[k]).arg()).sum::<f64>() / TAU
}

pub fn sqrt_dilatation(d: &Dilatation) -> Result<SqrtDilatation> {
    if let Some(t) = d.tag {
        if t.power % 2 == 1 {
            return Err(Error::NoGlobalBranch(format!("odd power in {t}")));
        }
        let coef = if t.negative { I } else { ComplexVal::new(1.0, 0.0) };
        return Ok(SqrtDilatation::Monomial { coef, half_power: t.power / 2 });
    }
    let circle = |r: f64| -> Result<Vec<ComplexVal>> {
        (0..LOOP_SAMPLES)
            .map(|k| d.eval(ComplexVal::from_polar(r, TAU * k as f64 / LOOP_SAMPLES as f64)))
            .collect()
    };
    let outer = winding(&circle(0.95)?).round() as i64;
    if outer % 2 != 0 {
        return Err(Error::NoGlobalBranch(format!("ω winds {outer} times on |w| = 0.95")));
    }
    let rho = 0.05;
    let small = circle(rho)?;
    let order = winding(&small).round();
    if order < 0.0 || order as i64 % 2 != 0 {
        return Err(Error::NoGlobalBranch(format!("zero of order {order} at the origin")));
    }
    let order = order as u32;
    let mean = (0..LOOP_SAMPLES)
        .map(|k| {
            let w = ComplexVal::from_polar(rho, TAU * k as f64 / LOOP_SAMPLES as f64);
            small[k] / w.powu(order)
        })
        .sum::<ComplexVal>()
        / LOOP_SAMPLES as f64;
    Ok(SqrtDilatation::Continued { dilatation: d.clone(), order, seed: mean.sqrt() })
}

impl SqrtDilatation {
    pub fn eval(&self, w: ComplexVal) -> Result<ComplexVal> {
        check_in_disk(w)?;
        self.eval_unchecked(w)
    }

    /// Evaluation that also accepts points on the unit circle.
    pub fn eval_unchecked(&self, w: ComplexVal) -> Result<ComplexVal> {
        match self {
            SqrtDilatation::Monomial { coef, half_power } => Ok(coef * w.powu(*half_power)),
            SqrtDilatation::Continued { dilatation, order, seed } => {
                let steps = 64 + (256.0 * w.norm()) as usize;
                let values = (0..=steps)
                    .map(|k| {
                        let z = w * (k as f64 / steps as f64);
                        if k == 0 {
                            Ok(seed * seed)
                        } else {
                            dilatation.eval_unchecked(z).map(|v| v / z.powu(*order))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                let s = continue_sqrt(&values, *seed, &Tolerance::default())?;
                Ok(w.powu(order / 2) * s[steps])
            }
        }
    }

    /// Value at the end of `path`, continued along it.
    pub fn eval_along(&self, path: &PathSpec) -> Result<ComplexVal> {
        match self {
            SqrtDilatation::Monomial { .. } => self.eval(path.end()),
            SqrtDilatation::Continued { order, .. } if *order > 0 => self.eval(path.end()),
            SqrtDilatation::Continued { dilatation, .. } => {
                let mut prev = path.start();
                let mut s = self.eval(prev)?;
                for &next in &path.waypoints()[1..] {
                    let steps = 64;
                    let mut values = vec![s * s];
                    for k in 1..=steps {
                        values.push(dilatation.eval(prev + (next - prev) * (k as f64 / steps as f64))?);
                    }
                    s = *continue_sqrt(&values, s, &Tolerance::default())?.last().expect("non-empty");
                    prev = next;
                }
                Ok(s)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{complex_derivative_fd, integrate_interval};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> ComplexVal {
        ComplexVal::new(re, im)
    }

    fn two_arc() -> HarmonicMap {
        // Value 1 on the right half circle, −1 on the left, jumps at ±i.
        HarmonicMap::new(
            StepBoundaryFunction::new(vec![
                Arc { start: PI / 2.0, value: c(-1.0, 0.0) },
                Arc { start: 3.0 * PI / 2.0, value: c(1.0, 0.0) },
            ])
            .unwrap(),
        )
    }

    fn square_map() -> HarmonicMap {
        let v = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        HarmonicMap::new(
            StepBoundaryFunction::new(
                (0..4).map(|k| Arc { start: PI / 4.0 + PI / 2.0 * k as f64 - PI / 2.0, value: v[k] }).collect(),
            )
            .unwrap(),
        )
    }

    /// Holomorphic parts by quadrature of the Schwarz kernel on each arc.
    fn quad_h_g(m: &HarmonicMap, w: ComplexVal) -> (ComplexVal, ComplexVal) {
        let tol = Tolerance::new(1e-14, 1e-13, 100_000).unwrap();
        let b = m.boundary();
        let mut h = c(0.0, 0.0);
        let mut g = c(0.0, 0.0);
        for k in 0..b.len() {
            let a0 = b.start(k);
            let a1 = a0 + b.arc_length(k);
            let v = b.value(k);
            h += integrate_interval(|t| { let z = ComplexVal::from_polar(1.0, t); v * z / (z - w) }, a0, a1, &tol).unwrap();
            g += integrate_interval(|t| { let z = ComplexVal::from_polar(1.0, t); v.conj() * (z / (z - w) - 1.0) }, a0, a1, &tol).unwrap();
        }
        (h / TAU, g / TAU)
    }

    fn quad_f(m: &HarmonicMap, w: ComplexVal) -> ComplexVal {
        let (h, g) = quad_h_g(m, w);
        h + g.conj()
    }

    #[test]
    fn constant_boundary() {
        let m = HarmonicMap::new(StepBoundaryFunction::new(vec![Arc { start: 1.0, value: c(0.3, -2.0) }]).unwrap());
        for w in [c(0.0, 0.0), c(0.5, 0.3), c(-0.9, 0.1)] {
            assert_relative_eq!(m.eval_f(w).unwrap().re, 0.3, epsilon = 1e-15);
            assert_relative_eq!(m.eval_f(w).unwrap().im, -2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn center_is_arc_average() {
        let m = square_map();
        assert!(m.eval_f(c(0.0, 0.0)).unwrap().norm() < 1e-15);
        let m = HarmonicMap::new(
            StepBoundaryFunction::new(vec![
                Arc { start: 0.0, value: c(1.0, 0.0) },
                Arc { start: 1.0, value: c(0.0, 2.0) },
                Arc { start: 4.0, value: c(-1.0, -1.0) },
            ])
            .unwrap(),
        );
        let expect = (c(1.0, 0.0) * 1.0 + c(0.0, 2.0) * 3.0 + c(-1.0, -1.0) * (TAU - 4.0)) / TAU;
        assert!((m.eval_f(c(0.0, 0.0)).unwrap() - expect).norm() < 1e-12);
    }

    #[test]
    fn closed_form_matches_poisson_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in [two_arc(), square_map()] {
            for _ in 0..20 {
                let w = ComplexVal::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..TAU));
                assert!((m.eval_f(w).unwrap() - quad_f(&m, w)).norm() < 1e-10);
                let (h, g) = m.eval_h_g(w).unwrap();
                let (hq, gq) = quad_h_g(&m, w);
                assert!((h - hq).norm() < 1e-10);
                assert!((g - gq).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn derivatives_match_quadrature_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = square_map();
        for _ in 0..100 {
            let w = ComplexVal::from_polar(rng.gen_range(0.0..0.9), rng.gen_range(0.0..TAU));
            let (hp, gp) = m.eval_hp_gp(w).unwrap();
            let hfd = complex_derivative_fd(|z| quad_h_g(&m, z).0, w, 1e-4);
            let gfd = complex_derivative_fd(|z| quad_h_g(&m, z).1, w, 1e-4);
            assert!((hp - hfd).norm() <= 1e-6 * hp.norm().max(1.0));
            assert!((gp - gfd).norm() <= 1e-6 * gp.norm().max(1.0));
        }
    }

    #[test]
    fn two_arc_derivative() {
        let m = two_arc();
        let w = c(0.2, -0.3);
        let (hp, _) = m.eval_hp_gp(w).unwrap();
        // Jump −2 at i, +2 at −i.
        let expect = (c(-2.0, 0.0) / (I - w) + c(2.0, 0.0) / (-I - w)) / (TAU * I);
        assert!((hp - expect).norm() < 1e-15);
        let d = dilatation(&m).unwrap();
        // Real jumps give ω ≡ 1 identically.
        let near = d.eval(ComplexVal::from_polar(0.999, 0.3)).unwrap();
        assert!((near.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outside_disk() {
        let m = square_map();
        assert!(matches!(m.eval_f(c(1.0, 0.0)), Err(Error::OutsideDisk { .. })));
        assert!(m.eval_hp_gp(c(0.0, -1.5)).is_err());
    }

    #[test]
    fn conjugate_closed_forms() {
        let w = c(0.3, -0.4);
        assert_eq!(conjugate_of(w, c(0.0, 0.0)), -I * w);
        // f = w + conj(w)/2: h = w, g = w/2.
        let fs = conjugate_of(w, w / 2.0);
        assert!((fs - (-I * (w - w.conj() / 2.0))).norm() < 1e-16);
        assert!((fs - c(1.5 * w.im, -0.5 * w.re)).norm() < 1e-16);
    }

    #[test]
    fn conjugate_satisfies_cauchy_riemann() {
        let m = square_map();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let hstep = 1e-5;
        for _ in 0..20 {
            let w = ComplexVal::from_polar(rng.gen_range(0.0..0.8), rng.gen_range(0.0..TAU));
            let d = |f: &dyn Fn(ComplexVal) -> ComplexVal, dir: ComplexVal| {
                (f(w + dir * hstep) - f(w - dir * hstep)) / (2.0 * hstep)
            };
            let f = |z| m.eval_f(z).unwrap();
            let fs = |z| m.eval_fstar(z).unwrap();
            let (fu, fv) = (d(&f, c(1.0, 0.0)), d(&f, I));
            let (su, sv) = (d(&fs, c(1.0, 0.0)), d(&fs, I));
            // Re f* is conjugate to Re f, Im f* to Im f.
            assert!((su.re + fv.re).abs() < 1e-5 * fu.norm().max(1.0));
            assert!((sv.re - fu.re).abs() < 1e-5 * fu.norm().max(1.0));
            assert!((su.im + fv.im).abs() < 1e-5 * fu.norm().max(1.0));
            assert!((sv.im - fu.im).abs() < 1e-5 * fu.norm().max(1.0));
        }
    }

    #[test]
    fn square_is_univalent() {
        assert!(square_map().check_univalence(16, 64));
    }

    #[test]
    fn sqrt_tags() {
        let sq = |negative, power| {
            let d = Dilatation { map: square_map(), tag: Some(MonomialTag { negative, power }) };
            sqrt_dilatation(&d)
        };
        let w = c(0.3, 0.2);
        assert!((sq(false, 6).unwrap().eval(w).unwrap() - w.powu(3)).norm() < 1e-16);
        assert!((sq(true, 2).unwrap().eval(w).unwrap() - I * w).norm() < 1e-16);
        assert!(matches!(sq(false, 5), Err(Error::NoGlobalBranch(_))));
    }

    #[test]
    fn square_dilatation_tag() {
        // Scherk square: ω = −w² up to the labelling of the arcs.
        let d = dilatation(&square_map()).unwrap();
        let t = d.tag().unwrap();
        assert_eq!(t.power, 2);
        let s = sqrt_dilatation(&d).unwrap();
        let w = c(-0.4, 0.5);
        assert!((s.eval(w).unwrap().powu(2) - d.eval(w).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let s = StepBoundaryFunction::from_json(r#"{"arcs":[{"start":0.5,"value":[1,0]},{"start":3.0,"value":[0,1]}]}"#)
            .unwrap();
        assert_eq!(s.len(), 2);
        let back = serde_json::to_string(&s).unwrap();
        assert_eq!(StepBoundaryFunction::from_json(&back).unwrap(), s);
        assert!(StepBoundaryFunction::from_json(r#"{"arcs":[{"start":0.5,"value":[1,0]},{"start":3.0,"value":[1,0]}]}"#).is_err());
    }

    #[test]
    fn mirrored_map_conjugates() {
        let m = square_map().mirrored().unwrap();
        let o = square_map();
        let w = c(0.2, 0.45);
        assert!((m.eval_f(w).unwrap() - o.eval_f(w.conj()).unwrap().conj()).norm() < 1e-14);
    }
}
