//! The holomorphic height function `F` with `F′ = 2i·√(h′g′) = 2i·√ω·h′`.

use std::cell::RefCell;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::{EdgeSigns, PolygonDomain, Sign};
use crate::error::{check_in_disk, Error, Result};
use crate::harmonic::{dilatation, sqrt_dilatation, HarmonicMap, SqrtDilatation};
use crate::numerics::{integrate_segment, ComplexVal, PathSpec, Tolerance};

const I: ComplexVal = ComplexVal::new(0.0, 1.0);

/// Printed closed forms for the star examples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ClosedForm {
    /// `K·log((wⁿ − e^{ipπ})/(wⁿ − e^{−ipπ}))`, `K = sin(π/n)·csc((n−1)pπ/n)/π`.
    Alternating { n: u32, p: f64 },
    /// `K·log(Π (u − b)/(u + b))` over `b = e^{±iqπ/2}`, `u = w^{n/2}`,
    /// `K = sin(π/n)·sec((n−2)qπ/2n)/π`.
    ConvexFlip { n: u32, q: f64 },
}

impl ClosedForm {
    fn constant(&self) -> f64 {
        match *self {
            ClosedForm::Alternating { n, p } => {
                let n = n as f64;
                (PI / n).sin() / ((n - 1.0) / n * p * PI).sin() / PI
            }
            ClosedForm::ConvexFlip { n, q } => {
                let n = n as f64;
                (PI / n).sin() / ((n - 2.0) / (2.0 * n) * q * PI).cos() / PI
            }
        }
    }

    /// The formula with logarithms split into principal branches of
    /// `Log(1 − ·)`, which are continuous on the closed disk minus the
    /// singular points.
    pub fn eval(&self, w: ComplexVal) -> ComplexVal {
        let k = self.constant();
        let l = |x: ComplexVal| (1.0 - x).ln();
        match *self {
            ClosedForm::Alternating { n, p } => {
                let u = w.powu(n);
                let e = ComplexVal::from_polar(1.0, p * PI);
                k * (2.0 * I * p * PI + l(u * e.conj()) - l(u * e))
            }
            ClosedForm::ConvexFlip { n, q } => {
                let u = w.powu(n / 2);
                let b = ComplexVal::from_polar(1.0, q * PI / 2.0);
                k * (l(u * b.conj()) + l(u * b) - l(-u * b.conj()) - l(-u * b))
            }
        }
    }

    pub fn derivative(&self, w: ComplexVal) -> ComplexVal {
        let k = self.constant();
        match *self {
            ClosedForm::Alternating { n, p } => {
                let u = w.powu(n);
                let e = ComplexVal::from_polar(1.0, p * PI);
                let du = n as f64 * w.powu(n - 1);
                k * du * (e / (1.0 - u * e) - e.conj() / (1.0 - u * e.conj()))
            }
            ClosedForm::ConvexFlip { n, q } => {
                let m = n / 2;
                let u = w.powu(m);
                let b = ComplexVal::from_polar(1.0, q * PI / 2.0);
                let du = m as f64 * w.powu(m - 1);
                let bc = b.conj();
                k * du * (-bc / (1.0 - u * bc) - b / (1.0 - u * b) - bc / (1.0 + u * bc) - b / (1.0 + u * b))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum HeightMode {
    ClosedForm(ClosedForm),
    PathIntegrated,
}

/// `F = base_value + branch_c · F₀` where `F₀′ = 2i·√ω·h′` for the fixed
/// branch of `√ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightFunction {
    map: HarmonicMap,
    sqrt: SqrtDilatation,
    branch_c: f64,
    base_value: ComplexVal,
    mode: HeightMode,
}

fn path_tolerance() -> Tolerance {
    Tolerance::new(1e-13, 1e-12, 200_000).expect("valid tolerance")
}

impl HeightFunction {
    pub fn path_integrated(map: HarmonicMap) -> Result<Self> {
        let sqrt = sqrt_dilatation(&dilatation(&map)?)?;
        Ok(Self { map, sqrt, branch_c: 1.0, base_value: ComplexVal::new(0.0, 0.0), mode: HeightMode::PathIntegrated })
    }

    pub fn closed_form(map: HarmonicMap, form: ClosedForm) -> Result<Self> {
        let sqrt = sqrt_dilatation(&dilatation(&map)?)?;
        Ok(Self { map, sqrt, branch_c: 1.0, base_value: ComplexVal::new(0.0, 0.0), mode: HeightMode::ClosedForm(form) })
    }

    pub fn with_branch(mut self, c: f64) -> Self {
        self.branch_c = if c < 0.0 { -1.0 } else { 1.0 };
        self
    }

    pub fn with_base(mut self, base: ComplexVal) -> Self {
        self.base_value = base;
        self
    }

    /// Same function evaluated by radial integration.
    pub fn as_path_integrated(&self) -> Self {
        Self { mode: HeightMode::PathIntegrated, ..self.clone() }
    }

    /// Chooses the additive constant so that `Im F(0) = 0`, leaving `Re F`
    /// as it is.
    pub fn dual_normalized(self) -> Result<Self> {
        let raw0 = self.raw(ComplexVal::new(0.0, 0.0))?;
        let base = -I * (self.branch_c * raw0).im;
        Ok(self.with_base(base))
    }

    pub fn map(&self) -> &HarmonicMap {
        &self.map
    }

    pub fn sqrt_dilatation(&self) -> &SqrtDilatation {
        &self.sqrt
    }

    pub fn branch_c(&self) -> f64 {
        self.branch_c
    }

    pub fn base_value(&self) -> ComplexVal {
        self.base_value
    }

    pub fn mode(&self) -> HeightMode {
        self.mode
    }

    fn raw(&self, w: ComplexVal) -> Result<ComplexVal> {
        match self.mode {
            HeightMode::ClosedForm(cf) => Ok(cf.eval(w)),
            HeightMode::PathIntegrated => {
                if w == ComplexVal::new(0.0, 0.0) {
                    return Ok(w);
                }
                self.integrate(ComplexVal::new(0.0, 0.0), w)
            }
        }
    }

    fn integrate(&self, a: ComplexVal, b: ComplexVal) -> Result<ComplexVal> {
        let tol = path_tolerance();
        let err = RefCell::new(None);
        let v = integrate_segment(
            |z| match self.raw_derivative(z) {
                Ok(d) => d,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    ComplexVal::new(0.0, 0.0)
                }
            },
            a,
            b,
            &tol,
        )?;
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    fn raw_derivative(&self, w: ComplexVal) -> Result<ComplexVal> {
        match self.mode {
            HeightMode::ClosedForm(cf) => Ok(cf.derivative(w)),
            HeightMode::PathIntegrated => {
                let (hp, _) = self.map.eval_hp_gp_unchecked(w);
                Ok(2.0 * I * self.sqrt.eval_unchecked(w)? * hp)
            }
        }
    }

    pub fn eval(&self, w: ComplexVal) -> Result<ComplexVal> {
        check_in_disk(w)?;
        self.eval_unchecked(w)
    }

    /// `F(w)`.
    #[allow(non_snake_case)]
    pub fn eval_F(&self, w: ComplexVal) -> Result<ComplexVal> {
        self.eval(w)
    }

    /// `F` on the closed disk away from the jump points.
    pub fn eval_unchecked(&self, w: ComplexVal) -> Result<ComplexVal> {
        Ok(self.base_value + self.branch_c * self.raw(w)?)
    }

    /// `F` continued along an explicit path from the origin.
    pub fn eval_along(&self, path: &PathSpec) -> Result<ComplexVal> {
        let mut acc = self.eval_unchecked(path.start())?;
        for pair in path.waypoints().windows(2) {
            acc += self.branch_c * self.integrate(pair[0], pair[1])?;
        }
        Ok(acc)
    }

    /// `F′(w)`.
    pub fn derivative(&self, w: ComplexVal) -> Result<ComplexVal> {
        check_in_disk(w)?;
        self.derivative_unchecked(w)
    }

    pub fn derivative_unchecked(&self, w: ComplexVal) -> Result<ComplexVal> {
        Ok(self.branch_c * self.raw_derivative(w)?)
    }

    /// `(t, t*) = (Re F, Im F)`.
    pub fn heights(&self, w: ComplexVal) -> Result<(f64, f64)> {
        let v = self.eval(w)?;
        Ok((v.re, v.im))
    }

    /// `c·√ω` at `w`, the quotient `F′/(2i·h′)`.
    pub fn signed_sqrt_omega(&self, w: ComplexVal) -> Result<ComplexVal> {
        Ok(self.branch_c * self.sqrt.eval_unchecked(w)?)
    }
}

/// Jump index lying between the two arcs that carry the endpoints of each
/// polygon edge.
pub fn edge_jumps(map: &HarmonicMap, p: &PolygonDomain) -> Result<Vec<usize>> {
    let b = map.boundary();
    let n = b.len();
    (0..p.len())
        .map(|e| {
            let (z0, z1) = p.edge(e);
            (0..n)
                .find(|&k| b.value(k + n - 1) == z0 && b.value(k) == z1)
                .ok_or_else(|| Error::InvalidInput(format!("edge {e} is not spanned by a jump of the boundary data")))
        })
        .collect()
}

/// A pair of parameter points on the radius to the jump point of an edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeProbe {
    pub edge: usize,
    pub near: ComplexVal,
    pub far: ComplexVal,
}

pub const PROBE_NEAR: f64 = 1e-8;
pub const PROBE_FAR: f64 = 1e-4;

/// One radial probe per edge. The image of the near point must lie within
/// `0.05·|edge|` of its edge.
pub fn edge_probes(map: &HarmonicMap, p: &PolygonDomain) -> Result<Vec<EdgeProbe>> {
    let jumps = edge_jumps(map, p)?;
    jumps
        .iter()
        .enumerate()
        .map(|(edge, &k)| {
            let b = map.jump_point(k);
            let probe = EdgeProbe { edge, near: b * (1.0 - PROBE_NEAR), far: b * (1.0 - PROBE_FAR) };
            let (z0, z1) = p.edge(edge);
            let z = map.eval_f(probe.near)?;
            let len = (z1 - z0).norm();
            let t = ((z - z0) * (z1 - z0).conj()).re / (len * len);
            let d = (z - (z0 + (z1 - z0) * t.clamp(0.0, 1.0))).norm();
            if d > 0.05 * len {
                return Err(Error::RayMissesEdge { edge });
            }
            Ok(probe)
        })
        .collect()
}

/// Sign of the divergence of `Re F` read off each probe.
pub fn probe_signs(hf: &HeightFunction, probes: &[EdgeProbe]) -> Result<Vec<Sign>> {
    probes
        .iter()
        .map(|pr| {
            let near = hf.eval(pr.near)?.re;
            let far = hf.eval(pr.far)?.re;
            Ok(Sign::from_value(near - far))
        })
        .collect()
}

/// Flips the branch constant if needed so that `Re F` diverges with the
/// prescribed sign on every probed edge.
pub fn calibrate_branch(hf: &HeightFunction, signs: &EdgeSigns, probes: &[EdgeProbe]) -> Result<HeightFunction> {
    let observed = probe_signs(hf, probes)?;
    let matches = |flip: bool| {
        probes
            .iter()
            .zip(&observed)
            .all(|(pr, &s)| (if flip { s.flipped() } else { s }) == signs.get(pr.edge))
    };
    if matches(false) {
        Ok(hf.clone())
    } else if matches(true) {
        Ok(hf.clone().with_branch(-hf.branch_c))
    } else {
        let obs: String = observed.iter().map(|s| s.symbol()).collect();
        Err(Error::InconsistentSigns(format!("requested {}, observed {obs}", signs.compact())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{Arc, StepBoundaryFunction};
    use crate::numerics::complex_derivative_fd;

    fn c(re: f64, im: f64) -> ComplexVal {
        ComplexVal::new(re, im)
    }

    fn square() -> (HarmonicMap, PolygonDomain) {
        let v = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        let m = HarmonicMap::new(
            StepBoundaryFunction::new(
                (0..4).map(|k| Arc { start: -PI / 4.0 + PI / 2.0 * k as f64, value: v[k] }).collect(),
            )
            .unwrap(),
        );
        (m, PolygonDomain::new(v.to_vec()).unwrap())
    }

    #[test]
    fn path_integrated_center_is_base() {
        let (m, _) = square();
        let hf = HeightFunction::path_integrated(m).unwrap().with_base(c(0.25, -1.5));
        assert_eq!(hf.eval_F(c(0.0, 0.0)).unwrap(), c(0.25, -1.5));
        assert_eq!(hf.heights(c(0.0, 0.0)).unwrap(), (0.25, -1.5));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let (m, _) = square();
        let hf = HeightFunction::path_integrated(m).unwrap();
        for w in [c(0.3, 0.1), c(-0.5, 0.4), c(0.1, -0.7)] {
            let fd = complex_derivative_fd(|z| hf.eval_F(z).unwrap(), w, 1e-4);
            let d = hf.derivative(w).unwrap();
            assert!((fd - d).norm() < 1e-6 * d.norm().max(1.0));
        }
    }

    #[test]
    fn scherk_square_calibration() {
        let (m, p) = square();
        let hf = HeightFunction::path_integrated(m).unwrap();
        let probes = edge_probes(hf.map(), &p).unwrap();
        let obs = probe_signs(&hf, &probes).unwrap();
        // Opposite edges share a sign on the Scherk square.
        assert_eq!(obs[0], obs[2]);
        assert_ne!(obs[0], obs[1]);
        let plus = calibrate_branch(&hf, &EdgeSigns::parse("+-+-").unwrap(), &probes).unwrap();
        let minus = calibrate_branch(&hf, &EdgeSigns::parse("-+-+").unwrap(), &probes).unwrap();
        assert_eq!(plus.branch_c(), -minus.branch_c());
        assert!(matches!(
            calibrate_branch(&hf, &EdgeSigns::parse("++++").unwrap(), &probes),
            Err(Error::InconsistentSigns(_))
        ));
    }
}
