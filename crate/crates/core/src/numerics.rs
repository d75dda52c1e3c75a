//! Numeric kernels shared by every other module: root bracketing, adaptive
//! Gauss–Legendre contour integration, square-root branch continuation,
//! least-squares slope fitting and centered finite differences.
//!
//! Everything here is a pure function of its inputs.

use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the complex plane. Parameters `w` in the disk, image points `z`
/// and auxiliary variables all use this type.
pub type ComplexVal = Complex64;

/// Stopping rule for the iterative kernels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol >= 0.0 && rel_tol >= 0.0) || (abs_tol == 0.0 && rel_tol == 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance needs a positive component (abs {abs_tol}, rel {rel_tol})"
            )));
        }
        if max_subdivisions == 0 {
            return Err(Error::InvalidInput("max_subdivisions must be >= 1".into()));
        }
        Ok(Self { abs_tol, rel_tol, max_subdivisions })
    }

    /// Bracket width at which bisection stops for a root near `x`.
    fn width_at(&self, x: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * x.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-12, max_subdivisions: 20_000 }
    }
}

/// A polyline contour strictly inside the unit disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    waypoints: Vec<ComplexVal>,
}

impl PathSpec {
    pub fn new(waypoints: Vec<ComplexVal>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidInput("a path needs at least two waypoints".into()));
        }
        for w in &waypoints {
            // The disk is convex, so inside endpoints keep every segment inside.
            crate::error::check_in_disk(*w)?;
        }
        if waypoints.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::InvalidInput("consecutive waypoints coincide".into()));
        }
        Ok(Self { waypoints })
    }

    /// Straight segment `0 -> w`.
    pub fn radial(w: ComplexVal) -> Result<Self> {
        Self::new(vec![ComplexVal::new(0.0, 0.0), w])
    }

    pub fn waypoints(&self) -> &[ComplexVal] {
        &self.waypoints
    }

    pub fn start(&self) -> ComplexVal {
        self.waypoints[0]
    }

    pub fn end(&self) -> ComplexVal {
        *self.waypoints.last().expect("non-empty path")
    }
}

/// Root of `f` in `[lo, hi]` by plain midpoint bisection.
///
/// The bracket is halved until its width drops below the tolerance or the
/// midpoint is no longer representable between the endpoints. An exact zero
/// at a midpoint is returned immediately; otherwise the midpoint of the final
/// bracket is returned.
pub fn bisect<F>(f: F, lo: f64, hi: f64, tol: &Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("bisect needs lo < hi, got [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if !(fa * fb < 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    for _ in 0..tol.max_subdivisions {
        let mid = 0.5 * (a + b);
        if b - a <= tol.width_at(mid) || mid <= a || mid >= b {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Err(Error::NoConvergence(format!(
        "bisection exhausted {} halvings",
        tol.max_subdivisions
    )))
}

const GL_ORDER: usize = 16;

/// Nodes and weights of the 16-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre_16() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = [0.0; GL_ORDER];
        let mut weights = [0.0; GL_ORDER];
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence for P_n(x) and its derivative.
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

fn gl_panel<F>(f: &F, a: f64, b: f64) -> ComplexVal
where
    F: Fn(f64) -> ComplexVal,
{
    let (nodes, weights) = gauss_legendre_16();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = ComplexVal::new(0.0, 0.0);
    for (x, wt) in nodes.iter().zip(weights.iter()) {
        acc += f(mid + half * x) * *wt;
    }
    acc * half
}

/// Adaptive composite Gauss–Legendre quadrature of a complex-valued function
/// of one real variable over `[a, b]`. Panels are halved until the two-half
/// estimate agrees with the whole-panel estimate.
pub fn integrate_interval<F>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<ComplexVal>
where
    F: Fn(f64) -> ComplexVal,
{
    if a == b {
        return Ok(ComplexVal::new(0.0, 0.0));
    }
    let total_len = (b - a).abs();
    let panel = |lo: f64, hi: f64| {
        let mid = 0.5 * (lo + hi);
        let whole = gl_panel(&f, lo, hi);
        let refined = gl_panel(&f, lo, mid) + gl_panel(&f, mid, hi);
        let err = (refined - whole).norm();
        let floor = 64.0 * f64::EPSILON * refined.norm();
        Panel { lo, hi, value: refined, err: if err <= floor { 0.0 } else { err } }
    };
    let mut heap = BinaryHeap::new();
    let first = panel(a, b);
    let mut sum = first.value;
    let mut err_sum = first.err;
    heap.push(first);
    let mut splits = 0usize;
    loop {
        if !err_sum.is_finite() || !sum.re.is_finite() || !sum.im.is_finite() {
            return Err(Error::NoConvergence(format!("non-finite integrand on [{a}, {b}]")));
        }
        let target = tol.abs_tol.max(tol.rel_tol * sum.norm());
        if err_sum <= target {
            break;
        }
        match heap.peek() {
            Some(w) if w.err > 0.0 && (w.hi - w.lo).abs() >= 1e-15 * total_len => {}
            _ => break,
        }
        let Some(worst) = heap.pop() else { break };
        splits += 1;
        if splits > tol.max_subdivisions {
            return Err(Error::NoConvergence(format!(
                "quadrature exceeded {} subdivisions",
                tol.max_subdivisions
            )));
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        let (mut l, mut r) = (panel(worst.lo, mid), panel(mid, worst.hi));
        if l.err + r.err >= worst.err {
            // Bisection made no progress: the panel is limited by round-off.
            l.err = 0.0;
            r.err = 0.0;
        }
        sum += l.value + r.value - worst.value;
        err_sum += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    Ok(panels.iter().map(|p| p.value).sum())
}

struct Panel {
    lo: f64,
    hi: f64,
    value: ComplexVal,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integral of `f(z) dz` along the straight segment `a -> b`, without any
/// domain check.
pub fn integrate_segment<F>(f: F, a: ComplexVal, b: ComplexVal, tol: &Tolerance) -> Result<ComplexVal>
where
    F: Fn(ComplexVal) -> ComplexVal,
{
    let d = b - a;
    integrate_interval(|s| f(a + d * s) * d, 0.0, 1.0, tol)
}

/// Contour integral of `f(z) dz` along a polyline inside the disk.
pub fn integrate_path<F>(f: F, path: &PathSpec, tol: &Tolerance) -> Result<ComplexVal>
where
    F: Fn(ComplexVal) -> ComplexVal,
{
    let mut total = ComplexVal::new(0.0, 0.0);
    for seg in path.waypoints().windows(2) {
        total += integrate_segment(&f, seg[0], seg[1], tol)?;
    }
    Ok(total)
}

/// Continues a square root along samples of a nonvanishing function.
///
/// Starting from `seed`, each next root is the one of the two candidates
/// closest to the previous root. A consecutive ratio whose argument is within
/// `1e-6` of `±π` leaves the choice ambiguous and is rejected.
pub fn continue_sqrt(values: &[ComplexVal], seed: ComplexVal, tol: &Tolerance) -> Result<Vec<ComplexVal>> {
    let Some(first) = values.first() else {
        return Ok(Vec::new());
    };
    let zero = |k: usize, v: &ComplexVal| -> Result<()> {
        if v.norm() < tol.abs_tol {
            Err(Error::ZeroEncountered { index: k })
        } else {
            Ok(())
        }
    };
    zero(0, first)?;
    if (seed * seed - first).norm() > 1e-8 * first.norm() {
        return Err(Error::InvalidInput("seed does not square to the first sample".into()));
    }
    let mut out = Vec::with_capacity(values.len());
    out.push(seed);
    let mut prev = seed;
    for (k, pair) in values.windows(2).enumerate() {
        zero(k + 1, &pair[1])?;
        let ratio = pair[1] / pair[0];
        if PI - ratio.arg().abs() < 1e-6 {
            return Err(Error::AmbiguousBranch { index: k + 1 });
        }
        let root = pair[1].sqrt();
        let next = if (root - prev).norm() <= (-root - prev).norm() { root } else { -root };
        out.push(next);
        prev = next;
    }
    Ok(out)
}

/// Ordinary least-squares line through `(xs, ys)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square deviation of the samples from the fitted line.
    pub residual: f64,
}

pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::DegenerateFit("xs and ys differ in length".into()));
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    Ok(LinearFit { slope, intercept, residual: (ss / n).sqrt() })
}

/// Centered difference of a real function.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Partial derivatives `(∂/∂u, ∂/∂v)` of a real function of `w = u + iv` by
/// centered differences.
pub fn gradient_fd<F: Fn(ComplexVal) -> f64>(f: F, w: ComplexVal, h: f64) -> (f64, f64) {
    let du = ComplexVal::new(h, 0.0);
    let dv = ComplexVal::new(0.0, h);
    ((f(w + du) - f(w - du)) / (2.0 * h), (f(w + dv) - f(w - dv)) / (2.0 * h))
}

/// Complex derivative of a holomorphic function by a centered difference
/// along the real axis.
pub fn complex_derivative_fd<F: Fn(ComplexVal) -> ComplexVal>(f: F, w: ComplexVal, h: f64) -> ComplexVal {
    let d = ComplexVal::new(h, 0.0);
    (f(w + d) - f(w - d)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> ComplexVal {
        ComplexVal::new(re, im)
    }

    #[test]
    fn bisect_linear_and_sqrt2() {
        let tol = Tolerance::new(1e-12, 0.0, 200).unwrap();
        let x = bisect(|x| x - 0.5, 0.0, 1.0, &tol).unwrap();
        assert_eq!(x, 0.5);
        let r = bisect(|x| x * x - 2.0, 1.0, 2.0, &tol).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bisect_errors() {
        let tol = Tolerance::default();
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0, &tol), Err(Error::NoSignChange { .. })));
        let tight = Tolerance::new(1e-300, 0.0, 3).unwrap();
        assert!(matches!(bisect(|x| x - 0.3, 0.0, 1.0, &tight), Err(Error::NoConvergence(_))));
    }

    #[test]
    fn bisect_is_bit_deterministic() {
        let tol = Tolerance::default();
        let f = |x: f64| (3.0 * x).cos() - x;
        let a = bisect(f, 0.0, 1.0, &tol).unwrap();
        let b = bisect(f, 0.0, 1.0, &tol).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        let (nodes, weights) = gauss_legendre_16();
        assert_relative_eq!(weights.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        // Exact for x^30.
        let m: f64 = nodes.iter().zip(weights).map(|(x, w)| w * x.powi(30)).sum();
        assert_relative_eq!(m, 2.0 / 31.0, epsilon = 1e-14);
    }

    #[test]
    fn integrate_path_examples() {
        let tol = Tolerance::default();
        let p = PathSpec::radial(c(0.5, 0.0)).unwrap();
        let v = integrate_path(|_| c(1.0, 0.0), &p, &tol).unwrap();
        assert_relative_eq!(v.re, 0.5, epsilon = 1e-15);

        let w = c(0.3, -0.6);
        let v = integrate_path(|z| z * 2.0, &PathSpec::radial(w).unwrap(), &tol).unwrap();
        assert!((v - w * w).norm() < 1e-15);

        let v = integrate_path(|z| (z - 2.0).inv(), &PathSpec::radial(c(0.9, 0.0)).unwrap(), &tol).unwrap();
        // Antiderivative log(z - 2) evaluated independently.
        let exact = (1.1f64 / 2.0).ln();
        assert!((v - c(exact, 0.0)).norm() < 1e-13);
        assert_relative_eq!(exact, -0.597_837_000_755_620_4, epsilon = 1e-15);
    }

    #[test]
    fn continue_sqrt_examples() {
        let tol = Tolerance::default();
        let ones = vec![c(1.0, 0.0); 3];
        let r = continue_sqrt(&ones, c(-1.0, 0.0), &tol).unwrap();
        assert!(r.iter().all(|s| *s == c(-1.0, 0.0)));

        let samples: Vec<_> = (0..100)
            .map(|k| ComplexVal::from_polar(1.0, 2.0 * PI * k as f64 / 99.0))
            .collect();
        let r = continue_sqrt(&samples, c(1.0, 0.0), &tol).unwrap();
        assert!((r[99] - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn continue_sqrt_errors() {
        let tol = Tolerance::default();
        let v = vec![c(1.0, 0.0), c(-1.0, 1e-9)];
        assert!(matches!(continue_sqrt(&v, c(1.0, 0.0), &tol), Err(Error::AmbiguousBranch { index: 1 })));
        let v = vec![c(1.0, 0.0), c(0.0, 0.0)];
        assert!(matches!(continue_sqrt(&v, c(1.0, 0.0), &tol), Err(Error::ZeroEncountered { index: 1 })));
    }

    #[test]
    fn fit_slope_examples() {
        let fit = fit_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert_relative_eq!(fit.slope, 2.0, epsilon = 1e-15);
        assert_relative_eq!(fit.intercept, 1.0, epsilon = 1e-15);
        assert!(fit.residual < 1e-15);
        let fit = fit_slope(&[0.0, 1.0], &[0.0, 0.0]).unwrap();
        assert_eq!((fit.slope, fit.intercept), (0.0, 0.0));
        assert!(matches!(fit_slope(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn path_rejects_boundary_points() {
        assert!(PathSpec::radial(c(1.0, 0.0)).is_err());
        assert!(PathSpec::new(vec![c(0.1, 0.0), c(0.1, 0.0)]).is_err());
        assert!(Tolerance::new(0.0, 0.0, 10).is_err());
    }
}
