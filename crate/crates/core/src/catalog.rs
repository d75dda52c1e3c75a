//! Explicit examples: the two step-function families over the star domains
//! `Ω_n(r)` and the implicit maximal surfaces `S_p`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{EdgeSigns, PolygonDomain, Sign};
use crate::error::{Error, Result};
use crate::harmonic::{Arc, HarmonicMap, StepBoundaryFunction};
use crate::height::{calibrate_branch, edge_probes, ClosedForm, HeightFunction};
use crate::numerics::{bisect, ComplexVal, Tolerance};
use crate::sp::SpSurface;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StarVariant {
    /// Signs alternate on adjacent edges.
    Alternating,
    /// Signs change at convex corners only.
    ConvexFlip,
}

/// Residual of `r·sin((n−1)pπ/n) = sin((n−1)(1−p)π/n)`.
pub fn p_residual(n: u32, r: f64, p: f64) -> f64 {
    let a = (n as f64 - 1.0) / n as f64 * PI;
    r * (a * p).sin() - (a * (1.0 - p)).sin()
}

/// Residual of `r·cos((n−2)qπ/2n) = sin((n−2)(1−q)π/2n)`.
pub fn q_residual(n: u32, r: f64, q: f64) -> f64 {
    let a = (n as f64 - 2.0) / (2.0 * n as f64) * PI;
    r * (a * q).cos() - (a * (1.0 - q)).sin()
}

fn root_tolerance() -> Tolerance {
    Tolerance::new(1e-16, 0.0, 200).expect("valid tolerance")
}

pub fn solve_p(n: u32, r: f64) -> Result<f64> {
    if n < 2 || !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvariantViolated(format!("need n ≥ 2 and r > 0, got n = {n}, r = {r}")));
    }
    bisect(|p| p_residual(n, r, p), 0.0, 1.0, &root_tolerance())
}

pub fn solve_q(n: u32, r: f64) -> Result<f64> {
    check_convex_flip(n, r)?;
    bisect(|q| q_residual(n, r, q), 0.0, 1.0, &root_tolerance())
}

fn check_convex_flip(n: u32, r: f64) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvariantViolated(format!("second star example needs even n ≥ 4, got {n}")));
    }
    if !(r > 0.0) || r >= (PI / n as f64).cos() {
        return Err(Error::InvariantViolated(format!("second star example needs 0 < r < cos(π/n), got r = {r}")));
    }
    Ok(())
}

/// Vertices `r, α, rα², α³, …` with `α = e^{iπ/n}`.
pub fn star_vertices(n: u32, r: f64) -> Vec<ComplexVal> {
    (0..2 * n)
        .map(|k| {
            let a = ComplexVal::from_polar(1.0, PI * k as f64 / n as f64);
            if k % 2 == 0 {
                a * r
            } else {
                a
            }
        })
        .collect()
}

/// Prescribed edge signs, edge 0 being Plus.
pub fn star_signs(n: u32, variant: StarVariant) -> EdgeSigns {
    EdgeSigns::new(
        (0..2 * n as usize)
            .map(|e| match variant {
                StarVariant::Alternating if e % 2 == 0 => Sign::Plus,
                StarVariant::Alternating => Sign::Minus,
                StarVariant::ConvexFlip if e % 4 == 0 || e % 4 == 3 => Sign::Plus,
                StarVariant::ConvexFlip => Sign::Minus,
            })
            .collect(),
    )
}

/// Boundary data: arc `((2k−s)π/n, (2k+s)π/n) ↦ rα^{2k}` and arc
/// `((2k+s)π/n, (2k+2−s)π/n) ↦ α^{2k+1}` with `s` the root parameter.
pub fn star_boundary(n: u32, r: f64, s: f64) -> Result<StepBoundaryFunction> {
    let v = star_vertices(n, r);
    let nf = n as f64;
    let arcs = (0..2 * n as usize)
        .map(|k| {
            let j = (k / 2) as f64;
            let start = if k % 2 == 0 { (2.0 * j - s) * PI / nf } else { (2.0 * j + s) * PI / nf };
            Arc { start, value: v[k] }
        })
        .collect();
    StepBoundaryFunction::new(arcs)
}

/// A fully constructed star example.
#[derive(Clone, Debug)]
pub struct StarExample {
    pub n: u32,
    pub r: f64,
    pub variant: StarVariant,
    /// `p` for the alternating family, `q` for the other.
    pub root: f64,
    pub polygon: PolygonDomain,
    pub signs: EdgeSigns,
    pub height: HeightFunction,
}

impl StarExample {
    pub fn map(&self) -> &HarmonicMap {
        self.height.map()
    }
}

pub fn build_star(n: u32, r: f64, variant: StarVariant) -> Result<StarExample> {
    let root = match variant {
        StarVariant::Alternating => solve_p(n, r)?,
        StarVariant::ConvexFlip => solve_q(n, r)?,
    };
    let polygon = PolygonDomain::new(star_vertices(n, r))?;
    let signs = star_signs(n, variant);
    let map = HarmonicMap::with_univalence_check(star_boundary(n, r, root)?);
    let form = match variant {
        StarVariant::Alternating => ClosedForm::Alternating { n, p: root },
        StarVariant::ConvexFlip => ClosedForm::ConvexFlip { n, q: root },
    };
    let hf = HeightFunction::closed_form(map, form)?;
    let probes = edge_probes(hf.map(), &polygon)?;
    let height = calibrate_branch(&hf, &signs, &probes)?.dual_normalized()?;
    log::debug!("star {variant:?} n={n} r={r}: root {root}, c = {}", height.branch_c());
    Ok(StarExample { n, r, variant, root, polygon, signs, height })
}

/// The printed closed form of `f` for the alternating family. Each argument
/// is a subtended angle in `(0, π)` and is taken in `[0, 2π)`, the branch
/// continuous from the origin.
pub fn alternating_f(n: u32, r: f64, p: f64, w: ComplexVal) -> ComplexVal {
    let alpha = |k: u32| ComplexVal::from_polar(1.0, PI * k as f64 / n as f64);
    let beta = ComplexVal::from_polar(1.0, p * PI / n as f64);
    let angle = |z: ComplexVal| z.arg().rem_euclid(2.0 * PI);
    let mut acc = ComplexVal::new(0.0, 0.0);
    for k in 0..n {
        let a2k = alpha(2 * k);
        acc += r / PI * a2k * angle((w - a2k * beta) / (w - a2k * beta.conj()));
        acc += alpha(2 * k + 1) / PI * angle((w - alpha(2 * k + 2) * beta.conj()) / (w - a2k * beta));
    }
    acc
}

/// Catalog identifiers `star1:<n>:<r>`, `star2:<n>:<r>`, `sp:<p>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CatalogId {
    Star { variant: StarVariant, n: u32, r: f64 },
    Sp { p: f64 },
}

impl FromStr for CatalogId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unknown example id `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [kind @ ("star1" | "star2"), n, r] => {
                let variant = if *kind == "star1" { StarVariant::Alternating } else { StarVariant::ConvexFlip };
                let n = n.parse().map_err(|_| bad())?;
                let r = r.parse().map_err(|_| bad())?;
                Ok(CatalogId::Star { variant, n, r })
            }
            ["sp", p] => Ok(CatalogId::Sp { p: p.parse().map_err(|_| bad())? }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for CatalogId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogId::Star { variant: StarVariant::Alternating, n, r } => write!(f, "star1:{n}:{r}"),
            CatalogId::Star { variant: StarVariant::ConvexFlip, n, r } => write!(f, "star2:{n}:{r}"),
            CatalogId::Sp { p } => write!(f, "sp:{p}"),
        }
    }
}

/// A resolved catalog entry.
#[derive(Clone, Debug)]
pub enum CatalogEntry {
    Star(Box<StarExample>),
    Sp(SpSurface),
}

pub fn resolve(id: &CatalogId) -> Result<CatalogEntry> {
    match *id {
        CatalogId::Star { variant, n, r } => Ok(CatalogEntry::Star(Box::new(build_star(n, r, variant)?))),
        CatalogId::Sp { p } => Ok(CatalogEntry::Sp(SpSurface::new(p)?)),
    }
}

/// Human-readable listing of the catalog families.
pub fn listing() -> Vec<(&'static str, &'static str)> {
    vec![
        ("star1:<n>:<r>", "star domain with signs alternating on adjacent edges; n >= 2, r > 0"),
        ("star2:<n>:<r>", "star domain with signs changing at convex corners; even n >= 4, r < cos(pi/n)"),
        ("sp:<p>", "implicit maximal surface p^2 cos(qx) + q^2 cos(py) = cos(pqt), q = sqrt(1 - p^2)"),
    ]
}
