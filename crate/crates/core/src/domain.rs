//! Polygonal domains, their signed edges and the lightlike boundary polygon.
//!
//! Edge `k` is the open segment from vertex `k` to vertex `k + 1` (indices
//! taken cyclically). Vertex `k` therefore sits between edge `k - 1` and
//! edge `k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ComplexVal;

/// Parameter epsilon of the segment-intersection tests.
const PARAM_EPS: f64 = 1e-12;

/// Largest polygon accepted by [`enumerate_subpolygons`].
pub const MAX_SUBPOLYGON_VERTICES: usize = 16;

/// Direction in which the minimal graph diverges on an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn from_value(v: f64) -> Self {
        if v >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// One sign per edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeSigns(Vec<Sign>);

impl EdgeSigns {
    pub fn new(signs: Vec<Sign>) -> Self {
        Self(signs)
    }

    pub fn for_polygon(signs: Vec<Sign>, polygon: &PolygonDomain) -> Result<Self> {
        if signs.len() != polygon.len() {
            return Err(Error::InvalidInput(format!(
                "{} signs for {} edges",
                signs.len(),
                polygon.len()
            )));
        }
        Ok(Self(signs))
    }

    /// Parses a compact form such as `"+-+-"`.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(Sign::Plus),
                '-' => Ok(Sign::Minus),
                other => Err(Error::InvalidInput(format!("bad sign character `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, edge: usize) -> Sign {
        self.0[edge % self.0.len()]
    }

    pub fn as_slice(&self) -> &[Sign] {
        &self.0
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|s| s.flipped()).collect())
    }

    pub fn compact(&self) -> String {
        self.0.iter().map(|s| s.symbol()).collect()
    }
}

/// A simple, positively oriented polygon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct PolygonDomain {
    vertices: Vec<ComplexVal>,
}

impl TryFrom<Vec<[f64; 2]>> for PolygonDomain {
    type Error = Error;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(v.into_iter().map(|[x, y]| ComplexVal::new(x, y)).collect())
    }
}

impl From<PolygonDomain> for Vec<[f64; 2]> {
    fn from(p: PolygonDomain) -> Self {
        p.vertices.iter().map(|z| [z.re, z.im]).collect()
    }
}

impl PolygonDomain {
    pub fn new(vertices: Vec<ComplexVal>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidPolygon(format!("{n} vertices")));
        }
        if vertices.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        for k in 0..n {
            if vertices[k] == vertices[(k + 1) % n] {
                return Err(Error::InvalidPolygon(format!("vertices {k} and {} coincide", (k + 1) % n)));
            }
        }
        let area = signed_area(&vertices);
        if !(area > 0.0) {
            return Err(Error::InvalidPolygon(format!("signed area {area} is not positive")));
        }
        if !is_simple(&vertices) {
            return Err(Error::InvalidPolygon("boundary self-intersects".into()));
        }
        Ok(Self { vertices })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[ComplexVal] {
        &self.vertices
    }

    pub fn vertex(&self, k: usize) -> ComplexVal {
        self.vertices[k % self.len()]
    }

    /// Endpoints of edge `k` in boundary order.
    pub fn edge(&self, k: usize) -> (ComplexVal, ComplexVal) {
        let n = self.len();
        (self.vertices[k % n], self.vertices[(k + 1) % n])
    }

    pub fn edge_length(&self, k: usize) -> f64 {
        let (a, b) = self.edge(k);
        (b - a).norm()
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.len()).map(|k| self.edge_length(k)).sum()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.vertices.iter().map(|z| z * lambda).collect())
    }

    /// Interior angle at every vertex, in `(0, 2π)`.
    pub fn interior_angles(&self) -> Vec<f64> {
        interior_angles(self)
    }

    /// Strict point-in-polygon test by winding number; points within `1e-14`
    /// of the boundary count as outside.
    pub fn contains(&self, z: ComplexVal) -> bool {
        if self.distance_to_boundary(z) < 1e-14 {
            return false;
        }
        winding_number(&self.vertices, z) != 0
    }

    /// Containment in the closure, allowing `slack` outside the boundary.
    pub fn contains_closed(&self, z: ComplexVal, slack: f64) -> bool {
        self.distance_to_boundary(z) <= slack || winding_number(&self.vertices, z) != 0
    }

    pub fn distance_to_boundary(&self, z: ComplexVal) -> f64 {
        (0..self.len())
            .map(|k| {
                let (a, b) = self.edge(k);
                distance_to_segment(z, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether the open segment between vertices `i` and `j` avoids the
    /// boundary and runs through the interior.
    pub fn chord_admissible(&self, i: usize, j: usize) -> bool {
        let n = self.len();
        let (i, j) = (i % n, j % n);
        if i == j {
            return false;
        }
        let a = self.vertices[i];
        let b = self.vertices[j];
        for k in 0..n {
            let (p, q) = self.edge(k);
            if open_segment_touches(a, b, p, q) {
                return false;
            }
        }
        self.contains((a + b) * 0.5)
    }
}

fn signed_area(v: &[ComplexVal]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|k| {
            let a = v[k];
            let b = v[(k + 1) % n];
            a.re * b.im - b.re * a.im
        })
        .sum::<f64>()
}

fn cross(a: ComplexVal, b: ComplexVal) -> f64 {
    a.re * b.im - a.im * b.re
}

fn distance_to_segment(z: ComplexVal, a: ComplexVal, b: ComplexVal) -> f64 {
    let d = b - a;
    let t = ((z - a).re * d.re + (z - a).im * d.im) / d.norm_sqr();
    let t = t.clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

fn winding_number(v: &[ComplexVal], z: ComplexVal) -> i32 {
    let n = v.len();
    let mut wn = 0;
    for k in 0..n {
        let a = v[k];
        let b = v[(k + 1) % n];
        if a.im <= z.im {
            if b.im > z.im && cross(b - a, z - a) > 0.0 {
                wn += 1;
            }
        } else if b.im <= z.im && cross(b - a, z - a) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Closed-segment intersection test for two segments.
fn segments_intersect(a: ComplexVal, b: ComplexVal, c: ComplexVal, d: ComplexVal) -> bool {
    let d1 = cross(d - c, a - c);
    let d2 = cross(d - c, b - c);
    let d3 = cross(b - a, c - a);
    let d4 = cross(b - a, d - a);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: ComplexVal, q: ComplexVal, r: ComplexVal| {
        cross(q - p, r - p) == 0.0
            && r.re >= p.re.min(q.re)
            && r.re <= p.re.max(q.re)
            && r.im >= p.im.min(q.im)
            && r.im <= p.im.max(q.im)
    };
    on(c, d, a) || on(c, d, b) || on(a, b, c) || on(a, b, d)
}

fn is_simple(v: &[ComplexVal]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (c, d) = (v[j], v[(j + 1) % n]);
            if adjacent {
                // Adjacent edges may only share their common vertex.
                let (shared, other_a, other_c) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                let u = other_a - shared;
                let w = other_c - shared;
                if cross(u, w) == 0.0 && u.re * w.re + u.im * w.im > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Whether the open segment `a -> b` meets the closed segment `p -> q`
/// anywhere other than at `a` or `b` themselves.
fn open_segment_touches(a: ComplexVal, b: ComplexVal, p: ComplexVal, q: ComplexVal) -> bool {
    let r = b - a;
    let s = q - p;
    let denom = cross(r, s);
    let scale = r.norm() * s.norm();
    if denom.abs() > 1e-14 * scale {
        let t = cross(p - a, s) / denom;
        let u = cross(p - a, r) / denom;
        return t > PARAM_EPS && t < 1.0 - PARAM_EPS && u >= -PARAM_EPS && u <= 1.0 + PARAM_EPS;
    }
    // Parallel: only a collinear overlap with the open chord counts.
    if cross(p - a, r).abs() > 1e-14 * r.norm() * (p - a).norm().max(r.norm()) {
        return false;
    }
    let rr = r.norm_sqr();
    let tp = ((p - a).re * r.re + (p - a).im * r.im) / rr;
    let tq = ((q - a).re * r.re + (q - a).im * r.im) / rr;
    let (lo, hi) = if tp < tq { (tp, tq) } else { (tq, tp) };
    hi > PARAM_EPS && lo < 1.0 - PARAM_EPS
}

/// Interior angle at each vertex, measured inside the (positively oriented)
/// polygon.
pub fn interior_angles(p: &PolygonDomain) -> Vec<f64> {
    let n = p.len();
    (0..n)
        .map(|j| {
            let prev = p.vertex(j + n - 1);
            let cur = p.vertex(j);
            let next = p.vertex(j + 1);
            let turn = ((next - cur) / (cur - prev)).arg();
            PI - turn
        })
        .collect()
}

/// A polygon in L³ lying over a planar polygon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightlikePolygon {
    /// `(x, y, t)` over each planar vertex, in boundary order.
    pub vertices3d: Vec<[f64; 3]>,
    /// Whether walking all edges returns to the starting height.
    pub closed: bool,
    /// Signed height mismatch after one loop, `Σ ±|edge|`.
    pub deficit: f64,
}

impl LightlikePolygon {
    pub fn len(&self) -> usize {
        self.vertices3d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices3d.is_empty()
    }

    pub fn height(&self, k: usize) -> f64 {
        self.vertices3d[k % self.len()][2]
    }

    pub fn projects_onto(&self, p: &PolygonDomain) -> bool {
        self.len() == p.len()
            && self
                .vertices3d
                .iter()
                .zip(p.vertices())
                .all(|(v, z)| v[0] == z.re && v[1] == z.im)
    }
}

/// Lifts the boundary to L³: the height rises by the edge length along Plus
/// edges and drops by it along Minus edges.
pub fn lift_lightlike(p: &PolygonDomain, signs: &EdgeSigns, t0: f64) -> Result<LightlikePolygon> {
    if signs.len() != p.len() {
        return Err(Error::InvalidInput(format!("{} signs for {} edges", signs.len(), p.len())));
    }
    let n = p.len();
    let mut t = t0;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let z = p.vertex(k);
        out.push([z.re, z.im, t]);
        t += signs.get(k).value() * p.edge_length(k);
    }
    let deficit = t - t0;
    let closed = deficit.abs() <= 1e-12 * p.perimeter();
    Ok(LightlikePolygon { vertices3d: out, closed, deficit })
}

/// A polygon whose vertices are a subsequence of a parent polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct SubPolygon {
    /// Increasing vertex indices into the parent.
    pub indices: Vec<usize>,
    pub polygon: PolygonDomain,
}

impl SubPolygon {
    /// Whether the side from `indices[k]` to the next index is an edge of the
    /// parent rather than a chord.
    pub fn side_is_parent_edge(&self, k: usize, parent_len: usize) -> bool {
        let a = self.indices[k];
        let b = self.indices[(k + 1) % self.indices.len()];
        (a + 1) % parent_len == b
    }
}

/// Every simple, positively oriented polygon spanned by at least three of
/// the vertices of `p` (kept in boundary order) whose sides are edges of `p`
/// or admissible chords. The parent itself is included. Results come in
/// lexicographic order of their index sequences.
pub fn enumerate_subpolygons(p: &PolygonDomain) -> Result<Vec<SubPolygon>> {
    let n = p.len();
    if n > MAX_SUBPOLYGON_VERTICES {
        return Err(Error::TooManyVertices { count: n, limit: MAX_SUBPOLYGON_VERTICES });
    }
    let mut admissible = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            admissible[i][j] = (i + 1) % n == j || (j + 1) % n == i || p.chord_admissible(i, j);
        }
    }
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << n) {
        if mask.count_ones() < 3 {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
        let m = idx.len();
        let ok = (0..m).all(|k| {
            let a = idx[k];
            let b = idx[(k + 1) % m];
            (a + 1) % n == b || admissible[a][b]
        });
        if !ok {
            continue;
        }
        if let Ok(poly) = PolygonDomain::new(idx.iter().map(|&k| p.vertex(k)).collect()) {
            out.push(SubPolygon { indices: idx, polygon: poly });
        }
    }
    out.sort_by(|a, b| a.indices.cmp(&b.indices));
    Ok(out)
}

/// JSON descriptor of a signed domain, optionally carrying step boundary data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainDescriptor {
    pub vertices: Vec<[f64; 2]>,
    pub signs: Vec<Sign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arcs: Option<Vec<crate::harmonic::ArcDescriptor>>,
}

impl DomainDescriptor {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn polygon(&self) -> Result<PolygonDomain> {
        PolygonDomain::try_from(self.vertices.clone())
    }

    pub fn edge_signs(&self) -> Result<EdgeSigns> {
        EdgeSigns::for_polygon(self.signs.clone(), &self.polygon()?)
    }
}
