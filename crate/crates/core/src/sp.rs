//! The implicit maximal surfaces `S_p: p²cos(qx) + q²cos(py) = cos(pqt)`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc_tables::{EDGE_TABLE, TRI_TABLE};
use crate::mesh::{MeshBuffer, MeshMetadata};
use crate::numerics::{bisect, Tolerance};

pub type Point3 = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpSurface {
    pub p: f64,
    pub q: f64,
}

impl SpSurface {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidInput(format!("p = {p} must lie in (0, 1)")));
        }
        Ok(Self { p, q: (1.0 - p * p).sqrt() })
    }

    pub fn eval(&self, x: Point3) -> f64 {
        let (p, q) = (self.p, self.q);
        p * p * (q * x[0]).cos() + q * q * (p * x[1]).cos() - (p * q * x[2]).cos()
    }

    pub fn gradient(&self, x: Point3) -> Point3 {
        let (p, q) = (self.p, self.q);
        [
            -p * p * q * (q * x[0]).sin(),
            -q * q * p * (p * x[1]).sin(),
            p * q * (p * q * x[2]).sin(),
        ]
    }

    /// One Newton step towards the zero set along the gradient.
    pub fn newton_step(&self, x: Point3) -> Point3 {
        let g = self.gradient(x);
        let gg = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
        if gg == 0.0 {
            return x;
        }
        let s = self.eval(x) / gg;
        [x[0] - s * g[0], x[1] - s * g[1], x[2] - s * g[2]]
    }

    /// Newton iteration to `|F| < 1e-13`, or `None` if it stalls.
    pub fn project(&self, mut x: Point3) -> Option<Point3> {
        for _ in 0..60 {
            if self.eval(x).abs() < 1e-13 {
                return Some(x);
            }
            x = self.newton_step(x);
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: Point3,
    pub hi: Point3,
}

impl Aabb {
    pub fn cube(half: f64) -> Self {
        Self { lo: [-half; 3], hi: [half; 3] }
    }
}

/// Level-set mesh with the box faces each vertex lies on.
#[derive(Clone, Debug)]
pub struct LevelSetMesh {
    pub mesh: MeshBuffer,
    /// Bit `2a` (`2a + 1`) set when the vertex lies on the low (high) face
    /// of axis `a`.
    pub box_faces: Vec<u8>,
}

impl LevelSetMesh {
    /// Interior edges not shared by exactly two triangles.
    pub fn interior_defects(&self) -> usize {
        self.mesh.non_manifold_edges(|a, b| self.box_faces[a] & self.box_faces[b] != 0)
    }

    pub fn max_residual(&self, s: &SpSurface) -> f64 {
        self.mesh.vertices.iter().map(|&v| s.eval(v).abs()).fold(0.0, f64::max)
    }
}

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 0),
    (4, 5),
    (5, 6),
    (6, 7),
    (7, 4),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// Marching cubes on a lattice of `resolution` nodes per axis placed at the
/// cell centres of a `resolution³` partition of the box. Crossings are
/// located by bisection along lattice edges and then projected by one
/// Newton step.
pub fn sp_sample(s: &SpSurface, bounds: Aabb, resolution: usize) -> Result<LevelSetMesh> {
    if resolution < 8 {
        return Err(Error::InvalidInput(format!("resolution {resolution} < 8")));
    }
    let n = resolution;
    let h: Vec<f64> = (0..3).map(|a| (bounds.hi[a] - bounds.lo[a]) / n as f64).collect();
    let node = |i: usize, j: usize, k: usize| -> Point3 {
        [
            bounds.lo[0] + (i as f64 + 0.5) * h[0],
            bounds.lo[1] + (j as f64 + 0.5) * h[1],
            bounds.lo[2] + (k as f64 + 0.5) * h[2],
        ]
    };
    let flat = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let values: Vec<f64> = (0..n * n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
            s.eval(node(i, j, k))
        })
        .collect();

    let tol = Tolerance::new(1e-14, 0.0, 200).expect("valid tolerance");
    let mut vertex_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices: Vec<Point3> = Vec::new();
    let mut box_faces: Vec<u8> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();

    for i in 0..n - 1 {
        for j in 0..n - 1 {
            for k in 0..n - 1 {
                let corner = |c: usize| [i + CORNERS[c][0], j + CORNERS[c][1], k + CORNERS[c][2]];
                let mut case = 0usize;
                for c in 0..8 {
                    let [a, b, d] = corner(c);
                    if values[flat(a, b, d)] < 0.0 {
                        case |= 1 << c;
                    }
                }
                if EDGE_TABLE[case] == 0 {
                    continue;
                }
                let mut ids = [usize::MAX; 12];
                for (e, &(c0, c1)) in EDGES.iter().enumerate() {
                    if EDGE_TABLE[case] & (1 << e) == 0 {
                        continue;
                    }
                    let (p0, p1) = (corner(c0), corner(c1));
                    let base = [p0[0].min(p1[0]), p0[1].min(p1[1]), p0[2].min(p1[2])];
                    let axis = (0..3).find(|&a| p0[a] != p1[a]).expect("edge spans one axis");
                    let key = (flat(base[0], base[1], base[2]), axis);
                    let id = match vertex_of.get(&key) {
                        Some(&id) => id,
                        None => {
                            let mut top = base;
                            top[axis] += 1;
                            let x0 = node(base[0], base[1], base[2]);
                            let x1 = node(top[0], top[1], top[2]);
                            let v0 = values[flat(base[0], base[1], base[2])];
                            let v1 = values[flat(top[0], top[1], top[2])];
                            let at = |t: f64| -> Point3 {
                                [x0[0] + t * (x1[0] - x0[0]), x0[1] + t * (x1[1] - x0[1]), x0[2] + t * (x1[2] - x0[2])]
                            };
                            let t = if v0 == 0.0 {
                                0.0
                            } else if v1 == 0.0 {
                                1.0
                            } else {
                                bisect(|t| s.eval(at(t)), 0.0, 1.0, &tol)?
                            };
                            let x = s.newton_step(at(t));
                            let mut faces = 0u8;
                            for a in 0..3 {
                                if a == axis {
                                    continue;
                                }
                                if base[a] == 0 {
                                    faces |= 1 << (2 * a);
                                }
                                if base[a] == n - 1 {
                                    faces |= 1 << (2 * a + 1);
                                }
                            }
                            let id = vertices.len();
                            vertices.push(x);
                            box_faces.push(faces);
                            vertex_of.insert(key, id);
                            id
                        }
                    };
                    ids[e] = id;
                }
                for tri in TRI_TABLE[case].chunks(3) {
                    if tri[0] < 0 {
                        break;
                    }
                    triangles.push([ids[tri[0] as usize], ids[tri[1] as usize], ids[tri[2] as usize]]);
                }
            }
        }
    }
    if triangles.is_empty() {
        return Err(Error::EmptyLevelSet);
    }
    let metadata = MeshMetadata {
        surface: "level-set".into(),
        example: format!("sp:{}", s.p),
        grid: format!("{n}^3 in [{:?}, {:?}]", bounds.lo, bounds.hi),
    };
    let mesh = MeshBuffer::from_parts(vertices, triangles, metadata)?;
    Ok(LevelSetMesh { mesh, box_faces })
}

/// Candidate isometries of `L³` for the symmetry test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Isometry {
    /// `(x, y, t) ↦ (y, x, t)`.
    Swap,
    /// `v ↦ 2c − v`.
    PointReflection { center: Point3 },
    /// Reflection in the plane `v[axis] = offset`.
    CoordinateReflection { axis: usize, offset: f64 },
    /// Euclidean half-turn about the line `point + s·direction`.
    HalfTurn { point: Point3, direction: Point3 },
}

impl Isometry {
    pub fn apply(&self, v: Point3) -> Point3 {
        match *self {
            Isometry::Swap => [v[1], v[0], v[2]],
            Isometry::PointReflection { center: c } => [2.0 * c[0] - v[0], 2.0 * c[1] - v[1], 2.0 * c[2] - v[2]],
            Isometry::CoordinateReflection { axis, offset } => {
                let mut w = v;
                w[axis] = 2.0 * offset - v[axis];
                w
            }
            Isometry::HalfTurn { point: a, direction: d } => {
                let dd = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                let r = [v[0] - a[0], v[1] - a[1], v[2] - a[2]];
                let s = (r[0] * d[0] + r[1] * d[1] + r[2] * d[2]) / dd;
                let foot = [a[0] + s * d[0], a[1] + s * d[1], a[2] + s * d[2]];
                [2.0 * foot[0] - v[0], 2.0 * foot[1] - v[1], 2.0 * foot[2] - v[2]]
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryResult {
    pub pass: bool,
    pub max_residual: f64,
}

pub const SYMMETRY_TOL: f64 = 1e-6;

pub fn sp_symmetry_test(s: &SpSurface, candidate: Isometry, samples: &[Point3]) -> SymmetryResult {
    let max_residual = samples.iter().map(|&v| s.eval(candidate.apply(v)).abs()).fold(0.0, f64::max);
    SymmetryResult { pass: max_residual < SYMMETRY_TOL, max_residual }
}

/// Random points of the box projected onto the surface.
pub fn surface_samples(s: &SpSurface, bounds: Aabb, count: usize, seed: u64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 100 * count {
        attempts += 1;
        let x = [0, 1, 2].map(|a| rng.gen_range(bounds.lo[a]..bounds.hi[a]));
        if let Some(y) = s.project(x) {
            out.push(y);
        }
    }
    out
}

/// A numerically found line `point + s·direction` with `direction[2] = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineCandidate {
    pub point: Point3,
    pub direction: Point3,
    pub residual: f64,
}

/// Half-length of the searched lines.
pub const LINE_HALF_LENGTH: f64 = 4.0 * std::f64::consts::PI;

/// `max |F(a + s·d)|` over `s ∈ [−half, half]`, sampled at 2001 points.
pub fn line_residual(s: &SpSurface, a: Point3, d: Point3, half: f64) -> f64 {
    let m = 2000;
    (0..=m)
        .map(|j| {
            let t = -half + 2.0 * half * j as f64 / m as f64;
            s.eval([a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]]).abs()
        })
        .fold(0.0, f64::max)
}

fn direction(phi: f64) -> Point3 {
    [phi.cos(), phi.sin(), 1.0]
}

fn sq_objective(s: &SpSurface, x: &[f64; 4], half: f64) -> f64 {
    let d = direction(x[3]);
    let m = 128;
    (0..=m)
        .map(|j| {
            let t = -half + 2.0 * half * j as f64 / m as f64;
            s.eval([x[0] + t * d[0], x[1] + t * d[1], x[2] + t * d[2]]).powi(2)
        })
        .sum::<f64>()
        / (m + 1) as f64
}

fn nelder_mead(f: impl Fn(&[f64; 4]) -> f64, x0: [f64; 4], step: f64, iters: usize) -> [f64; 4] {
    let mut simplex: Vec<([f64; 4], f64)> = (0..5)
        .map(|k| {
            let mut x = x0;
            if k > 0 {
                x[k - 1] += step;
            }
            (x, f(&x))
        })
        .collect();
    let comb = |a: &[f64; 4], b: &[f64; 4], t: f64| -> [f64; 4] { std::array::from_fn(|i| a[i] + t * (b[i] - a[i])) };
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let centroid: [f64; 4] = std::array::from_fn(|i| simplex[..4].iter().map(|v| v.0[i]).sum::<f64>() / 4.0);
        let worst = simplex[4];
        let refl = comb(&centroid, &worst.0, -1.0);
        let fr = f(&refl);
        if fr < simplex[0].1 {
            let exp = comb(&centroid, &worst.0, -2.0);
            let fe = f(&exp);
            simplex[4] = if fe < fr { (exp, fe) } else { (refl, fr) };
        } else if fr < simplex[3].1 {
            simplex[4] = (refl, fr);
        } else {
            let con = comb(&centroid, &worst.0, 0.5);
            let fc = f(&con);
            if fc < worst.1 {
                simplex[4] = (con, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    v.0 = comb(&best, &v.0, 0.5);
                    v.1 = f(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0].0
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let m = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        x[row] = (b[row] - (row + 1..4).map(|k| a[row][k] * x[k]).sum::<f64>()) / a[row][row];
    }
    Some(x)
}

/// Levenberg–Marquardt on the sampled residuals along the line.
fn polish(s: &SpSurface, mut x: [f64; 4], half: f64) -> [f64; 4] {
    let m = 256;
    let ts: Vec<f64> = (0..=m).map(|j| -half + 2.0 * half * j as f64 / m as f64).collect();
    let mut lambda = 1e-3;
    let mut cost = sq_objective(s, &x, half);
    for _ in 0..100 {
        let d = direction(x[3]);
        let dd = [-x[3].sin(), x[3].cos(), 0.0];
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for &t in &ts {
            let pt = [x[0] + t * d[0], x[1] + t * d[1], x[2] + t * d[2]];
            let r = s.eval(pt);
            let g = s.gradient(pt);
            let row = [g[0], g[1], g[2], t * (g[0] * dd[0] + g[1] * dd[1])];
            for i in 0..4 {
                jtr[i] += row[i] * r;
                for k in 0..4 {
                    jtj[i][k] += row[i] * row[k];
                }
            }
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj;
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += lambda * (1.0 + jtj[i][i]);
            }
            let Some(step) = solve4(a, jtr.map(|v| -v)) else { break };
            let trial: [f64; 4] = std::array::from_fn(|i| x[i] + step[i]);
            let c = sq_objective(s, &trial, half);
            if c < cost {
                x = trial;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || cost < 1e-30 {
            break;
        }
    }
    x
}

/// Multi-start search for lightlike lines near the seeds. Each start runs
/// Nelder–Mead with a growing line length, then a least-squares polish.
pub fn sp_lightlike_line_search(s: &SpSurface, seeds: &[Point3], tol: f64) -> Vec<LineCandidate> {
    let starts: Vec<(Point3, f64)> = seeds
        .iter()
        .flat_map(|&a| (0..16).map(move |k| (a, std::f64::consts::TAU * k as f64 / 16.0)))
        .collect();
    let found: Vec<LineCandidate> = starts
        .par_iter()
        .map(|&(a, phi)| {
            let mut x = [a[0], a[1], a[2], phi];
            for half in [0.5, 1.0, 2.0, 4.0, LINE_HALF_LENGTH] {
                x = nelder_mead(|v| sq_objective(s, v, half), x, 0.1, 400);
            }
            x = polish(s, x, LINE_HALF_LENGTH);
            let d = direction(x[3]);
            LineCandidate { point: [x[0], x[1], x[2]], direction: d, residual: line_residual(s, [x[0], x[1], x[2]], d, LINE_HALF_LENGTH) }
        })
        .collect();
    let mut out: Vec<LineCandidate> = Vec::new();
    for c in found.into_iter().filter(|c| c.residual < tol) {
        let dup = out.iter().any(|o| {
            let same_dir = (o.direction[0] - c.direction[0]).abs() < 1e-6 && (o.direction[1] - c.direction[1]).abs() < 1e-6;
            let r = [c.point[0] - o.point[0], c.point[1] - o.point[1], c.point[2] - o.point[2]];
            let d = o.direction;
            let s = (r[0] * d[0] + r[1] * d[1] + r[2] * d[2]) / 2.0;
            let off = [r[0] - s * d[0], r[1] - s * d[1], r[2] - s * d[2]];
            same_dir && (off[0] * off[0] + off[1] * off[1] + off[2] * off[2]).sqrt() < 1e-4
        });
        if !dup {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn origin_is_on_every_surface() {
        for p in [FRAC_1_SQRT_2, 1.0 / 3.0, 0.2, 0.9] {
            assert!(SpSurface::new(p).unwrap().eval([0.0; 3]).abs() < 1e-15);
        }
        let s = SpSurface::new(1.0 / 3.0).unwrap();
        assert!((s.p * s.p - 1.0 / 9.0).abs() < 1e-16 && (s.q * s.q - 8.0 / 9.0).abs() < 1e-15);
        assert!(SpSurface::new(1.0).is_err());
    }

    #[test]
    fn exact_lines_through_origin() {
        for p in [FRAC_1_SQRT_2, 1.0 / 3.0] {
            let s = SpSurface::new(p).unwrap();
            assert!(line_residual(&s, [0.0; 3], [s.p, s.q, 1.0], LINE_HALF_LENGTH) < 1e-14);
        }
    }

    #[test]
    fn swap_and_point_symmetry() {
        let b = Aabb::cube(2.0 * PI);
        let s = SpSurface::new(FRAC_1_SQRT_2).unwrap();
        let pts = surface_samples(&s, b, 200, 1);
        assert_eq!(pts.len(), 200);
        assert!(sp_symmetry_test(&s, Isometry::Swap, &pts).pass);
        let s3 = SpSurface::new(1.0 / 3.0).unwrap();
        let pts3 = surface_samples(&s3, b, 200, 1);
        let r = sp_symmetry_test(&s3, Isometry::Swap, &pts3);
        assert!(!r.pass && r.max_residual > 1e-3);
        assert!(sp_symmetry_test(&s3, Isometry::PointReflection { center: [0.0; 3] }, &pts3).pass);
    }

    #[test]
    fn coarse_mesh_is_watertight_and_on_surface() {
        let s = SpSurface::new(1.0 / 3.0).unwrap();
        let m = sp_sample(&s, Aabb::cube(2.0 * PI), 24).unwrap();
        assert_eq!(m.interior_defects(), 0);
        assert!(m.max_residual(&s) < 1e-6);
    }

    #[test]
    fn empty_box() {
        let s = SpSurface::new(0.5).unwrap();
        // Near the origin along t only: F < 0 there.
        let b = Aabb { lo: [-0.01, -0.01, 3.0], hi: [0.01, 0.01, 3.1] };
        assert!(matches!(sp_sample(&s, b, 8), Err(Error::EmptyLevelSet)));
        assert!(sp_sample(&s, b, 4).is_err());
    }

    #[test]
    fn half_turn_fixes_its_axis() {
        let h = Isometry::HalfTurn { point: [1.0, 2.0, 3.0], direction: [0.6, 0.8, 1.0] };
        let v = [1.6, 2.8, 4.0];
        let w = h.apply(v);
        assert!((0..3).all(|i| (w[i] - v[i]).abs() < 1e-15));
    }
}
