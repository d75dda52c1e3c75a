//! Triangle meshes, polar parameter grids and OBJ input/output.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ComplexVal;

/// Triangles with area at or below this are dropped.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

/// Polar sampling of the parameter disk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_radial: usize,
    pub n_angular: usize,
    pub max_radius: f64,
}

impl GridSpec {
    pub fn new(n_radial: usize, n_angular: usize, max_radius: f64) -> Result<Self> {
        if n_radial < 2 || n_angular < 3 {
            return Err(Error::InvalidInput(format!("grid {n_radial}x{n_angular} is too coarse")));
        }
        if !(max_radius > 0.0 && max_radius <= 1.0 - 1e-6) {
            return Err(Error::InvalidInput(format!("clip radius {max_radius} must lie in (0, 1 - 1e-6]")));
        }
        Ok(Self { n_radial, n_angular, max_radius })
    }

    /// Parses `RxA` together with a clip radius.
    pub fn parse(spec: &str, max_radius: f64) -> Result<Self> {
        let (r, a) = spec
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::InvalidInput(format!("grid `{spec}` is not of the form RxA")))?;
        let r = usize::from_str(r.trim()).map_err(|_| Error::InvalidInput(format!("bad radial count in `{spec}`")))?;
        let a = usize::from_str(a.trim()).map_err(|_| Error::InvalidInput(format!("bad angular count in `{spec}`")))?;
        Self::new(r, a, max_radius)
    }

    /// Centre first, then rings from the inside out.
    pub fn points(&self) -> Vec<ComplexVal> {
        let mut out = Vec::with_capacity(self.n_radial * self.n_angular + 1);
        out.push(ComplexVal::new(0.0, 0.0));
        for i in 1..=self.n_radial {
            let r = self.max_radius * i as f64 / self.n_radial as f64;
            for j in 0..self.n_angular {
                out.push(ComplexVal::from_polar(r, std::f64::consts::TAU * j as f64 / self.n_angular as f64));
            }
        }
        out
    }

    /// Fan triangulation of [`GridSpec::points`].
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        let a = self.n_angular;
        let idx = |i: usize, j: usize| 1 + (i - 1) * a + j % a;
        let mut out = Vec::new();
        for j in 0..a {
            out.push([0, idx(1, j), idx(1, j + 1)]);
        }
        for i in 1..self.n_radial {
            for j in 0..a {
                out.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                out.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        out
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{} clip {}", self.n_radial, self.n_angular, self.max_radius)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshMetadata {
    pub surface: String,
    pub example: String,
    pub grid: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeshBuffer {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub metadata: MeshMetadata,
}

pub fn triangle_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
}

impl MeshBuffer {
    /// Keeps the triangles whose indices are in range and whose area exceeds
    /// [`MIN_TRIANGLE_AREA`].
    pub fn from_parts(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>, metadata: MeshMetadata) -> Result<Self> {
        let n = vertices.len();
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidInput(format!("triangle {t:?} indexes past {n} vertices")));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvariantViolated("non-finite mesh vertex".into()));
        }
        let triangles = triangles
            .into_iter()
            .filter(|t| triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) > MIN_TRIANGLE_AREA)
            .collect();
        Ok(Self { vertices, triangles, metadata })
    }

    /// Number of undirected edges used by other than exactly two triangles,
    /// ignoring edges for which `skip` returns true.
    pub fn non_manifold_edges(&self, skip: impl Fn(usize, usize) -> bool) -> usize {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        count.iter().filter(|(&(a, b), &c)| c != 2 && !skip(a, b)).count()
    }
}

/// Renders the mesh as ASCII OBJ.
pub fn obj_string(mesh: &MeshBuffer) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# minmax mesh");
    let _ = writeln!(s, "# surface: {}", mesh.metadata.surface);
    let _ = writeln!(s, "# example: {}", mesh.metadata.example);
    let _ = writeln!(s, "# grid: {}", mesh.metadata.grid);
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

pub fn write_obj(mesh: &MeshBuffer, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, obj_string(mesh))?;
    Ok(())
}

/// Parses the subset of OBJ produced by [`write_obj`].
pub fn parse_obj(text: &str) -> Result<MeshBuffer> {
    let mut mesh = MeshBuffer::default();
    for line in text.lines() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let xs = it
                    .map(f64::from_str)
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::InvalidInput(format!("bad vertex line `{line}`: {e}")))?;
                if xs.len() != 3 {
                    return Err(Error::InvalidInput(format!("bad vertex line `{line}`")));
                }
                mesh.vertices.push([xs[0], xs[1], xs[2]]);
            }
            Some("f") => {
                let ix = it
                    .map(|t| t.split('/').next().unwrap_or("").parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::InvalidInput(format!("bad face line `{line}`: {e}")))?;
                if ix.len() != 3 || ix.contains(&0) {
                    return Err(Error::InvalidInput(format!("bad face line `{line}`")));
                }
                mesh.triangles.push([ix[0] - 1, ix[1] - 1, ix[2] - 1]);
            }
            Some(c) if c.starts_with('#') => {
                let rest = line.trim_start_matches('#').trim();
                if let Some((k, v)) = rest.split_once(": ") {
                    match k {
                        "surface" => mesh.metadata.surface = v.to_string(),
                        "example" => mesh.metadata.example = v.to_string(),
                        "grid" => mesh.metadata.grid = v.to_string(),
                        _ => {}
                    }
                }
            }
            _ => {}
        }
    }
    Ok(mesh)
}

pub fn read_obj(path: impl AsRef<Path>) -> Result<MeshBuffer> {
    parse_obj(&fs::read_to_string(path)?)
}
