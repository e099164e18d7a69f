//! Triangle meshes of a torus over its fundamental domain, projected to R³.
//!
//! Projections are for visualization only.

use hamstat::algebra::Vec4;
use hamstat::verify::Domain;
use hamstat::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("invalid projection {0:?} (expected drop:1..4 or stereo)")]
    BadProjection(String),
    #[error("grid size must be at least 3, got {0}")]
    GridTooSmall(usize),
    #[error("stereographic projection needs X away from the origin; |X| = {0:.3e}")]
    NearOrigin(f64),
    #[error("X/|X| reaches the projection pole at vertex {0}")]
    AtPole(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Drop coordinate `k` (1-based).
    Drop(usize),
    /// `X/|X|` on S³, then stereographic projection from `(0, 0, 0, 1)`.
    Stereo,
}

impl FromStr for Projection {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "stereo" {
            return Ok(Projection::Stereo);
        }
        match s.strip_prefix("drop:").and_then(|k| k.parse::<usize>().ok()) {
            Some(k @ 1..=4) => Ok(Projection::Drop(k)),
            _ => Err(MeshError::BadProjection(s.to_string())),
        }
    }
}

impl std::fmt::Display for Projection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Projection::Drop(k) => write!(f, "drop:{k}"),
            Projection::Stereo => write!(f, "stereo"),
        }
    }
}

/// Relative size below which `|X|` counts as hitting the origin.
const ORIGIN_TOL: f64 = 1e-6;
/// Distance from the pole below which stereographic projection is refused.
const POLE_TOL: f64 = 1e-9;

impl Projection {
    pub fn apply(&self, points: &[Vec4]) -> Result<Vec<[f64; 3]>, MeshError> {
        match *self {
            Projection::Drop(k) => Ok(points
                .iter()
                .map(|p| {
                    let mut out = [0.0; 3];
                    let mut j = 0;
                    for i in (0..4).filter(|&i| i != k - 1) {
                        out[j] = p[i];
                        j += 1;
                    }
                    out
                })
                .collect()),
            Projection::Stereo => {
                let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
                let min = points.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
                if !(min > ORIGIN_TOL * scale.max(f64::MIN_POSITIVE)) {
                    return Err(MeshError::NearOrigin(min));
                }
                points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let q = p / p.norm();
                        let d = 1.0 - q[3];
                        if d < POLE_TOL {
                            return Err(MeshError::AtPole(i));
                        }
                        Ok([q[0] / d, q[1] / d, q[2] / d])
                    })
                    .collect()
            }
        }
    }
}

/// Metadata written into every mesh header.
#[derive(Debug, Clone, Serialize)]
pub struct MeshHeader {
    pub spec: String,
    pub spec_hash: String,
    pub projection: String,
    pub lambda: String,
    pub grid: usize,
}

/// `grid²` vertices and `2·grid²` triangles on the identified grid.
#[derive(Debug, Clone, Serialize)]
pub struct Mesh {
    pub header: MeshHeader,
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

/// Samples `x` on `domain.grid(n)`, centers the samples at their mean and
/// projects them.
pub fn build_mesh<F: Fn(C) -> Vec4 + Sync>(
    x: &F,
    domain: &Domain,
    n: usize,
    projection: Projection,
    header: MeshHeader,
) -> Result<Mesh, MeshError> {
    if n < 3 {
        return Err(MeshError::GridTooSmall(n));
    }
    let points: Vec<Vec4> =
        domain.grid(n).into_par_iter().flat_map_iter(|row| row.into_iter().map(x).collect::<Vec<_>>()).collect();
    let mean = points.iter().sum::<Vec4>() / points.len() as f64;
    let centered: Vec<Vec4> = points.iter().map(|p| p - mean).collect();
    let vertices = projection.apply(&centered)?;
    // Row-major index: row j (along e2), column i (along e1).
    let v = |i: usize, j: usize| (j % n) * n + (i % n);
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
            triangles.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    Ok(Mesh { header, vertices, triangles })
}

impl Mesh {
    /// `V − E + F` of the closed mesh.
    #[cfg(test)]
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::HashSet::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        self.vertices.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    fn header_lines(&self) -> Vec<String> {
        let h = &self.header;
        vec![
            "hamstat mesh".to_string(),
            format!("spec: {}", h.spec),
            format!("spec-hash: {}", h.spec_hash),
            format!("projection: {}", h.projection),
            format!("lambda: {}", h.lambda),
            format!("grid: {}", h.grid),
        ]
    }

    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for line in self.header_lines() {
            let _ = writeln!(out, "# {line}");
        }
        for p in &self.vertices {
            let _ = writeln!(out, "v {:.12e} {:.12e} {:.12e}", p[0], p[1], p[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        out
    }

    pub fn to_ply(&self) -> String {
        let mut out = String::from("ply\nformat ascii 1.0\n");
        for line in self.header_lines() {
            let _ = writeln!(out, "comment {line}");
        }
        let _ = writeln!(out, "element vertex {}", self.vertices.len());
        out.push_str("property double x\nproperty double y\nproperty double z\n");
        let _ = writeln!(out, "element face {}", self.triangles.len());
        out.push_str("property list uchar int vertex_indices\nend_header\n");
        for p in &self.vertices {
            let _ = writeln!(out, "{:.12e} {:.12e} {:.12e}", p[0], p[1], p[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite mesh")
    }
}
