//! Simplicial meshes in one and two dimensions, nodal fields, per-element
//! gradients and the discrete Orlicz modulars and Luxemburg norms.
//!
//! Zeroth-order integrals use lumped vertex masses, gradient integrals the
//! exact one-point rule for piecewise-linear fields.

use std::fmt::Write as _;
use std::fs;
use std::ops::{Deref, DerefMut};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{compensated_sum, sci17};
use crate::source::Point;
use crate::young::YoungFunction;

pub const MAX_VERTICES: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid mesh shape: {0}")]
    InvalidShape(String),
    #[error("resolution would produce {0} vertices (limit {MAX_VERTICES})")]
    TooLarge(usize),
    #[error("element {0} is degenerate")]
    Degenerate(usize),
    #[error("field has {got} values, mesh has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field value at vertex {0} is not finite")]
    NonFinite(usize),
    #[error("point ({}, {}) lies outside the mesh", .0[0], .0[1])]
    OutsideDomain(Point),
    #[error("malformed mesh file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Geometry to mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Interval {
        a: f64,
        b: f64,
    },
    Rectangle {
        ax: f64,
        bx: f64,
        ay: f64,
        by: f64,
    },
    /// Regular polygon approximating a disk. `sides` defaults to the number
    /// needed for boundary edges of length about `h`.
    Disk {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sides: Option<usize>,
        #[serde(default)]
        center: Point,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    #[serde(flatten)]
    pub shape: Shape,
    pub h: f64,
}

impl MeshSpec {
    pub fn build(&self) -> Result<Mesh, MeshError> {
        build_mesh(&self.shape, self.h)
    }
}

/// Nodal values of a piecewise-linear function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field(pub Vec<f64>);

impl Deref for Field {
    type Target = Vec<f64>;
    fn deref(&self) -> &Vec<f64> {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut Vec<f64> {
        &mut self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Field(v)
    }
}

impl Field {
    pub fn zeros(n: usize) -> Self {
        Field(vec![0.0; n])
    }

    pub fn sup_norm(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(value, index)` of the largest entry.
    pub fn argmax(&self) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, &v) in self.iter().enumerate() {
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field(self.iter().map(|v| c * v).collect())
    }

    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        Field(self.iter().zip(other.iter()).map(|(x, y)| x + a * y).collect())
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.iter()
            .zip(other.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modular {
    /// `sum_v m_v G(|u_v|)`
    #[serde(rename = "Phi_G")]
    PhiG,
    /// `sum_T |T| G(|grad u|_T)`
    #[serde(rename = "Phi_1G")]
    Phi1G,
}

/// A conforming simplicial mesh. Points are stored in 2D; interval meshes
/// keep `y = 0`.
#[derive(Debug)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<Point>,
    cells: Vec<usize>,
    boundary: Vec<bool>,
    measures: Vec<f64>,
    masses: Vec<f64>,
    basis: Vec<Point>,
    star_offsets: Vec<usize>,
    star: Vec<usize>,
    shape: Option<Shape>,
    locator: OnceLock<Locator>,
    adjacency: OnceLock<(Vec<usize>, Vec<usize>)>,
}

impl Mesh {
    /// Builds a mesh from raw simplices, `dim + 1` vertex indices each.
    /// Boundary vertices are those on facets owned by a single element.
    pub fn from_parts(dim: usize, vertices: Vec<Point>, cells: Vec<usize>) -> Result<Mesh, MeshError> {
        if !(dim == 1 || dim == 2) {
            return Err(MeshError::InvalidShape(format!("dimension {dim}")));
        }
        let npc = dim + 1;
        if !cells.len().is_multiple_of(npc) || cells.iter().any(|&c| c >= vertices.len()) {
            return Err(MeshError::Parse("element list does not match the vertex table".into()));
        }
        if vertices.len() > MAX_VERTICES {
            return Err(MeshError::TooLarge(vertices.len()));
        }
        let ne = cells.len() / npc;
        let mut measures = Vec::with_capacity(ne);
        let mut basis = Vec::with_capacity(cells.len());
        for e in 0..ne {
            let c = &cells[e * npc..(e + 1) * npc];
            if dim == 1 {
                let (x0, x1) = (vertices[c[0]][0], vertices[c[1]][0]);
                let len = x1 - x0;
                if len.abs() <= 1e-14 * (x0.abs() + x1.abs()).max(1e-300) {
                    return Err(MeshError::Degenerate(e));
                }
                measures.push(len.abs());
                basis.push([-1.0 / len, 0.0]);
                basis.push([1.0 / len, 0.0]);
            } else {
                let [p0, p1, p2] = [vertices[c[0]], vertices[c[1]], vertices[c[2]]];
                let (e1, e2) = ([p1[0] - p0[0], p1[1] - p0[1]], [p2[0] - p0[0], p2[1] - p0[1]]);
                let det = e1[0] * e2[1] - e1[1] * e2[0];
                let scale = (e1[0] * e1[0] + e1[1] * e1[1]).max(e2[0] * e2[0] + e2[1] * e2[1]);
                if det.abs() <= 1e-12 * scale {
                    return Err(MeshError::Degenerate(e));
                }
                measures.push(0.5 * det.abs());
                // Rows of the inverse Jacobian transpose.
                let g1 = [e2[1] / det, -e2[0] / det];
                let g2 = [-e1[1] / det, e1[0] / det];
                basis.push([-g1[0] - g2[0], -g1[1] - g2[1]]);
                basis.push(g1);
                basis.push(g2);
            }
        }
        let nv = vertices.len();
        let mut masses = vec![0.0; nv];
        let mut counts = vec![0usize; nv + 1];
        for e in 0..ne {
            for &v in &cells[e * npc..(e + 1) * npc] {
                masses[v] += measures[e] / npc as f64;
                counts[v + 1] += 1;
            }
        }
        for i in 0..nv {
            counts[i + 1] += counts[i];
        }
        let star_offsets = counts.clone();
        let mut fill = counts;
        let mut star = vec![0; star_offsets[nv]];
        for e in 0..ne {
            for &v in &cells[e * npc..(e + 1) * npc] {
                star[fill[v]] = e;
                fill[v] += 1;
            }
        }
        let boundary = boundary_flags(dim, nv, &cells);
        Ok(Mesh {
            dim,
            vertices,
            cells,
            boundary,
            measures,
            masses,
            basis,
            star_offsets,
            star,
            shape: None,
            locator: OnceLock::new(),
            adjacency: OnceLock::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.measures.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let npc = self.dim + 1;
        &self.cells[e * npc..(e + 1) * npc]
    }

    /// Gradients of the local hat functions on element `e`.
    pub fn basis_gradients(&self, e: usize) -> &[Point] {
        let npc = self.dim + 1;
        &self.basis[e * npc..(e + 1) * npc]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn element_measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn vertex_masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_measure(&self) -> f64 {
        compensated_sum(self.measures.iter().copied())
    }

    /// Elements containing vertex `v`.
    pub fn star(&self, v: usize) -> &[usize] {
        &self.star[self.star_offsets[v]..self.star_offsets[v + 1]]
    }

    pub fn shape(&self) -> Option<&Shape> {
        self.shape.as_ref()
    }

    /// Longest edge.
    pub fn max_edge(&self) -> f64 {
        let mut h: f64 = 0.0;
        for e in 0..self.n_elements() {
            let c = self.element(e);
            for i in 0..c.len() {
                for j in i + 1..c.len() {
                    h = h.max(dist(self.vertices[c[i]], self.vertices[c[j]]));
                }
            }
        }
        h
    }

    /// Smallest interior angle over all triangles, in degrees (180 in 1D).
    pub fn min_angle_degrees(&self) -> f64 {
        if self.dim == 1 {
            return 180.0;
        }
        let mut best: f64 = 180.0;
        for e in 0..self.n_elements() {
            let c = self.element(e);
            for k in 0..3 {
                let a = self.vertices[c[k]];
                let b = self.vertices[c[(k + 1) % 3]];
                let d = self.vertices[c[(k + 2) % 3]];
                let u = [b[0] - a[0], b[1] - a[1]];
                let w = [d[0] - a[0], d[1] - a[1]];
                let cos = (u[0] * w[0] + u[1] * w[1]) / ((u[0].hypot(u[1])) * (w[0].hypot(w[1])));
                best = best.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        best
    }

    /// Vertex adjacency (vertices sharing an element, including self) as CSR.
    pub fn adjacency(&self) -> (&[usize], &[usize]) {
        let (o, c) = self.adjacency.get_or_init(|| {
            let nv = self.n_vertices();
            let mut offsets = vec![0; nv + 1];
            let mut cols = Vec::new();
            let mut row = Vec::new();
            for v in 0..nv {
                row.clear();
                row.push(v);
                for &e in self.star(v) {
                    row.extend_from_slice(self.element(e));
                }
                row.sort_unstable();
                row.dedup();
                cols.extend_from_slice(&row);
                offsets[v + 1] = cols.len();
            }
            (offsets, cols)
        });
        (o, c)
    }

    pub fn check_field(&self, u: &[f64]) -> Result<(), MeshError> {
        if u.len() != self.n_vertices() {
            return Err(MeshError::LengthMismatch {
                expected: self.n_vertices(),
                got: u.len(),
            });
        }
        match u.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(MeshError::NonFinite(i)),
            None => Ok(()),
        }
    }

    /// Field with `f(x)` at every vertex.
    pub fn field_from(&self, f: impl Fn(Point) -> f64) -> Field {
        Field(self.vertices.iter().map(|&x| f(x)).collect())
    }

    /// Zeroes the boundary entries.
    pub fn apply_dirichlet(&self, u: &mut [f64]) {
        for (v, b) in self.boundary.iter().enumerate() {
            if *b {
                u[v] = 0.0;
            }
        }
    }

    /// Gradient of the interpolant on element `e`.
    pub fn element_gradient(&self, u: &[f64], e: usize) -> Point {
        let mut g = [0.0, 0.0];
        for (&v, b) in self.element(e).iter().zip(self.basis_gradients(e)) {
            g[0] += u[v] * b[0];
            g[1] += u[v] * b[1];
        }
        g
    }

    /// Measure-weighted average of the adjacent element gradients at vertex `v`.
    pub fn vertex_gradient(&self, u: &[f64], v: usize) -> Point {
        let mut g = [0.0, 0.0];
        let mut w = 0.0;
        for &e in self.star(v) {
            let ge = self.element_gradient(u, e);
            let m = self.measures[e];
            g[0] += m * ge[0];
            g[1] += m * ge[1];
            w += m;
        }
        [g[0] / w, g[1] / w]
    }

    fn locator(&self) -> &Locator {
        self.locator.get_or_init(|| Locator::new(self))
    }

    /// Maps the mesh through `x -> scale * (x - origin)`, keeping every
    /// element whose bounding box overlaps the open box `|x_i| < half_width`
    /// (after mapping), so the result covers the box up to a rim of one
    /// element. Returns the new mesh and, per new vertex, the old index.
    pub fn affine_crop(&self, origin: Point, scale: f64, half_width: f64) -> Result<(Mesh, Vec<usize>), MeshError> {
        let map = |p: Point| [scale * (p[0] - origin[0]), scale * (p[1] - origin[1])];
        let mut new_index = vec![usize::MAX; self.n_vertices()];
        let mut old_of_new = Vec::new();
        let mut cells = Vec::new();
        for e in 0..self.n_elements() {
            let c = self.element(e);
            let overlaps = (0..self.dim).all(|i| {
                let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    let x = map(self.vertices[v])[i];
                    (lo.min(x), hi.max(x))
                });
                hi > -half_width && lo < half_width
            });
            if overlaps {
                for &v in c {
                    if new_index[v] == usize::MAX {
                        new_index[v] = old_of_new.len();
                        old_of_new.push(v);
                    }
                    cells.push(new_index[v]);
                }
            }
        }
        if cells.is_empty() {
            return Err(MeshError::InvalidShape("truncation box contains no element".into()));
        }
        let vertices = old_of_new.iter().map(|&v| map(self.vertices[v])).collect();
        Ok((Mesh::from_parts(self.dim, vertices, cells)?, old_of_new))
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn boundary_flags(dim: usize, nv: usize, cells: &[usize]) -> Vec<bool> {
    let npc = dim + 1;
    let mut facets: Vec<(usize, usize)> = Vec::with_capacity(cells.len());
    for c in cells.chunks(npc) {
        if dim == 1 {
            facets.push((c[0], usize::MAX));
            facets.push((c[1], usize::MAX));
        } else {
            for k in 0..3 {
                let (a, b) = (c[k], c[(k + 1) % 3]);
                facets.push((a.min(b), a.max(b)));
            }
        }
    }
    facets.sort_unstable();
    let mut flags = vec![false; nv];
    let mut i = 0;
    while i < facets.len() {
        let mut j = i + 1;
        while j < facets.len() && facets[j] == facets[i] {
            j += 1;
        }
        if j - i == 1 {
            flags[facets[i].0] = true;
            if facets[i].1 != usize::MAX {
                flags[facets[i].1] = true;
            }
        }
        i = j;
    }
    flags
}

/// Meshes `shape` with target edge length `h`.
///
/// Intervals are split uniformly; rectangles use the crossed pattern (four
/// triangles per cell around a center node); disks use a fan around the
/// center plus concentric rings, the outermost ring being the polygon.
pub fn build_mesh(shape: &Shape, h: f64) -> Result<Mesh, MeshError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(MeshError::InvalidShape(format!("h = {h} must be positive")));
    }
    let guard = |count: f64| -> Result<usize, MeshError> {
        if !(count <= MAX_VERTICES as f64) {
            Err(MeshError::TooLarge(if count.is_finite() {
                count as usize
            } else {
                usize::MAX
            }))
        } else {
            Ok(count as usize)
        }
    };
    let mut mesh = match *shape {
        Shape::Interval { a, b } => {
            if !(b > a) {
                return Err(MeshError::InvalidShape("interval needs a < b".into()));
            }
            let n = guard(((b - a) / h - 1e-9).ceil().max(1.0))?;
            guard(n as f64 + 1.0)?;
            let vertices = (0..=n)
                .map(|i| [if i == n { b } else { a + (b - a) * i as f64 / n as f64 }, 0.0])
                .collect();
            let cells = (0..n).flat_map(|i| [i, i + 1]).collect();
            Mesh::from_parts(1, vertices, cells)?
        }
        Shape::Rectangle { ax, bx, ay, by } => {
            if !(bx > ax && by > ay) {
                return Err(MeshError::InvalidShape("rectangle needs positive extents".into()));
            }
            let nx = ((bx - ax) / h - 1e-9).ceil().max(1.0);
            let ny = ((by - ay) / h - 1e-9).ceil().max(1.0);
            guard((nx + 1.0) * (ny + 1.0) + nx * ny)?;
            let (nx, ny) = (nx as usize, ny as usize);
            let coord = |a: f64, b: f64, n: usize, i: usize| if i == n { b } else { a + (b - a) * i as f64 / n as f64 };
            let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
            for j in 0..=ny {
                for i in 0..=nx {
                    vertices.push([coord(ax, bx, nx, i), coord(ay, by, ny, j)]);
                }
            }
            let corner = |i: usize, j: usize| j * (nx + 1) + i;
            let mut cells = Vec::with_capacity(12 * nx * ny);
            for j in 0..ny {
                for i in 0..nx {
                    let c = vertices.len();
                    let (x0, x1) = (vertices[corner(i, j)][0], vertices[corner(i + 1, j)][0]);
                    let (y0, y1) = (vertices[corner(i, j)][1], vertices[corner(i, j + 1)][1]);
                    vertices.push([0.5 * (x0 + x1), 0.5 * (y0 + y1)]);
                    let ring = [corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1)];
                    for k in 0..4 {
                        cells.extend_from_slice(&[ring[k], ring[(k + 1) % 4], c]);
                    }
                }
            }
            Mesh::from_parts(2, vertices, cells)?
        }
        Shape::Disk { radius, sides, center } => {
            if !(radius > 0.0) {
                return Err(MeshError::InvalidShape("disk needs a positive radius".into()));
            }
            let tau = std::f64::consts::TAU;
            let n_sides = match sides {
                Some(s) if s >= 3 => s,
                Some(s) => return Err(MeshError::InvalidShape(format!("{s} sides"))),
                None => ((tau * radius / h).round() as usize).max(8),
            };
            let side_len = 2.0 * radius * (std::f64::consts::PI / n_sides as f64).sin();
            let he = h.min(side_len);
            let rings = guard((radius / he).ceil().max(1.0))?;
            guard(std::f64::consts::PI * (radius / he + 1.0).powi(2) * 1.3)?;
            build_disk(radius, center, n_sides, side_len, he, rings)?
        }
    };
    mesh.shape = Some(shape.clone());
    Ok(mesh)
}

fn build_disk(
    radius: f64,
    center: Point,
    n_sides: usize,
    side_len: f64,
    he: f64,
    rings: usize,
) -> Result<Mesh, MeshError> {
    let tau = std::f64::consts::TAU;
    let mut vertices = vec![center];
    // Ring k: (first vertex index, count, angles).
    let mut ring_data: Vec<(usize, Vec<f64>)> = Vec::with_capacity(rings);
    for k in 1..=rings {
        let start = vertices.len();
        let mut angles = Vec::new();
        if k < rings {
            // Scaled copy of the boundary polygon, sampled at uniform angles.
            let r = radius * k as f64 / rings as f64;
            let wedge = tau / n_sides as f64;
            let n = ((tau * r / he).round() as usize).max(6);
            for i in 0..n {
                let th = tau * i as f64 / n as f64;
                let rr = r * (0.5 * wedge).cos() / (th.rem_euclid(wedge) - 0.5 * wedge).cos();
                angles.push(th);
                vertices.push([center[0] + rr * th.cos(), center[1] + rr * th.sin()]);
            }
        } else {
            let s = ((side_len / he).round() as usize).max(1);
            for c in 0..n_sides {
                let (t0, t1) = (tau * c as f64 / n_sides as f64, tau * (c + 1) as f64 / n_sides as f64);
                let (p0, p1) = ([t0.cos(), t0.sin()], [t1.cos(), t1.sin()]);
                for j in 0..s {
                    let w = j as f64 / s as f64;
                    let q = [
                        radius * ((1.0 - w) * p0[0] + w * p1[0]),
                        radius * ((1.0 - w) * p0[1] + w * p1[1]),
                    ];
                    angles.push(q[1].atan2(q[0]).rem_euclid(tau));
                    vertices.push([center[0] + q[0], center[1] + q[1]]);
                }
            }
            // The first corner sits at angle 0; keep it there after rem_euclid.
            angles[0] = 0.0;
        }
        ring_data.push((start, angles));
    }
    let mut cells = Vec::new();
    let (s1, a1) = &ring_data[0];
    for i in 0..a1.len() {
        cells.extend_from_slice(&[0, s1 + i, s1 + (i + 1) % a1.len()]);
    }
    for w in ring_data.windows(2) {
        let (sa, aa) = (&w[0].0, &w[0].1);
        let (sb, ab) = (&w[1].0, &w[1].1);
        let (na, nb) = (aa.len(), ab.len());
        let angle = |v: &[f64], i: usize| if i == v.len() { tau } else { v[i] };
        let (mut i, mut j) = (0, 0);
        while i < na || j < nb {
            let advance_inner = j == nb || (i < na && angle(aa, i + 1) <= angle(ab, j + 1));
            if advance_inner {
                cells.extend_from_slice(&[sa + i, sa + (i + 1) % na, sb + j % nb]);
                i += 1;
            } else {
                cells.extend_from_slice(&[sa + i % na, sb + (j + 1) % nb, sb + j]);
                j += 1;
            }
        }
    }
    Mesh::from_parts(2, vertices, cells)
}

/// Exact per-element gradients of the piecewise-linear interpolant.
pub fn gradient_per_element(mesh: &Mesh, u: &[f64]) -> Result<Vec<Point>, MeshError> {
    mesh.check_field(u)?;
    Ok((0..mesh.n_elements()).map(|e| mesh.element_gradient(u, e)).collect())
}

/// Measure-weighted vertex averages of the element gradients.
pub fn vertex_gradients(mesh: &Mesh, u: &[f64]) -> Result<Vec<Point>, MeshError> {
    mesh.check_field(u)?;
    Ok((0..mesh.n_vertices()).map(|v| mesh.vertex_gradient(u, v)).collect())
}

/// Weights and magnitudes `(w_i, a_i)` with `modular = sum w_i G(a_i)`.
fn modular_terms(mesh: &Mesh, u: &[f64], which: Modular) -> (Vec<f64>, Vec<f64>) {
    match which {
        Modular::PhiG => (mesh.masses.clone(), u.iter().map(|v| v.abs()).collect()),
        Modular::Phi1G => (
            mesh.measures.clone(),
            (0..mesh.n_elements())
                .map(|e| {
                    let g = mesh.element_gradient(u, e);
                    g[0].hypot(g[1])
                })
                .collect(),
        ),
    }
}

fn weighted_modular(yf: &YoungFunction, w: &[f64], a: &[f64], s: f64) -> f64 {
    compensated_sum(w.iter().zip(a).map(|(w, a)| w * yf.big_g(s * a)))
}

/// Discrete `Phi_G` or `Phi_1G`.
pub fn modular(mesh: &Mesh, u: &[f64], yf: &YoungFunction, which: Modular) -> Result<f64, MeshError> {
    mesh.check_field(u)?;
    let (w, a) = modular_terms(mesh, u, which);
    Ok(weighted_modular(yf, &w, &a, 1.0))
}

/// Luxemburg norm `inf { l > 0 : modular(u / l) <= 1 }` by bisection.
///
/// The returned value always satisfies `modular(u / norm) <= 1`; the target
/// sits a few ulps below 1 so this survives the rounding of `u / norm`.
pub fn luxemburg_norm(mesh: &Mesh, u: &[f64], yf: &YoungFunction, which: Modular) -> Result<f64, MeshError> {
    mesh.check_field(u)?;
    let (w, a) = modular_terms(mesh, u, which);
    let amax = a.iter().fold(0.0f64, |m, v| m.max(*v));
    if amax == 0.0 {
        return Ok(0.0);
    }
    let target = 1.0 - 8.0 * f64::EPSILON;
    let f = |l: f64| weighted_modular(yf, &w, &a, 1.0 / l);
    let mut hi = amax;
    while f(hi) > target {
        hi *= 2.0;
    }
    let mut lo = hi;
    loop {
        lo *= 0.5;
        if f(lo) > target {
            break;
        }
        hi = lo;
        if lo < f64::MIN_POSITIVE {
            return Ok(hi);
        }
    }
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpolation {
    pub values: Vec<f64>,
    /// Indices of points that were outside the mesh and got clamped.
    pub clamped: Vec<usize>,
}

/// Piecewise-linear interpolation at arbitrary points.
///
/// Points within `1e-12` (relative to the mesh diameter) of the mesh count as
/// inside; points within `1e-2` diameters are clamped to the nearest element
/// and flagged; anything farther is an error.
pub fn interpolate(mesh: &Mesh, u: &[f64], points: &[Point]) -> Result<Interpolation, MeshError> {
    mesh.check_field(u)?;
    let loc = mesh.locator();
    let mut values = Vec::with_capacity(points.len());
    let mut clamped = Vec::new();
    for (k, &x) in points.iter().enumerate() {
        let (e, bary, d) = loc.locate(mesh, x);
        if d > 1e-2 * loc.diameter {
            return Err(MeshError::OutsideDomain(x));
        }
        if d > 1e-12 * loc.diameter {
            clamped.push(k);
        }
        values.push(mesh.element(e).iter().zip(&bary).map(|(&v, b)| b * u[v]).sum());
    }
    Ok(Interpolation { values, clamped })
}

#[derive(Debug)]
struct Locator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
    diameter: f64,
}

impl Locator {
    fn new(mesh: &Mesh) -> Locator {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &mesh.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let diameter = (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
        let target = (mesh.n_elements() as f64).sqrt().ceil().max(1.0);
        let cell = ((hi[0] - lo[0]).max(hi[1] - lo[1]) / target)
            .max(diameter * 1e-12)
            .max(f64::MIN_POSITIVE);
        let nx = ((hi[0] - lo[0]) / cell).floor() as usize + 1;
        let ny = ((hi[1] - lo[1]) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for e in 0..mesh.n_elements() {
            let (mut a, mut b) = ([usize::MAX; 2], [0usize; 2]);
            for &v in mesh.element(e) {
                let p = mesh.vertices[v];
                for k in 0..2 {
                    let n = if k == 0 { nx } else { ny };
                    let i = (((p[k] - lo[k]) / cell).floor().max(0.0) as usize).min(n - 1);
                    a[k] = a[k].min(i);
                    b[k] = b[k].max(i);
                }
            }
            for j in a[1]..=b[1] {
                for i in a[0]..=b[0] {
                    buckets[j * nx + i].push(e);
                }
            }
        }
        Locator {
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
            diameter,
        }
    }

    /// Element, barycentric coordinates and distance of `x` from that element.
    fn locate(&self, mesh: &Mesh, x: Point) -> (usize, [f64; 3], f64) {
        let i = ((x[0] - self.origin[0]) / self.cell).floor();
        let j = ((x[1] - self.origin[1]) / self.cell).floor();
        if i >= 0.0 && j >= 0.0 && (i as usize) < self.nx && (j as usize) < self.ny {
            let mut best: Option<(usize, [f64; 3], f64)> = None;
            for &e in &self.buckets[j as usize * self.nx + i as usize] {
                let (bary, d) = closest(mesh, e, x);
                if d == 0.0 {
                    return (e, bary, 0.0);
                }
                if best.is_none_or(|b| d < b.2) {
                    best = Some((e, bary, d));
                }
            }
            if let Some(b) = best {
                if b.2 <= 1e-12 * self.diameter {
                    return b;
                }
            }
        }
        let mut best = (0, [0.0; 3], f64::INFINITY);
        for e in 0..mesh.n_elements() {
            let (bary, d) = closest(mesh, e, x);
            if d < best.2 {
                best = (e, bary, d);
            }
        }
        best
    }
}

/// Barycentric coordinates of the point of element `e` closest to `x`, and
/// the distance to it.
fn closest(mesh: &Mesh, e: usize, x: Point) -> ([f64; 3], f64) {
    let c = mesh.element(e);
    if mesh.dim == 1 {
        let (a, b) = (mesh.vertices[c[0]][0], mesh.vertices[c[1]][0]);
        let s = ((x[0] - a) / (b - a)).clamp(0.0, 1.0);
        let p = a + s * (b - a);
        return ([1.0 - s, s, 0.0], (x[0] - p).abs().hypot(x[1]));
    }
    let g = mesh.basis_gradients(e);
    let p0 = mesh.vertices[c[0]];
    let d = [x[0] - p0[0], x[1] - p0[1]];
    let l1 = g[1][0] * d[0] + g[1][1] * d[1];
    let l2 = g[2][0] * d[0] + g[2][1] * d[1];
    let l0 = 1.0 - l1 - l2;
    if l0 >= 0.0 && l1 >= 0.0 && l2 >= 0.0 {
        return ([l0, l1, l2], 0.0);
    }
    let mut best = ([0.0; 3], f64::INFINITY);
    for k in 0..3 {
        let (a, b) = (mesh.vertices[c[k]], mesh.vertices[c[(k + 1) % 3]]);
        let ab = [b[0] - a[0], b[1] - a[1]];
        let s = (((x[0] - a[0]) * ab[0] + (x[1] - a[1]) * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1])).clamp(0.0, 1.0);
        let q = [a[0] + s * ab[0], a[1] + s * ab[1]];
        let dd = dist(q, x);
        if dd < best.1 {
            let mut bary = [0.0; 3];
            bary[k] = 1.0 - s;
            bary[(k + 1) % 3] = s;
            best = (bary, dd);
        }
    }
    best
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MeshHeader {
    dimension: usize,
    n_vertices: usize,
    n_elements: usize,
    vertex_file: String,
    element_file: String,
}

/// Writes `mesh.json`, `vertices.csv` (`id,x,y,boundary,value`) and
/// `elements.csv` into `dir`.
pub fn write_mesh(dir: &Path, mesh: &Mesh, u: Option<&[f64]>) -> Result<(), MeshError> {
    if let Some(u) = u {
        mesh.check_field(u)?;
    }
    fs::create_dir_all(dir)?;
    let header = MeshHeader {
        dimension: mesh.dim,
        n_vertices: mesh.n_vertices(),
        n_elements: mesh.n_elements(),
        vertex_file: "vertices.csv".into(),
        element_file: "elements.csv".into(),
    };
    let json = serde_json::to_string_pretty(&header).map_err(|e| MeshError::Parse(e.to_string()))?;
    fs::write(dir.join("mesh.json"), json + "\n")?;
    let mut s = String::from("id,x,y,boundary,value\n");
    for (v, p) in mesh.vertices.iter().enumerate() {
        let value = u.map_or(0.0, |u| u[v]);
        let _ = writeln!(
            s,
            "{v},{},{},{},{}",
            sci17(p[0]),
            sci17(p[1]),
            u8::from(mesh.boundary[v]),
            sci17(value)
        );
    }
    fs::write(dir.join(&header.vertex_file), s)?;
    let mut s = String::new();
    for e in 0..mesh.n_elements() {
        let row: Vec<String> = mesh.element(e).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    fs::write(dir.join(&header.element_file), s)?;
    Ok(())
}

/// Reads a mesh and its vertex values written by [`write_mesh`].
pub fn read_mesh(dir: &Path) -> Result<(Mesh, Field), MeshError> {
    let header: MeshHeader = serde_json::from_str(&fs::read_to_string(dir.join("mesh.json"))?)
        .map_err(|e| MeshError::Parse(format!("mesh.json: {e}")))?;
    let parse_err = |what: &str, e: &dyn std::fmt::Display| MeshError::Parse(format!("{what}: {e}"));
    let mut rdr = csv::Reader::from_path(dir.join(&header.vertex_file)).map_err(|e| parse_err("vertices", &e))?;
    let mut vertices = Vec::with_capacity(header.n_vertices);
    let mut values = Vec::with_capacity(header.n_vertices);
    for rec in rdr.deserialize::<(usize, f64, f64, u8, f64)>() {
        let (_, x, y, _, v) = rec.map_err(|e| parse_err("vertices", &e))?;
        vertices.push([x, y]);
        values.push(v);
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(dir.join(&header.element_file))
        .map_err(|e| parse_err("elements", &e))?;
    let mut cells = Vec::with_capacity(header.n_elements * (header.dimension + 1));
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err("elements", &e))?;
        for f in rec.iter() {
            cells.push(f.trim().parse::<usize>().map_err(|e| parse_err("elements", &e))?);
        }
    }
    if vertices.len() != header.n_vertices || cells.len() != header.n_elements * (header.dimension + 1) {
        return Err(MeshError::Parse("counts disagree with mesh.json".into()));
    }
    Ok((Mesh::from_parts(header.dimension, vertices, cells)?, Field(values)))
}

/// Field table with columns `x,u` (1D) or `x,y,u` (2D).
pub fn field_csv(mesh: &Mesh, u: &[f64]) -> Result<String, MeshError> {
    mesh.check_field(u)?;
    let mut s = String::from(if mesh.dim == 1 { "x,u\n" } else { "x,y,u\n" });
    for (p, v) in mesh.vertices.iter().zip(u) {
        if mesh.dim == 1 {
            let _ = writeln!(s, "{},{}", sci17(p[0]), sci17(*v));
        } else {
            let _ = writeln!(s, "{},{},{}", sci17(p[0]), sci17(p[1]), sci17(*v));
        }
    }
    Ok(s)
}
