//! Structured triangulation of the unit square.
//!
//! Every grid cell is cut along its lower-left to upper-right diagonal.
//! Vertices are numbered y-major (`j * (n + 1) + i` for the point
//! `(i h, j h)`), triangles cell by cell, and edges in order of first
//! appearance while walking the triangles.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary segments of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// `x = 0`
    Gamma1,
    /// `x = 1`
    Gamma2,
    /// `y = 1`
    Gamma3,
    /// `y = 0`
    Gamma4,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [
        BoundaryTag::Gamma1,
        BoundaryTag::Gamma2,
        BoundaryTag::Gamma3,
        BoundaryTag::Gamma4,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            BoundaryTag::Gamma1 => [-1.0, 0.0],
            BoundaryTag::Gamma2 => [1.0, 0.0],
            BoundaryTag::Gamma3 => [0.0, 1.0],
            BoundaryTag::Gamma4 => [0.0, -1.0],
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Γ{}", self.index() + 1)
    }
}

const BOUNDARY_TOL: f64 = 1e-12;

/// Tag of a point on the boundary. Corners resolve by Γ1 > Γ2 > Γ3 > Γ4.
pub fn classify_boundary(p: [f64; 2]) -> Result<BoundaryTag> {
    let [x, y] = p;
    let inside = |v: f64| (-BOUNDARY_TOL..=1.0 + BOUNDARY_TOL).contains(&v);
    if inside(x) && inside(y) {
        if x.abs() <= BOUNDARY_TOL {
            return Ok(BoundaryTag::Gamma1);
        }
        if (x - 1.0).abs() <= BOUNDARY_TOL {
            return Ok(BoundaryTag::Gamma2);
        }
        if (y - 1.0).abs() <= BOUNDARY_TOL {
            return Ok(BoundaryTag::Gamma3);
        }
        if y.abs() <= BOUNDARY_TOL {
            return Ok(BoundaryTag::Gamma4);
        }
    }
    Err(Error::NotOnBoundary { x, y })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints, sorted ascending.
    pub vertices: [usize; 2],
    /// Incident triangles; the second slot is empty on the boundary.
    pub triangles: [Option<usize>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub edge: usize,
    pub tag: BoundaryTag,
    pub normal: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub n: usize,
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Edge ids of local edges (v0,v1), (v1,v2), (v2,v0) per triangle.
    pub triangle_edges: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

impl Mesh {
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_midpoint(&self, edge: usize) -> [f64; 2] {
        let [a, b] = self.edges[edge].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        (pb[0] - pa[0]).hypot(pb[1] - pa[1])
    }

    pub fn signed_area(&self, tri: usize) -> f64 {
        let [a, b, c] = self.triangles[tri].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Vertex ids lying on boundary edges with the given tag.
    pub fn boundary_vertices(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|be| be.tag == tag)
            .flat_map(|be| self.edges[be.edge].vertices)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

pub fn build_structured_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::EmptyMesh(n));
    }
    let stride = n + 1;
    let nf = n as f64;

    let mut vertices = Vec::with_capacity(stride * stride);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / nf, j as f64 / nf]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = j * stride + i;
            let v10 = v00 + 1;
            let v01 = v00 + stride;
            let v11 = v01 + 1;
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let mut lookup: HashMap<[usize; 2], usize> = HashMap::with_capacity(3 * n * n + 2 * n);
    let mut edges: Vec<Edge> = Vec::new();
    let mut triangle_edges = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let mut ids = [0usize; 3];
        for (k, id) in ids.iter_mut().enumerate() {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = [a.min(b), a.max(b)];
            *id = *lookup.entry(key).or_insert_with(|| {
                edges.push(Edge {
                    vertices: key,
                    triangles: [None, None],
                });
                edges.len() - 1
            });
            let slots = &mut edges[*id].triangles;
            if slots[0].is_none() {
                slots[0] = Some(t);
            } else {
                slots[1] = Some(t);
            }
        }
        triangle_edges.push(ids);
    }

    let mut mesh = Mesh {
        n,
        vertices,
        triangles,
        edges,
        triangle_edges,
        boundary_edges: Vec::new(),
    };
    let mut boundary_edges = Vec::with_capacity(4 * n);
    for (e, edge) in mesh.edges.iter().enumerate() {
        if edge.triangles[1].is_none() {
            let tag = classify_boundary(mesh.edge_midpoint(e))?;
            boundary_edges.push(BoundaryEdge {
                edge: e,
                tag,
                normal: tag.outward_normal(),
            });
        }
    }
    mesh.boundary_edges = boundary_edges;
    Ok(mesh)
}
