//! Global numbering for the Taylor–Hood triple: vector P2 displacement,
//! P1 `ξ`, P1 `η`.
//!
//! Monolithic layout: `[u1 | u2 | ξ | η]`. A scalar P2 field has one dof per
//! vertex followed by one per edge (midpoint); P1 fields have one per vertex.

use crate::mesh::{BoundaryTag, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    U1,
    U2,
    Xi,
    Eta,
}

#[derive(Debug, Clone)]
pub struct DofMap {
    pub n_vertices: usize,
    pub n_edges: usize,
    /// Scalar P2 dofs (vertices + edges).
    pub n_p2: usize,
    /// Scalar P2 dofs per triangle, in reference node order.
    pub element_p2: Vec<[usize; 6]>,
    /// Scalar P2 dofs (endpoint, endpoint, midpoint) of each boundary edge of
    /// every tag, indexed by `BoundaryTag::index()`.
    boundary_p2: [Vec<usize>; 4],
    boundary_p1: [Vec<usize>; 4],
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let n_vertices = mesh.vertices.len();
        let n_edges = mesh.edges.len();
        let element_p2 = mesh
            .triangles
            .iter()
            .zip(&mesh.triangle_edges)
            .map(|(t, e)| [t[0], t[1], t[2], n_vertices + e[0], n_vertices + e[1], n_vertices + e[2]])
            .collect();

        let mut boundary_p2: [Vec<usize>; 4] = Default::default();
        let mut boundary_p1: [Vec<usize>; 4] = Default::default();
        for be in &mesh.boundary_edges {
            let [a, b] = mesh.edges[be.edge].vertices;
            let k = be.tag.index();
            boundary_p2[k].extend([a, b, n_vertices + be.edge]);
            boundary_p1[k].extend([a, b]);
        }
        for set in boundary_p2.iter_mut().chain(boundary_p1.iter_mut()) {
            set.sort_unstable();
            set.dedup();
        }

        Self {
            n_vertices,
            n_edges,
            n_p2: n_vertices + n_edges,
            element_p2,
            boundary_p2,
            boundary_p1,
        }
    }

    pub fn n_u(&self) -> usize {
        2 * self.n_p2
    }

    pub fn size(&self) -> usize {
        2 * self.n_p2 + 2 * self.n_vertices
    }

    pub fn offset(&self, block: Block) -> usize {
        match block {
            Block::U1 => 0,
            Block::U2 => self.n_p2,
            Block::Xi => 2 * self.n_p2,
            Block::Eta => 2 * self.n_p2 + self.n_vertices,
        }
    }

    pub fn block_len(&self, block: Block) -> usize {
        match block {
            Block::U1 | Block::U2 => self.n_p2,
            Block::Xi | Block::Eta => self.n_vertices,
        }
    }

    #[inline]
    pub fn u(&self, component: usize, scalar: usize) -> usize {
        component * self.n_p2 + scalar
    }

    #[inline]
    pub fn xi(&self, vertex: usize) -> usize {
        2 * self.n_p2 + vertex
    }

    #[inline]
    pub fn eta(&self, vertex: usize) -> usize {
        2 * self.n_p2 + self.n_vertices + vertex
    }

    /// The 18 element dofs: 6 for `u1`, 6 for `u2`, 3 for `ξ`, 3 for `η`.
    pub fn element_dofs(&self, mesh: &Mesh, element: usize) -> [usize; 18] {
        let s = &self.element_p2[element];
        let v = &mesh.triangles[element];
        let mut out = [0usize; 18];
        for a in 0..6 {
            out[a] = self.u(0, s[a]);
            out[6 + a] = self.u(1, s[a]);
        }
        for k in 0..3 {
            out[12 + k] = self.xi(v[k]);
            out[15 + k] = self.eta(v[k]);
        }
        out
    }

    pub fn boundary_p2(&self, tag: BoundaryTag) -> &[usize] {
        &self.boundary_p2[tag.index()]
    }

    pub fn boundary_p1(&self, tag: BoundaryTag) -> &[usize] {
        &self.boundary_p1[tag.index()]
    }

    /// Whether a monolithic dof lies on the boundary.
    pub fn is_boundary_dof(&self, dof: usize) -> bool {
        let (scalar, p2) = if dof < self.n_u() {
            (dof % self.n_p2, true)
        } else if dof < self.size() {
            ((dof - self.n_u()) % self.n_vertices, false)
        } else {
            return false;
        };
        BoundaryTag::ALL.iter().any(|&tag| {
            let set = if p2 { self.boundary_p2(tag) } else { self.boundary_p1(tag) };
            set.binary_search(&scalar).is_ok()
        })
    }

    /// Coordinates of every scalar P2 node.
    pub fn p2_nodes(&self, mesh: &Mesh) -> Vec<[f64; 2]> {
        let mut nodes = mesh.vertices.clone();
        nodes.extend((0..mesh.edges.len()).map(|e| mesh.edge_midpoint(e)));
        nodes
    }
}

pub fn build_dof_map(mesh: &Mesh) -> DofMap {
    DofMap::new(mesh)
}
