//! Lagrange bases on the reference triangle `(0,0), (1,0), (0,1)` and the
//! affine element map.
//!
//! P2 node order: the three vertices, then the midpoints of the local edges
//! (0,1), (1,2), (2,0).

use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceBasis {
    P1,
    P2,
}

impl ReferenceBasis {
    pub fn degree(self) -> usize {
        match self {
            ReferenceBasis::P1 => 1,
            ReferenceBasis::P2 => 2,
        }
    }

    pub fn node_count(self) -> usize {
        match self {
            ReferenceBasis::P1 => 3,
            ReferenceBasis::P2 => 6,
        }
    }

    pub fn nodes(self) -> Vec<[f64; 2]> {
        let mut nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        if self == ReferenceBasis::P2 {
            nodes.extend([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]);
        }
        nodes
    }

    /// Values and reference gradients at `point`.
    pub fn eval(self, point: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        match self {
            ReferenceBasis::P1 => {
                let (v, g) = p1(point);
                (v.to_vec(), g.to_vec())
            }
            ReferenceBasis::P2 => {
                let (v, g) = p2(point);
                (v.to_vec(), g.to_vec())
            }
        }
    }
}

pub fn p1(point: [f64; 2]) -> ([f64; 3], [[f64; 2]; 3]) {
    let [x, y] = point;
    (
        [1.0 - x - y, x, y],
        [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]],
    )
}

pub fn p2(point: [f64; 2]) -> ([f64; 6], [[f64; 2]; 6]) {
    let [x, y] = point;
    let l0 = 1.0 - x - y;
    let values = [
        l0 * (2.0 * l0 - 1.0),
        x * (2.0 * x - 1.0),
        y * (2.0 * y - 1.0),
        4.0 * l0 * x,
        4.0 * x * y,
        4.0 * y * l0,
    ];
    let d0 = 1.0 - 4.0 * l0;
    let grads = [
        [d0, d0],
        [4.0 * x - 1.0, 0.0],
        [0.0, 4.0 * y - 1.0],
        [4.0 * (l0 - x), -4.0 * x],
        [4.0 * y, 4.0 * x],
        [-4.0 * y, 4.0 * (l0 - y)],
    ];
    (values, grads)
}

/// Affine map `x = x0 + J x̂` of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub origin: [f64; 2],
    /// Columns are the edge vectors `x1 − x0` and `x2 − x0`.
    pub jacobian: [[f64; 2]; 2],
    pub det: f64,
    /// `J⁻ᵀ`
    pub inv_t: [[f64; 2]; 2],
}

impl ElementGeometry {
    pub fn new(mesh: &Mesh, element: usize) -> Result<Self> {
        let [a, b, c] = mesh.triangles[element].map(|v| mesh.vertices[v]);
        let jacobian = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        let scale = (jacobian[0][0].abs() + jacobian[0][1].abs())
            .max(jacobian[1][0].abs() + jacobian[1][1].abs());
        if !(det.abs() > 1e-14 * scale * scale) {
            return Err(Error::DegenerateElement { element, det });
        }
        let inv_t = [
            [jacobian[1][1] / det, -jacobian[1][0] / det],
            [-jacobian[0][1] / det, jacobian[0][0] / det],
        ];
        Ok(Self {
            origin: a,
            jacobian,
            det,
            inv_t,
        })
    }

    pub fn map(&self, r: [f64; 2]) -> [f64; 2] {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * r[0] + j[0][1] * r[1],
            self.origin[1] + j[1][0] * r[0] + j[1][1] * r[1],
        ]
    }

    /// Physical gradient `J⁻ᵀ ∇̂φ`.
    #[inline]
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        let m = &self.inv_t;
        [m[0][0] * g[0] + m[0][1] * g[1], m[1][0] * g[0] + m[1][1] * g[1]]
    }
}

/// Physical point, Jacobian and determinant at a reference point.
pub fn map_to_physical(
    mesh: &Mesh,
    element: usize,
    point: [f64; 2],
) -> Result<([f64; 2], [[f64; 2]; 2], f64)> {
    if element >= mesh.triangles.len() {
        return Err(Error::Dimension(format!(
            "element {element} out of range ({} elements)",
            mesh.triangles.len()
        )));
    }
    let geo = ElementGeometry::new(mesh, element)?;
    Ok((geo.map(point), geo.jacobian, geo.det))
}

/// Basis data at one quadrature point of one element.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub x: [f64; 2],
    /// Quadrature weight times `|det J|`.
    pub weight: f64,
    pub p1: [f64; 3],
    pub p2: [f64; 6],
    pub p2_grad: [[f64; 2]; 6],
}

/// Tabulated basis values of one element for a fixed quadrature rule.
#[derive(Debug, Clone)]
pub struct ElementValues {
    pub geometry: ElementGeometry,
    /// Physical P1 gradients (constant on the element).
    pub p1_grad: [[f64; 2]; 3],
    pub points: Vec<QuadPoint>,
}

impl ElementValues {
    pub fn new(mesh: &Mesh, element: usize, rule: &crate::quadrature::QuadratureRule) -> Result<Self> {
        let geometry = ElementGeometry::new(mesh, element)?;
        let (_, g1) = p1([0.0, 0.0]);
        let p1_grad = g1.map(|g| geometry.grad(g));
        let points = rule
            .iter()
            .map(|(r, w)| {
                let (v1, _) = p1(r);
                let (v2, g2) = p2(r);
                QuadPoint {
                    x: geometry.map(r),
                    weight: w * geometry.det.abs(),
                    p1: v1,
                    p2: v2,
                    p2_grad: g2.map(|g| geometry.grad(g)),
                }
            })
            .collect();
        Ok(Self {
            geometry,
            p1_grad,
            points,
        })
    }
}

/// [`ElementValues`] for every element of the mesh.
pub fn tabulate(mesh: &Mesh, degree: usize) -> Result<Vec<ElementValues>> {
    let rule = crate::quadrature::triangle_rule(degree)?;
    (0..mesh.triangles.len())
        .map(|e| ElementValues::new(mesh, e, &rule))
        .collect()
}
