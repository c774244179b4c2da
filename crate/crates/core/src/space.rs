//! Continuous Lagrange finite element spaces and prolongations between them.
//!
//! Dofs are numbered vertices first, then edge dofs (edges in
//! [`EdgeTable`] order, nodes running from the lower to the higher global
//! vertex index), then element-interior dofs (elements in mesh order). This
//! order is also the Gauss-Seidel sweep order of the estimators.

use std::sync::Arc;

use crate::basis::{LagrangeBasis, NodeKind};
use crate::mesh::{EdgeTable, Mesh, RefinementMap};
use crate::sparse::CsrMatrix;
use crate::{Error, Point, Result};

/// Affine map from barycentric coordinates onto a physical triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    pub vertices: [Point; 3],
    /// Twice the signed area.
    pub det: f64,
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementMap {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let (a, b) = (p1[0] - p0[0], p2[0] - p0[0]);
        let (c, d) = (p1[1] - p0[1], p2[1] - p0[1]);
        let det = a * d - b * c;
        let g1 = [d / det, -b / det];
        let g2 = [-c / det, a / det];
        let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
        ElementMap {
            vertices,
            det,
            grad_lambda: [g0, g1, g2],
        }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn to_physical(&self, lambda: [f64; 3]) -> Point {
        let v = &self.vertices;
        [
            lambda[0] * v[0][0] + lambda[1] * v[1][0] + lambda[2] * v[2][0],
            lambda[0] * v[0][1] + lambda[1] * v[1][1] + lambda[2] * v[2][1],
        ]
    }

    pub fn barycentric(&self, x: Point) -> [f64; 3] {
        let p0 = self.vertices[0];
        let dx = [x[0] - p0[0], x[1] - p0[1]];
        let g = &self.grad_lambda;
        let l1 = g[1][0] * dx[0] + g[1][1] * dx[1];
        let l2 = g[2][0] * dx[0] + g[2][1] * dx[1];
        [1.0 - l1 - l2, l1, l2]
    }

    /// Physical gradient from barycentric derivatives.
    pub fn gradient(&self, d1: [f64; 3]) -> [f64; 2] {
        let g = &self.grad_lambda;
        [
            d1[0] * g[0][0] + d1[1] * g[1][0] + d1[2] * g[2][0],
            d1[0] * g[0][1] + d1[1] * g[1][1] + d1[2] * g[2][1],
        ]
    }

    /// Physical Laplacian from barycentric second derivatives.
    pub fn laplacian(&self, d2: [[f64; 3]; 3]) -> f64 {
        let g = &self.grad_lambda;
        let mut s = 0.0;
        for l in 0..3 {
            for m in 0..3 {
                s += d2[l][m] * (g[l][0] * g[m][0] + g[l][1] * g[m][1]);
            }
        }
        s
    }
}

/// A continuous, piecewise degree-`p` Lagrange space on a mesh.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    basis: LagrangeBasis,
    edges: EdgeTable,
    dof_coords: Vec<Point>,
    elem_dofs: Vec<usize>,
    boundary: Vec<bool>,
    free: Vec<usize>,
    free_position: Vec<Option<usize>>,
    /// Number of elements containing each dof.
    multiplicity: Vec<u32>,
}

impl FeSpace {
    pub fn new(mesh: impl Into<Arc<Mesh>>, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidInput(
                "polynomial degree must be at least 1".into(),
            ));
        }
        let mesh: Arc<Mesh> = mesh.into();
        let basis = LagrangeBasis::new(degree);
        let edges = EdgeTable::new(&mesh);
        let p = degree;
        let nv = mesh.n_vertices();
        let ne = edges.len();
        let ni = basis.n_interior();
        let edge_base = nv;
        let interior_base = nv + ne * (p - 1);
        let n_dofs = interior_base + mesh.n_elements() * ni;
        let nloc = basis.len();

        let mut elem_dofs = vec![0; mesh.n_elements() * nloc];
        let mut dof_coords = vec![[0.0; 2]; n_dofs];
        let mut multiplicity = vec![0u32; n_dofs];
        for (t, tri) in mesh.elements.iter().enumerate() {
            let map = ElementMap::new(mesh.element_vertices(t));
            for i in 0..nloc {
                let g = match basis.kind(i) {
                    NodeKind::Vertex(v) => tri[v],
                    NodeKind::Edge { edge, step } => {
                        let [a, b] = crate::basis::edge_vertices(edge);
                        let (ga, gb) = (tri[a], tri[b]);
                        let from_low = if ga < gb { step } else { p - step };
                        edge_base + edges.element_edges[t][edge] * (p - 1) + from_low - 1
                    }
                    NodeKind::Interior(k) => interior_base + t * ni + k,
                };
                elem_dofs[t * nloc + i] = g;
                multiplicity[g] += 1;
                dof_coords[g] = map.to_physical(basis.node_barycentric(i));
            }
        }
        // Vertex coordinates exactly, not through the affine map.
        dof_coords[..nv].copy_from_slice(&mesh.vertices);

        let mut boundary = vec![false; n_dofs];
        for be in &mesh.boundary_edges {
            let [a, b] = be.vertices;
            boundary[a] = true;
            boundary[b] = true;
            if let Some(e) = edges.find(a, b) {
                for k in 0..p - 1 {
                    boundary[edge_base + e * (p - 1) + k] = true;
                }
            }
        }
        let free: Vec<usize> = (0..n_dofs).filter(|&i| !boundary[i]).collect();
        let mut free_position = vec![None; n_dofs];
        for (k, &i) in free.iter().enumerate() {
            free_position[i] = Some(k);
        }
        Ok(FeSpace {
            mesh,
            basis,
            edges,
            dof_coords,
            elem_dofs,
            boundary,
            free,
            free_position,
            multiplicity,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    pub fn edges(&self) -> &EdgeTable {
        &self.edges
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn n_local(&self) -> usize {
        self.basis.len()
    }

    pub fn dof_coords(&self) -> &[Point] {
        &self.dof_coords
    }

    pub fn element_dofs(&self, t: usize) -> &[usize] {
        let n = self.n_local();
        &self.elem_dofs[t * n..(t + 1) * n]
    }

    pub fn element_map(&self, t: usize) -> ElementMap {
        ElementMap::new(self.mesh.element_vertices(t))
    }

    pub fn is_boundary(&self, dof: usize) -> bool {
        self.boundary[dof]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn free_position(&self, dof: usize) -> Option<usize> {
        self.free_position[dof]
    }

    /// Number of elements whose closure contains the dof.
    pub fn multiplicity(&self, dof: usize) -> u32 {
        self.multiplicity[dof]
    }

    /// Restriction of a full vector to the free dofs.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Full vector with `free_values` on the free dofs and `boundary_values`
    /// (or zero) on the boundary dofs.
    pub fn extend(&self, free_values: &[f64], boundary_values: Option<&[f64]>) -> Vec<f64> {
        let mut full = match boundary_values {
            Some(b) => self
                .boundary
                .iter()
                .zip(b)
                .map(|(&on, &v)| if on { v } else { 0.0 })
                .collect(),
            None => vec![0.0; self.n_dofs()],
        };
        for (&i, &v) in self.free.iter().zip(free_values) {
            full[i] = v;
        }
        full
    }

    /// Value of the finite element function `u` in element `t` at barycentric `lambda`.
    pub fn evaluate(&self, u: &[f64], t: usize, lambda: [f64; 3]) -> f64 {
        self.basis
            .values(lambda)
            .iter()
            .zip(self.element_dofs(t))
            .map(|(phi, &i)| phi * u[i])
            .sum()
    }

    pub fn gradient(&self, u: &[f64], t: usize, lambda: [f64; 3]) -> [f64; 2] {
        let map = self.element_map(t);
        let mut d1 = [0.0; 3];
        for (jet, &i) in self.basis.jets(lambda).iter().zip(self.element_dofs(t)) {
            for l in 0..3 {
                d1[l] += jet.d1[l] * u[i];
            }
        }
        map.gradient(d1)
    }

    /// Element containing `x` (brute force search), with barycentric coordinates.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 3])> {
        (0..self.mesh.n_elements()).find_map(|t| {
            let l = self.element_map(t).barycentric(x);
            l.iter().all(|&c| c >= -1e-12).then_some((t, l))
        })
    }

    /// Value at an arbitrary point of the domain.
    pub fn evaluate_at(&self, u: &[f64], x: Point) -> Option<f64> {
        self.locate(x).map(|(t, l)| self.evaluate(u, t, l))
    }

    fn same_mesh(&self, other: &FeSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
            || (self.mesh.vertices == other.mesh.vertices
                && self.mesh.elements == other.mesh.elements)
    }
}

/// Nodal interpolant of `g`.
pub fn interpolate(space: &FeSpace, g: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
    space
        .dof_coords()
        .iter()
        .map(|&x| {
            let v = g(x);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite { x: x[0], y: x[1] })
            }
        })
        .collect()
}

/// Matrix of an embedding between nested spaces (fine dofs x coarse dofs).
#[derive(Debug, Clone)]
pub struct Prolongation {
    pub matrix: CsrMatrix,
}

impl Prolongation {
    pub fn apply(&self, coarse: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(coarse)
    }

    pub fn apply_transpose(&self, fine: &[f64]) -> Vec<f64> {
        self.matrix.transpose_mul_vec(fine)
    }

    /// Rows of the fine free dofs, columns of the coarse free dofs.
    pub fn free_block(&self, fine: &FeSpace, coarse: &FeSpace) -> CsrMatrix {
        self.matrix.submatrix(fine.free_dofs(), coarse.free_dofs())
    }

    /// Coarse-to-fine prolongation along a red refinement.
    pub fn refinement(coarse: &FeSpace, fine: &FeSpace, map: &RefinementMap) -> Result<Self> {
        if coarse.degree() != fine.degree() {
            return Err(Error::InvalidInput(format!(
                "degree mismatch: coarse {} vs fine {}",
                coarse.degree(),
                fine.degree()
            )));
        }
        if map.n_coarse_elements != coarse.mesh().n_elements()
            || map.parent_of.len() != fine.mesh().n_elements()
            || fine.mesh().n_elements() != 4 * coarse.mesh().n_elements()
        {
            return Err(Error::InvalidInput(
                "fine space is not a red refinement of the coarse space".into(),
            ));
        }
        let rows = fill_rows(
            fine,
            |tf| {
                let tc = map.parent_of[tf];
                (tc, coarse.element_map(tc))
            },
            coarse,
        );
        Ok(rows)
    }

    /// Low-to-high degree embedding on the same mesh.
    pub fn degree_raise(low: &FeSpace, high: &FeSpace) -> Result<Self> {
        if high.degree() <= low.degree() {
            return Err(Error::InvalidInput(format!(
                "target degree {} must exceed source degree {}",
                high.degree(),
                low.degree()
            )));
        }
        if !low.same_mesh(high) {
            return Err(Error::InvalidInput(
                "spaces live on different meshes".into(),
            ));
        }
        Ok(fill_rows(high, |t| (t, low.element_map(t)), low))
    }
}

/// Builds the embedding matrix: row `i` holds the coarse basis functions
/// evaluated at the coordinate of target dof `i`, inside the coarse element
/// that contains the target element.
fn fill_rows(
    target: &FeSpace,
    source_element: impl Fn(usize) -> (usize, ElementMap),
    source: &FeSpace,
) -> Prolongation {
    let mut done = vec![false; target.n_dofs()];
    let mut triplets = Vec::new();
    for t in 0..target.mesh().n_elements() {
        let (ts, map) = source_element(t);
        for &i in target.element_dofs(t) {
            if done[i] {
                continue;
            }
            done[i] = true;
            let lambda = map.barycentric(target.dof_coords()[i]);
            for (phi, &j) in source
                .basis()
                .values(lambda)
                .iter()
                .zip(source.element_dofs(ts))
            {
                if phi.abs() > 1e-13 {
                    triplets.push((i, j, *phi));
                }
            }
        }
    }
    Prolongation {
        matrix: CsrMatrix::from_triplets(target.n_dofs(), source.n_dofs(), triplets),
    }
}
