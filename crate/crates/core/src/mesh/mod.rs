//! Conforming triangulations of planar polygonal domains.

mod bisect;
pub mod io;
mod red;

use std::collections::HashMap;

pub use bisect::bisect_marked;
pub use red::{uniform_red_refine, RefinementMap, VertexOrigin};

use crate::{Error, Point, Result};

/// Marker of Dirichlet boundary edges.
pub const DIRICHLET: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub marker: u32,
}

/// A triangulation.
///
/// Elements are stored counterclockwise. `refinement_edge[t]` is the local
/// index of the edge of element `t` that newest-vertex bisection splits;
/// local edge `e` is the edge opposite local vertex `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub elements: Vec<[usize; 3]>,
    pub refinement_edge: Vec<u8>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Number of refinement steps since the initial mesh.
    pub level: u32,
}

/// A single invariant violation reported by [`Mesh::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    VertexOutOfRange {
        element: usize,
    },
    BadRefinementEdge {
        element: usize,
    },
    NonPositiveArea {
        element: usize,
        area: f64,
    },
    /// An edge shared by more than two elements.
    OverSharedEdge {
        edge: [usize; 2],
        count: usize,
    },
    /// An edge with a single element that is not listed as a boundary edge
    /// (a hanging vertex or a missing boundary entry).
    UncoveredBoundary {
        edge: [usize; 2],
    },
    /// A boundary entry that is not an edge of exactly one element.
    SpuriousBoundary {
        edge: [usize; 2],
    },
    DuplicateBoundary {
        edge: [usize; 2],
    },
    UnusedVertex {
        vertex: usize,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Global edge numbering in order of first appearance in the element loop.
#[derive(Debug, Clone)]
pub struct EdgeTable {
    /// Edge endpoints, lower vertex index first.
    pub edges: Vec<[usize; 2]>,
    /// `element_edges[t][e]` is the global index of local edge `e` of `t`.
    pub element_edges: Vec<[usize; 3]>,
    /// Elements adjacent to each edge (second slot empty on the boundary).
    pub edge_elements: Vec<[Option<usize>; 2]>,
    lookup: HashMap<[usize; 2], usize>,
}

pub(crate) fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl EdgeTable {
    pub fn new(mesh: &Mesh) -> Self {
        let mut edges = Vec::new();
        let mut element_edges = Vec::with_capacity(mesh.elements.len());
        let mut edge_elements: Vec<[Option<usize>; 2]> = Vec::new();
        let mut lookup = HashMap::with_capacity(mesh.elements.len() * 2);
        for (t, tri) in mesh.elements.iter().enumerate() {
            let mut ids = [0; 3];
            for (e, id) in ids.iter_mut().enumerate() {
                let key = edge_key(tri[(e + 1) % 3], tri[(e + 2) % 3]);
                let idx = *lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_elements.push([None, None]);
                    edges.len() - 1
                });
                let slot = &mut edge_elements[idx];
                if slot[0].is_none() {
                    slot[0] = Some(t);
                } else if slot[1].is_none() {
                    slot[1] = Some(t);
                }
                *id = idx;
            }
            element_edges.push(ids);
        }
        EdgeTable {
            edges,
            element_edges,
            edge_elements,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn find(&self, a: usize, b: usize) -> Option<usize> {
        self.lookup.get(&edge_key(a, b)).copied()
    }

    pub fn is_interior(&self, edge: usize) -> bool {
        self.edge_elements[edge][1].is_some()
    }
}

/// Elements incident to each vertex.
#[derive(Debug, Clone)]
pub struct VertexPatches {
    pub elements: Vec<Vec<usize>>,
    pub on_boundary: Vec<bool>,
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Mesh {
    /// Builds a mesh, assigning the longest edge of every element as its
    /// refinement edge (lowest local index on ties), and validates it.
    pub fn new(
        vertices: Vec<Point>,
        elements: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let mut mesh = Mesh {
            vertices,
            elements,
            refinement_edge: Vec::new(),
            boundary_edges,
            level: 0,
        };
        if mesh
            .elements
            .iter()
            .any(|t| t.iter().any(|&v| v >= mesh.vertices.len()))
        {
            return Err(Error::InvalidMesh("vertex index out of range".into()));
        }
        mesh.refinement_edge = (0..mesh.elements.len())
            .map(|t| mesh.longest_edge(t))
            .collect();
        let violations = mesh.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidMesh(format!("{:?}", violations[0])));
        }
        Ok(mesh)
    }

    /// Builds a mesh and derives its boundary edges (all marked Dirichlet)
    /// from the edges that belong to a single element.
    pub fn with_derived_boundary(vertices: Vec<Point>, elements: Vec<[usize; 3]>) -> Result<Self> {
        let probe = Mesh {
            vertices: vertices.clone(),
            elements: elements.clone(),
            refinement_edge: vec![0; elements.len()],
            boundary_edges: Vec::new(),
            level: 0,
        };
        let table = EdgeTable::new(&probe);
        let boundary = (0..table.len())
            .filter(|&e| !table.is_interior(e))
            .map(|e| {
                // Orient along the owning element's counterclockwise traversal.
                let t = table.edge_elements[e][0].unwrap();
                let tri = elements[t];
                let local = table.element_edges[t].iter().position(|&x| x == e).unwrap();
                BoundaryEdge {
                    vertices: [tri[(local + 1) % 3], tri[(local + 2) % 3]],
                    marker: DIRICHLET,
                }
            })
            .collect();
        Mesh::new(vertices, elements, boundary)
    }

    fn longest_edge(&self, t: usize) -> u8 {
        let tri = self.elements[t];
        let mut best = 0;
        let mut best_len = -1.0;
        for e in 0..3 {
            let l = dist(
                self.vertices[tri[(e + 1) % 3]],
                self.vertices[tri[(e + 2) % 3]],
            );
            if l > best_len * (1.0 + 1e-12) {
                best = e;
                best_len = l;
            }
        }
        best as u8
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_vertices(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.elements[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.element_vertices(t);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|t| self.area(t)).sum()
    }

    /// Element diameter (longest edge).
    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.element_vertices(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.element_vertices(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Interior angles of element `t` in radians.
    pub fn angles(&self, t: usize) -> [f64; 3] {
        let v = self.element_vertices(t);
        let mut out = [0.0; 3];
        for (i, angle) in out.iter_mut().enumerate() {
            let p = v[i];
            let q = v[(i + 1) % 3];
            let r = v[(i + 2) % 3];
            let u = [q[0] - p[0], q[1] - p[1]];
            let w = [r[0] - p[0], r[1] - p[1]];
            let cos = (u[0] * w[0] + u[1] * w[1]) / (u[0].hypot(u[1]) * w[0].hypot(w[1]));
            *angle = cos.clamp(-1.0, 1.0).acos();
        }
        out
    }

    pub fn min_angle(&self) -> f64 {
        (0..self.n_elements())
            .flat_map(|t| self.angles(t))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn edge_table(&self) -> EdgeTable {
        EdgeTable::new(self)
    }

    /// Vertices lying on a boundary edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut on = vec![false; self.n_vertices()];
        for be in &self.boundary_edges {
            on[be.vertices[0]] = true;
            on[be.vertices[1]] = true;
        }
        on
    }

    /// For each vertex, the elements containing it (in increasing order).
    pub fn vertex_patches(&self) -> VertexPatches {
        let mut elements = vec![Vec::new(); self.n_vertices()];
        for (t, tri) in self.elements.iter().enumerate() {
            for &v in tri {
                elements[v].push(t);
            }
        }
        VertexPatches {
            elements,
            on_boundary: self.boundary_vertices(),
        }
    }

    /// Checks every mesh invariant; an empty list means the mesh is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let nv = self.n_vertices();
        for (t, tri) in self.elements.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                out.push(Violation::VertexOutOfRange { element: t });
            }
        }
        if !out.is_empty() {
            return out;
        }
        if self.refinement_edge.len() != self.elements.len() {
            out.push(Violation::BadRefinementEdge {
                element: self.refinement_edge.len().min(self.elements.len()),
            });
        }
        for (t, &r) in self.refinement_edge.iter().enumerate() {
            if r > 2 {
                out.push(Violation::BadRefinementEdge { element: t });
            }
        }
        for t in 0..self.n_elements() {
            let area = self.area(t);
            if area <= 0.0 {
                out.push(Violation::NonPositiveArea { element: t, area });
            }
        }

        let mut count: HashMap<[usize; 2], usize> = HashMap::new();
        let mut order = Vec::new();
        for tri in &self.elements {
            for e in 0..3 {
                let key = edge_key(tri[(e + 1) % 3], tri[(e + 2) % 3]);
                let c = count.entry(key).or_insert(0);
                if *c == 0 {
                    order.push(key);
                }
                *c += 1;
            }
        }
        let mut listed: HashMap<[usize; 2], usize> = HashMap::new();
        for be in &self.boundary_edges {
            let key = edge_key(be.vertices[0], be.vertices[1]);
            let c = listed.entry(key).or_insert(0);
            *c += 1;
            if *c == 2 {
                out.push(Violation::DuplicateBoundary { edge: key });
            }
            if count.get(&key).copied() != Some(1) {
                out.push(Violation::SpuriousBoundary { edge: key });
            }
        }
        for key in order {
            let c = count[&key];
            if c > 2 {
                out.push(Violation::OverSharedEdge {
                    edge: key,
                    count: c,
                });
            } else if c == 1 && !listed.contains_key(&key) {
                out.push(Violation::UncoveredBoundary { edge: key });
            }
        }

        let mut used = vec![false; nv];
        for tri in &self.elements {
            for &v in tri {
                used[v] = true;
            }
        }
        for (v, u) in used.iter().enumerate() {
            if !u {
                out.push(Violation::UnusedVertex { vertex: v });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

/// `2 n^2` right triangles on the unit square, diagonals from lower left to
/// upper right, every boundary edge marked Dirichlet.
pub fn make_structured_square(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "structured square needs at least one subdivision".into(),
        ));
    }
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // Exact endpoints so that x = 0.5 is hit exactly for even n.
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push([x, y]);
        }
    }
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            elements.push([a, b, c]);
            elements.push([a, c, d]);
        }
    }
    let mut boundary = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary.push([id(i, 0), id(i + 1, 0)]);
        boundary.push([id(n, i), id(n, i + 1)]);
        boundary.push([id(i + 1, n), id(i, n)]);
        boundary.push([id(0, i + 1), id(0, i)]);
    }
    let boundary = boundary
        .into_iter()
        .map(|vertices| BoundaryEdge {
            vertices,
            marker: DIRICHLET,
        })
        .collect();
    Mesh::new(vertices, elements, boundary)
}

/// Coarse triangulation of `(-1,1)^2 \ [0,1) x [-1,0)`: three unit squares,
/// each split along its diagonal towards the re-entrant corner at the origin.
pub fn make_lshape() -> Result<Mesh> {
    let vertices = vec![
        [-1.0, -1.0], // 0
        [0.0, -1.0],  // 1
        [-1.0, 0.0],  // 2
        [0.0, 0.0],   // 3 re-entrant corner
        [1.0, 0.0],   // 4
        [-1.0, 1.0],  // 5
        [0.0, 1.0],   // 6
        [1.0, 1.0],   // 7
    ];
    let elements = vec![
        [0, 1, 3],
        [0, 3, 2],
        [2, 3, 5],
        [3, 6, 5],
        [3, 4, 7],
        [3, 7, 6],
    ];
    Mesh::with_derived_boundary(vertices, elements)
}
