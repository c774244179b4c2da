use super::{BoundaryEdge, EdgeTable, Mesh};

/// Provenance of a vertex of a red-refined mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexOrigin {
    /// Copy of a coarse vertex.
    Vertex(usize),
    /// Midpoint of the coarse edge with these endpoints.
    Midpoint(usize, usize),
}

/// Genealogy linking a refined mesh to the mesh it was refined from.
#[derive(Debug, Clone)]
pub struct RefinementMap {
    /// Coarse parent of every fine element.
    pub parent_of: Vec<usize>,
    /// Position of every fine element among its siblings.
    pub child_rank: Vec<u8>,
    pub vertex_origin: Vec<VertexOrigin>,
    pub n_coarse_elements: usize,
}

/// Splits every triangle at its edge midpoints into four congruent children.
///
/// Coarse vertices keep their indices; the midpoint of coarse edge `e` gets
/// index `n_vertices + e` (edge numbering of [`EdgeTable`]). The children of
/// coarse element `t` are fine elements `4t..4t+4`, corner children first and
/// the middle child last.
pub fn uniform_red_refine(mesh: &Mesh) -> (Mesh, RefinementMap) {
    let edges = EdgeTable::new(mesh);
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices.clone();
    let mut vertex_origin: Vec<VertexOrigin> = (0..nv).map(VertexOrigin::Vertex).collect();
    for &[a, b] in &edges.edges {
        let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
        vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        vertex_origin.push(VertexOrigin::Midpoint(a, b));
    }

    let mut elements = Vec::with_capacity(4 * mesh.n_elements());
    let mut parent_of = Vec::with_capacity(4 * mesh.n_elements());
    let mut child_rank = Vec::with_capacity(4 * mesh.n_elements());
    for (t, &[a, b, c]) in mesh.elements.iter().enumerate() {
        let ids = edges.element_edges[t];
        // Local edge e is opposite vertex e.
        let m_bc = nv + ids[0];
        let m_ca = nv + ids[1];
        let m_ab = nv + ids[2];
        let children = [
            [a, m_ab, m_ca],
            [m_ab, b, m_bc],
            [m_ca, m_bc, c],
            [m_bc, m_ca, m_ab],
        ];
        for (rank, child) in children.into_iter().enumerate() {
            elements.push(child);
            parent_of.push(t);
            child_rank.push(rank as u8);
        }
    }

    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for be in &mesh.boundary_edges {
        let [a, b] = be.vertices;
        let m = nv + edges.find(a, b).expect("boundary edge belongs to the mesh");
        boundary_edges.push(BoundaryEdge {
            vertices: [a, m],
            marker: be.marker,
        });
        boundary_edges.push(BoundaryEdge {
            vertices: [m, b],
            marker: be.marker,
        });
    }

    let mut fine = Mesh {
        vertices,
        elements,
        refinement_edge: Vec::new(),
        boundary_edges,
        level: mesh.level + 1,
    };
    fine.refinement_edge = (0..fine.n_elements())
        .map(|t| fine.longest_edge(t))
        .collect();
    let map = RefinementMap {
        parent_of,
        child_rank,
        vertex_origin,
        n_coarse_elements: mesh.n_elements(),
    };
    (fine, map)
}
