use std::collections::HashMap;

use super::{edge_key, BoundaryEdge, EdgeTable, Mesh};

/// Newest-vertex bisection of the marked elements with conforming closure.
///
/// The refinement edges of all marked elements are marked first. The closure
/// then marks the refinement edge of every element that has any marked edge,
/// until nothing changes. Finally every element with a marked refinement edge
/// is bisected, and its children are bisected again along marked edges of the
/// parent (at most three bisections per element and round).
///
/// Unrefined elements keep their index order; the children of a refined
/// element replace it in place, so the output is deterministic.
pub fn bisect_marked(mesh: &Mesh, marked: &[usize]) -> Mesh {
    let edges = EdgeTable::new(mesh);
    let ref_edge = |t: usize| edges.element_edges[t][mesh.refinement_edge[t] as usize];

    let mut edge_marked = vec![false; edges.len()];
    for &t in marked {
        assert!(t < mesh.n_elements(), "marked element {t} out of range");
        edge_marked[ref_edge(t)] = true;
    }
    let mut rounds = 0;
    loop {
        let mut changed = false;
        for t in 0..mesh.n_elements() {
            let r = ref_edge(t);
            if !edge_marked[r] && edges.element_edges[t].iter().any(|&e| edge_marked[e]) {
                edge_marked[r] = true;
                changed = true;
            }
        }
        rounds += 1;
        if !changed {
            break;
        }
        // Each productive round marks at least one new edge.
        assert!(
            rounds <= edges.len() + 1,
            "bisection closure failed to terminate"
        );
    }

    let mut vertices = mesh.vertices.clone();
    let mut midpoint: HashMap<[usize; 2], usize> = HashMap::new();
    for (e, &[a, b]) in edges.edges.iter().enumerate() {
        if edge_marked[e] {
            let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            midpoint.insert([a, b], vertices.len() - 1);
        }
    }

    let mut elements = Vec::with_capacity(mesh.n_elements() + 2 * midpoint.len());
    let mut refinement_edge = Vec::with_capacity(elements.capacity());
    for (t, tri) in mesh.elements.iter().enumerate() {
        let r = mesh.refinement_edge[t] as usize;
        if !edge_marked[ref_edge(t)] {
            elements.push(*tri);
            refinement_edge.push(r as u8);
            continue;
        }
        // Rotate so that the refinement edge is opposite local vertex 0.
        let rotated = [tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]];
        refine(rotated, &midpoint, &mut elements, &mut refinement_edge);
    }

    let mut boundary_edges = Vec::with_capacity(mesh.boundary_edges.len());
    for be in &mesh.boundary_edges {
        let [a, b] = be.vertices;
        match midpoint.get(&edge_key(a, b)) {
            Some(&m) => {
                boundary_edges.push(BoundaryEdge {
                    vertices: [a, m],
                    marker: be.marker,
                });
                boundary_edges.push(BoundaryEdge {
                    vertices: [m, b],
                    marker: be.marker,
                });
            }
            None => boundary_edges.push(*be),
        }
    }

    Mesh {
        vertices,
        elements,
        refinement_edge,
        boundary_edges,
        level: mesh.level + 1,
    }
}

/// Bisects `tri = (apex, b, c)` whose refinement edge is `b c`, if marked.
/// Children are stored with the new vertex first, so their refinement edge
/// (opposite the newest vertex) is local edge 0.
fn refine(
    tri: [usize; 3],
    midpoint: &HashMap<[usize; 2], usize>,
    elements: &mut Vec<[usize; 3]>,
    refinement_edge: &mut Vec<u8>,
) {
    let [a, b, c] = tri;
    match midpoint.get(&edge_key(b, c)) {
        Some(&m) => {
            refine([m, a, b], midpoint, elements, refinement_edge);
            refine([m, c, a], midpoint, elements, refinement_edge);
        }
        None => {
            elements.push(tri);
            refinement_edge.push(0);
        }
    }
}
