//! Triangle-style `.node` / `.ele` / `.edge` text files (0-based indices)
//! and SVG rendering of meshes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{BoundaryEdge, Mesh};
use crate::{Error, Result};

pub fn write_node(mesh: &Mesh) -> String {
    let mut s = format!("{} 2 0 0\n", mesh.n_vertices());
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(s, "{i} {:e} {:e}", v[0], v[1]);
    }
    s
}

/// The fourth column stores the local refinement edge as a triangle attribute.
pub fn write_ele(mesh: &Mesh) -> String {
    let mut s = format!("{} 3 1\n", mesh.n_elements());
    for (t, tri) in mesh.elements.iter().enumerate() {
        let _ = writeln!(
            s,
            "{t} {} {} {} {}",
            tri[0], tri[1], tri[2], mesh.refinement_edge[t]
        );
    }
    s
}

pub fn write_edge(mesh: &Mesh) -> String {
    let mut s = format!("{} 1\n", mesh.boundary_edges.len());
    for (i, be) in mesh.boundary_edges.iter().enumerate() {
        let _ = writeln!(s, "{i} {} {} {}", be.vertices[0], be.vertices[1], be.marker);
    }
    s
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i, l.split_whitespace().collect()))
}

fn parse<T: std::str::FromStr>(tok: Option<&&str>, line: usize, what: &str) -> Result<T> {
    tok.and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::InvalidInput(format!("line {line}: cannot read {what}")))
}

/// Parses node, element and (optionally) boundary-edge text into a mesh.
/// Missing boundary edges are derived from the topology.
pub fn read_triangle(node: &str, ele: &str, edge: Option<&str>) -> Result<Mesh> {
    let mut lines = data_lines(node);
    let (l, header) = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty node file".into()))?;
    let n: usize = parse(header.first(), l, "vertex count")?;
    let mut vertices = Vec::with_capacity(n);
    for (l, tok) in lines.take(n) {
        vertices.push([parse(tok.get(1), l, "x")?, parse(tok.get(2), l, "y")?]);
    }
    if vertices.len() != n {
        return Err(Error::InvalidInput("node file is truncated".into()));
    }

    let mut lines = data_lines(ele);
    let (l, header) = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty ele file".into()))?;
    let m: usize = parse(header.first(), l, "element count")?;
    let n_attr: usize = header.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut elements = Vec::with_capacity(m);
    let mut refinement = Vec::with_capacity(m);
    for (l, tok) in lines.take(m) {
        elements.push([
            parse(tok.get(1), l, "vertex")?,
            parse(tok.get(2), l, "vertex")?,
            parse(tok.get(3), l, "vertex")?,
        ]);
        if n_attr >= 1 {
            refinement.push(parse::<u8>(tok.get(4), l, "refinement edge")?);
        }
    }
    if elements.len() != m {
        return Err(Error::InvalidInput("ele file is truncated".into()));
    }

    let mut mesh = match edge {
        Some(text) => {
            let mut lines = data_lines(text);
            let (l, header) = lines
                .next()
                .ok_or_else(|| Error::InvalidInput("empty edge file".into()))?;
            let k: usize = parse(header.first(), l, "edge count")?;
            let mut boundary = Vec::with_capacity(k);
            for (l, tok) in lines.take(k) {
                boundary.push(BoundaryEdge {
                    vertices: [
                        parse(tok.get(1), l, "vertex")?,
                        parse(tok.get(2), l, "vertex")?,
                    ],
                    marker: tok.get(3).and_then(|s| s.parse().ok()).unwrap_or(0),
                });
            }
            Mesh::new(vertices, elements, boundary)?
        }
        None => Mesh::with_derived_boundary(vertices, elements)?,
    };
    if refinement.len() == mesh.n_elements() {
        if refinement.iter().any(|&r| r > 2) {
            return Err(Error::InvalidInput(
                "refinement edge index must be 0, 1 or 2".into(),
            ));
        }
        mesh.refinement_edge = refinement;
    }
    Ok(mesh)
}

/// Writes `<stem>.node`, `<stem>.ele` and `<stem>.edge` into `dir`.
pub fn save_triangle(mesh: &Mesh, dir: &Path, stem: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{stem}.node")), write_node(mesh))?;
    fs::write(dir.join(format!("{stem}.ele")), write_ele(mesh))?;
    fs::write(dir.join(format!("{stem}.edge")), write_edge(mesh))?;
    Ok(())
}

pub fn load_triangle(dir: &Path, stem: &str) -> Result<Mesh> {
    let node = fs::read_to_string(dir.join(format!("{stem}.node")))?;
    let ele = fs::read_to_string(dir.join(format!("{stem}.ele")))?;
    let edge = fs::read_to_string(dir.join(format!("{stem}.edge"))).ok();
    read_triangle(&node, &ele, edge.as_deref())
}

/// Blue-to-red colour for `s` in `[0, 1]`.
fn heat(s: f64) -> String {
    let s = s.clamp(0.0, 1.0);
    let r = (255.0 * s) as u8;
    let b = (255.0 * (1.0 - s)) as u8;
    let g = (255.0 * (1.0 - (2.0 * s - 1.0).abs()) * 0.6) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// SVG drawing of the mesh edges; when `fill` is given, each element is
/// shaded by the logarithm of its value.
pub fn mesh_svg(mesh: &Mesh, fill: Option<&[f64]>) -> String {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for v in &mesh.vertices {
        x0 = x0.min(v[0]);
        y0 = y0.min(v[1]);
        x1 = x1.max(v[0]);
        y1 = y1.max(v[1]);
    }
    let size = 800.0;
    let margin = 10.0;
    let scale = (size - 2.0 * margin) / (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
    let px = |v: [f64; 2]| (margin + (v[0] - x0) * scale, margin + (y1 - v[1]) * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    if let Some(values) = fill {
        let logs: Vec<f64> = values
            .iter()
            .map(|&v| {
                if v > 0.0 {
                    v.log10()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = logs
            .iter()
            .copied()
            .filter(|l| l.is_finite())
            .fold(f64::INFINITY, f64::min)
            .max(hi - 8.0);
        let span = (hi - lo).max(1e-12);
        let _ = writeln!(s, r#"<g stroke="none">"#);
        for (t, l) in logs.iter().enumerate().take(mesh.n_elements()) {
            let c = if l.is_finite() {
                heat((l - lo) / span)
            } else {
                heat(0.0)
            };
            let pts: Vec<String> = mesh
                .element_vertices(t)
                .iter()
                .map(|&v| {
                    let (x, y) = px(v);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(s, r#"<polygon points="{}" fill="{c}"/>"#, pts.join(" "));
        }
        let _ = writeln!(s, "</g>");
    }

    let _ = writeln!(s, r#"<g stroke="black" stroke-width="0.3">"#);
    for &[a, b] in &mesh.edge_table().edges {
        let (xa, ya) = px(mesh.vertices[a]);
        let (xb, yb) = px(mesh.vertices[b]);
        let _ = writeln!(
            s,
            r#"<line x1="{xa:.2}" y1="{ya:.2}" x2="{xb:.2}" y2="{yb:.2}"/>"#
        );
    }
    let _ = writeln!(s, "</g>\n</svg>");
    s
}
