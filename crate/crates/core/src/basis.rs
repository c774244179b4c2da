//! Lagrange basis of degree `p` on a triangle, written in barycentric
//! coordinates on the uniform lattice `alpha / p`, `|alpha| = p`.
//!
//! The nodal function of lattice point `alpha` is
//! `prod_l prod_{m < alpha_l} (p lambda_l - m) / (m + 1)`,
//! which is 1 at its own node and 0 at every other lattice node.

/// Where a local node sits on the reference element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// At local vertex `v`.
    Vertex(usize),
    /// On local edge `e` (the edge opposite vertex `e`), `step` in `1..p`
    /// counted from the edge's first vertex `(e + 1) % 3`.
    Edge { edge: usize, step: usize },
    /// Interior node number `index`.
    Interior(usize),
}

/// Local edge `e` joins local vertices `(e + 1) % 3` and `(e + 2) % 3`.
pub const fn edge_vertices(e: usize) -> [usize; 2] {
    [(e + 1) % 3, (e + 2) % 3]
}

#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    degree: usize,
    nodes: Vec<[usize; 3]>,
    kinds: Vec<NodeKind>,
}

/// Value and first/second barycentric derivatives of one basis function.
#[derive(Debug, Clone, Copy, Default)]
pub struct BaryJet {
    pub value: f64,
    pub d1: [f64; 3],
    pub d2: [[f64; 3]; 3],
}

impl LagrangeBasis {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1);
        let p = degree;
        let mut nodes = Vec::new();
        let mut kinds = Vec::new();
        for v in 0..3 {
            let mut a = [0; 3];
            a[v] = p;
            nodes.push(a);
            kinds.push(NodeKind::Vertex(v));
        }
        for e in 0..3 {
            let [a, b] = edge_vertices(e);
            for step in 1..p {
                let mut alpha = [0; 3];
                alpha[a] = p - step;
                alpha[b] = step;
                nodes.push(alpha);
                kinds.push(NodeKind::Edge { edge: e, step });
            }
        }
        let mut index = 0;
        for i in 1..p {
            for j in 1..p - i {
                let k = p - i - j;
                if k >= 1 {
                    nodes.push([i, j, k]);
                    kinds.push(NodeKind::Interior(index));
                    index += 1;
                }
            }
        }
        LagrangeBasis {
            degree,
            nodes,
            kinds,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn multi_index(&self, i: usize) -> [usize; 3] {
        self.nodes[i]
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.kinds[i]
    }

    /// Barycentric coordinates of local node `i`.
    pub fn node_barycentric(&self, i: usize) -> [f64; 3] {
        let p = self.degree as f64;
        let a = self.nodes[i];
        [a[0] as f64 / p, a[1] as f64 / p, a[2] as f64 / p]
    }

    pub fn n_interior(&self) -> usize {
        let p = self.degree;
        if p < 3 {
            0
        } else {
            (p - 1) * (p - 2) / 2
        }
    }

    /// Values of all basis functions at barycentric point `lambda`.
    pub fn values(&self, lambda: [f64; 3]) -> Vec<f64> {
        let f = self.factor_table(lambda);
        self.nodes
            .iter()
            .map(|a| f[0][a[0]].0 * f[1][a[1]].0 * f[2][a[2]].0)
            .collect()
    }

    /// Values and barycentric derivatives of all basis functions.
    pub fn jets(&self, lambda: [f64; 3]) -> Vec<BaryJet> {
        let f = self.factor_table(lambda);
        self.nodes
            .iter()
            .map(|a| {
                let g = [f[0][a[0]], f[1][a[1]], f[2][a[2]]];
                let mut jet = BaryJet {
                    value: g[0].0 * g[1].0 * g[2].0,
                    ..Default::default()
                };
                for l in 0..3 {
                    let (o1, o2) = ((l + 1) % 3, (l + 2) % 3);
                    jet.d1[l] = g[l].1 * g[o1].0 * g[o2].0;
                    jet.d2[l][l] = g[l].2 * g[o1].0 * g[o2].0;
                    for m in 0..3 {
                        if m != l {
                            let o = 3 - l - m;
                            jet.d2[l][m] = g[l].1 * g[m].1 * g[o].0;
                        }
                    }
                }
                jet
            })
            .collect()
    }

    /// `table[l][s]` = (g_s, g_s', g_s'') of the univariate factor
    /// `g_s(t) = prod_{m < s} (p t - m) / (m + 1)` at `t = lambda_l`.
    fn factor_table(&self, lambda: [f64; 3]) -> [Vec<(f64, f64, f64)>; 3] {
        let p = self.degree;
        let pf = p as f64;
        let make = |t: f64| {
            let mut out = Vec::with_capacity(p + 1);
            let (mut v, mut d1, mut d2) = (1.0, 0.0, 0.0);
            out.push((v, d1, d2));
            for m in 0..p {
                let scale = pf / (m as f64 + 1.0);
                let lin = (pf * t - m as f64) / (m as f64 + 1.0);
                d2 = d2 * lin + 2.0 * d1 * scale;
                d1 = d1 * lin + v * scale;
                v *= lin;
                out.push((v, d1, d2));
            }
            out
        };
        [make(lambda[0]), make(lambda[1]), make(lambda[2])]
    }
}
