//! Dense reference implementations used as test oracles.
//!
//! Polynomials are stored symbolically in barycentric monomials and
//! integrated exactly with `int_T l1^a l2^b l3^c = 2|T| a! b! c! / (a+b+c+2)!`,
//! so nothing here shares code with the library's basis or quadrature.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use smoothfem::mesh::Mesh;
use smoothfem::space::FeSpace;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BPoly(pub BTreeMap<[u32; 3], f64>);

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl BPoly {
    pub fn constant(c: f64) -> Self {
        let mut m = BTreeMap::new();
        m.insert([0, 0, 0], c);
        BPoly(m)
    }

    /// `a * lambda_l + b`.
    pub fn affine(l: usize, a: f64, b: f64) -> Self {
        let mut e = [0; 3];
        e[l] = 1;
        let mut m = BTreeMap::new();
        m.insert(e, a);
        *m.entry([0, 0, 0]).or_insert(0.0) += b;
        BPoly(m)
    }

    pub fn add(&self, o: &BPoly) -> BPoly {
        let mut m = self.0.clone();
        for (e, c) in &o.0 {
            *m.entry(*e).or_insert(0.0) += c;
        }
        BPoly(m)
    }

    pub fn scale(&self, s: f64) -> BPoly {
        BPoly(self.0.iter().map(|(e, c)| (*e, c * s)).collect())
    }

    pub fn mul(&self, o: &BPoly) -> BPoly {
        let mut m = BTreeMap::new();
        for (e1, c1) in &self.0 {
            for (e2, c2) in &o.0 {
                let e = [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]];
                *m.entry(e).or_insert(0.0) += c1 * c2;
            }
        }
        BPoly(m)
    }

    /// Partial derivative in `lambda_l` (barycentrics treated as independent).
    pub fn diff(&self, l: usize) -> BPoly {
        let mut m = BTreeMap::new();
        for (e, c) in &self.0 {
            if e[l] > 0 {
                let mut f = *e;
                f[l] -= 1;
                *m.entry(f).or_insert(0.0) += c * f64::from(e[l]);
            }
        }
        BPoly(m)
    }

    pub fn eval(&self, l: [f64; 3]) -> f64 {
        self.0
            .iter()
            .map(|(e, c)| {
                c * l[0].powi(e[0] as i32) * l[1].powi(e[1] as i32) * l[2].powi(e[2] as i32)
            })
            .sum()
    }

    pub fn integrate(&self, area: f64) -> f64 {
        self.0
            .iter()
            .map(|(e, c)| {
                c * 2.0 * area * factorial(e[0]) * factorial(e[1]) * factorial(e[2])
                    / factorial(e[0] + e[1] + e[2] + 2)
            })
            .sum()
    }
}

/// Lagrange nodes of degree `p` as barycentric multi-indices.
pub fn lattice(p: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for i in 0..=p {
        for j in 0..=p - i {
            out.push([i, j, p - i - j]);
        }
    }
    out
}

/// Lagrange basis function of node `alpha`.
pub fn lagrange(p: u32, alpha: [u32; 3]) -> BPoly {
    let mut phi = BPoly::constant(1.0);
    for l in 0..3 {
        for m in 0..alpha[l] {
            let d = f64::from(m + 1);
            phi = phi.mul(&BPoly::affine(l, f64::from(p) / d, -f64::from(m) / d));
        }
    }
    phi
}

pub struct Geometry {
    pub v: [Point; 3],
    pub area: f64,
    pub grad_lambda: [[f64; 2]; 3],
}

impl Geometry {
    pub fn new(v: [Point; 3]) -> Self {
        let det =
            (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        let mut g = [[0.0; 2]; 3];
        for k in 0..3 {
            let (a, b) = (v[(k + 1) % 3], v[(k + 2) % 3]);
            g[k] = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
        }
        Geometry {
            v,
            area: 0.5 * det.abs(),
            grad_lambda: g,
        }
    }

    pub fn point(&self, l: [f64; 3]) -> Point {
        [
            l[0] * self.v[0][0] + l[1] * self.v[1][0] + l[2] * self.v[2][0],
            l[0] * self.v[0][1] + l[1] * self.v[1][1] + l[2] * self.v[2][1],
        ]
    }

    pub fn barycentric(&self, x: Point) -> [f64; 3] {
        let mut l = [0.0; 3];
        for k in 0..3 {
            l[k] = 1.0
                + self.grad_lambda[k][0] * (x[0] - self.v[k][0])
                + self.grad_lambda[k][1] * (x[1] - self.v[k][1]);
        }
        l
    }

    pub fn dot_grad(&self, l: usize, m: usize) -> f64 {
        self.grad_lambda[l][0] * self.grad_lambda[m][0]
            + self.grad_lambda[l][1] * self.grad_lambda[m][1]
    }

    /// Physical gradient of `f` as two barycentric polynomials.
    pub fn gradient(&self, f: &BPoly) -> [BPoly; 2] {
        let d: Vec<BPoly> = (0..3).map(|l| f.diff(l)).collect();
        let comp = |c: usize| {
            (0..3).fold(BPoly::default(), |acc, l| {
                acc.add(&d[l].scale(self.grad_lambda[l][c]))
            })
        };
        [comp(0), comp(1)]
    }

    pub fn laplacian(&self, f: &BPoly) -> BPoly {
        let mut out = BPoly::default();
        for l in 0..3 {
            for m in 0..3 {
                out = out.add(&f.diff(l).diff(m).scale(self.dot_grad(l, m)));
            }
        }
        out
    }
}

fn key(x: Point) -> (i64, i64) {
    ((x[0] * 1e9).round() as i64, (x[1] * 1e9).round() as i64)
}

/// Independent dense discretisation of a space: same dof numbering as the
/// library (matched through dof coordinates), own basis and integration.
pub struct Dense {
    pub p: u32,
    pub mesh: Mesh,
    pub n: usize,
    /// Global dof of every local oracle node, per element.
    pub local_to_global: Vec<Vec<usize>>,
    pub nodes: Vec<[u32; 3]>,
    pub basis: Vec<BPoly>,
    pub boundary: Vec<bool>,
}

impl Dense {
    pub fn new(space: &FeSpace) -> Self {
        let p = space.degree() as u32;
        let mesh = space.mesh().clone();
        let index: HashMap<(i64, i64), usize> = space
            .dof_coords()
            .iter()
            .enumerate()
            .map(|(i, &x)| (key(x), i))
            .collect();
        let nodes = lattice(p);
        let basis: Vec<BPoly> = nodes.iter().map(|&a| lagrange(p, a)).collect();
        let local_to_global = (0..mesh.n_elements())
            .map(|t| {
                let g = Geometry::new(mesh.element_vertices(t));
                nodes
                    .iter()
                    .map(|a| {
                        let l = a.map(|k| f64::from(k) / f64::from(p));
                        index[&key(g.point(l))]
                    })
                    .collect()
            })
            .collect();
        // Boundary dofs: nodes lying on a boundary edge.
        let mut boundary = vec![false; space.n_dofs()];
        for (i, &x) in space.dof_coords().iter().enumerate() {
            boundary[i] = mesh.boundary_edges.iter().any(|be| {
                let (a, b) = (mesh.vertices[be.vertices[0]], mesh.vertices[be.vertices[1]]);
                let cross = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
                let dot = (x[0] - a[0]) * (b[0] - a[0]) + (x[1] - a[1]) * (b[1] - a[1]);
                let len2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
                cross.abs() < 1e-12 && dot >= -1e-12 && dot <= len2 + 1e-12
            });
        }
        Dense {
            p,
            mesh,
            n: space.n_dofs(),
            local_to_global,
            nodes,
            basis,
            boundary,
        }
    }

    pub fn free(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| !self.boundary[i]).collect()
    }

    pub fn geometry(&self, t: usize) -> Geometry {
        Geometry::new(self.mesh.element_vertices(t))
    }

    /// `(alpha grad u, grad v) + (beta u, grad v)` with constant coefficients.
    pub fn matrix(&self, alpha: impl Fn(usize) -> f64, beta: [f64; 2]) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for t in 0..self.mesh.n_elements() {
            let g = self.geometry(t);
            let grads: Vec<[BPoly; 2]> = self.basis.iter().map(|f| g.gradient(f)).collect();
            let al = alpha(t);
            for (i, gi) in self.local_to_global[t].iter().enumerate() {
                for (j, gj) in self.local_to_global[t].iter().enumerate() {
                    let diff = grads[i][0]
                        .mul(&grads[j][0])
                        .add(&grads[i][1].mul(&grads[j][1]));
                    let mut v = al * diff.integrate(g.area);
                    if beta != [0.0, 0.0] {
                        let adv = grads[i][0].scale(beta[0]).add(&grads[i][1].scale(beta[1]));
                        v += self.basis[j].mul(&adv).integrate(g.area);
                    }
                    a[(*gi, *gj)] += v;
                }
            }
        }
        a
    }

    pub fn stiffness(&self) -> DMatrix<f64> {
        self.matrix(|_| 1.0, [0.0, 0.0])
    }

    pub fn mass(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for t in 0..self.mesh.n_elements() {
            let g = self.geometry(t);
            for (i, gi) in self.local_to_global[t].iter().enumerate() {
                for (j, gj) in self.local_to_global[t].iter().enumerate() {
                    m[(*gi, *gj)] += self.basis[i].mul(&self.basis[j]).integrate(g.area);
                }
            }
        }
        m
    }

    /// Load vector of a constant right-hand side.
    pub fn load(&self, f: f64) -> DVector<f64> {
        let mut b = DVector::zeros(self.n);
        for t in 0..self.mesh.n_elements() {
            let g = self.geometry(t);
            for (i, gi) in self.local_to_global[t].iter().enumerate() {
                b[*gi] += f * self.basis[i].integrate(g.area);
            }
        }
        b
    }

    /// Element containing `x` and its barycentric coordinates.
    pub fn locate(&self, x: Point) -> (usize, [f64; 3]) {
        for t in 0..self.mesh.n_elements() {
            let l = self.geometry(t).barycentric(x);
            if l.iter().all(|&v| v >= -1e-12) {
                return (t, l);
            }
        }
        panic!("point {x:?} outside the mesh");
    }

    pub fn evaluate(&self, u: &DVector<f64>, x: Point) -> f64 {
        let (t, l) = self.locate(x);
        self.local_to_global[t]
            .iter()
            .enumerate()
            .map(|(i, &g)| u[g] * self.basis[i].eval(l))
            .sum()
    }

    /// Matrix with entry `(i, j)` = coarse basis `j` at the `i`-th point.
    pub fn embedding(&self, points: &[Point]) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(points.len(), self.n);
        for (i, &x) in points.iter().enumerate() {
            let (t, l) = self.locate(x);
            for (k, &g) in self.local_to_global[t].iter().enumerate() {
                p[(i, g)] += self.basis[k].eval(l);
            }
        }
        p
    }

    /// Symbolic restriction of `u` to element `t`.
    pub fn local(&self, u: &DVector<f64>, t: usize) -> BPoly {
        self.local_to_global[t]
            .iter()
            .enumerate()
            .fold(BPoly::default(), |acc, (i, &g)| {
                acc.add(&self.basis[i].scale(u[g]))
            })
    }
}

pub fn submatrix(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

pub fn subvector(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = a
        .iter()
        .chain(b)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

/// Dense solution of the homogeneous Dirichlet problem; full vector.
pub fn dense_solve(d: &Dense, a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let free = d.free();
    let af = submatrix(a, &free, &free);
    let bf = subvector(b, &free);
    let x = af.lu().solve(&bf).expect("nonsingular");
    let mut u = DVector::zeros(d.n);
    for (k, &i) in free.iter().enumerate() {
        u[i] = x[k];
    }
    u
}

/// Five-point closed Newton-Cotes rule on `[0, 1]` (exact to degree 5).
pub fn boole(f: impl Fn(f64) -> f64) -> f64 {
    let w = [7.0, 32.0, 12.0, 32.0, 7.0];
    (0..5).map(|i| w[i] * f(i as f64 / 4.0)).sum::<f64>() / 90.0
}

/// Explicit residual indicators `eta_T^2` for constant `f`, unit diffusion.
pub fn residual_indicators(d: &Dense, u: &DVector<f64>, f: f64, a: i32, b: i32) -> Vec<f64> {
    let mesh = &d.mesh;
    let mut eta: Vec<f64> = (0..mesh.n_elements())
        .map(|t| {
            let g = d.geometry(t);
            let r = g.laplacian(&d.local(u, t)).add(&BPoly::constant(f));
            mesh.diameter(t).powi(a) * r.mul(&r).integrate(g.area)
        })
        .collect();
    // Interior edges from shared vertex pairs.
    let mut owners: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
    for (t, tri) in mesh.elements.iter().enumerate() {
        for k in 0..3 {
            let (x, y) = (tri[k], tri[(k + 1) % 3]);
            owners.entry([x.min(y), x.max(y)]).or_default().push(t);
        }
    }
    let mut edges: Vec<_> = owners.into_iter().filter(|(_, o)| o.len() == 2).collect();
    edges.sort();
    for ([v, w], o) in edges {
        let (pv, pw) = (mesh.vertices[v], mesh.vertices[w]);
        let len = (pw[0] - pv[0]).hypot(pw[1] - pv[1]);
        let n = [(pw[1] - pv[1]) / len, (pv[0] - pw[0]) / len];
        let sides: Vec<(Geometry, [BPoly; 2])> = o
            .iter()
            .map(|&t| {
                let g = d.geometry(t);
                let grad = g.gradient(&d.local(u, t));
                (g, grad)
            })
            .collect();
        let jump = |s: f64| {
            let x = [pv[0] + s * (pw[0] - pv[0]), pv[1] + s * (pw[1] - pv[1])];
            let mut j = 0.0;
            for (k, (g, grad)) in sides.iter().enumerate() {
                let l = g.barycentric(x);
                let sign = if k == 0 { 1.0 } else { -1.0 };
                j += sign * (grad[0].eval(l) * n[0] + grad[1].eval(l) * n[1]);
            }
            j * j
        };
        let term = len.powi(b) * len * boole(jump);
        for &t in &o {
            eta[t] += 0.5 * term;
        }
    }
    eta
}

/// Every pipeline stage on the unit-load Poisson problem over the `n = 2`
/// structured square with degree `p`, against the dense oracle. Returns
/// `(stage, relative difference)` pairs.
pub fn pipeline_differences(p: usize) -> Vec<(String, f64)> {
    use smoothfem::assembly::{
        assemble_load, assemble_mass_matrix, assemble_matrix, restrict_free, Operator,
    };
    use smoothfem::estimators::{
        gauss_seidel_smooth, implicit_patch_estimate, jacobi_estimate, residual_estimate_h1,
        residual_estimate_l2, smoothed_norm_estimate, EstimatorKind, FineVariant, Norm, TwoLevel,
    };
    use smoothfem::mesh::make_structured_square;
    use smoothfem::problems::poisson_square_smooth;
    use smoothfem::solve::solve_spd;
    use std::sync::Arc;

    let mut problem = poisson_square_smooth();
    problem.mesh = make_structured_square(2).unwrap();
    problem.rhs = Arc::new(|_| 1.0);
    problem.exact = None;
    let mut out = Vec::new();
    let mut push =
        |stage: &str, a: &[f64], b: &[f64]| out.push((format!("P{p} {stage}"), max_rel_diff(a, b)));
    let flat = |m: &DMatrix<f64>| m.transpose().as_slice().to_vec();
    let sparse_flat = |m: &smoothfem::sparse::CsrMatrix| m.to_dense().concat();

    let space = FeSpace::new(problem.mesh.clone(), p).unwrap();
    let d = Dense::new(&space);
    assert_eq!(d.free(), space.free_dofs(), "boundary dofs differ");

    // Assembly.
    let a = assemble_matrix(&space, &problem.form).unwrap();
    let b = assemble_load(&space, &|_| 1.0);
    let a_o = d.stiffness();
    let b_o = d.load(1.0);
    push("stiffness", &sparse_flat(&a), &flat(&a_o));
    push(
        "mass",
        &sparse_flat(&assemble_mass_matrix(&space)),
        &flat(&d.mass()),
    );
    push("load", &b, b_o.as_slice());

    // Solve.
    let sys = restrict_free(&a, &b, &space, None);
    let u = sys.expand(&space, &solve_spd(&sys.matrix, &sys.rhs, 1e-15).unwrap().0);
    let u_o = dense_solve(&d, &a_o, &b_o);
    push("solve", &u, u_o.as_slice());

    // Fine residual on the red refinement.
    let two = TwoLevel::new(&problem, &space, FineVariant::Red).unwrap();
    let df = Dense::new(&two.fine);
    let free_f = df.free();
    let af_o = df.stiffness();
    let embed = d.embedding(two.fine.dof_coords());
    let r_full = df.load(1.0) - &af_o * embed * &u_o;
    let r_o = subvector(&r_full, &free_f);
    let r = two.residual(&u).unwrap();
    push("fine residual", &r.values, r_o.as_slice());

    let aff_o = submatrix(&af_o, &free_f, &free_f);
    let jac = jacobi_estimate(
        &r.values,
        &two.fine_free_matrix,
        &two.fine,
        &two.localization,
    )
    .unwrap();
    let jac_o = (0..r_o.len())
        .map(|i| r_o[i] * r_o[i] / aff_o[(i, i)])
        .sum::<f64>()
        .sqrt();
    push("jacobi estimate", &[jac.global], &[jac_o]);

    let gs = gauss_seidel_smooth(&r.values, &two.fine_free_matrix).unwrap();
    let gs_o = aff_o.upper_triangle().solve_upper_triangular(&r_o).unwrap();
    push("gauss-seidel smoothing", &gs, gs_o.as_slice());

    let x = DVector::from_column_slice(&gs);
    for (name, metric, m_o, norm) in [
        ("smoothed H1 norm", Operator::Stiffness, &af_o, Norm::H1Semi),
        ("smoothed L2 norm", Operator::Mass, &df.mass(), Norm::L2),
    ] {
        let e = smoothed_norm_estimate(
            &gs,
            &two.fine,
            metric,
            &two.localization,
            EstimatorKind::GaussSeidel,
            norm,
        )
        .unwrap();
        let mff = submatrix(m_o, &free_f, &free_f);
        push(name, &[e.global], &[x.dot(&(&mff * &x)).sqrt()]);
    }

    // Explicit residual estimators.
    let h1 = residual_estimate_h1(&problem, &space, &u).unwrap();
    push(
        "residual_h1 indicators",
        &h1.squared_indicators(),
        &residual_indicators(&d, &u_o, 1.0, 2, 1),
    );
    let l2 = residual_estimate_l2(&problem, &space, &u).unwrap();
    push(
        "residual_l2 indicators",
        &l2.squared_indicators(),
        &residual_indicators(&d, &u_o, 1.0, 4, 3),
    );

    // Vertex-patch estimator with degree p + 1.
    let high = FeSpace::new(problem.mesh.clone(), p + 1).unwrap();
    let dq = Dense::new(&high);
    let aq = dq.stiffness();
    let uq = d.embedding(high.dof_coords()) * &u_o;
    let rq = dq.load(1.0) - &aq * &uq;
    let mesh = &problem.mesh;
    let mut squares = vec![0.0; mesh.n_elements()];
    let mut total = 0.0;
    for k in 0..mesh.n_vertices() {
        let patch: Vec<usize> = (0..mesh.n_elements())
            .filter(|&t| mesh.elements[t].contains(&k))
            .collect();
        let local: Vec<usize> = (0..dq.n)
            .filter(|&i| {
                !dq.boundary[i]
                    && patch.iter().any(|&t| {
                        let l = dq.geometry(t).barycentric(high.dof_coords()[i]);
                        let lk = mesh.elements[t].iter().position(|&v| v == k).unwrap();
                        l.iter().all(|&v| v >= -1e-12) && l[lk] > 1e-12
                    })
            })
            .collect();
        if local.is_empty() {
            continue;
        }
        let rl = subvector(&rq, &local);
        let eta = submatrix(&aq, &local, &local).lu().solve(&rl).unwrap();
        let energy = eta.dot(&rl);
        total += energy;
        for &t in &patch {
            squares[t] += energy / patch.len() as f64;
        }
    }
    let patch = implicit_patch_estimate(&problem, &space, &u, p + 1).unwrap();
    push("implicit_patch global", &[patch.global], &[total.sqrt()]);
    push(
        "implicit_patch indicators",
        &patch.squared_indicators(),
        &squares,
    );
    out
}
