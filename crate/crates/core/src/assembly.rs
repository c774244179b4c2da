//! Quadrature-based assembly of matrices and load vectors.

use std::fmt;
use std::sync::Arc;

use crate::basis::BaryJet;
use crate::par;
use crate::quadrature::QuadratureRule;
use crate::space::FeSpace;
use crate::sparse::CsrMatrix;
use crate::{Error, Point, Result};

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

pub fn constant(c: f64) -> ScalarField {
    Arc::new(move |_| c)
}

/// `a(u, v) = (alpha grad u, grad v) + (beta u, grad v) + (c u, v)`.
///
/// The convection term is taken as written, without integration by parts
/// and without stabilisation.
#[derive(Clone)]
pub struct BilinearForm {
    pub diffusion: ScalarField,
    pub convection: Option<VectorField>,
    pub reaction: Option<ScalarField>,
}

impl fmt::Debug for BilinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BilinearForm")
            .field("convection", &self.convection.is_some())
            .field("reaction", &self.reaction.is_some())
            .finish()
    }
}

impl BilinearForm {
    pub fn laplacian() -> Self {
        BilinearForm {
            diffusion: constant(1.0),
            convection: None,
            reaction: None,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.convection.is_none()
    }
}

/// What an element matrix discretises.
#[derive(Debug, Clone, Copy)]
pub enum Operator<'a> {
    Form(&'a BilinearForm),
    /// `(grad u, grad v)`, the H1 seminorm Gram matrix.
    Stiffness,
    /// `(u, v)`, the L2 Gram matrix.
    Mass,
}

pub fn matrix_quadrature_degree(p: usize) -> usize {
    (2 * p).max(4)
}

pub fn load_quadrature_degree(p: usize) -> usize {
    2 * p + 2
}

/// Basis jets of a space tabulated at the points of a quadrature rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub rule: QuadratureRule,
    pub jets: Vec<Vec<BaryJet>>,
}

impl Tabulation {
    pub fn new(space: &FeSpace, degree: usize) -> Self {
        let rule = QuadratureRule::triangle(degree);
        let jets = rule
            .barycentric()
            .into_iter()
            .map(|l| space.basis().jets(l))
            .collect();
        Tabulation { rule, jets }
    }
}

/// Dense row-major element matrix; row = test function, column = trial function.
pub fn element_matrix(
    space: &FeSpace,
    t: usize,
    op: Operator<'_>,
    tab: &Tabulation,
) -> Result<Vec<f64>> {
    let n = space.n_local();
    let map = space.element_map(t);
    let mut k = vec![0.0; n * n];
    let mut grads = vec![[0.0; 2]; n];
    for (q, jets) in tab.jets.iter().enumerate() {
        let w = tab.rule.weights[q] * map.det;
        let lambda = {
            let [x, y] = tab.rule.points[q];
            [1.0 - x - y, x, y]
        };
        for (g, jet) in grads.iter_mut().zip(jets) {
            *g = map.gradient(jet.d1);
        }
        match op {
            Operator::Mass => {
                for i in 0..n {
                    for j in 0..n {
                        k[i * n + j] += w * jets[i].value * jets[j].value;
                    }
                }
            }
            Operator::Stiffness => {
                for i in 0..n {
                    for j in 0..n {
                        k[i * n + j] += w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                    }
                }
            }
            Operator::Form(form) => {
                let x = map.to_physical(lambda);
                let alpha = (form.diffusion)(x);
                if !(alpha > 0.0) {
                    return Err(Error::NonPositiveDiffusion {
                        value: alpha,
                        x: x[0],
                        y: x[1],
                    });
                }
                let beta = form.convection.as_ref().map(|b| b(x));
                let c = form.reaction.as_ref().map_or(0.0, |r| r(x));
                for i in 0..n {
                    for j in 0..n {
                        let mut v = alpha * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                        if let Some(b) = beta {
                            v += jets[j].value * (b[0] * grads[i][0] + b[1] * grads[i][1]);
                        }
                        if c != 0.0 {
                            v += c * jets[i].value * jets[j].value;
                        }
                        k[i * n + j] += w * v;
                    }
                }
            }
        }
    }
    Ok(k)
}

/// Global matrix over all dofs (boundary conditions are applied by [`restrict_free`]).
pub fn assemble(space: &FeSpace, op: Operator<'_>) -> Result<CsrMatrix> {
    let tab = Tabulation::new(space, matrix_quadrature_degree(space.degree()));
    let n_el = space.mesh().n_elements();
    let locals = par::map_range(n_el, |t| element_matrix(space, t, op, &tab));
    let n = space.n_local();
    let mut triplets = Vec::with_capacity(n_el * n * n);
    for (t, local) in locals.into_iter().enumerate() {
        let local = local?;
        let dofs = space.element_dofs(t);
        for (i, &gi) in dofs.iter().enumerate() {
            for (j, &gj) in dofs.iter().enumerate() {
                triplets.push((gi, gj, local[i * n + j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(
        space.n_dofs(),
        space.n_dofs(),
        triplets,
    ))
}

pub fn assemble_matrix(space: &FeSpace, form: &BilinearForm) -> Result<CsrMatrix> {
    assemble(space, Operator::Form(form))
}

pub fn assemble_h1_seminorm_matrix(space: &FeSpace) -> CsrMatrix {
    assemble(space, Operator::Stiffness).expect("stiffness assembly has no failure mode")
}

pub fn assemble_mass_matrix(space: &FeSpace) -> CsrMatrix {
    assemble(space, Operator::Mass).expect("mass assembly has no failure mode")
}

/// `b_i = (f, phi_i)` with a degree `2p + 2` rule.
pub fn assemble_load(space: &FeSpace, f: &(dyn Fn(Point) -> f64 + Sync)) -> Vec<f64> {
    let tab = Tabulation::new(space, load_quadrature_degree(space.degree()));
    let n = space.n_local();
    let locals = par::map_range(space.mesh().n_elements(), |t| {
        let map = space.element_map(t);
        let mut b = vec![0.0; n];
        for (q, jets) in tab.jets.iter().enumerate() {
            let [x, y] = tab.rule.points[q];
            let fx = f(map.to_physical([1.0 - x - y, x, y]));
            let w = tab.rule.weights[q] * map.det * fx;
            for (bi, jet) in b.iter_mut().zip(jets) {
                *bi += w * jet.value;
            }
        }
        b
    });
    let mut load = vec![0.0; space.n_dofs()];
    for (t, local) in locals.iter().enumerate() {
        for (&g, v) in space.element_dofs(t).iter().zip(local) {
            load[g] += v;
        }
    }
    load
}

/// A linear system over the free dofs with Dirichlet values eliminated.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Full-length vector carrying the Dirichlet values on boundary dofs.
    pub lift: Vec<f64>,
}

impl ConstrainedSystem {
    /// Full solution vector from the free-dof solution.
    pub fn expand(&self, space: &FeSpace, free_solution: &[f64]) -> Vec<f64> {
        space.extend(free_solution, Some(&self.lift))
    }
}

/// Restricts `A u = b` to the free dofs, moving the Dirichlet lift `g`
/// (only its boundary entries are used) to the right-hand side.
pub fn restrict_free(
    a: &CsrMatrix,
    b: &[f64],
    space: &FeSpace,
    lift: Option<&[f64]>,
) -> ConstrainedSystem {
    let free = space.free_dofs();
    let lift = space.extend(&vec![0.0; free.len()], lift);
    let mut rhs = space.restrict(b);
    if lift.iter().any(|&v| v != 0.0) {
        let ag = a.mul_vec(&lift);
        for (r, &i) in rhs.iter_mut().zip(free) {
            *r -= ag[i];
        }
    }
    ConstrainedSystem {
        matrix: a.submatrix(free, free),
        rhs,
        lift,
    }
}
