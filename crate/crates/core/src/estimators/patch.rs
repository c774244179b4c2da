use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use super::{EstimatorKind, EstimatorResult, Norm};
use crate::assembly::{assemble_load, assemble_matrix};
use crate::par;
use crate::problems::Problem;
use crate::space::{FeSpace, Prolongation};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Free dofs of the local space on the patch of vertex `k`: dofs of the patch
/// elements that are neither on the domain boundary nor on the outer
/// boundary of the patch (the edges opposite `k`).
fn patch_dofs(space: &FeSpace, k: usize, patch: &[usize]) -> Vec<usize> {
    let basis = space.basis();
    let mut dofs = BTreeSet::new();
    for &t in patch {
        let lk = space.mesh().elements[t]
            .iter()
            .position(|&v| v == k)
            .expect("patch element contains its vertex");
        for (i, &g) in space.element_dofs(t).iter().enumerate() {
            if basis.multi_index(i)[lk] > 0 && !space.is_boundary(g) {
                dofs.insert(g);
            }
        }
    }
    dofs.into_iter().collect()
}

/// Solves the local residual problem on `dofs` and returns its energy
/// `eta^T A eta = eta^T r`.
fn local_energy(a: &CsrMatrix, r: &[f64], dofs: &[usize]) -> Result<f64> {
    if dofs.is_empty() {
        return Ok(0.0);
    }
    let n = dofs.len();
    let local = DMatrix::from_fn(n, n, |i, j| a.get(dofs[i], dofs[j]));
    let rhs = DVector::from_iterator(n, dofs.iter().map(|&g| r[g]));
    let chol = local
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("local patch matrix".into()))?;
    let eta = chol.solve(&rhs);
    Ok(eta.dot(&rhs).max(0.0))
}

/// Local energies `|eta_k|_a^2` for every mesh vertex `k`: the local
/// Dirichlet problem `a(eta_k, v) = (f, v) - a(u_h, v)` is solved in the degree
/// `q` space on the vertex patch with zero trace on the patch boundary.
pub fn patch_energies(
    problem: &Problem,
    space: &FeSpace,
    solution: &[f64],
    q: usize,
) -> Result<Vec<f64>> {
    if !problem.form.is_symmetric() {
        return Err(Error::Unsupported(
            "the vertex-patch estimator needs a symmetric form".into(),
        ));
    }
    let high = FeSpace::new(space.mesh_arc().clone(), q)?;
    let lifted = if q == space.degree() {
        solution.to_vec()
    } else {
        Prolongation::degree_raise(space, &high)?.apply(solution)
    };
    let a = assemble_matrix(&high, &problem.form)?;
    let b = assemble_load(&high, problem.rhs.as_ref());
    let au = a.mul_vec(&lifted);
    let r: Vec<f64> = b.iter().zip(&au).map(|(b, au)| b - au).collect();

    let patches = space.mesh().vertex_patches();
    par::map_range(space.mesh().n_vertices(), |k| {
        local_energy(&a, &r, &patch_dofs(&high, k, &patches.elements[k]))
    })
    .into_iter()
    .collect()
}

/// Vertex-patch estimator: `sqrt` of the sum of all local energies, with each
/// local energy split equally among the elements of its patch.
pub fn implicit_patch_estimate(
    problem: &Problem,
    space: &FeSpace,
    solution: &[f64],
    q: usize,
) -> Result<EstimatorResult> {
    let energies = patch_energies(problem, space, solution, q)?;
    let patches = space.mesh().vertex_patches();
    let mut squares = vec![0.0; space.mesh().n_elements()];
    let mut total = 0.0;
    for (energy, patch) in energies.iter().zip(&patches.elements) {
        total += energy;
        for &t in patch {
            squares[t] += energy / patch.len() as f64;
        }
    }
    Ok(EstimatorResult::from_squares(
        total.sqrt(),
        squares,
        EstimatorKind::ImplicitPatch,
        Norm::Energy,
    ))
}
