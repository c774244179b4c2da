use super::{EstimatorKind, EstimatorResult, Norm};
use crate::assembly::{load_quadrature_degree, Tabulation};
use crate::par;
use crate::problems::Problem;
use crate::quadrature::gauss_legendre_unit;
use crate::space::FeSpace;
use crate::{Error, Result};

/// Mesh-size powers of the volume and edge terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualWeights {
    /// `h_T^2` and `h_E`: controls the H1 seminorm error.
    H1,
    /// `h_T^4` and `h_E^3`: controls the L2 error.
    L2,
}

impl ResidualWeights {
    fn exponents(self) -> (i32, i32) {
        match self {
            ResidualWeights::H1 => (2, 1),
            ResidualWeights::L2 => (4, 3),
        }
    }
}

pub fn residual_estimate_h1(
    problem: &Problem,
    space: &FeSpace,
    solution: &[f64],
) -> Result<EstimatorResult> {
    residual_estimate(problem, space, solution, ResidualWeights::H1)
}

pub fn residual_estimate_l2(
    problem: &Problem,
    space: &FeSpace,
    solution: &[f64],
) -> Result<EstimatorResult> {
    residual_estimate(problem, space, solution, ResidualWeights::L2)
}

/// Explicit residual estimator
/// `eta_T^2 = h_T^a ||f + div(alpha grad u_h)||_T^2 + 1/2 sum_E h_E^b ||[alpha du_h/dn]||_E^2`
/// over the interior edges `E` of `T`, with `h_T = diam T` and `h_E = |E|`.
///
/// The diffusion coefficient is taken elementwise constant (its value at the
/// centroid) in the jump terms.
pub fn residual_estimate(
    problem: &Problem,
    space: &FeSpace,
    solution: &[f64],
    weights: ResidualWeights,
) -> Result<EstimatorResult> {
    if problem.form.convection.is_some() || problem.form.reaction.is_some() {
        return Err(Error::Unsupported(
            "explicit residual estimators are implemented for pure diffusion".into(),
        ));
    }
    let (a_vol, a_edge) = weights.exponents();
    let mesh = space.mesh();
    let tab = Tabulation::new(space, load_quadrature_degree(space.degree()));
    let alpha = &problem.form.diffusion;

    let volume = par::map_range(mesh.n_elements(), |t| -> Result<f64> {
        let map = space.element_map(t);
        let dofs = space.element_dofs(t);
        let mut integral = 0.0;
        for (q, jets) in tab.jets.iter().enumerate() {
            let [x, y] = tab.rule.points[q];
            let xq = map.to_physical([1.0 - x - y, x, y]);
            let lap: f64 = jets
                .iter()
                .zip(dofs)
                .map(|(jet, &g)| solution[g] * map.laplacian(jet.d2))
                .sum();
            let res = (problem.rhs)(xq) + alpha(xq) * lap;
            if !res.is_finite() {
                return Err(Error::NonFinite { x: xq[0], y: xq[1] });
            }
            integral += tab.rule.weights[q] * map.det * res * res;
        }
        Ok(mesh.diameter(t).powi(a_vol) * integral)
    });

    let edges = space.edges();
    let (s, w) = gauss_legendre_unit(space.degree() + 1);
    let jumps = par::map_range(edges.len(), |e| {
        let [Some(t1), Some(t2)] = edges.edge_elements[e] else {
            return 0.0;
        };
        let [a, b] = edges.edges[e];
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        let normal = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
        let (al1, al2) = (alpha(mesh.centroid(t1)), alpha(mesh.centroid(t2)));
        let (m1, m2) = (space.element_map(t1), space.element_map(t2));
        let mut integral = 0.0;
        for (si, wi) in s.iter().zip(&w) {
            let x = [pa[0] + si * (pb[0] - pa[0]), pa[1] + si * (pb[1] - pa[1])];
            let g1 = space.gradient(solution, t1, m1.barycentric(x));
            let g2 = space.gradient(solution, t2, m2.barycentric(x));
            let jump =
                (al1 * g1[0] - al2 * g2[0]) * normal[0] + (al1 * g1[1] - al2 * g2[1]) * normal[1];
            integral += wi * len * jump * jump;
        }
        len.powi(a_edge) * integral
    });

    let mut squares = volume.into_iter().collect::<Result<Vec<f64>>>()?;
    for (e, j) in jumps.iter().enumerate() {
        for t in edges.edge_elements[e].iter().flatten() {
            squares[*t] += 0.5 * j;
        }
    }
    let global = squares.iter().sum::<f64>().sqrt();
    let (kind, norm) = match weights {
        ResidualWeights::H1 => (EstimatorKind::ResidualH1, Norm::H1Semi),
        ResidualWeights::L2 => (EstimatorKind::ResidualL2, Norm::L2),
    };
    Ok(EstimatorResult::from_squares(global, squares, kind, norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_load, assemble_matrix, constant, restrict_free};
    use crate::mesh::{make_structured_square, uniform_red_refine, Mesh};
    use crate::problems::poisson_square_smooth;
    use crate::solve::solve_spd;
    use crate::space::interpolate;
    use std::sync::Arc;

    fn problem_on(mesh: Mesh, f: f64) -> Problem {
        let mut p = poisson_square_smooth();
        p.mesh = mesh;
        p.rhs = constant(f);
        p.exact = None;
        p
    }

    #[test]
    fn unit_load_on_reference_triangle() {
        let m =
            Mesh::with_derived_boundary(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]])
                .unwrap();
        let p = problem_on(m.clone(), 1.0);
        let s = FeSpace::new(m, 1).unwrap();
        let e = residual_estimate_h1(&p, &s, &[0.0; 3]).unwrap();
        assert!((e.global - 1.0).abs() < 1e-14);
        let l2 = residual_estimate_l2(&p, &s, &[0.0; 3]).unwrap();
        assert!((l2.global - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn linear_harmonic_solution_gives_zero() {
        let p = problem_on(make_structured_square(3).unwrap(), 0.0);
        for deg in 1..=3 {
            let s = FeSpace::new(p.mesh.clone(), deg).unwrap();
            let u = interpolate(&s, |x| 2.0 * x[0] - x[1] + 0.5).unwrap();
            assert!(residual_estimate_h1(&p, &s, &u).unwrap().global < 1e-12);
            assert!(residual_estimate_l2(&p, &s, &u).unwrap().global < 1e-12);
        }
    }

    /// Independent P1 oracle: constant gradients from the nodal values.
    fn p1_oracle(mesh: &Mesh, u: &[f64], f: f64, a: i32, b: i32) -> Vec<f64> {
        let grad = |t: usize| {
            let [p0, p1, p2] = mesh.element_vertices(t);
            let [i0, i1, i2] = mesh.elements[t];
            let (d1, d2) = (u[i1] - u[i0], u[i2] - u[i0]);
            let (x1, y1, x2, y2) = (p1[0] - p0[0], p1[1] - p0[1], p2[0] - p0[0], p2[1] - p0[1]);
            let det = x1 * y2 - x2 * y1;
            [(d1 * y2 - d2 * y1) / det, (x1 * d2 - x2 * d1) / det]
        };
        let mut eta: Vec<f64> = (0..mesh.n_elements())
            .map(|t| mesh.diameter(t).powi(a) * f * f * mesh.area(t))
            .collect();
        let edges = mesh.edge_table();
        for (e, [v, w]) in edges.edges.iter().enumerate() {
            if let [Some(t1), Some(t2)] = edges.edge_elements[e] {
                let (pv, pw) = (mesh.vertices[*v], mesh.vertices[*w]);
                let len = (pw[0] - pv[0]).hypot(pw[1] - pv[1]);
                let n = [(pw[1] - pv[1]) / len, (pv[0] - pw[0]) / len];
                let (g1, g2) = (grad(t1), grad(t2));
                let jump = (g1[0] - g2[0]) * n[0] + (g1[1] - g2[1]) * n[1];
                let term = len.powi(b) * len * jump * jump;
                eta[t1] += 0.5 * term;
                eta[t2] += 0.5 * term;
            }
        }
        eta
    }

    #[test]
    fn matches_independent_p1_oracle() {
        for n in [2, 3] {
            let p = problem_on(make_structured_square(n).unwrap(), 1.0);
            let s = FeSpace::new(p.mesh.clone(), 1).unwrap();
            let a = assemble_matrix(&s, &p.form).unwrap();
            let b = assemble_load(&s, &|_| 1.0);
            let sys = restrict_free(&a, &b, &s, None);
            let u = sys.expand(&s, &solve_spd(&sys.matrix, &sys.rhs, 1e-14).unwrap().0);
            for (weights, (ea, eb)) in
                [(ResidualWeights::H1, (2, 1)), (ResidualWeights::L2, (4, 3))]
            {
                let e = residual_estimate(&p, &s, &u, weights).unwrap();
                let oracle = p1_oracle(&p.mesh, &u, 1.0, ea, eb);
                for (x, y) in e.squared_indicators().iter().zip(&oracle) {
                    assert!((x - y).abs() <= 1e-10 * y.max(1e-300));
                }
            }
        }
    }

    #[test]
    fn l2_volume_weight_drops_sixteenfold() {
        let p = problem_on(make_structured_square(2).unwrap(), 1.0);
        let s = FeSpace::new(p.mesh.clone(), 1).unwrap();
        let coarse = residual_estimate_l2(&p, &s, &vec![0.0; s.n_dofs()]).unwrap();
        let (fine_mesh, _) = uniform_red_refine(&p.mesh);
        let sf = FeSpace::new(fine_mesh, 1).unwrap();
        let fine = residual_estimate_l2(&p, &sf, &vec![0.0; sf.n_dofs()]).unwrap();
        // u_h = 0: only the volume term, h^4 weight against the same integral.
        let ratio = coarse.global.powi(2) / fine.global.powi(2);
        assert!((ratio - 16.0).abs() < 1e-10, "{ratio}");
    }

    #[test]
    fn rejects_convection() {
        let mut p = problem_on(make_structured_square(2).unwrap(), 1.0);
        p.form.convection = Some(Arc::new(|_| [1.0, 1.0]));
        let s = FeSpace::new(p.mesh.clone(), 1).unwrap();
        assert!(residual_estimate_h1(&p, &s, &vec![0.0; 9]).is_err());
    }
}
