//! Benchmark problems: the L-shape corner singularity, a smooth square and a
//! convection-dominated interface problem.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::assembly::{constant, BilinearForm, ScalarField, VectorField};
use crate::mesh::{make_lshape, make_structured_square, Mesh};
use crate::space::FeSpace;
use crate::{Error, Point, Result};

/// Exact solution with its gradient. `singular_points` are where the
/// gradient blows up; elements touching them get a higher quadrature degree.
#[derive(Clone)]
pub struct ExactSolution {
    pub value: ScalarField,
    pub gradient: VectorField,
    pub singular_points: Vec<Point>,
}

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub mesh: Mesh,
    pub form: BilinearForm,
    pub rhs: ScalarField,
    pub dirichlet: ScalarField,
    pub exact: Option<ExactSolution>,
    /// Vertical line `x = c` that every mesh must resolve, if any.
    pub interface: Option<f64>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("elements", &self.mesh.n_elements())
            .field("form", &self.form)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

pub const NAMES: [&str; 3] = [
    "poisson_lshape",
    "poisson_square_smooth",
    "convection_diffusion_interface",
];

pub fn by_name(name: &str) -> Result<Problem> {
    match name {
        "poisson_lshape" => Ok(poisson_lshape()),
        "poisson_square_smooth" => Ok(poisson_square_smooth()),
        "convection_diffusion_interface" => Ok(convection_diffusion_interface()),
        other => Err(Error::InvalidInput(format!(
            "unknown problem '{other}' (expected one of {})",
            NAMES.join(", ")
        ))),
    }
}

/// Angle in `[0, 2 pi)`; on the L-shape this is `[0, 3 pi / 2]`, measured from
/// the positive x axis so that both edges at the re-entrant corner are zero
/// sets of `sin(2 theta / 3)`.
fn angle(x: Point) -> f64 {
    let t = x[1].atan2(x[0]);
    if t < 0.0 {
        t + 2.0 * PI
    } else {
        t
    }
}

pub fn lshape_exact(x: Point) -> f64 {
    let r = x[0].hypot(x[1]);
    r.powf(2.0 / 3.0) * (2.0 * angle(x) / 3.0).sin()
}

pub fn lshape_gradient(x: Point) -> [f64; 2] {
    let r = x[0].hypot(x[1]);
    let t = angle(x);
    let k = 2.0 / 3.0 * r.powf(-1.0 / 3.0);
    // u_r = k sin(2t/3), (1/r) u_t = k cos(2t/3)
    let (ur, ut) = (k * (2.0 * t / 3.0).sin(), k * (2.0 * t / 3.0).cos());
    let (c, s) = (t.cos(), t.sin());
    [ur * c - ut * s, ur * s + ut * c]
}

/// `-Delta u = 0` on `(-1,1)^2 \ [0,1) x [-1,0)` with `u = r^(2/3) sin(2 theta/3)`.
pub fn poisson_lshape() -> Problem {
    let value: ScalarField = Arc::new(lshape_exact);
    Problem {
        name: "poisson_lshape".into(),
        mesh: make_lshape().expect("L-shape mesh is valid"),
        form: BilinearForm::laplacian(),
        rhs: constant(0.0),
        dirichlet: value.clone(),
        exact: Some(ExactSolution {
            value,
            gradient: Arc::new(lshape_gradient),
            singular_points: vec![[0.0, 0.0]],
        }),
        interface: None,
    }
}

/// `-Delta u = 2 pi^2 u` on the unit square with `u = sin(pi x) sin(pi y)`.
pub fn poisson_square_smooth() -> Problem {
    let u = |x: Point| (PI * x[0]).sin() * (PI * x[1]).sin();
    Problem {
        name: "poisson_square_smooth".into(),
        mesh: make_structured_square(4).expect("square mesh is valid"),
        form: BilinearForm::laplacian(),
        rhs: Arc::new(move |x| 2.0 * PI * PI * u(x)),
        dirichlet: constant(0.0),
        exact: Some(ExactSolution {
            value: Arc::new(u),
            gradient: Arc::new(|x| {
                [
                    PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
                    PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
                ]
            }),
            singular_points: Vec::new(),
        }),
        interface: None,
    }
}

pub fn interface_diffusion(x: Point) -> f64 {
    if x[0] <= 0.5 {
        1.0
    } else {
        1e-3
    }
}

/// `-div(alpha grad u) - div(beta u) = 1` weakly, i.e.
/// `(alpha grad u, grad v) + (beta u, grad v) = (1, v)`, with `beta = (1, 2)`,
/// `alpha = 1` left of `x = 1/2` and `1e-3` right of it, `u = 0` on the boundary.
pub fn convection_diffusion_interface() -> Problem {
    convection_diffusion_interface_on(16).expect("n = 16 resolves the interface")
}

pub fn convection_diffusion_interface_on(n: usize) -> Result<Problem> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "the interface x = 0.5 needs an even number of cells, got {n}"
        )));
    }
    Ok(Problem {
        name: "convection_diffusion_interface".into(),
        mesh: make_structured_square(n)?,
        form: BilinearForm {
            diffusion: Arc::new(interface_diffusion),
            convection: Some(Arc::new(|_| [1.0, 2.0])),
            reaction: None,
        },
        rhs: constant(1.0),
        dirichlet: constant(0.0),
        exact: None,
        interface: Some(0.5),
    })
}

impl Problem {
    /// Replaces the initial mesh, checking interface alignment.
    pub fn with_mesh(mut self, mesh: Mesh) -> Result<Self> {
        self.mesh = mesh;
        self.check_mesh(&self.mesh)?;
        Ok(self)
    }

    /// Rejects meshes with an element straddling the interface.
    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        let Some(c) = self.interface else {
            return Ok(());
        };
        for t in 0..mesh.n_elements() {
            let xs = mesh.element_vertices(t).map(|v| v[0]);
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo < c - 1e-12 && hi > c + 1e-12 {
                return Err(Error::InvalidMesh(format!(
                    "element {t} crosses the interface x = {c}"
                )));
            }
        }
        Ok(())
    }

    /// Largest deviation between the exact solution and the Dirichlet data
    /// over the boundary dofs of `space` (zero without an exact solution).
    pub fn boundary_mismatch(&self, space: &FeSpace) -> f64 {
        let Some(exact) = &self.exact else {
            return 0.0;
        };
        space
            .dof_coords()
            .iter()
            .enumerate()
            .filter(|&(i, _)| space.is_boundary(i))
            .map(|(_, &x)| ((exact.value)(x) - (self.dirichlet)(x)).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_matrix;

    #[test]
    fn lshape_value_at_minus_one() {
        assert!((lshape_exact([-1.0, 0.0]) - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn lshape_vanishes_on_reentrant_edges() {
        for k in 1..=10 {
            let s = k as f64 / 10.0;
            assert!(lshape_exact([s, 0.0]).abs() < 1e-15);
            assert!(lshape_exact([0.0, -s]).abs() < 1e-15);
        }
    }

    #[test]
    fn lshape_is_harmonic() {
        let pts = [
            [-0.5, 0.5],
            [0.3, 0.7],
            [-0.8, -0.4],
            [-0.2, -0.9],
            [0.6, 0.2],
            [-0.1, 0.1],
            [-0.6, -0.6],
            [0.9, 0.9],
            [-0.3, -0.2],
            [0.15, 0.4],
        ];
        let h = 1e-4;
        for x in pts {
            let lap = (lshape_exact([x[0] + h, x[1]])
                + lshape_exact([x[0] - h, x[1]])
                + lshape_exact([x[0], x[1] + h])
                + lshape_exact([x[0], x[1] - h])
                - 4.0 * lshape_exact(x))
                / (h * h);
            assert!(lap.abs() < 1e-6, "{x:?}: {lap}");
        }
    }

    #[test]
    fn lshape_gradient_matches_differences() {
        let h = 1e-6;
        for x in [[-0.5, 0.5], [0.3, 0.7], [-0.2, -0.9], [0.6, 0.2]] {
            let g = lshape_gradient(x);
            let gx = (lshape_exact([x[0] + h, x[1]]) - lshape_exact([x[0] - h, x[1]])) / (2.0 * h);
            let gy = (lshape_exact([x[0], x[1] + h]) - lshape_exact([x[0], x[1] - h])) / (2.0 * h);
            assert!((g[0] - gx).abs() < 1e-7 && (g[1] - gy).abs() < 1e-7);
        }
    }

    #[test]
    fn smooth_square_data() {
        let p = poisson_square_smooth();
        assert!(((p.rhs)([0.5, 0.5]) - 2.0 * PI * PI).abs() < 1e-12);
        let s = FeSpace::new(p.mesh.clone(), 2).unwrap();
        assert!(p.boundary_mismatch(&s) < 1e-12);
    }

    #[test]
    fn lshape_boundary_data_is_exact_solution() {
        let p = poisson_lshape();
        let s = FeSpace::new(p.mesh.clone(), 3).unwrap();
        assert!(p.boundary_mismatch(&s) <= 1e-12);
    }

    #[test]
    fn interface_problem() {
        let p = convection_diffusion_interface();
        assert_eq!((p.form.diffusion)([0.25, 0.3]), 1.0);
        assert_eq!((p.form.diffusion)([0.75, 0.3]), 1e-3);
        let s = FeSpace::new(p.mesh.clone(), 1).unwrap();
        let a = assemble_matrix(&s, &p.form).unwrap();
        assert!(a.asymmetry() > 0.0);
        assert!(convection_diffusion_interface_on(5).is_err());
        let skew =
            Mesh::with_derived_boundary(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]])
                .unwrap();
        assert!(p.with_mesh(skew).is_err());
    }

    #[test]
    fn degenerate_interface_form_is_the_laplacian() {
        let mut p = convection_diffusion_interface_on(4).unwrap();
        p.form.diffusion = constant(1.0);
        p.form.convection = Some(Arc::new(|_| [0.0, 0.0]));
        let s = FeSpace::new(p.mesh.clone(), 2).unwrap();
        let a = assemble_matrix(&s, &p.form).unwrap();
        let k = assemble_matrix(&s, &poisson_square_smooth().form).unwrap();
        for (x, y) in a
            .to_dense()
            .iter()
            .flatten()
            .zip(k.to_dense().iter().flatten())
        {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn lookup_by_name() {
        for name in NAMES {
            assert_eq!(by_name(name).unwrap().name, name);
        }
        assert!(by_name("helmholtz").is_err());
    }
}
