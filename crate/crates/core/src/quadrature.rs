//! Gauss rules on the interval and on the reference triangle.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss-Legendre
//! rules. They are not the most economical rules for a given degree but they
//! exist for every degree, have positive weights and strictly interior points.

use std::f64::consts::PI;

/// Gauss-Legendre rule on `[0, 1]` with `n` points (exact for degree `2n - 1`).
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "a Gauss rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A quadrature rule on the reference triangle `(0,0), (1,0), (0,1)`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Points in reference coordinates `(xi, eta)`.
    pub points: Vec<[f64; 2]>,
    /// Weights, summing to the reference area 1/2.
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    /// Rule exact for polynomials of total degree `degree`.
    pub fn triangle(degree: usize) -> Self {
        // xi = u, eta = v (1 - u); the Jacobian (1 - u) adds one degree in u.
        let nu = (degree + 3) / 2;
        let nv = (degree + 2) / 2;
        let (gu, wu) = gauss_legendre_unit(nu.max(1));
        let (gv, wv) = gauss_legendre_unit(nv.max(1));
        let mut points = Vec::with_capacity(nu * nv);
        let mut weights = Vec::with_capacity(nu * nv);
        for (&u, &a) in gu.iter().zip(&wu) {
            for (&v, &b) in gv.iter().zip(&wv) {
                points.push([u, v * (1.0 - u)]);
                weights.push(a * b * (1.0 - u));
            }
        }
        QuadratureRule {
            points,
            weights,
            degree,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Barycentric coordinates of each point.
    pub fn barycentric(&self) -> Vec<[f64; 3]> {
        self.points
            .iter()
            .map(|&[x, y]| [1.0 - x - y, x, y])
            .collect()
    }
}
