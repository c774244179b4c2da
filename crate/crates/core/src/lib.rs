//! Adaptive finite elements on 2D triangulations with smoother-based
//! a posteriori error estimators.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: conforming triangulations, uniform red refinement (the
//!   auxiliary fine mesh) and newest-vertex bisection (adaptive refinement).
//! * [`space`]: continuous Lagrange spaces of any degree and the
//!   coarse-to-fine / low-to-high degree prolongations.
//! * [`assembly`]: stiffness, convection, mass and load assembly.
//! * [`solve`]: preconditioned CG, sparse LU and matrix-weighted norms.
//! * [`estimators`]: fine-grid residuals, Jacobi / Gauss-Seidel smoother
//!   estimators, vertex-patch estimators, explicit residual estimators and
//!   two-level contraction diagnostics.
//! * [`afem`]: Dörfler marking and the solve-estimate-mark-refine loop.
//! * [`problems`], [`config`], [`experiment`]: benchmark problems, run
//!   configuration and the file-producing experiment drivers.
//!
//! Element loops, per-vertex patch solves and random probes run on rayon when
//! the `parallel` feature is enabled (the default). All reductions happen
//! sequentially in a fixed order, so results are bit-identical whatever the
//! thread count.

pub mod afem;
pub mod assembly;
pub mod basis;
pub mod checks;
pub mod config;
mod error;
pub mod estimators;
pub mod experiment;
pub mod mesh;
pub mod par;
pub mod plot;
pub mod problems;
pub mod quadrature;
pub mod solve;
pub mod space;
pub mod sparse;

pub use error::{Error, Result};

pub type Point = [f64; 2];
