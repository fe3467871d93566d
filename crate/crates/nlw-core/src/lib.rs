//! Pseudo-spectral Galerkin solver and verification toolkit for the damped
//! wave equation with nonlocal weak damping
//! `u_tt - Lap u + k|u_t|^p u_t + f(u) = g` on boxes (0,pi)^d with Dirichlet
//! boundary conditions, together with the numerically checkable identities
//! and inequalities of its long-time analysis: the energy law, space-time
//! Strichartz norms with the v/w smallness bootstrap, monotone-damping and
//! interpolation inequalities, dissipativity and trajectory contraction, and
//! the polynomial attraction-rate envelope.

pub mod attractor;
pub mod diagnostics;
pub mod integrator;
pub mod model;
pub mod oracles;
pub mod spectral;

pub use integrator::{IntegratorConfig, Scheme, TrajectoryRecord};
pub use model::{Damping, ModelSpec, Nonlinearity};
pub use spectral::{Grid, PhysicalField, SpectralField, State};
