//! Statevector VQE toolkit with geometry-conditioned, basin-localized initialization.
//!
//! Modules follow the data flow: [`hamiltonian`] builds operators, [`circuit`]
//! prepares ansatz states, [`optim`] refines parameters, [`geometry`] and
//! [`precond`] map molecular geometries to initial angles, and [`diagnostics`]
//! measures landscapes and costs.

pub mod circuit;
pub mod diagnostics;
pub mod geometry;
pub mod hamiltonian;
pub mod optim;
pub mod precond;
