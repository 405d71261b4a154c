//! Closed 1-forms on triangulated manifolds, torus fibrations built from them, and
//! numerical witnesses for invariant tori of integrable Hamiltonian systems.

pub mod catalog;
pub mod cli;
pub mod cohomology;
pub mod exact;
pub mod expr;
pub mod geomech;
pub mod io;
pub mod mesh;
pub mod report;
pub mod tischler;
pub mod torus;
