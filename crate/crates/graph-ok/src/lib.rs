//! Graph Ohta-Kawasaki energies and threshold dynamics.
//!
//! The crate is layered bottom-up: [`graph_core`] holds graphs and the
//! weighted calculus, [`spectral_engine`] diagonalizes the Laplacian and
//! applies the heat-type operator, [`functionals`] evaluates the energies
//! and [`mbo_solver`] runs the threshold schemes on top of them.

mod dense;
pub mod functionals;
pub mod graph_builders;
pub mod graph_classes;
pub mod graph_core;
pub mod gradient_flows;
pub mod mbo_solver;
pub mod potential_theory;
pub mod spectral_engine;
