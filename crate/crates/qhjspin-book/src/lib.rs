//! Doc-test shim for the guide in `book/`.
//!
//! mdbook renders the chapters but cannot execute their code samples, so
//! each chapter is also included here as a module doc comment;
//! `cargo test --doc -p qhjspin-book` then compiles and runs every
//! ```rust``` block. If the library API drifts away from the book, the
//! workspace test run fails.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/setup-and-potentials.md")]
pub mod setup_and_potentials {}

#[doc = include_str!("../../../book/src/dirac-solver.md")]
pub mod dirac_solver {}

#[doc = include_str!("../../../book/src/reduced-actions.md")]
pub mod reduced_actions {}

#[doc = include_str!("../../../book/src/hamilton-jacobi-residuals.md")]
pub mod hamilton_jacobi_residuals {}

#[doc = include_str!("../../../book/src/momenta-and-trajectories.md")]
pub mod momenta_and_trajectories {}

#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
