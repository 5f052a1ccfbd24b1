//! A numerical laboratory for the spin-1/2 relativistic quantum
//! Hamilton-Jacobi formalism in one dimension.
//!
//! The pipeline, end to end:
//!
//! 1. [`dirac`] integrates the stationary 1D Dirac spinor system, producing
//!    two independent real solutions with dense output.
//! 2. [`action`] builds the reduced actions S0 and Z0 (one per spin
//!    projection) from arctangents of solution ratios, with continuous
//!    unwrapping and analytic derivatives to third order.
//! 3. [`qshje`] evaluates the two stationary Hamilton-Jacobi residuals and
//!    the deformation function f by two independent routes.
//! 4. [`dynamics`] turns the conjugate-momentum law into deterministic
//!    trajectories with turning-point and node events.
//! 5. [`scenario`] and [`run`] drive everything from a TOML scenario file
//!    and emit CSV/JSON for plotting and testing.
//!
//! The accompanying guide (`book/`) walks through each stage with runnable
//! snippets.

pub mod action;
pub mod dirac;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod ode;
pub mod qshje;
pub mod run;
pub mod scenario;

pub use action::{schwarzian, Branch, BranchConstants, ReducedAction};
pub use dirac::{solve_spinor_pair, spinor_rhs, PairValues, SpinorSolutionPair, SpinorState};
pub use dynamics::{
    conjugate_momentum, conservation_residual, integrate_trajectory, lagrangian, limit_report,
    spinless_momentum, velocity, Trajectory, TrajectoryOptions,
};
pub use error::{Error, Result};
pub use model::{
    energy_regime, mass_shell_margin, EnergyRegime, PhysicalSetup, PotentialModel, RegimeClass,
    TabulatedPotential, UnitSystem,
};
pub use qshje::{
    curvature_term, f_from_action, f_from_energy, mass_shell_denominator, qshje_residual,
    ResidualReport, SpinSign,
};
pub use scenario::{parse_scenario, Scenario};
pub use run::{run_scenario, Command, RunSummary};
