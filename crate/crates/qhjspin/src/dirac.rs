//! The 1D stationary Dirac spinor system and dense solution pairs.
//!
//! With the lower component written as phi = i*chi the system closes over
//! the reals:
//!
//! ```text
//! theta' = -(E - V + m0 c^2) chi / (hbar c)
//! chi'   =  (E - V - m0 c^2) theta / (hbar c)
//! ```
//!
//! Two independent solutions are integrated jointly (so they share one
//! mesh) and the conserved cross-current K = theta1*chi2 - theta2*chi1 is
//! monitored as an integrator health check.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{mass_shell_margin, PhysicalSetup, PotentialModel};
use crate::ode::{self, DenseMesh, IntegrateOptions, Node};

/// Real spinor components at a point. The physical lower component is
/// phi = i * chi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorState {
    pub theta: f64,
    pub chi: f64,
}

impl SpinorState {
    pub fn new(theta: f64, chi: f64) -> Self {
        Self { theta, chi }
    }
}

/// Right-hand side of the real first-order Dirac system at x.
pub fn spinor_rhs(
    setup: &PhysicalSetup,
    pot: &PotentialModel,
    x: f64,
    state: &SpinorState,
) -> Result<SpinorState> {
    let ev = setup.energy - pot.value(x)?;
    let mc2 = setup.rest_energy();
    let hc = setup.hbar_c();
    Ok(SpinorState {
        theta: -(ev + mc2) * state.chi / hc,
        chi: (ev - mc2) * state.theta / hc,
    })
}

/// Both solutions and their derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairValues {
    pub theta1: f64,
    pub chi1: f64,
    pub theta2: f64,
    pub chi2: f64,
}

impl PairValues {
    fn from_state(y: &[f64; 4]) -> Self {
        Self { theta1: y[0], chi1: y[1], theta2: y[2], chi2: y[3] }
    }

    pub fn cross_current(&self) -> f64 {
        self.theta1 * self.chi2 - self.theta2 * self.chi1
    }
}

/// Two independent real solutions of the Dirac system with dense output.
#[derive(Debug, Clone)]
pub struct SpinorSolutionPair {
    setup: PhysicalSetup,
    potential: PotentialModel,
    mesh: DenseMesh<4>,
    x_origin: f64,
    cross_current_origin: f64,
    max_drift: f64,
    rel_tol: f64,
}

/// Solve the Dirac system for two initial states given at `x0`, producing
/// dense output over `domain`.
///
/// The initial states must be linearly independent as 2-vectors; the
/// resulting cross-current is constant along x and nonzero.
pub fn solve_spinor_pair(
    setup: &PhysicalSetup,
    pot: &PotentialModel,
    domain: (f64, f64),
    x0: f64,
    init1: SpinorState,
    init2: SpinorState,
    rel_tol: f64,
) -> Result<SpinorSolutionPair> {
    let (x_min, x_max) = domain;
    if !(x_min < x_max) {
        return Err(Error::Validation {
            field: "domain".into(),
            reason: format!("empty interval [{x_min}, {x_max}]"),
        });
    }
    if x0 < x_min || x0 > x_max {
        return Err(Error::OutOfDomain { x: x0, min: x_min, max: x_max });
    }
    if !(rel_tol.is_finite() && rel_tol > 0.0) {
        return Err(Error::Validation {
            field: "tolerance".into(),
            reason: format!("solver tolerance must be positive, got {rel_tol}"),
        });
    }

    let k0 = init1.theta * init2.chi - init2.theta * init1.chi;
    let norm1 = init1.theta.hypot(init1.chi);
    let norm2 = init2.theta.hypot(init2.chi);
    if k0.abs() <= 1e-12 * norm1 * norm2 || norm1 == 0.0 || norm2 == 0.0 {
        return Err(Error::DependentInitialStates { cross_current: k0 });
    }

    let rhs = |x: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        let ev = setup.energy - pot.value(x)?;
        let mc2 = setup.rest_energy();
        let hc = setup.hbar_c();
        Ok([
            -(ev + mc2) * y[1] / hc,
            (ev - mc2) * y[0] / hc,
            -(ev + mc2) * y[3] / hc,
            (ev - mc2) * y[2] / hc,
        ])
    };

    // Cap steps so cubic Hermite interpolation keeps up with the local
    // oscillation/decay rate of the solutions.
    let span = x_max - x_min;
    let hc = setup.hbar_c();
    let k_floor = 2.0 / span;
    let max_step = move |x: f64| -> f64 {
        let margin = mass_shell_margin(setup, pot, x).unwrap_or(0.0);
        let slope = pot.slope(x).unwrap_or(0.0);
        let k_local = ((margin.abs() + slope.abs() * hc).sqrt() / hc).max(k_floor);
        ode::hermite_step_cap(rel_tol, k_local).min(span / 16.0)
    };
    let opts = IntegrateOptions {
        rtol: rel_tol,
        atol: rel_tol,
        max_steps: 4_000_000,
        max_step: &max_step,
    };

    let y0 = [init1.theta, init1.chi, init2.theta, init2.chi];
    let forward = ode::integrate_dense(&rhs, x0, x_max, y0, &opts)?;
    let backward = ode::integrate_dense(&rhs, x0, x_min, y0, &opts)?;

    let mut nodes: Vec<Node<4>> = backward.into_iter().skip(1).rev().collect();
    nodes.extend(forward);

    let max_drift = nodes
        .iter()
        .map(|n| (PairValues::from_state(&n.y).cross_current() - k0).abs())
        .fold(0.0f64, f64::max);

    Ok(SpinorSolutionPair {
        setup: *setup,
        potential: pot.clone(),
        mesh: DenseMesh::new(nodes),
        x_origin: x0,
        cross_current_origin: k0,
        max_drift,
        rel_tol,
    })
}

impl SpinorSolutionPair {
    pub fn setup(&self) -> &PhysicalSetup {
        &self.setup
    }

    pub fn potential(&self) -> &PotentialModel {
        &self.potential
    }

    pub fn domain(&self) -> (f64, f64) {
        self.mesh.domain()
    }

    pub fn x_origin(&self) -> f64 {
        self.x_origin
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    /// Cross-current fixed by the initial states.
    pub fn cross_current_reference(&self) -> f64 {
        self.cross_current_origin
    }

    /// Largest |K(x) - K(x0)| observed over the accepted mesh.
    pub fn max_cross_current_drift(&self) -> f64 {
        self.max_drift
    }

    /// Both solutions at x.
    pub fn eval(&self, x: f64) -> Result<PairValues> {
        Ok(PairValues::from_state(&self.mesh.eval(x)?))
    }

    /// Both solutions and their x-derivatives (derivatives via the system
    /// right-hand side, so they are exactly ODE-consistent).
    pub fn eval_with_derivatives(&self, x: f64) -> Result<(PairValues, PairValues)> {
        let v = self.eval(x)?;
        let ev = self.setup.energy - self.potential.value(x)?;
        let mc2 = self.setup.rest_energy();
        let hc = self.setup.hbar_c();
        let d = PairValues {
            theta1: -(ev + mc2) * v.chi1 / hc,
            chi1: (ev - mc2) * v.theta1 / hc,
            theta2: -(ev + mc2) * v.chi2 / hc,
            chi2: (ev - mc2) * v.theta2 / hc,
        };
        Ok((v, d))
    }

    /// theta1(x) chi2(x) - theta2(x) chi1(x).
    pub fn cross_current(&self, x: f64) -> Result<f64> {
        Ok(self.eval(x)?.cross_current())
    }

    pub(crate) fn mesh(&self) -> &DenseMesh<4> {
        &self.mesh
    }

    /// Wrap in an [`Arc`] for sharing with reduced actions.
    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    #[cfg(test)]
    pub(crate) fn synthetic_for_tests(
        setup: PhysicalSetup,
        potential: PotentialModel,
        nodes: Vec<Node<4>>,
        x_origin: f64,
        cross_current_origin: f64,
    ) -> Self {
        Self {
            setup,
            potential,
            mesh: DenseMesh::new(nodes),
            x_origin,
            cross_current_origin,
            max_drift: 0.0,
            rel_tol: 1e-10,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const K: f64 = 1.732_050_807_568_877_2; // sqrt(3)

    fn free_setup() -> PhysicalSetup {
        PhysicalSetup::natural(2.0).unwrap()
    }

    fn free_pot() -> PotentialModel {
        PotentialModel::Constant { v0: 0.0 }
    }

    /// Fixture whose solutions are theta1 = sin(kx), theta2 = cos(kx).
    fn sine_cosine_pair(tol: f64) -> SpinorSolutionPair {
        solve_spinor_pair(
            &free_setup(),
            &free_pot(),
            (-2.0, 6.0),
            0.0,
            SpinorState::new(0.0, -1.0 / K),
            SpinorState::new(1.0, 0.0),
            tol,
        )
        .unwrap()
    }

    #[test]
    fn rhs_componentwise() {
        let setup = free_setup();
        let pot = free_pot();
        let d = spinor_rhs(&setup, &pot, 0.3, &SpinorState::new(1.0, 0.0)).unwrap();
        assert_eq!((d.theta, d.chi), (0.0, 1.0));
        let d = spinor_rhs(&setup, &pot, -1.1, &SpinorState::new(0.0, 1.0)).unwrap();
        assert_eq!((d.theta, d.chi), (-3.0, 0.0));
        let d = spinor_rhs(&setup, &pot, 0.0, &SpinorState::new(0.0, 0.0)).unwrap();
        assert_eq!((d.theta, d.chi), (0.0, 0.0));
    }

    #[test]
    fn free_particle_matches_closed_form() {
        let pair = sine_cosine_pair(1e-12);
        for i in 0..=80 {
            let x = -2.0 + 0.1 * i as f64;
            let v = pair.eval(x).unwrap();
            assert!((v.theta1 - (K * x).sin()).abs() < 1e-10, "theta1 at {x}");
            assert!((v.theta2 - (K * x).cos()).abs() < 1e-10, "theta2 at {x}");
            assert!((v.chi1 + (K * x).cos() / K).abs() < 1e-10, "chi1 at {x}");
            assert!((v.chi2 - (K * x).sin() / K).abs() < 1e-10, "chi2 at {x}");
        }
    }

    #[test]
    fn cross_current_is_conserved() {
        let pair = sine_cosine_pair(1e-12);
        let k0 = pair.cross_current_reference();
        assert_relative_eq!(k0, 1.0 / K, max_relative = 1e-14);
        assert_relative_eq!(pair.cross_current(0.0).unwrap(), k0, max_relative = 1e-12);
        assert_relative_eq!(pair.cross_current(5.0).unwrap(), k0, max_relative = 1e-10);
        assert!(pair.max_cross_current_drift() <= 100.0 * 1e-12 * k0.abs());
    }

    #[test]
    fn unit_initial_states_have_unit_cross_current() {
        let setup = free_setup();
        let pot = PotentialModel::Linear { v0: 0.0, slope: 0.1 };
        let pair = solve_spinor_pair(
            &setup,
            &pot,
            (-5.0, 9.5),
            0.0,
            SpinorState::new(1.0, 0.0),
            SpinorState::new(0.0, 1.0),
            1e-11,
        )
        .unwrap();
        assert_eq!(pair.cross_current_reference(), 1.0);
        for &x in &[-4.9, -2.0, 0.0, 3.3, 7.7, 9.5] {
            assert!((pair.cross_current(x).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dependent_initial_states_rejected() {
        let err = solve_spinor_pair(
            &free_setup(),
            &free_pot(),
            (-1.0, 1.0),
            0.0,
            SpinorState::new(1.0, 0.0),
            SpinorState::new(2.0, 0.0),
            1e-10,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DependentInitialStates { .. }));
    }

    #[test]
    fn solving_is_linear_in_initial_state() {
        let setup = free_setup();
        let pot = PotentialModel::Linear { v0: 0.0, slope: 0.1 };
        let alpha = 2.5;
        let base = solve_spinor_pair(
            &setup, &pot, (-3.0, 6.0), 0.0,
            SpinorState::new(1.0, 0.0),
            SpinorState::new(0.0, 1.0),
            1e-11,
        ).unwrap();
        let scaled = solve_spinor_pair(
            &setup, &pot, (-3.0, 6.0), 0.0,
            SpinorState::new(alpha, 0.0),
            SpinorState::new(0.0, 1.0),
            1e-11,
        ).unwrap();
        for &x in &[-2.7, -1.0, 0.4, 2.9, 5.8] {
            let a = base.eval(x).unwrap();
            let b = scaled.eval(x).unwrap();
            assert_relative_eq!(b.theta1, alpha * a.theta1, max_relative = 1e-9, epsilon = 1e-12);
            assert_relative_eq!(b.chi1, alpha * a.chi1, max_relative = 1e-9, epsilon = 1e-12);
            assert_relative_eq!(b.theta2, a.theta2, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    /// For constant potentials theta satisfies theta'' + k^2 theta = 0 with
    /// k^2 = [(E-V)^2 - m0^2 c^4]/(hbar c)^2. Every exact solution obeys the
    /// three-term identity theta(x+h) + theta(x-h) = 2 cos(k h) theta(x) for
    /// ANY h, so the residual check carries no discretization error (a
    /// finite-difference theta'' would drown in the interpolation noise
    /// floor long before 100*tol).
    #[test]
    fn second_order_consistency_for_constant_potential() {
        let tol = 1e-12;
        let pair = sine_cosine_pair(tol);
        let h = 0.35;
        let two_cos = 2.0 * (K * h).cos();
        for &x in &[-1.5, -0.2, 0.9, 2.4, 4.8] {
            let left = pair.eval(x - h).unwrap();
            let mid = pair.eval(x).unwrap();
            let right = pair.eval(x + h).unwrap();
            for (a, b, c) in [
                (left.theta1, mid.theta1, right.theta1),
                (left.theta2, mid.theta2, right.theta2),
            ] {
                let residual = a + c - two_cos * b;
                assert!(residual.abs() <= 100.0 * tol * 3.0, "x={x}: residual {residual}");
            }
        }
    }

    #[test]
    fn out_of_domain_evaluation_rejected() {
        let pair = sine_cosine_pair(1e-10);
        assert!(matches!(pair.eval(6.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(pair.cross_current(-2.01), Err(Error::OutOfDomain { .. })));
    }
}
