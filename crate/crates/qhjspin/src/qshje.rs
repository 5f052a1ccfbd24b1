//! The two stationary Hamilton-Jacobi residuals (one per spin projection)
//! and the deformation function f, evaluated by two independent routes.
//!
//! The residual of the sigma branch at x is
//!
//! ```text
//! (S')^2/2m0  -  (hbar^2/4m0) {S, x}  +  C_sigma(x)  +  [m0^2 c^4 - (E-V)^2]/(2 m0 c^2)
//! ```
//!
//! with {.,.} the sign-flipped Schwarzian combination and C_sigma the curvature
//! term (hbar^2/2m0) W^(1/2) d^2/dx^2 W^(-1/2), expanded analytically so it
//! only needs V' and V''. For actions genuinely built from Dirac solutions
//! the residual is numerical zero for every choice of branch constants.

use crate::action::{schwarzian, Branch, ReducedAction};
use crate::error::{Error, Result};
use crate::model::{mass_shell_margin, PhysicalSetup, PotentialModel, DEFAULT_EPS_TP};

/// Sign selecting W_sigma(x) = E - V(x) + sigma * m0 c^2. `Plus` pairs with
/// the S0 branch, `Minus` with Z0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinSign {
    Plus,
    Minus,
}

impl SpinSign {
    pub fn value(self) -> f64 {
        match self {
            SpinSign::Plus => 1.0,
            SpinSign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            SpinSign::Plus => '+',
            SpinSign::Minus => '-',
        }
    }
}

impl From<Branch> for SpinSign {
    fn from(branch: Branch) -> Self {
        match branch {
            Branch::S0 => SpinSign::Plus,
            Branch::Z0 => SpinSign::Minus,
        }
    }
}

/// W_sigma(x) = E - V(x) + sigma * m0 c^2.
pub fn w_sigma(setup: &PhysicalSetup, pot: &PotentialModel, x: f64, sigma: SpinSign) -> Result<f64> {
    Ok(setup.energy - pot.value(x)? + sigma.value() * setup.rest_energy())
}

/// Curvature term (hbar^2/2m0) W^(1/2) d^2/dx^2 [W^(-1/2)], expanded as
/// (hbar^2/2m0) [ (3/4)(V'/W)^2 + V''/(2W) ]. Requires W_sigma(x) > 0.
pub fn curvature_term(
    setup: &PhysicalSetup,
    pot: &PotentialModel,
    x: f64,
    sigma: SpinSign,
) -> Result<f64> {
    let w = w_sigma(setup, pot, x, sigma)?;
    if w <= 0.0 {
        return Err(Error::BranchDomain { x, symbol: sigma.symbol(), value: w });
    }
    let vp = pot.slope(x)?;
    let vpp = pot.curvature(x)?;
    let hb = setup.planck;
    let r = vp / w;
    Ok(hb * hb / (2.0 * setup.rest_mass) * (0.75 * r * r + vpp / (2.0 * w)))
}

/// The energy-route denominator: (E-V)^2 - m0^2 c^4 - 2 m0 c^2 C_sigma(x).
/// Its zeros are the quantum-displaced turning points of the sigma branch.
pub fn mass_shell_denominator(
    setup: &PhysicalSetup,
    pot: &PotentialModel,
    x: f64,
    sigma: SpinSign,
) -> Result<f64> {
    let margin = mass_shell_margin(setup, pot, x)?;
    let curv = curvature_term(setup, pot, x, sigma)?;
    Ok(margin - 2.0 * setup.rest_energy() * curv)
}

/// Term-by-term breakdown of one residual evaluation. `raw` is always the
/// exact floating-point sum of the four terms in the order listed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub kinetic: f64,
    pub schwarzian: f64,
    pub curvature: f64,
    pub mass_shell: f64,
    pub raw: f64,
    /// raw / |E|.
    pub normalized: f64,
}

/// Evaluate the sigma-branch residual with the given action's derivatives.
///
/// Matching branch and sigma gives numerical zero; mismatching them is a
/// useful negative control.
pub fn qshje_residual(action: &ReducedAction, x: f64, sigma: SpinSign) -> Result<ResidualReport> {
    let setup = action.pair().setup();
    let pot = action.pair().potential();
    let (d1, d2, d3) = action.derivatives3(x)?;
    if d1 == 0.0 {
        return Err(Error::SingularDerivative { x });
    }
    let m = setup.rest_mass;
    let hb = setup.planck;
    let kinetic = d1 * d1 / (2.0 * m);
    let schwarzian_term = -(hb * hb / (4.0 * m)) * schwarzian(d1, d2, d3)?;
    let curvature = curvature_term(setup, pot, x, sigma)?;
    let ev = setup.energy - pot.value(x)?;
    let mc2 = setup.rest_energy();
    let mass_shell = (mc2 * mc2 - ev * ev) / (2.0 * m * setup.light_speed * setup.light_speed);
    let raw = kinetic + schwarzian_term + curvature + mass_shell;
    Ok(ResidualReport {
        kinetic,
        schwarzian: schwarzian_term,
        curvature,
        mass_shell,
        raw,
        normalized: raw / setup.energy.abs(),
    })
}

/// The bracket 1 - (hbar^2/2) (dh/dx)^(-2) {h, x} whose reciprocal is the
/// deformation function. Zero exactly where the squared velocity vanishes,
/// negative inside node regions.
pub fn f_bracket(action: &ReducedAction, x: f64) -> Result<f64> {
    let (d1, d2, d3) = action.derivatives3(x)?;
    if d1 == 0.0 {
        return Err(Error::SingularDerivative { x });
    }
    let hb = action.pair().setup().planck;
    Ok(1.0 - 0.5 * hb * hb * schwarzian(d1, d2, d3)? / (d1 * d1))
}

/// Deformation function from the action route:
/// f = [1 - (hbar^2/2)(dh/dx)^(-2) {h, x}]^(-1).
pub fn f_from_action(action: &ReducedAction, x: f64) -> Result<f64> {
    let bracket = f_bracket(action, x)?;
    if bracket == 0.0 {
        return Err(Error::PoleOfF { x });
    }
    Ok(1.0 / bracket)
}

/// Deformation function from the energy route:
/// f = c^2 (dh/dx)^2 / [(E-V)^2 - m0^2 c^4 - 2 m0 c^2 C_sigma].
pub fn f_from_energy(action: &ReducedAction, x: f64, sigma: SpinSign) -> Result<f64> {
    let setup = action.pair().setup();
    let pot = action.pair().potential();
    let (d1, _, _) = action.derivatives3(x)?;
    let den = mass_shell_denominator(setup, pot, x, sigma)?;
    if den.abs() <= DEFAULT_EPS_TP {
        return Err(Error::TurningPoint { x });
    }
    let c = setup.light_speed;
    Ok(c * c * d1 * d1 / den)
}
