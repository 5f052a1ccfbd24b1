//! Reduced actions S0 and Z0 built from ratios of independent Dirac
//! solutions, with continuous unwrapping, analytic derivatives to third
//! order, and the Schwarzian combination used by the Hamilton-Jacobi
//! residuals.
//!
//! S0(x) = hbar * arctan(a * theta1/theta2 + b); Z0 replaces theta by chi
//! (the imaginary unit of the physical lower components cancels in the
//! ratio). Instead of patching arctan branches, the implementation tracks
//! the continuous angle of the 2-vector (theta2, a*theta1 + b*theta2),
//! which never vanishes while the cross-current is nonzero; the closed-form
//! first derivative is then strictly one-signed wherever
//! (E - V + sigma m0 c^2) is.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use crate::dirac::SpinorSolutionPair;
use crate::error::{Error, Result};

/// Which reduced action: S0 pairs with spin projection +1/2, Z0 with -1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    S0,
    Z0,
}

impl Branch {
    /// Sign of the rest-energy term in W_sigma = E - V + sigma m0 c^2.
    pub fn sigma(self) -> f64 {
        match self {
            Branch::S0 => 1.0,
            Branch::Z0 => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::S0 => "s0",
            Branch::Z0 => "z0",
        }
    }
}

/// The two real constants of a reduced-action branch: (a, b) for S0 or
/// (d, e) for Z0. `scale` multiplies the solution ratio and must be nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchConstants {
    pub scale: f64,
    pub offset: f64,
}

impl BranchConstants {
    pub fn new(scale: f64, offset: f64) -> Result<Self> {
        if !scale.is_finite() || !offset.is_finite() {
            return Err(Error::Validation {
                field: "branch constants".into(),
                reason: format!("constants must be finite, got ({scale}, {offset})"),
            });
        }
        if scale == 0.0 {
            return Err(Error::Validation {
                field: "branch constants".into(),
                reason: "scale constant must be nonzero (constant action has no Schwarzian)"
                    .into(),
            });
        }
        Ok(Self { scale, offset })
    }
}

/// The Schwarzian combination of first/second/third derivatives used
/// throughout this crate: (3/2)(d2/d1)^2 - d3/d1.
///
/// This is the negative of the textbook Schwarzian; the tan fixture pins
/// the sign: an affine map gives 0 and tan at the origin gives -2. The
/// combination is Moebius-invariant either way.
pub fn schwarzian(d1: f64, d2: f64, d3: f64) -> Result<f64> {
    if d1 == 0.0 {
        return Err(Error::SingularDerivative { x: f64::NAN });
    }
    let r = d2 / d1;
    Ok(1.5 * r * r - d3 / d1)
}

fn wrap_pm_pi(angle: f64) -> f64 {
    angle - 2.0 * PI * (angle / (2.0 * PI)).round()
}

/// Map an angle to the representative of its mod-pi class in (-pi/2, pi/2].
fn canonical_half_turn(angle: f64) -> f64 {
    angle - PI * (angle / PI - 0.5).ceil()
}

/// A reduced action over a solved spinor pair.
#[derive(Debug, Clone)]
pub struct ReducedAction {
    pair: Arc<SpinorSolutionPair>,
    branch: Branch,
    constants: BranchConstants,
    /// Unwrapped vector angle at every mesh node.
    unwrapped: Vec<f64>,
    /// Unwrapped angle at the solve origin.
    origin_angle: f64,
    /// Canonical arctan value at the origin, in (-pi/2, pi/2].
    base: f64,
    /// Forced subdivision depth for angle tracking (grows with |scale|).
    force_depth: u32,
}

impl ReducedAction {
    pub fn build(
        pair: Arc<SpinorSolutionPair>,
        branch: Branch,
        constants: BranchConstants,
    ) -> Result<Self> {
        // Re-validate; constants may have been built directly.
        let constants = BranchConstants::new(constants.scale, constants.offset)?;

        let amplification =
            (1.0 + constants.scale * constants.scale + constants.offset * constants.offset)
                / constants.scale.abs();
        let force_depth = (amplification.log2().ceil().max(2.0) as u32).min(24);

        let mut action = Self {
            pair,
            branch,
            constants,
            unwrapped: Vec::new(),
            origin_angle: 0.0,
            base: 0.0,
            force_depth,
        };

        let nodes = action.pair.mesh().nodes();
        let mut unwrapped = Vec::with_capacity(nodes.len());
        let mut previous = action.vector_angle_from(&nodes[0].y, nodes[0].x)?;
        unwrapped.push(previous);
        for w in nodes.windows(2) {
            let raw = action.vector_angle_from(&w[1].y, w[1].x)?;
            let delta = action.delta_angle(w[0].x, previous, w[1].x, raw, force_depth, 48)?;
            previous += delta;
            unwrapped.push(previous);
        }
        action.unwrapped = unwrapped;

        let x0 = action.pair.x_origin();
        let origin_index = nodes
            .iter()
            .position(|n| n.x == x0)
            .expect("solve origin is always a mesh node");
        action.origin_angle = action.unwrapped[origin_index];
        action.base = canonical_half_turn(action.origin_angle);
        Ok(action)
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn constants(&self) -> BranchConstants {
        self.constants
    }

    pub fn pair(&self) -> &Arc<SpinorSolutionPair> {
        &self.pair
    }

    pub fn domain(&self) -> (f64, f64) {
        self.pair.domain()
    }

    /// Branch components (denominator, numerator-combination) at a raw
    /// 4-vector (theta1, chi1, theta2, chi2).
    fn branch_components(&self, y: &[f64; 4]) -> (f64, f64) {
        let (p1, p2) = match self.branch {
            Branch::S0 => (y[0], y[2]),
            Branch::Z0 => (y[1], y[3]),
        };
        (p2, self.constants.scale * p1 + self.constants.offset * p2)
    }

    fn vector_angle_from(&self, y: &[f64; 4], x: f64) -> Result<f64> {
        let (p2, g) = self.branch_components(y);
        if p2 == 0.0 && g == 0.0 {
            return Err(Error::DegeneratePair { x });
        }
        Ok(g.atan2(p2))
    }

    fn vector_angle(&self, x: f64) -> Result<f64> {
        let y = self.pair.mesh().eval(x)?;
        self.vector_angle_from(&y, x)
    }

    /// Continuous angle increment from xa to xb. `aa`/`ab` are angles at the
    /// endpoints (any 2*pi representative). Subdivides until each piece turns
    /// by at most pi/2, plus `force` unconditional halvings for safety with
    /// large branch constants.
    fn delta_angle(&self, xa: f64, aa: f64, xb: f64, ab: f64, force: u32, budget: u32) -> Result<f64> {
        let wrapped = wrap_pm_pi(ab - aa);
        if (force == 0 && wrapped.abs() <= FRAC_PI_2) || budget == 0 {
            return Ok(wrapped);
        }
        let xm = 0.5 * (xa + xb);
        if xm <= xa.min(xb) || xm >= xa.max(xb) {
            return Ok(wrapped);
        }
        let am = self.vector_angle(xm)?;
        Ok(self.delta_angle(xa, aa, xm, am, force.saturating_sub(1), budget - 1)?
            + self.delta_angle(xm, am, xb, ab, force.saturating_sub(1), budget - 1)?)
    }

    fn unwrapped_angle(&self, x: f64) -> Result<f64> {
        let i = self.pair.mesh().segment_index(x)?;
        let node = &self.pair.mesh().nodes()[i];
        let raw = self.vector_angle(x)?;
        let delta = self.delta_angle(node.x, self.unwrapped[i], x, raw, self.force_depth, 48)?;
        Ok(self.unwrapped[i] + delta)
    }

    /// Unwrapped action value at x, in units of hbar * radians. Continuous
    /// across zeros of the ratio denominator; equals
    /// hbar*arctan(scale*r + offset) modulo hbar*pi.
    pub fn value(&self, x: f64) -> Result<f64> {
        let alpha = self.unwrapped_angle(x)?;
        Ok(self.pair.setup().planck * (self.base + alpha - self.origin_angle))
    }

    /// First, second, and third derivatives at x, from closed forms built
    /// on the spinor recurrences (never repeated numerical differentiation).
    pub fn derivatives3(&self, x: f64) -> Result<(f64, f64, f64)> {
        let setup = self.pair.setup();
        let pot = self.pair.potential();
        let y = self.pair.mesh().eval(x)?;
        let ev = setup.energy - pot.value(x)?;
        let vp = pot.slope(x)?;
        let vpp = pot.curvature(x)?;
        let mc2 = setup.rest_energy();
        let hc = setup.hbar_c();
        let wp = ev + mc2;
        let wm = ev - mc2;
        let q = wp * wm / (hc * hc);

        // Component derivatives from the system itself.
        let [th1, ch1, th2, ch2] = y;
        let (p1, p2, d1p, d2p, d1pp, d2pp, w, wd1, wd2);
        match self.branch {
            Branch::S0 => {
                p1 = th1;
                p2 = th2;
                d1p = -wp * ch1 / hc;
                d2p = -wp * ch2 / hc;
                d1pp = vp * ch1 / hc - q * th1;
                d2pp = vp * ch2 / hc - q * th2;
                w = wp;
            }
            Branch::Z0 => {
                p1 = ch1;
                p2 = ch2;
                d1p = wm * th1 / hc;
                d2p = wm * th2 / hc;
                d1pp = -vp * th1 / hc - q * ch1;
                d2pp = -vp * th2 / hc - q * ch2;
                w = wm;
            }
        }
        wd1 = -vp;
        wd2 = -vpp;

        let (cs, co) = (self.constants.scale, self.constants.offset);
        let g = cs * p1 + co * p2;
        let gp = cs * d1p + co * d2p;
        let gpp = cs * d1pp + co * d2pp;

        let den = p2 * p2 + g * g;
        if den == 0.0 {
            return Err(Error::DegeneratePair { x });
        }
        let den_p = 2.0 * (p2 * d2p + g * gp);
        let den_pp = 2.0 * (d2p * d2p + p2 * d2pp + gp * gp + g * gpp);

        let pref = cs * self.pair.cross_current_reference() / setup.light_speed;
        let s1 = pref * w / den;
        let num2 = wd1 * den - w * den_p;
        let s2 = pref * num2 / (den * den);
        let s3 = pref * ((wd2 * den - w * den_pp) * den - 2.0 * den_p * num2)
            / (den * den * den);
        Ok((s1, s2, s3))
    }

    /// Derivative of the requested order (1, 2, or 3).
    pub fn derivative(&self, x: f64, order: u32) -> Result<f64> {
        let (d1, d2, d3) = self.derivatives3(x)?;
        match order {
            1 => Ok(d1),
            2 => Ok(d2),
            3 => Ok(d3),
            _ => Err(Error::UnsupportedOrder { order, max: 3 }),
        }
    }

    /// Schwarzian combination of the action at x.
    pub fn schwarzian_at(&self, x: f64) -> Result<f64> {
        let (d1, d2, d3) = self.derivatives3(x)?;
        if d1 == 0.0 {
            return Err(Error::SingularDerivative { x });
        }
        schwarzian(d1, d2, d3)
    }
}
