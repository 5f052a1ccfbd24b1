//! Physical setup, unit conventions, and potential models with analytic
//! derivatives.
//!
//! Everything downstream works with `W_sigma(x) = E - V(x) + sigma*m0*c^2`
//! and the mass-shell margin `(E - V)^2 - m0^2 c^4`; this module owns the
//! constants and the potential derivatives (up to second order) those
//! expressions need.

use crate::error::{Error, Result};

/// Tag for how the stored constants are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    /// m0 = c = hbar = 1; the default for fixtures and scenarios.
    Natural,
    /// Raw SI constants stored as-is.
    Si,
}

/// Rest mass, light speed, Planck constant, and total energy of the particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalSetup {
    pub rest_mass: f64,
    pub light_speed: f64,
    pub planck: f64,
    pub energy: f64,
    pub unit_system: UnitSystem,
}

impl PhysicalSetup {
    pub fn new(
        rest_mass: f64,
        light_speed: f64,
        planck: f64,
        energy: f64,
        unit_system: UnitSystem,
    ) -> Result<Self> {
        for (name, v) in [
            ("rest_mass", rest_mass),
            ("light_speed", light_speed),
            ("planck", planck),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidSetup(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        if !energy.is_finite() {
            return Err(Error::InvalidSetup(format!("energy must be finite, got {energy}")));
        }
        Ok(Self { rest_mass, light_speed, planck, energy, unit_system })
    }

    /// Natural units (m0 = c = hbar = 1) with the given total energy.
    pub fn natural(energy: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, energy, UnitSystem::Natural)
    }

    /// Rest energy m0 c^2.
    pub fn rest_energy(&self) -> f64 {
        self.rest_mass * self.light_speed * self.light_speed
    }

    /// hbar * c.
    pub fn hbar_c(&self) -> f64 {
        self.planck * self.light_speed
    }
}

/// One-dimensional potential with analytic derivatives to second order.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialModel {
    /// V(x) = v0.
    Constant { v0: f64 },
    /// V(x) = v0 + slope * x.
    Linear { v0: f64, slope: f64 },
    /// V(x) = stiffness * x^2 / 2.
    Harmonic { stiffness: f64 },
    /// C-infinity logistic step: V(x) = height / (1 + exp(-(x-center)/width)).
    SmoothedStep { height: f64, width: f64, center: f64 },
    /// Cubic-spline interpolant through samples; C^2 inside the sample range.
    Tabulated(TabulatedPotential),
}

impl PotentialModel {
    /// The x-interval on which the potential is defined, or `None` when the
    /// whole real line is admissible.
    pub fn domain(&self) -> Option<(f64, f64)> {
        match self {
            PotentialModel::Tabulated(t) => Some(t.range()),
            _ => None,
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if let Some((min, max)) = self.domain() {
            if x < min || x > max {
                return Err(Error::OutOfDomain { x, min, max });
            }
        }
        Ok(())
    }

    /// Evaluate the derivative of the requested order (0, 1, or 2) at x.
    pub fn eval(&self, x: f64, order: u32) -> Result<f64> {
        if order > 2 {
            return Err(Error::UnsupportedOrder { order, max: 2 });
        }
        self.check_domain(x)?;
        Ok(match self {
            PotentialModel::Constant { v0 } => match order {
                0 => *v0,
                _ => 0.0,
            },
            PotentialModel::Linear { v0, slope } => match order {
                0 => v0 + slope * x,
                1 => *slope,
                _ => 0.0,
            },
            PotentialModel::Harmonic { stiffness } => match order {
                0 => 0.5 * stiffness * x * x,
                1 => stiffness * x,
                _ => *stiffness,
            },
            PotentialModel::SmoothedStep { height, width, center } => {
                let s = 1.0 / (1.0 + (-(x - center) / width).exp());
                match order {
                    0 => height * s,
                    1 => height / width * s * (1.0 - s),
                    _ => height / (width * width) * s * (1.0 - s) * (1.0 - 2.0 * s),
                }
            }
            PotentialModel::Tabulated(t) => t.eval(x, order),
        })
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        self.eval(x, 0)
    }

    pub fn slope(&self, x: f64) -> Result<f64> {
        self.eval(x, 1)
    }

    pub fn curvature(&self, x: f64) -> Result<f64> {
        self.eval(x, 2)
    }
}

/// Natural cubic spline through strictly increasing sample positions.
///
/// Second derivatives are continuous across knots, so `eval(_, 2)` is safe
/// everywhere inside the sample range; third derivatives are never offered.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Spline second derivatives at the knots.
    m: Vec<f64>,
}

impl TabulatedPotential {
    pub fn from_samples(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::InvalidPotential(format!(
                "tabulated potential needs at least 3 samples, got {}",
                samples.len()
            )));
        }
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        if samples.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidPotential("samples must be finite".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPotential(
                "sample positions must be strictly increasing".into(),
            ));
        }

        // Natural spline: tridiagonal system for knot second derivatives.
        let n = xs.len();
        let mut m = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut upper = vec![0.0; n];
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        }
        // Thomas sweep; lower diagonal at row i is h0 = xs[i]-xs[i-1].
        for i in 1..n - 1 {
            let lower = if i == 1 { 0.0 } else { xs[i] - xs[i - 1] };
            let w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for i in (1..n - 1).rev() {
            m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
        }
        Ok(Self { xs, ys, m })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    fn eval(&self, x: f64, order: u32) -> f64 {
        let i = match self.xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = x - self.xs[i];
        let u = self.xs[i + 1] - x;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        match order {
            0 => {
                m0 * u * u * u / (6.0 * h)
                    + m1 * t * t * t / (6.0 * h)
                    + (y0 / h - m0 * h / 6.0) * u
                    + (y1 / h - m1 * h / 6.0) * t
            }
            1 => {
                -m0 * u * u / (2.0 * h) + m1 * t * t / (2.0 * h) - (y0 / h - m0 * h / 6.0)
                    + (y1 / h - m1 * h / 6.0)
            }
            _ => m0 * u / h + m1 * t / h,
        }
    }
}

/// Classification of a point against the classical mass shell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeClass {
    ClassicallyAllowed,
    TurningPoint,
    Forbidden,
}

/// Local energy-regime report: classification plus the signed margin
/// (E - V)^2 - m0^2 c^4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRegime {
    pub class: RegimeClass,
    pub margin: f64,
}

/// Signed mass-shell margin (E - V(x))^2 - m0^2 c^4.
pub fn mass_shell_margin(setup: &PhysicalSetup, pot: &PotentialModel, x: f64) -> Result<f64> {
    let ev = setup.energy - pot.value(x)?;
    let mc2 = setup.rest_energy();
    Ok(ev * ev - mc2 * mc2)
}

/// Classify the point x against the mass shell with tolerance `eps_tp`
/// (energy-squared units).
pub fn energy_regime(
    setup: &PhysicalSetup,
    pot: &PotentialModel,
    x: f64,
    eps_tp: f64,
) -> Result<EnergyRegime> {
    let margin = mass_shell_margin(setup, pot, x)?;
    let class = if margin.abs() <= eps_tp {
        RegimeClass::TurningPoint
    } else if margin > 0.0 {
        RegimeClass::ClassicallyAllowed
    } else {
        RegimeClass::Forbidden
    };
    Ok(EnergyRegime { class, margin })
}

/// Default turning-point tolerance in natural units.
pub const DEFAULT_EPS_TP: f64 = 1e-9;
