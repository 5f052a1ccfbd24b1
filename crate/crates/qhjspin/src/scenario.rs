//! Scenario files: a strict TOML schema with defaults, and validation of
//! everything the pipeline assumes.
//!
//! Unknown keys are rejected (a silently ignored typo in a physics
//! parameter is the worst failure mode). The minimal scenario is:
//!
//! ```toml
//! [setup]
//! energy = 2.0
//!
//! [potential]
//! kind = "constant"
//! v0 = 0.0
//!
//! [domain]
//! x_min = -5.0
//! x_max = 5.0
//! ```
//!
//! Everything else defaults: natural units, solver tolerance 1e-10,
//! initial spinor states (1,0)/(0,1) at the domain midpoint, branch
//! constants a=1, b=0, d=1, e=0, branch s0, 200 grid points.

use serde::Deserialize;

use crate::action::{Branch, BranchConstants};
use crate::dirac::SpinorState;
use crate::dynamics::TurningPolicy;
use crate::error::{Error, Result};
use crate::model::{
    PhysicalSetup, PotentialModel, TabulatedPotential, UnitSystem, DEFAULT_EPS_TP,
};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    setup: RawSetup,
    potential: RawPotential,
    domain: RawDomain,
    spinor: Option<RawSpinor>,
    action: Option<RawAction>,
    branch: Option<Branch>,
    trajectory: Option<RawTrajectory>,
    tolerances: Option<RawTolerances>,
    grid: Option<RawGrid>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSetup {
    energy: f64,
    #[serde(default = "one")]
    rest_mass: f64,
    #[serde(default = "one")]
    light_speed: f64,
    #[serde(default = "one")]
    planck: f64,
    unit_system: Option<UnitSystem>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
enum RawPotential {
    Constant {
        #[serde(default)]
        v0: f64,
    },
    Linear {
        #[serde(default)]
        v0: f64,
        slope: f64,
    },
    Harmonic {
        stiffness: f64,
    },
    SmoothedStep {
        height: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    Tabulated {
        samples: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    x_min: f64,
    x_max: f64,
    x0: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpinor {
    init1: Option<[f64; 2]>,
    init2: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAction {
    #[serde(default = "one")]
    a: f64,
    #[serde(default)]
    b: f64,
    #[serde(default = "one")]
    d: f64,
    #[serde(default)]
    e: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrajectory {
    x0: Option<f64>,
    #[serde(default = "one")]
    direction: f64,
    t_span: [f64; 2],
    on_turning_point: Option<TurningPolicy>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    solver: Option<f64>,
    turning_point: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: String,
    values: Vec<f64>,
}

/// Which scenario parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Energy,
    ActionA,
    ActionB,
    ActionD,
    ActionE,
}

impl SweepParameter {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(Self::Energy),
            "action.a" => Ok(Self::ActionA),
            "action.b" => Ok(Self::ActionB),
            "action.d" => Ok(Self::ActionD),
            "action.e" => Ok(Self::ActionE),
            other => Err(Error::Validation {
                field: "sweep.parameter".into(),
                reason: format!(
                    "unknown parameter `{other}` (expected energy, action.a, action.b, action.d, action.e)"
                ),
            }),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Energy => "energy",
            Self::ActionA => "action.a",
            Self::ActionB => "action.b",
            Self::ActionD => "action.d",
            Self::ActionE => "action.e",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    pub x0: f64,
    pub direction: f64,
    pub t_span: (f64, f64),
    pub on_turning_point: TurningPolicy,
}

/// A fully validated scenario with every default applied.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub setup: PhysicalSetup,
    pub potential: PotentialModel,
    pub domain: (f64, f64),
    pub x0: f64,
    pub init1: SpinorState,
    pub init2: SpinorState,
    pub s0_constants: BranchConstants,
    pub z0_constants: BranchConstants,
    pub branch: Branch,
    pub trajectory: Option<TrajectorySpec>,
    pub solver_tol: f64,
    pub eps_tp: f64,
    pub grid_points: usize,
    pub sweep: Option<SweepSpec>,
}

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    validate(raw)
}

fn validate(raw: RawScenario) -> Result<Scenario> {
    let unit_system = raw.setup.unit_system.unwrap_or(UnitSystem::Natural);
    let setup = PhysicalSetup::new(
        raw.setup.rest_mass,
        raw.setup.light_speed,
        raw.setup.planck,
        raw.setup.energy,
        unit_system,
    )
    .map_err(|e| Error::Validation { field: "setup".into(), reason: e.to_string() })?;

    let (x_min, x_max) = (raw.domain.x_min, raw.domain.x_max);
    if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
        return Err(Error::Validation {
            field: "domain".into(),
            reason: format!("need finite x_min < x_max, got [{x_min}, {x_max}]"),
        });
    }

    let potential = match raw.potential {
        RawPotential::Constant { v0 } => PotentialModel::Constant { v0 },
        RawPotential::Linear { v0, slope } => PotentialModel::Linear { v0, slope },
        RawPotential::Harmonic { stiffness } => PotentialModel::Harmonic { stiffness },
        RawPotential::SmoothedStep { height, width, center } => {
            if !(width.is_finite() && width > 0.0) {
                return Err(Error::Validation {
                    field: "potential.width".into(),
                    reason: format!("width must be positive, got {width}"),
                });
            }
            PotentialModel::SmoothedStep { height, width, center }
        }
        RawPotential::Tabulated { samples } => PotentialModel::Tabulated(
            TabulatedPotential::from_samples(&samples).map_err(|e| Error::Validation {
                field: "potential.samples".into(),
                reason: e.to_string(),
            })?,
        ),
    };
    if let Some((pmin, pmax)) = potential.domain() {
        if pmin > x_min || pmax < x_max {
            return Err(Error::Validation {
                field: "potential.samples".into(),
                reason: format!(
                    "tabulated range [{pmin}, {pmax}] does not cover the domain [{x_min}, {x_max}]"
                ),
            });
        }
    }

    let x0 = raw.domain.x0.unwrap_or(0.5 * (x_min + x_max));
    if x0 < x_min || x0 > x_max {
        return Err(Error::Validation {
            field: "domain.x0".into(),
            reason: format!("x0 = {x0} outside [{x_min}, {x_max}]"),
        });
    }

    let spinor = raw.spinor.unwrap_or(RawSpinor { init1: None, init2: None });
    let init1 = spinor.init1.map_or(SpinorState::new(1.0, 0.0), |v| SpinorState::new(v[0], v[1]));
    let init2 = spinor.init2.map_or(SpinorState::new(0.0, 1.0), |v| SpinorState::new(v[0], v[1]));

    let action = raw.action.unwrap_or(RawAction { a: 1.0, b: 0.0, d: 1.0, e: 0.0 });
    let s0_constants = BranchConstants::new(action.a, action.b).map_err(|e| Error::Validation {
        field: "action.a".into(),
        reason: format!("branch constants (a, b): {e}"),
    })?;
    let z0_constants = BranchConstants::new(action.d, action.e).map_err(|e| Error::Validation {
        field: "action.d".into(),
        reason: format!("branch constants (d, e): {e}"),
    })?;

    let tolerances = raw.tolerances.unwrap_or(RawTolerances { solver: None, turning_point: None });
    let solver_tol = tolerances.solver.unwrap_or(1e-10);
    let eps_tp = tolerances.turning_point.unwrap_or(DEFAULT_EPS_TP);
    for (name, v) in [("tolerances.solver", solver_tol), ("tolerances.turning_point", eps_tp)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Validation {
                field: name.into(),
                reason: format!("tolerance must be positive, got {v}"),
            });
        }
    }

    let grid_points = raw.grid.map_or(200, |g| g.points);
    if grid_points < 2 {
        return Err(Error::Validation {
            field: "grid.points".into(),
            reason: format!("need at least 2 grid points, got {grid_points}"),
        });
    }

    // The scenario must contain at least one classically allowed stretch.
    let scan = 512;
    let mut allowed_somewhere = false;
    for i in 0..=scan {
        let x = x_min + (x_max - x_min) * i as f64 / scan as f64;
        let margin = crate::model::mass_shell_margin(&setup, &potential, x)?;
        if margin > eps_tp {
            allowed_somewhere = true;
            break;
        }
    }
    if !allowed_somewhere {
        return Err(Error::Validation {
            field: "setup.energy".into(),
            reason: "energy regime is classically forbidden over the whole domain \
                     ((E - V)^2 - m0^2 c^4 <= 0 everywhere)"
                .into(),
        });
    }

    let trajectory = match raw.trajectory {
        None => None,
        Some(t) => {
            let tx0 = t.x0.unwrap_or(x0);
            if tx0 < x_min || tx0 > x_max {
                return Err(Error::Validation {
                    field: "trajectory.x0".into(),
                    reason: format!("x0 = {tx0} outside [{x_min}, {x_max}]"),
                });
            }
            if t.direction == 0.0 || !t.direction.is_finite() {
                return Err(Error::Validation {
                    field: "trajectory.direction".into(),
                    reason: "direction must be a nonzero sign".into(),
                });
            }
            let (t0, t1) = (t.t_span[0], t.t_span[1]);
            if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
                return Err(Error::Validation {
                    field: "trajectory.t_span".into(),
                    reason: format!("need t_start < t_end, got [{t0}, {t1}]"),
                });
            }
            Some(TrajectorySpec {
                x0: tx0,
                direction: t.direction.signum(),
                t_span: (t0, t1),
                on_turning_point: t.on_turning_point.unwrap_or(TurningPolicy::Reflect),
            })
        }
    };

    let sweep = match raw.sweep {
        None => None,
        Some(s) => {
            if s.values.is_empty() {
                return Err(Error::Validation {
                    field: "sweep.values".into(),
                    reason: "sweep needs at least one value".into(),
                });
            }
            Some(SweepSpec { parameter: SweepParameter::parse(&s.parameter)?, values: s.values })
        }
    };

    Ok(Scenario {
        setup,
        potential,
        domain: (x_min, x_max),
        x0,
        init1,
        init2,
        s0_constants,
        z0_constants,
        branch: raw.branch.unwrap_or(Branch::S0),
        trajectory,
        solver_tol,
        eps_tp,
        grid_points,
        sweep,
    })
}

impl Scenario {
    /// Branch constants for the requested branch.
    pub fn constants_for(&self, branch: Branch) -> BranchConstants {
        match branch {
            Branch::S0 => self.s0_constants,
            Branch::Z0 => self.z0_constants,
        }
    }

    /// Evaluation grid over the domain (inclusive endpoints).
    pub fn grid(&self) -> Vec<f64> {
        let (x_min, x_max) = self.domain;
        let n = self.grid_points;
        (0..n)
            .map(|i| x_min + (x_max - x_min) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// A copy with one swept parameter replaced. The copy is re-validated
    /// where the change can break invariants.
    pub fn with_sweep_value(&self, parameter: SweepParameter, value: f64) -> Result<Scenario> {
        let mut out = self.clone();
        match parameter {
            SweepParameter::Energy => {
                out.setup = PhysicalSetup::new(
                    self.setup.rest_mass,
                    self.setup.light_speed,
                    self.setup.planck,
                    value,
                    self.setup.unit_system,
                )
                .map_err(|e| Error::Validation { field: "sweep".into(), reason: e.to_string() })?;
                let scan = 512;
                let (x_min, x_max) = out.domain;
                let ok = (0..=scan).any(|i| {
                    let x = x_min + (x_max - x_min) * i as f64 / scan as f64;
                    crate::model::mass_shell_margin(&out.setup, &out.potential, x)
                        .map(|m| m > out.eps_tp)
                        .unwrap_or(false)
                });
                if !ok {
                    return Err(Error::Validation {
                        field: "sweep".into(),
                        reason: format!("energy {value} leaves no classically allowed interval"),
                    });
                }
            }
            SweepParameter::ActionA => {
                out.s0_constants = BranchConstants::new(value, self.s0_constants.offset)?;
            }
            SweepParameter::ActionB => {
                out.s0_constants = BranchConstants::new(self.s0_constants.scale, value)?;
            }
            SweepParameter::ActionD => {
                out.z0_constants = BranchConstants::new(value, self.z0_constants.offset)?;
            }
            SweepParameter::ActionE => {
                out.z0_constants = BranchConstants::new(self.z0_constants.scale, value)?;
            }
        }
        Ok(out)
    }
}
