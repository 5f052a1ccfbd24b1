//! Lagrangians, the conservation law, conjugate momenta, the velocity law,
//! and deterministic trajectory integration for each spin projection.
//!
//! The squared velocity factors as
//!
//! ```text
//! xdot^2 = c^2 * B(x) * margin(x) / (E - V)^2
//! ```
//!
//! with B the deformation-function bracket and margin the mass-shell
//! margin, so velocity zeros are zeros of B*margin: the classical turning
//! points (margin = 0) and their quantum-displaced counterparts (B = 0).
//! Trajectories reflect (or stop) there; regions with B*margin < 0 are node
//! regions where the motion law leaves the reals.

use crate::action::{Branch, ReducedAction};
use crate::error::{Error, Result};
use crate::model::{mass_shell_margin, PhysicalSetup, PotentialModel};
use crate::ode;
use crate::qshje::{curvature_term, f_bracket, SpinSign};

/// L = -m0 c^2 sqrt(1 - f xdot^2/c^2) - V(x).
pub fn lagrangian(
    setup: &PhysicalSetup,
    pot: &PotentialModel,
    f: f64,
    x: f64,
    xdot: f64,
) -> Result<f64> {
    let c2 = setup.light_speed * setup.light_speed;
    let ratio = f * xdot * xdot / c2;
    if ratio >= 1.0 {
        return Err(Error::Superluminal { value: ratio });
    }
    Ok(-setup.rest_energy() * (1.0 - ratio).sqrt() - pot.value(x)?)
}

/// m0 c^2 / sqrt(1 - f xdot^2/c^2) + V(x) - E; zero along genuine motion.
pub fn conservation_residual(
    setup: &PhysicalSetup,
    pot: &PotentialModel,
    f: f64,
    x: f64,
    xdot: f64,
) -> Result<f64> {
    let c2 = setup.light_speed * setup.light_speed;
    let ratio = f * xdot * xdot / c2;
    if ratio >= 1.0 {
        return Err(Error::Superluminal { value: ratio });
    }
    Ok(setup.rest_energy() / (1.0 - ratio).sqrt() + pot.value(x)? - setup.energy)
}

/// The undeformed (f = 1) conservation residual
/// m0 c^2 / sqrt(1 - xdot^2/c^2) + V(x) - E, written out on its own so the
/// classical-limit identity can be checked expression against expression.
pub fn classical_conservation_residual(
    setup: &PhysicalSetup,
    pot: &PotentialModel,
    x: f64,
    xdot: f64,
) -> Result<f64> {
    let c2 = setup.light_speed * setup.light_speed;
    let ratio = xdot * xdot / c2;
    if ratio >= 1.0 {
        return Err(Error::Superluminal { value: ratio });
    }
    Ok(setup.rest_energy() / (1.0 - ratio).sqrt() + pot.value(x)? - setup.energy)
}

/// The spinless relativistic quantum momentum E - V - m0^2 c^4 / (E - V),
/// the common constant-potential and strong-quantum reduction target of
/// both branch momenta.
pub fn spinless_momentum(setup: &PhysicalSetup, pot: &PotentialModel, x: f64) -> Result<f64> {
    let ev = setup.energy - pot.value(x)?;
    if ev == 0.0 {
        return Err(Error::Node { x, value: f64::NEG_INFINITY });
    }
    let mc2 = setup.rest_energy();
    Ok(ev - mc2 * mc2 / ev)
}

/// Right-hand side of the sigma-branch conjugate-momentum law:
/// (E - V - m0^2c^4/(E-V)) * sqrt(1 - 2 m0 c^2 C_sigma / margin).
pub fn conjugate_momentum(
    setup: &PhysicalSetup,
    pot: &PotentialModel,
    x: f64,
    sigma: SpinSign,
) -> Result<f64> {
    let margin = mass_shell_margin(setup, pot, x)?;
    if margin == 0.0 {
        return Err(Error::TurningPoint { x });
    }
    let curv = curvature_term(setup, pot, x, sigma)?;
    let arg = 1.0 - 2.0 * setup.rest_energy() * curv / margin;
    if arg < 0.0 {
        return Err(Error::Node { x, value: arg });
    }
    Ok(spinless_momentum(setup, pot, x)? * arg.sqrt())
}

/// Signed velocity from the conservation law solved for xdot, with
/// f = f_from_action: xdot^2 = c^2 B(x) margin(x) / (E - V)^2.
///
/// Returns 0 exactly on the classical mass shell; B*margin < 0 is a node
/// (or classically forbidden) region and errors.
pub fn velocity(action: &ReducedAction, x: f64, direction: f64) -> Result<f64> {
    let setup = action.pair().setup();
    let pot = action.pair().potential();
    let margin = mass_shell_margin(setup, pot, x)?;
    if margin == 0.0 {
        return Ok(0.0);
    }
    let bracket = f_bracket(action, x)?;
    let n = bracket * margin;
    if n < 0.0 {
        return Err(Error::Node { x, value: n });
    }
    let ev = setup.energy - pot.value(x)?;
    Ok(direction.signum() * setup.light_speed * n.sqrt() / ev.abs())
}

/// What the integrator does when a trajectory reaches a velocity zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurningPolicy {
    Reflect,
    Stop,
}

#[derive(Debug, Clone)]
pub struct TrajectoryOptions {
    pub t_span: (f64, f64),
    pub direction: f64,
    pub rel_tol: f64,
    pub on_turning_point: TurningPolicy,
    /// Bisection tolerance for event positions (absolute, in x).
    pub event_position_tol: f64,
    pub max_steps: usize,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            t_span: (0.0, 1.0),
            direction: 1.0,
            rel_tol: 1e-10,
            on_turning_point: TurningPolicy::Reflect,
            event_position_tol: 1e-10,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    TurningPoint,
    Node,
    DomainExit,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::TurningPoint => "turning_point",
            EventKind::Node => "node",
            EventKind::DomainExit => "domain_exit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventMarker {
    pub t: f64,
    pub x: f64,
    pub kind: EventKind,
}

/// One accepted trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionState {
    pub t: f64,
    pub x: f64,
    pub xdot: f64,
    pub conservation_residual: f64,
}

/// Time-stamped motion of one spin projection, with event markers.
#[derive(Debug, Clone)]
pub struct Trajectory {
    branch: Branch,
    samples: Vec<MotionState>,
    events: Vec<EventMarker>,
}

impl Trajectory {
    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn samples(&self) -> &[MotionState] {
        &self.samples
    }

    pub fn events(&self) -> &[EventMarker] {
        &self.events
    }

    pub fn max_conservation_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.conservation_residual.abs())
            .fold(0.0, f64::max)
    }

    /// Position at time t by cubic Hermite interpolation between samples.
    pub fn position_at(&self, t: f64) -> Result<f64> {
        let (t0, t1) = (self.samples[0].t, self.samples[self.samples.len() - 1].t);
        if t < t0 || t > t1 {
            return Err(Error::OutOfDomain { x: t, min: t0, max: t1 });
        }
        let i = self
            .samples
            .partition_point(|s| s.t <= t)
            .saturating_sub(1)
            .min(self.samples.len() - 2);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        if a.t == b.t {
            return Ok(b.x);
        }
        Ok(ode::hermite(t, a.t, &[a.x], &[a.xdot], b.t, &[b.x], &[b.xdot])[0])
    }
}

/// Squared-velocity numerator B(x) * margin(x); its zeros are the
/// trajectory's turning events.
fn velocity_zero_function(action: &ReducedAction, x: f64) -> Result<f64> {
    let setup = action.pair().setup();
    let pot = action.pair().potential();
    Ok(f_bracket(action, x)? * mass_shell_margin(setup, pot, x)?)
}

/// Bisect `f` on [a, b] with f(a) > 0 >= f(b), returning the point on the
/// positive side (so downstream evaluation stays inside the allowed region).
fn bisect_positive_edge(
    f: &dyn Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
) -> Result<f64> {
    for _ in 0..200 {
        if (hi - lo).abs() <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// First zero of B*margin strictly ahead of `from_x` in the direction of
/// `to_x`, localized by bisection to `xtol`.
///
/// Scans a refinement of the solver mesh. The bracket B dips negative over
/// a window that can be much narrower than a mesh step, but such windows
/// always adjoin a sign change of the margin itself (the curvature term
/// blows up only where W_sigma -> 0, which is a classical turning point),
/// so a margin flip with no observed B*margin flip is also treated as a
/// bracketing event.
fn first_velocity_zero(
    action: &ReducedAction,
    from_x: f64,
    to_x: f64,
    xtol: f64,
) -> Result<Option<f64>> {
    if from_x == to_x {
        return Ok(None);
    }
    let setup = action.pair().setup();
    let pot = action.pair().potential();
    let n_of = |x: f64| velocity_zero_function(action, x);
    let m_of = |x: f64| mass_shell_margin(setup, pot, x);

    let forward = to_x > from_x;
    let nodes = action.pair().mesh().nodes();
    let mut base: Vec<f64> = nodes
        .iter()
        .map(|n| n.x)
        .filter(|&x| if forward { x > from_x && x < to_x } else { x < from_x && x > to_x })
        .collect();
    if !forward {
        base.reverse();
    }
    base.push(to_x);
    // Subdivide each gap so windows a few times narrower than a mesh step
    // are still probed directly.
    let mut scan = Vec::with_capacity(4 * base.len());
    let mut left = from_x;
    for &right in &base {
        for k in 1..=4 {
            scan.push(left + (right - left) * k as f64 / 4.0);
        }
        left = right;
    }

    let mut prev_x = from_x;
    let mut prev_m = m_of(from_x)?;
    if n_of(from_x)? <= 0.0 {
        return Ok(Some(from_x));
    }
    for x in scan {
        let n = n_of(x)?;
        let m = m_of(x)?;
        if n <= 0.0 {
            return Ok(Some(bisect_positive_edge(&n_of, prev_x, x, xtol)?));
        }
        if prev_m > 0.0 && m < 0.0 {
            // The margin flipped but B*margin did not: B must dip negative
            // inside a sub-probe window ending at the classical turning
            // point. Find the margin zero, then look for the B edge.
            let m_edge = bisect_positive_edge(&m_of, prev_x, x, xtol)?;
            if n_of(m_edge)? <= 0.0 {
                return Ok(Some(bisect_positive_edge(&n_of, prev_x, m_edge, xtol)?));
            }
            return Ok(Some(m_edge));
        }
        prev_x = x;
        prev_m = m;
    }
    Ok(None)
}

fn sample_at(action: &ReducedAction, t: f64, x: f64, xdot: f64) -> Result<MotionState> {
    let setup = action.pair().setup();
    let pot = action.pair().potential();
    let f = crate::qshje::f_from_action(action, x)?;
    let residual = conservation_residual(setup, pot, f, x, xdot)?;
    Ok(MotionState { t, x, xdot, conservation_residual: residual })
}

/// Integrate dx/dt = velocity(x) adaptively from `x0` over the requested
/// time span, reflecting or stopping at velocity zeros and stopping at the
/// solved-domain edge.
pub fn integrate_trajectory(
    action: &ReducedAction,
    x0: f64,
    opts: &TrajectoryOptions,
) -> Result<Trajectory> {
    let (t0, t_end) = opts.t_span;
    if !(t_end > t0) {
        return Err(Error::Validation {
            field: "trajectory.t_span".into(),
            reason: format!("need t_end > t_start, got [{t0}, {t_end}]"),
        });
    }
    if opts.direction == 0.0 || !opts.direction.is_finite() {
        return Err(Error::Validation {
            field: "trajectory.direction".into(),
            reason: "direction must be a nonzero sign".into(),
        });
    }
    let (dmin, dmax) = action.domain();
    if x0 < dmin || x0 > dmax {
        return Err(Error::OutOfDomain { x: x0, min: dmin, max: dmax });
    }

    let mut dir = opts.direction.signum();
    let v0 = velocity(action, x0, dir)
        .map_err(|e| Error::CannotStart { x: x0, reason: e.to_string() })?;
    if v0 == 0.0 {
        return Err(Error::CannotStart {
            x: x0,
            reason: "velocity vanishes at the starting point".into(),
        });
    }

    let mut t = t0;
    let mut x = x0;
    let mut v = v0;
    let mut samples = vec![sample_at(action, t, x, v)?];
    let mut events = Vec::new();
    let mut steps_used = 0usize;
    let mut h = (t_end - t0) * 1e-3;

    'segments: while t < t_end {
        let edge = if dir > 0.0 { dmax } else { dmin };
        let target = first_velocity_zero(action, x, edge, opts.event_position_tol)?;
        let (x_stop, stop_kind) = match target {
            Some(xe) => (xe, EventKind::TurningPoint),
            None => (edge, EventKind::DomainExit),
        };

        let rhs = |_t: f64, y: &[f64; 1]| -> Result<[f64; 1]> {
            Ok([velocity(action, y[0], dir)?])
        };

        loop {
            steps_used += 1;
            if steps_used > opts.max_steps {
                return Err(Error::Integration {
                    x,
                    reason: format!("trajectory exceeded {} steps", opts.max_steps),
                });
            }

            let dist = (x_stop - x) * dir;
            // Near a velocity zero the square-root profile makes RK error
            // estimates diverge, so stop at a standoff distance and bridge
            // the gap with the local model v^2 = A^2 (x_e - x): the time to
            // the zero and back is 4*dist/|v|.
            let arrival_tol = match stop_kind {
                EventKind::TurningPoint => 1e-5 * x_stop.abs().max(1.0),
                _ => opts.event_position_tol.max(x_stop.abs() * 1e-14),
            };
            if dist <= arrival_tol {
                let tau = if v != 0.0 { 2.0 * dist.max(0.0) / v.abs() } else { 0.0 };
                if t + tau > t_end {
                    // Time runs out before the event location is reached.
                    samples.push(sample_at(action, t_end, x, v)?);
                    break 'segments;
                }
                let t_event = t + tau;
                events.push(EventMarker { t: t_event, x: x_stop, kind: stop_kind });
                match stop_kind {
                    EventKind::DomainExit | EventKind::Node => break 'segments,
                    EventKind::TurningPoint => {
                        if opts.on_turning_point == TurningPolicy::Stop {
                            break 'segments;
                        }
                        dir = -dir;
                        let t_resume = t_event + tau;
                        if t_resume >= t_end {
                            break 'segments;
                        }
                        t = t_resume;
                        v = velocity(action, x, dir)?;
                        samples.push(sample_at(action, t, x, v)?);
                        h = (t_end - t) * 1e-3;
                        continue 'segments;
                    }
                }
            }

            let mut h_try = h.min(t_end - t);
            if v != 0.0 {
                h_try = h_try.min(0.5 * dist / v.abs());
            }
            if h_try <= f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::Integration {
                    x,
                    reason: "trajectory step size underflow".into(),
                });
            }

            match ode::dopri5_step(&rhs, t, &[x], &[v], h_try, opts.rel_tol, opts.rel_tol) {
                Ok(step) if step.error_norm <= 1.0 => {
                    t += h_try;
                    x = step.y_new[0];
                    v = step.dy_new[0];
                    samples.push(sample_at(action, t, x, v)?);
                    let scale = if step.error_norm > 0.0 {
                        (0.9 * step.error_norm.powf(-0.2)).clamp(0.2, 10.0)
                    } else {
                        10.0
                    };
                    h = h_try * scale;
                    if t >= t_end {
                        break 'segments;
                    }
                }
                Ok(step) => {
                    h = h_try * (0.9 * step.error_norm.powf(-0.2)).clamp(0.2, 0.9);
                }
                Err(Error::Node { .. }) | Err(Error::TurningPoint { .. }) => {
                    // A stage overshot past the velocity zero; shorten.
                    h = h_try * 0.5;
                }
                Err(e) => return Err(e),
            }
        }
    }

    Ok(Trajectory { branch: action.branch(), samples, events })
}

/// Limit-regime tag for a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeTag {
    /// Quantum terms algebraically zeroed (the hbar -> 0 surrogate).
    Classical,
    ConstantPotential,
    /// Kinetic energy small against the rest energy.
    PurelyQuantum,
    General,
}

impl RegimeTag {
    pub fn label(self) -> &'static str {
        match self {
            RegimeTag::Classical => "classical",
            RegimeTag::ConstantPotential => "constant_potential",
            RegimeTag::PurelyQuantum => "purely_quantum",
            RegimeTag::General => "general",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRegime {
    pub tag: RegimeTag,
    /// Kinetic energy T = E - V - m0 c^2 at the solve origin.
    pub kinetic_energy: f64,
}

/// Per-point reduction measurements. `None` marks points where the
/// quantity is undefined (recorded inline, never fatal).
#[derive(Debug, Clone, PartialEq)]
pub struct LimitRow {
    pub x: f64,
    pub f_minus_1: Option<f64>,
    pub eq8_deviation: Option<f64>,
    pub t_over_mc2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub regime: LimitRegime,
    pub rows: Vec<LimitRow>,
    /// All |f - 1| at exact zero (meaningful for the classical surrogate).
    pub classical_reduction_holds: Option<bool>,
    /// All momentum deviations from the spinless reduction at exact zero
    /// (meaningful for constant potentials).
    pub constant_reduction_holds: Option<bool>,
}

/// Tabulate |f - 1|, the deviation of the branch momentum from the spinless
/// momentum, and T/m0c^2 over a grid. With `classical_surrogate` the
/// Schwarzian and curvature terms are algebraically zeroed instead of
/// scaling hbar.
pub fn limit_report(action: &ReducedAction, grid: &[f64], classical_surrogate: bool) -> LimitReport {
    let setup = action.pair().setup();
    let pot = action.pair().potential();
    let sigma = SpinSign::from(action.branch());
    let mc2 = setup.rest_energy();

    let t_ref = pot
        .value(action.pair().x_origin())
        .map(|v| setup.energy - v - mc2)
        .unwrap_or(f64::NAN);
    let tag = if classical_surrogate {
        RegimeTag::Classical
    } else if matches!(pot, PotentialModel::Constant { .. }) {
        RegimeTag::ConstantPotential
    } else if t_ref.abs() < 0.1 * mc2 {
        RegimeTag::PurelyQuantum
    } else {
        RegimeTag::General
    };

    let mut rows = Vec::with_capacity(grid.len());
    for &x in grid {
        let f_minus_1 = if classical_surrogate {
            // Bracket with the Schwarzian term zeroed is exactly 1.
            Some(1.0 / (1.0 - 0.0) - 1.0)
        } else {
            crate::qshje::f_from_action(action, x).ok().map(|f| f - 1.0)
        };
        let eq8 = spinless_momentum(setup, pot, x).ok();
        let momentum = if classical_surrogate {
            // Curvature term zeroed: the sqrt factor is exactly 1.
            eq8.map(|p| p * 1.0f64.sqrt())
        } else {
            conjugate_momentum(setup, pot, x, sigma).ok()
        };
        let eq8_deviation = match (momentum, eq8) {
            (Some(p), Some(p8)) if p8 != 0.0 => Some((p - p8).abs() / p8.abs()),
            _ => None,
        };
        let t_over_mc2 = pot.value(x).map(|v| (setup.energy - v - mc2) / mc2).unwrap_or(f64::NAN);
        rows.push(LimitRow { x, f_minus_1, eq8_deviation, t_over_mc2 });
    }

    let classical_reduction_holds = if classical_surrogate {
        Some(rows.iter().all(|r| r.f_minus_1 == Some(0.0)))
    } else {
        None
    };
    let constant_reduction_holds = if matches!(pot, PotentialModel::Constant { .. }) {
        Some(rows.iter().all(|r| r.eq8_deviation == Some(0.0)))
    } else {
        None
    };

    LimitReport {
        regime: LimitRegime { tag, kinetic_energy: t_ref },
        rows,
        classical_reduction_holds,
        constant_reduction_holds,
    }
}
