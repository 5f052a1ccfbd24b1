//! Command execution: run the solve -> action -> verify -> trajectory
//! pipeline for a scenario and emit CSV tables plus a JSON run summary.
//!
//! Output is deterministic: fixed evaluation order, fixed 17-significant-
//! digit formatting, and sweep results sorted by scenario id regardless of
//! parallelism.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::action::{Branch, ReducedAction};
use crate::dirac::{solve_spinor_pair, SpinorSolutionPair};
use crate::dynamics::{integrate_trajectory, TrajectoryOptions};
use crate::error::{Error, Result};
use crate::qshje::{self, SpinSign};
use crate::scenario::{parse_scenario, Scenario};

/// The CLI commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Verify,
    Momentum,
    Trajectory,
    Limits,
    Sweep,
}

impl Command {
    pub fn label(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Momentum => "momentum",
            Command::Trajectory => "trajectory",
            Command::Limits => "limits",
            Command::Sweep => "sweep",
        }
    }
}

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub branch: Option<Branch>,
    pub tol: Option<f64>,
}

/// Round-trippable decimal with 17 significant digits.
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, serde::Serialize)]
pub struct SummaryEvent {
    pub t: f64,
    pub x: f64,
    pub kind: String,
}

/// JSON run summary written next to the CSV outputs.
#[derive(Debug, serde::Serialize)]
pub struct RunSummary {
    pub command: String,
    pub scenario_hash: String,
    pub branch: String,
    pub max_residual_norm_s0: Option<f64>,
    pub max_residual_norm_z0: Option<f64>,
    pub events: Vec<SummaryEvent>,
    pub outputs: Vec<String>,
}

struct Workbench {
    scenario: Scenario,
    s0: ReducedAction,
    z0: ReducedAction,
}

impl Workbench {
    fn build(scenario: Scenario) -> Result<Self> {
        let pair: Arc<SpinorSolutionPair> = solve_spinor_pair(
            &scenario.setup,
            &scenario.potential,
            scenario.domain,
            scenario.x0,
            scenario.init1,
            scenario.init2,
            scenario.solver_tol,
        )?
        .into_shared();
        let s0 = ReducedAction::build(pair.clone(), Branch::S0, scenario.s0_constants)?;
        let z0 = ReducedAction::build(pair, Branch::Z0, scenario.z0_constants)?;
        Ok(Self { scenario, s0, z0 })
    }

    fn action(&self, branch: Branch) -> &ReducedAction {
        match branch {
            Branch::S0 => &self.s0,
            Branch::Z0 => &self.z0,
        }
    }
}

fn max_residual_norm(action: &ReducedAction, grid: &[f64]) -> Result<f64> {
    let sigma = SpinSign::from(action.branch());
    let mut worst = 0.0f64;
    for &x in grid {
        worst = worst.max(qshje::qshje_residual(action, x, sigma)?.normalized.abs());
    }
    Ok(worst)
}

fn scenario_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parse, validate, run one command, and write its output files into
/// `out_dir`. Returns the summary that was also written to `summary.json`.
pub fn run_scenario(
    text: &str,
    command: Command,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<RunSummary> {
    let mut scenario = parse_scenario(text)?;
    if let Some(branch) = overrides.branch {
        scenario.branch = branch;
    }
    if let Some(tol) = overrides.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::Validation {
                field: "--tol".into(),
                reason: format!("tolerance must be positive, got {tol}"),
            });
        }
        scenario.solver_tol = tol;
    }

    std::fs::create_dir_all(out_dir)?;
    let hash = scenario_hash(text);
    let branch = scenario.branch;

    let mut summary = RunSummary {
        command: command.label().into(),
        scenario_hash: hash,
        branch: branch.label().into(),
        max_residual_norm_s0: None,
        max_residual_norm_z0: None,
        events: Vec::new(),
        outputs: Vec::new(),
    };

    match command {
        Command::Sweep => run_sweep(&scenario, out_dir, &mut summary)?,
        _ => {
            let bench = Workbench::build(scenario)?;
            let grid = bench.scenario.grid();
            match command {
                Command::Solve => run_solve(&bench, &grid, out_dir, &mut summary)?,
                Command::Verify => run_verify(&bench, &grid, out_dir, &mut summary)?,
                Command::Momentum => run_momentum(&bench, &grid, out_dir, &mut summary)?,
                Command::Trajectory => run_trajectory(&bench, out_dir, &mut summary)?,
                Command::Limits => run_limits(&bench, &grid, out_dir, &mut summary)?,
                Command::Sweep => unreachable!(),
            }
        }
    }

    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(out_dir.join("summary.json"), json + "\n")?;
    summary.outputs.push("summary.json".into());
    Ok(summary)
}

fn write_output(out_dir: &Path, name: &str, body: String, summary: &mut RunSummary) -> Result<()> {
    std::fs::write(out_dir.join(name), body)?;
    summary.outputs.push(name.into());
    Ok(())
}

fn run_solve(
    bench: &Workbench,
    grid: &[f64],
    out_dir: &Path,
    summary: &mut RunSummary,
) -> Result<()> {
    let pair = bench.s0.pair();
    let mut csv = String::from("x,theta1,chi1,theta2,chi2,cross_current\n");
    for &x in grid {
        let v = pair.eval(x)?;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_g17(x),
            fmt_g17(v.theta1),
            fmt_g17(v.chi1),
            fmt_g17(v.theta2),
            fmt_g17(v.chi2),
            fmt_g17(v.cross_current()),
        ));
    }
    write_output(out_dir, "solve.csv", csv, summary)
}

fn run_verify(
    bench: &Workbench,
    grid: &[f64],
    out_dir: &Path,
    summary: &mut RunSummary,
) -> Result<()> {
    let action = bench.action(bench.scenario.branch);
    let sigma = SpinSign::from(action.branch());
    let mut csv =
        String::from("x,S_prime,schwarzian,curvature,mass_shell,residual_raw,residual_norm\n");
    for &x in grid {
        let report = qshje::qshje_residual(action, x, sigma)?;
        let d1 = action.derivative(x, 1)?;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_g17(x),
            fmt_g17(d1),
            fmt_g17(report.schwarzian),
            fmt_g17(report.curvature),
            fmt_g17(report.mass_shell),
            fmt_g17(report.raw),
            fmt_g17(report.normalized),
        ));
    }
    // The selected branch is evaluated strictly; the other one best-effort.
    match bench.scenario.branch {
        Branch::S0 => {
            summary.max_residual_norm_s0 = Some(max_residual_norm(&bench.s0, grid)?);
            summary.max_residual_norm_z0 = max_residual_norm(&bench.z0, grid).ok();
        }
        Branch::Z0 => {
            summary.max_residual_norm_z0 = Some(max_residual_norm(&bench.z0, grid)?);
            summary.max_residual_norm_s0 = max_residual_norm(&bench.s0, grid).ok();
        }
    }
    write_output(out_dir, "verify.csv", csv, summary)
}

fn run_momentum(
    bench: &Workbench,
    grid: &[f64],
    out_dir: &Path,
    summary: &mut RunSummary,
) -> Result<()> {
    let scenario = &bench.scenario;
    let action = bench.action(scenario.branch);
    let mut csv = String::from("x,rhs_eq20,rhs_eq21,product_check\n");
    for &x in grid {
        let p20 =
            crate::dynamics::conjugate_momentum(&scenario.setup, &scenario.potential, x, SpinSign::Plus)?;
        let p21 =
            crate::dynamics::conjugate_momentum(&scenario.setup, &scenario.potential, x, SpinSign::Minus)?;
        let product =
            crate::dynamics::velocity(action, x, 1.0)? * action.derivative(x, 1)?;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_g17(x),
            fmt_g17(p20),
            fmt_g17(p21),
            fmt_g17(product),
        ));
    }
    write_output(out_dir, "momentum.csv", csv, summary)
}

fn run_trajectory(bench: &Workbench, out_dir: &Path, summary: &mut RunSummary) -> Result<()> {
    let scenario = &bench.scenario;
    let spec = scenario.trajectory.as_ref().ok_or_else(|| Error::Validation {
        field: "trajectory".into(),
        reason: "the trajectory command needs a [trajectory] section".into(),
    })?;
    let action = bench.action(scenario.branch);
    let opts = TrajectoryOptions {
        t_span: spec.t_span,
        direction: spec.direction,
        rel_tol: scenario.solver_tol,
        on_turning_point: spec.on_turning_point,
        ..Default::default()
    };
    let traj = integrate_trajectory(action, spec.x0, &opts)?;

    // Interleave samples and event rows by time (events after samples at
    // equal times).
    let mut rows: Vec<(f64, u8, String)> = Vec::new();
    for s in traj.samples() {
        rows.push((
            s.t,
            0,
            format!(
                "{},{},{},{},\n",
                fmt_g17(s.t),
                fmt_g17(s.x),
                fmt_g17(s.xdot),
                fmt_g17(s.conservation_residual),
            ),
        ));
    }
    for e in traj.events() {
        summary.events.push(SummaryEvent { t: e.t, x: e.x, kind: e.kind.label().into() });
        rows.push((
            e.t,
            1,
            format!(
                "{},{},{},{},{}\n",
                fmt_g17(e.t),
                fmt_g17(e.x),
                fmt_g17(0.0),
                fmt_g17(0.0),
                e.kind.label(),
            ),
        ));
    }
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut csv = String::from("t,x,xdot,conservation_residual,event\n");
    for (_, _, row) in rows {
        csv.push_str(&row);
    }
    write_output(out_dir, "trajectory.csv", csv, summary)
}

fn run_limits(
    bench: &Workbench,
    grid: &[f64],
    out_dir: &Path,
    summary: &mut RunSummary,
) -> Result<()> {
    let action = bench.action(bench.scenario.branch);
    let report = crate::dynamics::limit_report(action, grid, false);
    let mut csv = String::from("x,f_minus_1,eq8_deviation,T_over_mc2\n");
    for row in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_g17(row.x),
            fmt_g17(row.f_minus_1.unwrap_or(f64::NAN)),
            fmt_g17(row.eq8_deviation.unwrap_or(f64::NAN)),
            fmt_g17(row.t_over_mc2),
        ));
    }
    write_output(out_dir, "limits.csv", csv, summary)
}

fn sanitize_status(e: &Error) -> String {
    e.to_string().replace([',', '\n'], ";")
}

fn run_sweep(scenario: &Scenario, out_dir: &Path, summary: &mut RunSummary) -> Result<()> {
    let sweep = scenario.sweep.as_ref().ok_or_else(|| Error::Validation {
        field: "sweep".into(),
        reason: "the sweep command needs a [sweep] section".into(),
    })?;

    let mut results: Vec<(usize, f64, Option<f64>, Option<f64>, String)> = sweep
        .values
        .par_iter()
        .enumerate()
        .map(|(id, &value)| {
            let outcome = scenario
                .with_sweep_value(sweep.parameter, value)
                .and_then(Workbench::build)
                .and_then(|bench| {
                    let grid = bench.scenario.grid();
                    let s0 = max_residual_norm(&bench.s0, &grid)?;
                    let z0 = max_residual_norm(&bench.z0, &grid).ok();
                    Ok((s0, z0))
                });
            match outcome {
                Ok((s0, z0)) => (id, value, Some(s0), z0, "ok".to_string()),
                Err(e) => (id, value, None, None, sanitize_status(&e)),
            }
        })
        .collect();
    results.sort_by_key(|r| r.0);

    let mut csv = String::from(
        "id,value,max_residual_norm_s0,max_residual_norm_z0,status\n",
    );
    for (id, value, s0, z0, status) in &results {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            id,
            fmt_g17(*value),
            fmt_g17(s0.unwrap_or(f64::NAN)),
            fmt_g17(z0.unwrap_or(f64::NAN)),
            status,
        ));
    }
    summary.max_residual_norm_s0 =
        results.iter().filter_map(|r| r.2).fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    summary.max_residual_norm_z0 =
        results.iter().filter_map(|r| r.3).fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    write_output(out_dir, "sweep.csv", csv, summary)
}
