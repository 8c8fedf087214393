//! Run configuration, benchmark drivers, convergence studies and error norms.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

mod config;
mod reference;

pub use config::{
    BoundarySpec, LevelSetSpec, LoadSpec, MaterialSpec, MaterialsSpec, MeshSpec, ReferenceSpec, RunConfig, SolverSpec,
};
pub use reference::{error_norms, l2_error, max_nodal_error, AnalyticField, ErrorNorms, Reference};

use crate::fem::output::{write_csv, write_vtk};
use crate::fem::{run_load_steps, Edge, Method, Problem, SolutionState, StepRecord};
use crate::geometry::ElementClass;
use crate::laminate::{respond, LaminateConfig, LaminateState};
use crate::tensor::{Tensor2, Vector3};
use crate::Error;

/// Per-step entry of a run summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub step: usize,
    pub load: f64,
    pub iterations: usize,
    pub max_increment_iterations: usize,
    pub substeps: usize,
    pub reaction: [f64; 2],
    pub max_plastic_strain: f64,
}

/// Errors against the configured reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub reference: String,
    pub l2: f64,
    pub energy: f64,
    /// Relative nodal error; present for analytic references only.
    pub max_nodal: Option<f64>,
}

/// Machine-readable outcome of [`run`], written to `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub method: Method,
    pub nx: usize,
    pub ny: usize,
    pub n_dofs: usize,
    pub n_cut_elements: usize,
    pub converged: bool,
    pub message: Option<String>,
    pub final_load: f64,
    pub total_iterations: usize,
    pub max_increment_iterations: usize,
    pub max_plastic_strain: f64,
    pub residual_plastic_strain: f64,
    pub steps: Vec<StepSummary>,
    pub error: Option<ErrorSummary>,
}

pub struct RunOutcome {
    pub summary: Summary,
    pub problem: Problem,
    pub state: SolutionState,
}

fn max_gamma(state: &SolutionState) -> f64 {
    state.fields.iter().map(|f| f.gamma).fold(0.0, f64::max)
}

fn right_reaction(problem: &Problem, state: &SolutionState) -> [f64; 2] {
    problem.reaction(state, &problem.mesh.edge_nodes(Edge::Right))
}

/// Solves the configured problem without writing anything.
///
/// On divergence the returned summary has `converged = false` and the state
/// is the last committed one.
pub fn solve(cfg: &RunConfig) -> Result<RunOutcome, Error> {
    let problem = cfg.build_problem()?;
    let n_cut = problem.classes.iter().filter(|c| matches!(c, ElementClass::Cut { .. })).count();
    let mut steps = Vec::new();
    let mut last = problem.initial_state();
    let mut peak: f64 = 0.0;
    let result = run_load_steps(&problem, problem.initial_state(), &cfg.schedule(), |rec: &StepRecord, s| {
        let g = max_gamma(s);
        peak = peak.max(g);
        steps.push(StepSummary {
            step: rec.step,
            load: rec.load,
            iterations: rec.iterations,
            max_increment_iterations: rec.max_increment_iterations,
            substeps: rec.substeps,
            reaction: right_reaction(&problem, s),
            max_plastic_strain: g,
        });
        last = s.clone();
    });
    let (converged, message, state) = match result {
        Ok((state, _)) => (true, None, state),
        Err(e) if matches!(e, Error::GlobalDivergence(_)) => (false, Some(e.to_string()), last),
        Err(e) => return Err(e),
    };
    let error = if converged { compute_error(cfg, &problem, &state)? } else { None };
    let summary = Summary {
        name: cfg.name.clone(),
        method: cfg.method,
        nx: cfg.mesh.nx,
        ny: cfg.mesh.ny,
        n_dofs: problem.dofs.n_eq,
        n_cut_elements: n_cut,
        converged,
        message,
        final_load: state.load,
        total_iterations: steps.iter().map(|s| s.iterations).sum(),
        max_increment_iterations: steps.iter().map(|s| s.max_increment_iterations).max().unwrap_or(0),
        max_plastic_strain: peak,
        residual_plastic_strain: max_gamma(&state),
        steps,
        error,
    };
    Ok(RunOutcome { summary, problem, state })
}

fn compute_error(cfg: &RunConfig, problem: &Problem, state: &SolutionState) -> Result<Option<ErrorSummary>, Error> {
    let ls = cfg.level_set.build()?;
    match cfg.reference {
        None => Ok(None),
        Some(ReferenceSpec::Analytic) => {
            let field = AnalyticField::from_config(cfg)?
                .ok_or_else(|| Error::Config("reference: no analytic solution for this configuration".into()))?;
            let norms = error_norms(&problem.mesh, &state.u, Reference::Analytic(&field), &ls, &problem.phases)?;
            Ok(Some(ErrorSummary {
                reference: "analytic".into(),
                l2: norms.l2,
                energy: norms.energy,
                max_nodal: Some(max_nodal_error(&problem.mesh, &state.u, &field)),
            }))
        }
        Some(ReferenceSpec::Overkill { factor }) => {
            let fine_cfg = cfg.with_resolution(Method::Let, cfg.mesh.nx * factor);
            let fine = solve(&RunConfig { reference: None, ..fine_cfg })?;
            if !fine.summary.converged {
                return Err(Error::GlobalDivergence(fine.state.load));
            }
            let r = Reference::Discrete { mesh: &fine.problem.mesh, u: &fine.state.u };
            let norms = error_norms(&problem.mesh, &state.u, r, &ls, &problem.phases)?;
            Ok(Some(ErrorSummary {
                reference: format!("LET {}x", factor),
                l2: norms.l2,
                energy: norms.energy,
                max_nodal: None,
            }))
        }
    }
}

pub const LOAD_CURVE_HEADER: [&str; 7] =
    ["step", "load", "reaction_x", "reaction_y", "iterations", "substeps", "max_plastic_strain"];

/// Solves and writes `summary.json`, `load_curve.csv` and (optionally) `solution.vtk`
/// into `out`. A divergent run still writes its summary before returning the error.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<Summary, Error> {
    std::fs::create_dir_all(out)?;
    let outcome = solve(cfg)?;
    let rows: Vec<Vec<f64>> = outcome
        .summary
        .steps
        .iter()
        .map(|s| {
            vec![
                s.step as f64,
                s.load,
                s.reaction[0],
                s.reaction[1],
                s.iterations as f64,
                s.substeps as f64,
                s.max_plastic_strain,
            ]
        })
        .collect();
    write_csv(&out.join("load_curve.csv"), &LOAD_CURVE_HEADER, &rows)?;
    if cfg.write_vtk {
        write_vtk(&out.join("solution.vtk"), &outcome.problem, &outcome.state)?;
    }
    let json = serde_json::to_string_pretty(&outcome.summary).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(out.join("summary.json"), json + "\n")?;
    if !outcome.summary.converged {
        return Err(Error::GlobalDivergence(outcome.summary.final_load));
    }
    Ok(outcome.summary)
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub method: Method,
    pub n: usize,
    /// Element size along x.
    pub h: f64,
    pub ndof: usize,
    pub error_l2: f64,
    pub error_energy: f64,
    pub wall_time: f64,
    /// Failure message when the row could not be computed.
    pub failure: Option<String>,
}

pub const CONVERGENCE_HEADER: [&str; 7] = ["method", "n", "h", "ndof", "error_l2", "error_energy", "wall_time"];

/// Runs `base` at each resolution (elements along x) for each method.
///
/// The reference is analytic when `base.reference` says so; otherwise a LET
/// solution at `factor ×` the finest resolution (factor 4 unless configured).
/// Failed rows carry a message and NaN errors; the remaining rows still run.
pub fn convergence_study(
    base: &RunConfig,
    resolutions: &[usize],
    methods: &[Method],
) -> Result<Vec<ConvergenceRow>, Error> {
    let mut sorted = resolutions.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let finest = *sorted.last().ok_or_else(|| Error::Config("study: no resolutions".into()))?;
    let ls = base.level_set.build()?;

    let analytic = match base.reference {
        Some(ReferenceSpec::Analytic) => Some(
            AnalyticField::from_config(base)?
                .ok_or_else(|| Error::Config("reference: no analytic solution for this configuration".into()))?,
        ),
        _ => None,
    };
    let fine = match analytic {
        Some(_) => None,
        None => {
            let factor = match base.reference {
                Some(ReferenceSpec::Overkill { factor }) => factor,
                _ => 4,
            };
            let cfg = RunConfig { reference: None, ..base.with_resolution(Method::Let, finest * factor) };
            let out = solve(&cfg)?;
            if !out.summary.converged {
                return Err(Error::GlobalDivergence(out.state.load));
            }
            Some(out)
        }
    };

    let mut rows = Vec::new();
    for &method in methods {
        for &n in &sorted {
            let cfg = RunConfig { reference: None, ..base.with_resolution(method, n) };
            let start = Instant::now();
            let result = solve(&cfg).and_then(|o| {
                if !o.summary.converged {
                    return Err(Error::GlobalDivergence(o.state.load));
                }
                let r = match (&analytic, &fine) {
                    (Some(field), _) => Reference::Analytic(field),
                    (None, Some(f)) => Reference::Discrete { mesh: &f.problem.mesh, u: &f.state.u },
                    _ => unreachable!(),
                };
                let e = error_norms(&o.problem.mesh, &o.state.u, r, &ls, &o.problem.phases)?;
                Ok((o.problem.dofs.n_eq, e))
            });
            let wall_time = start.elapsed().as_secs_f64();
            let h = (base.domain[2] - base.domain[0]) / n as f64;
            rows.push(match result {
                Ok((ndof, e)) => ConvergenceRow {
                    method,
                    n,
                    h,
                    ndof,
                    error_l2: e.l2,
                    error_energy: e.energy,
                    wall_time,
                    failure: None,
                },
                Err(e) => ConvergenceRow {
                    method,
                    n,
                    h,
                    ndof: 0,
                    error_l2: f64::NAN,
                    error_energy: f64::NAN,
                    wall_time,
                    failure: Some(e.to_string()),
                },
            });
        }
    }
    Ok(rows)
}

pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<(), Error> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{}", CONVERGENCE_HEADER.join(","))?;
    for r in rows {
        writeln!(
            f,
            "{},{},{:e},{},{:e},{:e},{:.3}",
            r.method, r.n, r.h, r.ndof, r.error_l2, r.error_energy, r.wall_time
        )?;
    }
    f.flush()?;
    Ok(())
}

/// Material-point driver for a prescribed macroscopic gradient history
/// `F̄(t) = I + t H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaminatePathConfig {
    pub materials: MaterialsSpec,
    pub eta: f64,
    pub normal: [f64; 3],
    /// `H = F̄(1) − I`.
    pub gradient: [[f64; 3]; 3],
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub unload: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_steps() -> usize {
    20
}

pub const LAMINATE_PATH_HEADER: [&str; 24] = [
    "t", "F11", "F12", "F13", "F21", "F22", "F23", "F31", "F32", "F33", "P11", "P12", "P13", "P21", "P22", "P23",
    "P31", "P32", "P33", "c1", "c2", "c3", "gamma1", "gamma2",
];

/// Rows `(t, F̄, P̄, c, γ₁, γ₂)` along the path, histories committed after every step.
pub fn laminate_path(cfg: &LaminatePathConfig) -> Result<Vec<Vec<f64>>, Error> {
    if cfg.steps == 0 {
        return Err(Error::Config("steps: must be at least 1".into()));
    }
    let [p1, p2] = cfg.materials.build()?;
    let lam = LaminateConfig::new(cfg.eta, Vector3::from(cfg.normal), p1, p2)
        .map_err(|e| Error::Config(format!("laminate: {e}")))?;
    let h = Tensor2::from_fn(|i, j| cfg.gradient[i][j]);
    let mut ts: Vec<f64> = (0..=cfg.steps).map(|k| k as f64 / cfg.steps as f64).collect();
    if cfg.unload {
        ts.extend((0..cfg.steps).rev().map(|k| k as f64 / cfg.steps as f64));
    }
    let mut state = LaminateState::virgin();
    let mut rows = Vec::with_capacity(ts.len());
    for t in ts {
        let f = Tensor2::identity() + h * t;
        let r = respond(&f, &lam, &state)?;
        state = r.state;
        let mut row = vec![t];
        row.extend(f.transpose().iter());
        row.extend(r.p.transpose().iter());
        row.extend(state.c.iter());
        row.push(state.h1.gamma());
        row.push(state.h2.gamma());
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laminate_path_rows() {
        let cfg: LaminatePathConfig = serde_json::from_str(
            r#"{
                "materials": {
                    "phase1": {"model": "j2", "mu": 1.0, "lambda": 1.5, "sigma0": 0.01, "hardening": 0.1},
                    "phase2": {"model": "neo_hookean", "mu": 5.0, "lambda": 5.0}
                },
                "eta": 0.4, "normal": [1.0, 0.0, 0.0],
                "gradient": [[0.0, 0.05, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
                "steps": 10, "unload": true
            }"#,
        )
        .unwrap();
        let rows = laminate_path(&cfg).unwrap();
        assert_eq!(rows.len(), 21);
        assert!(rows.iter().all(|r| r.len() == LAMINATE_PATH_HEADER.len()));
        assert_eq!(rows[0][1], 1.0);
        assert_eq!(rows[10][2], 0.05);
        let last = rows.last().unwrap();
        assert!(last[22] > 0.0 && last[23] == 0.0);
        // γ never decreases
        assert!(rows.windows(2).all(|w| w[1][22] >= w[0][22]));
    }
}
