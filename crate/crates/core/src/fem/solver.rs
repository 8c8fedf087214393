use std::sync::OnceLock;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Mat, Side};
use nalgebra::DMatrix;
use rayon::prelude::*;

use super::dofs::{BoundaryCondition, DofMap};
use super::element::{element_force_and_stiffness, point_materials, ElementField, PointMaterial, PointState};
use super::mesh::Mesh;
use super::Method;
use crate::geometry::{classify_element, ElementClass, LevelSet};
use crate::materials::MaterialModel;
use crate::Error;

/// Elements evaluated per parallel batch before scattering.
const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative residual tolerance against the internal force norm.
    pub tol: f64,
    /// Linear solves per load increment, predictor included.
    pub max_iter: usize,
    pub max_halvings: u32,
    /// Multiplies the tangent before solving. Anything other than 1 breaks
    /// consistency and is meant for convergence diagnostics.
    pub tangent_scale: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 25, max_halvings: 8, tangent_scale: 1.0 }
    }
}

/// Sparsity pattern of the condensed tangent (column-major, sorted rows).
struct Pattern {
    symbolic: SymbolicSparseColMat<usize>,
    lu: OnceLock<SymbolicLu<usize>>,
    llt: OnceLock<Option<SymbolicLlt<usize>>>,
}

impl Pattern {
    fn new(mesh: &Mesh, dofs: &DofMap) -> Self {
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); dofs.n_eq];
        for nodes in &mesh.elements {
            let eqs = element_eqs(nodes, dofs);
            for c in eqs.iter().flatten() {
                cols[*c].extend(eqs.iter().flatten());
            }
        }
        let mut col_ptr = Vec::with_capacity(dofs.n_eq + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for mut rows in cols {
            rows.sort_unstable();
            rows.dedup();
            row_idx.extend(rows);
            col_ptr.push(row_idx.len());
        }
        let symbolic = SymbolicSparseColMat::new_checked(dofs.n_eq, dofs.n_eq, col_ptr, None, row_idx);
        Self { symbolic, lu: OnceLock::new(), llt: OnceLock::new() }
    }

    fn position(&self, row: usize, col: usize) -> usize {
        let ptr = self.symbolic.col_ptr();
        let (lo, hi) = (ptr[col], ptr[col + 1]);
        lo + self.symbolic.row_idx()[lo..hi].binary_search(&row).expect("entry outside the sparsity pattern")
    }
}

fn element_eqs(nodes: &[usize; 4], dofs: &DofMap) -> [Option<usize>; 8] {
    [0, 1, 2, 3, 4, 5, 6, 7].map(|k| dofs.eq[2 * nodes[k / 2] + k % 2])
}

/// Discretized boundary-value problem: mesh, per-point materials and constraints.
pub struct Problem {
    pub mesh: Mesh,
    pub method: Method,
    pub phases: [MaterialModel; 2],
    pub classes: Vec<ElementClass>,
    pub materials: Vec<[PointMaterial; 4]>,
    pub bcs: Vec<BoundaryCondition>,
    pub dofs: DofMap,
    pub options: SolverOptions,
    pattern: Pattern,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("nx", &self.mesh.nx)
            .field("ny", &self.mesh.ny)
            .field("method", &self.method)
            .field("n_eq", &self.dofs.n_eq)
            .finish()
    }
}

impl Problem {
    pub fn new(
        mesh: Mesh,
        method: Method,
        phases: [MaterialModel; 2],
        level_set: &LevelSet,
        n_sub: usize,
        bcs: Vec<BoundaryCondition>,
        options: SolverOptions,
    ) -> Result<Self, Error> {
        let classes = (0..mesh.n_elements())
            .into_par_iter()
            .map(|e| classify_element(level_set, &mesh.element_rect(e), n_sub))
            .collect::<Result<Vec<_>, _>>()?;
        let materials = classes
            .iter()
            .enumerate()
            .map(|(e, c)| point_materials(method, c, level_set, &mesh.element_rect(e)))
            .collect();
        let dofs = DofMap::new(&mesh, &bcs)?;
        if dofs.n_eq == 0 {
            return Err(Error::InvalidParameter("no free degrees of freedom".into()));
        }
        let pattern = Pattern::new(&mesh, &dofs);
        Ok(Self { mesh, method, phases, classes, materials, bcs, dofs, options, pattern })
    }

    pub fn initial_state(&self) -> SolutionState {
        SolutionState {
            u: vec![0.0; self.dofs.n_full],
            states: self.materials.iter().map(|m| [0, 1, 2, 3].map(|q| PointState::initial(&m[q]))).collect(),
            load: 0.0,
            fields: vec![ElementField::default(); self.mesh.n_elements()],
            internal_force: vec![0.0; self.dofs.n_full],
        }
    }

    fn symmetric(&self) -> bool {
        !self.phases.iter().any(MaterialModel::is_plastic)
    }

    /// Residual floor for problems whose converged internal forces vanish.
    fn absolute_floor(&self) -> f64 {
        let [x0, y0, x1, y1] = self.mesh.domain;
        let scale = self.phases.iter().map(MaterialModel::stress_scale).fold(0.0, f64::max);
        1e-3 * self.options.tol * scale * (x1 - x0).max(y1 - y0)
    }

    /// Total internal force over the listed nodes (reaction when they are constrained).
    pub fn reaction(&self, state: &SolutionState, nodes: &[usize]) -> [f64; 2] {
        let mut r = [0.0; 2];
        for &n in nodes {
            r[0] += state.internal_force[2 * n];
            r[1] += state.internal_force[2 * n + 1];
        }
        r
    }

    fn solve(&self, asm: &Assembly, rhs: &[f64]) -> Result<Vec<f64>, Error> {
        faer::set_global_parallelism(faer::Par::Seq);
        let mat = SparseColMatRef::new(self.pattern.symbolic.as_ref(), &asm.values);
        let mut x = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let mut solved = false;
        if self.symmetric() {
            let sym =
                self.pattern.llt.get_or_init(|| SymbolicLlt::try_new(self.pattern.symbolic.as_ref(), Side::Lower).ok());
            if let Some(sym) = sym {
                if let Ok(llt) = Llt::try_new_with_symbolic(sym.clone(), mat, Side::Lower) {
                    llt.solve_in_place(x.as_mut());
                    solved = true;
                }
            }
        }
        if !solved {
            let sym = match self.pattern.lu.get() {
                Some(s) => s.clone(),
                None => {
                    let s = SymbolicLu::try_new(self.pattern.symbolic.as_ref())
                        .map_err(|e| Error::LinearSolver(format!("{e:?}")))?;
                    self.pattern.lu.get_or_init(|| s).clone()
                }
            };
            let lu = Lu::try_new_with_symbolic(sym, mat).map_err(|e| Error::LinearSolver(format!("{e:?}")))?;
            lu.solve_in_place(x.as_mut());
        }
        let out: Vec<f64> = (0..rhs.len()).map(|i| x[(i, 0)] / self.options.tangent_scale).collect();
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::LinearSolver("singular tangent".into()))
        }
    }
}

/// Displacements and material states at one load level.
#[derive(Clone, Debug)]
pub struct SolutionState {
    /// Full nodal displacements, `[u₀ₓ, u₀ᵧ, u₁ₓ, …]`.
    pub u: Vec<f64>,
    pub states: Vec<[PointState; 4]>,
    pub load: f64,
    pub fields: Vec<ElementField>,
    /// Assembled internal force over all nodal dofs, reactions included.
    pub internal_force: Vec<f64>,
}

/// Global residual and tangent at a trial displacement.
pub struct Assembly {
    /// Condensed residual `Tᵀ f_int`.
    pub residual: Vec<f64>,
    pub internal_force: Vec<f64>,
    /// Condensed tangent values on the problem's sparsity pattern.
    pub values: Vec<f64>,
    /// `Tᵀ K g`: derivative of the residual with respect to the load factor.
    pub load_rate: Vec<f64>,
    pub states: Vec<[PointState; 4]>,
    pub fields: Vec<ElementField>,
}

impl Assembly {
    pub fn dense_tangent(&self, problem: &Problem) -> DMatrix<f64> {
        let n = problem.dofs.n_eq;
        let sym = &problem.pattern.symbolic;
        let mut k = DMatrix::zeros(n, n);
        for c in 0..n {
            for p in sym.col_ptr()[c]..sym.col_ptr()[c + 1] {
                k[(sym.row_idx()[p], c)] = self.values[p];
            }
        }
        k
    }
}

/// Evaluates all elements at the full displacement `u`, starting from the committed states.
pub fn assemble(problem: &Problem, committed: &SolutionState, u: &[f64]) -> Result<Assembly, Error> {
    let mesh = &problem.mesh;
    let dofs = &problem.dofs;
    let n_el = mesh.n_elements();
    let mut internal_force = vec![0.0; dofs.n_full];
    let mut values = vec![0.0; problem.pattern.symbolic.row_idx().len()];
    let mut load_rate = vec![0.0; dofs.n_eq];
    let mut states = Vec::with_capacity(n_el);
    let mut fields = Vec::with_capacity(n_el);

    for start in (0..n_el).step_by(CHUNK) {
        let end = (start + CHUNK).min(n_el);
        let outputs = (start..end)
            .into_par_iter()
            .map(|e| {
                let nodes = &mesh.elements[e];
                let u_e = [0, 1, 2, 3, 4, 5, 6, 7].map(|k| u[2 * nodes[k / 2] + k % 2]);
                element_force_and_stiffness(
                    &mesh.element_rect(e),
                    &problem.materials[e],
                    &problem.phases,
                    &u_e,
                    &committed.states[e],
                )
                .map_err(|err| match err {
                    Error::AtPoint { point, source, .. } => Error::AtPoint { element: e, point, source },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        for (offset, out) in outputs.into_iter().enumerate() {
            let nodes = &mesh.elements[start + offset];
            let full = [0, 1, 2, 3, 4, 5, 6, 7].map(|k| 2 * nodes[k / 2] + k % 2);
            let eqs = element_eqs(nodes, dofs);
            for a in 0..8 {
                internal_force[full[a]] += out.f[a];
                let Some(ra) = eqs[a] else { continue };
                for b in 0..8 {
                    load_rate[ra] += out.k[(a, b)] * dofs.g[full[b]];
                    if let Some(cb) = eqs[b] {
                        values[problem.pattern.position(ra, cb)] += out.k[(a, b)];
                    }
                }
            }
            states.push(out.states);
            fields.push(out.field);
        }
    }
    let residual = dofs.condense(&internal_force);
    Ok(Assembly { residual, internal_force, values, load_rate, states, fields })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Iteration log of one load increment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NewtonLog {
    /// Residual norm after each linear solve.
    pub residuals: Vec<f64>,
    /// Convergence reference (internal force norm) at the same iterates.
    pub references: Vec<f64>,
    pub iterations: usize,
}

/// Solves for equilibrium at load factor `load`, starting from the committed state.
///
/// The first solve is a consistent predictor linearized at the committed
/// state, so a linear problem converges after exactly one solve.
pub fn newton_solve(
    problem: &Problem,
    committed: &SolutionState,
    load: f64,
) -> Result<(SolutionState, NewtonLog), Error> {
    let dofs = &problem.dofs;
    let opts = &problem.options;
    let d_load = load - committed.load;
    let mut a = dofs.restrict(&committed.u, committed.load);
    let mut log = NewtonLog::default();

    let asm0 = assemble(problem, committed, &committed.u)?;
    let rhs: Vec<f64> = asm0.residual.iter().zip(&asm0.load_rate).map(|(r, l)| -(r + d_load * l)).collect();
    let da = problem.solve(&asm0, &rhs)?;
    drop(asm0);
    a.iter_mut().zip(&da).for_each(|(x, d)| *x += d);
    log.iterations = 1;

    loop {
        let u = dofs.expand(&a, load);
        let asm = assemble(problem, committed, &u)?;
        let r = norm(&asm.residual);
        let reference = norm(&asm.internal_force);
        log.residuals.push(r);
        log.references.push(reference);
        if !r.is_finite() {
            return Err(Error::GlobalDivergence(load));
        }
        if r <= opts.tol * reference || r <= problem.absolute_floor() {
            let state =
                SolutionState { u, states: asm.states, load, fields: asm.fields, internal_force: asm.internal_force };
            return Ok((state, log));
        }
        if log.iterations >= opts.max_iter {
            return Err(Error::GlobalDivergence(load));
        }
        let rhs: Vec<f64> = asm.residual.iter().map(|r| -r).collect();
        let da = problem.solve(&asm, &rhs)?;
        a.iter_mut().zip(&da).for_each(|(x, d)| *x += d);
        log.iterations += 1;
    }
}

/// Summary of one accepted load step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub load: f64,
    /// Linear solves summed over all accepted sub-increments.
    pub iterations: usize,
    /// Largest number of solves in a single accepted sub-increment.
    pub max_increment_iterations: usize,
    pub substeps: usize,
    pub halvings: u32,
    /// Residual history of the last sub-increment.
    pub residuals: Vec<f64>,
}

fn recoverable(e: &Error) -> bool {
    !matches!(e.root(), Error::InvalidParameter(_) | Error::Config(_) | Error::MeshMismatch(_) | Error::Io(_))
}

/// Drives the problem through the load-factor schedule, committing each accepted step.
///
/// A failed increment is retried from the committed state with half the
/// size, up to `max_halvings` times per step.
pub fn run_load_steps(
    problem: &Problem,
    initial: SolutionState,
    schedule: &[f64],
    mut on_step: impl FnMut(&StepRecord, &SolutionState),
) -> Result<(SolutionState, Vec<StepRecord>), Error> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("empty load schedule".into()));
    }
    let mut committed = initial;
    let mut records = Vec::with_capacity(schedule.len());
    for (step, &target) in schedule.iter().enumerate() {
        let mut size = target - committed.load;
        let mut halvings = 0;
        let mut record = StepRecord {
            step: step + 1,
            load: target,
            iterations: 0,
            max_increment_iterations: 0,
            substeps: 0,
            halvings: 0,
            residuals: Vec::new(),
        };
        loop {
            let remaining = target - committed.load;
            let next = if remaining.abs() <= size.abs() * (1.0 + 1e-12) { target } else { committed.load + size };
            match newton_solve(problem, &committed, next) {
                Ok((state, log)) => {
                    committed = state;
                    record.iterations += log.iterations;
                    record.max_increment_iterations = record.max_increment_iterations.max(log.iterations);
                    record.substeps += 1;
                    record.residuals = log.residuals;
                    if next == target {
                        break;
                    }
                }
                Err(e) if recoverable(&e) && halvings < problem.options.max_halvings => {
                    halvings += 1;
                    size *= 0.5;
                }
                Err(e) if recoverable(&e) => return Err(Error::GlobalDivergence(next)),
                Err(e) => return Err(e),
            }
        }
        record.halvings = halvings;
        on_step(&record, &committed);
        records.push(record);
    }
    Ok((committed, records))
}

/// Evenly spaced load factors `1/n, 2/n, …, 1`.
pub fn ramp(n_steps: usize) -> Vec<f64> {
    (1..=n_steps).map(|k| k as f64 / n_steps as f64).collect()
}
