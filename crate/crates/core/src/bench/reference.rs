//! Reference solutions and error norms.

use super::config::{BoundarySpec, LevelSetSpec, MaterialSpec, RunConfig};
use crate::fem::Mesh;
use crate::geometry::{LevelSet, Phase, Rect};
use crate::laminate::{solve_c, LaminateConfig, LaminateState};
use crate::materials::{History, MaterialModel};
use crate::tensor::{dyad, sym, Tensor2, Tensor4, Vector3};
use crate::Error;

const G3: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const W3: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
/// Sub-cells per element edge when integrating against a kinked analytic field.
const ANALYTIC_SUBDIVISION: usize = 8;

/// Closed-form piecewise-affine displacement across a planar interface:
/// `u(X) = H₁X + b⟨(X − X₀)·N⟩₊`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticField {
    pub point: [f64; 2],
    pub normal: [f64; 2],
    /// Displacement gradient in phase 1.
    pub h1: [[f64; 2]; 2],
    /// Jump vector; the gradient jump across the interface is `b⊗N`.
    pub jump: [f64; 2],
}

impl AnalyticField {
    pub fn displacement(&self, x: [f64; 2]) -> [f64; 2] {
        let d = self.distance(x).max(0.0);
        [0, 1].map(|i| self.h1[i][0] * x[0] + self.h1[i][1] * x[1] + self.jump[i] * d)
    }

    pub fn gradient(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let on = if self.distance(x) > 0.0 { 1.0 } else { 0.0 };
        [0, 1].map(|i| [0, 1].map(|j| self.h1[i][j] + on * self.jump[i] * self.normal[j]))
    }

    fn distance(&self, x: [f64; 2]) -> f64 {
        (x[0] - self.point[0]) * self.normal[0] + (x[1] - self.point[1]) * self.normal[1]
    }

    /// Exact solution of the planar benchmarks, if the configuration has one.
    ///
    /// `laminate` boundary: phase 1 carries `F₁` and phase 2 `F₁ + c⊗N`, with
    /// `c` from the laminate interface condition at `F̄ = I + H`. `clamped_left`
    /// with a rank-one eigenstrain `ε* = sym(b⊗N)` in phase 2: stress-free ramp.
    pub fn from_config(cfg: &RunConfig) -> Result<Option<Self>, Error> {
        let LevelSetSpec::Plane { point, normal } = cfg.level_set else {
            return Ok(None);
        };
        let len = normal[0].hypot(normal[1]);
        let n = [normal[0] / len, normal[1] / len];
        let n3 = Vector3::new(n[0], n[1], 0.0);
        let phases = cfg.materials.build()?;
        match cfg.boundary {
            BoundarySpec::Laminate { gradient } => {
                if phases.iter().any(MaterialModel::is_plastic) {
                    return Err(Error::Config("boundary: laminate field needs elastic phases".into()));
                }
                let lam = LaminateConfig::new(0.5, n3, phases[0], phases[1])?;
                let mut f_bar = Tensor2::identity();
                for i in 0..2 {
                    for j in 0..2 {
                        f_bar[(i, j)] += gradient[i][j];
                    }
                }
                let sol = solve_c(&f_bar, &lam, &LaminateState::virgin())?;
                let h1 = [0, 1].map(|i| [0, 1].map(|j| sol.f1[(i, j)] - if i == j { 1.0 } else { 0.0 }));
                Ok(Some(Self { point, normal: n, h1, jump: [sol.state.c[0], sol.state.c[1]] }))
            }
            BoundarySpec::ClampedLeft => {
                let eig = |m: &MaterialSpec| match m {
                    MaterialSpec::LinearElastic { eigenstrain, .. } => {
                        eigenstrain.map(|e| Tensor2::from_fn(|i, j| e[i][j]))
                    }
                    _ => None,
                };
                if eig(&cfg.materials.phase1).is_some_and(|e| e.norm() > 0.0) {
                    return Ok(None);
                }
                let Some(e) = eig(&cfg.materials.phase2) else { return Ok(None) };
                let en = e * n3;
                let b = en * 2.0 - n3 * n3.dot(&en);
                if (sym(&dyad(&b, &n3)) - e).norm() > 1e-12 * e.norm().max(1e-300) || b[2] != 0.0 {
                    return Err(Error::Config(
                        "materials.phase2.eigenstrain: not rank-one compatible with the interface normal".into(),
                    ));
                }
                let field = Self { point, normal: n, h1: [[0.0; 2]; 2], jump: [b[0], b[1]] };
                let [x0, y0, _, y1] = cfg.domain;
                if field.distance([x0, y0]) > 0.0 || field.distance([x0, y1]) > 0.0 {
                    return Err(Error::Config("boundary: clamped edge must lie in phase 1".into()));
                }
                Ok(Some(field))
            }
            _ => Ok(None),
        }
    }
}

/// Field the discrete solution is compared against.
#[derive(Clone, Copy, Debug)]
pub enum Reference<'a> {
    Analytic(&'a AnalyticField),
    /// Q1 solution on a mesh nested in the same domain.
    Discrete {
        mesh: &'a Mesh,
        u: &'a [f64],
    },
}

/// Relative error norms of a Q1 displacement field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    /// Energy norm with the initial elastic stiffness of the phase at each quadrature point.
    pub energy: f64,
}

struct Sample {
    weight: f64,
    x: [f64; 2],
    u: [f64; 2],
    grad: [[f64; 2]; 2],
    u_ref: [f64; 2],
    grad_ref: [[f64; 2]; 2],
}

fn q1_eval(rect: &Rect, nodal: &[f64; 8], x: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let xi = [2.0 * (x[0] - rect.x0) / rect.dx - 1.0, 2.0 * (x[1] - rect.y0) / rect.dy - 1.0];
    let n = crate::fem::element::shape_values(xi);
    let g = crate::fem::element::shape_gradients(rect, xi);
    let mut u = [0.0; 2];
    let mut grad = [[0.0; 2]; 2];
    for a in 0..4 {
        for i in 0..2 {
            u[i] += n[a] * nodal[2 * a + i];
            for j in 0..2 {
                grad[i][j] += g[a][j] * nodal[2 * a + i];
            }
        }
    }
    (u, grad)
}

fn gather(mesh: &Mesh, u: &[f64], e: usize) -> [f64; 8] {
    let nodes = &mesh.elements[e];
    [0, 1, 2, 3, 4, 5, 6, 7].map(|k| u[2 * nodes[k / 2] + k % 2])
}

/// 3×3 Gauss samples over `n × n` sub-cells of `rect`.
fn cell_points(rect: &Rect, n: usize) -> impl Iterator<Item = (f64, [f64; 2])> + '_ {
    let (sx, sy) = (rect.dx / n as f64, rect.dy / n as f64);
    (0..n * n).flat_map(move |c| {
        let (ci, cj) = (c % n, c / n);
        (0..9).map(move |q| {
            let (a, b) = (q % 3, q / 3);
            let x =
                [rect.x0 + sx * (ci as f64 + 0.5 * (1.0 + G3[a])), rect.y0 + sy * (cj as f64 + 0.5 * (1.0 + G3[b]))];
            (W3[a] * W3[b] * 0.25 * sx * sy, x)
        })
    })
}

fn for_each_sample(mesh: &Mesh, u: &[f64], reference: Reference, mut f: impl FnMut(&Sample)) -> Result<(), Error> {
    if u.len() != 2 * mesh.n_nodes() {
        return Err(Error::MeshMismatch(format!("{} values for {} nodes", u.len(), mesh.n_nodes())));
    }
    match reference {
        Reference::Analytic(field) => {
            for e in 0..mesh.n_elements() {
                let rect = mesh.element_rect(e);
                let nodal = gather(mesh, u, e);
                for (weight, x) in cell_points(&rect, ANALYTIC_SUBDIVISION) {
                    let (uh, gh) = q1_eval(&rect, &nodal, x);
                    f(&Sample {
                        weight,
                        x,
                        u: uh,
                        grad: gh,
                        u_ref: field.displacement(x),
                        grad_ref: field.gradient(x),
                    });
                }
            }
        }
        Reference::Discrete { mesh: fine, u: u_fine } => {
            let tol = 1e-12 * (mesh.domain[2] - mesh.domain[0]).abs().max((mesh.domain[3] - mesh.domain[1]).abs());
            let same_box = mesh.domain.iter().zip(&fine.domain).all(|(a, b)| (a - b).abs() <= tol);
            if !same_box || fine.nx % mesh.nx != 0 || fine.ny % mesh.ny != 0 || u_fine.len() != 2 * fine.n_nodes() {
                return Err(Error::MeshMismatch(format!(
                    "{}x{} is not nested in the {}x{} reference mesh",
                    mesh.nx, mesh.ny, fine.nx, fine.ny
                )));
            }
            let (rx, ry) = (fine.nx / mesh.nx, fine.ny / mesh.ny);
            for ef in 0..fine.n_elements() {
                let (i, j) = (ef % fine.nx, ef / fine.nx);
                let ec = (j / ry) * mesh.nx + i / rx;
                let (rc, rf) = (mesh.element_rect(ec), fine.element_rect(ef));
                let (nc, nf) = (gather(mesh, u, ec), gather(fine, u_fine, ef));
                for (weight, x) in cell_points(&rf, 1) {
                    let (uh, gh) = q1_eval(&rc, &nc, x);
                    let (ur, gr) = q1_eval(&rf, &nf, x);
                    f(&Sample { weight, x, u: uh, grad: gh, u_ref: ur, grad_ref: gr });
                }
            }
        }
    }
    Ok(())
}

/// Relative L2 norm of the displacement error, `‖u_h − u_ref‖ / ‖u_ref‖`.
pub fn l2_error(mesh: &Mesh, u: &[f64], reference: Reference) -> Result<f64, Error> {
    let (mut num, mut den) = (0.0, 0.0);
    for_each_sample(mesh, u, reference, |s| {
        num += s.weight * ((s.u[0] - s.u_ref[0]).powi(2) + (s.u[1] - s.u_ref[1]).powi(2));
        den += s.weight * (s.u_ref[0].powi(2) + s.u_ref[1].powi(2));
    })?;
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

fn strain_energy(c: &Tensor4, g: &[[f64; 2]; 2]) -> f64 {
    let mut h = Tensor2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            h[(i, j)] = g[i][j];
        }
    }
    let e = sym(&h);
    c.ddot(&e).dot(&e)
}

/// L2 and energy-norm errors; the energy norm uses the small-strain stiffness
/// of the phase the level set assigns to each quadrature point.
pub fn error_norms(
    mesh: &Mesh,
    u: &[f64],
    reference: Reference,
    level_set: &LevelSet,
    phases: &[MaterialModel; 2],
) -> Result<ErrorNorms, Error> {
    let stiff = phases
        .iter()
        .map(|m| m.state_update(&Tensor2::identity(), &History::virgin()).map(|r| r.tangent))
        .collect::<Result<Vec<_>, _>>()?;
    let (mut l2n, mut l2d, mut en, mut ed) = (0.0, 0.0, 0.0, 0.0);
    for_each_sample(mesh, u, reference, |s| {
        l2n += s.weight * ((s.u[0] - s.u_ref[0]).powi(2) + (s.u[1] - s.u_ref[1]).powi(2));
        l2d += s.weight * (s.u_ref[0].powi(2) + s.u_ref[1].powi(2));
        let phase = if level_set.value(s.x) > 0.0 { Phase::Two } else { Phase::One };
        let c = &stiff[phase.index()];
        let diff = [0, 1].map(|i| [0, 1].map(|j| s.grad[i][j] - s.grad_ref[i][j]));
        en += s.weight * strain_energy(c, &diff);
        ed += s.weight * strain_energy(c, &s.grad_ref);
    })?;
    let rel = |n: f64, d: f64| if d > 0.0 { (n / d).sqrt() } else { n.sqrt() };
    Ok(ErrorNorms { l2: rel(l2n, l2d), energy: rel(en, ed) })
}

/// Largest nodal displacement error relative to the largest exact nodal displacement.
pub fn max_nodal_error(mesh: &Mesh, u: &[f64], field: &AnalyticField) -> f64 {
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for (n, x) in mesh.nodes.iter().enumerate() {
        let ex = field.displacement(*x);
        err = err.max((u[2 * n] - ex[0]).abs()).max((u[2 * n + 1] - ex[1]).abs());
        scale = scale.max(ex[0].abs()).max(ex[1].abs());
    }
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}
