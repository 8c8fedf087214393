use nalgebra::{SMatrix, SVector};

use crate::fem::Method;
use crate::geometry::{element_center_phase, gauss_phase_map, ElementClass, LevelSet, Phase, Rect};
use crate::laminate::{self, LaminateConfig, LaminateState};
use crate::materials::{History, MaterialModel};
use crate::tensor::{deviator, Tensor2, Vector3};
use crate::Error;

const G: f64 = 0.577_350_269_189_625_8;

/// 2×2 Gauss points in reference coordinates, counterclockwise; all weights are 1.
pub const GAUSS_POINTS: [[f64; 2]; 4] = [[-G, -G], [G, -G], [G, G], [-G, G]];

const NODE_XI: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Constitutive behavior assigned to one Gauss point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointMaterial {
    Phase(Phase),
    /// Element-level laminate shared by all points of a cut element.
    Laminate {
        eta: f64,
        normal: Vector3,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum PointState {
    Pure(History),
    Laminate(Box<LaminateState>),
}

impl PointState {
    pub fn initial(material: &PointMaterial) -> Self {
        match material {
            PointMaterial::Phase(_) => PointState::Pure(History::virgin()),
            PointMaterial::Laminate { .. } => PointState::Laminate(Box::default()),
        }
    }
}

/// Element-averaged output quantities.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ElementField {
    /// Mean Piola stress over the Gauss points.
    pub p_mean: Tensor2,
    pub von_mises: f64,
    /// Equivalent plastic strain, volume-averaged over phases.
    pub gamma: f64,
}

#[derive(Clone, Debug)]
pub struct ElementOutput {
    pub f: SVector<f64, 8>,
    pub k: SMatrix<f64, 8, 8>,
    pub states: [PointState; 4],
    pub p: [Tensor2; 4],
    pub field: ElementField,
    /// Largest number of interface iterations over the laminate points.
    pub laminate_iterations: usize,
}

/// Gauss-point materials of one element for the chosen method.
///
/// Pure elements are treated identically by all methods. Cut elements take
/// the centroid phase (ELA), per-point phases (GPLA), or a laminate (LET).
pub fn point_materials(method: Method, class: &ElementClass, ls: &LevelSet, rect: &Rect) -> [PointMaterial; 4] {
    match class {
        ElementClass::Phase1 => [PointMaterial::Phase(Phase::One); 4],
        ElementClass::Phase2 => [PointMaterial::Phase(Phase::Two); 4],
        ElementClass::Cut { eta, normal } => match method {
            Method::Let => [PointMaterial::Laminate { eta: *eta, normal: *normal }; 4],
            Method::Ela => [PointMaterial::Phase(element_center_phase(ls, rect)); 4],
            Method::Gpla => {
                let map = gauss_phase_map(ls, rect, &GAUSS_POINTS);
                [0, 1, 2, 3].map(|q| PointMaterial::Phase(map[q]))
            }
        },
    }
}

/// Shape-function gradients `∂N_a/∂X_J` at a reference point.
pub(crate) fn shape_gradients(rect: &Rect, xi: [f64; 2]) -> [[f64; 2]; 4] {
    NODE_XI.map(|[xa, ya]| {
        [0.25 * xa * (1.0 + ya * xi[1]) * 2.0 / rect.dx, 0.25 * ya * (1.0 + xa * xi[0]) * 2.0 / rect.dy]
    })
}

pub(crate) fn shape_values(xi: [f64; 2]) -> [f64; 4] {
    NODE_XI.map(|[xa, ya]| 0.25 * (1.0 + xa * xi[0]) * (1.0 + ya * xi[1]))
}

/// Plane-strain deformation gradient from element displacements `[u₀ₓ, u₀ᵧ, u₁ₓ, …]`.
pub(crate) fn deformation_gradient(grads: &[[f64; 2]; 4], u_e: &[f64; 8]) -> Tensor2 {
    let mut f = Tensor2::identity();
    for a in 0..4 {
        for i in 0..2 {
            for j in 0..2 {
                f[(i, j)] += u_e[2 * a + i] * grads[a][j];
            }
        }
    }
    f
}

fn von_mises(p: &Tensor2, f: &Tensor2, small_strain: bool) -> f64 {
    let sigma = if small_strain { *p } else { p * f.transpose() / f.determinant() };
    let s = deviator(&crate::tensor::sym(&sigma));
    (1.5 * s.norm_squared()).sqrt()
}

/// Internal force and tangent of one element.
///
/// `f_(a,i) = Σ_q w detJ P_iJ ∂N_a/∂X_J` and
/// `K_(a,i)(b,k) = Σ_q w detJ ∂N_a/∂X_J A_iJkL ∂N_b/∂X_L`.
pub fn element_force_and_stiffness(
    rect: &Rect,
    materials: &[PointMaterial; 4],
    phases: &[MaterialModel; 2],
    u_e: &[f64; 8],
    states_n: &[PointState; 4],
) -> Result<ElementOutput, Error> {
    let det_j = 0.25 * rect.dx * rect.dy;
    let mut f = SVector::<f64, 8>::zeros();
    let mut k = SMatrix::<f64, 8, 8>::zeros();
    let mut p_all = [Tensor2::zeros(); 4];
    let mut field = ElementField::default();
    let mut laminate_iterations = 0;
    let mut states: [PointState; 4] = [0, 1, 2, 3].map(|q| states_n[q].clone());

    for q in 0..4 {
        let grads = shape_gradients(rect, GAUSS_POINTS[q]);
        let fq = deformation_gradient(&grads, u_e);
        let at = |e: Error| Error::AtPoint { element: usize::MAX, point: q, source: Box::new(e) };
        let (p, tangent, gamma, small) = match (&materials[q], &states_n[q]) {
            (PointMaterial::Phase(ph), PointState::Pure(h_n)) => {
                let model = &phases[ph.index()];
                let r = model.state_update(&fq, h_n).map_err(at)?;
                states[q] = PointState::Pure(r.h);
                (r.p, r.tangent, r.h.gamma(), model.is_small_strain())
            }
            (PointMaterial::Laminate { eta, normal }, PointState::Laminate(s_n)) => {
                let cfg = LaminateConfig { eta: *eta, normal: *normal, phase1: phases[0], phase2: phases[1] };
                let r = laminate::respond(&fq, &cfg, s_n).map_err(at)?;
                laminate_iterations = laminate_iterations.max(r.iterations);
                let gamma = (1.0 - eta) * r.state.h1.gamma() + eta * r.state.h2.gamma();
                states[q] = PointState::Laminate(Box::new(r.state));
                (r.p, r.tangent, gamma, phases[0].is_small_strain() && phases[1].is_small_strain())
            }
            _ => return Err(Error::InvalidParameter("point state does not match its material".into())),
        };
        if !p.iter().all(|v| v.is_finite()) || !tangent.is_finite() {
            return Err(at(Error::NonPositiveJacobian(fq.determinant())));
        }

        for a in 0..4 {
            for i in 0..2 {
                f[2 * a + i] += det_j * (p[(i, 0)] * grads[a][0] + p[(i, 1)] * grads[a][1]);
            }
        }
        let m = tangent.as_matrix();
        for a in 0..4 {
            for i in 0..2 {
                for b in 0..4 {
                    for kk in 0..2 {
                        let mut s = 0.0;
                        for jj in 0..2 {
                            for ll in 0..2 {
                                s += grads[a][jj] * m[(3 * i + jj, 3 * kk + ll)] * grads[b][ll];
                            }
                        }
                        k[(2 * a + i, 2 * b + kk)] += det_j * s;
                    }
                }
            }
        }

        p_all[q] = p;
        field.p_mean += p * 0.25;
        field.von_mises += 0.25 * von_mises(&p, &fq, small);
        field.gamma += 0.25 * gamma;
    }
    Ok(ElementOutput { f, k, states, p: p_all, field, laminate_iterations })
}
