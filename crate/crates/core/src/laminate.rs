//! Two-phase simple laminate at a single material point.
//!
//! The phase deformation gradients are parametrised by the macroscopic
//! gradient `F̄` and the interface vector `c`:
//!
//! ```text
//! F₁ = F̄ − η c⊗N,   F₂ = F̄ + (1 − η) c⊗N
//! ```
//!
//! so that `(1 − η)F₁ + ηF₂ = F̄` and `F₂ − F₁ = c⊗N` hold by construction.
//! `c` is found by Newton iteration on the traction jump `R = (P₂ − P₁)N`, with
//! each phase running its own incremental state update from the committed
//! history. The consistent tangent accounts for `dc/dF̄ = −B⁻¹ ∂R/∂F̄|_c`, where
//! `B = ∂R/∂c` is built from the algorithmic phase tangents.

use nalgebra::{Matrix3, SMatrix};

use crate::materials::{History, MaterialModel, StateUpdateResult};
use crate::tensor::{dyad, Matrix9, Tensor2, Tensor4, Vector3};
use crate::Error;

/// Relative tolerance on the traction jump.
pub const INTERFACE_TOL: f64 = 1e-10;
pub const INTERFACE_MAX_ITER: usize = 30;
pub const MAX_BACKTRACK: usize = 10;
/// Volume fractions closer than this to 0 or 1 fall back to the single-phase response.
pub const ETA_SNAP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaminateConfig {
    /// Volume fraction of phase 2.
    pub eta: f64,
    /// Unit lamination normal in the reference configuration, pointing from phase 1 into phase 2.
    pub normal: Vector3,
    pub phase1: MaterialModel,
    pub phase2: MaterialModel,
}

impl LaminateConfig {
    pub fn new(eta: f64, normal: Vector3, phase1: MaterialModel, phase2: MaterialModel) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!("volume fraction {eta} outside [0, 1]")));
        }
        let n = normal.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter("lamination normal must be nonzero".into()));
        }
        Ok(Self { eta, normal: normal / n, phase1, phase2 })
    }

    fn degenerate_phase(&self) -> Option<u8> {
        if self.eta < ETA_SNAP {
            Some(1)
        } else if self.eta > 1.0 - ETA_SNAP {
            Some(2)
        } else {
            None
        }
    }

    fn stress_scale(&self) -> f64 {
        self.phase1.stress_scale().max(self.phase2.stress_scale())
    }
}

/// Per-point laminate state carried between load steps.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct LaminateState {
    pub c: Vector3,
    pub h1: History,
    pub h2: History,
}

impl LaminateState {
    pub fn virgin() -> Self {
        Self::default()
    }
}

/// Converged interface solution with the phase responses at that point.
#[derive(Clone, Debug)]
pub struct InterfaceSolution {
    pub state: LaminateState,
    pub f1: Tensor2,
    pub f2: Tensor2,
    pub phase1: StateUpdateResult,
    pub phase2: StateUpdateResult,
    /// `‖R‖` at every Newton iterate, starting with the initial guess.
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LaminateResponse {
    pub p: Tensor2,
    pub tangent: Tensor4,
    pub state: LaminateState,
    pub energy: f64,
    pub f1: Tensor2,
    pub f2: Tensor2,
    pub p1: Tensor2,
    pub p2: Tensor2,
    pub iterations: usize,
}

pub fn local_gradients(f_bar: &Tensor2, c: &Vector3, cfg: &LaminateConfig) -> (Tensor2, Tensor2) {
    let jump = dyad(c, &cfg.normal);
    (f_bar - jump * cfg.eta, f_bar + jump * (1.0 - cfg.eta))
}

/// Traction jump `(P₂ − P₁)N` with both phases updated from their committed histories.
pub fn traction_residual(
    f_bar: &Tensor2,
    c: &Vector3,
    cfg: &LaminateConfig,
    state_n: &LaminateState,
) -> Result<Vector3, Error> {
    let (f1, f2) = local_gradients(f_bar, c, cfg);
    let r1 = cfg.phase1.state_update(&f1, &state_n.h1)?;
    let r2 = cfg.phase2.state_update(&f2, &state_n.h2)?;
    Ok((r2.p - r1.p) * cfg.normal)
}

/// `Q(A, N)_ik = A_iJkL N_J N_L`
fn acoustic(a: &Tensor4, n: &Vector3) -> Matrix3<f64> {
    Matrix3::from_fn(|i, k| {
        let mut s = 0.0;
        for j in 0..3 {
            for l in 0..3 {
                s += a.get(i, j, k, l) * n[j] * n[l];
            }
        }
        s
    })
}

struct Trial {
    f1: Tensor2,
    f2: Tensor2,
    r1: StateUpdateResult,
    r2: StateUpdateResult,
    residual: Vector3,
}

fn evaluate(f_bar: &Tensor2, c: &Vector3, cfg: &LaminateConfig, state_n: &LaminateState) -> Result<Trial, Error> {
    let (f1, f2) = local_gradients(f_bar, c, cfg);
    let r1 = cfg.phase1.state_update(&f1, &state_n.h1)?;
    let r2 = cfg.phase2.state_update(&f2, &state_n.h2)?;
    let residual = (r2.p - r1.p) * cfg.normal;
    Ok(Trial { f1, f2, r1, r2, residual })
}

fn converged(t: &Trial, scale: f64) -> bool {
    let r = t.residual.norm();
    r <= INTERFACE_TOL * t.r1.p.norm().max(t.r2.p.norm()) || r <= 1e-15 * scale
}

/// `B = ∂R/∂c = (1 − η) Q(A₂, N) + η Q(A₁, N)`.
pub fn interface_jacobian(a1: &Tensor4, a2: &Tensor4, cfg: &LaminateConfig) -> Matrix3<f64> {
    acoustic(a2, &cfg.normal) * (1.0 - cfg.eta) + acoustic(a1, &cfg.normal) * cfg.eta
}

/// Newton iteration for the interface vector, warm-started from `state_n.c`.
pub fn solve_c(f_bar: &Tensor2, cfg: &LaminateConfig, state_n: &LaminateState) -> Result<InterfaceSolution, Error> {
    let scale = cfg.stress_scale();
    let mut c = state_n.c;
    let mut trial = evaluate(f_bar, &c, cfg, state_n)?;
    let mut residuals = vec![trial.residual.norm()];
    let mut iter = 0;
    while !converged(&trial, scale) {
        if iter == INTERFACE_MAX_ITER {
            return Err(Error::InterfaceDivergence(trial.residual.norm()));
        }
        iter += 1;
        let b = interface_jacobian(&trial.r1.tangent, &trial.r2.tangent, cfg);
        let dc = b
            .lu()
            .solve(&(-trial.residual))
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or(Error::SingularAcousticTensor)?;

        let r0 = trial.residual.norm();
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACK {
            let c_try = c + dc * step;
            if let Ok(t) = evaluate(f_bar, &c_try, cfg, state_n) {
                if t.residual.norm() < r0 || converged(&t, scale) {
                    accepted = Some((c_try, t));
                    break;
                }
            }
            step *= 0.5;
        }
        let (c_new, t) = accepted.ok_or(Error::InterfaceDivergence(r0))?;
        c = c_new;
        trial = t;
        residuals.push(trial.residual.norm());
    }
    Ok(InterfaceSolution {
        state: LaminateState { c, h1: trial.r1.h, h2: trial.r2.h },
        f1: trial.f1,
        f2: trial.f2,
        phase1: trial.r1,
        phase2: trial.r2,
        residuals,
    })
}

/// Full incremental laminate response: stress, consistent tangent, updated state and energy.
pub fn respond(f_bar: &Tensor2, cfg: &LaminateConfig, state_n: &LaminateState) -> Result<LaminateResponse, Error> {
    if let Some(phase) = cfg.degenerate_phase() {
        let (model, h_n) = if phase == 1 { (&cfg.phase1, &state_n.h1) } else { (&cfg.phase2, &state_n.h2) };
        let r = model.state_update(f_bar, h_n)?;
        let energy = model.energy(f_bar, &r.h)?;
        let mut state = *state_n;
        if phase == 1 {
            state.h1 = r.h;
        } else {
            state.h2 = r.h;
        }
        return Ok(LaminateResponse {
            p: r.p,
            tangent: r.tangent,
            state,
            energy,
            f1: *f_bar,
            f2: *f_bar,
            p1: r.p,
            p2: r.p,
            iterations: 0,
        });
    }

    let sol = solve_c(f_bar, cfg, state_n)?;
    let eta = cfg.eta;
    let (a1, a2) = (&sol.phase1.tangent, &sol.phase2.tangent);
    let b = interface_jacobian(a1, a2, cfg);
    let tangent = condensed_tangent(a1, a2, &b, cfg)?;
    let p = sol.phase1.p * (1.0 - eta) + sol.phase2.p * eta;
    let energy =
        (1.0 - eta) * cfg.phase1.energy(&sol.f1, &sol.state.h1)? + eta * cfg.phase2.energy(&sol.f2, &sol.state.h2)?;
    Ok(LaminateResponse {
        p,
        tangent,
        state: sol.state,
        energy,
        f1: sol.f1,
        f2: sol.f2,
        p1: sol.phase1.p,
        p2: sol.phase2.p,
        iterations: sol.residuals.len() - 1,
    })
}

/// `L̄ = (1−η)A₁ + ηA₂ + η(1−η) M D`, with `M_(iJ),p = ΔA_iJpQ N_Q` and
/// `D = −B⁻¹ ∂R/∂F̄`, `∂R_m/∂F̄_kL = ΔA_mJkL N_J`.
fn condensed_tangent(a1: &Tensor4, a2: &Tensor4, b: &Matrix3<f64>, cfg: &LaminateConfig) -> Result<Tensor4, Error> {
    let eta = cfg.eta;
    let n = &cfg.normal;
    let diff = *a2 - *a1;
    let m = SMatrix::<f64, 9, 3>::from_fn(|row, p| (0..3).map(|q| diff.as_matrix()[(row, 3 * p + q)] * n[q]).sum());
    let dr = SMatrix::<f64, 3, 9>::from_fn(|mi, col| (0..3).map(|j| diff.as_matrix()[(3 * mi + j, col)] * n[j]).sum());
    let d = -b.lu().solve(&dr).ok_or(Error::SingularAcousticTensor)?;
    let avg: Matrix9 = a1.as_matrix() * (1.0 - eta) + a2.as_matrix() * eta;
    Ok(Tensor4::from_matrix(avg + m * d * (eta * (1.0 - eta))))
}

/// Small-strain laminate of two linear elastic phases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallStrainResponse {
    pub sigma: Tensor2,
    pub tangent: Tensor4,
    pub c: Vector3,
}

/// Closed-form small-strain laminate: one 3x3 linear solve for `c` from
/// `(σ₂ − σ₁)n = 0` with `ε₂ − ε₁ = sym(c⊗n)`.
pub fn respond_small_strain(strain: &Tensor2, cfg: &LaminateConfig) -> Result<SmallStrainResponse, Error> {
    let (m1, m2) = match (&cfg.phase1, &cfg.phase2) {
        (MaterialModel::LinearElastic(a), MaterialModel::LinearElastic(b)) => (a, b),
        _ => return Err(Error::InvalidParameter("small-strain laminate requires linear elastic phases".into())),
    };
    let (c1, c2) = (m1.stiffness(), m2.stiffness());
    if let Some(phase) = cfg.degenerate_phase() {
        let (m, c) = if phase == 1 { (m1, c1) } else { (m2, c2) };
        return Ok(SmallStrainResponse { sigma: m.small_strain_stress(strain), tangent: c, c: Vector3::zeros() });
    }
    let eta = cfg.eta;
    let n = &cfg.normal;
    let k = interface_jacobian(&c1, &c2, cfg);
    if k.determinant().abs() <= 1e-14 * k.norm().powi(3) {
        return Err(Error::SingularAcousticTensor);
    }
    let rhs = -(m2.small_strain_stress(strain) - m1.small_strain_stress(strain)) * n;
    let c = k.lu().solve(&rhs).ok_or(Error::SingularAcousticTensor)?;
    let jump = crate::tensor::sym(&dyad(&c, n));
    let s1 = m1.small_strain_stress(&(strain - jump * eta));
    let s2 = m2.small_strain_stress(&(strain + jump * (1.0 - eta)));
    let tangent = condensed_tangent(&c1, &c2, &k, cfg)?;
    Ok(SmallStrainResponse { sigma: s1 * (1.0 - eta) + s2 * eta, tangent, c })
}

/// `W̄(F̄, c) = (1 − η)W₁(F₁) + ηW₂(F₂)` at the given histories.
pub fn laminate_energy(
    f_bar: &Tensor2,
    c: &Vector3,
    cfg: &LaminateConfig,
    state: &LaminateState,
) -> Result<f64, Error> {
    let (f1, f2) = local_gradients(f_bar, c, cfg);
    Ok((1.0 - cfg.eta) * cfg.phase1.energy(&f1, &state.h1)? + cfg.eta * cfg.phase2.energy(&f2, &state.h2)?)
}

/// Discrepancy between the finite-difference gradient `∂W̄/∂c` and
/// `η(1 − η)(P₂ − P₁)N` for hyperelastic phases.
pub fn stationarity_check(f_bar: &Tensor2, c: &Vector3, cfg: &LaminateConfig) -> Result<Vector3, Error> {
    let state = LaminateState::virgin();
    let step = 1e-6;
    let mut fd = Vector3::zeros();
    for k in 0..3 {
        let mut cp = *c;
        let mut cm = *c;
        cp[k] += step;
        cm[k] -= step;
        fd[k] = (laminate_energy(f_bar, &cp, cfg, &state)? - laminate_energy(f_bar, &cm, cfg, &state)?) / (2.0 * step);
    }
    let (f1, f2) = local_gradients(f_bar, c, cfg);
    let p1 = cfg.phase1.piola_stress(&f1, &state.h1)?;
    let p2 = cfg.phase2.piola_stress(&f2, &state.h2)?;
    Ok(fd - (p2 - p1) * cfg.normal * (cfg.eta * (1.0 - cfg.eta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{J2Plastic, LinearElastic, NeoHookean};
    use approx::assert_relative_eq;

    fn neo(mu: f64, lambda: f64) -> MaterialModel {
        NeoHookean::new(mu, lambda).unwrap().into()
    }

    fn reference_case() -> (Tensor2, LaminateConfig) {
        let f = Tensor2::identity() + dyad(&Vector3::x(), &Vector3::x()) * 0.1;
        let cfg = LaminateConfig::new(0.5, Vector3::x(), neo(1.0, 1.0), neo(10.0, 10.0)).unwrap();
        (f, cfg)
    }

    #[test]
    fn local_gradient_identities() {
        let (f, cfg) = reference_case();
        let (f1, f2) = local_gradients(&f, &Vector3::zeros(), &cfg);
        assert_eq!(f1, f);
        assert_eq!(f2, f);
        let c = Vector3::new(0.3, -0.2, 0.05);
        let cfg0 = LaminateConfig { eta: 0.0, ..cfg };
        let (f1, f2) = local_gradients(&f, &c, &cfg0);
        assert_eq!(f1, f);
        assert_eq!(f2, f + dyad(&c, &cfg.normal));
        let cfg3 = LaminateConfig { eta: 0.3, normal: Vector3::new(0.6, 0.8, 0.0), ..cfg };
        let (f1, f2) = local_gradients(&f, &c, &cfg3);
        assert!((f1 * 0.7 + f2 * 0.3 - f).amax() < 1e-15);
        assert!((f2 - f1 - dyad(&c, &cfg3.normal)).amax() < 1e-15);
    }

    #[test]
    fn residual_vanishes_for_identical_phases() {
        let cfg = LaminateConfig::new(0.4, Vector3::y(), neo(2.0, 3.0), neo(2.0, 3.0)).unwrap();
        let f = Tensor2::identity() + Tensor2::new(0.1, 0.05, 0.0, -0.02, 0.03, 0.0, 0.0, 0.0, 0.0);
        let r = traction_residual(&f, &Vector3::zeros(), &cfg, &LaminateState::virgin()).unwrap();
        assert_eq!(r, Vector3::zeros());
        let sol = solve_c(&f, &cfg, &LaminateState::virgin()).unwrap();
        assert_eq!(sol.state.c, Vector3::zeros());
        assert_eq!(sol.residuals.len(), 1);
    }

    #[test]
    fn residual_nonzero_for_mismatched_phases_under_shear() {
        let cfg = LaminateConfig::new(0.5, Vector3::x(), neo(1.0, 1.0), neo(5.0, 1.0)).unwrap();
        let f = Tensor2::identity() + dyad(&Vector3::y(), &Vector3::x()) * 0.1;
        let r = traction_residual(&f, &Vector3::zeros(), &cfg, &LaminateState::virgin()).unwrap();
        assert!(r.norm() > 1e-3);
    }

    /// Gradient descent on W̄(c) with a central-difference gradient.
    fn minimize_energy(f: &Tensor2, cfg: &LaminateConfig) -> Vector3 {
        let s = LaminateState::virgin();
        let w = |c: &Vector3| laminate_energy(f, c, cfg, &s).unwrap();
        let grad = |c: &Vector3| {
            let h = 1e-5;
            Vector3::from_fn(|k, _| {
                let mut cp = *c;
                let mut cm = *c;
                cp[k] += h;
                cm[k] -= h;
                (w(&cp) - w(&cm)) / (2.0 * h)
            })
        };
        let mut c = Vector3::zeros();
        let mut rate = 0.5;
        for _ in 0..20000 {
            let g = grad(&c);
            if g.norm() < 1e-13 {
                break;
            }
            let next = c - g * rate;
            if w(&next) < w(&c) {
                c = next;
                rate *= 1.1;
            } else {
                rate *= 0.5;
            }
        }
        c
    }

    #[test]
    fn interface_vector_minimizes_laminate_energy() {
        let (f, cfg) = reference_case();
        let sol = solve_c(&f, &cfg, &LaminateState::virgin()).unwrap();
        let oracle = minimize_energy(&f, &cfg);
        assert!((sol.state.c - oracle).norm() < 1e-8, "{} vs {}", sol.state.c, oracle);
    }

    #[test]
    fn interface_newton_converges_quadratically() {
        let (f, cfg) = reference_case();
        let sol = solve_c(&f, &cfg, &LaminateState::virgin()).unwrap();
        let r = &sol.residuals;
        assert!(r.len() >= 4, "{r:?}");
        let tail: Vec<f64> = r.iter().copied().filter(|v| *v > 1e-12 * r[0]).collect();
        let n = tail.len();
        assert!(n >= 3, "{r:?}");
        for k in n - 3..n - 1 {
            assert!(tail[k + 1] <= 10.0 * tail[k] * tail[k], "{r:?}");
        }
    }

    #[test]
    fn unit_volume_fraction_reduces_to_phase_two() {
        let (f, cfg) = reference_case();
        let cfg1 = LaminateConfig { eta: 1.0, ..cfg };
        let r = respond(&f, &cfg1, &LaminateState::virgin()).unwrap();
        let p2 = cfg.phase2.state_update(&f, &History::virgin()).unwrap();
        assert_eq!(r.p, p2.p);
        assert_eq!(r.tangent, p2.tangent);
    }

    fn fd_tangent(f: &Tensor2, cfg: &LaminateConfig, state_n: &LaminateState, step: f64) -> Matrix9 {
        let mut m = Matrix9::zeros();
        for col in 0..9 {
            let mut fp = *f;
            let mut fm = *f;
            fp[(col / 3, col % 3)] += step;
            fm[(col / 3, col % 3)] -= step;
            let pp = respond(&fp, cfg, state_n).unwrap().p;
            let pm = respond(&fm, cfg, state_n).unwrap().p;
            let d = (pp - pm) / (2.0 * step);
            for r in 0..9 {
                m[(r, col)] = d[(r / 3, r % 3)];
            }
        }
        m
    }

    #[test]
    fn hyperelastic_tangent_matches_differences() {
        let (f, cfg) = reference_case();
        let r = respond(&f, &cfg, &LaminateState::virgin()).unwrap();
        let fd = fd_tangent(&f, &cfg, &LaminateState::virgin(), 1e-6);
        let err = (fd - r.tangent.as_matrix()).norm() / r.tangent.norm();
        assert!(err < 1e-6, "{err}");
        // energy-derived tangent is symmetric
        let m = r.tangent.as_matrix();
        assert!((m - m.transpose()).norm() < 1e-10 * m.norm());
    }

    #[test]
    fn elastoplastic_tangent_matches_incremental_differences() {
        let p1: MaterialModel = J2Plastic::new(80.0, 120.0, 0.3, 1.0).unwrap().into();
        let p2 = neo(240.0, 360.0);
        let cfg = LaminateConfig::new(0.35, Vector3::new(0.8, 0.6, 0.0), p1, p2).unwrap();
        let f = Tensor2::identity() + Tensor2::new(0.02, 0.006, 0.0, -0.004, -0.008, 0.0, 0.0, 0.0, 0.0);
        let state_n = LaminateState::virgin();
        let r = respond(&f, &cfg, &state_n).unwrap();
        assert!(r.state.h1.gamma() > 0.0);
        let fd = fd_tangent(&f, &cfg, &state_n, 1e-7);
        let err = (fd - r.tangent.as_matrix()).norm() / r.tangent.norm();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn stationarity_identity() {
        let (f, cfg) = reference_case();
        let c = Vector3::new(0.02, -0.01, 0.005);
        let d = stationarity_check(&f, &c, &cfg).unwrap();
        assert!(d.norm() < 1e-7);
        // at the solution both terms vanish
        let sol = solve_c(&f, &cfg, &LaminateState::virgin()).unwrap();
        let r = traction_residual(&f, &sol.state.c, &cfg, &LaminateState::virgin()).unwrap();
        assert!(r.norm() < 1e-10);
        assert!(stationarity_check(&f, &sol.state.c, &cfg).unwrap().norm() < 1e-7);
    }

    #[test]
    fn stationarity_prefactor_scales_with_volume_fraction() {
        let (f, cfg) = reference_case();
        let c = Vector3::new(0.02, -0.01, 0.0);
        let term = |eta: f64| {
            let cfg = LaminateConfig { eta, ..cfg };
            let (f1, f2) = local_gradients(&f, &c, &cfg);
            let p1 = cfg.phase1.piola_stress(&f1, &History::virgin()).unwrap();
            let p2 = cfg.phase2.piola_stress(&f2, &History::virgin()).unwrap();
            (p2 - p1) * cfg.normal * (eta * (1.0 - eta))
        };
        // η(1−η) is 0.25 at η = 0.5 and 0.125 at η = (2 − √2)/4; the jump itself moves with η
        let eta_b = (2.0 - 2f64.sqrt()) / 4.0;
        assert_relative_eq!(eta_b * (1.0 - eta_b), 0.125, max_relative = 1e-14);
        let a = term(0.5);
        let cfg_b = LaminateConfig { eta: eta_b, ..cfg };
        let (f1, f2) = local_gradients(&f, &c, &cfg_b);
        let p1 = cfg.phase1.piola_stress(&f1, &History::virgin()).unwrap();
        let p2 = cfg.phase2.piola_stress(&f2, &History::virgin()).unwrap();
        let jump_b = (p2 - p1) * cfg.normal;
        let cfg_a = LaminateConfig { eta: 0.5, ..cfg };
        let (f1, f2) = local_gradients(&f, &c, &cfg_a);
        let jump_a = (cfg.phase2.piola_stress(&f2, &History::virgin()).unwrap()
            - cfg.phase1.piola_stress(&f1, &History::virgin()).unwrap())
            * cfg.normal;
        assert!((a - jump_a * 0.25).norm() < 1e-15);
        assert!((term(eta_b) - jump_b * 0.125).norm() < 1e-15);
    }

    fn elastic(e: f64, nu: f64) -> MaterialModel {
        LinearElastic::new(e, nu).unwrap().into()
    }

    #[test]
    fn small_strain_series_and_parallel_limits() {
        let cfg = LaminateConfig::new(0.5, Vector3::x(), elastic(1.0, 0.0), elastic(10.0, 0.0)).unwrap();
        let eps = Tensor2::from_diagonal(&Vector3::new(0.01, 0.0, 0.0));
        let r = respond_small_strain(&eps, &cfg).unwrap();
        // series (harmonic mean 20/11)
        assert_relative_eq!(r.sigma[(0, 0)], 0.01 * 20.0 / 11.0, max_relative = 1e-13);
        let eps = Tensor2::from_diagonal(&Vector3::new(0.0, 0.01, 0.0));
        let r = respond_small_strain(&eps, &cfg).unwrap();
        // parallel (arithmetic mean 5.5)
        assert_relative_eq!(r.sigma[(1, 1)], 0.055, max_relative = 1e-13);
    }

    #[test]
    fn small_strain_identical_phases() {
        let m = elastic(3.0, 0.2);
        let cfg = LaminateConfig::new(0.3, Vector3::new(0.6, 0.8, 0.0), m, m).unwrap();
        let eps = crate::tensor::sym(&Tensor2::new(0.01, 0.002, 0.0, 0.001, -0.004, 0.0, 0.0, 0.0, 0.0));
        let r = respond_small_strain(&eps, &cfg).unwrap();
        assert_eq!(r.c, Vector3::zeros());
        if let MaterialModel::LinearElastic(le) = m {
            assert!((r.sigma - le.small_strain_stress(&eps)).norm() < 1e-16);
        }
    }

    #[test]
    fn small_strain_route_agrees_with_general_route() {
        let e1 = LinearElastic::new(1.0, 0.3).unwrap();
        let e2 = LinearElastic::new(7.0, 0.2)
            .unwrap()
            .with_eigenstrain(crate::tensor::sym(&Tensor2::new(0.01, 0.003, 0.0, 0.0, -0.002, 0.0, 0.0, 0.0, 0.0)))
            .unwrap();
        let cfg = LaminateConfig::new(0.37, Vector3::new(0.6, -0.8, 0.0), e1.into(), e2.into()).unwrap();
        let h = Tensor2::new(0.004, 0.001, 0.0, -0.002, 0.003, 0.0, 0.0, 0.0, 0.0);
        let small = respond_small_strain(&crate::tensor::sym(&h), &cfg).unwrap();
        let general = respond(&(Tensor2::identity() + h), &cfg, &LaminateState::virgin()).unwrap();
        assert!((small.sigma - general.p).norm() < 1e-14);
        assert!((small.tangent.as_matrix() - general.tangent.as_matrix()).norm() < 1e-12);
    }

    #[test]
    fn small_strain_moduli_within_bounds() {
        // eigenvalues of the effective stiffness lie between the Reuss and Voigt estimates
        for eta in [0.1, 0.3, 0.5, 0.8] {
            let (m1, m2) = (LinearElastic::new(1.0, 0.25).unwrap(), LinearElastic::new(20.0, 0.25).unwrap());
            let cfg = LaminateConfig::new(eta, Vector3::new(0.6, 0.8, 0.0), m1.into(), m2.into()).unwrap();
            let r = respond_small_strain(&Tensor2::zeros(), &cfg).unwrap();
            let voigt = m1.stiffness() * (1.0 - eta) + m2.stiffness() * eta;
            let ev = |t: &Tensor4| {
                let mut e: Vec<f64> = t.as_matrix().symmetric_eigen().eigenvalues.iter().copied().collect();
                e.sort_by(f64::total_cmp);
                e
            };
            // isotropic phases with equal ν: Reuss stiffness is the harmonic mean of the moduli
            let reuss_scale = 1.0 / ((1.0 - eta) / 1.0 + eta / 20.0);
            let reuss = m1.stiffness() * reuss_scale;
            let (lo, mid, hi) = (ev(&reuss), ev(&r.tangent), ev(&voigt));
            for k in 0..9 {
                assert!(mid[k] >= lo[k] - 1e-12 && mid[k] <= hi[k] + 1e-12, "{eta} {k} {lo:?} {mid:?} {hi:?}");
            }
        }
    }

    #[test]
    fn singular_acoustic_tensor_is_reported() {
        let degenerate =
            MaterialModel::LinearElastic(LinearElastic { young: 0.0, poisson: 0.0, eigenstrain: Tensor2::zeros() });
        let cfg = LaminateConfig::new(0.5, Vector3::x(), degenerate, degenerate).unwrap();
        assert!(matches!(respond_small_strain(&Tensor2::zeros(), &cfg), Err(Error::SingularAcousticTensor)));
        let mixed = LaminateConfig::new(0.5, Vector3::x(), elastic(1.0, 0.3), neo(1.0, 1.0)).unwrap();
        assert!(matches!(respond_small_strain(&Tensor2::zeros(), &mixed), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn objectivity_of_hyperelastic_laminate() {
        let cfg = LaminateConfig::new(0.4, Vector3::new(0.6, 0.8, 0.0), neo(1.0, 2.0), neo(8.0, 4.0)).unwrap();
        let f = Tensor2::identity() + Tensor2::new(0.08, 0.03, 0.0, -0.05, 0.04, 0.0, 0.0, 0.0, 0.02);
        let p = respond(&f, &cfg, &LaminateState::virgin()).unwrap().p;
        for angles in [(0.3, 0.1, -0.7), (1.2, -0.4, 2.0), (-2.5, 0.9, 0.3)] {
            let q = nalgebra::Rotation3::from_euler_angles(angles.0, angles.1, angles.2).into_inner();
            let pq = respond(&(q * f), &cfg, &LaminateState::virgin()).unwrap().p;
            assert!((pq - q * p).norm() < 1e-10 * p.norm());
        }
    }

    #[test]
    fn small_volume_fraction_approaches_phase_one() {
        let (f, cfg) = reference_case();
        let p1 = cfg.phase1.piola_stress(&f, &History::virgin()).unwrap();
        let mut prev = f64::INFINITY;
        for eta in [1e-2, 1e-3, 1e-4] {
            let r = respond(&f, &LaminateConfig { eta, ..cfg }, &LaminateState::virgin()).unwrap();
            let err = (r.p - p1).norm();
            assert!(err < prev);
            assert!(err < 50.0 * eta * p1.norm(), "{eta} {err}");
            prev = err;
        }
    }
}
