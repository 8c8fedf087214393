//! Phase-level constitutive models.
//!
//! Every model is evaluated in terms of the deformation gradient `F` and a
//! fixed-size history vector. The finite-strain J2 model uses the
//! exponential-map return mapping written as a 7x7 residual system in the
//! unknowns `{Cp⁻¹ (6 comps, offset by identity), γ}`; derivatives of the
//! residual and of the stress are obtained by forward-mode automatic
//! differentiation on the same generic kernels that produce the values.

use nalgebra::{Matrix3, RealField, SMatrix, SVector};
use num_dual::DualSVec64;

use crate::tensor::{self, exp_series, sym_exp, Matrix9, Tensor2, Tensor4, VOIGT_PAIRS};
use crate::Error;

/// Convergence tolerance on `‖Δh‖` of the local Newton loop.
pub const LOCAL_TOL: f64 = 1e-12;
/// Iteration cap of the local Newton loop.
pub const LOCAL_MAX_ITER: usize = 50;

const N_HIST: usize = 7;
const N_ALL: usize = 16;

type Dual7 = DualSVec64<N_HIST>;
type Dual16 = DualSVec64<N_ALL>;

/// Isotropic small-strain elasticity with an optional eigenstrain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearElastic {
    pub young: f64,
    pub poisson: f64,
    pub eigenstrain: Tensor2,
}

impl LinearElastic {
    pub fn new(young: f64, poisson: f64) -> Result<Self, Error> {
        if !(young > 0.0) || !(poisson > -1.0 && poisson < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "linear elastic requires E > 0 and -1 < nu < 0.5, got E = {young}, nu = {poisson}"
            )));
        }
        Ok(Self { young, poisson, eigenstrain: Tensor2::zeros() })
    }

    pub fn with_eigenstrain(mut self, eigenstrain: Tensor2) -> Result<Self, Error> {
        if !tensor::is_symmetric(&eigenstrain, 1e-12) {
            return Err(Error::NotSymmetric);
        }
        self.eigenstrain = tensor::sym(&eigenstrain);
        Ok(self)
    }

    /// Lamé constants `(λ, μ)`.
    pub fn lame(&self) -> (f64, f64) {
        let (e, nu) = (self.young, self.poisson);
        (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
    }

    pub fn stiffness(&self) -> Tensor4 {
        let (lambda, mu) = self.lame();
        Tensor4::isotropic(lambda, mu)
    }

    /// `σ = λ tr(ε − ε*) I + 2μ (ε − ε*)`.
    pub fn small_strain_stress(&self, strain: &Tensor2) -> Tensor2 {
        let (lambda, mu) = self.lame();
        let e = tensor::sym(strain) - self.eigenstrain;
        Tensor2::identity() * (lambda * e.trace()) + e * (2.0 * mu)
    }
}

/// Compressible neo-Hookean solid,
/// `W = ½μ (I₁ − 3 − log I₃) + ¼λ (I₃ − 1 − log I₃)` with invariants of `b = F Fᵀ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeoHookean {
    pub mu: f64,
    pub lambda: f64,
}

impl NeoHookean {
    pub fn new(mu: f64, lambda: f64) -> Result<Self, Error> {
        if !(mu > 0.0) || !(lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "neo-Hookean requires mu > 0 and lambda >= 0, got mu = {mu}, lambda = {lambda}"
            )));
        }
        Ok(Self { mu, lambda })
    }
}

/// Yield stress as a function of the accumulated plastic multiplier γ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum YieldStress {
    /// `σ_y(γ) = σ₀ + H γ`
    Linear { sigma0: f64, modulus: f64 },
}

impl YieldStress {
    pub fn value<T: RealField + Copy>(&self, gamma: T) -> T {
        match *self {
            YieldStress::Linear { sigma0, modulus } => {
                gamma * nalgebra::convert::<f64, T>(modulus) + nalgebra::convert::<f64, T>(sigma0)
            }
        }
    }

    pub fn initial(&self) -> f64 {
        match *self {
            YieldStress::Linear { sigma0, .. } => sigma0,
        }
    }
}

/// Finite-strain J2 plasticity with isotropic hardening, neo-Hookean
/// elastic energy in terms of `b_e = F Cp⁻¹ Fᵀ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct J2Plastic {
    pub mu: f64,
    pub lambda: f64,
    pub yield_stress: YieldStress,
}

impl J2Plastic {
    pub fn new(mu: f64, lambda: f64, sigma0: f64, hardening: f64) -> Result<Self, Error> {
        if !(mu > 0.0) || !(lambda >= 0.0) || !(sigma0 > 0.0) || !(hardening >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "J2 plasticity requires mu > 0, lambda >= 0, sigma0 > 0, H >= 0; got {mu}, {lambda}, {sigma0}, {hardening}"
            )));
        }
        Ok(Self { mu, lambda, yield_stress: YieldStress::Linear { sigma0, modulus: hardening } })
    }

    /// Trial value of the yield function at frozen history `h_n`.
    pub fn trial_yield(&self, f: &Tensor2, h_n: &History) -> f64 {
        let h = h_n.0;
        yield_function(self, f, &h)
    }

    /// Residual of the time-discrete evolution equations,
    /// `{𝒵₁₁, 𝒵₂₂, 𝒵₃₃, 𝒵₂₃, 𝒵₁₃, 𝒵₁₂, φ}` with
    /// `𝒵 = F Cp⁻¹ − exp(−2(γ − γₙ) n) F Cp,n⁻¹`.
    pub fn local_residual(&self, f: &Tensor2, h: &History, h_n: &History) -> Result<[f64; 7], Error> {
        check_jacobian(f)?;
        Ok(residual(self, f, &h.0, h_n))
    }
}

/// Constitutive model of one phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaterialModel {
    LinearElastic(LinearElastic),
    NeoHookean(NeoHookean),
    J2Plastic(J2Plastic),
}

impl From<LinearElastic> for MaterialModel {
    fn from(m: LinearElastic) -> Self {
        MaterialModel::LinearElastic(m)
    }
}

impl From<NeoHookean> for MaterialModel {
    fn from(m: NeoHookean) -> Self {
        MaterialModel::NeoHookean(m)
    }
}

impl From<J2Plastic> for MaterialModel {
    fn from(m: J2Plastic) -> Self {
        MaterialModel::J2Plastic(m)
    }
}

/// History variables `{Cp⁻¹₁₁−1, Cp⁻¹₂₂−1, Cp⁻¹₃₃−1, Cp⁻¹₂₃, Cp⁻¹₁₃, Cp⁻¹₁₂, γ}`.
///
/// Elastic models carry the virgin (all-zero) vector and never modify it.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct History(pub [f64; 7]);

impl History {
    pub fn virgin() -> Self {
        History([0.0; 7])
    }

    pub fn from_parts(cp_inv: &Tensor2, gamma: f64) -> Self {
        let mut h = [0.0; 7];
        for (k, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
            h[k] = cp_inv[(i, j)] - if i == j { 1.0 } else { 0.0 };
        }
        h[6] = gamma;
        History(h)
    }

    pub fn cp_inv(&self) -> Tensor2 {
        cp_inv(&self.0)
    }

    pub fn gamma(&self) -> f64 {
        self.0[6]
    }
}

/// Output of [`MaterialModel::state_update`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateUpdateResult {
    pub h: History,
    /// Piola stress at the updated history.
    pub p: Tensor2,
    /// `G = ∂h/∂F`, rows follow the history layout, columns the row-major `F`.
    pub g: SMatrix<f64, 7, 9>,
    /// Algorithmic tangent `dP/dF = ∂P/∂F + ∂P/∂h G`.
    pub tangent: Tensor4,
    pub plastic: bool,
    pub iterations: usize,
}

impl MaterialModel {
    pub fn is_small_strain(&self) -> bool {
        matches!(self, MaterialModel::LinearElastic(_))
    }

    pub fn is_plastic(&self) -> bool {
        matches!(self, MaterialModel::J2Plastic(_))
    }

    /// Shear modulus; used as the stress scale of relative tolerances.
    pub fn stress_scale(&self) -> f64 {
        match self {
            MaterialModel::LinearElastic(m) => m.lame().1,
            MaterialModel::NeoHookean(m) => m.mu,
            MaterialModel::J2Plastic(m) => m.mu,
        }
    }

    pub fn energy(&self, f: &Tensor2, h: &History) -> Result<f64, Error> {
        if !self.is_small_strain() {
            check_jacobian(f)?;
        }
        Ok(energy(self, f, &h.0))
    }

    /// Piola stress `∂W/∂F` at frozen history.
    pub fn piola_stress(&self, f: &Tensor2, h: &History) -> Result<Tensor2, Error> {
        if !self.is_small_strain() {
            check_jacobian(f)?;
        }
        Ok(piola(self, f, &h.0))
    }

    /// Incremental state update from the converged history `h_n` at the given `F`.
    pub fn state_update(&self, f: &Tensor2, h_n: &History) -> Result<StateUpdateResult, Error> {
        match self {
            MaterialModel::LinearElastic(m) => Ok(StateUpdateResult {
                h: *h_n,
                p: m.small_strain_stress(&(f - Tensor2::identity())),
                g: SMatrix::zeros(),
                tangent: m.stiffness(),
                plastic: false,
                iterations: 0,
            }),
            MaterialModel::NeoHookean(_) => {
                check_jacobian(f)?;
                let (p, dpdf, _) = stress_derivatives(self, f, &h_n.0);
                Ok(StateUpdateResult {
                    h: *h_n,
                    p,
                    g: SMatrix::zeros(),
                    tangent: Tensor4::from_matrix(dpdf),
                    plastic: false,
                    iterations: 0,
                })
            }
            MaterialModel::J2Plastic(m) => {
                check_jacobian(f)?;
                j2_state_update(m, self, f, h_n)
            }
        }
    }
}

fn j2_state_update(
    m: &J2Plastic,
    model: &MaterialModel,
    f: &Tensor2,
    h_n: &History,
) -> Result<StateUpdateResult, Error> {
    if m.trial_yield(f, h_n) < 0.0 {
        let (p, dpdf, _) = stress_derivatives(model, f, &h_n.0);
        return Ok(StateUpdateResult {
            h: *h_n,
            p,
            g: SMatrix::zeros(),
            tangent: Tensor4::from_matrix(dpdf),
            plastic: false,
            iterations: 0,
        });
    }

    let fd: Matrix3<Dual7> = f.map(Dual7::from_re);
    let mut h = SVector::<f64, 7>::from(h_n.0);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < LOCAL_MAX_ITER {
        iterations += 1;
        let hd: [Dual7; 7] = std::array::from_fn(|k| Dual7::from_re(h[k]).derivative(k));
        let q = residual(m, &fd, &hd, h_n);
        let rhs = SVector::<f64, 7>::from_fn(|r, _| -q[r].re);
        let a = SMatrix::<f64, 7, 7>::from_fn(|r, c| deriv(&q[r])[c]);
        let dh = a.lu().solve(&rhs).ok_or(Error::LocalDivergence(iterations))?;
        if !dh.iter().all(|v| v.is_finite()) {
            return Err(Error::LocalDivergence(iterations));
        }
        h += dh;
        if dh.norm() <= LOCAL_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::LocalDivergence(iterations));
    }
    let h_arr: [f64; 7] = h.into();

    // ∂Q/∂h and ∂Q/∂F at the converged point
    let (fd, hd) = seed_all(f, &h_arr);
    let q = residual(m, &fd, &hd, h_n);
    let dq = SMatrix::<f64, 7, 16>::from_fn(|r, c| deriv(&q[r])[c]);
    let dq_dh: SMatrix<f64, 7, 7> = dq.fixed_columns::<7>(9).into();
    let dq_df: SMatrix<f64, 7, 9> = dq.fixed_columns::<9>(0).into();
    let lu = dq_dh.lu();
    let g = -lu.solve(&dq_df).ok_or(Error::LocalDivergence(iterations))?;

    let (p, dpdf, dpdh) = stress_derivatives(model, f, &h_arr);
    let tangent = dpdf + dpdh * g;
    Ok(StateUpdateResult { h: History(h_arr), p, g, tangent: Tensor4::from_matrix(tangent), plastic: true, iterations })
}

fn check_jacobian(f: &Tensor2) -> Result<(), Error> {
    let j = f.determinant();
    if j > 0.0 && j.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveJacobian(j))
    }
}

fn deriv<const N: usize>(v: &DualSVec64<N>) -> SVector<f64, N> {
    v.eps.0.unwrap_or_else(SVector::zeros)
}

fn seed_all(f: &Tensor2, h: &[f64; 7]) -> (Matrix3<Dual16>, [Dual16; 7]) {
    let fd = Matrix3::from_fn(|i, j| Dual16::from_re(f[(i, j)]).derivative(3 * i + j));
    let hd = std::array::from_fn(|k| Dual16::from_re(h[k]).derivative(9 + k));
    (fd, hd)
}

/// `(P, ∂P/∂F, ∂P/∂h)` at frozen history.
fn stress_derivatives(model: &MaterialModel, f: &Tensor2, h: &[f64; 7]) -> (Tensor2, Matrix9, SMatrix<f64, 9, 7>) {
    let (fd, hd) = seed_all(f, h);
    let p = piola(model, &fd, &hd);
    let value = p.map(|v| v.re);
    let mut dpdf = Matrix9::zeros();
    let mut dpdh = SMatrix::<f64, 9, 7>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let d = deriv(&p[(i, j)]);
            for c in 0..9 {
                dpdf[(3 * i + j, c)] = d[c];
            }
            for c in 0..7 {
                dpdh[(3 * i + j, c)] = d[9 + c];
            }
        }
    }
    (value, dpdf, dpdh)
}

/// Scalar type the constitutive kernels are generic over.
trait Scalar: RealField + Copy {
    fn exp_sym(a: &Matrix3<Self>) -> Matrix3<Self>;
}

impl Scalar for f64 {
    fn exp_sym(a: &Matrix3<f64>) -> Matrix3<f64> {
        sym_exp(&tensor::sym(a)).unwrap_or_else(|_| exp_series(a))
    }
}

impl<const N: usize> Scalar for DualSVec64<N> {
    fn exp_sym(a: &Matrix3<Self>) -> Matrix3<Self> {
        exp_series(a)
    }
}

#[inline]
fn k<T: Scalar>(x: f64) -> T {
    nalgebra::convert(x)
}

fn cp_inv<T: RealField + Copy>(h: &[T; 7]) -> Matrix3<T> {
    let one = T::one();
    Matrix3::new(
        h[0] + one,
        h[5],
        h[4], //
        h[5],
        h[1] + one,
        h[3], //
        h[4],
        h[3],
        h[2] + one,
    )
}

fn kirchhoff<T: Scalar>(mu: f64, lambda: f64, be: &Matrix3<T>) -> Matrix3<T> {
    let i3 = be.determinant();
    let id = Matrix3::<T>::identity();
    (be - id) * k::<T>(mu) + id * (k::<T>(0.5 * lambda) * (i3 - T::one()))
}

fn neo_energy<T: Scalar>(mu: f64, lambda: f64, be: &Matrix3<T>) -> T {
    let i1 = be.trace();
    let i3 = be.determinant();
    let l3 = i3.ln();
    k::<T>(0.5 * mu) * (i1 - k::<T>(3.0) - l3) + k::<T>(0.25 * lambda) * (i3 - T::one() - l3)
}

fn small_strain_parts<T: Scalar>(m: &LinearElastic, f: &Matrix3<T>) -> (Matrix3<T>, Matrix3<T>) {
    let (lambda, mu) = m.lame();
    let id = Matrix3::<T>::identity();
    let h = f - id;
    let eps = (h + h.transpose()) * k::<T>(0.5) - m.eigenstrain.map(k::<T>);
    let sigma = id * (eps.trace() * k::<T>(lambda)) + eps * k::<T>(2.0 * mu);
    (eps, sigma)
}

fn elastic_left_cg<T: Scalar>(model: &MaterialModel, f: &Matrix3<T>, h: &[T; 7]) -> Matrix3<T> {
    match model {
        MaterialModel::J2Plastic(_) => f * cp_inv(h) * f.transpose(),
        _ => f * f.transpose(),
    }
}

fn energy<T: Scalar>(model: &MaterialModel, f: &Matrix3<T>, h: &[T; 7]) -> T {
    match model {
        MaterialModel::LinearElastic(m) => {
            let (eps, sigma) = small_strain_parts(m, f);
            eps.component_mul(&sigma).sum() * k::<T>(0.5)
        }
        MaterialModel::NeoHookean(m) => neo_energy(m.mu, m.lambda, &elastic_left_cg(model, f, h)),
        MaterialModel::J2Plastic(m) => neo_energy(m.mu, m.lambda, &elastic_left_cg(model, f, h)),
    }
}

/// `P = τ F⁻ᵀ` for the finite-strain models, `P = σ(sym(F − I))` for linear elasticity.
fn piola<T: Scalar>(model: &MaterialModel, f: &Matrix3<T>, h: &[T; 7]) -> Matrix3<T> {
    let (mu, lambda) = match model {
        MaterialModel::LinearElastic(m) => return small_strain_parts(m, f).1,
        MaterialModel::NeoHookean(m) => (m.mu, m.lambda),
        MaterialModel::J2Plastic(m) => (m.mu, m.lambda),
    };
    let tau = kirchhoff(mu, lambda, &elastic_left_cg(model, f, h));
    let f_inv = f.try_inverse().unwrap_or_else(|| Matrix3::from_element(k::<T>(f64::NAN)));
    tau * f_inv.transpose()
}

fn deviatoric_kirchhoff<T: Scalar>(m: &J2Plastic, f: &Matrix3<T>, h: &[T; 7]) -> Matrix3<T> {
    let be = f * cp_inv(h) * f.transpose();
    let tau = kirchhoff(m.mu, m.lambda, &be);
    tau - Matrix3::identity() * (tau.trace() / k::<T>(3.0))
}

fn yield_function<T: Scalar>(m: &J2Plastic, f: &Matrix3<T>, h: &[T; 7]) -> T {
    let dev = deviatoric_kirchhoff(m, f, h);
    (dev.component_mul(&dev).sum() * k::<T>(1.5)).sqrt() - m.yield_stress.value(h[6])
}

fn residual<T: Scalar>(m: &J2Plastic, f: &Matrix3<T>, h: &[T; 7], h_n: &History) -> [T; 7] {
    let dev = deviatoric_kirchhoff(m, f, h);
    let dev_norm = dev.component_mul(&dev).sum().sqrt();
    let phi = dev_norm * k::<T>(1.5f64.sqrt()) - m.yield_stress.value(h[6]);
    let hn: [T; 7] = h_n.0.map(k::<T>);
    let dgamma = h[6] - hn[6];
    let z = if dev_norm > T::zero() {
        // flow direction n = ∂φ/∂τ = √(3/2) τ′/‖τ′‖
        let n = dev * (k::<T>(1.5f64.sqrt()) / dev_norm);
        let e = T::exp_sym(&(n * (k::<T>(-2.0) * dgamma)));
        f * cp_inv(h) - e * f * cp_inv(&hn)
    } else {
        f * cp_inv(h) - f * cp_inv(&hn)
    };
    let mut q = [T::zero(); 7];
    for (slot, &(i, j)) in q.iter_mut().zip(VOIGT_PAIRS.iter()) {
        *slot = z[(i, j)];
    }
    q[6] = phi;
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_f(rng: &mut ChaCha8Rng, s: f64) -> Tensor2 {
        Tensor2::identity() + Tensor2::from_fn(|_, _| rng.gen_range(-s..s))
    }

    fn steel_like() -> J2Plastic {
        J2Plastic::new(80.0, 120.0, 0.3, 1.0).unwrap()
    }

    fn uniaxial(stretch: f64) -> Tensor2 {
        let t = 1.0 / stretch.sqrt();
        Tensor2::from_diagonal(&crate::Vector3::new(stretch, t, t))
    }

    fn fd_stress(model: &MaterialModel, f: &Tensor2, h: &History) -> Tensor2 {
        let step = 1e-6;
        Tensor2::from_fn(|i, j| {
            let mut fp = *f;
            let mut fm = *f;
            fp[(i, j)] += step;
            fm[(i, j)] -= step;
            (model.energy(&fp, h).unwrap() - model.energy(&fm, h).unwrap()) / (2.0 * step)
        })
    }

    #[test]
    fn neo_hookean_energy_values() {
        let m: MaterialModel = NeoHookean::new(1.0, 1.0).unwrap().into();
        assert_eq!(m.energy(&Tensor2::identity(), &History::virgin()).unwrap(), 0.0);
        let f = Tensor2::from_diagonal(&crate::Vector3::new(1.2, 1.0, 1.0));
        let (i1, i3) = (3.44f64, 1.44f64);
        let expect = 0.5 * (i1 - 3.0 - i3.ln()) + 0.25 * (i3 - 1.0 - i3.ln());
        assert_relative_eq!(m.energy(&f, &History::virgin()).unwrap(), expect, max_relative = 1e-14);
        assert_eq!(m.piola_stress(&Tensor2::identity(), &History::virgin()).unwrap(), Tensor2::zeros());
    }

    #[test]
    fn j2_with_identity_plastic_metric_matches_neo_hookean() {
        let j2: MaterialModel = steel_like().into();
        let neo: MaterialModel = NeoHookean::new(80.0, 120.0).unwrap().into();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let f = random_f(&mut rng, 0.2);
            let h = History::virgin();
            assert_relative_eq!(j2.energy(&f, &h).unwrap(), neo.energy(&f, &h).unwrap(), max_relative = 1e-14);
        }
    }

    #[test]
    fn piola_matches_energy_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let models: [MaterialModel; 3] = [
            NeoHookean::new(3.0, 5.0).unwrap().into(),
            steel_like().into(),
            LinearElastic::new(10.0, 0.3)
                .unwrap()
                .with_eigenstrain(tensor::sym(&Tensor2::from_fn(|i, j| 0.01 * (i + 2 * j) as f64)))
                .unwrap()
                .into(),
        ];
        for model in &models {
            for _ in 0..100 {
                let f = random_f(&mut rng, 0.15);
                let h = if model.is_plastic() {
                    let cp =
                        crate::tensor::sym_exp(&crate::tensor::deviator(&tensor::sym(&Tensor2::from_fn(|_, _| {
                            rng.gen_range(-0.05..0.05)
                        }))))
                        .unwrap();
                    History::from_parts(&cp, 0.01)
                } else {
                    History::virgin()
                };
                let p = model.piola_stress(&f, &h).unwrap();
                let fd = fd_stress(model, &f, &h);
                assert!((p - fd).norm() <= 1e-7 * p.norm().max(1e-3 * model.stress_scale()), "{model:?}");
            }
        }
    }

    #[test]
    fn frame_indifference() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m: MaterialModel = NeoHookean::new(2.0, 7.0).unwrap().into();
        let f = random_f(&mut rng, 0.3);
        let w = m.energy(&f, &History::virgin()).unwrap();
        for _ in 0..20 {
            let q = nalgebra::Rotation3::from_euler_angles(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-3.0..3.0),
            )
            .into_inner();
            assert!((m.energy(&(q * f), &History::virgin()).unwrap() - w).abs() < 1e-12);
        }
    }

    #[test]
    fn nonpositive_jacobian_is_rejected() {
        let m: MaterialModel = NeoHookean::new(1.0, 1.0).unwrap().into();
        let f = Tensor2::from_diagonal(&crate::Vector3::new(-1.0, 1.0, 1.0));
        assert!(matches!(m.energy(&f, &History::virgin()), Err(Error::NonPositiveJacobian(_))));
        assert!(matches!(m.state_update(&f, &History::virgin()), Err(Error::NonPositiveJacobian(_))));
    }

    #[test]
    fn small_strain_stress_cases() {
        let m = LinearElastic::new(1.0, 0.0).unwrap();
        assert_eq!(m.small_strain_stress(&Tensor2::zeros()), Tensor2::zeros());
        let e = Tensor2::from_diagonal(&crate::Vector3::new(0.01, 0.0, 0.0));
        assert_relative_eq!(m.small_strain_stress(&e), e, epsilon = 1e-16);
        let star = tensor::sym(&Tensor2::new(0.01, 0.02, 0.0, 0.0, -0.03, 0.0, 0.0, 0.0, 0.005));
        let m = LinearElastic::new(5.0, 0.25).unwrap().with_eigenstrain(star).unwrap();
        assert!(m.small_strain_stress(&star).norm() < 1e-16);
        let mm: MaterialModel = m.into();
        assert!(mm.piola_stress(&(Tensor2::identity() + star), &History::virgin()).unwrap().norm() < 1e-15);
    }

    #[test]
    fn trial_yield_values() {
        let m = steel_like();
        assert_relative_eq!(m.trial_yield(&Tensor2::identity(), &History::virgin()), -0.3);
        assert!(m.trial_yield(&uniaxial(1.0001), &History::virgin()) < 0.0);
        // direct evaluation of the yield chain for an isochoric stretch
        let f = uniaxial(1.1);
        let be = f * f.transpose();
        let i3: f64 = be.determinant();
        let tau = (be - Tensor2::identity()) * 80.0 + Tensor2::identity() * (60.0 * (i3 - 1.0));
        let dev = tau - Tensor2::identity() * (tau.trace() / 3.0);
        let expect = (1.5 * dev.norm_squared()).sqrt() - 0.3;
        let phi = m.trial_yield(&f, &History::virgin());
        assert!(phi > 0.0);
        assert_relative_eq!(phi, expect, max_relative = 1e-12);
    }

    #[test]
    fn residual_at_zero_increment() {
        let m = steel_like();
        let f = uniaxial(1.05);
        let q = m.local_residual(&f, &History::virgin(), &History::virgin()).unwrap();
        assert!(q[..6].iter().all(|v| v.abs() < 1e-15));
        assert_relative_eq!(q[6], m.trial_yield(&f, &History::virgin()), max_relative = 1e-14);
    }

    #[test]
    fn residual_shear_components_vanish_for_diagonal_loading() {
        let m = steel_like();
        let f = uniaxial(1.02);
        let h = History::from_parts(&Tensor2::from_diagonal(&crate::Vector3::new(0.98, 1.01, 1.01)), 0.004);
        let q = m.local_residual(&f, &h, &History::virgin()).unwrap();
        assert!(q[3].abs() < 1e-16 && q[4].abs() < 1e-16 && q[5].abs() < 1e-16);
    }

    #[test]
    fn elastic_branch_keeps_history() {
        let m: MaterialModel = J2Plastic::new(80.0, 120.0, 100.0, 0.0).unwrap().into();
        let h_n = History::from_parts(&Tensor2::identity(), 0.25);
        let f = uniaxial(1.01);
        let r = m.state_update(&f, &h_n).unwrap();
        assert!(!r.plastic);
        assert_eq!(r.h, h_n);
        assert_eq!(r.g, SMatrix::<f64, 7, 9>::zeros());
        assert_eq!(r.p, m.piola_stress(&f, &h_n).unwrap());
    }

    #[test]
    fn plastic_step_properties() {
        let mm = steel_like();
        let m: MaterialModel = mm.into();
        let f = uniaxial(1.03);
        let h_n = History::virgin();
        let r = m.state_update(&f, &h_n).unwrap();
        assert!(r.plastic);
        assert!(r.h.gamma() > 0.0);
        assert!((r.h.cp_inv().determinant() - 1.0).abs() < 1e-8);
        let q = mm.local_residual(&f, &r.h, &h_n).unwrap();
        let qn = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(qn <= 1e-12 * mm.mu, "{qn}");
        // stress is on the yield surface
        assert!(mm.trial_yield(&f, &r.h).abs() < 1e-10);
    }

    #[test]
    fn sensitivity_matches_resolved_differences() {
        let mm = steel_like();
        let m: MaterialModel = mm.into();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = uniaxial(1.02) + Tensor2::from_fn(|_, _| rng.gen_range(-0.01..0.01));
        let h_n = History::from_parts(&Tensor2::identity(), 0.0);
        let r = m.state_update(&f, &h_n).unwrap();
        assert!(r.plastic);
        let step = 1e-7;
        for c in 0..9 {
            let mut fp = f;
            let mut fm = f;
            fp[(c / 3, c % 3)] += step;
            fm[(c / 3, c % 3)] -= step;
            let hp = m.state_update(&fp, &h_n).unwrap().h.0;
            let hm = m.state_update(&fm, &h_n).unwrap().h.0;
            for row in 0..7 {
                let fd = (hp[row] - hm[row]) / (2.0 * step);
                let scale = r.g.row(row).amax().max(1e-3);
                assert!((fd - r.g[(row, c)]).abs() <= 1e-5 * scale, "G[{row},{c}] {fd} vs {}", r.g[(row, c)]);
            }
        }
    }

    #[test]
    fn algorithmic_tangent_matches_differences() {
        let m: MaterialModel = steel_like().into();
        let h_n = History::from_parts(&Tensor2::identity(), 0.01);
        let f = uniaxial(1.04) + Tensor2::new(0.0, 0.01, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let r = m.state_update(&f, &h_n).unwrap();
        assert!(r.plastic);
        let step = 1e-7;
        for c in 0..9 {
            let mut fp = f;
            let mut fm = f;
            fp[(c / 3, c % 3)] += step;
            fm[(c / 3, c % 3)] -= step;
            let pp = m.state_update(&fp, &h_n).unwrap().p;
            let pm = m.state_update(&fm, &h_n).unwrap().p;
            let col = (pp - pm) / (2.0 * step);
            for i in 0..3 {
                for j in 0..3 {
                    let a = r.tangent.get(i, j, c / 3, c % 3);
                    assert!((col[(i, j)] - a).abs() <= 1e-5 * r.tangent.norm(), "{c} {i}{j}");
                }
            }
        }
    }
}
