//! Dense 3D tensor algebra.
//!
//! Second-order tensors are plain `nalgebra::Matrix3<f64>` values. Fourth-order
//! tensors are stored in [`Tensor4`] with the flattened row-major index
//! `a = 3 i + j`, so that a tensor `L_ijkl` is the 9x9 matrix `M[(3i+j, 3k+l)]`.

use nalgebra::{Matrix3, RealField, SMatrix, SymmetricEigen};

use crate::Error;

pub type Tensor2 = Matrix3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;
pub type Matrix9 = SMatrix<f64, 9, 9>;

/// Voigt ordering used throughout: (11, 22, 33, 23, 13, 12).
pub const VOIGT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

/// Fourth-order tensor in 3D.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor4 {
    m: Matrix9,
}

impl Default for Tensor4 {
    fn default() -> Self {
        Self::zeros()
    }
}

impl Tensor4 {
    pub fn zeros() -> Self {
        Self { m: Matrix9::zeros() }
    }

    /// `I_ijkl = δ_ik δ_jl`, the identity on second-order tensors.
    pub fn identity() -> Self {
        Self { m: Matrix9::identity() }
    }

    pub fn from_matrix(m: Matrix9) -> Self {
        Self { m }
    }

    pub fn as_matrix(&self) -> &Matrix9 {
        &self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.m[(3 * i + j, 3 * k + l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.m[(3 * i + j, 3 * k + l)] = v;
    }

    /// Double contraction `L : A`, i.e. `(L:A)_ij = L_ijkl A_kl`.
    pub fn ddot(&self, a: &Tensor2) -> Tensor2 {
        let v = self.m * flatten(a);
        unflatten(&v)
    }

    /// Isotropic elasticity tensor `λ δ_ij δ_kl + μ (δ_ik δ_jl + δ_il δ_jk)`.
    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        let mut t = Self::zeros();
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let v = lambda * d(i, j) * d(k, l) + mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
                        t.set(i, j, k, l, v);
                    }
                }
            }
        }
        t
    }

    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|v| v.is_finite())
    }

    pub fn transpose_major(&self) -> Self {
        Self { m: self.m.transpose() }
    }
}

impl std::ops::Add for Tensor4 {
    type Output = Tensor4;
    fn add(self, rhs: Self) -> Self {
        Self { m: self.m + rhs.m }
    }
}

impl std::ops::Sub for Tensor4 {
    type Output = Tensor4;
    fn sub(self, rhs: Self) -> Self {
        Self { m: self.m - rhs.m }
    }
}

impl std::ops::Mul<f64> for Tensor4 {
    type Output = Tensor4;
    fn mul(self, rhs: f64) -> Self {
        Self { m: self.m * rhs }
    }
}

/// Row-major flattening of a second-order tensor.
pub fn flatten(a: &Tensor2) -> nalgebra::SVector<f64, 9> {
    nalgebra::SVector::<f64, 9>::from_fn(|r, _| a[(r / 3, r % 3)])
}

pub fn unflatten(v: &nalgebra::SVector<f64, 9>) -> Tensor2 {
    Tensor2::from_fn(|i, j| v[3 * i + j])
}

/// Symmetric tensor in Voigt storage, ordering (11, 22, 33, 23, 13, 12).
///
/// Components are stored raw (no factor 2 on the shear entries). The inner
/// product [`Voigt6::dot`] weights shear entries by 2 so that it equals the
/// full contraction `A : B` of the represented tensors.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Voigt6(pub [f64; 6]);

impl Voigt6 {
    pub fn from_symmetric(a: &Tensor2) -> Self {
        let mut v = [0.0; 6];
        for (slot, &(i, j)) in v.iter_mut().zip(VOIGT_PAIRS.iter()) {
            *slot = a[(i, j)];
        }
        Voigt6(v)
    }

    pub fn to_tensor(&self) -> Tensor2 {
        let mut a = Tensor2::zeros();
        for (&v, &(i, j)) in self.0.iter().zip(VOIGT_PAIRS.iter()) {
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
        a
    }

    pub fn dot(&self, other: &Voigt6) -> f64 {
        let a = &self.0;
        let b = &other.0;
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + 2.0 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5])
    }
}

pub fn det(a: &Tensor2) -> f64 {
    a.determinant()
}

pub fn inv(a: &Tensor2) -> Result<Tensor2, Error> {
    let n = a.norm();
    let d = a.determinant();
    if !(d.abs() > 1e-14 * n * n * n) {
        return Err(Error::SingularTensor);
    }
    a.try_inverse().ok_or(Error::SingularTensor)
}

/// Dyadic product `(a ⊗ b)_ij = a_i b_j`.
pub fn dyad(a: &Vector3, b: &Vector3) -> Tensor2 {
    a * b.transpose()
}

pub fn trace(a: &Tensor2) -> f64 {
    a.trace()
}

pub fn deviator(a: &Tensor2) -> Tensor2 {
    a - Tensor2::identity() * (a.trace() / 3.0)
}

pub fn sym(a: &Tensor2) -> Tensor2 {
    (a + a.transpose()) * 0.5
}

pub fn is_symmetric(a: &Tensor2, rel_tol: f64) -> bool {
    let scale = a.norm().max(1.0);
    (0..3).all(|i| (0..3).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= rel_tol * scale))
}

/// Exponential of a symmetric tensor.
///
/// Uses the spectral decomposition; falls back to scaled power series when two
/// eigenvalues are closer than `1e-6 ‖A‖`.
pub fn sym_exp(a: &Tensor2) -> Result<Tensor2, Error> {
    if !is_symmetric(a, 1e-12) {
        return Err(Error::NotSymmetric);
    }
    let a = sym(a);
    let scale = a.norm();
    let eig = SymmetricEigen::new(a);
    let l = eig.eigenvalues;
    let gap = (l[0] - l[1]).abs().min((l[1] - l[2]).abs()).min((l[0] - l[2]).abs());
    if gap <= 1e-6 * scale {
        return Ok(exp_series(&a));
    }
    let q = eig.eigenvectors;
    let d = Tensor2::from_diagonal(&l.map(f64::exp));
    Ok(sym(&(q * d * q.transpose())))
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// The series stops once the remainder bound drops below `1e-17`.
///
/// Generic over the scalar so that it can be evaluated on dual numbers.
pub fn exp_series<T: RealField + Copy>(a: &Matrix3<T>) -> Matrix3<T> {
    let quarter: T = nalgebra::convert(0.25);
    let half: T = nalgebra::convert(0.5);
    let mut x = *a;
    let mut squarings = 0;
    while x.norm() > quarter {
        x *= half;
        squarings += 1;
    }
    // `‖x‖ᵏ/k!` bounds the next omitted term and its derivative
    let r = x.norm();
    let tol: T = nalgebra::convert(1e-17);
    let mut bound = T::one();
    let mut term = Matrix3::<T>::identity();
    let mut sum = Matrix3::<T>::identity();
    for k in 1..=16 {
        let inv_k: T = nalgebra::convert(1.0 / k as f64);
        term = term * x * inv_k;
        sum += term;
        bound = bound * r * inv_k;
        if bound <= tol {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}
