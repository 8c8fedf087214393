//! Finite-element treatment of two-phase material interfaces on non-conforming
//! structured meshes.
//!
//! Elements cut by an interface are replaced by an exact two-phase simple
//! laminate whose volume fraction and lamination normal come from the
//! level-set geometry inside the element (`Method::Let`). Element-level
//! (`Method::Ela`) and Gauss-point-level (`Method::Gpla`) phase assignment are
//! provided as baselines.
//!
//! Module map:
//!
//! - [`tensor`]: 3D tensor algebra, symmetric exponential, Voigt storage.
//! - [`materials`]: linear elastic, neo-Hookean and finite-strain J2 plasticity
//!   with the implicit state update and its sensitivity.
//! - [`laminate`]: micro-to-macro transition for a two-phase simple laminate.
//! - [`geometry`]: level sets and per-element classification.
//! - [`fem`]: Q1 plane-strain elements, assembly, boundary conditions, Newton.
//! - [`bench`]: run configuration, benchmark problems, convergence studies.

// `!(x > 0.0)` is deliberate: it rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod fem;
pub mod geometry;
pub mod laminate;
pub mod materials;
pub mod tensor;

pub use fem::Method;
pub use geometry::{ElementClass, LevelSet};
pub use laminate::{LaminateConfig, LaminateResponse, LaminateState};
pub use materials::{History, MaterialModel};
pub use tensor::{Tensor2, Tensor4, Vector3};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("tensor is singular")]
    SingularTensor,
    #[error("tensor is not symmetric")]
    NotSymmetric,
    #[error("non-positive Jacobian det(F) = {0:e}")]
    NonPositiveJacobian(f64),
    #[error("return mapping did not converge in {0} iterations")]
    LocalDivergence(usize),
    #[error("interface vector iteration did not converge (residual {0:e})")]
    InterfaceDivergence(f64),
    #[error("acoustic tensor of the laminate is singular")]
    SingularAcousticTensor,
    #[error("level-set gradient vanishes on a cut element")]
    DegenerateLevelSet,
    #[error("global Newton failed after step halving at load factor {0}")]
    GlobalDivergence(f64),
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),
    #[error("element {element}, Gauss point {point}: {source}")]
    AtPoint { element: usize, point: usize, source: Box<Error> },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("linear solver: {0}")]
    LinearSolver(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Strips element/point context.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            e => e,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
