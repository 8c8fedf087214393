//! Plane-strain Q1 finite elements on structured meshes.
//!
//! Cut elements are treated according to [`Method`]; pure elements behave the
//! same under all three methods. The global problem is solved with a Newton
//! scheme on the displacement, with load stepping and step halving.

use serde::{Deserialize, Serialize};

mod dofs;
pub(crate) mod element;
mod mesh;
pub mod output;
mod solver;

pub use dofs::{BoundaryCondition, DofMap};
pub use element::{
    element_force_and_stiffness, point_materials, ElementField, ElementOutput, PointMaterial, PointState, GAUSS_POINTS,
};
pub use mesh::{Edge, Mesh};
pub use solver::{
    assemble, newton_solve, ramp, run_load_steps, Assembly, NewtonLog, Problem, SolutionState, SolverOptions,
    StepRecord,
};

/// Treatment of elements cut by the interface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String")]
pub enum Method {
    /// Whole element takes the phase at its centroid.
    #[serde(rename = "ELA")]
    Ela,
    /// Each Gauss point takes the phase at its own location.
    #[serde(rename = "GPLA")]
    Gpla,
    /// Cut elements are two-phase laminates with the element's volume fraction and normal.
    #[serde(rename = "LET")]
    Let,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ela, Method::Gpla, Method::Let];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ela => "ELA",
            Method::Gpla => "GPLA",
            Method::Let => "LET",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl TryFrom<String> for Method {
    type Error = crate::Error;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ELA" => Ok(Method::Ela),
            "GPLA" => Ok(Method::Gpla),
            "LET" => Ok(Method::Let),
            _ => Err(crate::Error::Config(format!("method: unknown value `{s}` (expected ELA, GPLA or LET)"))),
        }
    }
}
