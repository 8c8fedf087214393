use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fem::{BoundaryCondition, Edge, Mesh, Method, Problem, SolverOptions};
use crate::geometry::{LevelSet, SampledGrid, DEFAULT_SUBSAMPLES};
use crate::materials::{J2Plastic, LinearElastic, MaterialModel, NeoHookean};
use crate::tensor::Tensor2;
use crate::Error;

/// A single simulation, as read from a JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub method: Method,
    pub mesh: MeshSpec,
    /// `[x0, y0, x1, y1]`.
    #[serde(default = "unit_box")]
    pub domain: [f64; 4],
    pub level_set: LevelSetSpec,
    pub materials: MaterialsSpec,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub load: LoadSpec,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_n_sub")]
    pub n_sub: usize,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub reference: Option<ReferenceSpec>,
    #[serde(default = "yes")]
    pub write_vtk: bool,
}

fn default_name() -> String {
    "run".into()
}

fn unit_box() -> [f64; 4] {
    [0.0, 0.0, 1.0, 1.0]
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_n_sub() -> usize {
    DEFAULT_SUBSAMPLES
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevelSetSpec {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Plane {
        point: [f64; 2],
        normal: [f64; 2],
    },
    Union {
        items: Vec<LevelSetSpec>,
    },
    Intersection {
        items: Vec<LevelSetSpec>,
    },
    Complement {
        inner: Box<LevelSetSpec>,
    },
    /// Sampled values in a text file, relative paths resolved against the config file.
    Grid {
        file: PathBuf,
    },
}

impl LevelSetSpec {
    pub fn build(&self) -> Result<LevelSet, Error> {
        Ok(match self {
            LevelSetSpec::Circle { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::Config("level_set.radius: must be positive".into()));
                }
                LevelSet::circle(*center, *radius)
            }
            LevelSetSpec::Plane { point, normal } => {
                if normal[0] == 0.0 && normal[1] == 0.0 {
                    return Err(Error::Config("level_set.normal: must be nonzero".into()));
                }
                LevelSet::plane(*point, *normal)
            }
            LevelSetSpec::Union { items } | LevelSetSpec::Intersection { items } => {
                if items.is_empty() {
                    return Err(Error::Config("level_set.items: must not be empty".into()));
                }
                let built = items.iter().map(Self::build).collect::<Result<Vec<_>, _>>()?;
                if matches!(self, LevelSetSpec::Union { .. }) {
                    LevelSet::Union(built)
                } else {
                    LevelSet::Intersection(built)
                }
            }
            LevelSetSpec::Complement { inner } => inner.build()?.complement(),
            LevelSetSpec::Grid { file } => LevelSet::Sampled(SampledGrid::from_file(file)?),
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        match self {
            LevelSetSpec::Grid { file } if file.is_relative() => *file = base.join(&*file),
            LevelSetSpec::Union { items } | LevelSetSpec::Intersection { items } => {
                items.iter_mut().for_each(|i| i.resolve_paths(base))
            }
            LevelSetSpec::Complement { inner } => inner.resolve_paths(base),
            _ => {}
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsSpec {
    pub phase1: MaterialSpec,
    pub phase2: MaterialSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialSpec {
    LinearElastic {
        young: f64,
        poisson: f64,
        #[serde(default)]
        eigenstrain: Option<[[f64; 3]; 3]>,
    },
    NeoHookean {
        mu: f64,
        lambda: f64,
    },
    J2 {
        mu: f64,
        lambda: f64,
        sigma0: f64,
        hardening: f64,
    },
}

impl MaterialSpec {
    pub fn build(&self) -> Result<MaterialModel, Error> {
        Ok(match *self {
            MaterialSpec::LinearElastic { young, poisson, eigenstrain } => {
                let m = LinearElastic::new(young, poisson)?;
                match eigenstrain {
                    Some(e) => m.with_eigenstrain(Tensor2::from_fn(|i, j| e[i][j]))?.into(),
                    None => m.into(),
                }
            }
            MaterialSpec::NeoHookean { mu, lambda } => NeoHookean::new(mu, lambda)?.into(),
            MaterialSpec::J2 { mu, lambda, sigma0, hardening } => J2Plastic::new(mu, lambda, sigma0, hardening)?.into(),
        })
    }
}

impl MaterialsSpec {
    pub fn build(&self) -> Result<[MaterialModel; 2], Error> {
        let p1 = self.phase1.build().map_err(|e| Error::Config(format!("materials.phase1: {e}")))?;
        let p2 = self.phase2.build().map_err(|e| Error::Config(format!("materials.phase2: {e}")))?;
        Ok([p1, p2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    /// `u = λ H X` on the whole boundary.
    Affine { gradient: [[f64; 2]; 2] },
    /// Periodic fluctuations with macroscopic gradient `λ H`; the corner node at the origin is pinned.
    Periodic { gradient: [[f64; 2]; 2] },
    /// Left edge `u_x = 0`, bottom edge `u_y = 0`, right edge `u_x = λ ε (x1 − x0)`.
    Uniaxial { strain: f64 },
    /// Exact two-phase laminate field for macroscopic gradient `I + H` on the whole
    /// boundary; requires a planar level set.
    Laminate { gradient: [[f64; 2]; 2] },
    /// Left edge fully clamped, all other edges traction free.
    ClampedLeft,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSpec {
    #[serde(default = "one")]
    pub steps: usize,
    #[serde(default = "unit")]
    pub amplitude: f64,
    /// Append an unloading branch back to zero with the same number of steps.
    #[serde(default)]
    pub unload: bool,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl Default for LoadSpec {
    fn default() -> Self {
        Self { steps: 1, amplitude: 1.0, unload: false }
    }
}

impl LoadSpec {
    pub fn schedule(&self) -> Vec<f64> {
        let n = self.steps;
        let mut s: Vec<f64> = (1..=n).map(|k| self.amplitude * k as f64 / n as f64).collect();
        if self.unload {
            s.extend((0..n).rev().map(|k| self.amplitude * k as f64 / n as f64));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_halvings")]
    pub max_halvings: u32,
}

fn default_tol() -> f64 {
    SolverOptions::default().tol
}

fn default_max_iter() -> usize {
    SolverOptions::default().max_iter
}

fn default_halvings() -> u32 {
    SolverOptions::default().max_halvings
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self { tol: o.tol, max_iter: o.max_iter, max_halvings: o.max_halvings }
    }
}

/// Source of the reference solution used for error norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    /// Closed-form field; available for the `laminate` and `clamped_left` benchmarks.
    Analytic,
    /// LET solution on a mesh `factor` times finer in each direction.
    Overkill { factor: usize },
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; relative grid paths are resolved
    /// against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            cfg.level_set.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |field: &str, msg: &str| Err(Error::Config(format!("{field}: {msg}")));
        if self.mesh.nx == 0 || self.mesh.ny == 0 {
            return bad("mesh", "nx and ny must be at least 1");
        }
        let [x0, y0, x1, y1] = self.domain;
        if !(x1 > x0 && y1 > y0) || !self.domain.iter().all(|v| v.is_finite()) {
            return bad("domain", "expected [x0, y0, x1, y1] with x1 > x0 and y1 > y0");
        }
        if self.n_sub == 0 {
            return bad("n_sub", "must be at least 1");
        }
        if self.load.steps == 0 || !self.load.amplitude.is_finite() {
            return bad("load", "steps must be at least 1 and amplitude finite");
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return bad("solver", "tol must be positive and max_iter at least 1");
        }
        if let Some(ReferenceSpec::Overkill { factor }) = self.reference {
            if factor < 2 {
                return bad("reference.factor", "must be at least 2");
            }
        }
        if matches!(self.boundary, BoundarySpec::Laminate { .. })
            && !matches!(self.level_set, LevelSetSpec::Plane { .. })
        {
            return bad("boundary", "laminate boundary requires a plane level set");
        }
        self.materials.build()?;
        Ok(())
    }

    pub fn schedule(&self) -> Vec<f64> {
        self.load.schedule()
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            max_halvings: self.solver.max_halvings,
            ..SolverOptions::default()
        }
    }

    pub fn build_mesh(&self) -> Result<Mesh, Error> {
        Mesh::new(self.mesh.nx, self.mesh.ny, self.domain)
    }

    pub fn boundary_conditions(&self, mesh: &Mesh) -> Result<Vec<BoundaryCondition>, Error> {
        let [x0, _, x1, _] = self.domain;
        Ok(match self.boundary {
            BoundarySpec::Affine { gradient } => {
                BoundaryCondition::affine(mesh, &mesh.boundary_nodes(), gradient).to_vec()
            }
            BoundarySpec::Periodic { gradient } => {
                let origin = mesh.node(0, 0);
                let mut bcs = vec![BoundaryCondition::periodic_box(mesh, gradient)];
                bcs.extend(BoundaryCondition::affine(mesh, &[origin], [[0.0; 2]; 2]));
                bcs
            }
            BoundarySpec::Uniaxial { strain } => {
                let right = mesh.edge_nodes(Edge::Right);
                vec![
                    BoundaryCondition::fixed(mesh.edge_nodes(Edge::Left), 0),
                    BoundaryCondition::fixed(mesh.edge_nodes(Edge::Bottom), 1),
                    BoundaryCondition::Dirichlet {
                        values: vec![strain * (x1 - x0); right.len()],
                        nodes: right,
                        component: 0,
                    },
                ]
            }
            BoundarySpec::Laminate { .. } => {
                let exact = super::reference::AnalyticField::from_config(self)?
                    .ok_or_else(|| Error::Config("boundary: no laminate field for this configuration".into()))?;
                BoundaryCondition::from_field(mesh, &mesh.boundary_nodes(), |x| exact.displacement(x)).to_vec()
            }
            BoundarySpec::ClampedLeft => BoundaryCondition::clamp_edge(mesh, Edge::Left).to_vec(),
        })
    }

    pub fn build_problem(&self) -> Result<Problem, Error> {
        let mesh = self.build_mesh()?;
        let bcs = self.boundary_conditions(&mesh)?;
        let ls = self.level_set.build()?;
        Problem::new(mesh, self.method, self.materials.build()?, &ls, self.n_sub, bcs, self.solver_options())
    }

    /// Copy with a different method and resolution (scaled from the configured aspect).
    pub fn with_resolution(&self, method: Method, nx: usize) -> Self {
        let ny = ((self.mesh.ny * nx) as f64 / self.mesh.nx as f64).round().max(1.0) as usize;
        Self { method, mesh: MeshSpec { nx, ny }, ..self.clone() }
    }
}
