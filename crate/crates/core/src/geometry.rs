//! Level-set microgeometry and per-element classification.
//!
//! Sign convention: `φ > 0` is phase 2, `φ ≤ 0` is phase 1 (zero resolves to
//! phase 1). Cut elements carry the phase-2 volume fraction and the unit
//! normal pointing from phase 1 into phase 2.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::tensor::Vector3;
use crate::Error;

/// Default number of subsamples per element edge used for volume fractions.
pub const DEFAULT_SUBSAMPLES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    One,
    Two,
}

impl Phase {
    pub fn index(self) -> usize {
        match self {
            Phase::One => 0,
            Phase::Two => 1,
        }
    }

    fn of(value: f64) -> Self {
        if value > 0.0 {
            Phase::Two
        } else {
            Phase::One
        }
    }
}

/// Level set sampled on a regular grid, bilinearly interpolated.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledGrid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    /// Row-major: `values[j * nx + i]` is the sample at `(x0 + i dx, y0 + j dy)`.
    pub values: Vec<f64>,
}

impl SampledGrid {
    /// Parses `nx ny x0 y0 dx dy` followed by `nx * ny` row-major values.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut tokens = text.split_whitespace();
        let mut next = |what: &str| -> Result<&str, Error> {
            tokens.next().ok_or_else(|| Error::Config(format!("grid file: missing {what}")))
        };
        let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Config(format!("grid file: {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| Error::Config(format!("grid file: {e}")));
        let nx = int(next("nx")?)?;
        let ny = int(next("ny")?)?;
        let x0 = real(next("x0")?)?;
        let y0 = real(next("y0")?)?;
        let dx = real(next("dx")?)?;
        let dy = real(next("dy")?)?;
        if nx < 2 || ny < 2 || !(dx > 0.0) || !(dy > 0.0) {
            return Err(Error::Config("grid file: need nx, ny >= 2 and positive spacing".into()));
        }
        let values = (0..nx * ny).map(|_| real(next("value")?)).collect::<Result<Vec<_>, _>>()?;
        if tokens.next().is_some() {
            return Err(Error::Config("grid file: trailing data".into()));
        }
        Ok(Self { nx, ny, x0, y0, dx, dy, values })
    }

    pub fn from_file(path: &Path) -> Result<Self, Error> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn locate(&self, x: [f64; 2]) -> (usize, usize, f64, f64) {
        let cell = |v: f64, o: f64, d: f64, n: usize| {
            let t = ((v - o) / d).clamp(0.0, (n - 1) as f64);
            let i = (t.floor() as usize).min(n - 2);
            (i, t - i as f64)
        };
        let (i, s) = cell(x[0], self.x0, self.dx, self.nx);
        let (j, t) = cell(x[1], self.y0, self.dy, self.ny);
        (i, j, s, t)
    }

    fn corners(&self, i: usize, j: usize) -> [f64; 4] {
        let v = |a: usize, b: usize| self.values[b * self.nx + a];
        [v(i, j), v(i + 1, j), v(i, j + 1), v(i + 1, j + 1)]
    }

    fn value(&self, x: [f64; 2]) -> f64 {
        let (i, j, s, t) = self.locate(x);
        let [a, b, c, d] = self.corners(i, j);
        a * (1.0 - s) * (1.0 - t) + b * s * (1.0 - t) + c * (1.0 - s) * t + d * s * t
    }

    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let (i, j, s, t) = self.locate(x);
        let [a, b, c, d] = self.corners(i, j);
        [((b - a) * (1.0 - t) + (d - c) * t) / self.dx, ((c - a) * (1.0 - s) + (d - b) * s) / self.dy]
    }
}

/// Scalar field whose zero set is the material interface.
#[derive(Clone, Debug, PartialEq)]
pub enum LevelSet {
    /// `φ = r − |x − c|`: phase 2 inside the circle.
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    /// `φ = (x − p)·n̂`: phase 2 on the side the normal points to.
    Plane {
        point: [f64; 2],
        normal: [f64; 2],
    },
    /// Pointwise maximum (phase 2 where any member is phase 2).
    Union(Vec<LevelSet>),
    /// Pointwise minimum.
    Intersection(Vec<LevelSet>),
    Complement(Box<LevelSet>),
    Sampled(SampledGrid),
}

impl LevelSet {
    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        LevelSet::Circle { center, radius }
    }

    pub fn plane(point: [f64; 2], normal: [f64; 2]) -> Self {
        LevelSet::Plane { point, normal }
    }

    pub fn complement(self) -> Self {
        LevelSet::Complement(Box::new(self))
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        match self {
            LevelSet::Circle { center, radius } => radius - (x[0] - center[0]).hypot(x[1] - center[1]),
            LevelSet::Plane { point, normal } => {
                let n = normal[0].hypot(normal[1]);
                ((x[0] - point[0]) * normal[0] + (x[1] - point[1]) * normal[1]) / n
            }
            LevelSet::Union(items) => items.iter().map(|l| l.value(x)).fold(f64::NEG_INFINITY, f64::max),
            LevelSet::Intersection(items) => items.iter().map(|l| l.value(x)).fold(f64::INFINITY, f64::min),
            LevelSet::Complement(inner) => -inner.value(x),
            LevelSet::Sampled(grid) => grid.value(x),
        }
    }

    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            LevelSet::Circle { center, .. } => {
                let d = [x[0] - center[0], x[1] - center[1]];
                let r = d[0].hypot(d[1]);
                if r == 0.0 {
                    [0.0, 0.0]
                } else {
                    [-d[0] / r, -d[1] / r]
                }
            }
            LevelSet::Plane { normal, .. } => {
                let n = normal[0].hypot(normal[1]);
                [normal[0] / n, normal[1] / n]
            }
            LevelSet::Union(items) | LevelSet::Intersection(items) => {
                let pick_max = matches!(self, LevelSet::Union(_));
                let mut best: Option<(f64, &LevelSet)> = None;
                for item in items {
                    let v = item.value(x);
                    let better = match best {
                        None => true,
                        Some((b, _)) => (pick_max && v > b) || (!pick_max && v < b),
                    };
                    if better {
                        best = Some((v, item));
                    }
                }
                best.map(|(_, l)| l.gradient(x)).unwrap_or([0.0, 0.0])
            }
            LevelSet::Complement(inner) => {
                let g = inner.gradient(x);
                [-g[0], -g[1]]
            }
            LevelSet::Sampled(grid) => grid.gradient(x),
        }
    }

    /// `(a, b)` with `φ(x) = a·x + b` when the level set is globally affine.
    pub fn affine(&self) -> Option<([f64; 2], f64)> {
        match self {
            LevelSet::Plane { point, normal } => {
                let n = normal[0].hypot(normal[1]);
                let a = [normal[0] / n, normal[1] / n];
                Some((a, -(a[0] * point[0] + a[1] * point[1])))
            }
            LevelSet::Complement(inner) => inner.affine().map(|(a, b)| ([-a[0], -a[1]], -b)),
            _ => None,
        }
    }
}

/// Axis-aligned rectangular element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Rect {
    pub fn centroid(&self) -> [f64; 2] {
        [self.x0 + 0.5 * self.dx, self.y0 + 0.5 * self.dy]
    }

    /// Maps reference coordinates in `[-1, 1]²` to physical coordinates.
    pub fn map(&self, xi: [f64; 2]) -> [f64; 2] {
        [self.x0 + 0.5 * (xi[0] + 1.0) * self.dx, self.y0 + 0.5 * (xi[1] + 1.0) * self.dy]
    }

    pub fn area(&self) -> f64 {
        self.dx * self.dy
    }

    fn corners(&self) -> [[f64; 2]; 4] {
        [
            [self.x0, self.y0],
            [self.x0 + self.dx, self.y0],
            [self.x0 + self.dx, self.y0 + self.dy],
            [self.x0, self.y0 + self.dy],
        ]
    }

    fn subsamples(&self, n_sub: usize) -> impl Iterator<Item = [f64; 2]> + '_ {
        let n = n_sub as f64;
        (0..n_sub).flat_map(move |j| {
            (0..n_sub)
                .map(move |i| [self.x0 + (i as f64 + 0.5) / n * self.dx, self.y0 + (j as f64 + 0.5) / n * self.dy])
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElementClass {
    Phase1,
    Phase2,
    /// Cut element: phase-2 volume fraction and unit normal from phase 1 into phase 2.
    Cut {
        eta: f64,
        normal: Vector3,
    },
}

/// Phase-2 area fraction from `n_sub × n_sub` midpoint samples of the level-set sign.
pub fn volume_fraction(ls: &LevelSet, rect: &Rect, n_sub: usize) -> f64 {
    let n_sub = n_sub.max(1);
    let inside = rect.subsamples(n_sub).filter(|&x| Phase::of(ls.value(x)) == Phase::Two).count();
    inside as f64 / (n_sub * n_sub) as f64
}

/// Exact area fraction of `{a·x + b > 0}` within the rectangle (polygon clipping).
pub fn half_plane_fraction(a: [f64; 2], b: f64, rect: &Rect) -> f64 {
    let f = |p: &[f64; 2]| a[0] * p[0] + a[1] * p[1] + b;
    let poly = rect.corners();
    let mut clipped: Vec<[f64; 2]> = Vec::with_capacity(6);
    for k in 0..4 {
        let p = poly[k];
        let q = poly[(k + 1) % 4];
        let (fp, fq) = (f(&p), f(&q));
        if fp > 0.0 {
            clipped.push(p);
        }
        if (fp > 0.0) != (fq > 0.0) {
            let t = fp / (fp - fq);
            clipped.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    let n = clipped.len();
    let twice_area: f64 = (0..n)
        .map(|k| {
            let p = clipped[k];
            let q = clipped[(k + 1) % n];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    (0.5 * twice_area.abs() / rect.area()).clamp(0.0, 1.0)
}

pub fn element_center_phase(ls: &LevelSet, rect: &Rect) -> Phase {
    Phase::of(ls.value(rect.centroid()))
}

/// Phase at each quadrature point, given in reference coordinates `[-1, 1]²`.
pub fn gauss_phase_map(ls: &LevelSet, rect: &Rect, points: &[[f64; 2]]) -> Vec<Phase> {
    points.iter().map(|&xi| Phase::of(ls.value(rect.map(xi)))).collect()
}

/// Classifies an element as pure or cut.
///
/// Affine level sets are clipped exactly; any other level set is subsampled
/// on an `n_sub × n_sub` grid. The normal is the normalized level-set
/// gradient at the centroid, falling back to the mean gradient over the
/// subsamples when it vanishes there.
pub fn classify_element(ls: &LevelSet, rect: &Rect, n_sub: usize) -> Result<ElementClass, Error> {
    let eta = match ls.affine() {
        Some((a, b)) => half_plane_fraction(a, b, rect),
        None => volume_fraction(ls, rect, n_sub),
    };
    if eta < crate::laminate::ETA_SNAP {
        return Ok(ElementClass::Phase1);
    }
    if eta > 1.0 - crate::laminate::ETA_SNAP {
        return Ok(ElementClass::Phase2);
    }
    let mut g = ls.gradient(rect.centroid());
    let mut norm = g[0].hypot(g[1]);
    if norm <= 1e-12 {
        let mut sum = [0.0, 0.0];
        for x in rect.subsamples(n_sub.max(2)) {
            let gx = ls.gradient(x);
            sum[0] += gx[0];
            sum[1] += gx[1];
        }
        g = sum;
        norm = g[0].hypot(g[1]);
        if norm <= 1e-12 {
            return Err(Error::DegenerateLevelSet);
        }
    }
    Ok(ElementClass::Cut { eta, normal: Vector3::new(g[0] / norm, g[1] / norm, 0.0) })
}
