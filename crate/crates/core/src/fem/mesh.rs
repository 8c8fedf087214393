use crate::geometry::Rect;
use crate::Error;

/// Side of the rectangular domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

/// Structured mesh of congruent axis-aligned rectangles.
///
/// Node `(i, j)` has index `j (nx + 1) + i`; element `(i, j)` has index
/// `j nx + i` and lists its nodes counterclockwise from the lower-left corner.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    /// `[x0, y0, x1, y1]`.
    pub domain: [f64; 4],
    pub dx: f64,
    pub dy: f64,
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 4]>,
}

impl Mesh {
    pub fn new(nx: usize, ny: usize, domain: [f64; 4]) -> Result<Self, Error> {
        let [x0, y0, x1, y1] = domain;
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter("mesh needs at least one element per direction".into()));
        }
        if !(x1 > x0) || !(y1 > y0) {
            return Err(Error::InvalidParameter("empty domain box".into()));
        }
        let dx = (x1 - x0) / nx as f64;
        let dy = (y1 - y0) / ny as f64;
        let nodes = (0..=ny).flat_map(|j| (0..=nx).map(move |i| [x0 + i as f64 * dx, y0 + j as f64 * dy])).collect();
        let elements = (0..ny)
            .flat_map(|j| {
                (0..nx).map(move |i| {
                    let n0 = j * (nx + 1) + i;
                    [n0, n0 + 1, n0 + nx + 2, n0 + nx + 1]
                })
            })
            .collect();
        Ok(Self { nx, ny, domain, dx, dy, nodes, elements })
    }

    pub fn unit_square(n: usize) -> Result<Self, Error> {
        Self::new(n, n, [0.0, 0.0, 1.0, 1.0])
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn element_rect(&self, e: usize) -> Rect {
        let [x, y] = self.nodes[self.elements[e][0]];
        Rect { x0: x, y0: y, dx: self.dx, dy: self.dy }
    }

    /// Element containing `x` (points on shared edges go to the upper/right element).
    pub fn locate(&self, x: [f64; 2]) -> Option<usize> {
        let [x0, y0, x1, y1] = self.domain;
        if x[0] < x0 || x[0] > x1 || x[1] < y0 || x[1] > y1 {
            return None;
        }
        let i = (((x[0] - x0) / self.dx) as usize).min(self.nx - 1);
        let j = (((x[1] - y0) / self.dy) as usize).min(self.ny - 1);
        Some(j * self.nx + i)
    }

    pub fn edge_nodes(&self, edge: Edge) -> Vec<usize> {
        match edge {
            Edge::Left => (0..=self.ny).map(|j| self.node(0, j)).collect(),
            Edge::Right => (0..=self.ny).map(|j| self.node(self.nx, j)).collect(),
            Edge::Bottom => (0..=self.nx).map(|i| self.node(i, 0)).collect(),
            Edge::Top => (0..=self.nx).map(|i| self.node(i, self.ny)).collect(),
        }
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut all: Vec<usize> =
            [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top].iter().flat_map(|&e| self.edge_nodes(e)).collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}
