use super::mesh::{Edge, Mesh};
use crate::Error;

/// Kinematic constraint. Prescribed values scale with the load factor `λ`.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    /// `u_component(node) = λ · value` for each listed node.
    Dirichlet { nodes: Vec<usize>, component: usize, values: Vec<f64> },
    /// `u(slave) = u(master) + λ H (X_slave − X_master)` for each `(master, slave)` pair.
    Periodic { pairs: Vec<(usize, usize)>, macro_gradient: [[f64; 2]; 2] },
}

impl BoundaryCondition {
    pub fn fixed(nodes: Vec<usize>, component: usize) -> Self {
        let values = vec![0.0; nodes.len()];
        BoundaryCondition::Dirichlet { nodes, component, values }
    }

    /// Both components prescribed from `u(X) = λ g(X)`.
    pub fn from_field(mesh: &Mesh, nodes: &[usize], g: impl Fn([f64; 2]) -> [f64; 2]) -> [Self; 2] {
        let vals: Vec<[f64; 2]> = nodes.iter().map(|&n| g(mesh.nodes[n])).collect();
        [0, 1].map(|c| BoundaryCondition::Dirichlet {
            nodes: nodes.to_vec(),
            component: c,
            values: vals.iter().map(|v| v[c]).collect(),
        })
    }

    /// Affine displacement `u = λ H X` on the given nodes.
    pub fn affine(mesh: &Mesh, nodes: &[usize], h: [[f64; 2]; 2]) -> [Self; 2] {
        Self::from_field(mesh, nodes, |x| [h[0][0] * x[0] + h[0][1] * x[1], h[1][0] * x[0] + h[1][1] * x[1]])
    }

    /// Periodic pairs linking right to left and top to bottom; the corner
    /// `(nx, ny)` is reached through the chain top-right → top-left → bottom-left.
    pub fn periodic_box(mesh: &Mesh, macro_gradient: [[f64; 2]; 2]) -> Self {
        let mut pairs: Vec<(usize, usize)> = (0..=mesh.ny).map(|j| (mesh.node(0, j), mesh.node(mesh.nx, j))).collect();
        pairs.extend((0..mesh.nx).map(|i| (mesh.node(i, 0), mesh.node(i, mesh.ny))));
        BoundaryCondition::Periodic { pairs, macro_gradient }
    }

    pub fn clamp_edge(mesh: &Mesh, edge: Edge) -> [Self; 2] {
        let nodes = mesh.edge_nodes(edge);
        [Self::fixed(nodes.clone(), 0), Self::fixed(nodes, 1)]
    }
}

/// Map between full nodal dofs and free equations: `u = T a + λ g`.
///
/// Every full dof either maps to a free equation (possibly through a chain of
/// periodic constraints) or to a prescribed root. `g` collects the prescribed
/// value plus the accumulated periodic offsets.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    pub n_full: usize,
    pub n_eq: usize,
    /// Free equation index of each full dof, if any.
    pub eq: Vec<Option<usize>>,
    pub g: Vec<f64>,
    /// Dofs carrying a Dirichlet value (not slaves).
    pub prescribed: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, bcs: &[BoundaryCondition]) -> Result<Self, Error> {
        let n_full = 2 * mesh.n_nodes();
        let mut value: Vec<Option<f64>> = vec![None; n_full];
        let mut parent: Vec<Option<(usize, f64)>> = vec![None; n_full];
        for bc in bcs {
            match bc {
                BoundaryCondition::Dirichlet { nodes, component, values } => {
                    if *component > 1 || nodes.len() != values.len() {
                        return Err(Error::InvalidParameter("malformed Dirichlet condition".into()));
                    }
                    for (&n, &v) in nodes.iter().zip(values) {
                        let d = checked_dof(n, *component, n_full)?;
                        match value[d] {
                            Some(old) if (old - v).abs() > 1e-14 * old.abs().max(v.abs()).max(1.0) => {
                                return Err(Error::InvalidParameter(format!(
                                    "node {n} component {component} prescribed twice with different values"
                                )))
                            }
                            _ => value[d] = Some(v),
                        }
                    }
                }
                BoundaryCondition::Periodic { pairs, macro_gradient: h } => {
                    for &(m, s) in pairs {
                        if m == s {
                            return Err(Error::InvalidParameter(format!("node {m} paired with itself")));
                        }
                        checked_dof(m, 0, n_full)?;
                        checked_dof(s, 0, n_full)?;
                        let dx = [mesh.nodes[s][0] - mesh.nodes[m][0], mesh.nodes[s][1] - mesh.nodes[m][1]];
                        for c in 0..2 {
                            let d = 2 * s + c;
                            if parent[d].is_some() {
                                return Err(Error::InvalidParameter(format!("node {s} is a slave twice")));
                            }
                            parent[d] = Some((2 * m + c, h[c][0] * dx[0] + h[c][1] * dx[1]));
                        }
                    }
                }
            }
        }
        for d in 0..n_full {
            if parent[d].is_some() && value[d].is_some() {
                return Err(Error::InvalidParameter(format!(
                    "node {} component {} is both periodic slave and prescribed",
                    d / 2,
                    d % 2
                )));
            }
        }

        let mut eq = vec![None; n_full];
        let mut n_eq = 0;
        for d in 0..n_full {
            if parent[d].is_none() && value[d].is_none() {
                eq[d] = Some(n_eq);
                n_eq += 1;
            }
        }
        let mut g = vec![0.0; n_full];
        for d in 0..n_full {
            let mut root = d;
            let mut offset = 0.0;
            let mut hops = 0;
            while let Some((m, o)) = parent[root] {
                offset += o;
                root = m;
                hops += 1;
                if hops > n_full {
                    return Err(Error::InvalidParameter("cyclic periodic constraints".into()));
                }
            }
            eq[d] = eq[root];
            g[d] = offset + value[root].unwrap_or(0.0);
        }
        let prescribed = value.iter().map(Option::is_some).collect();
        Ok(Self { n_full, n_eq, eq, g, prescribed })
    }

    /// `u = T a + λ g`.
    pub fn expand(&self, a: &[f64], load: f64) -> Vec<f64> {
        (0..self.n_full).map(|d| self.eq[d].map_or(0.0, |e| a[e]) + load * self.g[d]).collect()
    }

    /// `a` with `u = T a + λ g`; slave consistency is not checked.
    pub fn restrict(&self, u: &[f64], load: f64) -> Vec<f64> {
        let mut a = vec![0.0; self.n_eq];
        for d in 0..self.n_full {
            if let Some(e) = self.eq[d] {
                a[e] = u[d] - load * self.g[d];
            }
        }
        a
    }

    /// `Tᵀ f`.
    pub fn condense(&self, f: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.n_eq];
        for d in 0..self.n_full {
            if let Some(e) = self.eq[d] {
                r[e] += f[d];
            }
        }
        r
    }
}

fn checked_dof(node: usize, component: usize, n_full: usize) -> Result<usize, Error> {
    let d = 2 * node + component;
    if d >= n_full {
        return Err(Error::InvalidParameter(format!("node {node} outside the mesh")));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_removes_dofs() {
        let m = Mesh::unit_square(2).unwrap();
        let bcs = BoundaryCondition::affine(&m, &m.boundary_nodes(), [[0.1, 0.0], [0.0, -0.2]]);
        let map = DofMap::new(&m, &bcs).unwrap();
        assert_eq!(map.n_eq, 2);
        assert_eq!(map.eq[8], Some(0));
        let u = map.expand(&[0.5, 0.25], 2.0);
        assert_eq!(u[8], 0.5);
        assert_eq!(u[9], 0.25);
        // node 2 sits at (1, 0)
        assert!((u[4] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn periodic_chains_resolve_to_roots() {
        let m = Mesh::unit_square(3).unwrap();
        let h = [[0.01, 0.02], [0.0, -0.03]];
        let mut bcs = vec![BoundaryCondition::periodic_box(&m, h)];
        bcs.extend(BoundaryCondition::affine(&m, &[0], [[0.0; 2]; 2]));
        let map = DofMap::new(&m, &bcs).unwrap();
        // 16 nodes, 7 boundary slaves, origin pinned
        assert_eq!(map.n_eq, 2 * (16 - 7 - 1));
        let corner = m.node(3, 3);
        for c in 0..2 {
            assert_eq!(map.eq[2 * corner + c], None);
            let expect = h[c][0] + h[c][1];
            assert!((map.g[2 * corner + c] - expect).abs() < 1e-15);
        }
        let a: Vec<f64> = (0..map.n_eq).map(|k| k as f64).collect();
        let u = map.expand(&a, 1.0);
        for j in 0..=3 {
            let (l, r) = (m.node(0, j), m.node(3, j));
            assert!((u[2 * r] - u[2 * l] - h[0][0]).abs() < 1e-14);
            assert!((u[2 * r + 1] - u[2 * l + 1] - h[1][0]).abs() < 1e-14);
        }
    }

    #[test]
    fn conflicting_constraints_are_rejected() {
        let m = Mesh::unit_square(2).unwrap();
        let per = BoundaryCondition::periodic_box(&m, [[0.0; 2]; 2]);
        let clamp = BoundaryCondition::fixed(m.edge_nodes(Edge::Right), 0);
        assert!(DofMap::new(&m, &[per.clone(), clamp]).is_err());
        let twice = BoundaryCondition::Periodic { pairs: vec![(0, 2), (1, 2)], macro_gradient: [[0.0; 2]; 2] };
        assert!(DofMap::new(&m, &[twice]).is_err());
        let a = BoundaryCondition::Dirichlet { nodes: vec![0], component: 0, values: vec![1.0] };
        let b = BoundaryCondition::Dirichlet { nodes: vec![0], component: 0, values: vec![2.0] };
        assert!(DofMap::new(&m, &[a.clone(), a.clone()]).is_ok());
        assert!(DofMap::new(&m, &[a, b]).is_err());
    }
}
