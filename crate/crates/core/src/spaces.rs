//! Degrees of freedom of the three discrete spaces.
//!
//! Every space is stored as a broken (elementwise) Lagrange coefficient
//! vector `c = P x + g`, where `x` holds the free degrees of freedom, `P`
//! is a sparse prolongation and `g` carries essential boundary values.
//!
//! Broken layouts:
//! * pressure: `t * nloc + m` for triangle `t`, Lagrange node `m`;
//! * flux: `t * 2 nloc + c * nloc + m` for component `c`;
//! * fracture pressure: `j * (k + 1) + m` for fracture edge `j` (all
//!   fractures concatenated in order), edge node `m`.

use std::collections::HashMap;

use crate::basis::{EdgeLagrange, TriangleLagrange};
use crate::error::{Error, Result};
use crate::mesh::{EdgeKind, PolygonalMesh};
use crate::problem::{BoundaryCondition, BulkBoundary, TipCondition};
use crate::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpaceConfig {
    pub order: usize,
}

impl SpaceConfig {
    pub fn new(order: usize) -> Result<Self> {
        if (1..=3).contains(&order) {
            Ok(Self { order })
        } else {
            Err(Error::UnsupportedOrder(order))
        }
    }
}

/// Sparse map from free degrees of freedom to broken coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Prolongation {
    n_free: usize,
    offsets: Vec<usize>,
    entries: Vec<(usize, f64)>,
    /// Broken coefficients of the essential data.
    pub lift: Vec<f64>,
}

impl Prolongation {
    fn with_capacity(n: usize) -> Self {
        Self {
            n_free: 0,
            offsets: Vec::with_capacity(n + 1),
            entries: Vec::with_capacity(2 * n),
            lift: Vec::with_capacity(n),
        }
    }

    fn push_row(&mut self, row: &[(usize, f64)], lift: f64) {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        for &(c, w) in row {
            self.n_free = self.n_free.max(c + 1);
            if w != 0.0 {
                self.entries.push((c, w));
            }
        }
        self.offsets.push(self.entries.len());
        self.lift.push(lift);
    }

    fn set_free(&mut self, n: usize) {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        self.n_free = n;
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_broken(&self) -> usize {
        self.lift.len()
    }

    /// True if some broken coefficient is fixed by essential data.
    pub fn has_fixed(&self) -> bool {
        (0..self.n_broken()).any(|b| self.row(b).is_empty())
    }

    pub fn row(&self, b: usize) -> &[(usize, f64)] {
        &self.entries[self.offsets[b]..self.offsets[b + 1]]
    }

    /// Broken coefficients `P x + g`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_broken())
            .map(|b| self.lift[b] + self.row(b).iter().map(|&(c, w)| w * x[c]).sum::<f64>())
            .collect()
    }

    /// Broken coefficients `P x`, without essential data.
    pub fn apply_homogeneous(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_broken())
            .map(|b| self.row(b).iter().map(|&(c, w)| w * x[c]).sum::<f64>())
            .collect()
    }

    /// Free coefficients whose prolongation best matches `broken` in the
    /// least-squares sense; exact when `broken` lies in the discrete space.
    pub fn restrict(&self, broken: &[f64]) -> Result<Vec<f64>> {
        let n = self.n_free;
        let mut t = sprs::TriMat::new((n, n));
        for b in 0..self.n_broken() {
            let row = self.row(b);
            for &(i, wi) in row {
                for &(j, wj) in row {
                    t.add_triplet(i, j, wi * wj);
                }
            }
        }
        let r: Vec<f64> = broken.iter().zip(&self.lift).map(|(c, g)| c - g).collect();
        let rhs = self.apply_transpose(&r);
        if n == 0 {
            return Ok(Vec::new());
        }
        Ok(crate::solver::solve_sparse(&t.to_csr(), &rhs)?.0)
    }

    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_free];
        for (b, &yb) in y.iter().enumerate() {
            for &(c, w) in self.row(b) {
                out[c] += w * yb;
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct DofMapS {
    pub basis: TriangleLagrange,
    pub prolongation: Prolongation,
    /// Broken coefficients fixed by Dirichlet data.
    pub dirichlet: Vec<bool>,
}

impl DofMapS {
    pub fn n_free(&self) -> usize {
        self.prolongation.n_free()
    }

    pub fn nloc(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Clone, Debug)]
pub struct DofMapV {
    pub basis: TriangleLagrange,
    pub prolongation: Prolongation,
}

impl DofMapV {
    pub fn n_free(&self) -> usize {
        self.prolongation.n_free()
    }

    pub fn nloc(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Clone, Debug)]
pub struct DofMapW {
    pub basis: EdgeLagrange,
    /// Broken fracture-edge index of every mesh edge on a fracture.
    pub edge_index: Vec<Option<usize>>,
    /// Mesh edge of every broken fracture-edge index.
    pub edges: Vec<usize>,
    pub prolongation: Prolongation,
}

impl DofMapW {
    pub fn n_free(&self) -> usize {
        self.prolongation.n_free()
    }
}

/// Pressure space: Lagrange nodes per sub-triangle, identified across
/// interior primal edges, interpolating Dirichlet data on boundary edges.
pub fn build_s_h(mesh: &PolygonalMesh, config: SpaceConfig, boundary: Option<&BulkBoundary>) -> DofMapS {
    let k = config.order;
    let basis = TriangleLagrange::new(k);
    let nloc = basis.len();
    let tol = mesh.domain.tolerance();
    let mut p = Prolongation::with_capacity(mesh.triangles.len() * nloc);
    let mut dirichlet = Vec::with_capacity(mesh.triangles.len() * nloc);
    let mut shared: HashMap<(usize, usize), usize> = HashMap::new();
    let mut next = 0;
    for tri in &mesh.triangles {
        let edge = &mesh.edges[tri.primal_edge];
        let condition = match (edge.kind, boundary) {
            (EdgeKind::Boundary, Some(b)) => Some(b.at(&edge.midpoint(mesh), tol)),
            _ => None,
        };
        let probe = tri.geometry.centroid();
        for (m, node) in basis.nodes.iter().enumerate() {
            let on_edge = node[2] == 0;
            if on_edge {
                if let Some(BoundaryCondition::Dirichlet(g)) = condition {
                    let x = tri.geometry.point(basis.node_barycentric(m));
                    p.push_row(&[], g(&x, &probe));
                    dirichlet.push(true);
                    continue;
                }
                if edge.kind == EdgeKind::Interior {
                    let ib = node[1];
                    let j = if tri.vertices[0] == edge.vertices[0] {
                        ib
                    } else {
                        k - ib
                    };
                    let id = *shared.entry((tri.primal_edge, j)).or_insert_with(|| {
                        next += 1;
                        next - 1
                    });
                    p.push_row(&[(id, 1.0)], 0.0);
                    dirichlet.push(false);
                    continue;
                }
            }
            p.push_row(&[(next, 1.0)], 0.0);
            dirichlet.push(false);
            next += 1;
        }
    }
    p.set_free(next);
    DofMapS {
        basis,
        prolongation: p,
        dirichlet,
    }
}

/// Flux space: vector Lagrange nodes per sub-triangle with continuous
/// normal component across every dual edge.
pub fn build_v_h(mesh: &PolygonalMesh, config: SpaceConfig) -> DofMapV {
    let k = config.order;
    let basis = TriangleLagrange::new(k);
    let nloc = basis.len();
    let nt = mesh.triangles.len();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nt * 2 * nloc];
    let mut next = 0;
    let mut fresh = |n: usize| {
        let start = next;
        next += n;
        start
    };
    let mut set = |t: usize, m: usize, v: [Vec<(usize, f64)>; 2]| {
        let [vx, vy] = v;
        rows[t * 2 * nloc + m] = vx;
        rows[t * 2 * nloc + nloc + m] = vy;
    };
    for el in &mesh.elements {
        let n = el.vertices.len();
        let normals: Vec<Vector> = el.dual_edges.iter().map(|&d| mesh.edges[d].normal).collect();
        // Centre: one normal flux per dual edge.
        let s0 = fresh(n);
        let centre = basis.index(0, k);
        for i in 0..n {
            let j = (i + 1) % n;
            let (a, b) = (normals[i], normals[j]);
            let det = a.x * b.y - a.y * b.x;
            // [a^T; b^T]^{-1} = [[b.y, -a.y], [-b.x, a.x]] / det
            set(
                el.triangles[i],
                centre,
                [
                    vec![(s0 + i, b.y / det), (s0 + j, -a.y / det)],
                    vec![(s0 + i, -b.x / det), (s0 + j, a.x / det)],
                ],
            );
        }
        // Nodes on dual edge i other than the centre: shared normal
        // component, one tangential component per side.
        for i in 0..n {
            let prev = el.triangles[(i + n - 1) % n];
            let cur = el.triangles[i];
            let nv = normals[i];
            let tv = Vector::new(-nv.y, nv.x);
            for ic in 0..k {
                let d = fresh(3);
                let comp = |t: usize| [vec![(d, nv.x), (d + t, tv.x)], vec![(d, nv.y), (d + t, tv.y)]];
                // In tau_i the node has (ia, ib) = (k - ic, 0); in tau_{i-1}
                // the same point is (0, k - ic).
                set(prev, basis.index(k - ic, ic), comp(1));
                set(cur, basis.index(0, ic), comp(2));
            }
        }
        // Remaining nodes are unconstrained.
        for &t in &el.triangles {
            for (m, node) in basis.nodes.iter().enumerate() {
                if node[0] > 0 && node[1] > 0 {
                    let d = fresh(2);
                    set(t, m, [vec![(d, 1.0)], vec![(d + 1, 1.0)]]);
                }
            }
        }
    }
    let mut p = Prolongation::with_capacity(rows.len());
    for r in &rows {
        p.push_row(r, 0.0);
    }
    p.set_free(next);
    DofMapV { basis, prolongation: p }
}

/// Fracture pressure space: continuous piecewise polynomials along each
/// fracture, essential at Dirichlet tips.
pub fn build_w_h(mesh: &PolygonalMesh, config: SpaceConfig, tips: &[[TipCondition; 2]]) -> DofMapW {
    let k = config.order;
    let mut edge_index = vec![None; mesh.edges.len()];
    let mut edges = Vec::new();
    let mut p = Prolongation::with_capacity(0);
    let mut next = 0;
    for (f, fm) in mesh.fractures.iter().enumerate() {
        let tip = tips.get(f).copied().unwrap_or([TipCondition::Neumann; 2]);
        let ne = fm.edges.len();
        let mut node_dof = Vec::with_capacity(ne + 1);
        for (j, _) in fm.nodes.iter().enumerate() {
            let fixed = match (j, j == ne) {
                (0, _) => tip[0],
                (_, true) => tip[1],
                _ => TipCondition::Neumann,
            };
            node_dof.push(match fixed {
                TipCondition::Dirichlet(v) => Err(v),
                TipCondition::Neumann => {
                    next += 1;
                    Ok(next - 1)
                }
            });
        }
        for (j, &e) in fm.edges.iter().enumerate() {
            edge_index[e] = Some(edges.len());
            edges.push(e);
            for m in 0..=k {
                let end = if m == 0 {
                    Some(node_dof[j])
                } else if m == k {
                    Some(node_dof[j + 1])
                } else {
                    None
                };
                match end {
                    Some(Ok(d)) => p.push_row(&[(d, 1.0)], 0.0),
                    Some(Err(v)) => p.push_row(&[], v),
                    None => {
                        p.push_row(&[(next, 1.0)], 0.0);
                        next += 1;
                    }
                }
            }
        }
    }
    p.set_free(next);
    DofMapW {
        basis: EdgeLagrange::new(k),
        edge_index,
        edges,
        prolongation: p,
    }
}

/// Jump `q1 - q2` and average of two traces on an edge. On boundary edges
/// both equal the single trace.
pub fn jump_and_average(mesh: &PolygonalMesh, edge: usize, q1: f64, q2: Option<f64>) -> Result<(f64, f64)> {
    let e = &mesh.edges[edge];
    if e.triangles[0].is_none() {
        return Err(Error::OrientationUnset(edge));
    }
    match (e.kind, q2) {
        (EdgeKind::Boundary, _) => Ok((q1, q1)),
        (_, Some(q2)) if e.triangles[1].is_some() => Ok((q1 - q2, 0.5 * (q1 + q2))),
        _ => Err(Error::OrientationUnset(edge)),
    }
}
