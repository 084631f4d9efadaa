//! Evaluation of broken coefficient vectors.

use crate::basis::{EdgeLagrange, TriangleGeometry, TriangleLagrange};
use crate::mesh::PolygonalMesh;
use crate::quadrature::{edge_rule, triangle_rule};
use crate::{Point, Vector};

/// Upper bound on local Lagrange nodes (order 3).
pub(crate) const MAX_NLOC: usize = 10;

/// Quadrature points with basis values and barycentric derivatives.
pub(crate) struct TriangleTables {
    pub lam: Vec<[f64; 3]>,
    /// Reference weights, summing to 1/2.
    pub weights: Vec<f64>,
    pub values: Vec<[f64; MAX_NLOC]>,
    pub dlam: Vec<[[f64; 3]; MAX_NLOC]>,
}

impl TriangleTables {
    pub fn new(basis: &TriangleLagrange, degree: usize) -> Self {
        let (pts, weights) = triangle_rule(degree);
        let lam: Vec<[f64; 3]> = pts
            .iter()
            .map(|&r| TriangleGeometry::reference_to_barycentric(r))
            .collect();
        let n = basis.len();
        let values = lam
            .iter()
            .map(|&l| {
                let mut v = [0.0; MAX_NLOC];
                basis.values(l, &mut v[..n]);
                v
            })
            .collect();
        let dlam = lam
            .iter()
            .map(|&l| {
                let mut d = [[0.0; 3]; MAX_NLOC];
                basis.barycentric_derivatives(l, &mut d[..n]);
                d
            })
            .collect();
        Self {
            lam,
            weights,
            values,
            dlam,
        }
    }

    pub fn len(&self) -> usize {
        self.lam.len()
    }

    /// Physical basis gradients at quadrature point `q`.
    pub fn gradients(&self, q: usize, geo: &TriangleGeometry, n: usize) -> [Vector; MAX_NLOC] {
        let g = &geo.grad_lambda;
        let mut out = [Vector::zeros(); MAX_NLOC];
        for (m, o) in out.iter_mut().enumerate().take(n) {
            let d = self.dlam[q][m];
            *o = g[0] * d[0] + g[1] * d[1] + g[2] * d[2];
        }
        out
    }
}

/// Gauss points on `[0, 1]`.
pub(crate) fn edge_points(degree: usize) -> (Vec<f64>, Vec<f64>) {
    edge_rule(degree)
}

pub(crate) fn values(basis: &TriangleLagrange, lam: [f64; 3]) -> [f64; MAX_NLOC] {
    let mut v = [0.0; MAX_NLOC];
    basis.values(lam, &mut v[..basis.len()]);
    v
}

pub(crate) fn gradients(basis: &TriangleLagrange, lam: [f64; 3], geo: &TriangleGeometry) -> [Vector; MAX_NLOC] {
    let n = basis.len();
    let mut d = [[0.0; 3]; MAX_NLOC];
    basis.barycentric_derivatives(lam, &mut d[..n]);
    let g = &geo.grad_lambda;
    let mut out = [Vector::zeros(); MAX_NLOC];
    for m in 0..n {
        out[m] = g[0] * d[m][0] + g[1] * d[m][1] + g[2] * d[m][2];
    }
    out
}

/// Evaluates broken pressure and flux coefficients.
#[derive(Clone, Copy)]
pub struct BulkField<'a> {
    pub mesh: &'a PolygonalMesh,
    pub basis: &'a TriangleLagrange,
    pub p: &'a [f64],
    pub u: &'a [f64],
}

impl<'a> BulkField<'a> {
    fn nloc(&self) -> usize {
        self.basis.len()
    }

    pub fn pressure(&self, t: usize, lam: [f64; 3]) -> f64 {
        let n = self.nloc();
        let v = values(self.basis, lam);
        let c = &self.p[t * n..(t + 1) * n];
        (0..n).map(|m| c[m] * v[m]).sum()
    }

    pub fn pressure_gradient(&self, t: usize, lam: [f64; 3]) -> Vector {
        let n = self.nloc();
        let g = gradients(self.basis, lam, &self.mesh.triangles[t].geometry);
        let c = &self.p[t * n..(t + 1) * n];
        (0..n).map(|m| g[m] * c[m]).sum()
    }

    pub fn flux(&self, t: usize, lam: [f64; 3]) -> Vector {
        let n = self.nloc();
        let v = values(self.basis, lam);
        let c = &self.u[t * 2 * n..(t + 1) * 2 * n];
        let mut out = Vector::zeros();
        for m in 0..n {
            out.x += c[m] * v[m];
            out.y += c[n + m] * v[m];
        }
        out
    }

    pub fn flux_divergence(&self, t: usize, lam: [f64; 3]) -> f64 {
        let n = self.nloc();
        let g = gradients(self.basis, lam, &self.mesh.triangles[t].geometry);
        let c = &self.u[t * 2 * n..(t + 1) * 2 * n];
        (0..n).map(|m| c[m] * g[m].x + c[n + m] * g[m].y).sum()
    }

    /// Barycentric coordinates of `x` in triangle `t`.
    pub fn locate_in(&self, t: usize, x: &Point) -> [f64; 3] {
        self.mesh.triangles[t].geometry.barycentric(x)
    }
}

/// Fracture pressure on broken fracture edge `j` at edge parameter `s`.
pub(crate) fn edge_value(basis: &EdgeLagrange, w: &[f64], j: usize, s: f64) -> f64 {
    let n = basis.len();
    let mut v = [0.0; 4];
    basis.values(s, &mut v[..n]);
    (0..n).map(|m| w[j * n + m] * v[m]).sum()
}

/// Derivative with respect to the edge parameter `s in [0, 1]`.
pub(crate) fn edge_derivative(basis: &EdgeLagrange, w: &[f64], j: usize, s: f64) -> f64 {
    let n = basis.len();
    let mut v = [0.0; 4];
    basis.derivatives(s, &mut v[..n]);
    (0..n).map(|m| w[j * n + m] * v[m]).sum()
}

pub(crate) fn edge_second_derivative(basis: &EdgeLagrange, w: &[f64], j: usize, s: f64) -> f64 {
    let n = basis.len();
    let mut v = [0.0; 4];
    basis.second_derivatives(s, &mut v[..n]);
    (0..n).map(|m| w[j * n + m] * v[m]).sum()
}
