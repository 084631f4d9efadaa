//! Lagrange bases on triangles (barycentric lattice nodes) and on edges.

use crate::{Point, Vector};

/// Nodal Lagrange basis of `P^k` on a triangle with vertices `[a, b, c]`.
///
/// Node `m` carries the lattice multi-index `(ia, ib, ic)` with
/// `ia + ib + ic = k`; it sits at barycentric coordinates `(ia, ib, ic) / k`.
/// Nodes are enumerated with `ic` outermost and `ib` inner, so the first
/// `k + 1` nodes lie on edge `ab` ordered from `a` to `b`.
#[derive(Clone, Debug)]
pub struct TriangleLagrange {
    pub order: usize,
    pub nodes: Vec<[usize; 3]>,
}

impl TriangleLagrange {
    pub fn new(order: usize) -> Self {
        let mut nodes = Vec::new();
        for ic in 0..=order {
            for ib in 0..=(order - ic) {
                nodes.push([order - ib - ic, ib, ic]);
            }
        }
        Self { order, nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node with multi-index `(ia, ib, ic)`.
    pub fn index(&self, ib: usize, ic: usize) -> usize {
        // Row `ic` starts after rows 0..ic, of lengths k+1, k, ..., k-ic+2.
        let k = self.order;
        let start: usize = (0..ic).map(|r| k + 1 - r).sum();
        start + ib
    }

    pub fn node_barycentric(&self, m: usize) -> [f64; 3] {
        let k = self.order as f64;
        let n = self.nodes[m];
        [n[0] as f64 / k, n[1] as f64 / k, n[2] as f64 / k]
    }

    /// Basis values at barycentric coordinates `lam`.
    pub fn values(&self, lam: [f64; 3], out: &mut [f64]) {
        let k = self.order;
        let tables = [
            lattice_factors(k, lam[0]),
            lattice_factors(k, lam[1]),
            lattice_factors(k, lam[2]),
        ];
        for (m, n) in self.nodes.iter().enumerate() {
            out[m] = tables[0][n[0]].0 * tables[1][n[1]].0 * tables[2][n[2]].0;
        }
    }

    /// Partial derivatives with respect to the three barycentric coordinates.
    pub fn barycentric_derivatives(&self, lam: [f64; 3], out: &mut [[f64; 3]]) {
        let k = self.order;
        let t = [
            lattice_factors(k, lam[0]),
            lattice_factors(k, lam[1]),
            lattice_factors(k, lam[2]),
        ];
        for (m, n) in self.nodes.iter().enumerate() {
            let (va, da) = t[0][n[0]];
            let (vb, db) = t[1][n[1]];
            let (vc, dc) = t[2][n[2]];
            out[m] = [da * vb * vc, va * db * vc, va * vb * dc];
        }
    }

    /// Physical gradients given the (constant) barycentric gradients.
    pub fn gradients(&self, lam: [f64; 3], grad_lambda: &[Vector; 3], out: &mut [Vector]) {
        let mut d = vec![[0.0; 3]; self.len()];
        self.barycentric_derivatives(lam, &mut d);
        for (o, dm) in out.iter_mut().zip(&d) {
            *o = grad_lambda[0] * dm[0] + grad_lambda[1] * dm[1] + grad_lambda[2] * dm[2];
        }
    }
}

/// `(P_n(l), P_n'(l))` for `n = 0..=k`, where
/// `P_n(l) = prod_{q<n} (k l - q) / (q + 1)`.
fn lattice_factors(k: usize, l: f64) -> Vec<(f64, f64)> {
    let kf = k as f64;
    let mut out = Vec::with_capacity(k + 1);
    let mut v = 1.0;
    let mut d = 0.0;
    out.push((v, d));
    for q in 0..k {
        let qf = q as f64;
        let f = (kf * l - qf) / (qf + 1.0);
        let df = kf / (qf + 1.0);
        d = d * f + v * df;
        v *= f;
        out.push((v, d));
    }
    out
}

/// Nodal Lagrange basis of `P^k` on `[0, 1]` with equispaced nodes.
#[derive(Clone, Debug)]
pub struct EdgeLagrange {
    pub order: usize,
}

impl EdgeLagrange {
    pub fn new(order: usize) -> Self {
        Self { order }
    }

    pub fn len(&self) -> usize {
        self.order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self, t: f64, out: &mut [f64]) {
        let k = self.order;
        for (i, o) in out.iter_mut().enumerate().take(k + 1) {
            let ti = i as f64 / k as f64;
            let mut v = 1.0;
            for j in 0..=k {
                if j != i {
                    let tj = j as f64 / k as f64;
                    v *= (t - tj) / (ti - tj);
                }
            }
            *o = v;
        }
    }

    /// Derivatives with respect to `t`.
    pub fn derivatives(&self, t: f64, out: &mut [f64]) {
        self.derivatives_of_order(t, 1, out)
    }

    /// Second derivatives with respect to `t`.
    pub fn second_derivatives(&self, t: f64, out: &mut [f64]) {
        self.derivatives_of_order(t, 2, out)
    }

    fn derivatives_of_order(&self, t: f64, order: usize, out: &mut [f64]) {
        let k = self.order;
        let nodes: Vec<f64> = (0..=k).map(|j| j as f64 / k as f64).collect();
        for i in 0..=k {
            let others: Vec<f64> = (0..=k).filter(|&j| j != i).map(|j| nodes[j]).collect();
            let denom: f64 = others.iter().map(|tj| nodes[i] - tj).product();
            // Coefficients of prod (t - tj) as a polynomial, then differentiate.
            let mut coeffs = vec![1.0];
            for &tj in &others {
                let mut next = vec![0.0; coeffs.len() + 1];
                for (p, &c) in coeffs.iter().enumerate() {
                    next[p + 1] += c;
                    next[p] -= c * tj;
                }
                coeffs = next;
            }
            let mut value = 0.0;
            for (p, &c) in coeffs.iter().enumerate() {
                if p >= order {
                    let falling: f64 = (0..order).map(|s| (p - s) as f64).product();
                    value += c * falling * t.powi((p - order) as i32);
                }
            }
            out[i] = value / denom;
        }
    }
}

/// Affine triangle geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleGeometry {
    pub vertices: [Point; 3],
    pub area: f64,
    pub grad_lambda: [Vector; 3],
    pub diameter: f64,
}

impl TriangleGeometry {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [a, b, c] = vertices;
        let e1 = b - a;
        let e2 = c - a;
        let det = e1.x * e2.y - e1.y * e2.x;
        let area = 0.5 * det;
        // grad lambda_i = -rot(opposite edge) / (2 area), rot(v) = (v.y, -v.x)
        let rot = |v: Vector| Vector::new(-v.y, v.x);
        let ga = rot(c - b) / det;
        let gb = rot(a - c) / det;
        let gc = rot(b - a) / det;
        let diameter = (b - a).norm().max((c - b).norm()).max((a - c).norm());
        Self {
            vertices,
            area,
            grad_lambda: [ga, gb, gc],
            diameter,
        }
    }

    pub fn point(&self, lam: [f64; 3]) -> Point {
        let [a, b, c] = self.vertices;
        Point::from(a.coords * lam[0] + b.coords * lam[1] + c.coords * lam[2])
    }

    /// Point from reference coordinates `(x, y)` with `a -> (0,0)`, `b -> (1,0)`, `c -> (0,1)`.
    pub fn reference_to_barycentric(r: [f64; 2]) -> [f64; 3] {
        [1.0 - r[0] - r[1], r[0], r[1]]
    }

    pub fn barycentric(&self, x: &Point) -> [f64; 3] {
        let a = self.vertices[0];
        let d = x - a;
        let lb = self.grad_lambda[1].dot(&d);
        let lc = self.grad_lambda[2].dot(&d);
        [1.0 - lb - lc, lb, lc]
    }

    pub fn centroid(&self) -> Point {
        self.point([1.0 / 3.0; 3])
    }
}
