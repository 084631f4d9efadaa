//! Gauss rules on the reference edge `[0, 1]` and the reference triangle
//! `{(x, y) : x, y >= 0, x + y <= 1}`.
//!
//! Triangle rules are collapsed (Duffy) products of Gauss-Legendre rules, so
//! all weights are positive and any exactness degree is available.

use std::f64::consts::PI;

/// Quadrature points and weights on the reference triangle and edge.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    /// Polynomial degree integrated exactly on both entities.
    pub degree: usize,
    /// Points `(x, y)` on the reference triangle; weights sum to 1/2.
    pub triangle_points: Vec<[f64; 2]>,
    pub triangle_weights: Vec<f64>,
    /// Points `t` on `[0, 1]`; weights sum to 1.
    pub edge_points: Vec<f64>,
    pub edge_weights: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "need at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> (Vec<f64>, Vec<f64>) {
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|&t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|&v| 0.5 * v).collect(),
    )
}

/// Collapsed Gauss rule on the reference triangle exact for degree `degree`.
pub fn triangle_rule(degree: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    // The Duffy Jacobian adds one degree in the collapsed direction.
    let (u, wu) = edge_rule(degree + 1);
    let (v, wv) = edge_rule(degree);
    let mut pts = Vec::with_capacity(u.len() * v.len());
    let mut wts = Vec::with_capacity(u.len() * v.len());
    for (&ui, &wi) in u.iter().zip(&wu) {
        for (&vj, &wj) in v.iter().zip(&wv) {
            pts.push([ui, vj * (1.0 - ui)]);
            wts.push(wi * wj * (1.0 - ui));
        }
    }
    (pts, wts)
}

/// Rule exact to `degree` on both the reference triangle and edge.
pub fn quadrature(degree: usize) -> QuadratureRule {
    let (triangle_points, triangle_weights) = triangle_rule(degree);
    let (edge_points, edge_weights) = edge_rule(degree);
    QuadratureRule {
        degree,
        triangle_points,
        triangle_weights,
        edge_points,
        edge_weights,
    }
}
