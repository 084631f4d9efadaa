//! Residual a posteriori error estimator, its localization, data
//! oscillation and exact errors.
//!
//! The eight term families are
//!
//! 1. `||K^-1/2 u_h + K^1/2 grad p_h||^2` per triangle,
//! 2. `h^2 ||f - div u_h||^2` per triangle,
//! 3. `h^-1 ||[p_h]||^2` on dual edges,
//! 4. `h ||[u_h . n]||^2` on interior primal edges (and `u_h . n - g_N` on
//!    Neumann edges),
//! 5. `h^2 ||l f_G + (K_G p_G')' + [u_h . n]||^2` on fracture edges,
//! 6. `h_z [K_G p_G']_z^2 / max K_G` at interior fracture nodes,
//! 7. `h ||({p_h} - p_G) / alpha - [u_h . n]||^2` on fracture edges,
//! 8. `h ||{u_h . n} - [p_h] / eta||^2` on fracture edges.
//!
//! The global estimator is the sum of the square roots of the eight sums.

use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;

use crate::assembly::{quadrature_degree, DiscreteSolution, Spaces};
use crate::basis::TriangleLagrange;
use crate::error::{Error, Result};
use crate::fields::{self, BulkField, TriangleTables};
use crate::mesh::{EdgeKind, PolygonalMesh};
use crate::problem::{BoundaryCondition, ExactSolution, ProblemSpec};
use crate::quadrature::edge_rule;
use crate::Vector;

pub const N_TERMS: usize = 8;

/// One squared contribution, shared equally by up to four elements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contribution {
    pub term: usize,
    pub value: f64,
    owners: [usize; 4],
    n_owners: usize,
}

impl Contribution {
    fn new(term: usize, value: f64, owners: &[usize]) -> Self {
        let mut o = [usize::MAX; 4];
        let mut n = 0;
        for &e in owners {
            if !o[..n].contains(&e) {
                o[n] = e;
                n += 1;
            }
        }
        Self {
            term,
            value,
            owners: o,
            n_owners: n,
        }
    }

    pub fn owners(&self) -> &[usize] {
        &self.owners[..self.n_owners]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorBreakdown {
    /// Square roots of the eight term sums.
    pub terms: [f64; N_TERMS],
    /// Sum of `terms`.
    pub eta: f64,
    /// Every squared local contribution with its owning elements.
    pub contributions: Vec<Contribution>,
    /// Squared terms 5, 7, 8 per fracture edge, in fracture order.
    pub fracture_edges: Vec<[f64; 3]>,
    pub osc: f64,
}

impl EstimatorBreakdown {
    pub fn squared_total(&self) -> f64 {
        self.terms.iter().map(|t| t * t).sum()
    }
}

fn side_traces(field: &BulkField, ts: &[usize], x: &crate::Point) -> ([f64; 2], [Vector; 2]) {
    let mut p = [0.0; 2];
    let mut u = [Vector::zeros(); 2];
    for (s, &t) in ts.iter().enumerate() {
        let lam = field.locate_in(t, x);
        p[s] = field.pressure(t, lam);
        u[s] = field.flux(t, lam);
    }
    (p, u)
}

fn permeabilities(mesh: &PolygonalMesh, spec: &ProblemSpec) -> Result<Vec<(Matrix2<f64>, Matrix2<f64>)>> {
    mesh.elements
        .iter()
        .enumerate()
        .map(|(i, el)| {
            let k = spec.permeability_at(i, &el.center)?;
            Ok((k, k.try_inverse().expect("definite matrix is invertible")))
        })
        .collect()
}

pub fn compute_estimator(
    mesh: &PolygonalMesh,
    spaces: &Spaces,
    spec: &ProblemSpec,
    sol: &DiscreteSolution,
) -> Result<EstimatorBreakdown> {
    let k = spaces.config.order;
    let deg = quadrature_degree(k);
    let perm = permeabilities(mesh, spec)?;
    let field = sol.bulk(mesh, spaces);
    let tab = TriangleTables::new(&spaces.s.basis, deg);
    let (sp, sw) = edge_rule(deg);
    let tol = mesh.domain.tolerance();

    let mut contributions: Vec<Contribution> = mesh
        .triangles
        .par_iter()
        .enumerate()
        .flat_map_iter(|(t, tri)| {
            let (kk, ki) = perm[tri.element];
            let probe = tri.geometry.centroid();
            let h = tri.geometry.diameter;
            let (mut t1, mut t2) = (0.0, 0.0);
            for q in 0..tab.len() {
                let lam = tab.lam[q];
                let w = tab.weights[q] * 2.0 * tri.geometry.area;
                let u = field.flux(t, lam);
                let r = u + kk * field.pressure_gradient(t, lam);
                t1 += w * r.dot(&(ki * r));
                let x = tri.geometry.point(lam);
                let d = (spec.source)(&x, &probe) - field.flux_divergence(t, lam);
                t2 += w * h * h * d * d;
            }
            [
                Contribution::new(0, t1, &[tri.element]),
                Contribution::new(1, t2, &[tri.element]),
            ]
        })
        .collect();

    let edge_terms: Vec<Contribution> = (0..mesh.edges.len())
        .into_par_iter()
        .filter_map(|ei| {
            let e = &mesh.edges[ei];
            let (a, b) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
            let owners: Vec<usize> = e.elements.iter().flatten().copied().collect();
            let ts: Vec<usize> = e.triangles.iter().flatten().copied().collect();
            match e.kind {
                EdgeKind::Dual => {
                    let mut s = 0.0;
                    for (&sq, &wq) in sp.iter().zip(&sw) {
                        let x = a + (b - a) * sq;
                        let (p, _) = side_traces(&field, &ts, &x);
                        s += wq * e.length * (p[0] - p[1]).powi(2);
                    }
                    Some(Contribution::new(2, s / e.length, &owners))
                }
                EdgeKind::Interior => {
                    let mut s = 0.0;
                    for (&sq, &wq) in sp.iter().zip(&sw) {
                        let x = a + (b - a) * sq;
                        let (_, u) = side_traces(&field, &ts, &x);
                        s += wq * e.length * ((u[0] - u[1]).dot(&e.normal)).powi(2);
                    }
                    Some(Contribution::new(3, e.length * s, &owners))
                }
                EdgeKind::Boundary => match spec.boundary.at(&e.midpoint(mesh), tol) {
                    BoundaryCondition::Neumann(g) => {
                        let probe = mesh.triangles[ts[0]].geometry.centroid();
                        let mut s = 0.0;
                        for (&sq, &wq) in sp.iter().zip(&sw) {
                            let x = a + (b - a) * sq;
                            let (_, u) = side_traces(&field, &ts, &x);
                            s += wq * e.length * (u[0].dot(&e.normal) - g(&x, &probe)).powi(2);
                        }
                        Some(Contribution::new(3, e.length * s, &owners))
                    }
                    BoundaryCondition::Dirichlet(_) => None,
                },
                EdgeKind::Fracture => None,
            }
        })
        .collect();
    contributions.extend(edge_terms);

    let fracture_edges: Vec<[f64; 3]> = spaces
        .w
        .edges
        .par_iter()
        .enumerate()
        .map(|(j, &ei)| {
            let e = &mesh.edges[ei];
            let fr = e.fracture.expect("fracture edge");
            let c = spec.interface(fr.fracture, fr.segment);
            let src = &spec.fracture_sources[fr.fracture];
            let ts = [e.triangles[0].unwrap(), e.triangles[1].unwrap()];
            let (a, b) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
            let h = e.length;
            let mut out = [0.0; 3];
            for (&sq, &wq) in sp.iter().zip(&sw) {
                let x = a + (b - a) * sq;
                let w = wq * h;
                let (p, u) = side_traces(&field, &ts, &x);
                let pg = fields::edge_value(&spaces.w.basis, &sol.w_broken, j, sq);
                let d2 = fields::edge_second_derivative(&spaces.w.basis, &sol.w_broken, j, sq) / (h * h);
                let (un0, un1) = (u[0].dot(&e.normal), u[1].dot(&e.normal));
                let jump_un = un0 - un1;
                let avg_un = 0.5 * (un0 + un1);
                let r5 = c.thickness * src(&x) + c.k_gamma * d2 + jump_un;
                let r7 = (0.5 * (p[0] + p[1]) - pg) / c.alpha - jump_un;
                let r8 = avg_un - (p[0] - p[1]) / c.eta;
                out[0] += w * h * h * r5 * r5;
                out[1] += w * h * r7 * r7;
                out[2] += w * h * r8 * r8;
            }
            out
        })
        .collect();
    for (j, &ei) in spaces.w.edges.iter().enumerate() {
        let owners: Vec<usize> = mesh.edges[ei].elements.iter().flatten().copied().collect();
        for (i, term) in [4, 6, 7].into_iter().enumerate() {
            contributions.push(Contribution::new(term, fracture_edges[j][i], &owners));
        }
    }

    // Tangential flux jumps at interior fracture nodes.
    for fm in &mesh.fractures {
        for z in 1..fm.edges.len() {
            let (el, er) = (fm.edges[z - 1], fm.edges[z]);
            let (jl, jr) = (spaces.w.edge_index[el].unwrap(), spaces.w.edge_index[er].unwrap());
            let (hl, hr) = (mesh.edges[el].length, mesh.edges[er].length);
            let kg = |ei: usize| {
                let fr = mesh.edges[ei].fracture.unwrap();
                spec.interface(fr.fracture, fr.segment).k_gamma
            };
            let (kl, kr) = (kg(el), kg(er));
            let dl = fields::edge_derivative(&spaces.w.basis, &sol.w_broken, jl, 1.0) / hl;
            let dr = fields::edge_derivative(&spaces.w.basis, &sol.w_broken, jr, 0.0) / hr;
            let jump = (kl * dl - kr * dr) / kl.max(kr).sqrt();
            let owners: Vec<usize> = [el, er]
                .iter()
                .flat_map(|&ei| mesh.edges[ei].elements.iter().flatten().copied())
                .collect();
            contributions.push(Contribution::new(5, hl.max(hr) * jump * jump, &owners));
        }
    }

    let mut sums = [0.0; N_TERMS];
    for c in &contributions {
        sums[c.term] += c.value;
    }
    let terms = sums.map(f64::sqrt);
    Ok(EstimatorBreakdown {
        terms,
        eta: terms.iter().sum(),
        contributions,
        fracture_edges,
        osc: data_oscillation(mesh, spec, k),
    })
}

/// Squared indicator per primal element. Shared contributions are split
/// equally among their owners, so the indicators sum to the total of the
/// squared terms.
pub fn localize(breakdown: &EstimatorBreakdown, mesh: &PolygonalMesh) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_elements()];
    for c in &breakdown.contributions {
        let share = c.value / c.owners().len() as f64;
        for &e in c.owners() {
            out[e] += share;
        }
    }
    out
}

fn projection_error_triangle(basis: &TriangleLagrange, tab: &TriangleTables, vals: &[f64], area: f64) -> f64 {
    let n = basis.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for q in 0..tab.len() {
        let w = tab.weights[q] * 2.0 * area;
        let phi = &tab.values[q];
        for i in 0..n {
            rhs[i] += w * vals[q] * phi[i];
            for j in 0..n {
                m[(i, j)] += w * phi[i] * phi[j];
            }
        }
    }
    let c = m.cholesky().expect("mass matrix is definite").solve(&rhs);
    (0..tab.len())
        .map(|q| {
            let w = tab.weights[q] * 2.0 * area;
            let ph: f64 = (0..n).map(|i| c[i] * tab.values[q][i]).sum();
            w * (vals[q] - ph).powi(2)
        })
        .sum()
}

fn projection_error_edge(k: usize, pts: &[f64], wts: &[f64], vals: &[f64], length: f64) -> f64 {
    let basis = crate::basis::EdgeLagrange::new(k);
    let n = basis.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    let mut phi = vec![[0.0; 4]; pts.len()];
    for (q, &s) in pts.iter().enumerate() {
        basis.values(s, &mut phi[q][..n]);
        let w = wts[q] * length;
        for i in 0..n {
            rhs[i] += w * vals[q] * phi[q][i];
            for j in 0..n {
                m[(i, j)] += w * phi[q][i] * phi[q][j];
            }
        }
    }
    let c = m.cholesky().expect("mass matrix is definite").solve(&rhs);
    pts.iter()
        .enumerate()
        .map(|(q, _)| {
            let ph: f64 = (0..n).map(|i| c[i] * phi[q][i]).sum();
            wts[q] * length * (vals[q] - ph).powi(2)
        })
        .sum()
}

/// Quadrature degree above `2k` for projecting non-polynomial data.
const OSC_EXTRA_DEGREE: usize = 12;

/// `osc(f, f_G)` with `L^2` projections onto degree-`k` polynomials.
pub fn data_oscillation(mesh: &PolygonalMesh, spec: &ProblemSpec, k: usize) -> f64 {
    let basis = TriangleLagrange::new(k);
    let deg = 2 * k + OSC_EXTRA_DEGREE;
    let tab = TriangleTables::new(&basis, deg);
    let bulk: f64 = mesh
        .triangles
        .par_iter()
        .map(|tri| {
            let probe = tri.geometry.centroid();
            let vals: Vec<f64> = tab
                .lam
                .iter()
                .map(|&l| (spec.source)(&tri.geometry.point(l), &probe))
                .collect();
            let h = tri.geometry.diameter;
            h * h * projection_error_triangle(&basis, &tab, &vals, tri.geometry.area)
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let (sp, sw) = edge_rule(deg);
    let mut frac = 0.0;
    for fm in &mesh.fractures {
        let ell = mesh.domain.fractures[fm.fracture].thickness;
        let src = &spec.fracture_sources[fm.fracture];
        for &ei in &fm.edges {
            let e = &mesh.edges[ei];
            let (a, b) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
            let vals: Vec<f64> = sp.iter().map(|&s| ell * src(&(a + (b - a) * s))).collect();
            frac += e.length * e.length * projection_error_edge(k, &sp, &sw, &vals, e.length);
        }
    }
    (bulk + frac).sqrt()
}

/// Components of the error in the norm of the analysis.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ErrorReport {
    /// `||K^-1/2 (u - u_h)||`.
    pub err_q: f64,
    /// Pressure part, from its four squared components below.
    pub err_v: f64,
    /// `||alpha^-1/2 ({e_p} - e_G)||`, `||eta^-1/2 [e_p]||`,
    /// `||K^1/2 grad e_p||`, `||K_G^1/2 e_G'||`.
    pub v_parts: [f64; 4],
    pub flux_jump: f64,
    pub flux_average: f64,
    pub sdg: f64,
    /// `eta / sdg`; absent when the error vanishes.
    pub ei: Option<f64>,
}

pub fn true_error(
    mesh: &PolygonalMesh,
    spaces: &Spaces,
    spec: &ProblemSpec,
    sol: &DiscreteSolution,
    exact: Option<&ExactSolution>,
    eta: f64,
) -> Result<ErrorReport> {
    let exact = exact.ok_or(Error::NoExactSolution)?;
    let k = spaces.config.order;
    let deg = 2 * k + 4;
    let perm = permeabilities(mesh, spec)?;
    let field = sol.bulk(mesh, spaces);
    let tab = TriangleTables::new(&spaces.s.basis, deg);
    let bulk: Vec<(f64, f64)> = mesh
        .triangles
        .par_iter()
        .enumerate()
        .map(|(t, tri)| {
            let (kk, ki) = perm[tri.element];
            let probe = tri.geometry.centroid();
            let (mut eq, mut eg) = (0.0, 0.0);
            for q in 0..tab.len() {
                let lam = tab.lam[q];
                let w = tab.weights[q] * 2.0 * tri.geometry.area;
                let x = tri.geometry.point(lam);
                let u = (exact.flux)(&x, &probe);
                let du = u - field.flux(t, lam);
                eq += w * du.dot(&(ki * du));
                let dg = -(ki * u) - field.pressure_gradient(t, lam);
                eg += w * dg.dot(&(kk * dg));
            }
            (eq, eg)
        })
        .collect();
    let err_q2: f64 = bulk.iter().map(|b| b.0).sum();
    let grad2: f64 = bulk.iter().map(|b| b.1).sum();

    let (sp, sw) = edge_rule(deg);
    let mut avg2 = 0.0;
    let mut jump2 = 0.0;
    let mut tang2 = 0.0;
    let mut fjump2 = 0.0;
    let mut favg2 = 0.0;
    for (j, &ei) in spaces.w.edges.iter().enumerate() {
        let e = &mesh.edges[ei];
        let fr = e.fracture.unwrap();
        let c = spec.interface(fr.fracture, fr.segment);
        let ts = [e.triangles[0].unwrap(), e.triangles[1].unwrap()];
        let probes = ts.map(|t| mesh.triangles[t].geometry.centroid());
        let (a, b) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
        let h = e.length;
        let tangent = (b - a) / h;
        for (&sq, &wq) in sp.iter().zip(&sw) {
            let x = a + (b - a) * sq;
            let w = wq * h;
            let (p, u) = side_traces(&field, &ts, &x);
            let pe = [(exact.pressure)(&x, &probes[0]), (exact.pressure)(&x, &probes[1])];
            let ue = [(exact.flux)(&x, &probes[0]), (exact.flux)(&x, &probes[1])];
            let ep = [pe[0] - p[0], pe[1] - p[1]];
            let eg =
                (exact.fracture_pressure[fr.fracture])(&x) - fields::edge_value(&spaces.w.basis, &sol.w_broken, j, sq);
            let deg_t = (exact.fracture_gradient[fr.fracture])(&x).dot(&tangent)
                - fields::edge_derivative(&spaces.w.basis, &sol.w_broken, j, sq) / h;
            avg2 += w * (0.5 * (ep[0] + ep[1]) - eg).powi(2) / c.alpha;
            jump2 += w * (ep[0] - ep[1]).powi(2) / c.eta;
            tang2 += w * c.k_gamma * deg_t * deg_t;
            let eu = [(ue[0] - u[0]).dot(&e.normal), (ue[1] - u[1]).dot(&e.normal)];
            fjump2 += w * (eu[0] - eu[1]).powi(2);
            favg2 += w * (0.5 * (eu[0] + eu[1])).powi(2);
        }
    }
    let v_parts = [avg2.sqrt(), jump2.sqrt(), grad2.sqrt(), tang2.sqrt()];
    let err_v2 = avg2 + jump2 + grad2 + tang2;
    let sdg2 = err_q2 + err_v2 + fjump2 + favg2;
    let sdg = sdg2.sqrt();
    Ok(ErrorReport {
        err_q: err_q2.sqrt(),
        err_v: err_v2.sqrt(),
        v_parts,
        flux_jump: fjump2.sqrt(),
        flux_average: favg2.sqrt(),
        sdg,
        ei: (sdg > 1e-10).then(|| eta / sdg),
    })
}
