//! Assembly of the coupled flux / pressure / fracture-pressure system.
//!
//! Unknowns are ordered flux, pressure, fracture pressure and the matrix has
//! the block form
//!
//! ```text
//! [  M   B*   0   ] [u  ]   [0  ]
//! [ -B   Cpp  CpG ] [p  ] = [f  ]
//! [  0   CGp  CGG ] [p_G]   [f_G]
//! ```
//!
//! Local matrices are computed on broken coefficients and pushed through the
//! prolongation of each space; essential data are moved to the right-hand
//! side on the way.

use nalgebra::Matrix2;
use rayon::prelude::*;
use sprs::{CsMat, TriMat};

use crate::error::Result;
use crate::fields::{self, BulkField, TriangleTables, MAX_NLOC};
use crate::mesh::{EdgeKind, PolygonalMesh};
use crate::problem::{BoundaryCondition, ExactSolution, ProblemSpec};
use crate::spaces::{build_s_h, build_v_h, build_w_h, DofMapS, DofMapV, DofMapW, Prolongation, SpaceConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    V = 0,
    S = 1,
    W = 2,
}

/// Dense local matrix on broken indices.
#[derive(Clone, Debug)]
pub(crate) struct LocalBlock {
    pub row: Block,
    pub col: Block,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub data: Vec<f64>,
}

impl LocalBlock {
    fn new(row: Block, col: Block, rows: Vec<usize>, cols: Vec<usize>) -> Self {
        let n = rows.len() * cols.len();
        Self {
            row,
            col,
            rows,
            cols,
            data: vec![0.0; n],
        }
    }

    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.cols.len() + j]
    }

    fn transpose(&self) -> LocalBlock {
        let mut t = LocalBlock::new(self.col, self.row, self.cols.clone(), self.rows.clone());
        for i in 0..self.rows.len() {
            for j in 0..self.cols.len() {
                *t.at(j, i) = self.data[i * self.cols.len() + j];
            }
        }
        t
    }
}

/// The three discrete spaces on one mesh.
#[derive(Clone, Debug)]
pub struct Spaces {
    pub config: SpaceConfig,
    pub s: DofMapS,
    pub v: DofMapV,
    pub w: DofMapW,
}

impl Spaces {
    pub fn build(mesh: &PolygonalMesh, config: SpaceConfig, spec: &ProblemSpec) -> Self {
        Self {
            config,
            s: build_s_h(mesh, config, Some(&spec.boundary)),
            v: build_v_h(mesh, config),
            w: build_w_h(mesh, config, &spec.tips),
        }
    }

    /// Block offsets `[0, nV, nV + nS, nV + nS + nW]`.
    pub fn offsets(&self) -> [usize; 4] {
        let (a, b, c) = (self.v.n_free(), self.s.n_free(), self.w.n_free());
        [0, a, a + b, a + b + c]
    }

    pub fn n_dofs(&self) -> usize {
        self.offsets()[3]
    }

    fn prolongation(&self, b: Block) -> &Prolongation {
        match b {
            Block::V => &self.v.prolongation,
            Block::S => &self.s.prolongation,
            Block::W => &self.w.prolongation,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsMat<f64>,
    pub rhs: Vec<f64>,
    pub offsets: [usize; 4],
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Copy of one block of the matrix.
    pub fn block(&self, row: Block, col: Block) -> CsMat<f64> {
        let (r0, r1) = (self.offsets[row as usize], self.offsets[row as usize + 1]);
        let (c0, c1) = (self.offsets[col as usize], self.offsets[col as usize + 1]);
        let mut t = TriMat::new((r1 - r0, c1 - c0));
        for (v, (i, j)) in self.matrix.iter() {
            if (r0..r1).contains(&i) && (c0..c1).contains(&j) {
                t.add_triplet(i - r0, j - c0, *v);
            }
        }
        t.to_csr()
    }
}

/// Free and broken coefficients of `(u_h, p_h, p_G,h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub p_gamma: Vec<f64>,
    pub u_broken: Vec<f64>,
    pub p_broken: Vec<f64>,
    pub w_broken: Vec<f64>,
}

impl DiscreteSolution {
    pub fn from_vector(spaces: &Spaces, x: &[f64]) -> Self {
        let o = spaces.offsets();
        let (u, p, w) = (&x[o[0]..o[1]], &x[o[1]..o[2]], &x[o[2]..o[3]]);
        Self {
            u: u.to_vec(),
            p: p.to_vec(),
            p_gamma: w.to_vec(),
            u_broken: spaces.v.prolongation.apply(u),
            p_broken: spaces.s.prolongation.apply(p),
            w_broken: spaces.w.prolongation.apply(w),
        }
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut x = self.u.clone();
        x.extend_from_slice(&self.p);
        x.extend_from_slice(&self.p_gamma);
        x
    }

    pub fn bulk<'a>(&'a self, mesh: &'a PolygonalMesh, spaces: &'a Spaces) -> BulkField<'a> {
        BulkField {
            mesh,
            basis: &spaces.s.basis,
            p: &self.p_broken,
            u: &self.u_broken,
        }
    }
}

pub(crate) fn quadrature_degree(k: usize) -> usize {
    2 * k + 2
}

fn inverse_permeabilities(mesh: &PolygonalMesh, spec: &ProblemSpec) -> Result<Vec<Matrix2<f64>>> {
    mesh.elements
        .iter()
        .enumerate()
        .map(|(i, el)| {
            let k = spec.permeability_at(i, &el.center)?;
            Ok(k.try_inverse().expect("definite matrix is invertible"))
        })
        .collect()
}

fn s_range(n: usize, t: usize) -> impl Iterator<Item = usize> {
    t * n..(t + 1) * n
}

fn v_range(n: usize, t: usize) -> impl Iterator<Item = usize> {
    t * 2 * n..(t + 1) * 2 * n
}

fn mass_blocks(mesh: &PolygonalMesh, v: &DofMapV, kinv: &[Matrix2<f64>]) -> Vec<LocalBlock> {
    let n = v.nloc();
    let tab = TriangleTables::new(&v.basis, quadrature_degree(v.basis.order));
    mesh.triangles
        .par_iter()
        .enumerate()
        .map(|(t, tri)| {
            let idx: Vec<usize> = v_range(n, t).collect();
            let mut b = LocalBlock::new(Block::V, Block::V, idx.clone(), idx);
            let ki = kinv[tri.element];
            for q in 0..tab.len() {
                let w = tab.weights[q] * 2.0 * tri.geometry.area;
                let phi = &tab.values[q];
                for c in 0..2 {
                    for d in 0..2 {
                        let kcd = ki[(c, d)] * w;
                        if kcd == 0.0 {
                            continue;
                        }
                        for i in 0..n {
                            for j in 0..n {
                                *b.at(c * n + i, d * n + j) += kcd * phi[i] * phi[j];
                            }
                        }
                    }
                }
            }
            b
        })
        .collect()
}

/// Rows: pressure, columns: flux. Represents `b_h(u, q)`.
fn bh_blocks(mesh: &PolygonalMesh, s: &DofMapS) -> Vec<LocalBlock> {
    let n = s.nloc();
    let k = s.basis.order;
    let tab = TriangleTables::new(&s.basis, quadrature_degree(k));
    let mut out: Vec<LocalBlock> = mesh
        .triangles
        .par_iter()
        .enumerate()
        .map(|(t, tri)| {
            let mut b = LocalBlock::new(Block::S, Block::V, s_range(n, t).collect(), v_range(n, t).collect());
            for q in 0..tab.len() {
                let w = tab.weights[q] * 2.0 * tri.geometry.area;
                let phi = &tab.values[q];
                let g = tab.gradients(q, &tri.geometry, n);
                for i in 0..n {
                    for j in 0..n {
                        *b.at(i, j) += w * phi[j] * g[i].x;
                        *b.at(i, n + j) += w * phi[j] * g[i].y;
                    }
                }
            }
            b
        })
        .collect();
    let (sp, sw) = fields::edge_points(quadrature_degree(k));
    let duals: Vec<usize> = mesh.edges_of(EdgeKind::Dual).map(|(i, _)| i).collect();
    out.par_extend(duals.par_iter().map(|&ei| {
        let e = &mesh.edges[ei];
        let ts = [e.triangles[0].unwrap(), e.triangles[1].unwrap()];
        let rows = ts.iter().flat_map(|&t| s_range(n, t)).collect();
        let cols = ts.iter().flat_map(|&t| v_range(n, t)).collect();
        let mut b = LocalBlock::new(Block::S, Block::V, rows, cols);
        let (a, bb) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
        for (&sq, &wq) in sp.iter().zip(&sw) {
            let x = a + (bb - a) * sq;
            let w = wq * e.length;
            let phi: Vec<[f64; MAX_NLOC]> = ts
                .iter()
                .map(|&t| fields::values(&s.basis, mesh.triangles[t].geometry.barycentric(&x)))
                .collect();
            for sa in 0..2 {
                let sign = if sa == 0 { 1.0 } else { -1.0 };
                for sb in 0..2 {
                    for i in 0..n {
                        for j in 0..n {
                            let c = -w * sign * phi[sa][i] * 0.5 * phi[sb][j];
                            *b.at(sa * n + i, sb * 2 * n + j) += c * e.normal.x;
                            *b.at(sa * n + i, sb * 2 * n + n + j) += c * e.normal.y;
                        }
                    }
                }
            }
        }
        b
    }));
    out
}

/// Rows: flux, columns: pressure. Represents `b_h*(p, v)` including the
/// outer boundary edges.
fn bh_star_blocks(mesh: &PolygonalMesh, s: &DofMapS) -> Vec<LocalBlock> {
    let n = s.nloc();
    let k = s.basis.order;
    let tab = TriangleTables::new(&s.basis, quadrature_degree(k));
    let mut out: Vec<LocalBlock> = mesh
        .triangles
        .par_iter()
        .enumerate()
        .map(|(t, tri)| {
            let mut b = LocalBlock::new(Block::V, Block::S, v_range(n, t).collect(), s_range(n, t).collect());
            for q in 0..tab.len() {
                let w = tab.weights[q] * 2.0 * tri.geometry.area;
                let psi = &tab.values[q];
                let g = tab.gradients(q, &tri.geometry, n);
                for i in 0..n {
                    for j in 0..n {
                        *b.at(i, j) -= w * psi[j] * g[i].x;
                        *b.at(n + i, j) -= w * psi[j] * g[i].y;
                    }
                }
            }
            b
        })
        .collect();
    let (sp, sw) = fields::edge_points(quadrature_degree(k));
    let primal: Vec<usize> = (0..mesh.n_primal_edges).collect();
    out.par_extend(primal.par_iter().map(|&ei| {
        let e = &mesh.edges[ei];
        let ts: Vec<usize> = e.triangles.iter().flatten().copied().collect();
        let rows = ts.iter().flat_map(|&t| v_range(n, t)).collect();
        let cols = ts.iter().flat_map(|&t| s_range(n, t)).collect();
        let mut b = LocalBlock::new(Block::V, Block::S, rows, cols);
        let (a, bb) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
        let sign = |side: usize| if side == 0 { 1.0 } else { -1.0 };
        let coeff = |sa: usize, sb: usize| match e.kind {
            EdgeKind::Boundary => 1.0,
            EdgeKind::Interior => 0.5 * sign(sa),
            _ => 0.5 * (sign(sa) + sign(sb)),
        };
        for (&sq, &wq) in sp.iter().zip(&sw) {
            let x = a + (bb - a) * sq;
            let w = wq * e.length;
            let phi: Vec<[f64; MAX_NLOC]> = ts
                .iter()
                .map(|&t| fields::values(&s.basis, mesh.triangles[t].geometry.barycentric(&x)))
                .collect();
            for sa in 0..ts.len() {
                for sb in 0..ts.len() {
                    let c = coeff(sa, sb) * w;
                    if c == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        for j in 0..n {
                            let v = c * phi[sa][i] * phi[sb][j];
                            *b.at(sa * 2 * n + i, sb * n + j) += v * e.normal.x;
                            *b.at(sa * 2 * n + n + i, sb * n + j) += v * e.normal.y;
                        }
                    }
                }
            }
        }
        b
    }));
    out
}

/// Interface coupling on fracture edges; `stiffness` adds the tangential
/// diffusion and `coupling` the transmission terms.
fn fracture_blocks(
    mesh: &PolygonalMesh,
    spec: &ProblemSpec,
    s: &DofMapS,
    w: &DofMapW,
    coupling: bool,
    stiffness: bool,
) -> Vec<LocalBlock> {
    let n = s.nloc();
    let k = s.basis.order;
    let nw = w.basis.len();
    let (sp, sw) = fields::edge_points(quadrature_degree(k));
    let list: Vec<(usize, usize)> = w.edges.iter().copied().enumerate().collect();
    list.par_iter()
        .flat_map_iter(|&(j, ei)| {
            let e = &mesh.edges[ei];
            let fr = e.fracture.expect("fracture edge");
            let c = spec.interface(fr.fracture, fr.segment);
            let ts = [e.triangles[0].unwrap(), e.triangles[1].unwrap()];
            let srows: Vec<usize> = ts.iter().flat_map(|&t| s_range(n, t)).collect();
            let wrows: Vec<usize> = (j * nw..(j + 1) * nw).collect();
            let mut pp = LocalBlock::new(Block::S, Block::S, srows.clone(), srows.clone());
            let mut pg = LocalBlock::new(Block::S, Block::W, srows, wrows.clone());
            let mut gg = LocalBlock::new(Block::W, Block::W, wrows.clone(), wrows);
            let (a, bb) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
            let h = e.length;
            for (&sq, &wq) in sp.iter().zip(&sw) {
                let x = a + (bb - a) * sq;
                let wt = wq * h;
                let mut chi = [0.0; 4];
                let mut dchi = [0.0; 4];
                w.basis.values(sq, &mut chi[..nw]);
                w.basis.derivatives(sq, &mut dchi[..nw]);
                if stiffness {
                    for i in 0..nw {
                        for l in 0..nw {
                            *gg.at(i, l) += wt * c.k_gamma * dchi[i] * dchi[l] / (h * h);
                        }
                    }
                }
                if !coupling {
                    continue;
                }
                let phi: Vec<[f64; MAX_NLOC]> = ts
                    .iter()
                    .map(|&t| fields::values(&s.basis, mesh.triangles[t].geometry.barycentric(&x)))
                    .collect();
                let sign = [1.0, -1.0];
                for sa in 0..2 {
                    for i in 0..n {
                        let qa = phi[sa][i];
                        for sb in 0..2 {
                            for l in 0..n {
                                let pb = phi[sb][l];
                                *pp.at(sa * n + i, sb * n + l) +=
                                    wt * (0.25 * qa * pb / c.alpha + sign[sa] * sign[sb] * qa * pb / c.eta);
                            }
                        }
                        for l in 0..nw {
                            *pg.at(sa * n + i, l) -= wt * 0.5 * qa * chi[l] / c.alpha;
                        }
                    }
                }
                for i in 0..nw {
                    for l in 0..nw {
                        *gg.at(i, l) += wt * chi[i] * chi[l] / c.alpha;
                    }
                }
            }
            let mut v = Vec::with_capacity(4);
            if coupling {
                let gp = pg.transpose();
                v.push(pp);
                v.push(pg);
                v.push(gp);
            }
            v.push(gg);
            v
        })
        .collect()
}

/// Source and Neumann terms on broken indices: `(S rows, W rows)`.
fn load_vectors(mesh: &PolygonalMesh, spec: &ProblemSpec, s: &DofMapS, w: &DofMapW) -> (Vec<f64>, Vec<f64>) {
    let n = s.nloc();
    let k = s.basis.order;
    let tab = TriangleTables::new(&s.basis, quadrature_degree(k));
    let tol = mesh.domain.tolerance();
    let (sp, sw) = fields::edge_points(quadrature_degree(k));
    let per_tri: Vec<[f64; MAX_NLOC]> = mesh
        .triangles
        .par_iter()
        .map(|tri| {
            let mut out = [0.0; MAX_NLOC];
            let probe = tri.geometry.centroid();
            for q in 0..tab.len() {
                let x = tri.geometry.point(tab.lam[q]);
                let f = (spec.source)(&x, &probe) * tab.weights[q] * 2.0 * tri.geometry.area;
                for (m, o) in out.iter_mut().enumerate().take(n) {
                    *o += f * tab.values[q][m];
                }
            }
            let e = &mesh.edges[tri.primal_edge];
            if e.kind == EdgeKind::Boundary {
                if let BoundaryCondition::Neumann(g) = spec.boundary.at(&e.midpoint(mesh), tol) {
                    let (a, b) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
                    for (&sq, &wq) in sp.iter().zip(&sw) {
                        let x = a + (b - a) * sq;
                        let psi = fields::values(&s.basis, tri.geometry.barycentric(&x));
                        let gv = g(&x, &probe) * wq * e.length;
                        for (m, o) in out.iter_mut().enumerate().take(n) {
                            *o -= gv * psi[m];
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut fs = vec![0.0; mesh.triangles.len() * n];
    for (t, v) in per_tri.iter().enumerate() {
        fs[t * n..(t + 1) * n].copy_from_slice(&v[..n]);
    }
    let nw = w.basis.len();
    let mut fw = vec![0.0; w.edges.len() * nw];
    for (j, &ei) in w.edges.iter().enumerate() {
        let e = &mesh.edges[ei];
        let fr = e.fracture.expect("fracture edge");
        let ell = mesh.domain.fractures[fr.fracture].thickness;
        let src = &spec.fracture_sources[fr.fracture];
        let (a, b) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
        for (&sq, &wq) in sp.iter().zip(&sw) {
            let x = a + (b - a) * sq;
            let mut chi = [0.0; 4];
            w.basis.values(sq, &mut chi[..nw]);
            let val = ell * src(&x) * wq * e.length;
            for m in 0..nw {
                fw[j * nw + m] += val * chi[m];
            }
        }
    }
    (fs, fw)
}

struct Scatter<'a> {
    spaces: &'a Spaces,
    offsets: [usize; 3],
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    rhs: Option<Vec<f64>>,
    sign: f64,
}

impl<'a> Scatter<'a> {
    fn new(spaces: &'a Spaces, offsets: [usize; 3], rhs_len: Option<usize>) -> Self {
        Self {
            spaces,
            offsets,
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
            rhs: rhs_len.map(|n| vec![0.0; n]),
            sign: 1.0,
        }
    }

    fn add(&mut self, b: &LocalBlock) {
        let pr = self.spaces.prolongation(b.row);
        let pc = self.spaces.prolongation(b.col);
        let (ro, co) = (self.offsets[b.row as usize], self.offsets[b.col as usize]);
        let nc = b.cols.len();
        for (i, &rb) in b.rows.iter().enumerate() {
            let row = pr.row(rb);
            if row.is_empty() {
                continue;
            }
            for (j, &cb) in b.cols.iter().enumerate() {
                let a = self.sign * b.data[i * nc + j];
                if a == 0.0 {
                    continue;
                }
                let col = pc.row(cb);
                let g = pc.lift[cb];
                for &(r, wr) in row {
                    for &(c, wc) in col {
                        self.rows.push(ro + r);
                        self.cols.push(co + c);
                        self.vals.push(wr * a * wc);
                    }
                    if g != 0.0 {
                        if let Some(rhs) = self.rhs.as_mut() {
                            rhs[ro + r] -= wr * a * g;
                        }
                    }
                }
            }
        }
    }

    fn add_vector(&mut self, block: Block, broken: &[f64]) {
        let p = self.spaces.prolongation(block);
        let o = self.offsets[block as usize];
        let rhs = self.rhs.as_mut().expect("rhs requested");
        for (b, &v) in broken.iter().enumerate() {
            for &(r, w) in p.row(b) {
                rhs[o + r] += w * v;
            }
        }
    }

    fn finish(self, shape: (usize, usize)) -> (CsMat<f64>, Option<Vec<f64>>) {
        let t = TriMat::from_triplets(shape, self.rows, self.cols, self.vals);
        (t.to_csr(), self.rhs)
    }
}

fn standalone(spaces: &Spaces, blocks: &[LocalBlock], shape: (usize, usize)) -> CsMat<f64> {
    let mut sc = Scatter::new(spaces, [0; 3], None);
    for b in blocks {
        sc.add(b);
    }
    sc.finish(shape).0
}

/// Weighted flux mass matrix `(K^-1 u, v)`.
pub fn assemble_mass(mesh: &PolygonalMesh, spaces: &Spaces, spec: &ProblemSpec) -> Result<CsMat<f64>> {
    let kinv = inverse_permeabilities(mesh, spec)?;
    let n = spaces.v.n_free();
    Ok(standalone(spaces, &mass_blocks(mesh, &spaces.v, &kinv), (n, n)))
}

/// `B` with `b_h(u, q) = q^T B u`, on free pressure and flux dofs.
pub fn assemble_bh(mesh: &PolygonalMesh, spaces: &Spaces) -> CsMat<f64> {
    standalone(
        spaces,
        &bh_blocks(mesh, &spaces.s),
        (spaces.s.n_free(), spaces.v.n_free()),
    )
}

/// `B*` with `b_h*(p, v) = v^T B* p`.
pub fn assemble_bh_star(mesh: &PolygonalMesh, spaces: &Spaces) -> CsMat<f64> {
    standalone(
        spaces,
        &bh_star_blocks(mesh, &spaces.s),
        (spaces.v.n_free(), spaces.s.n_free()),
    )
}

#[derive(Clone, Debug)]
pub struct InterfaceBlocks {
    pub pp: CsMat<f64>,
    pub p_gamma: CsMat<f64>,
    pub gamma_p: CsMat<f64>,
    pub gamma_gamma: CsMat<f64>,
}

pub fn assemble_interface(mesh: &PolygonalMesh, spaces: &Spaces, spec: &ProblemSpec) -> InterfaceBlocks {
    let blocks = fracture_blocks(mesh, spec, &spaces.s, &spaces.w, true, false);
    let (ns, nw) = (spaces.s.n_free(), spaces.w.n_free());
    let pick = |r: Block, c: Block, shape| {
        let sel: Vec<LocalBlock> = blocks.iter().filter(|b| b.row == r && b.col == c).cloned().collect();
        standalone(spaces, &sel, shape)
    };
    InterfaceBlocks {
        pp: pick(Block::S, Block::S, (ns, ns)),
        p_gamma: pick(Block::S, Block::W, (ns, nw)),
        gamma_p: pick(Block::W, Block::S, (nw, ns)),
        gamma_gamma: pick(Block::W, Block::W, (nw, nw)),
    }
}

/// Tangential diffusion `<K_G p_G', q_G'>` on the fractures.
pub fn assemble_fracture_stiffness(mesh: &PolygonalMesh, spaces: &Spaces, spec: &ProblemSpec) -> CsMat<f64> {
    let nw = spaces.w.n_free();
    standalone(
        spaces,
        &fracture_blocks(mesh, spec, &spaces.s, &spaces.w, false, true),
        (nw, nw),
    )
}

/// Right-hand side: sources, Neumann data and the lifting of essential data.
pub fn assemble_rhs(mesh: &PolygonalMesh, spaces: &Spaces, spec: &ProblemSpec) -> Result<Vec<f64>> {
    Ok(assemble_system_with(mesh, spaces, spec)?.rhs)
}

/// Assembles the full system on a mesh.
pub fn assemble_system(
    mesh: &PolygonalMesh,
    spec: &ProblemSpec,
    config: SpaceConfig,
) -> Result<(LinearSystem, Spaces)> {
    spec.validate()?;
    let spaces = Spaces::build(mesh, config, spec);
    let sys = assemble_system_with(mesh, &spaces, spec)?;
    Ok((sys, spaces))
}

pub fn assemble_system_with(mesh: &PolygonalMesh, spaces: &Spaces, spec: &ProblemSpec) -> Result<LinearSystem> {
    let kinv = inverse_permeabilities(mesh, spec)?;
    let o = spaces.offsets();
    let mut sc = Scatter::new(spaces, [o[0], o[1], o[2]], Some(o[3]));
    for b in mass_blocks(mesh, &spaces.v, &kinv) {
        sc.add(&b);
    }
    for b in bh_star_blocks(mesh, &spaces.s) {
        sc.add(&b);
    }
    sc.sign = -1.0;
    for b in bh_blocks(mesh, &spaces.s) {
        sc.add(&b);
    }
    sc.sign = 1.0;
    for b in fracture_blocks(mesh, spec, &spaces.s, &spaces.w, true, true) {
        sc.add(&b);
    }
    let (fs, fw) = load_vectors(mesh, spec, &spaces.s, &spaces.w);
    sc.add_vector(Block::S, &fs);
    sc.add_vector(Block::W, &fw);
    let (matrix, rhs) = sc.finish((o[3], o[3]));
    Ok(LinearSystem {
        matrix,
        rhs: rhs.unwrap(),
        offsets: o,
    })
}

/// Nodal interpolant of an exact solution in the discrete spaces.
pub fn interpolate(mesh: &PolygonalMesh, spaces: &Spaces, exact: &ExactSolution) -> Result<DiscreteSolution> {
    let basis = &spaces.s.basis;
    let n = basis.len();
    let mut pb = vec![0.0; mesh.triangles.len() * n];
    let mut ub = vec![0.0; mesh.triangles.len() * 2 * n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let probe = tri.geometry.centroid();
        for m in 0..n {
            let x = tri.geometry.point(basis.node_barycentric(m));
            pb[t * n + m] = (exact.pressure)(&x, &probe);
            let u = (exact.flux)(&x, &probe);
            ub[t * 2 * n + m] = u.x;
            ub[t * 2 * n + n + m] = u.y;
        }
    }
    let nw = spaces.w.basis.len();
    let mut wb = vec![0.0; spaces.w.edges.len() * nw];
    for (j, &ei) in spaces.w.edges.iter().enumerate() {
        let e = &mesh.edges[ei];
        let f = e.fracture.expect("fracture edge").fracture;
        let (a, b) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
        for m in 0..nw {
            let x = a + (b - a) * (m as f64 / (nw - 1) as f64);
            wb[j * nw + m] = (exact.fracture_pressure[f])(&x);
        }
    }
    let mut x = spaces.v.prolongation.restrict(&ub)?;
    x.extend(spaces.s.prolongation.restrict(&pb)?);
    x.extend(spaces.w.prolongation.restrict(&wb)?);
    Ok(DiscreteSolution::from_vector(spaces, &x))
}
