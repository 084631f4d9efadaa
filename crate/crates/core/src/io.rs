//! Plain-text artifacts: history CSV, legacy VTK fields, mesh JSON, SVG
//! convergence plots and Matrix Market system dumps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaptivity::{ConvergenceHistory, IterationRecord};
use crate::assembly::{DiscreteSolution, LinearSystem, Spaces};
use crate::error::{Error, Result};
use crate::fields;
use crate::mesh::{DomainSpec, PolygonalMesh};
use crate::Point;

pub const HISTORY_COLUMNS: [&str; 21] = [
    "iteration",
    "N",
    "T1",
    "T2",
    "T3",
    "T4",
    "T5",
    "T6",
    "T7",
    "T8",
    "eta",
    "osc",
    "err_Q",
    "err_V",
    "err_sdg",
    "EI",
    "n_elements",
    "rho_E",
    "t_solve_ms",
    "t_estimate_ms",
    "halt",
];

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn history_row(r: &IterationRecord, halt: &str) -> Vec<String> {
    let mut row = vec![r.iteration.to_string(), r.n_dofs.to_string()];
    row.extend(r.terms.iter().map(|&t| num(t)));
    row.push(num(r.eta));
    row.push(num(r.osc));
    match &r.error {
        Some(e) => {
            row.push(num(e.err_q));
            row.push(num(e.err_v));
            row.push(num(e.sdg));
            row.push(e.ei.map(num).unwrap_or_default());
        }
        None => row.extend(std::iter::repeat_n(String::new(), 4)),
    }
    row.push(r.n_elements.to_string());
    row.push(num(r.rho_e));
    row.push(format!("{:.3}", r.t_solve_ms));
    row.push(format!("{:.3}", r.t_estimate_ms));
    row.push(halt.to_string());
    row
}

/// Writes one row per iteration. Error columns are left empty without an
/// exact solution; the halt reason appears on the last row only.
pub fn write_history_csv<W: Write>(history: &ConvergenceHistory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HISTORY_COLUMNS).map_err(csv_error)?;
    let last = history.records.len().saturating_sub(1);
    for (i, r) in history.records.iter().enumerate() {
        let halt = if i == last {
            format!("{:?}", history.halt)
        } else {
            String::new()
        };
        w.write_record(history_row(r, &halt)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn history_csv_string(history: &ConvergenceHistory) -> Result<String> {
    let mut buf = Vec::new();
    write_history_csv(history, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Parsed history table: header and string rows.
pub fn read_history_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_error)?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()).map_err(csv_error))
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

/// Legacy VTK dataset as written by this module.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VtkDataset {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    /// Name to (components, values).
    pub point_data: BTreeMap<String, (usize, Vec<f64>)>,
    pub cell_data: BTreeMap<String, (usize, Vec<f64>)>,
}

const VTK_LINE: u8 = 3;
const VTK_TRIANGLE: u8 = 5;

impl VtkDataset {
    pub fn to_vtk_string(&self) -> String {
        let mut s = String::new();
        s.push_str("# vtk DataFile Version 3.0\n");
        let _ = writeln!(s, "{}", self.title);
        s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
        let _ = writeln!(s, "POINTS {} double", self.points.len());
        for p in &self.points {
            let _ = writeln!(s, "{} {} {}", num(p[0]), num(p[1]), num(p[2]));
        }
        let size: usize = self.cells.iter().map(|c| c.len() + 1).sum();
        let _ = writeln!(s, "CELLS {} {}", self.cells.len(), size);
        for c in &self.cells {
            let ids: Vec<String> = c.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "{} {}", c.len(), ids.join(" "));
        }
        let _ = writeln!(s, "CELL_TYPES {}", self.cell_types.len());
        for t in &self.cell_types {
            let _ = writeln!(s, "{t}");
        }
        let section = |s: &mut String, head: &str, n: usize, data: &BTreeMap<String, (usize, Vec<f64>)>| {
            if data.is_empty() {
                return;
            }
            let _ = writeln!(s, "{head} {n}");
            for (name, (nc, vals)) in data {
                if *nc == 1 {
                    let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                    for v in vals {
                        let _ = writeln!(s, "{}", num(*v));
                    }
                } else {
                    let _ = writeln!(s, "VECTORS {name} double");
                    for v in vals.chunks(*nc) {
                        let _ = writeln!(s, "{} {} {}", num(v[0]), num(v[1]), num(*v.get(2).unwrap_or(&0.0)));
                    }
                }
            }
        };
        section(&mut s, "POINT_DATA", self.points.len(), &self.point_data);
        section(&mut s, "CELL_DATA", self.cells.len(), &self.cell_data);
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Io(format!("malformed VTK file: {m}"));
        let mut lines = text.lines();
        let mut next = || lines.next().ok_or_else(|| bad("unexpected end of file"));
        if !next()?.starts_with("# vtk DataFile") {
            return Err(bad("missing header"));
        }
        let mut ds = VtkDataset {
            title: next()?.to_string(),
            ..Default::default()
        };
        if next()?.trim() != "ASCII" {
            return Err(bad("only ASCII files are supported"));
        }
        let mut tokens = text.lines().skip(3).flat_map(str::split_whitespace).peekable();
        let mut take = |what: &str| tokens.next().ok_or_else(|| bad(what));
        let f = |t: &str| t.parse::<f64>().map_err(|_| bad(t));
        let u = |t: &str| t.parse::<usize>().map_err(|_| bad(t));
        let mut target: Option<bool> = None;
        loop {
            let key = match take("keyword") {
                Ok(k) => k,
                Err(_) => break,
            };
            match key {
                "DATASET" => {
                    if take("type")? != "UNSTRUCTURED_GRID" {
                        return Err(bad("only unstructured grids are supported"));
                    }
                }
                "POINTS" => {
                    let n = u(take("count")?)?;
                    take("type")?;
                    for _ in 0..n {
                        ds.points.push([f(take("x")?)?, f(take("y")?)?, f(take("z")?)?]);
                    }
                }
                "CELLS" => {
                    let n = u(take("count")?)?;
                    take("size")?;
                    for _ in 0..n {
                        let m = u(take("cell size")?)?;
                        let c = (0..m).map(|_| u(take("id")?)).collect::<Result<Vec<_>>>()?;
                        ds.cells.push(c);
                    }
                }
                "CELL_TYPES" => {
                    let n = u(take("count")?)?;
                    for _ in 0..n {
                        ds.cell_types
                            .push(take("cell type")?.parse().map_err(|_| bad("cell type"))?);
                    }
                }
                "POINT_DATA" => {
                    take("count")?;
                    target = Some(true);
                }
                "CELL_DATA" => {
                    take("count")?;
                    target = Some(false);
                }
                "SCALARS" | "VECTORS" => {
                    let name = take("name")?.to_string();
                    take("type")?;
                    let on_points = target.ok_or_else(|| bad("data before POINT_DATA/CELL_DATA"))?;
                    let n = if on_points { ds.points.len() } else { ds.cells.len() };
                    let nc = if key == "SCALARS" {
                        take("components")?;
                        if take("LOOKUP_TABLE")? != "LOOKUP_TABLE" {
                            return Err(bad("expected LOOKUP_TABLE"));
                        }
                        take("table")?;
                        1
                    } else {
                        3
                    };
                    let vals = (0..n * nc).map(|_| f(take("value")?)).collect::<Result<Vec<_>>>()?;
                    let map = if on_points {
                        &mut ds.point_data
                    } else {
                        &mut ds.cell_data
                    };
                    map.insert(name, (nc, vals));
                }
                other => return Err(bad(other)),
            }
        }
        Ok(ds)
    }
}

/// Bulk fields on the sub-triangle mesh. Every sub-triangle has its own
/// three points so discontinuous traces are kept; pressure and flux are
/// nodal values, element id, subdomain and (optionally) the element
/// indicator are cell values.
pub fn bulk_dataset(
    mesh: &PolygonalMesh,
    spaces: &Spaces,
    sol: &DiscreteSolution,
    indicators: Option<&[f64]>,
) -> VtkDataset {
    let field = sol.bulk(mesh, spaces);
    let nt = mesh.triangles.len();
    let mut ds = VtkDataset {
        title: "sdgfrac bulk fields".into(),
        ..Default::default()
    };
    let (mut p, mut u) = (Vec::with_capacity(3 * nt), Vec::with_capacity(9 * nt));
    let (mut elem, mut sub, mut ind) = (Vec::new(), Vec::new(), Vec::new());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for (i, x) in tri.geometry.vertices.iter().enumerate() {
            ds.points.push([x.x, x.y, 0.0]);
            let mut lam = [0.0; 3];
            lam[i] = 1.0;
            p.push(field.pressure(t, lam));
            let v = field.flux(t, lam);
            u.extend([v.x, v.y, 0.0]);
        }
        ds.cells.push(vec![3 * t, 3 * t + 1, 3 * t + 2]);
        ds.cell_types.push(VTK_TRIANGLE);
        elem.push(tri.element as f64);
        sub.push(mesh.elements[tri.element].subdomain as f64);
        if let Some(v) = indicators {
            ind.push(v[tri.element]);
        }
    }
    ds.point_data.insert("pressure".into(), (1, p));
    ds.point_data.insert("flux".into(), (3, u));
    ds.cell_data.insert("element".into(), (1, elem));
    ds.cell_data.insert("subdomain".into(), (1, sub));
    if indicators.is_some() {
        ds.cell_data.insert("indicator".into(), (1, ind));
    }
    ds
}

/// Fracture pressure as line cells, one per fracture edge, with nodal
/// values at the Lagrange nodes of the edge.
pub fn fracture_dataset(mesh: &PolygonalMesh, spaces: &Spaces, sol: &DiscreteSolution) -> VtkDataset {
    let mut ds = VtkDataset {
        title: "sdgfrac fracture pressure".into(),
        ..Default::default()
    };
    let nw = spaces.w.basis.len();
    let mut pg = Vec::new();
    let mut frac = Vec::new();
    for (j, &ei) in spaces.w.edges.iter().enumerate() {
        let e = &mesh.edges[ei];
        let (a, b) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
        let start = ds.points.len();
        for m in 0..nw {
            let s = m as f64 / (nw - 1) as f64;
            let x: Point = a + (b - a) * s;
            ds.points.push([x.x, x.y, 0.0]);
            pg.push(fields::edge_value(&spaces.w.basis, &sol.w_broken, j, s));
        }
        for m in 0..nw - 1 {
            ds.cells.push(vec![start + m, start + m + 1]);
            ds.cell_types.push(VTK_LINE);
            frac.push(e.fracture.expect("fracture edge").fracture as f64);
        }
    }
    ds.point_data.insert("fracture_pressure".into(), (1, pg));
    ds.cell_data.insert("fracture".into(), (1, frac));
    ds
}

/// Writes `<stem>_bulk.vtk` and `<stem>_fracture.vtk` into `dir`.
pub fn export_solution(
    dir: &Path,
    stem: &str,
    mesh: &PolygonalMesh,
    spaces: &Spaces,
    sol: &DiscreteSolution,
    indicators: Option<&[f64]>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join(format!("{stem}_bulk.vtk")),
        bulk_dataset(mesh, spaces, sol, indicators).to_vtk_string(),
    )?;
    fs::write(
        dir.join(format!("{stem}_fracture.vtk")),
        fracture_dataset(mesh, spaces, sol).to_vtk_string(),
    )?;
    Ok(())
}

/// Primal mesh as JSON: domain, vertex coordinates and polygons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub domain: DomainSpec,
    pub vertices: Vec<[f64; 2]>,
    pub polygons: Vec<Vec<usize>>,
}

impl MeshFile {
    pub fn from_mesh(mesh: &PolygonalMesh) -> Self {
        Self {
            domain: mesh.domain.clone(),
            vertices: mesh.vertices[..mesh.n_primal_vertices]
                .iter()
                .map(|p| [p.x, p.y])
                .collect(),
            polygons: mesh.polygons(),
        }
    }

    /// Rebuilds the mesh. The result has no refinement tree.
    pub fn to_mesh(&self) -> Result<PolygonalMesh> {
        let v = self.vertices.iter().map(|p| Point::new(p[0], p[1])).collect();
        PolygonalMesh::from_polygons(self.domain.clone(), v, self.polygons.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Writes the matrix in Matrix Market coordinate format and the right-hand
/// side as a Matrix Market dense array.
pub fn dump_system(system: &LinearSystem, matrix_path: &Path, rhs_path: &Path) -> Result<()> {
    sprs::io::write_matrix_market(matrix_path, &system.matrix)?;
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} 1", system.rhs.len());
    for v in &system.rhs {
        let _ = writeln!(s, "{}", num(*v));
    }
    fs::write(rhs_path, s)?;
    Ok(())
}

/// Log-log plot of the estimator (and the error when known) against `N`
/// with a reference slope `-k/2`.
pub fn convergence_svg(history: &ConvergenceHistory, order: usize) -> String {
    let (w, h, pad) = (640.0, 480.0, 60.0);
    let eta: Vec<(f64, f64)> = history.records.iter().map(|r| (r.n_dofs as f64, r.eta)).collect();
    let err: Vec<(f64, f64)> = history
        .records
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| (r.n_dofs as f64, e.sdg)))
        .filter(|p| p.1 > 0.0)
        .collect();
    let all: Vec<(f64, f64)> = eta
        .iter()
        .chain(&err)
        .copied()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .collect();
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    if all.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let lx = |v: f64| v.log10();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &all {
        x0 = x0.min(lx(x).floor());
        x1 = x1.max(lx(x).ceil());
        y0 = y0.min(lx(y).floor());
        y1 = y1.max(lx(y).ceil());
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| pad + (lx(x) - x0) / (x1 - x0) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (lx(y) - y0) / (y1 - y0) * (h - 2.0 * pad);
    let _ = writeln!(
        s,
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    for d in x0 as i32..=x1 as i32 {
        let x = px(10f64.powi(d));
        let _ = writeln!(
            s,
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">1e{d}</text>",
            h - pad + 18.0
        );
    }
    for d in y0 as i32..=y1 as i32 {
        let y = py(10f64.powi(d));
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{y:.1}\" font-size=\"12\" text-anchor=\"end\">1e{d}</text>",
            pad - 6.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\">N</text>",
        w / 2.0,
        h - 15.0
    );
    let line = |s: &mut String, pts: &[(f64, f64)], color: &str, dash: &str, label: &str, row: usize| {
        if pts.is_empty() {
            return;
        }
        let p: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" stroke-dasharray=\"{dash}\"/>",
            p.join(" ")
        );
        let ly = pad + 18.0 * (row as f64 + 1.0);
        let _ = writeln!(
            s,
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\" stroke-dasharray=\"{dash}\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{label}</text>",
            w - pad - 150.0,
            w - pad - 120.0,
            w - pad - 115.0,
            ly + 4.0
        );
    };
    line(&mut s, &eta, "#1f77b4", "none", "estimator", 0);
    line(&mut s, &err, "#d62728", "none", "error", 1);
    if let (Some(&(n0, e0)), Some(&(n1, _))) = (eta.first(), eta.last()) {
        if n1 > n0 {
            let r = -(order as f64) / 2.0;
            let refs = [(n0, e0 * 0.5), (n1, e0 * 0.5 * (n1 / n0).powf(r))];
            line(&mut s, &refs, "gray", "6,4", &format!("slope -{order}/2"), 2);
        }
    }
    s.push_str("</svg>\n");
    s
}
