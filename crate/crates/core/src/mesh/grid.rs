//! Quadtree of squares backing the refinable meshes.
//!
//! Cell corners are stored as integers on the finest representable lattice,
//! so hanging nodes are detected exactly.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{build_primal, subdivide, DomainSpec, PolygonalMesh};
use crate::error::{Error, Result};
use crate::Point;

const FINEST: u32 = 40;

/// Quadtree cell: level `level` square with integer position `(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub level: u32,
    pub i: i64,
    pub j: i64,
}

impl CellKey {
    fn size(&self) -> i64 {
        1 << (FINEST - self.level)
    }

    fn lo(&self) -> (i64, i64) {
        let s = FINEST - self.level;
        (self.i << s, self.j << s)
    }

    fn children(&self) -> [CellKey; 4] {
        let (l, i, j) = (self.level + 1, 2 * self.i, 2 * self.j);
        [
            CellKey { level: l, i, j },
            CellKey { level: l, i: i + 1, j },
            CellKey { level: l, i, j: j + 1 },
            CellKey {
                level: l,
                i: i + 1,
                j: j + 1,
            },
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct GridTree {
    origin: Point,
    h0: f64,
    leaves: BTreeSet<CellKey>,
    max_level: u32,
}

impl GridTree {
    fn to_point(&self, x: i64, y: i64) -> Point {
        let unit = self.h0 / (1u64 << FINEST) as f64;
        Point::new(self.origin.x + x as f64 * unit, self.origin.y + y as f64 * unit)
    }

    /// Leaf whose half-open square contains the lattice point.
    fn leaf_at(&self, x: i64, y: i64) -> Option<CellKey> {
        (0..=self.max_level).find_map(|level| {
            let s = FINEST - level;
            let key = CellKey {
                level,
                i: x >> s,
                j: y >> s,
            };
            self.leaves.contains(&key).then_some(key)
        })
    }

    fn is_vertex(&self, x: i64, y: i64) -> bool {
        [(x, y), (x - 1, y), (x, y - 1), (x - 1, y - 1)].iter().any(|&(a, b)| {
            self.leaf_at(a, b).is_some_and(|k| {
                let (x0, y0) = k.lo();
                let s = k.size();
                (x == x0 || x == x0 + s) && (y == y0 || y == y0 + s)
            })
        })
    }

    /// Counter-clockwise polygon of a leaf including hanging midpoints.
    fn polygon(&self, key: &CellKey) -> Vec<(i64, i64)> {
        let (x0, y0) = key.lo();
        let s = key.size();
        let h = s / 2;
        let (x1, y1) = (x0 + s, y0 + s);
        let mut out = Vec::with_capacity(8);
        for (corner, mid) in [
            ((x0, y0), (x0 + h, y0)),
            ((x1, y0), (x1, y0 + h)),
            ((x1, y1), (x0 + h, y1)),
            ((x0, y1), (x0, y0 + h)),
        ] {
            out.push(corner);
            if h > 0 && self.is_vertex(mid.0, mid.1) {
                out.push(mid);
            }
        }
        out
    }

    /// Lattice points just outside the midpoint of each side.
    fn side_probes(key: &CellKey) -> [(i64, i64); 4] {
        let (x0, y0) = key.lo();
        let s = key.size();
        let h = s / 2;
        [(x0 + h, y0 - 1), (x0 + s, y0 + h), (x0 + h, y0 + s), (x0 - 1, y0 + h)]
    }

    pub(crate) fn max_hanging_per_side(&self) -> usize {
        let mut worst = 0;
        for key in &self.leaves {
            let (x0, y0) = key.lo();
            let s = key.size();
            let q = s / 4;
            if q == 0 {
                continue;
            }
            let sides = [
                ((x0, y0), (1, 0)),
                ((x0 + s, y0), (0, 1)),
                ((x0, y0 + s), (1, 0)),
                ((x0, y0), (0, 1)),
            ];
            for ((sx, sy), (dx, dy)) in sides {
                let n = (1..4)
                    .filter(|m| self.is_vertex(sx + dx * m * q, sy + dy * m * q))
                    .count();
                worst = worst.max(n);
            }
        }
        worst
    }
}

fn is_multiple(v: f64, h: f64) -> bool {
    let r = v / h;
    (r - r.round()).abs() <= 1e-10 * r.abs().max(1.0)
}

/// Cartesian mesh of squares of side `target_h` covering the outline.
pub fn build_initial_mesh(domain: DomainSpec, target_h: f64) -> Result<PolygonalMesh> {
    if domain.outline.is_empty() {
        return Err(Error::EmptyDomain);
    }
    domain.validate()?;
    if !(target_h > 0.0 && target_h.is_finite()) {
        return Err(Error::InvalidDomain("mesh size must be positive".into()));
    }
    let bbox = domain.bounding_box();
    let origin = bbox.min;
    for (i, r) in domain.outline.iter().enumerate() {
        for p in [r.min, r.max] {
            if !is_multiple(p.x - origin.x, target_h) || !is_multiple(p.y - origin.y, target_h) {
                return Err(Error::OutlineNotAligned(i));
            }
        }
    }
    for (f, fr) in domain.fractures.iter().enumerate() {
        for s in 0..fr.num_segments() {
            let (a, b) = fr.segment(s);
            let on_grid = [a, b]
                .iter()
                .all(|p| is_multiple(p.x - origin.x, target_h) && is_multiple(p.y - origin.y, target_h));
            let axis = (a.x - b.x).abs() <= domain.tolerance() || (a.y - b.y).abs() <= domain.tolerance();
            if !on_grid || !axis {
                return Err(Error::FractureNotAligned {
                    fracture: f,
                    segment: s,
                });
            }
        }
    }
    let nx = ((bbox.max.x - origin.x) / target_h).round() as i64;
    let ny = ((bbox.max.y - origin.y) / target_h).round() as i64;
    let mut leaves = BTreeSet::new();
    for j in 0..ny {
        for i in 0..nx {
            let c = Point::new(
                origin.x + (i as f64 + 0.5) * target_h,
                origin.y + (j as f64 + 0.5) * target_h,
            );
            if domain.contains(&c) {
                leaves.insert(CellKey { level: 0, i, j });
            }
        }
    }
    if leaves.is_empty() {
        return Err(Error::EmptyDomain);
    }
    mesh_from_tree(
        domain,
        GridTree {
            origin,
            h0: target_h,
            leaves,
            max_level: 0,
        },
    )
}

fn mesh_from_tree(domain: DomainSpec, tree: GridTree) -> Result<PolygonalMesh> {
    let mut cells: Vec<CellKey> = tree.leaves.iter().copied().collect();
    cells.sort_by_key(|k| {
        let (x, y) = k.lo();
        (y, x)
    });
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut polygons = Vec::with_capacity(cells.len());
    for key in &cells {
        let poly = tree
            .polygon(key)
            .into_iter()
            .map(|p| {
                *index.entry(p).or_insert_with(|| {
                    vertices.push(tree.to_point(p.0, p.1));
                    vertices.len() - 1
                })
            })
            .collect();
        polygons.push(poly);
    }
    let mut mesh = build_primal(domain, vertices, polygons)?;
    for (el, key) in mesh.elements.iter_mut().zip(&cells) {
        el.cell = Some(*key);
    }
    mesh.tree = Some(tree);
    subdivide(mesh)
}

/// Splits every marked element into four squares, then closes the marked
/// set so that no side carries more than one hanging node.
///
/// Meshes not produced by [`build_initial_mesh`] or `refine` cannot be
/// refined.
pub fn refine(mesh: &PolygonalMesh, marked: &[usize]) -> Result<PolygonalMesh> {
    let tree = mesh.tree.as_ref().ok_or(Error::NotRefinable)?;
    let mut todo = BTreeSet::new();
    for &id in marked {
        let el = mesh
            .elements
            .get(id)
            .ok_or_else(|| Error::InvalidMesh(format!("element {id} does not exist")))?;
        todo.insert(el.cell.ok_or(Error::NotRefinable)?);
    }
    let mut stack: Vec<CellKey> = todo.iter().copied().collect();
    while let Some(key) = stack.pop() {
        if key.level + 2 > FINEST {
            return Err(Error::InvalidMesh("refinement depth exhausted".into()));
        }
        for (x, y) in GridTree::side_probes(&key) {
            if let Some(nb) = tree.leaf_at(x, y) {
                if nb.level < key.level && todo.insert(nb) {
                    stack.push(nb);
                }
            }
        }
    }
    let mut next = tree.clone();
    for key in &todo {
        next.leaves.remove(key);
        next.leaves.extend(key.children());
        next.max_level = next.max_level.max(key.level + 1);
    }
    mesh_from_tree(mesh.domain.clone(), next)
}
