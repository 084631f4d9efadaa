//! Model data: permeabilities, interface coefficients, sources and
//! boundary conditions.

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{DomainSpec, Rect};
use crate::{Point, Vector};

/// Scalar bulk field `f(x, probe)`. The probe is a point inside the same
/// element as `x`; it selects the subdomain when `x` lies on a fracture.
pub type BulkFn = Arc<dyn Fn(&Point, &Point) -> f64 + Send + Sync>;
pub type BulkVecFn = Arc<dyn Fn(&Point, &Point) -> Vector + Send + Sync>;
/// Scalar field along a fracture.
pub type LineFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type LineVecFn = Arc<dyn Fn(&Point) -> Vector + Send + Sync>;
pub type TensorFn = Arc<dyn Fn(&Point) -> Matrix2<f64> + Send + Sync>;

pub fn constant(c: f64) -> BulkFn {
    Arc::new(move |_, _| c)
}

pub fn line_constant(c: f64) -> LineFn {
    Arc::new(move |_| c)
}

#[derive(Clone)]
pub enum BoundaryCondition {
    /// Prescribed pressure.
    Dirichlet(BulkFn),
    /// Prescribed outward normal flux `u . n`.
    Neumann(BulkFn),
}

impl BoundaryCondition {
    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryCondition::Dirichlet(_))
    }
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_dirichlet() { "Dirichlet" } else { "Neumann" })
    }
}

/// Condition on the part of the boundary inside `region` (closed, may be
/// degenerate).
#[derive(Clone, Debug)]
pub struct BoundaryPiece {
    pub region: Rect,
    pub condition: BoundaryCondition,
}

#[derive(Clone, Debug)]
pub struct BulkBoundary {
    pub default: BoundaryCondition,
    pub pieces: Vec<BoundaryPiece>,
}

impl BulkBoundary {
    pub fn uniform(condition: BoundaryCondition) -> Self {
        Self {
            default: condition,
            pieces: Vec::new(),
        }
    }

    /// Condition at a boundary point; the first matching piece wins.
    pub fn at(&self, x: &Point, tol: f64) -> &BoundaryCondition {
        self.pieces
            .iter()
            .find(|p| {
                let r = &p.region;
                x.x >= r.min.x - tol && x.x <= r.max.x + tol && x.y >= r.min.y - tol && x.y <= r.max.y + tol
            })
            .map_or(&self.default, |p| &p.condition)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TipCondition {
    Dirichlet(f64),
    Neumann,
}

/// Interface coefficients of one fracture segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceCoefficients {
    pub thickness: f64,
    /// `thickness / kappa_n`.
    pub eta: f64,
    /// `eta (xi / 2 - 1 / 4)`.
    pub alpha: f64,
    /// `kappa_t * thickness`.
    pub k_gamma: f64,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub domain: DomainSpec,
    /// Evaluated once per element at its centre.
    pub permeability: TensorFn,
    pub xi: f64,
    pub source: BulkFn,
    /// One source per fracture.
    pub fracture_sources: Vec<LineFn>,
    pub boundary: BulkBoundary,
    /// Conditions at the first and last point of each fracture.
    pub tips: Vec<[TipCondition; 2]>,
    /// Spacing of the initial Cartesian mesh.
    pub initial_h: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("domain", &self.domain)
            .field("xi", &self.xi)
            .field("boundary", &self.boundary)
            .field("tips", &self.tips)
            .field("initial_h", &self.initial_h)
            .finish_non_exhaustive()
    }
}

pub fn isotropic(k: f64) -> TensorFn {
    Arc::new(move |_| Matrix2::identity() * k)
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if !(self.xi > 0.5 && self.xi <= 1.0) {
            return Err(Error::InvalidProblem(format!("xi = {} is outside (1/2, 1]", self.xi)));
        }
        let nf = self.domain.fractures.len();
        if self.fracture_sources.len() != nf || self.tips.len() != nf {
            return Err(Error::InvalidProblem(format!(
                "{nf} fractures but {} sources and {} tip pairs",
                self.fracture_sources.len(),
                self.tips.len()
            )));
        }
        if !(self.initial_h > 0.0) {
            return Err(Error::InvalidProblem("initial mesh size must be positive".into()));
        }
        for tip in self.tips.iter().flatten() {
            if let TipCondition::Dirichlet(v) = tip {
                if !v.is_finite() {
                    return Err(Error::NonFinite);
                }
            }
        }
        Ok(())
    }

    pub fn interface(&self, fracture: usize, segment: usize) -> InterfaceCoefficients {
        let fr = &self.domain.fractures[fracture];
        let k = fr.permeability[segment];
        let eta = fr.thickness / k.normal;
        InterfaceCoefficients {
            thickness: fr.thickness,
            eta,
            alpha: eta * (self.xi / 2.0 - 0.25),
            k_gamma: k.tangential * fr.thickness,
        }
    }

    /// Permeability of an element, checked for symmetry and definiteness.
    pub fn permeability_at(&self, element: usize, center: &Point) -> Result<Matrix2<f64>> {
        let k = (self.permeability)(center);
        let sym = (k[(0, 1)] - k[(1, 0)]).abs() <= 1e-12 * k.norm();
        let det = k[(0, 0)] * k[(1, 1)] - k[(0, 1)] * k[(1, 0)];
        if !k.iter().all(|v| v.is_finite()) || !sym || !(k[(0, 0)] > 0.0) || !(det > 0.0) {
            return Err(Error::SingularK(element));
        }
        Ok(k)
    }

    /// Same problem with every source and boundary datum multiplied by `s`.
    pub fn scaled(&self, s: f64) -> ProblemSpec {
        let scale_bulk = |g: &BulkFn| -> BulkFn {
            let g = g.clone();
            Arc::new(move |x, p| s * g(x, p))
        };
        let scale_bc = |c: &BoundaryCondition| match c {
            BoundaryCondition::Dirichlet(g) => BoundaryCondition::Dirichlet(scale_bulk(g)),
            BoundaryCondition::Neumann(g) => BoundaryCondition::Neumann(scale_bulk(g)),
        };
        ProblemSpec {
            domain: self.domain.clone(),
            permeability: self.permeability.clone(),
            xi: self.xi,
            source: scale_bulk(&self.source),
            fracture_sources: self
                .fracture_sources
                .iter()
                .map(|g| {
                    let g = g.clone();
                    Arc::new(move |x: &Point| s * g(x)) as LineFn
                })
                .collect(),
            boundary: BulkBoundary {
                default: scale_bc(&self.boundary.default),
                pieces: self
                    .boundary
                    .pieces
                    .iter()
                    .map(|p| BoundaryPiece {
                        region: p.region,
                        condition: scale_bc(&p.condition),
                    })
                    .collect(),
            },
            tips: self
                .tips
                .iter()
                .map(|t| {
                    t.map(|c| match c {
                        TipCondition::Dirichlet(v) => TipCondition::Dirichlet(s * v),
                        TipCondition::Neumann => TipCondition::Neumann,
                    })
                })
                .collect(),
            initial_h: self.initial_h,
        }
    }
}

/// Closed-form solution used for error measurement.
#[derive(Clone)]
pub struct ExactSolution {
    pub pressure: BulkFn,
    pub flux: BulkVecFn,
    pub fracture_pressure: Vec<LineFn>,
    pub fracture_gradient: Vec<LineVecFn>,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactSolution").finish_non_exhaustive()
    }
}

impl ExactSolution {
    pub fn scaled(&self, s: f64) -> ExactSolution {
        let p = self.pressure.clone();
        let u = self.flux.clone();
        ExactSolution {
            pressure: Arc::new(move |x, q| s * p(x, q)),
            flux: Arc::new(move |x, q| s * u(x, q)),
            fracture_pressure: self
                .fracture_pressure
                .iter()
                .map(|g| {
                    let g = g.clone();
                    Arc::new(move |x: &Point| s * g(x)) as LineFn
                })
                .collect(),
            fracture_gradient: self
                .fracture_gradient
                .iter()
                .map(|g| {
                    let g = g.clone();
                    Arc::new(move |x: &Point| s * g(x)) as LineVecFn
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Fracture;

    #[test]
    fn interface_coefficients() {
        let spec = ProblemSpec {
            domain: DomainSpec {
                outline: vec![Rect::new(0.0, 0.0, 2.0, 1.0)],
                fractures: vec![Fracture::uniform(
                    vec![Point::new(1.0, 0.0), Point::new(1.0, 1.0)],
                    100.0,
                    0.01,
                )],
            },
            permeability: isotropic(1.0),
            xi: 0.75,
            source: constant(0.0),
            fracture_sources: vec![line_constant(0.0)],
            boundary: BulkBoundary::uniform(BoundaryCondition::Dirichlet(constant(0.0))),
            tips: vec![[TipCondition::Neumann; 2]],
            initial_h: 1.0,
        };
        spec.validate().unwrap();
        let c = spec.interface(0, 0);
        assert!((c.eta - 1e-4).abs() < 1e-18);
        assert!((c.alpha - 1.25e-5).abs() < 1e-18);
        assert!((c.k_gamma - 1.0).abs() < 1e-15);
    }

    #[test]
    fn indefinite_permeability_rejected() {
        let spec = ProblemSpec {
            domain: DomainSpec {
                outline: vec![Rect::new(0.0, 0.0, 1.0, 1.0)],
                fractures: vec![],
            },
            permeability: Arc::new(|_| Matrix2::new(1.0, 2.0, 2.0, 1.0)),
            xi: 0.75,
            source: constant(0.0),
            fracture_sources: vec![],
            boundary: BulkBoundary::uniform(BoundaryCondition::Dirichlet(constant(0.0))),
            tips: vec![],
            initial_h: 1.0,
        };
        assert_eq!(spec.permeability_at(3, &Point::origin()), Err(Error::SingularK(3)));
    }
}
