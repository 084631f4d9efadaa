//! Run configuration: JSON file plus command-line overrides.

use std::fmt;
use std::path::PathBuf;

use sdgfrac_core::adaptivity::AmrConfig;
use sdgfrac_core::benchmarks;
use sdgfrac_core::mesh::{DomainSpec, Rect};
use sdgfrac_core::problem::{
    constant, isotropic, line_constant, BoundaryCondition, BoundaryPiece, BulkBoundary, ExactSolution, ProblemSpec,
    TipCondition,
};
use serde::{Deserialize, Serialize};

/// Problems fail validation with this error; it maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum Condition {
    Dirichlet(f64),
    Neumann(f64),
}

impl Condition {
    fn build(&self) -> BoundaryCondition {
        match *self {
            Condition::Dirichlet(v) => BoundaryCondition::Dirichlet(constant(v)),
            Condition::Neumann(v) => BoundaryCondition::Neumann(constant(v)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub region: Rect,
    pub condition: Condition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Boundary {
    pub default: Condition,
    #[serde(default)]
    pub pieces: Vec<Piece>,
}

/// A problem with constant data, written out in the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineProblem {
    pub domain: DomainSpec,
    /// Isotropic bulk permeability.
    #[serde(default = "one")]
    pub permeability: f64,
    #[serde(default = "default_xi")]
    pub xi: f64,
    #[serde(default)]
    pub source: f64,
    /// One value per fracture; missing entries are zero.
    #[serde(default)]
    pub fracture_sources: Vec<f64>,
    pub boundary: Boundary,
    /// One pair per fracture; missing pairs are Neumann.
    #[serde(default)]
    pub tips: Vec<[TipCondition; 2]>,
    pub initial_h: f64,
}

fn one() -> f64 {
    1.0
}

fn default_xi() -> f64 {
    benchmarks::XI
}

impl InlineProblem {
    pub fn build(&self) -> ProblemSpec {
        let n = self.domain.fractures.len();
        let mut sources: Vec<_> = self.fracture_sources.iter().map(|&v| line_constant(v)).collect();
        sources.resize(n, line_constant(0.0));
        let mut tips = self.tips.clone();
        tips.resize(n, [TipCondition::Neumann; 2]);
        ProblemSpec {
            domain: self.domain.clone(),
            permeability: isotropic(self.permeability),
            xi: self.xi,
            source: constant(self.source),
            fracture_sources: sources,
            boundary: BulkBoundary {
                default: self.boundary.default.build(),
                pieces: self
                    .boundary
                    .pieces
                    .iter()
                    .map(|p| BoundaryPiece {
                        region: p.region,
                        condition: p.condition.build(),
                    })
                    .collect(),
            },
            tips,
            initial_h: self.initial_h,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub benchmark: Option<String>,
    pub problem: Option<InlineProblem>,
    #[serde(default)]
    pub amr: AmrConfig,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub export_fields: bool,
    #[serde(default)]
    pub dump_system: bool,
}

/// Problem data resolved from a config.
pub struct Resolved {
    pub name: String,
    pub spec: ProblemSpec,
    pub exact: Option<ExactSolution>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let resolved = match (&self.benchmark, &self.problem) {
            (Some(_), Some(_)) => return Err(ConfigError("give either `benchmark` or `problem`, not both".into())),
            (None, None) => return Err(ConfigError("no problem: set `benchmark` or `problem`".into())),
            (Some(name), None) => {
                let b = benchmarks::by_name(name).ok_or_else(|| {
                    ConfigError(format!(
                        "unknown benchmark `{name}` (known: {})",
                        benchmarks::NAMES.join(", ")
                    ))
                })?;
                Resolved {
                    name: b.name.to_string(),
                    spec: b.spec,
                    exact: b.exact,
                }
            }
            (None, Some(p)) => Resolved {
                name: "inline".into(),
                spec: p.build(),
                exact: None,
            },
        };
        resolved.spec.validate().map_err(|e| ConfigError(e.to_string()))?;
        self.amr.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(resolved)
    }
}
