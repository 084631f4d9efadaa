//! Dörfler marking and the solve / estimate / mark / refine loop.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_system, DiscreteSolution, LinearSystem, Spaces};
use crate::error::{Error, Result};
use crate::estimator::{compute_estimator, localize, true_error, ErrorReport, N_TERMS};
use crate::mesh::{build_initial_mesh, check_regularity, refine, PolygonalMesh};
use crate::problem::{ExactSolution, ProblemSpec};
use crate::solver::solve;
use crate::spaces::SpaceConfig;

/// Minimal set of elements whose squared indicators reach `theta` of the
/// total. Larger indicators are taken first, ties by lower id. The result
/// is sorted by id.
pub fn dorfler_mark(indicators: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidConfig(format!("marking fraction {theta} outside (0, 1]")));
    }
    if let Some(i) = indicators.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidConfig(format!("indicator {i} is negative or not finite")));
    }
    let total: f64 = indicators.iter().sum();
    if total <= 0.0 {
        return Err(Error::AllZeroIndicators);
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    let target = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for i in order {
        if indicators[i] == 0.0 {
            break;
        }
        marked.push(i);
        acc += indicators[i];
        // Guard against summation round-off when theta = 1.
        if acc >= target * (1.0 - 1e-14) {
            break;
        }
    }
    marked.sort_unstable();
    Ok(marked)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefinementMode {
    Adaptive,
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmrConfig {
    pub theta: f64,
    pub mode: RefinementMode,
    pub max_dofs: usize,
    pub max_iterations: usize,
    pub order: usize,
    /// Adaptive runs stop as converged once `eta` falls to this value.
    pub tolerance: f64,
}

impl Default for AmrConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            mode: RefinementMode::Adaptive,
            max_dofs: 200_000,
            max_iterations: 30,
            order: 1,
            tolerance: 1e-9,
        }
    }
}

impl AmrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidConfig(format!("theta = {} outside (0, 1]", self.theta)));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance = {} is negative",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        SpaceConfig::new(self.order)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub n_dofs: usize,
    pub terms: [f64; N_TERMS],
    pub eta: f64,
    pub osc: f64,
    pub error: Option<ErrorReport>,
    pub n_elements: usize,
    pub rho_e: f64,
    pub t_solve_ms: f64,
    pub t_estimate_ms: f64,
    pub n_marked: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum HaltReason {
    MaxDofs,
    MaxIterations,
    Converged,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceHistory {
    pub records: Vec<IterationRecord>,
    pub halt: HaltReason,
}

impl ConvergenceHistory {
    /// Least-squares slope of `log value` against `log N` over the last
    /// `last` records.
    pub fn slope(&self, last: usize, value: impl Fn(&IterationRecord) -> Option<f64>) -> Option<f64> {
        let start = self.records.len().saturating_sub(last);
        let pts: Vec<(f64, f64)> = self.records[start..]
            .iter()
            .filter_map(|r| value(r).map(|v| ((r.n_dofs as f64).ln(), v.ln())))
            .collect();
        log_log_slope(&pts)
    }
}

pub(crate) fn log_log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// State handed to the observer after each iteration.
pub struct IterationState<'a> {
    pub mesh: &'a PolygonalMesh,
    pub system: &'a LinearSystem,
    pub spaces: &'a Spaces,
    pub solution: &'a DiscreteSolution,
    /// Squared indicator per element.
    pub indicators: &'a [f64],
    pub record: &'a IterationRecord,
}

pub fn amr_loop(spec: &ProblemSpec, exact: Option<&ExactSolution>, config: &AmrConfig) -> Result<ConvergenceHistory> {
    amr_loop_with(spec, exact, config, |_| {})
}

/// Runs the adaptive loop from the initial grid of `spec`, calling
/// `observer` after every estimate.
pub fn amr_loop_with(
    spec: &ProblemSpec,
    exact: Option<&ExactSolution>,
    config: &AmrConfig,
    mut observer: impl FnMut(&IterationState),
) -> Result<ConvergenceHistory> {
    config.validate()?;
    spec.validate()?;
    let space = SpaceConfig::new(config.order)?;
    let mut mesh = build_initial_mesh(spec.domain.clone(), spec.initial_h)?;
    let mut records = Vec::new();
    for iteration in 0.. {
        mesh.check_invariants()?;
        let regularity = check_regularity(&mesh);
        if !regularity.flagged.is_empty() {
            return Err(Error::InvalidMesh(format!(
                "{} elements below the shape-regularity floors",
                regularity.flagged.len()
            )));
        }
        let t0 = Instant::now();
        let (system, spaces) = assemble_system(&mesh, spec, space)?;
        let solved = solve(&system, &spaces);
        let (solution, _) = match solved {
            Ok(s) => s,
            Err(e @ (Error::SingularSystem(_) | Error::NonFinite)) => {
                return Ok(ConvergenceHistory {
                    records,
                    halt: HaltReason::Failed(e.to_string()),
                })
            }
            Err(e) => return Err(e),
        };
        let t_solve = t0.elapsed().as_secs_f64() * 1e3;
        let t1 = Instant::now();
        let est = compute_estimator(&mesh, &spaces, spec, &solution)?;
        let indicators = localize(&est, &mesh);
        let t_estimate = t1.elapsed().as_secs_f64() * 1e3;
        let error = match exact {
            Some(ex) => Some(true_error(&mesh, &spaces, spec, &solution, Some(ex), est.eta)?),
            None => None,
        };
        let n_dofs = system.dim();
        let halt = if iteration + 1 >= config.max_iterations {
            Some(HaltReason::MaxIterations)
        } else if n_dofs >= config.max_dofs {
            Some(HaltReason::MaxDofs)
        } else {
            None
        };
        let marked = match (halt.is_some(), config.mode) {
            (true, _) => Ok(Vec::new()),
            (false, RefinementMode::Uniform) => Ok((0..mesh.n_elements()).collect()),
            (false, RefinementMode::Adaptive) => dorfler_mark(&indicators, config.theta),
        };
        let converged = matches!(marked, Err(Error::AllZeroIndicators))
            || (halt.is_none() && config.mode == RefinementMode::Adaptive && est.eta <= config.tolerance);
        let marked = match marked {
            _ if converged => Vec::new(),
            m => m?,
        };
        records.push(IterationRecord {
            iteration,
            n_dofs,
            terms: est.terms,
            eta: est.eta,
            osc: est.osc,
            error,
            n_elements: mesh.n_elements(),
            rho_e: regularity.rho_e,
            t_solve_ms: t_solve,
            t_estimate_ms: t_estimate,
            n_marked: marked.len(),
        });
        observer(&IterationState {
            mesh: &mesh,
            system: &system,
            spaces: &spaces,
            solution: &solution,
            indicators: &indicators,
            record: records.last().expect("just pushed"),
        });
        if let Some(halt) = halt {
            return Ok(ConvergenceHistory { records, halt });
        }
        if converged {
            return Ok(ConvergenceHistory {
                records,
                halt: HaltReason::Converged,
            });
        }
        mesh = refine(&mesh, &marked)?;
    }
    unreachable!("loop exits through a halt reason")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Smallest cardinality of a subset reaching the threshold, and the
    /// largest sum among subsets of that cardinality.
    fn exhaustive(v: &[f64], theta: f64) -> (usize, f64) {
        let total: f64 = v.iter().sum();
        let mut best = (usize::MAX, 0.0);
        for mask in 0u32..(1 << v.len()) {
            let s: f64 = (0..v.len()).filter(|i| mask >> i & 1 == 1).map(|i| v[i]).sum();
            let c = mask.count_ones() as usize;
            if s >= theta * total * (1.0 - 1e-14) && (c < best.0 || (c == best.0 && s > best.1)) {
                best = (c, s);
            }
        }
        best
    }

    #[test]
    fn marking_examples() {
        assert_eq!(dorfler_mark(&[16.0, 9.0, 4.0, 1.0], 0.5).unwrap(), vec![0]);
        assert_eq!(dorfler_mark(&[1.0; 4], 0.5).unwrap(), vec![0, 1]);
        assert_eq!(dorfler_mark(&[0.0, 2.0, 0.0, 1.0], 1.0).unwrap(), vec![1, 3]);
        assert_eq!(dorfler_mark(&[0.0; 3], 0.5), Err(Error::AllZeroIndicators));
        assert!(matches!(dorfler_mark(&[1.0], 0.0), Err(Error::InvalidConfig(_))));
        assert!(matches!(dorfler_mark(&[-1.0, 2.0], 0.5), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..6)
            .map(|i| ((i as f64).ln(), (3.0 * (i as f64).powf(-0.5)).ln()))
            .collect();
        assert!((log_log_slope(&pts).unwrap() + 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn marking_matches_exhaustive_oracle(
            v in prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..10.0], 1..=12),
            theta in 0.05f64..=1.0,
        ) {
            prop_assume!(v.iter().sum::<f64>() > 0.0);
            let m = dorfler_mark(&v, theta).unwrap();
            let (card, sum) = exhaustive(&v, theta);
            prop_assert_eq!(m.len(), card);
            let s: f64 = m.iter().map(|&i| v[i]).sum();
            prop_assert!((s - sum).abs() <= 1e-12 * sum.max(1.0));
        }
    }
}
