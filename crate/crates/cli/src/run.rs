//! Orchestration of one run and its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use sdgfrac_core::adaptivity::{amr_loop_with, ConvergenceHistory, IterationState};
use sdgfrac_core::assembly::Spaces;
use sdgfrac_core::io::{convergence_svg, dump_system, export_solution, write_history_csv, MeshFile};
use sdgfrac_core::mesh::{build_initial_mesh, check_regularity, refine};
use sdgfrac_core::spaces::SpaceConfig;
use sdgfrac_core::{Error, Result};

use crate::config::{Resolved, RunConfig};

pub const HISTORY_FILE: &str = "history.csv";
pub const PLOT_FILE: &str = "convergence.svg";

fn progress_line(state: &IterationState) -> String {
    let r = state.record;
    let mut line = format!(
        "{:>3}  N={:<8} eta={:.4e}  elements={:<7} marked={}",
        r.iteration, r.n_dofs, r.eta, r.n_elements, r.n_marked
    );
    if let Some(e) = &r.error {
        line.push_str(&format!("  err={:.4e}", e.sdg));
        if let Some(ei) = e.ei {
            line.push_str(&format!("  EI={ei:.3}"));
        }
    }
    line
}

fn export(dir: &Path, cfg: &RunConfig, state: &IterationState) -> Result<()> {
    let stem = format!("iter_{:03}", state.record.iteration);
    if cfg.export_fields {
        let fields = dir.join("fields");
        export_solution(
            &fields,
            &stem,
            state.mesh,
            state.spaces,
            state.solution,
            Some(state.indicators),
        )?;
        fs::write(
            fields.join(format!("{stem}_mesh.json")),
            MeshFile::from_mesh(state.mesh).to_json()?,
        )?;
    }
    if cfg.dump_system {
        let sys = dir.join("system");
        fs::create_dir_all(&sys)?;
        dump_system(
            state.system,
            &sys.join(format!("{stem}_matrix.mtx")),
            &sys.join(format!("{stem}_rhs.mtx")),
        )?;
    }
    Ok(())
}

/// Runs the adaptive loop and writes the history, the plot and the
/// requested exports into `out`.
pub fn run(cfg: &RunConfig, problem: &Resolved, out: &Path, quiet: bool) -> Result<ConvergenceHistory> {
    fs::create_dir_all(out)?;
    let mut failure: Option<Error> = None;
    let history = amr_loop_with(&problem.spec, problem.exact.as_ref(), &cfg.amr, |state| {
        if !quiet {
            println!("{}", progress_line(state));
        }
        if failure.is_none() {
            failure = export(out, cfg, state).err();
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let file = fs::File::create(out.join(HISTORY_FILE))?;
    write_history_csv(&history, std::io::BufWriter::new(file))?;
    fs::write(out.join(PLOT_FILE), convergence_svg(&history, cfg.amr.order))?;
    Ok(history)
}

pub fn default_out(problem: &Resolved) -> PathBuf {
    PathBuf::from("results").join(&problem.name)
}

/// Builds the initial mesh, refines it uniformly `levels` times and audits
/// every stage. Returns the report printed by `check`.
pub fn check(problem: &Resolved, order: usize, levels: usize) -> Result<String> {
    let config = SpaceConfig::new(order)?;
    let mut mesh = build_initial_mesh(problem.spec.domain.clone(), problem.spec.initial_h)?;
    let mut report = String::new();
    for level in 0..=levels {
        mesh.check_invariants()?;
        let reg = check_regularity(&mesh);
        let spaces = Spaces::build(&mesh, config, &problem.spec);
        report.push_str(&format!(
            "level {level}: elements={} vertices={} triangles={} fracture_edges={} max_hanging={} rho_S={:.3} rho_E={:.3} flagged={} dofs={}\n",
            mesh.n_elements(),
            mesh.n_primal_vertices,
            mesh.triangles.len(),
            mesh.fractures.iter().map(|f| f.edges.len()).sum::<usize>(),
            mesh.max_hanging_per_side().unwrap_or(0),
            reg.rho_s,
            reg.rho_e,
            reg.flagged.len(),
            spaces.n_dofs(),
        ));
        if !reg.flagged.is_empty() {
            return Err(Error::InvalidMesh(format!(
                "{} elements below the regularity floors",
                reg.flagged.len()
            )));
        }
        if level < levels {
            let all: Vec<usize> = (0..mesh.n_elements()).collect();
            mesh = refine(&mesh, &all)?;
        }
    }
    Ok(report)
}
