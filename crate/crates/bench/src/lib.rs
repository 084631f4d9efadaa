//! Fixtures shared by the benchmarks.

use sdgfrac_core::benchmarks::by_name;
use sdgfrac_core::mesh::{build_initial_mesh, refine, PolygonalMesh};
use sdgfrac_core::problem::ProblemSpec;

/// Benchmark problem `name` on its initial grid refined uniformly `levels`
/// times.
pub fn fixture(name: &str, levels: usize) -> (ProblemSpec, PolygonalMesh) {
    let spec = by_name(name).unwrap_or_else(|| panic!("unknown benchmark {name}")).spec;
    let mut mesh = build_initial_mesh(spec.domain.clone(), spec.initial_h).expect("initial mesh");
    for _ in 0..levels {
        let all: Vec<usize> = (0..mesh.n_elements()).collect();
        mesh = refine(&mesh, &all).expect("uniform refinement");
    }
    (spec, mesh)
}
