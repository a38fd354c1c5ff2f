//! The free group of rank 2 with generating sets of all words up to length k.

use perctree::{builders, solver, SolverOptions};

fn main() -> perctree::Result<()> {
    for k in 1..=2 {
        let structure = builders::free_group_ball(2, k)?;
        let m = &structure.models[0];
        println!(
            "k = {k}: piece {} vertices, border {}, {} edges, {} children",
            m.vertices,
            m.border.len(),
            m.edges.len(),
            m.children.len()
        );
        let report = solver::critical_probability(&structure, &SolverOptions::default())?;
        println!("  p_c = {:.10} ({} color types)", report.p_c, report.color_space_size);
    }
    Ok(())
}
