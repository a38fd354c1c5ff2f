//! The grandparent graph: a transitive graph that is not a Cayley graph.

use perctree::{builders, solver, SolverOptions};

fn main() -> perctree::Result<()> {
    let structure = builders::grandparent();
    let report = solver::critical_probability(&structure, &SolverOptions::default())?;
    println!("color types: {}", report.color_space_size);
    println!("p_c = {:.10}", report.p_c);
    Ok(())
}
