//! Critical probability of the Cayley graph of SL(2,Z).

use perctree::{builders, solver, SolverOptions};

fn main() -> perctree::Result<()> {
    let structure = builders::sl2z();
    let engine = solver::Engine::new(&structure)?;
    println!("color types: {}", engine.color_space().len());
    for t in engine.color_space().types() {
        println!("  {} {}", t.model_name, t.color);
    }
    let report = engine.critical_probability(&SolverOptions::default())?;
    println!("p_c = {:.12}", report.p_c);
    println!("det(M - I) at p_c = {:.3e}", report.det_residual);
    Ok(())
}
