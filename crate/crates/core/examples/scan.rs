//! Spectral radius and det(M - I) along a p grid, as CSV.

use perctree::format::g17;
use perctree::{builders, Engine, SolverOptions};

fn main() -> perctree::Result<()> {
    let engine = Engine::new(&builders::sl2z())?;
    let points: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
    println!("p,rho,det_residual");
    for r in engine.scan(&points, &SolverOptions::default())? {
        println!("{},{},{}", g17(r.p), g17(r.rho), g17(r.det_residual));
    }
    Ok(())
}
