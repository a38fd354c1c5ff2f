//! Expected size of the base vertex's open cluster in small graphs.

use perctree::{closedform, FiniteGraph};

fn main() -> perctree::Result<()> {
    for g in [
        FiniteGraph::complete(2),
        FiniteGraph::cycle(3),
        FiniteGraph::cycle(4),
        FiniteGraph::complete(4),
    ] {
        let chi = closedform::chi_polynomial(&g)?;
        println!("{:<3} chi(p) = {chi}   chi(1/2) = {:.6}", g.name, chi.eval(0.5));
    }
    Ok(())
}
