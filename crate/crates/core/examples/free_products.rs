//! Free products of finite graphs: the generic engine against the
//! cluster-size polynomial of each factor.

use perctree::{builders, closedform, solver, FiniteGraph, SolverOptions};

fn main() -> perctree::Result<()> {
    let sets = [
        vec![
            FiniteGraph::complete(2),
            FiniteGraph::complete(2),
            FiniteGraph::complete(2),
        ],
        vec![FiniteGraph::complete(2), FiniteGraph::cycle(3)],
        vec![FiniteGraph::complete(3), FiniteGraph::path(3)],
        vec![FiniteGraph::complete(2), FiniteGraph::complete(2)],
    ];
    for factors in &sets {
        let s = builders::free_product(factors)?;
        let engine = solver::critical_probability(&s, &SolverOptions::default())?;
        let chis = factors
            .iter()
            .map(closedform::chi_polynomial)
            .collect::<perctree::Result<Vec<_>>>()?;
        let exact = closedform::free_product_pc(&chis)?;
        println!("{:<10} engine {:.12}  polynomial {:.12}", s.name, engine.p_c, exact);
    }
    Ok(())
}
