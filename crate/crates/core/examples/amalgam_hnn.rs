//! Amalgamated products and HNN extensions of finite Cayley graphs.

use perctree::{builders, solver, FiniteGraph, SolverOptions};

fn main() -> perctree::Result<()> {
    let opts = SolverOptions::default();
    let z4_z6 = builders::amalgam(
        &FiniteGraph::cycle(4),
        &[vec![0, 2], vec![1, 3]],
        &FiniteGraph::cycle(6),
        &[vec![0, 3], vec![1, 4], vec![2, 5]],
    )?;
    let z6_z6 = builders::amalgam(
        &FiniteGraph::cycle(6),
        &[vec![0, 3], vec![1, 4], vec![2, 5]],
        &FiniteGraph::cycle(6),
        &[vec![0, 3], vec![1, 4], vec![2, 5]],
    )?;
    let z = builders::hnn(&FiniteGraph::complete(1), &[vec![0]], &[vec![0]], &[0])?;
    let bs = builders::hnn(&FiniteGraph::cycle(2), &[vec![0], vec![1]], &[vec![0], vec![1]], &[0])?;
    for s in [z4_z6, z6_z6, z, bs] {
        let r = solver::critical_probability(&s, &opts)?;
        let flag = if r.no_subcritical_root {
            " (no subcritical root)"
        } else {
            ""
        };
        println!("{:<12} p_c = {:.10}{flag}", s.name, r.p_c);
    }
    Ok(())
}
