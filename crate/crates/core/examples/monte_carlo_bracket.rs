//! Monte Carlo bracket for the critical probability of the grandparent graph.

use perctree::{builders, montecarlo};

fn main() -> perctree::Result<()> {
    let structure = builders::grandparent();
    let graph = montecarlo::unfold(&structure, 10)?;
    println!(
        "depth 10: {} vertices, {} edges",
        graph.vertex_count(),
        graph.edge_count()
    );
    let bracket = montecarlo::bracket_pc(&structure, 10, 10_000, 7)?;
    for e in &bracket.evaluations {
        println!(
            "p = {:.3}  growth {:.4} [{:.4}, {:.4}]  {:?}",
            e.p, e.ratio, e.ci[0], e.ci[1], e.phase
        );
    }
    println!("p_c in [{}, {}]", bracket.p_lo, bracket.p_hi);
    if let Some(w) = bracket.warning {
        println!("warning: {w}");
    }
    Ok(())
}
