//! Probability that the origin's open cluster reaches the frontier of a
//! finite unfolding, with a 99% Wilson interval.

use perctree::builders;
use perctree::montecarlo::{estimate_reach, unfold, ReachEstimate};

fn main() -> perctree::Result<()> {
    let graph = unfold(&builders::sl2z(), 8)?;
    println!("{} vertices, {} edges", graph.vertex_count(), graph.edge_count());
    println!("{}", ReachEstimate::CSV_HEADER);
    for p in [0.3, 0.4, 0.5, 0.6] {
        println!("{}", estimate_reach(&graph, p, 2000, 11)?.csv_row());
    }
    Ok(())
}
