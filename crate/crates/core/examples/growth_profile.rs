//! Expected number of children of each color per generation, below and above p_c.

use perctree::{builders, Engine, SolverOptions};

fn main() -> perctree::Result<()> {
    let engine = Engine::new(&builders::sl2z())?;
    let opts = SolverOptions::default();
    for p in [0.35, 0.5] {
        println!("p = {p}");
        for (n, gen) in engine.growth_profile(p, 8, &opts)?.iter().enumerate() {
            println!("  generation {n}: {:.6}", gen.iter().sum::<f64>());
        }
    }
    let dist = engine.partition_distribution(0.5, 1e-12, 100_000)?;
    for (t, total) in engine.color_space().types().iter().zip(engine.first_generation(&dist)?) {
        println!("{} {}: {total:.6}", t.model_name, t.color);
    }
    Ok(())
}
