//! Writing, reading, validating and enlarging a structure file.

use perctree::{builders, structure};

fn main() -> perctree::Result<()> {
    let sl2z = builders::sl2z();
    let text = structure::serialize(&sl2z);
    let back = structure::parse(text.as_bytes())?;
    assert_eq!(back, sl2z);
    println!("{} models, valid: {}", back.models.len(), back.validate().is_valid());

    let mut broken = back.clone();
    broken.models[0].border = vec![0, 9];
    for d in broken.validate().errors {
        println!("error: {d}");
    }

    let big = structure::enlarge(&sl2z)?;
    for m in &big.models {
        println!(
            "enlarged {}: {} vertices, {} edges, {} children",
            m.name,
            m.vertices,
            m.edges.len(),
            m.children.len()
        );
    }
    Ok(())
}
