//! Border partitions and colors induced by open edges of a single piece.

use perctree::partition::{child_color, enumerate_partitions, induced_partition};
use perctree::{builders, Color, EdgeSubset, Partition};

fn main() -> perctree::Result<()> {
    for n in 1..=4 {
        println!("{n} border vertices: {} partitions", enumerate_partitions(n)?.len());
    }
    let square = &builders::sl2z().models[0];
    let child = [Partition::diagonal(2)];
    let open = EdgeSubset::from_edges(&[0, 1]);
    let z = induced_partition(square, open, &child)?;
    println!("edges 0,1 open: border partition {z}");
    let parent = Color::new(Partition::diagonal(2), Some(0))?;
    let color = child_color(square, &parent, open, &[], 0)?;
    println!("parent {parent}, edges 0,1 open: child color {color}");
    Ok(())
}
