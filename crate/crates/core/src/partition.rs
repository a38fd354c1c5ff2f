//! Set partitions of ordered border lists, colors, and the two union-find
//! kernels: the partition a piece induces on its border (from open edges and
//! its children's descendant partitions) and the color a child slot inherits
//! (from the parent's color, open edges, and the siblings' partitions).

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::structure::{ModelPiece, Piece};

/// Largest border size accepted by [`enumerate_partitions`]; Bell(12) = 4,213,597.
pub const MAX_ENUMERATED_BORDER: usize = 12;

/// A set partition of `n` ordered positions, stored as its restricted-growth
/// string: `rgs[0] = 0` and `rgs[i] <= 1 + max(rgs[..i])`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    rgs: Vec<u8>,
}

impl Partition {
    pub fn from_rgs(rgs: Vec<u8>) -> Result<Self> {
        let mut next = 0u8;
        for (i, &r) in rgs.iter().enumerate() {
            if r > next {
                return Err(Error::InvalidArgument(format!(
                    "not a restricted-growth string: position {i} has {r}, at most {next} allowed"
                )));
            }
            if r == next {
                next += 1;
            }
        }
        Ok(Partition { rgs })
    }

    /// Canonical partition from arbitrary block labels (equal label = same block).
    pub fn from_labels<T: PartialEq + Copy>(labels: &[T]) -> Self {
        let mut seen: Vec<T> = Vec::with_capacity(labels.len());
        let rgs = labels
            .iter()
            .map(|l| match seen.iter().position(|s| s == l) {
                Some(b) => b as u8,
                None => {
                    seen.push(*l);
                    (seen.len() - 1) as u8
                }
            })
            .collect();
        Partition { rgs }
    }

    /// All positions in separate blocks.
    pub fn diagonal(n: usize) -> Self {
        Partition {
            rgs: (0..n as u8).collect(),
        }
    }

    pub fn single_block(n: usize) -> Self {
        Partition { rgs: vec![0; n] }
    }

    pub fn rgs(&self) -> &[u8] {
        &self.rgs
    }

    pub fn len(&self) -> usize {
        self.rgs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rgs.is_empty()
    }

    pub fn block_count(&self) -> usize {
        self.rgs.iter().map(|&r| r as usize + 1).max().unwrap_or(0)
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.rgs[i] as usize
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.rgs[i] == self.rgs[j]
    }

    /// True when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.len() == coarser.len()
            && (0..self.len()).all(|i| (0..i).all(|j| !self.same_block(i, j) || coarser.same_block(i, j)))
    }

    /// First position of every block, indexed by block.
    fn leaders(&self) -> Vec<usize> {
        let mut lead = Vec::with_capacity(self.block_count());
        for (i, &r) in self.rgs.iter().enumerate() {
            if r as usize == lead.len() {
                lead.push(i);
            }
        }
        lead
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits: Vec<String> = self.rgs.iter().map(|r| r.to_string()).collect();
        write!(f, "[{}]", digits.join(","))
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rgs.serialize(s)
    }
}

/// Every partition of `n` positions in lexicographic rgs order.
pub fn enumerate_partitions(n: usize) -> Result<Vec<Partition>> {
    if n == 0 || n > MAX_ENUMERATED_BORDER {
        return Err(Error::Guard(format!(
            "border size {n} outside 1..={MAX_ENUMERATED_BORDER}"
        )));
    }
    fn rec(prefix: &mut Vec<u8>, max: u8, n: usize, out: &mut Vec<Partition>) {
        if prefix.len() == n {
            out.push(Partition { rgs: prefix.clone() });
            return;
        }
        for r in 0..=max + 1 {
            prefix.push(r);
            rec(prefix, max.max(r), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    let mut prefix = vec![0u8];
    rec(&mut prefix, 0, n, &mut out);
    Ok(out)
}

/// Partition of a border plus the block connected to the origin, if any.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Color {
    pub partition: Partition,
    pub marked: Option<u8>,
}

impl Color {
    pub fn new(partition: Partition, marked: Option<usize>) -> Result<Self> {
        if let Some(b) = marked {
            if b >= partition.block_count() {
                return Err(Error::InvalidArgument(format!(
                    "marked block {b} out of range for {partition}"
                )));
            }
        }
        Ok(Color {
            partition,
            marked: marked.map(|b| b as u8),
        })
    }

    /// The color of the root's border `[origin]`.
    pub fn origin() -> Self {
        Color {
            partition: Partition::diagonal(1),
            marked: Some(0),
        }
    }

    pub fn is_white(&self) -> bool {
        self.marked.is_none()
    }

    /// Whether border position `i` is connected to the origin.
    pub fn is_marked(&self, i: usize) -> bool {
        self.marked == Some(self.partition.rgs[i])
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.marked {
            Some(b) => write!(f, "{}*{}", self.partition, b),
            None => write!(f, "{}*white", self.partition),
        }
    }
}

/// Open edges of a piece: bit `k` set means edge `k` is open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct EdgeSubset(pub u64);

impl EdgeSubset {
    pub fn empty() -> Self {
        EdgeSubset(0)
    }

    pub fn full(edges: usize) -> Self {
        assert!(edges <= 64);
        EdgeSubset(if edges == 64 { u64::MAX } else { (1u64 << edges) - 1 })
    }

    pub fn from_edges(indices: &[usize]) -> Self {
        EdgeSubset(indices.iter().fold(0, |m, &k| m | (1u64 << k)))
    }

    pub fn contains(self, k: usize) -> bool {
        self.0 >> k & 1 == 1
    }

    pub fn with(self, k: usize) -> Self {
        EdgeSubset(self.0 | 1u64 << k)
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }
}

/// Union-find with path halving. The caller owns it and reuses it as scratch.
#[derive(Debug, Clone, Default)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn reset(&mut self, n: usize) {
        self.parent.clear();
        self.parent.extend(0..n);
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb] = ra;
        }
    }
}

/// Borrowed view of a piece's shape, shared by the public kernels and the engine.
#[derive(Debug, Clone)]
pub(crate) struct Kernel<'a> {
    pub vertices: usize,
    pub edges: &'a [[usize; 2]],
    pub border: &'a [usize],
    pub attaches: Vec<&'a [usize]>,
}

impl<'a> Kernel<'a> {
    pub fn from_model(m: &'a ModelPiece) -> Self {
        Kernel {
            vertices: m.vertices,
            edges: &m.edges,
            border: &m.border,
            attaches: m.children.iter().map(|c| c.attach.as_slice()).collect(),
        }
    }

    pub fn from_piece(p: &'a Piece) -> Self {
        Kernel {
            vertices: p.vertices,
            edges: &p.edges,
            border: &p.border,
            attaches: p.slots.iter().map(|(_, a)| a.as_slice()).collect(),
        }
    }

    fn open_edges(&self, open: EdgeSubset, uf: &mut UnionFind) {
        let mut bits = open.0;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            let [a, b] = self.edges[k];
            uf.union(a, b);
            bits &= bits - 1;
        }
    }

    fn glue(uf: &mut UnionFind, positions: &[usize], partition: &Partition) {
        let leaders = partition.leaders();
        for (i, &r) in partition.rgs.iter().enumerate() {
            let l = leaders[r as usize];
            if l != i {
                uf.union(positions[l], positions[i]);
            }
        }
    }

    /// Connectivity among border vertices through the piece and its children.
    pub fn induced(&self, open: EdgeSubset, children: &[&Partition], uf: &mut UnionFind) -> Partition {
        uf.reset(self.vertices);
        self.open_edges(open, uf);
        for (attach, part) in self.attaches.iter().zip(children) {
            Self::glue(uf, attach, part);
        }
        let labels: Vec<usize> = self.border.iter().map(|&v| uf.find(v)).collect();
        Partition::from_labels(&labels)
    }

    /// Color of slot `target`. `siblings[target]` is ignored.
    pub fn child_color(
        &self,
        parent: &Color,
        open: EdgeSubset,
        siblings: &[Option<&Partition>],
        target: usize,
        uf: &mut UnionFind,
    ) -> Color {
        let origin = self.vertices;
        uf.reset(self.vertices + 1);
        Self::glue(uf, self.border, &parent.partition);
        if let Some(b) = parent.marked {
            let pos = parent.partition.rgs.iter().position(|&r| r == b).unwrap();
            uf.union(origin, self.border[pos]);
        }
        self.open_edges(open, uf);
        for (k, (attach, part)) in self.attaches.iter().zip(siblings).enumerate() {
            if k != target {
                if let Some(part) = part {
                    Self::glue(uf, attach, part);
                }
            }
        }
        let root = uf.find(origin);
        let labels: Vec<usize> = self.attaches[target].iter().map(|&v| uf.find(v)).collect();
        let partition = Partition::from_labels(&labels);
        let marked = labels.iter().position(|&l| l == root).map(|i| partition.rgs[i]);
        Color { partition, marked }
    }
}

fn check_edges(piece: &ModelPiece, open: EdgeSubset) -> Result<()> {
    if piece.edges.len() > 64 || (piece.edges.len() < 64 && open.0 >> piece.edges.len() != 0) {
        return Err(Error::Dimension(format!(
            "edge subset {:#x} does not fit {} edges",
            open.0,
            piece.edges.len()
        )));
    }
    Ok(())
}

fn check_slot(piece: &ModelPiece, k: usize, part: &Partition) -> Result<()> {
    let want = piece.children[k].attach.len();
    if part.len() != want {
        return Err(Error::Dimension(format!(
            "partition for child slot {k} has {} positions, slot has {want}",
            part.len()
        )));
    }
    Ok(())
}

/// Partition of `piece.border` induced by the open edges and the children's
/// descendant partitions (one per child slot, in slot order).
pub fn induced_partition(piece: &ModelPiece, open: EdgeSubset, child_partitions: &[Partition]) -> Result<Partition> {
    check_edges(piece, open)?;
    if child_partitions.len() != piece.children.len() {
        return Err(Error::Dimension(format!(
            "{} child partitions for {} child slots",
            child_partitions.len(),
            piece.children.len()
        )));
    }
    for (k, p) in child_partitions.iter().enumerate() {
        check_slot(piece, k, p)?;
    }
    let refs: Vec<&Partition> = child_partitions.iter().collect();
    let mut uf = UnionFind::default();
    Ok(Kernel::from_model(piece).induced(open, &refs, &mut uf))
}

/// Color of child slot `target` given the parent's color, the open edges and
/// the descendant partitions of every other slot (`sibling_partitions` lists
/// them in slot order with `target` skipped).
pub fn child_color(
    piece: &ModelPiece,
    parent_color: &Color,
    open: EdgeSubset,
    sibling_partitions: &[Partition],
    target: usize,
) -> Result<Color> {
    check_edges(piece, open)?;
    if target >= piece.children.len() {
        return Err(Error::InvalidArgument(format!(
            "target slot {target} out of range ({} slots)",
            piece.children.len()
        )));
    }
    if parent_color.partition.len() != piece.border.len() {
        return Err(Error::Dimension(format!(
            "parent color has {} positions, border has {}",
            parent_color.partition.len(),
            piece.border.len()
        )));
    }
    if sibling_partitions.len() + 1 != piece.children.len() {
        return Err(Error::Dimension(format!(
            "{} sibling partitions for {} child slots",
            sibling_partitions.len(),
            piece.children.len()
        )));
    }
    let mut siblings: Vec<Option<&Partition>> = Vec::with_capacity(piece.children.len());
    let mut it = sibling_partitions.iter();
    for k in 0..piece.children.len() {
        if k == target {
            siblings.push(None);
        } else {
            let p = it.next().unwrap();
            check_slot(piece, k, p)?;
            siblings.push(Some(p));
        }
    }
    let mut uf = UnionFind::default();
    Ok(Kernel::from_model(piece).child_color(parent_color, open, &siblings, target, &mut uf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::ChildSlot;

    fn square() -> ModelPiece {
        ModelPiece {
            name: "square".into(),
            vertices: 4,
            edges: vec![[0, 1], [1, 2], [2, 3], [3, 0]],
            border: vec![0, 2],
            children: vec![ChildSlot {
                model: "hexagon".into(),
                attach: vec![1, 3],
            }],
        }
    }

    fn p(rgs: &[u8]) -> Partition {
        Partition::from_rgs(rgs.to_vec()).unwrap()
    }

    #[test]
    fn enumeration_small_cases() {
        assert_eq!(enumerate_partitions(1).unwrap(), vec![p(&[0])]);
        assert_eq!(enumerate_partitions(2).unwrap(), vec![p(&[0, 0]), p(&[0, 1])]);
        assert_eq!(enumerate_partitions(4).unwrap().len(), 15);
        let bells = [1, 2, 5, 15, 52, 203, 877, 4140];
        for (n, &b) in bells.iter().enumerate() {
            let all = enumerate_partitions(n + 1).unwrap();
            assert_eq!(all.len(), b);
            assert!(all.windows(2).all(|w| w[0] < w[1]));
        }
        assert!(enumerate_partitions(0).is_err());
        assert!(enumerate_partitions(13).is_err());
    }

    #[test]
    fn rgs_validation() {
        assert!(Partition::from_rgs(vec![0, 2]).is_err());
        assert!(Partition::from_rgs(vec![1]).is_err());
        assert_eq!(Partition::from_labels(&[7, 3, 7, 9]), p(&[0, 1, 0, 2]));
        assert!(p(&[0, 1, 2]).refines(&p(&[0, 0, 1])));
        assert!(!p(&[0, 0, 1]).refines(&p(&[0, 1, 2])));
    }

    #[test]
    fn induced_on_square() {
        let sq = square();
        let e = |ks: &[usize]| EdgeSubset::from_edges(ks);
        assert_eq!(induced_partition(&sq, e(&[]), &[p(&[0, 1])]).unwrap(), p(&[0, 1]));
        assert_eq!(induced_partition(&sq, e(&[0, 1]), &[p(&[0, 1])]).unwrap(), p(&[0, 0]));
        assert_eq!(induced_partition(&sq, e(&[0, 2]), &[p(&[0, 0])]).unwrap(), p(&[0, 0]));
        assert_eq!(induced_partition(&sq, e(&[0, 2]), &[p(&[0, 1])]).unwrap(), p(&[0, 1]));
    }

    #[test]
    fn child_color_on_square() {
        let sq = square();
        let e = |ks: &[usize]| EdgeSubset::from_edges(ks);
        let first_marked = Color::new(p(&[0, 1]), Some(0)).unwrap();
        assert_eq!(
            child_color(&sq, &first_marked, e(&[0]), &[], 0).unwrap(),
            Color::new(p(&[0, 1]), Some(0)).unwrap()
        );
        let white = child_color(&sq, &first_marked, e(&[]), &[], 0).unwrap();
        assert_eq!(white, Color::new(p(&[0, 1]), None).unwrap());
        assert!(white.is_white());
        let red = Color::new(p(&[0, 0]), Some(0)).unwrap();
        assert_eq!(
            child_color(&sq, &red, EdgeSubset::full(4), &[], 0).unwrap(),
            Color::new(p(&[0, 0]), Some(0)).unwrap()
        );
        // origin reaches v3 only: v0-v3 open
        assert_eq!(
            child_color(&sq, &first_marked, e(&[3]), &[], 0).unwrap(),
            Color::new(p(&[0, 1]), Some(1)).unwrap()
        );
    }

    #[test]
    fn kernel_errors() {
        let sq = square();
        assert!(matches!(
            induced_partition(&sq, EdgeSubset::empty(), &[p(&[0])]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            induced_partition(&sq, EdgeSubset(1 << 7), &[p(&[0, 1])]),
            Err(Error::Dimension(_))
        ));
        let c = Color::origin();
        assert!(child_color(&sq, &c, EdgeSubset::empty(), &[], 0).is_err());
        let c = Color::new(p(&[0, 1]), Some(0)).unwrap();
        assert!(child_color(&sq, &c, EdgeSubset::empty(), &[], 3).is_err());
        assert!(Color::new(p(&[0, 0]), Some(1)).is_err());
    }
}
