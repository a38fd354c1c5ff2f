//! p-independent enumeration tables. Every count is indexed by the number of
//! open edges, so evaluating at a given p only needs the weights
//! `p^c (1-p)^(E-c)`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::{Color, EdgeSubset, Kernel, Partition, UnionFind};
use crate::structure::Piece;

pub(crate) const MAX_PIECE_EDGES: usize = 24;
pub(crate) const MAX_COMBINATIONS: usize = 1 << 20;
const MAX_TABLE_ENTRIES: usize = 1 << 28;

/// Mixed-radix index over one choice per position; position 0 varies slowest.
#[derive(Debug, Clone)]
pub(crate) struct Radix {
    pub sizes: Vec<usize>,
    pub total: usize,
}

impl Radix {
    pub fn new(sizes: Vec<usize>, piece: &str) -> Result<Self> {
        let mut total = 1usize;
        for &s in &sizes {
            total = total.saturating_mul(s);
            if total > MAX_COMBINATIONS {
                return Err(Error::Guard(format!(
                    "piece '{piece}' has more than {MAX_COMBINATIONS} child-partition combinations; \
                     the pieces are too large, was enlarge applied too often?"
                )));
            }
        }
        Ok(Radix { sizes, total })
    }

    pub fn digits(&self, mut idx: usize, out: &mut [usize]) {
        for (d, &s) in out.iter_mut().zip(&self.sizes).rev() {
            *d = idx % s;
            idx /= s;
        }
    }
}

pub(crate) fn edge_guard(piece: &Piece) -> Result<()> {
    if piece.edges.len() > MAX_PIECE_EDGES {
        return Err(Error::Guard(format!(
            "piece '{}' has {} edges, at most {MAX_PIECE_EDGES} are enumerated; \
             the pieces are too large, was enlarge applied too often?",
            piece.name,
            piece.edges.len()
        )));
    }
    Ok(())
}

/// Least fixed point of the support map, starting from the diagonal partitions.
pub(crate) fn supports(models: &[Piece]) -> Result<Vec<Vec<Partition>>> {
    for m in models {
        edge_guard(m)?;
    }
    let mut supp: Vec<BTreeSet<Partition>> = models
        .iter()
        .map(|m| BTreeSet::from([Partition::diagonal(m.border.len())]))
        .collect();
    loop {
        let mut changed = false;
        for (j, m) in models.iter().enumerate() {
            let lists: Vec<Vec<Partition>> = m
                .slots
                .iter()
                .map(|(c, _)| supp[*c].iter().cloned().collect())
                .collect();
            let radix = Radix::new(lists.iter().map(Vec::len).collect(), &m.name)?;
            let kernel = Kernel::from_piece(m);
            let subsets = 1u64 << m.edges.len();
            let found = (0..radix.total)
                .into_par_iter()
                .fold(BTreeSet::new, |mut acc, combo| {
                    let mut digits = vec![0; lists.len()];
                    radix.digits(combo, &mut digits);
                    let parts: Vec<&Partition> = digits.iter().zip(&lists).map(|(&d, l)| &l[d]).collect();
                    let mut uf = UnionFind::default();
                    for g in 0..subsets {
                        acc.insert(kernel.induced(EdgeSubset(g), &parts, &mut uf));
                    }
                    acc
                })
                .reduce(BTreeSet::new, |mut a, b| {
                    a.extend(b);
                    a
                });
            for z in found {
                changed |= supp[j].insert(z);
            }
        }
        if !changed {
            break;
        }
    }
    Ok(supp.into_iter().map(|s| s.into_iter().collect()).collect())
}

/// Counts of edge subsets, by size, inducing each supported border partition,
/// for every combination of supported child partitions.
#[derive(Debug, Clone)]
pub(crate) struct PsiTable {
    pub radix: Radix,
    pub edges: usize,
    pub outputs: usize,
    /// `counts[(combo * outputs + z) * (edges + 1) + c]`
    pub counts: Vec<u32>,
}

pub(crate) fn psi_table(
    piece: &Piece,
    supports: &[Vec<Partition>],
    index: &[HashMap<Partition, usize>],
    own: usize,
) -> Result<PsiTable> {
    let radix = Radix::new(
        piece.slots.iter().map(|(c, _)| supports[*c].len()).collect(),
        &piece.name,
    )?;
    let edges = piece.edges.len();
    let outputs = supports[own].len();
    let row = outputs * (edges + 1);
    if radix.total.saturating_mul(row) > MAX_TABLE_ENTRIES {
        return Err(Error::Guard(format!(
            "partition table for piece '{}' is too large",
            piece.name
        )));
    }
    let kernel = Kernel::from_piece(piece);
    let counts: Vec<u32> = (0..radix.total)
        .into_par_iter()
        .flat_map_iter(|combo| {
            let mut digits = vec![0; piece.slots.len()];
            radix.digits(combo, &mut digits);
            let parts: Vec<&Partition> = digits
                .iter()
                .zip(&piece.slots)
                .map(|(&d, (c, _))| &supports[*c][d])
                .collect();
            let mut out = vec![0u32; row];
            let mut uf = UnionFind::default();
            for g in 0..1u64 << edges {
                let z = kernel.induced(EdgeSubset(g), &parts, &mut uf);
                out[index[own][&z] * (edges + 1) + g.count_ones() as usize] += 1;
            }
            out
        })
        .collect();
    Ok(PsiTable {
        radix,
        edges,
        outputs,
        counts,
    })
}

/// One aggregated outcome of a child slot: for sibling combination `combo`,
/// the slot receives `child` (`None` for white) on `counts[c]` edge subsets of
/// size `c`.
#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub combo: usize,
    pub child: Option<usize>,
    pub counts: Vec<u32>,
}

#[derive(Debug, Clone)]
pub(crate) struct SlotTable {
    pub slot: usize,
    /// Slots other than `slot`, in order, with the radix over their supports.
    pub siblings: Vec<usize>,
    pub radix: Radix,
    pub outcomes: Vec<Outcome>,
}

/// A nonwhite type: piece index (models first, the root last) and color.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct State {
    pub piece: usize,
    pub color: Color,
}

/// Breadth-first closure of nonwhite types from the root's origin color, with
/// the transition tables of every type. State 0 is the root.
pub(crate) fn color_closure(
    pieces: &[Piece],
    root: usize,
    supports: &[Vec<Partition>],
) -> Result<(Vec<State>, Vec<Vec<SlotTable>>)> {
    let mut states = vec![State {
        piece: root,
        color: Color::origin(),
    }];
    let mut ids: HashMap<State, usize> = HashMap::from([(states[0].clone(), 0)]);
    let mut tables: Vec<Vec<SlotTable>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        let state = states[s].clone();
        let piece = &pieces[state.piece];
        edge_guard(piece)?;
        let kernel = Kernel::from_piece(piece);
        let mut slot_tables = Vec::with_capacity(piece.slots.len());
        for (v, &(child_model, _)) in piece.slots.iter().enumerate() {
            let siblings: Vec<usize> = (0..piece.slots.len()).filter(|&k| k != v).collect();
            let radix = Radix::new(
                siblings.iter().map(|&k| supports[piece.slots[k].0].len()).collect(),
                &piece.name,
            )?;
            let edges = piece.edges.len();
            let found: BTreeMap<(usize, Color), Vec<u32>> = (0..radix.total)
                .into_par_iter()
                .fold(BTreeMap::new, |mut acc: BTreeMap<(usize, Color), Vec<u32>>, combo| {
                    let mut digits = vec![0; siblings.len()];
                    radix.digits(combo, &mut digits);
                    let mut parts: Vec<Option<&Partition>> = vec![None; piece.slots.len()];
                    for (&k, &d) in siblings.iter().zip(&digits) {
                        parts[k] = Some(&supports[piece.slots[k].0][d]);
                    }
                    let mut uf = UnionFind::default();
                    for g in 0..1u64 << edges {
                        let c = kernel.child_color(&state.color, EdgeSubset(g), &parts, v, &mut uf);
                        acc.entry((combo, c)).or_insert_with(|| vec![0; edges + 1])[g.count_ones() as usize] += 1;
                    }
                    acc
                })
                .reduce(BTreeMap::new, |mut a, b| {
                    for (k, counts) in b {
                        let e = a.entry(k).or_insert_with(|| vec![0; counts.len()]);
                        for (x, y) in e.iter_mut().zip(counts) {
                            *x += y;
                        }
                    }
                    a
                });
            let mut outcomes = Vec::with_capacity(found.len());
            for ((combo, color), counts) in found {
                let child = if color.is_white() {
                    None
                } else {
                    let key = State {
                        piece: child_model,
                        color,
                    };
                    let id = *ids.entry(key.clone()).or_insert_with(|| {
                        states.push(key);
                        queue.push_back(states.len() - 1);
                        states.len() - 1
                    });
                    Some(id)
                };
                outcomes.push(Outcome { combo, child, counts });
            }
            slot_tables.push(SlotTable {
                slot: v,
                siblings,
                radix,
                outcomes,
            });
        }
        tables.push(slot_tables);
    }
    Ok((states, tables))
}
