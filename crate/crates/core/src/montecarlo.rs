//! Finite unfoldings of a structure and Bernoulli bond percolation on them.
//!
//! Pieces are instantiated generation by generation, so vertex and edge
//! indices of `unfold(s, d)` are a prefix of those of `unfold(s, d + 1)`. Edge
//! states come from a counter-based generator keyed by `(seed, trial, edge)`,
//! which couples runs across `p`, depth and thread count.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::g17;
use crate::structure::{Resolved, TreeStructure};

pub const MAX_UNFOLDED_VERTICES: usize = 10_000_000;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.5758293035489;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PieceInstance {
    /// Model index, `None` for the root.
    pub model: Option<usize>,
    pub depth: usize,
    /// Parent instance and the slot of the parent this instance fills.
    pub parent: Option<(usize, usize)>,
    /// Global vertex of each local vertex.
    pub vertices: Vec<usize>,
}

/// A finite depth-`n` instantiation of a structure.
#[derive(Debug, Clone)]
pub struct UnfoldedGraph {
    pub depth: usize,
    pub instances: Vec<PieceInstance>,
    /// Creating instance and local index of every vertex.
    pub provenance: Vec<(usize, usize)>,
    pub edges: Vec<[usize; 2]>,
    /// Instance owning each edge.
    pub edge_instance: Vec<usize>,
    pub origin: usize,
    /// Attach vertices of the child slots of the deepest pieces.
    pub frontier: Vec<bool>,
    offsets: Vec<usize>,
    adjacency: Vec<(usize, usize)>,
}

impl UnfoldedGraph {
    pub fn vertex_count(&self) -> usize {
        self.provenance.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Depth of the piece instance that created vertex `v`.
    pub fn vertex_depth(&self, v: usize) -> usize {
        self.instances[self.provenance[v].0].depth
    }

    /// `(neighbor, edge index)` pairs of vertex `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn frontier_vertices(&self) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| self.frontier[v]).collect()
    }
}

/// Instantiates the root and every piece down to `depth` generations below it.
pub fn unfold(structure: &TreeStructure, depth: usize) -> Result<UnfoldedGraph> {
    let resolved = Resolved::new(structure)?;
    let guard = |n: usize| {
        if n > MAX_UNFOLDED_VERTICES {
            Err(Error::Guard(format!(
                "unfolding to depth {depth} exceeds {MAX_UNFOLDED_VERTICES} vertices"
            )))
        } else {
            Ok(())
        }
    };
    let mut provenance: Vec<(usize, usize)> = Vec::new();
    let mut edges = Vec::new();
    let mut edge_instance = Vec::new();
    let mut instances: Vec<PieceInstance> = Vec::new();

    let root = &resolved.root;
    guard(root.vertices)?;
    provenance.extend((0..root.vertices).map(|l| (0, l)));
    instances.push(PieceInstance {
        model: None,
        depth: 0,
        parent: None,
        vertices: (0..root.vertices).collect(),
    });
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let piece = match instances[i].model {
            None => root,
            Some(j) => &resolved.models[j],
        };
        for &[a, b] in &piece.edges {
            edges.push([instances[i].vertices[a], instances[i].vertices[b]]);
            edge_instance.push(i);
        }
        if instances[i].depth == depth {
            continue;
        }
        for (k, (child, attach)) in piece.slots.iter().enumerate() {
            let model = &resolved.models[*child];
            let id = instances.len();
            let mut map = vec![usize::MAX; model.vertices];
            for (pos, &b) in model.border.iter().enumerate() {
                map[b] = instances[i].vertices[attach[pos]];
            }
            for (l, m) in map.iter_mut().enumerate() {
                if *m == usize::MAX {
                    *m = provenance.len();
                    provenance.push((id, l));
                }
            }
            guard(provenance.len())?;
            instances.push(PieceInstance {
                model: Some(*child),
                depth: instances[i].depth + 1,
                parent: Some((i, k)),
                vertices: map,
            });
            queue.push_back(id);
        }
    }

    let n = provenance.len();
    let mut frontier = vec![false; n];
    for inst in instances.iter().filter(|inst| inst.depth == depth) {
        let piece = match inst.model {
            None => root,
            Some(j) => &resolved.models[j],
        };
        for (_, attach) in &piece.slots {
            for &a in attach {
                frontier[inst.vertices[a]] = true;
            }
        }
    }

    let mut offsets = vec![0usize; n + 1];
    for &[a, b] in &edges {
        offsets[a + 1] += 1;
        offsets[b + 1] += 1;
    }
    for v in 0..n {
        offsets[v + 1] += offsets[v];
    }
    let mut fill = offsets.clone();
    let mut adjacency = vec![(0, 0); offsets[n]];
    for (e, &[a, b]) in edges.iter().enumerate() {
        adjacency[fill[a]] = (b, e);
        fill[a] += 1;
        adjacency[fill[b]] = (a, e);
        fill[b] += 1;
    }
    Ok(UnfoldedGraph {
        depth,
        origin: root.border[0],
        instances,
        provenance,
        edges,
        edge_instance,
        frontier,
        offsets,
        adjacency,
    })
}

/// Uniform in [0,1) attached to `edge` in `trial`; the edge is open iff it is below `p`.
pub fn edge_uniform(seed: u64, trial: u64, edge: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng.set_word_pos(2 * edge as u128);
    rng.gen::<f64>()
}

/// Reusable per-worker state for cluster explorations.
#[derive(Debug, Default)]
struct Scratch {
    stamp: Vec<u32>,
    round: u32,
    stack: Vec<usize>,
}

impl Scratch {
    fn start(&mut self, n: usize) {
        if self.stamp.len() != n || self.round == u32::MAX {
            self.stamp = vec![0; n];
            self.round = 0;
        }
        self.round += 1;
    }

    fn visit(&mut self, v: usize) -> bool {
        if self.stamp[v] == self.round {
            false
        } else {
            self.stamp[v] = self.round;
            true
        }
    }
}

/// Depth-first exploration of the open cluster of the origin; `on_vertex`
/// returns `true` to stop early.
fn explore(
    graph: &UnfoldedGraph,
    p: f64,
    seed: u64,
    trial: u64,
    scratch: &mut Scratch,
    mut on_vertex: impl FnMut(usize) -> bool,
) {
    scratch.start(graph.vertex_count());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    scratch.stack.clear();
    scratch.visit(graph.origin);
    scratch.stack.push(graph.origin);
    if on_vertex(graph.origin) {
        return;
    }
    while let Some(v) = scratch.stack.pop() {
        for &(w, e) in graph.neighbors(v) {
            if scratch.stamp[w] == scratch.round {
                continue;
            }
            rng.set_word_pos(2 * e as u128);
            if rng.gen::<f64>() < p && scratch.visit(w) {
                if on_vertex(w) {
                    return;
                }
                scratch.stack.push(w);
            }
        }
    }
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> [f64; 2] {
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    [lo, hi]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachEstimate {
    pub p: f64,
    pub reached: usize,
    pub trials: usize,
    pub estimate: f64,
    /// Wilson 99% interval.
    pub ci: [f64; 2],
    pub depth: usize,
    pub seed: u64,
}

impl ReachEstimate {
    pub const CSV_HEADER: &'static str = "p,reach_estimate,ci_lo,ci_hi,trials,depth,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            g17(self.p),
            g17(self.estimate),
            g17(self.ci[0]),
            g17(self.ci[1]),
            self.trials,
            self.depth,
            self.seed
        )
    }
}

/// Fraction of trials in which the open cluster of the origin meets the frontier.
pub fn estimate_reach(graph: &UnfoldedGraph, p: f64, trials: usize, seed: u64) -> Result<ReachEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} outside [0,1]")));
    }
    let reached = (0..trials as u64)
        .into_par_iter()
        .map_init(Scratch::default, |scratch, trial| {
            let mut hit = false;
            explore(graph, p, seed, trial, scratch, |v| {
                hit = graph.frontier[v];
                hit
            });
            hit as usize
        })
        .sum();
    Ok(ReachEstimate {
        p,
        reached,
        trials,
        estimate: reached as f64 / trials as f64,
        ci: wilson_interval(reached, trials, Z99),
        depth: graph.depth,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Subcritical,
    Supercritical,
    Inconclusive,
}

/// Generation-to-generation growth of the expected cluster intersection at one `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthEstimate {
    pub p: f64,
    /// Mean number of reached vertices created at depths `depth - 5` and `depth - 3`.
    pub mean_early: f64,
    pub mean_late: f64,
    pub ratio: f64,
    pub ci: [f64; 2],
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bracket {
    pub p_lo: f64,
    pub p_hi: f64,
    pub depth: usize,
    pub trials: usize,
    pub seed: u64,
    pub warning: Option<String>,
    pub evaluations: Vec<GrowthEstimate>,
}

/// Spacing of the p grid searched by [`bracket_pc`].
pub const BRACKET_STEP: f64 = 0.005;

/// Generations left between the counted depths and the truncation, where
/// routes through missing descendants bias counts down.
pub const FRONTIER_GUARD: usize = 2;

/// Per-generation growth of the origin's cluster at `p`, with a 99% interval
/// from the delta method on the log of the mean ratio.
pub fn growth_estimate(graph: &UnfoldedGraph, p: f64, trials: usize, seed: u64) -> Result<GrowthEstimate> {
    if graph.depth < FRONTIER_GUARD + 3 {
        return Err(Error::InvalidArgument(format!(
            "growth estimates need depth at least {}",
            FRONTIER_GUARD + 3
        )));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("growth estimates need at least 2 trials".into()));
    }
    let late = graph.depth - 1 - FRONTIER_GUARD;
    let early = late - 2;
    let counts: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map_init(Scratch::default, |scratch, trial| {
            let (mut a, mut b) = (0u64, 0u64);
            explore(graph, p, seed, trial, scratch, |v| {
                let d = graph.vertex_depth(v);
                a += (d == early) as u64;
                b += (d == late) as u64;
                false
            });
            (a as f64, b as f64)
        })
        .collect();
    let n = trials as f64;
    let m0 = counts.iter().map(|c| c.0).sum::<f64>() / n;
    let m1 = counts.iter().map(|c| c.1).sum::<f64>() / n;
    let (mut s00, mut s11, mut s01) = (0.0, 0.0, 0.0);
    for &(a, b) in &counts {
        s00 += (a - m0) * (a - m0);
        s11 += (b - m1) * (b - m1);
        s01 += (a - m0) * (b - m1);
    }
    let (s00, s11, s01) = (s00 / (n - 1.0), s11 / (n - 1.0), s01 / (n - 1.0));
    let (ratio, ci, phase) = if m0 == 0.0 || m1 == 0.0 {
        (0.0, [0.0, 0.0], Phase::Subcritical)
    } else {
        let var = (s11 / (m1 * m1) + s00 / (m0 * m0) - 2.0 * s01 / (m0 * m1)) / n;
        let half = 0.5 * Z99 * var.max(0.0).sqrt();
        let log_ratio = 0.5 * (m1 / m0).ln();
        let ci = [(log_ratio - half).exp(), (log_ratio + half).exp()];
        let phase = if ci[0] > 1.0 {
            Phase::Supercritical
        } else if ci[1] < 1.0 {
            Phase::Subcritical
        } else {
            Phase::Inconclusive
        };
        (log_ratio.exp(), ci, phase)
    };
    Ok(GrowthEstimate {
        p,
        mean_early: m0,
        mean_late: m1,
        ratio,
        ci,
        phase,
    })
}

/// Brackets p_c between the largest grid `p` classified subcritical and the
/// smallest classified supercritical by [`growth_estimate`].
pub fn bracket_pc(structure: &TreeStructure, depth: usize, trials: usize, seed: u64) -> Result<Bracket> {
    let graph = unfold(structure, depth)?;
    let steps = (1.0 / BRACKET_STEP).round() as usize;
    let mut evaluations: Vec<GrowthEstimate> = Vec::new();
    let mut phase = |i: usize| -> Result<Phase> {
        if let Some(e) = evaluations.iter().find(|e| e.p == i as f64 * BRACKET_STEP) {
            return Ok(e.phase);
        }
        let e = growth_estimate(&graph, i as f64 * BRACKET_STEP, trials, seed)?;
        let ph = e.phase;
        evaluations.push(e);
        Ok(ph)
    };
    let (mut lo, mut hi) = (0usize, steps);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if phase(mid)? == Phase::Supercritical {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut warning = None;
    if hi == steps {
        warning = Some(format!("no supercritical p found below 1 at depth {depth}"));
    }
    let mut below = hi - 1;
    while below > 0 && phase(below)? != Phase::Subcritical {
        below -= 1;
    }
    if below == 0 && warning.is_none() {
        warning = Some("no subcritical p found below the supercritical one".into());
    }
    evaluations.sort_by(|a, b| a.p.total_cmp(&b.p));
    Ok(Bracket {
        p_lo: below as f64 * BRACKET_STEP,
        p_hi: hi as f64 * BRACKET_STEP,
        depth,
        trials,
        seed,
        warning,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders;

    #[test]
    fn sl2z_sizes() {
        let s = builders::sl2z();
        let g0 = unfold(&s, 0).unwrap();
        assert_eq!((g0.vertex_count(), g0.edge_count()), (4, 4));
        assert_eq!(unfold(&s, 1).unwrap().vertex_count(), 12);
        assert_eq!(unfold(&s, 2).unwrap().vertex_count(), 20);
    }

    #[test]
    fn unfold_is_a_prefix() {
        let s = builders::grandparent();
        let a = unfold(&s, 3).unwrap();
        let b = unfold(&s, 4).unwrap();
        assert_eq!(&b.edges[..a.edge_count()], &a.edges[..]);
        assert_eq!(&b.provenance[..a.vertex_count()], &a.provenance[..]);
    }

    #[test]
    fn extremes() {
        let g = unfold(&builders::sl2z(), 4).unwrap();
        assert_eq!(estimate_reach(&g, 0.0, 50, 3).unwrap().reached, 0);
        assert_eq!(estimate_reach(&g, 1.0, 50, 3).unwrap().reached, 50);
        assert!(estimate_reach(&g, 0.5, 0, 3).is_err());
    }

    #[test]
    fn wilson_bounds() {
        let [lo, hi] = wilson_interval(0, 100, Z99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.07);
        let [lo, hi] = wilson_interval(50, 100, Z99);
        assert!(lo < 0.5 && hi > 0.5);
        assert!(((lo + hi) / 2.0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn uniforms_are_keyed() {
        let u = edge_uniform(1, 2, 3);
        assert_eq!(u, edge_uniform(1, 2, 3));
        assert_ne!(u, edge_uniform(1, 3, 3));
        assert_ne!(u, edge_uniform(2, 2, 3));
        assert_ne!(u, edge_uniform(1, 2, 4));
    }
}
