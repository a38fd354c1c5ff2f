//! Exact critical probability of a tree-like structure.
//!
//! The pipeline: supported descendant partitions per model, their
//! distribution at `p` as the fixed point of the one-generation recursion, the
//! reachable nonwhite color types, the first-moment matrix over those types,
//! and finally the smallest `p` where the spectral radius reaches 1.

mod spectral;
mod tables;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::{Color, EdgeSubset, Kernel, Partition, UnionFind};
use crate::structure::{ModelPiece, Resolved, TreeStructure};

pub use spectral::{spectral_radius, MomentMatrix};
use tables::{PsiTable, SlotTable, State};

/// Distance from 1 of the extra scan point probing the right end of (0,1).
pub const RIGHT_END_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Number of uniform grid cells over (0,1) scanned for the first crossing.
    pub grid: usize,
    /// Bisection tolerance on p_c.
    pub tol: f64,
    /// Sup-norm stopping tolerance of the partition fixed point.
    pub fixed_point_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            grid: 256,
            tol: 1e-10,
            fixed_point_tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

/// Distribution of the descendant partition of one model over its supported
/// partitions (unsupported partitions have probability zero).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelDistribution {
    pub model: String,
    pub partitions: Vec<Partition>,
    pub probabilities: Vec<f64>,
}

impl ModelDistribution {
    pub fn probability(&self, z: &Partition) -> f64 {
        self.partitions
            .iter()
            .position(|q| q == z)
            .map_or(0.0, |i| self.probabilities[i])
    }

    /// Probability that border positions `a` and `b` are joined.
    pub fn joined(&self, a: usize, b: usize) -> f64 {
        self.partitions
            .iter()
            .zip(&self.probabilities)
            .filter(|(z, _)| z.same_block(a, b))
            .map(|(_, x)| x)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionDistribution {
    pub p: f64,
    pub models: Vec<ModelDistribution>,
    /// Sup-norm change of the last iteration.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl PartitionDistribution {
    fn vectors(&self) -> Vec<&[f64]> {
        self.models.iter().map(|m| m.probabilities.as_slice()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColorType {
    pub model: usize,
    pub model_name: String,
    pub color: Color,
}

/// The reachable nonwhite types of non-root models, sorted by (model, color).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColorSpace {
    types: Vec<ColorType>,
}

impl ColorSpace {
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn types(&self) -> &[ColorType] {
        &self.types
    }

    pub fn index_of(&self, model: usize, color: &Color) -> Option<usize> {
        self.types.iter().position(|t| t.model == model && &t.color == color)
    }
}

/// Per parent type and child slot: mass of nonwhite and white child colors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionTotal {
    /// Index into the color space, `None` for the root.
    pub parent: Option<usize>,
    pub slot: usize,
    pub nonwhite: f64,
    pub white: f64,
}

impl TransitionTotal {
    pub fn total(&self) -> f64 {
        self.nonwhite + self.white
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub p: f64,
    pub rho: f64,
    pub det_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalProbability {
    pub p_c: f64,
    pub bracket: [f64; 2],
    pub no_subcritical_root: bool,
    /// `det(M - I)` at `p_c`.
    pub det_residual: f64,
    pub color_space_size: usize,
    pub support_sizes: Vec<(String, usize)>,
    pub scan: Vec<ScanRow>,
}

/// Precomputed, p-independent description of a structure's branching process.
#[derive(Debug, Clone)]
pub struct Engine {
    names: Vec<String>,
    supports: Vec<Vec<Partition>>,
    psi: Vec<PsiTable>,
    /// Child model of every slot, per piece (models first, the root last).
    slot_models: Vec<Vec<usize>>,
    states: Vec<State>,
    tables: Vec<Vec<SlotTable>>,
    /// State id to color-space index (`None` for the root state).
    state_index: Vec<Option<usize>>,
    colors: ColorSpace,
}

fn weights(p: f64, edges: usize) -> Vec<f64> {
    (0..=edges)
        .map(|c| p.powi(c as i32) * (1.0 - p).powi((edges - c) as i32))
        .collect()
}

fn poly(counts: &[u32], w: &[f64]) -> f64 {
    counts.iter().zip(w).map(|(&n, &x)| n as f64 * x).sum()
}

impl Engine {
    pub fn new(structure: &TreeStructure) -> Result<Self> {
        let resolved = Resolved::new(structure)?;
        let supports = tables::supports(&resolved.models)?;
        let index: Vec<HashMap<Partition, usize>> = supports
            .iter()
            .map(|s| s.iter().cloned().enumerate().map(|(i, z)| (z, i)).collect())
            .collect();
        let psi = resolved
            .models
            .iter()
            .enumerate()
            .map(|(j, m)| tables::psi_table(m, &supports, &index, j))
            .collect::<Result<Vec<_>>>()?;
        let n = resolved.models.len();
        let mut pieces = resolved.models.clone();
        pieces.push(resolved.root.clone());
        let (states, tables) = tables::color_closure(&pieces, n, &supports)?;

        let mut order: Vec<usize> = (1..states.len()).collect();
        order.sort_by(|&a, &b| states[a].cmp(&states[b]));
        let mut state_index = vec![None; states.len()];
        for (i, &s) in order.iter().enumerate() {
            state_index[s] = Some(i);
        }
        let colors = ColorSpace {
            types: order
                .iter()
                .map(|&s| ColorType {
                    model: states[s].piece,
                    model_name: pieces[states[s].piece].name.clone(),
                    color: states[s].color.clone(),
                })
                .collect(),
        };
        Ok(Engine {
            names: resolved.models.iter().map(|m| m.name.clone()).collect(),
            slot_models: pieces
                .iter()
                .map(|m| m.slots.iter().map(|(c, _)| *c).collect())
                .collect(),
            supports,
            psi,
            states,
            tables,
            state_index,
            colors,
        })
    }

    pub fn color_space(&self) -> &ColorSpace {
        &self.colors
    }

    pub fn supports(&self) -> &[Vec<Partition>] {
        &self.supports
    }

    pub fn support_sizes(&self) -> Vec<(String, usize)> {
        self.names
            .iter()
            .cloned()
            .zip(self.supports.iter().map(Vec::len))
            .collect()
    }

    fn wrap(
        &self,
        p: f64,
        x: Vec<Vec<f64>>,
        residual: f64,
        iterations: usize,
        converged: bool,
    ) -> PartitionDistribution {
        PartitionDistribution {
            p,
            models: self
                .names
                .iter()
                .zip(&self.supports)
                .zip(x)
                .map(|((name, supp), probabilities)| ModelDistribution {
                    model: name.clone(),
                    partitions: supp.clone(),
                    probabilities,
                })
                .collect(),
            residual,
            iterations,
            converged,
        }
    }

    /// All mass on the diagonal partition: the depth-0 truncation.
    pub fn initial_distribution(&self, p: f64) -> PartitionDistribution {
        let x = self
            .supports
            .iter()
            .map(|s| {
                let d = Partition::diagonal(s[0].len());
                s.iter().map(|z| if *z == d { 1.0 } else { 0.0 }).collect()
            })
            .collect();
        self.wrap(p, x, f64::INFINITY, 0, false)
    }

    /// Per-model matrices `a[combo][z] = sum_c w_c counts`, fixed for a given p.
    fn psi_weights(&self, p: f64) -> Vec<Vec<f64>> {
        self.psi
            .iter()
            .map(|t| {
                let w = weights(p, t.edges);
                t.counts.chunks(t.edges + 1).map(|c| poly(c, &w)).collect()
            })
            .collect()
    }

    fn psi_apply(&self, a: &[Vec<f64>], x: &[&[f64]]) -> Vec<Vec<f64>> {
        self.psi
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let mut out = vec![0.0; t.outputs];
                let mut digits = vec![0; t.radix.sizes.len()];
                for combo in 0..t.radix.total {
                    t.radix.digits(combo, &mut digits);
                    let weight: f64 = digits
                        .iter()
                        .zip(&self.slot_models[j])
                        .map(|(&d, &c)| x[c][d])
                        .product();
                    if weight == 0.0 {
                        continue;
                    }
                    let row = &a[j][combo * t.outputs..(combo + 1) * t.outputs];
                    for (o, r) in out.iter_mut().zip(row) {
                        *o += weight * r;
                    }
                }
                // The exact map preserves total mass; pieces with several
                // children square any rounding drift, so project it away.
                let total: f64 = out.iter().sum();
                if total > 0.0 {
                    out.iter_mut().for_each(|o| *o /= total);
                }
                out
            })
            .collect()
    }

    /// One application of the recursion: the distribution one generation deeper.
    pub fn psi_step(&self, dist: &PartitionDistribution) -> PartitionDistribution {
        let a = self.psi_weights(dist.p);
        let next = self.psi_apply(&a, &dist.vectors());
        let residual = sup_change(&dist.vectors(), &next);
        self.wrap(dist.p, next, residual, dist.iterations + 1, false)
    }

    /// Fixed point of the recursion from the diagonal start. On
    /// non-convergence the last iterate is returned with `converged = false`.
    pub fn partition_distribution(&self, p: f64, tol: f64, max_iter: usize) -> Result<PartitionDistribution> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("p = {p} outside [0,1]")));
        }
        let a = self.psi_weights(p);
        let mut x = self
            .initial_distribution(p)
            .models
            .into_iter()
            .map(|m| m.probabilities)
            .collect::<Vec<_>>();
        let mut residual = f64::INFINITY;
        for it in 1..=max_iter {
            let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
            let next = self.psi_apply(&a, &refs);
            residual = sup_change(&refs, &next);
            x = next;
            if residual < tol {
                return Ok(self.wrap(p, x, residual, it, true));
            }
        }
        Ok(self.wrap(p, x, residual, max_iter, false))
    }

    fn check_dist(&self, dist: &PartitionDistribution) -> Result<()> {
        if dist.models.len() != self.supports.len()
            || dist
                .models
                .iter()
                .zip(&self.supports)
                .any(|(m, s)| m.probabilities.len() != s.len())
        {
            return Err(Error::Dimension(
                "partition distribution does not match the structure".into(),
            ));
        }
        Ok(())
    }

    /// Visits every (slot, sibling combination) outcome of state `s` with its weight.
    fn for_outcomes(&self, s: usize, p: f64, x: &[&[f64]], mut f: impl FnMut(usize, Option<usize>, f64)) {
        let slot_models = &self.slot_models[self.states[s].piece];
        for t in &self.tables[s] {
            let edges = t.outcomes.first().map_or(0, |o| o.counts.len() - 1);
            let w = weights(p, edges);
            let mut digits = vec![0; t.siblings.len()];
            for o in &t.outcomes {
                t.radix.digits(o.combo, &mut digits);
                let weight: f64 = digits
                    .iter()
                    .zip(&t.siblings)
                    .map(|(&d, &k)| x[slot_models[k]][d])
                    .product::<f64>()
                    * poly(&o.counts, &w);
                f(t.slot, o.child.and_then(|c| self.state_index[c]), weight);
            }
        }
    }

    /// Expected offspring counts between color types.
    pub fn moment_matrix(&self, dist: &PartitionDistribution) -> Result<MomentMatrix> {
        self.check_dist(dist)?;
        let x = dist.vectors();
        let mut m = MomentMatrix::zeros(self.colors.len());
        for s in 1..self.states.len() {
            let a = self.state_index[s].unwrap();
            self.for_outcomes(s, dist.p, &x, |_, child, w| {
                if let Some(b) = child {
                    m.add(a, b, w);
                }
            });
        }
        Ok(m)
    }

    /// Expected nonwhite first-generation counts from the root piece.
    pub fn first_generation(&self, dist: &PartitionDistribution) -> Result<Vec<f64>> {
        self.check_dist(dist)?;
        let mut nu = vec![0.0; self.colors.len()];
        self.for_outcomes(0, dist.p, &dist.vectors(), |_, child, w| {
            if let Some(b) = child {
                nu[b] += w;
            }
        });
        Ok(nu)
    }

    /// Nonwhite and white transition mass per parent type and child slot.
    pub fn transition_totals(&self, dist: &PartitionDistribution) -> Result<Vec<TransitionTotal>> {
        self.check_dist(dist)?;
        let x = dist.vectors();
        let mut out = Vec::new();
        for s in 0..self.states.len() {
            let mut rows: Vec<TransitionTotal> = self.tables[s]
                .iter()
                .map(|t| TransitionTotal {
                    parent: self.state_index[s],
                    slot: t.slot,
                    nonwhite: 0.0,
                    white: 0.0,
                })
                .collect();
            self.for_outcomes(s, dist.p, &x, |slot, child, w| match child {
                Some(_) => rows[slot].nonwhite += w,
                None => rows[slot].white += w,
            });
            out.extend(rows);
        }
        Ok(out)
    }

    fn converged(&self, p: f64, opts: &SolverOptions) -> Result<PartitionDistribution> {
        let dist = self.partition_distribution(p, opts.fixed_point_tol, opts.max_iter)?;
        if !dist.converged {
            return Err(Error::NonConvergence {
                p,
                residual: dist.residual,
                iterations: dist.iterations,
            });
        }
        Ok(dist)
    }

    /// Spectral radius and `det(M - I)` at `p`.
    pub fn evaluate(&self, p: f64, opts: &SolverOptions) -> Result<ScanRow> {
        let dist = self.converged(p, opts)?;
        let m = self.moment_matrix(&dist)?;
        Ok(ScanRow {
            p,
            rho: m.spectral_radius(),
            det_residual: m.det_minus_identity(),
        })
    }

    pub fn scan(&self, points: &[f64], opts: &SolverOptions) -> Result<Vec<ScanRow>> {
        points.par_iter().map(|&p| self.evaluate(p, opts)).collect()
    }

    /// First crossing of `rho(M(p)) = 1` in (0,1), or 1 when there is none.
    pub fn critical_probability(&self, opts: &SolverOptions) -> Result<CriticalProbability> {
        if opts.grid < 2 || opts.tol.is_nan() || opts.tol <= 0.0 {
            return Err(Error::InvalidArgument(
                "grid must be at least 2 and tol positive".into(),
            ));
        }
        let mut points: Vec<f64> = (1..opts.grid).map(|i| i as f64 / opts.grid as f64).collect();
        points.push(1.0 - RIGHT_END_EPSILON);
        let scan = self.scan(&points, opts)?;
        let report = |p_c: f64, bracket: [f64; 2], none: bool, det: f64| CriticalProbability {
            p_c,
            bracket,
            no_subcritical_root: none,
            det_residual: det,
            color_space_size: self.colors.len(),
            support_sizes: self.support_sizes(),
            scan: scan.clone(),
        };
        let Some(i) = scan.iter().position(|r| r.rho >= 1.0) else {
            let det = self.evaluate(1.0, opts).map_or(f64::NAN, |r| r.det_residual);
            return Ok(report(1.0, [scan.last().map_or(0.0, |r| r.p), 1.0], true, det));
        };
        let (mut lo, mut hi) = (if i == 0 { 0.0 } else { scan[i - 1].p }, scan[i].p);
        let mut at_hi = scan[i];
        while hi - lo > opts.tol {
            let mid = 0.5 * (lo + hi);
            let r = self.evaluate(mid, opts)?;
            if r.rho >= 1.0 {
                hi = mid;
                at_hi = r;
            } else {
                lo = mid;
            }
        }
        let p_c = 0.5 * (lo + hi);
        let det = self.evaluate(p_c, opts).map_or(at_hi.det_residual, |r| r.det_residual);
        Ok(report(p_c, [lo, hi], false, det))
    }

    /// Expected type counts `nu M^n` for `n = 0..=generations`.
    pub fn growth_profile(&self, p: f64, generations: usize, opts: &SolverOptions) -> Result<Vec<Vec<f64>>> {
        let dist = self.converged(p, opts)?;
        let m = self.moment_matrix(&dist)?;
        let mut v = self.first_generation(&dist)?;
        let mut out = vec![v.clone()];
        for _ in 0..generations {
            v = (0..v.len())
                .map(|b| (0..v.len()).map(|a| v[a] * m.get(a, b)).sum())
                .collect();
            out.push(v.clone());
        }
        Ok(out)
    }
}

fn sup_change(a: &[&[f64]], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

pub fn partition_distribution(
    structure: &TreeStructure,
    p: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PartitionDistribution> {
    Engine::new(structure)?.partition_distribution(p, tol, max_iter)
}

/// Supported descendant partitions per model, in structure order.
pub fn partition_support(structure: &TreeStructure) -> Result<Vec<Vec<Partition>>> {
    let resolved = Resolved::new(structure)?;
    tables::supports(&resolved.models)
}

/// Reachable nonwhite color types; an empty space is an error.
pub fn reachable_colors(structure: &TreeStructure) -> Result<ColorSpace> {
    let colors = Engine::new(structure)?.colors;
    if colors.is_empty() {
        return Err(Error::EmptyColorSpace);
    }
    Ok(colors)
}

pub fn moment_matrix(
    structure: &TreeStructure,
    dist: &PartitionDistribution,
    colors: &ColorSpace,
) -> Result<MomentMatrix> {
    let engine = Engine::new(structure)?;
    if &engine.colors != colors {
        return Err(Error::Dimension(format!(
            "color space has {} types, structure has {}",
            colors.len(),
            engine.colors.len()
        )));
    }
    engine.moment_matrix(dist)
}

pub fn critical_probability(structure: &TreeStructure, opts: &SolverOptions) -> Result<CriticalProbability> {
    Engine::new(structure)?.critical_probability(opts)
}

pub fn growth_profile(
    structure: &TreeStructure,
    p: f64,
    generations: usize,
    opts: &SolverOptions,
) -> Result<Vec<Vec<f64>>> {
    Engine::new(structure)?.growth_profile(p, generations, opts)
}

/// Expected number of child slots of `piece` receiving each child color, for
/// a parent of color `parent`. `child_distributions[k]` is the descendant
/// partition distribution of slot `k`'s subtree; white outcomes are included.
pub fn piece_transitions(
    piece: &ModelPiece,
    parent: &Color,
    p: f64,
    child_distributions: &[Vec<(Partition, f64)>],
) -> Result<Vec<(usize, Color, f64)>> {
    if child_distributions.len() != piece.children.len() {
        return Err(Error::Dimension(format!(
            "{} child distributions for {} child slots",
            child_distributions.len(),
            piece.children.len()
        )));
    }
    if parent.partition.len() != piece.border.len() {
        return Err(Error::Dimension("parent color does not match the border".into()));
    }
    if piece.edges.len() > tables::MAX_PIECE_EDGES {
        return Err(Error::Guard(format!("piece '{}' has too many edges", piece.name)));
    }
    let kernel = Kernel::from_model(piece);
    let w = weights(p, piece.edges.len());
    let mut acc: Vec<(usize, Color, f64)> = Vec::new();
    let mut uf = UnionFind::default();
    for v in 0..piece.children.len() {
        let siblings: Vec<usize> = (0..piece.children.len()).filter(|&k| k != v).collect();
        let radix = tables::Radix::new(
            siblings.iter().map(|&k| child_distributions[k].len()).collect(),
            &piece.name,
        )?;
        let mut digits = vec![0; siblings.len()];
        for combo in 0..radix.total {
            radix.digits(combo, &mut digits);
            let mut parts: Vec<Option<&Partition>> = vec![None; piece.children.len()];
            let mut weight = 1.0;
            for (&k, &d) in siblings.iter().zip(&digits) {
                let (z, x) = &child_distributions[k][d];
                parts[k] = Some(z);
                weight *= x;
            }
            for g in 0..1u64 << piece.edges.len() {
                let c = kernel.child_color(parent, EdgeSubset(g), &parts, v, &mut uf);
                let add = weight * w[g.count_ones() as usize];
                match acc.iter_mut().find(|(s, col, _)| *s == v && *col == c) {
                    Some(e) => e.2 += add,
                    None => acc.push((v, c, add)),
                }
            }
        }
    }
    acc.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    Ok(acc)
}
