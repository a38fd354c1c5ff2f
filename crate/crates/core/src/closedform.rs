//! Closed-form thresholds: free products of finite graphs through the
//! expected cluster sizes of the factors, and the amalgam
//! `(Z2 x Z) *_Z2 Z4`, whose ladder pieces are infinite.

use std::fmt;

use nalgebra::Matrix2;
use serde::Serialize;

use crate::builders::FiniteGraph;
use crate::error::{Error, Result};
use crate::partition::{Color, Partition, UnionFind};
use crate::solver::piece_transitions;
use crate::structure::{ChildSlot, ModelPiece};

pub const MAX_CHI_EDGES: usize = 16;

/// `chi(p) = E_p |C(base)|` as integer coefficients in the monomial basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChiPolynomial {
    pub coefficients: Vec<i64>,
}

impl ChiPolynomial {
    pub fn eval(&self, p: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * p + c as f64)
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }
}

impl fmt::Display for ChiPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &c) in self.coefficients.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let sign = if c < 0 { "-" } else { "+" };
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                _ => {
                    if a != 1 {
                        write!(f, "{a}")?;
                    }
                    write!(f, "p")?;
                    if k > 1 {
                        write!(f, "^{k}")?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

/// Expected size of the open cluster of the base vertex, exactly.
pub fn chi_polynomial(graph: &FiniteGraph) -> Result<ChiPolynomial> {
    let e = graph.edges.len();
    if e > MAX_CHI_EDGES {
        return Err(Error::Guard(format!(
            "{e} edges, at most {MAX_CHI_EDGES} are enumerated"
        )));
    }
    if graph.base >= graph.vertices {
        return Err(Error::InvalidArgument("base out of range".into()));
    }
    // sizes[c] = sum over subsets with c open edges of the base cluster size.
    let mut sizes = vec![0i64; e + 1];
    let mut uf = UnionFind::default();
    for g in 0u32..1 << e {
        uf.reset(graph.vertices);
        for (k, &[a, b]) in graph.edges.iter().enumerate() {
            if g >> k & 1 == 1 {
                uf.union(a, b);
            }
        }
        let root = uf.find(graph.base);
        let size = (0..graph.vertices).filter(|&v| uf.find(v) == root).count();
        sizes[g.count_ones() as usize] += size as i64;
    }
    // p^c (1-p)^(e-c) = sum_j C(e-c, j) (-1)^j p^(c+j)
    let mut coefficients = vec![0i64; e + 1];
    for (c, &s) in sizes.iter().enumerate() {
        for j in 0..=e - c {
            let sign = if j % 2 == 0 { 1 } else { -1 };
            coefficients[c + j] += sign * s * binomial(e - c, j);
        }
    }
    while coefficients.len() > 1 && *coefficients.last().unwrap() == 0 {
        coefficients.pop();
    }
    Ok(ChiPolynomial { coefficients })
}

/// `sum_j prod_{i != j} chi_i - (n-1) prod_i chi_i` at `p`.
pub fn free_product_function(chis: &[ChiPolynomial], p: f64) -> f64 {
    let values: Vec<f64> = chis.iter().map(|c| c.eval(p)).collect();
    let n = values.len();
    let all: f64 = values.iter().product();
    let leave_one_out: f64 = (0..n)
        .map(|j| {
            values
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, v)| v)
                .product::<f64>()
        })
        .sum();
    leave_one_out - (n as f64 - 1.0) * all
}

/// `det(M - I)` of the free-product moment matrix, `(-1)^n` times
/// [`free_product_function`].
pub fn free_product_det(chis: &[ChiPolynomial], p: f64) -> f64 {
    let sign = if chis.len().is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * free_product_function(chis, p)
}

const ROOT_SCAN: usize = 4096;
const ROOT_TOL: f64 = 1e-12;

fn first_root(f: impl Fn(f64) -> f64, sign_at_zero: f64) -> Option<f64> {
    let mut prev = 0.0;
    for i in 1..ROOT_SCAN {
        let p = i as f64 / ROOT_SCAN as f64;
        if f(p) * sign_at_zero <= 0.0 {
            let (mut lo, mut hi) = (prev, p);
            while hi - lo > ROOT_TOL {
                let mid = 0.5 * (lo + hi);
                if f(mid) * sign_at_zero <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        prev = p;
    }
    None
}

/// Smallest root in (0,1) of [`free_product_function`], or 1 if there is none.
pub fn free_product_pc(chis: &[ChiPolynomial]) -> Result<f64> {
    if chis.len() < 2 {
        return Err(Error::InvalidArgument("at least two factors are needed".into()));
    }
    Ok(first_root(|p| free_product_function(chis, p), 1.0).unwrap_or(1.0))
}

/// Descendant connection probabilities of the amalgam at one `p`: `a` for
/// the ladder piece, `b` for the square, `c` for a half ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderProbabilities {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub iterations: usize,
}

const ABC_TOL: f64 = 1e-14;
const ABC_MAX_ITER: usize = 1_000_000;

fn abc_map(p: f64, a: f64, b: f64, c: f64) -> (f64, f64, f64) {
    let q2 = (1.0 - p) * (1.0 - p);
    let double = 2.0 * p - p * p;
    let c_next = p * p * (1.0 - q2 * (1.0 - b)) / (1.0 - p * p * q2 * (1.0 - b));
    let a_next = double + q2 * (2.0 * c - c * c);
    let b_next = double * double * a + (2.0 * p * p - p.powi(4)) * (1.0 - a);
    (a_next, b_next, c_next)
}

/// Iterates the three connection equations from zero.
pub fn ladder_probabilities(p: f64) -> Result<LadderProbabilities> {
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for it in 1..=ABC_MAX_ITER {
        let (a2, b2, c2) = abc_map(p, a, b, c);
        let change = (a2 - a).abs().max((b2 - b).abs()).max((c2 - c).abs());
        (a, b, c) = (a2, b2, c2);
        if change < ABC_TOL {
            return Ok(LadderProbabilities {
                a,
                b,
                c,
                iterations: it,
            });
        }
    }
    Err(Error::NonConvergence {
        p,
        residual: f64::NAN,
        iterations: ABC_MAX_ITER,
    })
}

impl LadderProbabilities {
    /// Largest violation of the three equations.
    pub fn residual(&self, p: f64) -> f64 {
        let (a, b, c) = abc_map(p, self.a, self.b, self.c);
        (a - self.a).abs().max((b - self.b).abs()).max((c - self.c).abs())
    }
}

fn ladder_matrices(p: f64, abc: &LadderProbabilities) -> (Matrix2<f64>, Matrix2<f64>, Matrix2<f64>, Matrix2<f64>) {
    let (b, c) = (abc.b, abc.c);
    let q = 1.0 - p;
    let double = 2.0 * p - p * p;
    let t = Matrix2::new(p * p + 2.0 * p * q * double, 2.0 * p * q.powi(3), p * double, p * q * q);
    let left = Matrix2::new(1.0, 0.0, 1.0 - (1.0 - c) * q * q, (1.0 - c) * q * q);
    let sibling = Matrix2::new(1.0, 0.0, b, 1.0 - b);
    let right = Matrix2::new(1.0, 0.0, c, 1.0 - c);
    (t, left, sibling, right)
}

/// Expected children of each color of the ladder piece, summed in closed form.
pub fn ladder_block(p: f64, abc: &LadderProbabilities) -> Result<Matrix2<f64>> {
    let (t, left, sibling, right) = ladder_matrices(p, abc);
    let inv = (Matrix2::identity() - sibling * t)
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument(format!("series diverges at p = {p}")))?;
    Ok(2.0 * left * t * inv * right)
}

/// The same block as a partial sum of `n` children on each side.
pub fn ladder_block_partial(p: f64, abc: &LadderProbabilities, n: usize) -> Matrix2<f64> {
    let (t, left, sibling, right) = ladder_matrices(p, abc);
    let mut sum = Matrix2::zeros();
    let mut power = Matrix2::identity();
    for _ in 0..n {
        sum += left * t * power * right;
        power *= sibling * t;
    }
    2.0 * sum
}

fn square_piece() -> ModelPiece {
    ModelPiece {
        name: "square".into(),
        vertices: 4,
        edges: vec![[0, 1], [1, 2], [2, 3], [3, 0]],
        border: vec![0, 2],
        children: vec![ChildSlot {
            model: "ladder".into(),
            attach: vec![1, 3],
        }],
    }
}

/// Expected children of the square piece, from the generic engine. Colors
/// are merged as (joined and marked, one vertex marked).
pub fn square_block(p: f64) -> Result<Matrix2<f64>> {
    let piece = square_piece();
    let joined = Color::new(Partition::single_block(2), Some(0))?;
    let one = Color::new(Partition::diagonal(2), Some(0))?;
    let mut m = Matrix2::zeros();
    for (row, parent) in [joined, one].iter().enumerate() {
        for (_, child, w) in piece_transitions(&piece, parent, p, &[vec![]])? {
            match child.marked {
                None => {}
                Some(_) if child.partition.block_count() == 1 => m[(row, 0)] += w,
                Some(_) => m[(row, 1)] += w,
            }
        }
    }
    Ok(m)
}

/// `det(M - I)` for `M = [[0, S], [L, 0]]`.
pub fn z2z_det(p: f64) -> Result<f64> {
    let abc = ladder_probabilities(p)?;
    let l = ladder_block(p, &abc)?;
    let s = square_block(p)?;
    Ok((Matrix2::identity() - s * l).determinant())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Z2zResiduals {
    /// Violation of the connection equations at `p_c`.
    pub equations: f64,
    pub det: f64,
    /// Largest entry difference between the closed form and a 200-term sum.
    pub series: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Z2zReport {
    pub p_c: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub residuals: Z2zResiduals,
    /// Iterations of the connection equations at `p_c`.
    pub iterations: usize,
}

/// Number of children per side in the partial-sum check.
pub const SERIES_TERMS: usize = 200;

/// Threshold of `(Z2 x Z) *_Z2 Z4` with its natural generators.
pub fn z2z_amalgam_pc() -> Result<Z2zReport> {
    let f = |p: f64| z2z_det(p).unwrap_or(f64::NAN);
    let p_c = first_root(f, 1.0).unwrap_or(1.0);
    let abc = ladder_probabilities(p_c)?;
    let closed = ladder_block(p_c, &abc)?;
    let partial = ladder_block_partial(p_c, &abc, SERIES_TERMS);
    Ok(Z2zReport {
        p_c,
        a: abc.a,
        b: abc.b,
        c: abc.c,
        residuals: Z2zResiduals {
            equations: abc.residual(p_c),
            det: z2z_det(p_c)?,
            series: (closed - partial).abs().max(),
        },
        iterations: abc.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_chis() {
        let chi = |g: FiniteGraph| chi_polynomial(&g).unwrap().coefficients;
        assert_eq!(chi(FiniteGraph::complete(2)), vec![1, 1]);
        assert_eq!(chi(FiniteGraph::cycle(3)), vec![1, 2, 2, -2]);
        assert_eq!(chi(FiniteGraph::complete(1)), vec![1]);
        let c = chi_polynomial(&FiniteGraph::cycle(3)).unwrap();
        assert_eq!(c.to_string(), "1 + 2p + 2p^2 - 2p^3");
        assert_eq!(c.eval(1.0), 3.0);
    }

    #[test]
    fn free_product_roots() {
        let k2 = chi_polynomial(&FiniteGraph::complete(2)).unwrap();
        let c3 = chi_polynomial(&FiniteGraph::cycle(3)).unwrap();
        assert_eq!(free_product_pc(&[k2.clone(), k2.clone()]).unwrap(), 1.0);
        assert!((free_product_pc(&[k2.clone(), k2.clone(), k2.clone()]).unwrap() - 0.5).abs() < 1e-12);
        let r = free_product_pc(&[k2, c3]).unwrap();
        assert!((2.0 * r * (r + r * r - r.powi(3)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ladder_at_extremes() {
        let z = ladder_probabilities(0.0).unwrap();
        assert_eq!((z.a, z.b, z.c), (0.0, 0.0, 0.0));
        assert_eq!(z2z_det(0.0).unwrap(), 1.0);
        let one = ladder_probabilities(1.0 - 1e-9).unwrap();
        assert!(one.a > 1.0 - 1e-6 && one.b > 1.0 - 1e-6 && one.c > 1.0 - 1e-6);
    }
}
