use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

/// Square nonnegative matrix of expected offspring counts between color types.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    matrix: DMatrix<f64>,
}

impl MomentMatrix {
    pub fn zeros(n: usize) -> Self {
        MomentMatrix {
            matrix: DMatrix::zeros(n, n),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "moment matrix must be square");
        MomentMatrix {
            matrix: DMatrix::from_fn(n, n, |a, b| rows[a][b]),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.matrix[(a, b)]
    }

    pub(crate) fn add(&mut self, a: usize, b: usize, w: f64) {
        self.matrix[(a, b)] += w;
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|a| (0..self.dim()).map(|b| self.get(a, b)).collect())
            .collect()
    }

    /// `det(M - I)`; 1 for the empty matrix.
    pub fn det_minus_identity(&self) -> f64 {
        let n = self.dim();
        (&self.matrix - DMatrix::identity(n, n)).determinant()
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(self)
    }
}

impl Serialize for MomentMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

const RELATIVE_GAP: f64 = 1e-13;
const MAX_POWER_STEPS: usize = 10_000_000;

/// Spectral radius of a nonnegative matrix: the largest Perron root over its
/// irreducible diagonal blocks.
pub fn spectral_radius(m: &MomentMatrix) -> f64 {
    let n = m.dim();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for a in 0..n {
        for b in 0..n {
            if m.get(a, b) > 0.0 {
                graph.add_edge(nodes[a], nodes[b], ());
            }
        }
    }
    tarjan_scc(&graph)
        .iter()
        .map(|comp| {
            let mut idx: Vec<usize> = comp.iter().map(|v| v.index()).collect();
            idx.sort_unstable();
            if idx.len() == 1 {
                m.get(idx[0], idx[0])
            } else {
                perron_root(&DMatrix::from_fn(idx.len(), idx.len(), |a, b| m.get(idx[a], idx[b])))
            }
        })
        .fold(0.0, f64::max)
}

/// Perron root of an irreducible nonnegative matrix by power iteration on the
/// shifted matrix `B + cI`, which is primitive, bracketed by Collatz-Wielandt
/// bounds.
fn perron_root(b: &DMatrix<f64>) -> f64 {
    let n = b.nrows();
    let shift = b.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    let shifted = b + DMatrix::identity(n, n) * shift;
    let mut x = nalgebra::DVector::from_element(n, 1.0);
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..MAX_POWER_STEPS {
        let y = &shifted * &x;
        lo = f64::INFINITY;
        hi = 0.0;
        for i in 0..n {
            let r = y[i] / x[i];
            lo = f64::min(lo, r);
            hi = f64::max(hi, r);
        }
        if hi - lo <= RELATIVE_GAP * hi {
            break;
        }
        x = &y / y.max();
    }
    (0.5 * (lo + hi) - shift).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho(rows: &[Vec<f64>]) -> f64 {
        spectral_radius(&MomentMatrix::from_rows(rows))
    }

    #[test]
    fn small_cases() {
        assert_eq!(rho(&vec![vec![0.0; 4]; 4]), 0.0);
        assert!((rho(&[vec![0.0, 2.0], vec![2.0, 0.0]]) - 2.0).abs() < 1e-12);
        assert!((rho(&[vec![0.0, 3.0], vec![1.0, 0.0]]) - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(rho(&[]), 0.0);
    }

    #[test]
    fn reducible_takes_max_block() {
        let m = [vec![0.5, 1.0, 0.0], vec![0.0, 0.0, 2.0], vec![0.0, 3.0, 0.0]];
        assert!((rho(&m) - 6f64.sqrt()).abs() < 1e-12);
        let m = [vec![0.7, 9.0], vec![0.0, 0.2]];
        assert!((rho(&m) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn cyclic_period_three() {
        let m = [vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 3.0], vec![4.0, 0.0, 0.0]];
        assert!((rho(&m) - 24f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn det_residual() {
        let m = MomentMatrix::from_rows(&[vec![0.0, 2.0], vec![0.5, 0.0]]);
        assert!(m.det_minus_identity().abs() < 1e-15);
        assert_eq!(MomentMatrix::zeros(0).det_minus_identity(), 1.0);
    }
}
