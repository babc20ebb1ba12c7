//! Undirected graphs in CSR form and the normalized adjacency `Ã_sym`.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::par::{self, Execution};

/// Unweighted undirected graph without stored self-loops.
///
/// Every undirected edge appears twice in `col_idx`, once per endpoint, and
/// each neighbor list is sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl Graph {
    /// Symmetrizes, deduplicates and strips self-loops from `edges`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut pairs = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            for id in [u, v] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, n });
                }
            }
            if u != v {
                pairs.push((u, v));
                pairs.push((v, u));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();

        let mut row_ptr = vec![0usize; n + 1];
        for &(u, _) in &pairs {
            row_ptr[u + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = pairs.into_iter().map(|(_, v)| v).collect();
        Ok(Graph {
            n,
            row_ptr,
            col_idx,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.col_idx.len() / 2
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v > u)
                .map(move |&v| (u, v))
        })
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::shape("Graph::permuted", self.n, perm.len()));
        }
        let edges: Vec<_> = self.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        Graph::from_edges(self.n, &edges)
    }
}

/// `Ã_sym = D̃^{-1/2} (A + I) D̃^{-1/2}` with `D̃_ii = 1 + deg(i)`.
///
/// Off-diagonal entries share the CSR layout of the source graph; the
/// self-loop weights `1 / D̃_ii` sit in `diag_self`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    diag_self: Vec<f64>,
}

pub fn normalize(g: &Graph) -> NormalizedAdjacency {
    NormalizedAdjacency::new(g)
}

impl NormalizedAdjacency {
    pub fn new(g: &Graph) -> NormalizedAdjacency {
        let mut values = Vec::with_capacity(g.col_idx.len());
        for i in 0..g.n {
            for &j in g.neighbors(i) {
                // 1/√(D̃_ii D̃_jj) computed from the product so that (i, j)
                // and (j, i) round identically.
                let dij = ((1 + g.degree(i)) * (1 + g.degree(j))) as f64;
                values.push(1.0 / dij.sqrt());
            }
        }
        let diag_self = (0..g.n).map(|i| 1.0 / (1 + g.degree(i)) as f64).collect();
        NormalizedAdjacency {
            row_ptr: g.row_ptr.clone(),
            col_idx: g.col_idx.clone(),
            values,
            diag_self,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.diag_self.len()
    }

    pub fn diag_self(&self) -> &[f64] {
        &self.diag_self
    }

    /// Off-diagonal entries of row `i` as `(column, value)`.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Stored value at `(i, j)`, including the diagonal.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag_self[i];
        }
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(p) => self.values[span.start + p],
            Err(_) => 0.0,
        }
    }

    /// `Ã_sym · x`.
    pub fn spmm(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.spmm_with(Execution::default(), x)
    }

    /// [`spmm`](Self::spmm) with an explicit schedule. Each output row sums
    /// neighbors in ascending order and adds the self-loop last, so every
    /// schedule yields the same bits.
    pub fn spmm_with(&self, exec: Execution, x: &DenseMatrix) -> Result<DenseMatrix> {
        let n = self.num_nodes();
        if x.rows() != n {
            return Err(Error::shape("spmm", format!("{n} rows"), x.rows()));
        }
        let d = x.cols();
        let mut out = DenseMatrix::zeros(n, d);
        let xs = x.as_slice();
        par::for_each_row(exec, out.as_mut_slice(), d, |i, row| {
            for (j, v) in self.row_entries(i) {
                let xj = &xs[j * d..(j + 1) * d];
                for (o, xv) in row.iter_mut().zip(xj) {
                    *o += v * xv;
                }
            }
            let s = self.diag_self[i];
            let xi = &xs[i * d..(i + 1) * d];
            for (o, xv) in row.iter_mut().zip(xi) {
                *o += s * xv;
            }
        });
        Ok(out)
    }

    /// Dense `n × n` copy, for oracles on small graphs.
    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.num_nodes();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.row_entries(i) {
                m.set(i, j, v);
            }
            m.set(i, i, self.diag_self[i]);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path2() -> Graph {
        Graph::from_edges(2, &[(0, 1)]).unwrap()
    }

    fn triangle() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn single_edge_csr() {
        let g = path2();
        assert_eq!(g.row_ptr(), &[0, 1, 2]);
        assert_eq!(g.col_idx(), &[1, 0]);
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn duplicates_are_merged() {
        let g = Graph::from_edges(2, &[(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g, path2());
    }

    #[test]
    fn self_loops_are_dropped() {
        let g = Graph::from_edges(1, &[(0, 0)]).unwrap();
        assert_eq!(g.row_ptr(), &[0, 0]);
        assert!(g.col_idx().is_empty());
    }

    #[test]
    fn build_errors() {
        assert!(matches!(Graph::from_edges(0, &[]), Err(Error::EmptyGraph)));
        assert!(matches!(
            Graph::from_edges(2, &[(0, 2)]),
            Err(Error::NodeOutOfRange { id: 2, n: 2 })
        ));
    }

    #[test]
    fn neighbors_sorted() {
        let g = Graph::from_edges(5, &[(0, 4), (0, 2), (0, 3), (0, 1)]).unwrap();
        assert_eq!(g.neighbors(0), &[1, 2, 3, 4]);
    }

    #[test]
    fn normalized_small_graphs() {
        let a = normalize(&path2());
        assert_eq!(a.diag_self(), &[0.5, 0.5]);
        assert_eq!(a.value(0, 1), 0.5);
        assert_eq!(a.value(1, 0), 0.5);

        let iso = normalize(&Graph::from_edges(1, &[]).unwrap());
        assert_eq!(iso.diag_self(), &[1.0]);
        assert_eq!(iso.row_entries(0).count(), 0);

        let t = normalize(&triangle());
        for i in 0..3 {
            assert!((t.diag_self()[i] - 1.0 / 3.0).abs() < 1e-15);
            for (_, v) in t.row_entries(i) {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn spmm_regular_graph_preserves_ones() {
        let a = normalize(&triangle());
        let ones = DenseMatrix::column_vector(&[1.0; 3]);
        let y = a.spmm(&ones).unwrap();
        for v in y.as_slice() {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn spmm_fixes_sqrt_degree_vector() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        let a = normalize(&g);
        let v: Vec<f64> = (0..5).map(|i| ((1 + g.degree(i)) as f64).sqrt()).collect();
        let y = a.spmm(&DenseMatrix::column_vector(&v)).unwrap();
        for (got, want) in y.as_slice().iter().zip(&v) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn spmm_dimension_mismatch() {
        let a = normalize(&triangle());
        assert!(a.spmm(&DenseMatrix::zeros(2, 1)).is_err());
    }
}
