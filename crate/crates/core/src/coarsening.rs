//! Affinity strength of connection, per-row θ filtering and greedy maximal
//! independent set selection of coarse nodes.

use rayon::prelude::*;

use crate::dense::DenseBlock;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Filtered, symmetric strength-of-connection graph.
#[derive(Debug, Clone)]
pub struct SocGraph {
    /// Off-diagonal affinities in [0, 1] on a symmetric pattern.
    pub weights: SparseMatrix,
    pub theta: usize,
}

impl SocGraph {
    pub fn n_nodes(&self) -> usize {
        self.weights.n_rows()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.weights.row_cols(i)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.weights.row_cols(i).len()
    }

    /// Builds a graph from an explicit symmetric adjacency, all weights 1.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut trip = Vec::with_capacity(2 * edges.len());
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange {
                    index: i.max(j),
                    size: n,
                });
            }
            if i != j {
                trip.push((i, j, 1.0));
                trip.push((j, i, 1.0));
            }
        }
        let mut w = SparseMatrix::from_triplets(n, n, &trip)?;
        // duplicate edges sum; clamp back to unit weight
        let vals: Vec<f64> = w.values().iter().map(|_| 1.0).collect();
        w = SparseMatrix::from_csr(
            n,
            n,
            w.row_offsets().to_vec(),
            w.col_indices().to_vec(),
            vals,
        )?;
        Ok(Self {
            weights: w,
            theta: usize::MAX,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfSplit {
    pub coarse: Vec<usize>,
    pub fine: Vec<usize>,
    /// `coarse_index[i]` is the coarse numbering of node `i`, if coarse.
    pub coarse_index: Vec<Option<usize>>,
}

impl CfSplit {
    pub fn n_nodes(&self) -> usize {
        self.coarse_index.len()
    }

    pub fn n_coarse(&self) -> usize {
        self.coarse.len()
    }

    pub fn is_coarse(&self, i: usize) -> bool {
        self.coarse_index[i].is_some()
    }
}

/// Squared cosine between two vectors; 0 when either has zero norm.
pub fn affinity(x: &[f64], y: &[f64]) -> f64 {
    let mut xy = 0.0;
    let mut xx = 0.0;
    let mut yy = 0.0;
    for (a, b) in x.iter().zip(y) {
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    if xx == 0.0 || yy == 0.0 {
        0.0
    } else {
        (xy * xy) / (xx * yy)
    }
}

/// Affinity of the test-space rows for every stored off-diagonal of `a`.
pub fn affinity_soc(a: &SparseMatrix, v: &DenseBlock) -> Result<SparseMatrix> {
    let n = a.n_rows();
    if v.n_rows() != n {
        return Err(Error::dim("affinity_soc", n, v.n_rows()));
    }
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| v.row(i)).collect();
    let per_row: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            a.row_cols(i)
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (j, affinity(&rows[i], &rows[j])))
                .collect()
        })
        .collect();
    csr_from_rows(n, per_row)
}

fn csr_from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<SparseMatrix> {
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for r in rows {
        for (j, w) in r {
            cols.push(j);
            vals.push(w);
        }
        offsets.push(cols.len());
    }
    SparseMatrix::from_csr(n, n, offsets, cols, vals)
}

/// Keeps the `theta` strongest connections of each row and symmetrizes the
/// result by union.
pub fn filter_soc(soc: &SparseMatrix, theta: usize) -> Result<SocGraph> {
    if theta == 0 {
        return Err(Error::Config("theta must be at least 1".into()));
    }
    let n = soc.n_rows();
    let kept: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut entries: Vec<(usize, f64)> = soc.row(i).filter(|&(j, _)| j != i).collect();
            entries.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
            entries.truncate(theta);
            entries.into_iter().map(|(j, _)| j).collect()
        })
        .collect();

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in kept.iter().enumerate() {
        for &j in row {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let rows: Vec<Vec<(usize, f64)>> = adj
        .into_par_iter()
        .enumerate()
        .map(|(i, mut cols)| {
            cols.sort_unstable();
            cols.dedup();
            cols.into_iter()
                .map(|j| {
                    // the raw pattern is symmetric, so either direction holds the value
                    let w = soc.get(i, j).or_else(|| soc.get(j, i)).unwrap_or(0.0);
                    (j, w)
                })
                .collect()
        })
        .collect();
    Ok(SocGraph {
        weights: csr_from_rows(n, rows)?,
        theta,
    })
}

/// Greedy maximal independent set in order of descending degree.
pub fn select_coarse_mis(g: &SocGraph) -> CfSplit {
    let n = g.n_nodes();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| g.degree(y).cmp(&g.degree(x)).then(x.cmp(&y)));

    let mut state = vec![0u8; n]; // 0 undecided, 1 coarse, 2 fine
    for &i in &order {
        if state[i] != 0 {
            continue;
        }
        state[i] = 1;
        for &j in g.neighbors(i) {
            if state[j] == 0 {
                state[j] = 2;
            }
        }
    }

    let mut coarse = Vec::new();
    let mut fine = Vec::new();
    let mut coarse_index = vec![None; n];
    for (i, s) in state.iter().enumerate() {
        if *s == 1 {
            coarse_index[i] = Some(coarse.len());
            coarse.push(i);
        } else {
            fine.push(i);
        }
    }
    CfSplit {
        coarse,
        fine,
        coarse_index,
    }
}

/// Checks independence and maximality of a split by scanning every edge.
pub fn verify_mis(g: &SocGraph, split: &CfSplit) -> bool {
    (0..g.n_nodes()).all(|i| {
        let nb = g.neighbors(i);
        if split.is_coarse(i) {
            nb.iter().all(|&j| !split.is_coarse(j))
        } else {
            nb.iter().any(|&j| split.is_coarse(j))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_soc(w01: f64, w12: f64) -> SparseMatrix {
        SparseMatrix::from_triplets(
            3,
            3,
            &[(0, 1, w01), (1, 0, w01), (1, 2, w12), (2, 1, w12)],
        )
        .unwrap()
    }

    #[test]
    fn affinity_extremes() {
        let a = SparseMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let same = DenseBlock::from_columns(2, &[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(affinity_soc(&a, &same).unwrap().get(0, 1), Some(1.0));
        let orth = DenseBlock::from_columns(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(affinity_soc(&a, &orth).unwrap().get(0, 1), Some(0.0));
        let zero = DenseBlock::from_columns(2, &[vec![0.0, 3.0]]).unwrap();
        assert_eq!(affinity_soc(&a, &zero).unwrap().get(1, 0), Some(0.0));
    }

    #[test]
    fn single_vector_gives_unit_affinity() {
        let a = SparseMatrix::from_dense(&[
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ])
        .unwrap();
        let v = DenseBlock::from_columns(3, &[vec![0.3, -2.0, 5.0]]).unwrap();
        let s = affinity_soc(&a, &v).unwrap();
        assert_eq!(s.nnz(), 4);
        for &w in s.values() {
            assert!((w - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn filter_union_keeps_edge_chosen_by_either_side() {
        // node 1 keeps only the 0.9 edge; node 2 has a single edge and keeps it
        let g = filter_soc(&path_soc(0.9, 0.5), 1).unwrap();
        assert!(g.weights.get(1, 2).is_some());
        assert!(g.weights.get(2, 1).is_some());
        assert_eq!(g.weights.get(0, 1), Some(0.9));
    }

    #[test]
    fn filter_ties_prefer_smaller_column() {
        let g = filter_soc(&path_soc(0.5, 0.5), 1).unwrap();
        // row 1 keeps 0; rows 0 and 2 keep 1
        assert_eq!(g.neighbors(1), &[0, 2]);
        let big = filter_soc(&path_soc(0.2, 0.7), 10).unwrap();
        assert_eq!(big.weights.nnz(), 4);
    }

    #[test]
    fn mis_small_graphs() {
        let empty = SocGraph::from_edges(4, &[]).unwrap();
        let s = select_coarse_mis(&empty);
        assert_eq!(s.coarse, vec![0, 1, 2, 3]);
        assert!(s.fine.is_empty());

        let k4 = SocGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
            .unwrap();
        assert_eq!(select_coarse_mis(&k4).n_coarse(), 1);

        let path = SocGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let s = select_coarse_mis(&path);
        assert_eq!(s.coarse, vec![1]);
        assert_eq!(s.fine, vec![0, 2]);
        assert_eq!(s.coarse_index, vec![None, Some(0), None]);
        assert!(verify_mis(&path, &s));
    }

    #[test]
    fn zero_theta_rejected() {
        assert!(filter_soc(&path_soc(1.0, 1.0), 0).is_err());
    }
}
