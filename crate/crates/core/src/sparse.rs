//! Compressed sparse row storage and the kernels the multigrid setup and
//! cycle are built from.
//!
//! Symmetric matrices keep their full pattern. Every kernel accumulates
//! each output row in ascending column order, so results do not depend on
//! how rows are distributed across threads.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating the structure.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::InvalidStructure(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 || row_offsets[n_rows] != col_indices.len() {
            return Err(Error::InvalidStructure(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        if values.len() != col_indices.len() {
            return Err(Error::InvalidStructure(
                "values and col_indices differ in length".into(),
            ));
        }
        for i in 0..n_rows {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if lo > hi {
                return Err(Error::InvalidStructure(format!(
                    "row_offsets decreases at row {i}"
                )));
            }
            let cols = &col_indices[lo..hi];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidStructure(format!(
                    "row {i} has unsorted or duplicate columns"
                )));
            }
            if let Some(&c) = cols.last() {
                if c >= n_cols {
                    return Err(Error::IndexOutOfRange {
                        index: c,
                        size: n_cols,
                    });
                }
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
            symmetric: false,
        })
    }

    /// Builds a matrix from (row, col, value) triplets. Duplicates are summed
    /// in input order.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        for &(r, c, _) in triplets {
            if r >= n_rows {
                return Err(Error::IndexOutOfRange {
                    index: r,
                    size: n_rows,
                });
            }
            if c >= n_cols {
                return Err(Error::IndexOutOfRange {
                    index: c,
                    size: n_cols,
                });
            }
        }
        // stable: duplicates keep insertion order, so (i,j) and (j,i) sum alike
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
            symmetric: false,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: d.to_vec(),
            symmetric: true,
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut trip = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::dim("from_dense", n_cols, row.len()));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n_rows, n_cols, &trip)
    }

    /// Marks the matrix symmetric after checking the pattern and values are
    /// bit-exact mirror images.
    pub fn into_symmetric(mut self) -> Result<Self> {
        if !self.is_bitwise_symmetric() {
            return Err(Error::InvalidStructure(
                "matrix is not exactly symmetric".into(),
            ));
        }
        self.symmetric = true;
        Ok(self)
    }

    pub fn is_bitwise_symmetric(&self) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                match self.get(j, i) {
                    Some(w) if w.to_bits() == v.to_bits() => {}
                    _ => return false,
                }
            }
        }
        true
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Average number of stored entries per row.
    pub fn nnz_per_row(&self) -> f64 {
        if self.n_rows == 0 {
            0.0
        } else {
            self.nnz() as f64 / self.n_rows as f64
        }
    }

    pub fn row_cols(&self, i: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    pub fn row_values(&self, i: usize) -> &[f64] {
        &self.values[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row_cols(i)
            .iter()
            .copied()
            .zip(self.row_values(i).iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let cols = self.row_cols(i);
        cols.binary_search(&j)
            .ok()
            .map(|k| self.values[self.row_offsets[i] + k])
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i).unwrap_or(0.0))
            .collect()
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| self.row_values(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        out
    }

    /// y = A x.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n_cols {
            return Err(Error::dim("spmv", self.n_cols, x.len()));
        }
        if y.len() != self.n_rows {
            return Err(Error::dim("spmv output", self.n_rows, y.len()));
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = self.row_offsets[i];
            let hi = self.row_offsets[i + 1];
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yi = acc;
        }
        Ok(())
    }

    /// y = Aᵀ x, scattering rows in ascending order.
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_rows {
            return Err(Error::dim("spmv_transpose", self.n_rows, x.len()));
        }
        let mut y = vec![0.0; self.n_cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                let dst = next[j];
                col_indices[dst] = i;
                values[dst] = v;
                next[j] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices,
            values,
            symmetric: self.symmetric,
        }
    }

    /// Sparse product `self * other` with a dense-marker accumulator per
    /// output row; output columns are sorted.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::dim("matmul", self.n_cols, other.n_rows));
        }
        let n_out = other.n_cols;
        let mut marker = vec![usize::MAX; n_out];
        let mut acc = vec![0.0; n_out];
        let mut touched: Vec<usize> = Vec::new();
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n_rows {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_indices.push(j);
                values.push(acc[j]);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix {
            n_rows: self.n_rows,
            n_cols: n_out,
            row_offsets,
            col_indices,
            values,
            symmetric: false,
        })
    }

    /// Keeps the rows and columns listed in `keep` (ascending), renumbered.
    pub fn submatrix(&self, keep: &[usize]) -> Result<SparseMatrix> {
        if self.n_rows != self.n_cols {
            return Err(Error::dim("submatrix", self.n_rows, self.n_cols));
        }
        let mut map = vec![usize::MAX; self.n_rows];
        for (new, &old) in keep.iter().enumerate() {
            if old >= self.n_rows {
                return Err(Error::IndexOutOfRange {
                    index: old,
                    size: self.n_rows,
                });
            }
            map[old] = new;
        }
        let mut row_offsets = Vec::with_capacity(keep.len() + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for &old in keep {
            for (j, v) in self.row(old) {
                if map[j] != usize::MAX {
                    col_indices.push(map[j]);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix {
            n_rows: keep.len(),
            n_cols: keep.len(),
            row_offsets,
            col_indices,
            values,
            symmetric: self.symmetric,
        })
    }
}

/// Coarse operator PᵀAP, computed as Pᵀ(AP).
///
/// When `a` is symmetric (flagged, or bitwise equal to its transpose) the
/// result is symmetrized entrywise as ½(C + Cᵀ) so the returned matrix is
/// bit-exactly symmetric.
pub fn galerkin_triple(p: &SparseMatrix, a: &SparseMatrix) -> Result<SparseMatrix> {
    if a.n_rows != a.n_cols {
        return Err(Error::dim("galerkin_triple (A square)", a.n_rows, a.n_cols));
    }
    if p.n_rows != a.n_rows {
        return Err(Error::dim("galerkin_triple", a.n_rows, p.n_rows));
    }
    let ap = a.matmul(p)?;
    let c = p.transpose().matmul(&ap)?;
    if !(a.symmetric || a.is_bitwise_symmetric()) {
        return Ok(c);
    }
    let ct = c.transpose();
    // (i,j) gets ½c_ij + ½c_ji, (j,i) gets ½c_ji + ½c_ij: commutative, bit-equal
    let mut sym = Vec::with_capacity(2 * c.nnz());
    for i in 0..c.n_rows {
        let mut a_it = c.row(i).peekable();
        let mut b_it = ct.row(i).peekable();
        loop {
            match (a_it.peek().copied(), b_it.peek().copied()) {
                (Some((ja, va)), Some((jb, vb))) if ja == jb => {
                    sym.push((i, ja, 0.5 * va + 0.5 * vb));
                    a_it.next();
                    b_it.next();
                }
                (Some((ja, va)), Some((jb, _))) if ja < jb => {
                    sym.push((i, ja, 0.5 * va));
                    a_it.next();
                }
                (Some(_), Some((jb, vb))) => {
                    sym.push((i, jb, 0.5 * vb));
                    b_it.next();
                }
                (Some((ja, va)), None) => {
                    sym.push((i, ja, 0.5 * va));
                    a_it.next();
                }
                (None, Some((jb, vb))) => {
                    sym.push((i, jb, 0.5 * vb));
                    b_it.next();
                }
                (None, None) => break,
            }
        }
    }
    let mut out = SparseMatrix::from_triplets(c.n_rows, c.n_cols, &sym)?;
    out.symmetric = true;
    Ok(out)
}

/// Solves Gᵀy = x for lower-triangular G by back substitution.
///
/// Works on the row storage of G directly: processing rows from the bottom,
/// each finished y_i is scattered into the pending right-hand side entries
/// of its row's strictly-lower columns.
pub fn lower_triangular_solve_transposed(g: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if g.n_rows != g.n_cols {
        return Err(Error::dim("triangular solve (square)", g.n_rows, g.n_cols));
    }
    if x.len() != g.n_rows {
        return Err(Error::dim("triangular solve", g.n_rows, x.len()));
    }
    let mut rhs = x.to_vec();
    let mut y = vec![0.0; x.len()];
    for i in (0..g.n_rows).rev() {
        let cols = g.row_cols(i);
        let vals = g.row_values(i);
        let diag = match cols.last() {
            Some(&c) if c == i => vals[vals.len() - 1],
            Some(&c) if c > i => {
                return Err(Error::InvalidStructure(format!(
                    "row {i} has entries above the diagonal"
                )))
            }
            _ => 0.0,
        };
        if diag == 0.0 {
            return Err(Error::SingularFactor { row: i });
        }
        let yi = rhs[i] / diag;
        y[i] = yi;
        for (&j, &v) in cols.iter().zip(vals).take(cols.len() - 1) {
            rhs[j] -= v * yi;
        }
    }
    Ok(y)
}

/// Off-diagonal column indices of row `i`.
pub fn adjacency_neighbors(a: &SparseMatrix, i: usize) -> Result<Vec<usize>> {
    if i >= a.n_rows {
        return Err(Error::IndexOutOfRange {
            index: i,
            size: a.n_rows,
        });
    }
    Ok(a.row_cols(i).iter().copied().filter(|&j| j != i).collect())
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
