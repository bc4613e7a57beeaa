//! Tall dense blocks (test spaces, rigid body modes, eigenvector sets) and
//! the small dense kernels that operate on them.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::{dot, SparseMatrix};

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseBlock {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_columns(n_rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut values = Vec::with_capacity(n_rows * columns.len());
        for c in columns {
            if c.len() != n_rows {
                return Err(Error::dim("DenseBlock::from_columns", n_rows, c.len()));
            }
            values.extend_from_slice(c);
        }
        Ok(Self {
            n_rows,
            n_cols: columns.len(),
            values,
        })
    }

    pub fn from_column_major(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::dim(
                "DenseBlock::from_column_major",
                n_rows * n_cols,
                values.len(),
            ));
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    /// Columns filled with uniform(-1, 1) samples.
    pub fn random(n_rows: usize, n_cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let values = (0..n_rows * n_cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Self {
            n_rows,
            n_cols,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n_rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.n_rows + i] = v;
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n_cols).map(|j| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_rows.max(1)).take(self.n_cols)
    }

    pub fn push_column(&mut self, c: &[f64]) -> Result<()> {
        if c.len() != self.n_rows {
            return Err(Error::dim("DenseBlock::push_column", self.n_rows, c.len()));
        }
        self.values.extend_from_slice(c);
        self.n_cols += 1;
        Ok(())
    }

    /// Keeps the listed rows, in the listed order.
    pub fn select_rows(&self, rows: &[usize]) -> DenseBlock {
        let mut out = DenseBlock::zeros(rows.len(), self.n_cols);
        for j in 0..self.n_cols {
            let src = self.col(j);
            for (dst, &r) in out.col_mut(j).iter_mut().zip(rows) {
                *dst = src[r];
            }
        }
        out
    }

    pub fn select_columns(&self, cols: &[usize]) -> DenseBlock {
        let mut values = Vec::with_capacity(self.n_rows * cols.len());
        for &c in cols {
            values.extend_from_slice(self.col(c));
        }
        DenseBlock {
            n_rows: self.n_rows,
            n_cols: cols.len(),
            values,
        }
    }

    /// Applies a sparse operator to every column.
    pub fn apply(&self, a: &SparseMatrix) -> Result<DenseBlock> {
        let mut out = DenseBlock::zeros(a.n_rows(), self.n_cols);
        for j in 0..self.n_cols {
            a.spmv_into(self.col(j), out.col_mut(j))?;
        }
        Ok(out)
    }

    /// Gram matrix XᵀY.
    pub fn gram(&self, other: &DenseBlock) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_cols, other.n_cols, |i, j| {
            dot(self.col(i), other.col(j))
        })
    }

    /// X · C for a small coefficient matrix C.
    pub fn mul_small(&self, c: &DMatrix<f64>) -> DenseBlock {
        let mut out = DenseBlock::zeros(self.n_rows, c.ncols());
        for k in 0..c.ncols() {
            let dst = &mut out.values[k * self.n_rows..(k + 1) * self.n_rows];
            for j in 0..self.n_cols {
                let w = c[(j, k)];
                if w == 0.0 {
                    continue;
                }
                for (d, s) in dst.iter_mut().zip(self.col(j)) {
                    *d += w * s;
                }
            }
        }
        out
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.n_rows, self.n_cols, &self.values)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> DenseBlock {
        DenseBlock {
            n_rows: m.nrows(),
            n_cols: m.ncols(),
            values: m.as_slice().to_vec(),
        }
    }

    /// max |XᵀX − I|.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.gram(self);
        let mut worst: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Outcome of an orthonormalization pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OrthoOutcome {
    /// Columns (original indices) whose remaining norm fell below the drop
    /// tolerance, relative to their input norm.
    pub dependent: Vec<usize>,
    /// Columns that were replaced by fresh random vectors.
    pub replaced: Vec<usize>,
}

pub const ORTHO_DROP_TOL: f64 = 1e-12;

/// Modified Gram-Schmidt with one reorthogonalization pass. Dependent
/// columns are removed.
pub fn orthonormalize(block: &mut DenseBlock, drop_tol: f64) -> OrthoOutcome {
    let mut outcome = OrthoOutcome::default();
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(block.n_cols);
    for j in 0..block.n_cols {
        let mut v = block.col(j).to_vec();
        if orthogonalize_against(&mut v, &kept, drop_tol) {
            kept.push(v);
        } else {
            outcome.dependent.push(j);
        }
    }
    let n = block.n_rows;
    *block = DenseBlock::from_columns(n, &kept).expect("lengths match");
    outcome
}

/// Like [`orthonormalize`], but dependent columns are replaced in place by
/// seeded random vectors so the block keeps its width.
pub fn orthonormalize_with_replacement(
    block: &mut DenseBlock,
    drop_tol: f64,
    rng: &mut ChaCha8Rng,
) -> OrthoOutcome {
    let mut outcome = OrthoOutcome::default();
    let n = block.n_rows;
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(block.n_cols);
    for j in 0..block.n_cols {
        let mut v = block.col(j).to_vec();
        if !orthogonalize_against(&mut v, &kept, drop_tol) {
            outcome.dependent.push(j);
            outcome.replaced.push(j);
            let mut tries = 0;
            loop {
                v = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                if orthogonalize_against(&mut v, &kept, drop_tol) || tries > 8 {
                    break;
                }
                tries += 1;
            }
        }
        kept.push(v);
    }
    *block = DenseBlock::from_columns(n, &kept).expect("lengths match");
    outcome
}

/// Orthogonalizes `v` against `basis` twice and normalizes it. Returns false
/// when the remaining norm is below `drop_tol` times the input norm.
fn orthogonalize_against(v: &mut [f64], basis: &[Vec<f64>], drop_tol: f64) -> bool {
    let norm0 = dot(v, v).sqrt();
    if norm0 == 0.0 || !norm0.is_finite() {
        return false;
    }
    for _ in 0..2 {
        for q in basis {
            let h = dot(q, v);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= h * qi;
            }
        }
    }
    let norm = dot(v, v).sqrt();
    if norm <= drop_tol * norm0 {
        return false;
    }
    for vi in v.iter_mut() {
        *vi /= norm;
    }
    true
}

/// Eigen-decomposition of a small symmetric matrix, eigenvalues ascending.
pub(crate) fn symmetric_eigen_sorted(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Dense Cholesky factor L (lower) of a small SPD matrix, with the failing
/// row reported on a non-positive pivot.
pub(crate) fn cholesky_lower(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotSpd { row: j, pivot: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves L Lᵀ x = b in place.
pub(crate) fn cholesky_solve(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn orthonormalize_drops_dependent_columns() {
        let mut b = DenseBlock::from_columns(
            3,
            &[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]],
        )
        .unwrap();
        let out = orthonormalize(&mut b, ORTHO_DROP_TOL);
        assert_eq!(out.dependent, vec![1]);
        assert_eq!(b.n_cols(), 2);
        assert!(b.orthonormality_error() < 1e-14);
    }

    #[test]
    fn replacement_keeps_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut b = DenseBlock::from_columns(4, &[vec![1.0; 4], vec![1.0; 4], vec![0.0; 4]]).unwrap();
        let out = orthonormalize_with_replacement(&mut b, ORTHO_DROP_TOL, &mut rng);
        assert_eq!(out.replaced, vec![1, 2]);
        assert_eq!(b.n_cols(), 3);
        assert!(b.orthonormality_error() < 1e-12);
    }

    #[test]
    fn cholesky_roundtrip() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let l = cholesky_lower(&a).unwrap();
        let mut x = vec![1.0, 2.0, 3.0];
        cholesky_solve(&l, &mut x);
        let ax = &a * DMatrix::from_column_slice(3, 1, &x);
        for (i, want) in [1.0, 2.0, 3.0].iter().enumerate() {
            assert!((ax[(i, 0)] - want).abs() < 1e-13);
        }
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(cholesky_lower(&bad), Err(Error::NotSpd { row: 1, .. })));
    }

    #[test]
    fn select_rows_and_mul_small() {
        let b = DenseBlock::from_columns(3, &[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let r = b.select_rows(&[2, 0]);
        assert_eq!(r.col(0), &[3.0, 1.0]);
        assert_eq!(r.col(1), &[6.0, 4.0]);
        let c = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        assert_eq!(b.mul_small(&c).col(0), &[-3.0, -3.0, -3.0]);
    }
}
