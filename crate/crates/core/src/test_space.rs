//! Test-space construction: seeding with rigid body modes and random
//! vectors, then simultaneous Rayleigh-quotient minimization by conjugate
//! gradients (SRQCG) on S = G A Gᵀ with periodic Ritz projections.
//!
//! The iteration runs in the G-transformed space: a seed vector `v` given in
//! the original unknowns enters as `G⁻ᵀ v`, and the result is mapped back
//! with `Gᵀ`, so a seed that already spans part of the near-kernel of A
//! comes out unchanged.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{
    orthonormalize_with_replacement, symmetric_eigen_sorted, DenseBlock, ORTHO_DROP_TOL,
};
use crate::error::{Error, Result};
use crate::smoother::{compute_omega, estimate_lambda_max};
use crate::sparse::{dot, lower_triangular_solve_transposed, norm2, SparseMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrqcgConfig {
    pub n_tv: usize,
    /// Outer iterations.
    pub k_max: usize,
    /// Ritz projection every `k_ritz` outer iterations.
    pub k_ritz: usize,
    /// A vector has converged when ‖S z − q z‖ ≤ residual_tol · |q| · ‖z‖.
    pub residual_tol: f64,
    pub seed: u64,
    /// Damping of the initial smoothing pass `(I − ωS)`; estimated from
    /// λ_max(S) like the smoother's own ω when `None`.
    pub presmooth_omega: Option<f64>,
    pub lanczos_steps: usize,
}

impl Default for SrqcgConfig {
    fn default() -> Self {
        Self {
            n_tv: 10,
            k_max: 10,
            k_ritz: 1,
            residual_tol: 1e-2,
            seed: 1234,
            presmooth_omega: None,
            lanczos_steps: 10,
        }
    }
}

/// Rayleigh quotient of one vector immediately before and after one
/// conjugate-gradient update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientStep {
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone)]
pub struct TestSpace {
    /// Orthonormal columns, ordered by ascending quotient.
    pub v: DenseBlock,
    /// Rayleigh quotients of S for the columns of the transformed iterate,
    /// ascending and aligned with the columns of `v`.
    pub quotients: Vec<f64>,
    /// Per column slot, the quotient around every inner update.
    pub rayleigh_history: Vec<Vec<QuotientStep>>,
    pub iterations: usize,
    pub converged: bool,
    /// Updates that fell back to a steepest-descent line search.
    pub fallbacks: usize,
    /// Columns replaced by fresh random vectors after a rank collapse.
    pub replaced_columns: usize,
}

/// V₀ = [rbm columns | uniform(−1, 1) columns] with `n_tv` columns in total.
pub fn seed_space(
    rbms: Option<&DenseBlock>,
    n_tv: usize,
    n: usize,
    seed: u64,
) -> Result<DenseBlock> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match rbms {
        None => Ok(DenseBlock::random(n, n_tv, &mut rng)),
        Some(r) => {
            if r.n_rows() != n {
                return Err(Error::dim("seed_space", n, r.n_rows()));
            }
            if r.n_cols() > n_tv {
                return Err(Error::InvalidArgument(format!(
                    "n_tv = {n_tv} is smaller than the {} supplied seed columns",
                    r.n_cols()
                )));
            }
            let mut block = r.clone();
            let pad = DenseBlock::random(n, n_tv - r.n_cols(), &mut rng);
            for c in pad.columns() {
                block.push_column(c)?;
            }
            Ok(block)
        }
    }
}

struct TransformedOperator<'a> {
    a: &'a SparseMatrix,
    g: &'a SparseMatrix,
}

impl TransformedOperator<'_> {
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let t = self.g.spmv_transpose(x)?;
        let t = self.a.spmv(&t)?;
        self.g.spmv(&t)
    }

    fn apply_block(&self, z: &DenseBlock) -> Result<DenseBlock> {
        let mut out = DenseBlock::zeros(z.n_rows(), z.n_cols());
        for j in 0..z.n_cols() {
            out.col_mut(j).copy_from_slice(&self.apply(z.col(j))?);
        }
        Ok(out)
    }
}

/// Minimizer of the Rayleigh quotient along z + αp, or `None` when the
/// closed-form root is not usable.
fn line_search(z: &[f64], sz: &[f64], p: &[f64], sp: &[f64]) -> Option<f64> {
    let a = dot(p, sz);
    let b = dot(p, sp);
    let c = dot(p, z);
    let d = dot(p, p);
    let e = dot(z, sz);
    let f = dot(z, z);
    let lead = b * c - a * d;
    let disc = (d * e - b * f).powi(2) - 4.0 * lead * (a * f - c * e);
    if !(disc >= 0.0) || lead.abs() < 1e-300 || !disc.is_finite() {
        return None;
    }
    let alpha = (d * e - b * f + disc.sqrt()) / (2.0 * lead);
    alpha.is_finite().then_some(alpha)
}

/// Rayleigh quotient and residual S z − q z.
fn quotient_and_residual(z: &[f64], sz: &[f64]) -> (f64, Vec<f64>, f64) {
    let f = dot(z, z);
    let q = if f > 0.0 { dot(z, sz) / f } else { 0.0 };
    let r: Vec<f64> = sz.iter().zip(z).map(|(s, zi)| s - q * zi).collect();
    (q, r, f)
}

/// Simultaneous Rayleigh-quotient minimization on S = G A Gᵀ.
/// Removes from `p` its components along every column of `z` except `i`.
/// A direction carried over a Ritz rotation can otherwise steer a vector
/// towards an eigenvector already held by another column.
fn project_out_others(z: &DenseBlock, i: usize, p: &mut [f64]) {
    for j in (0..z.n_cols()).filter(|&j| j != i) {
        let zj = z.col(j);
        let nn = dot(zj, zj);
        if nn > 0.0 {
            let c = dot(zj, p) / nn;
            for (pk, zk) in p.iter_mut().zip(zj) {
                *pk -= c * zk;
            }
        }
    }
}

pub fn srqcg(
    a: &SparseMatrix,
    g: &SparseMatrix,
    v0: &DenseBlock,
    cfg: &SrqcgConfig,
) -> Result<TestSpace> {
    let n = a.n_rows();
    if g.n_rows() != n || v0.n_rows() != n {
        return Err(Error::dim("srqcg", n, v0.n_rows()));
    }
    if v0.n_cols() != cfg.n_tv {
        return Err(Error::dim("srqcg (V0 width)", cfg.n_tv, v0.n_cols()));
    }
    if cfg.n_tv == 0 || cfg.k_ritz == 0 {
        return Err(Error::Config("n_tv and k_ritz must be at least 1".into()));
    }
    let nt = cfg.n_tv;
    let s = TransformedOperator { a, g };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));

    let omega = match cfg.presmooth_omega {
        Some(w) => w,
        None => compute_omega(estimate_lambda_max(g, a, cfg.lanczos_steps, cfg.seed)?),
    };

    // Z₀ = (I − ωS) G⁻ᵀ V₀
    let mut z = DenseBlock::zeros(n, nt);
    for j in 0..nt {
        let y = lower_triangular_solve_transposed(g, v0.col(j))?;
        let sy = s.apply(&y)?;
        for (dst, (yi, si)) in z.col_mut(j).iter_mut().zip(y.iter().zip(&sy)) {
            *dst = yi - omega * si;
        }
    }
    let mut replaced = orthonormalize_with_replacement(&mut z, ORTHO_DROP_TOL, &mut rng)
        .replaced
        .len();
    let mut sz = s.apply_block(&z)?;

    let mut p = DenseBlock::zeros(n, nt);
    let mut q = vec![0.0; nt];
    let mut conv = vec![false; nt];
    for i in 0..nt {
        let (qi, r, _) = quotient_and_residual(z.col(i), sz.col(i));
        q[i] = qi;
        conv[i] = norm2(&r) <= cfg.residual_tol * qi.abs() * norm2(z.col(i));
        for (pi, ri) in p.col_mut(i).iter_mut().zip(&r) {
            *pi = 2.0 * ri;
        }
    }

    let mut history = vec![Vec::new(); nt];
    let mut fallbacks = 0;
    let mut iterations = 0;
    let mut converged = conv.iter().all(|&c| c);
    let mut k = 0;
    while !converged && k < cfg.k_max {
        k += 1;
        iterations = k;
        if k % cfg.k_ritz == 0 {
            replaced += orthonormalize_with_replacement(&mut z, ORTHO_DROP_TOL, &mut rng)
                .replaced
                .len();
            sz = s.apply_block(&z)?;
            let h = z.gram(&sz);
            let h = DMatrix::from_fn(nt, nt, |r, c| 0.5 * (h[(r, c)] + h[(c, r)]));
            let (_, u) = symmetric_eigen_sorted(h);
            z = z.mul_small(&u);
            sz = sz.mul_small(&u);
        }

        for i in 0..nt {
            let zi = z.col(i).to_vec();
            let szi = sz.col(i).to_vec();
            let before = dot(&zi, &szi) / dot(&zi, &zi);
            let mut pi = p.col(i).to_vec();
            project_out_others(&z, i, &mut pi);
            let mut spi = s.apply(&pi)?;

            let mut alpha = if dot(&pi, &pi) > 0.0 {
                line_search(&zi, &szi, &pi, &spi)
            } else {
                None
            };
            let mut restarted = false;
            if alpha.is_none() {
                // steepest descent: exact line search along the residual
                let (_, mut r, _) = quotient_and_residual(&zi, &szi);
                project_out_others(&z, i, &mut r);
                if norm2(&r) > 0.0 {
                    fallbacks += 1;
                    restarted = true;
                    spi = s.apply(&r)?;
                    pi = r;
                    alpha = line_search(&zi, &szi, &pi, &spi);
                }
            }
            let alpha = alpha.unwrap_or(0.0);

            {
                let zc = z.col_mut(i);
                for (zj, pj) in zc.iter_mut().zip(&pi) {
                    *zj += alpha * pj;
                }
            }
            {
                let sc = sz.col_mut(i);
                for (sj, spj) in sc.iter_mut().zip(&spi) {
                    *sj += alpha * spj;
                }
            }
            let (qi, r, f) = quotient_and_residual(z.col(i), sz.col(i));
            q[i] = qi;
            history[i].push(QuotientStep { before, after: qi });
            conv[i] = norm2(&r) <= cfg.residual_tol * qi.abs() * f.sqrt();

            // new conjugate direction
            let grad: Vec<f64> = r.iter().map(|x| 2.0 * x / f).collect();
            let b = dot(&pi, &spi);
            let beta = if restarted || b == 0.0 {
                0.0
            } else {
                -dot(&grad, &spi) / b
            };
            let pc = p.col_mut(i);
            for ((dst, gj), pj) in pc.iter_mut().zip(&grad).zip(&pi) {
                *dst = gj + beta * pj;
            }
        }
        converged = conv.iter().all(|&c| c);
    }

    // order by quotient, map back, orthonormalize
    let mut order: Vec<usize> = (0..nt).collect();
    order.sort_by(|&x, &y| q[x].total_cmp(&q[y]));
    let z_sorted = z.select_columns(&order);
    let quotients: Vec<f64> = order.iter().map(|&i| q[i]).collect();
    let mut v = DenseBlock::zeros(n, nt);
    for j in 0..nt {
        v.col_mut(j)
            .copy_from_slice(&g.spmv_transpose(z_sorted.col(j))?);
    }
    replaced += orthonormalize_with_replacement(&mut v, ORTHO_DROP_TOL, &mut rng)
        .replaced
        .len();

    Ok(TestSpace {
        v,
        quotients,
        rayleigh_history: history,
        iterations,
        converged,
        fallbacks,
        replaced_columns: replaced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeding_contract() {
        let rbm = DenseBlock::from_columns(4, &[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]])
            .unwrap();
        let v = seed_space(Some(&rbm), 2, 4, 3).unwrap();
        assert_eq!(v, rbm);

        let a = seed_space(Some(&rbm), 5, 4, 3).unwrap();
        let b = seed_space(Some(&rbm), 5, 4, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.col(0), rbm.col(0));
        assert!(a.col(4).iter().all(|x| (-1.0..1.0).contains(x)));

        let r1 = seed_space(None, 10, 7, 9).unwrap();
        assert_eq!(r1.n_cols(), 10);
        assert_eq!(r1, seed_space(None, 10, 7, 9).unwrap());
        assert_ne!(r1, seed_space(None, 10, 7, 10).unwrap());

        assert!(seed_space(Some(&rbm), 1, 4, 3).is_err());
    }

    #[test]
    fn width_mismatch_rejected() {
        let a = SparseMatrix::identity(5);
        let v0 = DenseBlock::zeros(5, 3);
        let cfg = SrqcgConfig {
            n_tv: 2,
            ..SrqcgConfig::default()
        };
        assert!(srqcg(&a, &a, &v0, &cfg).is_err());
    }

    #[test]
    fn line_search_minimizes_two_by_two() {
        // S = diag(1, 3), z = e1 + e2, p = e1 - e2: minimum along line is e1
        let z = [1.0, 1.0];
        let sz = [1.0, 3.0];
        let p = [1.0, -1.0];
        let sp = [1.0, -3.0];
        let alpha = line_search(&z, &sz, &p, &sp).unwrap();
        assert!((alpha - 1.0).abs() < 1e-12);
    }
}
