//! Adaptive factorized sparse approximate inverse (aFSAI) smoother.
//!
//! The smoother is `S = I − ω GᵀG A` with `G` lower triangular and
//! `GᵀG ≈ A⁻¹`. Each row of `G` grows its pattern independently: the entry
//! candidates with the largest Kaporin-gradient magnitude are added a few at
//! a time until the row's Schur-complement value ψ_i stops decreasing. The
//! setup loop then keeps refining `G` from where it left off while the
//! damping factor is below target and the density bound allows.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{cholesky_lower, cholesky_solve, symmetric_eigen_sorted, DenseBlock};
use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, SparseMatrix};

/// Multiplier applied to the Lanczos estimate of λ_max(GAGᵀ).
pub const LAMBDA_SAFETY: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmootherConfig {
    /// Adaptive steps, entries per step and exit tolerance of the first build.
    pub k0: usize,
    pub rho0: usize,
    pub eps0: f64,
    /// The same three controls for each refinement pass.
    pub ki: usize,
    pub rhoi: usize,
    pub epsi: f64,
    /// Refinement continues while ω is below this value...
    pub omega_bar: f64,
    /// ...and the average number of entries per row of G is below this one.
    /// `None` means twice the average row count of A's lower triangle.
    pub rho_bar: Option<f64>,
    pub lanczos_steps: usize,
    pub seed: u64,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self {
            k0: 4,
            rho0: 4,
            eps0: 1e-3,
            ki: 2,
            rhoi: 4,
            epsi: 1e-3,
            omega_bar: 0.95,
            rho_bar: None,
            lanczos_steps: 10,
            seed: 1234,
        }
    }
}

impl SmootherConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rho0 < 1 || self.rhoi < 1 {
            return Err(Error::Config("rho0 and rhoi must be at least 1".into()));
        }
        if self.eps0 < 0.0 || self.epsi < 0.0 {
            return Err(Error::Config("eps0 and epsi must be non-negative".into()));
        }
        if let Some(r) = self.rho_bar {
            if !(r > 0.0) {
                return Err(Error::Config("rho_bar must be positive".into()));
            }
        }
        if self.lanczos_steps < 1 {
            return Err(Error::Config("lanczos_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Why the refinement loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetupExit {
    /// ω reached ω̄.
    OmegaReached,
    /// Average row density reached ρ̄.
    DensityBound,
    /// A refinement pass added no entries.
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassRecord {
    pub omega: f64,
    pub nnz_per_row: f64,
    pub kaporin_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct FsaiSmoother {
    pub g: SparseMatrix,
    pub omega: f64,
    /// Safety-inflated λ_max(GAGᵀ) estimate ω was derived from.
    pub lambda_max: f64,
    /// Kaporin number of the Jacobi-scaled matrix divided by that of GAGᵀ,
    /// (Π A_ii/ψ_i)^(1/n). Always ≥ 1; larger means a better factor.
    pub kaporin_estimate: f64,
    pub refinement_passes: usize,
    pub exit: SetupExit,
    pub history: Vec<PassRecord>,
}

impl FsaiSmoother {
    /// Applies ν smoothing steps x ← x + ω Gᵀ G (b − A x) in place.
    pub fn smooth(&self, a: &SparseMatrix, b: &[f64], x: &mut [f64], steps: usize) -> Result<()> {
        let n = a.n_rows();
        let mut r = vec![0.0; n];
        let mut t = vec![0.0; n];
        for _ in 0..steps {
            a.spmv_into(x, &mut r)?;
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri = bi - *ri;
            }
            self.g.spmv_into(&r, &mut t)?;
            let u = self.g.spmv_transpose(&t)?;
            for (xi, ui) in x.iter_mut().zip(&u) {
                *xi += self.omega * ui;
            }
        }
        Ok(())
    }

    /// y = GᵀG r.
    pub fn apply_inverse_approx(&self, r: &[f64]) -> Result<Vec<f64>> {
        let t = self.g.spmv(r)?;
        self.g.spmv_transpose(&t)
    }
}

/// One smoothing step, returning x' = x + ω Gᵀ G (b − A x).
pub fn apply_smoothing_step(
    s: &FsaiSmoother,
    a: &SparseMatrix,
    b: &[f64],
    x: &[f64],
) -> Result<Vec<f64>> {
    if b.len() != a.n_rows() {
        return Err(Error::dim("apply_smoothing_step (b)", a.n_rows(), b.len()));
    }
    if x.len() != a.n_cols() {
        return Err(Error::dim("apply_smoothing_step (x)", a.n_cols(), x.len()));
    }
    if s.g.n_rows() != a.n_rows() {
        return Err(Error::dim("apply_smoothing_step (G)", a.n_rows(), s.g.n_rows()));
    }
    let mut out = x.to_vec();
    s.smooth(a, b, &mut out, 1)?;
    Ok(out)
}

/// Builds an aFSAI factor of `a` starting from the row patterns of
/// `g_start` (identity when `None`), with up to `k` adaptive steps adding at
/// most `rho` entries each and per-row exit tolerance `eps`.
pub fn afsai_build(
    a: &SparseMatrix,
    g_start: Option<&SparseMatrix>,
    k: usize,
    rho: usize,
    eps: f64,
) -> Result<SparseMatrix> {
    afsai_build_with_psi(a, g_start, k, rho, eps).map(|(g, _)| g)
}

/// As [`afsai_build`], also returning ψ_i = 1/ĝ_ii per row.
pub(crate) fn afsai_build_with_psi(
    a: &SparseMatrix,
    g_start: Option<&SparseMatrix>,
    k: usize,
    rho: usize,
    eps: f64,
) -> Result<(SparseMatrix, Vec<f64>)> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::dim("afsai_build (square)", n, a.n_cols()));
    }
    if let Some(g) = g_start {
        if g.n_rows() != n || g.n_cols() != n {
            return Err(Error::dim("afsai_build (G_start)", n, g.n_rows()));
        }
    }
    let rows: Vec<(Vec<usize>, Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let start: Vec<usize> = match g_start {
                Some(g) => g.row_cols(i).iter().copied().filter(|&j| j < i).collect(),
                None => Vec::new(),
            };
            build_row(a, i, start, k, rho, eps)
        })
        .collect::<Result<_>>()?;

    let mut row_offsets = Vec::with_capacity(n + 1);
    row_offsets.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut psi = Vec::with_capacity(n);
    for (c, v, p) in rows {
        cols.extend(c);
        vals.extend(v);
        psi.push(p);
        row_offsets.push(cols.len());
    }
    let g = SparseMatrix::from_csr(n, n, row_offsets, cols, vals)?;
    Ok((g, psi))
}

/// Solves A[J,J] ĝ = e_last for J = pattern ∪ {i}.
fn solve_local(a: &SparseMatrix, pattern: &[usize], i: usize) -> Result<Vec<f64>> {
    let m = pattern.len() + 1;
    let idx = |r: usize| if r < pattern.len() { pattern[r] } else { i };
    let local = DMatrix::from_fn(m, m, |r, c| a.get(idx(r), idx(c)).unwrap_or(0.0));
    let l = cholesky_lower(&local).map_err(|e| match e {
        Error::NotSpd { pivot, .. } => Error::NotSpd { row: i, pivot },
        other => other,
    })?;
    let mut rhs = vec![0.0; m];
    rhs[m - 1] = 1.0;
    cholesky_solve(&l, &mut rhs);
    if !(rhs[m - 1] > 0.0) {
        return Err(Error::NotSpd {
            row: i,
            pivot: rhs[m - 1],
        });
    }
    Ok(rhs)
}

fn build_row(
    a: &SparseMatrix,
    i: usize,
    mut pattern: Vec<usize>,
    k: usize,
    rho: usize,
    eps: f64,
) -> Result<(Vec<usize>, Vec<f64>, f64)> {
    let mut ghat = solve_local(a, &pattern, i)?;
    let mut prev_psi: Option<f64> = None;
    for _ in 0..k {
        let psi = 1.0 / ghat[ghat.len() - 1];
        if let Some(p) = prev_psi {
            if (p - psi) / p <= eps {
                break;
            }
        }
        prev_psi = Some(psi);

        // gradient (A ĝ)_j over j < i outside the pattern
        let mut grad: BTreeMap<usize, f64> = BTreeMap::new();
        for (pos, &gk) in ghat.iter().enumerate() {
            let kk = if pos < pattern.len() { pattern[pos] } else { i };
            for (j, v) in a.row(kk) {
                if j < i && pattern.binary_search(&j).is_err() {
                    *grad.entry(j).or_insert(0.0) += v * gk;
                }
            }
        }
        let mut cand: Vec<(usize, f64)> = grad
            .into_iter()
            .filter(|(_, g)| *g != 0.0)
            .map(|(j, g)| (j, g.abs()))
            .collect();
        if cand.is_empty() {
            break;
        }
        cand.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        pattern.extend(cand.iter().take(rho).map(|c| c.0));
        pattern.sort_unstable();
        ghat = solve_local(a, &pattern, i)?;
    }
    let last = ghat[ghat.len() - 1];
    let scale = 1.0 / last.sqrt();
    let mut cols = pattern;
    cols.push(i);
    let vals = ghat.iter().map(|g| g * scale).collect();
    Ok((cols, vals, 1.0 / last))
}

/// Largest eigenvalue of G A Gᵀ from `steps` Lanczos iterations on a seeded
/// random start, inflated by [`LAMBDA_SAFETY`].
pub fn estimate_lambda_max(
    g: &SparseMatrix,
    a: &SparseMatrix,
    steps: usize,
    seed: u64,
) -> Result<f64> {
    if steps == 0 {
        return Err(Error::InvalidArgument("Lanczos needs at least one step".into()));
    }
    let n = a.n_rows();
    if g.n_rows() != n || g.n_cols() != n {
        return Err(Error::dim("estimate_lambda_max", n, g.n_rows()));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let op = |x: &[f64]| -> Result<Vec<f64>> {
        let t = g.spmv_transpose(x)?;
        let t = a.spmv(&t)?;
        g.spmv(&t)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = DenseBlock::random(n, 1, &mut rng);
    let mut v = start.col(0).to_vec();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut v_prev = vec![0.0; n];
    let mut beta = 0.0;
    let mut alphas = Vec::with_capacity(steps);
    let mut betas = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut w = op(&v)?;
        for (wi, pi) in w.iter_mut().zip(&v_prev) {
            *wi -= beta * pi;
        }
        let alpha = dot(&w, &v);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= alpha * vi;
        }
        alphas.push(alpha);
        beta = norm2(&w);
        if beta <= 1e-12 * alpha.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        betas.push(beta);
        v_prev = std::mem::replace(&mut v, w.iter().map(|x| x / beta).collect());
    }
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |r, c| {
        if r == c {
            alphas[r]
        } else if r + 1 == c {
            betas[r]
        } else if c + 1 == r {
            betas[c]
        } else {
            0.0
        }
    });
    let (values, _) = symmetric_eigen_sorted(t);
    Ok(LAMBDA_SAFETY * values[m - 1])
}

/// ω = min(1, 2/λ̂).
pub fn compute_omega(lambda_hat: f64) -> f64 {
    (2.0 / lambda_hat).min(1.0)
}

fn kaporin_gain(a: &SparseMatrix, psi: &[f64]) -> f64 {
    if psi.is_empty() {
        return 1.0;
    }
    let d = a.diagonal_values();
    let mean_log: f64 =
        d.iter().zip(psi).map(|(aii, p)| (aii / p).ln()).sum::<f64>() / psi.len() as f64;
    mean_log.exp()
}

/// Average entries per row of the lower triangle of `a` (diagonal included).
pub fn lower_nnz_per_row(a: &SparseMatrix) -> f64 {
    let n = a.n_rows();
    if n == 0 {
        return 0.0;
    }
    let lower: usize = (0..n).map(|i| a.row_cols(i).iter().filter(|&&j| j <= i).count()).sum();
    lower as f64 / n as f64
}

/// Builds the smoother and refines it until ω ≥ ω̄ or the density bound.
pub fn smoother_setup(a: &SparseMatrix, cfg: &SmootherConfig) -> Result<FsaiSmoother> {
    cfg.validate()?;
    let rho_bar = cfg.rho_bar.unwrap_or_else(|| 2.0 * lower_nnz_per_row(a));
    let (mut g, mut psi) = afsai_build_with_psi(a, None, cfg.k0, cfg.rho0, cfg.eps0)?;
    let mut lambda = estimate_lambda_max(&g, a, cfg.lanczos_steps, cfg.seed)?;
    let mut omega = compute_omega(lambda);
    let mut history = vec![PassRecord {
        omega,
        nnz_per_row: g.nnz_per_row(),
        kaporin_estimate: kaporin_gain(a, &psi),
    }];
    let mut passes = 0;
    let exit = loop {
        if omega >= cfg.omega_bar {
            break SetupExit::OmegaReached;
        }
        if g.nnz_per_row() >= rho_bar {
            break SetupExit::DensityBound;
        }
        let (g_new, psi_new) = afsai_build_with_psi(a, Some(&g), cfg.ki, cfg.rhoi, cfg.epsi)?;
        passes += 1;
        let grew = g_new.nnz() > g.nnz();
        g = g_new;
        psi = psi_new;
        lambda = estimate_lambda_max(&g, a, cfg.lanczos_steps, cfg.seed)?;
        omega = compute_omega(lambda);
        history.push(PassRecord {
            omega,
            nnz_per_row: g.nnz_per_row(),
            kaporin_estimate: kaporin_gain(a, &psi),
        });
        if !grew {
            break if omega >= cfg.omega_bar {
                SetupExit::OmegaReached
            } else {
                SetupExit::Stalled
            };
        }
    };
    Ok(FsaiSmoother {
        kaporin_estimate: kaporin_gain(a, &psi),
        g,
        omega,
        lambda_max: lambda,
        refinement_passes: passes,
        exit,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, &t)
            .unwrap()
            .into_symmetric()
            .unwrap()
    }

    #[test]
    fn diagonal_matrix_gives_inverse_sqrt() {
        let d = [4.0, 9.0, 0.25];
        let a = SparseMatrix::diagonal(&d);
        for k in [0, 3] {
            let g = afsai_build(&a, None, k, 4, 0.0).unwrap();
            assert_eq!(g.nnz(), 3);
            for (i, di) in d.iter().enumerate() {
                assert!((g.get(i, i).unwrap() - 1.0 / di.sqrt()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_steps_is_jacobi_scaling() {
        let a = tridiag(6);
        let g = afsai_build(&a, None, 0, 4, 0.0).unwrap();
        assert_eq!(g.nnz(), 6);
        for i in 0..6 {
            assert!((g.get(i, i).unwrap() - 1.0 / 2.5f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn non_spd_local_system_errors() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            afsai_build(&a, None, 2, 2, 0.0),
            Err(Error::NotSpd { row: 1, .. })
        ));
        let neg = SparseMatrix::diagonal(&[1.0, -1.0]);
        assert!(afsai_build(&neg, None, 0, 1, 0.0).is_err());
    }

    #[test]
    fn omega_formula() {
        assert_eq!(compute_omega(1.05), 1.0);
        assert!((compute_omega(4.2) - 0.476_190_476_190_476).abs() < 1e-12);
        assert_eq!(compute_omega(2.0), 1.0);
    }

    #[test]
    fn lanczos_exact_small_cases() {
        let i5 = SparseMatrix::identity(5);
        let l = estimate_lambda_max(&i5, &i5, 10, 1234).unwrap();
        assert!((l - 1.05).abs() < 1e-10);
        let a = SparseMatrix::diagonal(&[1.0, 4.0]);
        let l = estimate_lambda_max(&SparseMatrix::identity(2), &a, 2, 1234).unwrap();
        assert!((l - 4.2).abs() < 1e-8);
    }

    #[test]
    fn setup_diagonal_needs_no_refinement() {
        let a = SparseMatrix::diagonal(&[1.0, 3.0, 7.0, 2.0]);
        let s = smoother_setup(&a, &SmootherConfig::default()).unwrap();
        assert_eq!(s.omega, 1.0);
        assert_eq!(s.refinement_passes, 0);
        assert_eq!(s.exit, SetupExit::OmegaReached);
    }

    #[test]
    fn setup_with_zero_target_builds_once() {
        let a = tridiag(30);
        let cfg = SmootherConfig {
            omega_bar: 0.0,
            ..SmootherConfig::default()
        };
        let s = smoother_setup(&a, &cfg).unwrap();
        assert_eq!(s.refinement_passes, 0);
        assert_eq!(s.history.len(), 1);
    }

    #[test]
    fn smoothing_fixed_point_and_identity() {
        let a = tridiag(5);
        let s = smoother_setup(&a, &SmootherConfig::default()).unwrap();
        let x = vec![1.0, -2.0, 0.5, 3.0, 1.0];
        let b = a.spmv(&x).unwrap();
        let x1 = apply_smoothing_step(&s, &a, &b, &x).unwrap();
        for (p, q) in x1.iter().zip(&x) {
            assert!((p - q).abs() < 1e-14);
        }

        let id = SparseMatrix::identity(3);
        let s = FsaiSmoother {
            g: id.clone(),
            omega: 1.0,
            lambda_max: 1.05,
            kaporin_estimate: 1.0,
            refinement_passes: 0,
            exit: SetupExit::OmegaReached,
            history: vec![],
        };
        let b = [1.0, 2.0, 3.0];
        assert_eq!(apply_smoothing_step(&s, &id, &b, &[0.0; 3]).unwrap(), b.to_vec());
        assert!(apply_smoothing_step(&s, &id, &b, &[0.0; 2]).is_err());
    }

    #[test]
    fn lower_density_counts_diagonal() {
        assert_eq!(lower_nnz_per_row(&tridiag(3)), 5.0 / 3.0);
    }
}
