//! Damping study: what happens to a multigrid cycle when the largest
//! eigenvalues of G A Gᵀ are pushed up by a low-rank term α U Uᵀ and the
//! damping factor is recomputed accordingly.
//!
//! The updated smoother is applied in error form,
//! S_α e = e − ω_α (GᵀG A e + α Gᵀ U Uᵀ G⁻ᵀ e),
//! so the stationary iterations below track e = x − x* against a reference
//! solution x* and measure ‖A e‖ = ‖b − A x‖.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{orthonormalize, symmetric_eigen_sorted, DenseBlock, ORTHO_DROP_TOL};
use crate::error::{Error, Result};
use crate::fem::GeneratedProblem;
use crate::hierarchy::{amg_setup, Hierarchy, HierarchyConfig};
use crate::krylov::{pcg, power_spectral_radius, PcgOptions};
use crate::sparse::{dot, lower_triangular_solve_transposed, norm2, SparseMatrix};

/// Residual bound ‖S u − λ u‖ ≤ tol · ‖λ u‖ for accepted eigenpairs.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct LowRankUpdate {
    /// Orthonormal eigenvectors of G A Gᵀ, largest eigenvalue first.
    pub u: DenseBlock,
    pub eigenvalues: Vec<f64>,
    pub alpha: f64,
}

/// 2ω / (2 + αω).
pub fn omega_alpha(omega: f64, alpha: f64) -> f64 {
    2.0 * omega / (2.0 + alpha * omega)
}

fn apply_s(g: &SparseMatrix, a: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    let t = g.spmv_transpose(x)?;
    let t = a.spmv(&t)?;
    g.spmv(&t)
}

/// The `k` dominant eigenpairs of G A Gᵀ by Lanczos with full
/// reorthogonalization. The Krylov dimension doubles until every pair meets
/// the residual bound or the whole space has been spanned.
pub fn build_lowrank_update(
    g: &SparseMatrix,
    a: &SparseMatrix,
    k: usize,
    alpha: f64,
) -> Result<LowRankUpdate> {
    let n = a.n_rows();
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {n}")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument("alpha must be non-negative".into()));
    }
    if k == 0 {
        return Ok(LowRankUpdate {
            u: DenseBlock::zeros(n, 0),
            eigenvalues: Vec::new(),
            alpha,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4321);
    let mut q = DenseBlock::zeros(n, 0);
    let mut sq = DenseBlock::zeros(n, 0);
    let mut next = DenseBlock::random(n, 1, &mut rng).col(0).to_vec();
    let mut m = (2 * k + 20).min(n);
    let mut worst;

    loop {
        while q.n_cols() < m {
            // orthogonalize twice against the basis; restart if nothing is left
            for _ in 0..2 {
                for c in q.columns() {
                    let h = dot(c, &next);
                    for (x, y) in next.iter_mut().zip(c) {
                        *x -= h * y;
                    }
                }
            }
            let nrm = norm2(&next);
            if nrm <= 1e-10 {
                let mut fresh = DenseBlock::random(n, 1, &mut rng);
                let mut block = q.clone();
                block.push_column(fresh.col(0))?;
                orthonormalize(&mut block, ORTHO_DROP_TOL);
                if block.n_cols() == q.n_cols() {
                    break;
                }
                fresh = block.select_columns(&[block.n_cols() - 1]);
                next = fresh.col(0).to_vec();
                continue;
            }
            next.iter_mut().for_each(|v| *v /= nrm);
            let s = apply_s(g, a, &next)?;
            q.push_column(&next)?;
            sq.push_column(&s)?;
            next = s;
        }

        let h = q.gram(&sq);
        let mm = q.n_cols();
        let h = nalgebra::DMatrix::from_fn(mm, mm, |r, c| 0.5 * (h[(r, c)] + h[(c, r)]));
        let (vals, vecs) = symmetric_eigen_sorted(h);
        let take: Vec<usize> = (0..k.min(mm)).map(|j| mm - 1 - j).collect();
        let sel = vecs.select_columns(&take);
        let u = q.mul_small(&sel);
        let su = sq.mul_small(&sel);
        let lambdas: Vec<f64> = take.iter().map(|&j| vals[j]).collect();
        worst = 0.0;
        for (j, &lam) in lambdas.iter().enumerate() {
            let res: f64 = su
                .col(j)
                .iter()
                .zip(u.col(j))
                .map(|(s, x)| (s - lam * x).powi(2))
                .sum::<f64>()
                .sqrt();
            let scale = (lam * norm2(u.col(j))).abs().max(f64::MIN_POSITIVE);
            worst = f64::max(worst, res / scale);
        }
        if lambdas.len() == k && worst <= EIGEN_RESIDUAL_TOL {
            return Ok(LowRankUpdate {
                u,
                eigenvalues: lambdas,
                alpha,
            });
        }
        if mm >= n || q.n_cols() < m {
            break;
        }
        m = (2 * m).min(n);
    }
    Err(Error::EigenNoConvergence { worst })
}

/// e − ω (GᵀG A e + α Gᵀ U Uᵀ G⁻ᵀ e).
fn damped_error_step(
    g: &SparseMatrix,
    a: &SparseMatrix,
    upd: Option<&LowRankUpdate>,
    omega: f64,
    e: &[f64],
) -> Result<Vec<f64>> {
    let t = a.spmv(e)?;
    let t = g.spmv(&t)?;
    let mut corr = g.spmv_transpose(&t)?;
    if let Some(up) = upd.filter(|u| u.alpha != 0.0 && u.u.n_cols() > 0) {
        let y = lower_triangular_solve_transposed(g, e)?;
        let mut z = vec![0.0; e.len()];
        for c in up.u.columns() {
            let coef = up.alpha * dot(c, &y);
            for (zi, ci) in z.iter_mut().zip(c) {
                *zi += coef * ci;
            }
        }
        let gz = g.spmv_transpose(&z)?;
        for (ci, gi) in corr.iter_mut().zip(&gz) {
            *ci += gi;
        }
    }
    Ok(e.iter().zip(&corr).map(|(ei, ci)| ei - omega * ci).collect())
}

/// S_α x = x − GᵀG A x − α Gᵀ U Uᵀ G⁻ᵀ x.
pub fn apply_updated_smoother(
    g: &SparseMatrix,
    a: &SparseMatrix,
    upd: &LowRankUpdate,
    x: &[f64],
) -> Result<Vec<f64>> {
    if x.len() != a.n_rows() || upd.u.n_rows() != a.n_rows() {
        return Err(Error::dim("apply_updated_smoother", a.n_rows(), x.len()));
    }
    damped_error_step(g, a, Some(upd), 1.0, x)
}

/// Error propagation of one V-cycle whose finest smoother is replaced by
/// the (possibly updated) damped smoother.
pub fn cycle_error_step(
    h: &Hierarchy,
    upd: Option<&LowRankUpdate>,
    omega: f64,
    e: &[f64],
) -> Result<Vec<f64>> {
    let lv = &h.levels[0];
    let (Some(sm), Some(pr)) = (&lv.smoother, &lv.prolongation) else {
        // a direct solve leaves no error behind
        return Ok(vec![0.0; e.len()]);
    };
    let mut e = e.to_vec();
    for _ in 0..h.nu1 {
        e = damped_error_step(&sm.g, &lv.a, upd, omega, &e)?;
    }
    let r = lv.a.spmv(&e)?;
    let rc = pr.p.spmv_transpose(&r)?;
    let ec = h.vcycle_from(1, &rc)?;
    let c = pr.p.spmv(&ec)?;
    for (ei, ci) in e.iter_mut().zip(&c) {
        *ei -= ci;
    }
    for _ in 0..h.nu2 {
        e = damped_error_step(&sm.g, &lv.a, upd, omega, &e)?;
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingSettings {
    pub k: usize,
    pub alpha: f64,
    pub rel_tol: f64,
    pub max_it: usize,
    pub power_steps: usize,
    pub seed: u64,
}

impl Default for DampingSettings {
    fn default() -> Self {
        Self {
            k: 10,
            alpha: 5.0,
            rel_tol: 1e-8,
            max_it: 2000,
            power_steps: 100,
            seed: 1234,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingReport {
    pub n: usize,
    pub levels: usize,
    pub k: usize,
    pub alpha: f64,
    pub omega: f64,
    pub omega_alpha: f64,
    /// Updated eigenvalues of G A Gᵀ, largest first.
    pub eigenvalues: Vec<f64>,
    pub baseline_iterations: usize,
    pub updated_iterations: usize,
    pub baseline_converged: bool,
    pub updated_converged: bool,
    pub baseline_radius: f64,
    pub updated_radius: f64,
}

struct ErrorRun {
    iterations: usize,
    converged: bool,
}

fn error_form_solve(
    h: &Hierarchy,
    upd: Option<&LowRankUpdate>,
    omega: f64,
    x_star: &[f64],
    bnorm: f64,
    s: &DampingSettings,
) -> Result<ErrorRun> {
    let a = h.finest();
    let mut e: Vec<f64> = x_star.iter().map(|v| -v).collect();
    let mut it = 0;
    loop {
        let res = norm2(&a.spmv(&e)?);
        if res <= s.rel_tol * bnorm {
            return Ok(ErrorRun {
                iterations: it,
                converged: true,
            });
        }
        if it >= s.max_it || !res.is_finite() {
            return Ok(ErrorRun {
                iterations: it,
                converged: false,
            });
        }
        e = cycle_error_step(h, upd, omega, &e)?;
        it += 1;
    }
}

/// Builds one hierarchy and compares the stationary multigrid iteration with
/// the original finest smoother against the low-rank-updated one.
pub fn damping_experiment(
    problem: &GeneratedProblem,
    cfg: &HierarchyConfig,
    settings: &DampingSettings,
) -> Result<DampingReport> {
    let coords = problem.free_coordinates();
    damping_experiment_on(&problem.stiffness, Some(&coords), cfg, settings)
}

/// Same study on an arbitrary SPD matrix, optionally with node coordinates
/// for rigid-body seeding.
pub fn damping_experiment_on(
    a: &SparseMatrix,
    coordinates: Option<&[[f64; 3]]>,
    cfg: &HierarchyConfig,
    settings: &DampingSettings,
) -> Result<DampingReport> {
    let h = amg_setup(a, coordinates, cfg)?;
    let n = a.n_rows();
    let Some(sm) = &h.levels[0].smoother else {
        return Err(Error::InvalidArgument(
            "the damping study needs at least two levels".into(),
        ));
    };
    let upd = build_lowrank_update(&sm.g, a, settings.k, settings.alpha)?;
    let omega = sm.omega;
    let omega_a = omega_alpha(omega, settings.alpha);

    let b = vec![1.0; n];
    let bnorm = norm2(&b);
    let (x_star, _) = pcg(
        a,
        &b,
        |r| h.vcycle_apply(r),
        &PcgOptions {
            rel_tol: 1e-14,
            max_it: 1000,
        },
        None,
    )?;

    let base = error_form_solve(&h, None, omega, &x_star, bnorm, settings)?;
    let updated = error_form_solve(&h, Some(&upd), omega_a, &x_star, bnorm, settings)?;
    let base_rho = power_spectral_radius(
        |e| cycle_error_step(&h, None, omega, e),
        n,
        settings.power_steps,
        settings.seed,
    )?;
    let upd_rho = power_spectral_radius(
        |e| cycle_error_step(&h, Some(&upd), omega_a, e),
        n,
        settings.power_steps,
        settings.seed,
    )?;

    Ok(DampingReport {
        n,
        levels: h.n_levels(),
        k: settings.k,
        alpha: settings.alpha,
        omega,
        omega_alpha: omega_a,
        eigenvalues: upd.eigenvalues.clone(),
        baseline_iterations: base.iterations,
        updated_iterations: updated.iterations,
        baseline_converged: base.converged,
        updated_converged: updated.converged,
        baseline_radius: base_rho,
        updated_radius: upd_rho,
    })
}
