//! Preconditioned conjugate gradients and a power-iteration estimate of the
//! spectral radius of a linear operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{Complexities, SetupTimings};
use crate::sparse::{axpy, dot, norm2, SparseMatrix};

/// Factor applied to the tolerance when rechecking the true residual.
pub const TRUE_RESIDUAL_SLACK: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcgOptions {
    pub rel_tol: f64,
    pub max_it: usize,
}

impl Default for PcgOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_it: 1000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Test-space construction.
    pub t_ts: f64,
    /// Coarse-node selection.
    pub t_cs: f64,
    /// Smoother setup.
    pub t_sm: f64,
    /// Prolongation.
    pub t_pl: f64,
    /// Galerkin products.
    pub t_rap: f64,
    /// Whole preconditioner setup.
    pub t_p: f64,
    /// PCG solve.
    pub t_s: f64,
    /// Setup plus solve.
    pub t_t: f64,
}

impl Timings {
    pub fn from_setup(s: &SetupTimings, solve: f64) -> Self {
        Self {
            t_ts: s.test_space,
            t_cs: s.coarsening,
            t_sm: s.smoother,
            t_pl: s.prolongation,
            t_rap: s.rap,
            t_p: s.total,
            t_s: solve,
            t_t: s.total + solve,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// ‖r_k‖₂ after every iteration.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// ‖b − A x‖₂ / ‖b‖₂ recomputed from the returned solution.
    pub true_relative_residual: f64,
    pub timings: Timings,
    pub complexities: Option<Complexities>,
}

/// PCG on `a` with the preconditioner `precond(r) ≈ A⁻¹ r`. `x0 = None`
/// starts from zero.
pub fn pcg<F>(
    a: &SparseMatrix,
    b: &[f64],
    precond: F,
    opts: &PcgOptions,
    x0: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveReport)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = a.n_rows();
    if b.len() != n {
        return Err(Error::dim("pcg", n, b.len()));
    }
    let mut x = match x0 {
        Some(v) if v.len() != n => return Err(Error::dim("pcg (x0)", n, v.len())),
        Some(v) => v.to_vec(),
        None => vec![0.0; n],
    };
    let start = std::time::Instant::now();
    let bnorm = norm2(b);
    let target = opts.rel_tol * bnorm;
    let ax = a.spmv(&x)?;
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut history = Vec::new();
    let mut converged = norm2(&r) <= target;

    if !converged {
        let mut z = precond(&r)?;
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        for it in 0..opts.max_it {
            a.spmv_into(&p, &mut ap)?;
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::OperatorNotSpd {
                    iteration: it,
                    value: pap,
                });
            }
            let alpha = rz / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            let rnorm = norm2(&r);
            history.push(rnorm);
            if rnorm <= target {
                converged = true;
                break;
            }
            z = precond(&r)?;
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
    }

    let ax = a.spmv(&x)?;
    let true_res = b.iter().zip(&ax).map(|(bi, ai)| (bi - ai).powi(2)).sum::<f64>().sqrt();
    let rel = if bnorm > 0.0 { true_res / bnorm } else { true_res };
    if converged && true_res > TRUE_RESIDUAL_SLACK * target {
        converged = false;
    }
    let solve = start.elapsed().as_secs_f64();
    Ok((
        x,
        SolveReport {
            iterations: history.len(),
            residual_history: history,
            converged,
            true_relative_residual: rel,
            timings: Timings {
                t_s: solve,
                t_t: solve,
                ..Timings::default()
            },
            complexities: None,
        },
    ))
}

/// Power-iteration estimate of |λ|_max of a linear operator.
pub fn power_spectral_radius<F>(op: F, n: usize, steps: usize, seed: u64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nx = norm2(&x);
    if nx == 0.0 {
        return Ok(0.0);
    }
    x.iter_mut().for_each(|v| *v /= nx);
    let mut estimate = 0.0;
    for _ in 0..steps {
        let y = op(&x)?;
        if y.len() != n {
            return Err(Error::dim("power_spectral_radius", n, y.len()));
        }
        let ny = norm2(&y);
        if ny == 0.0 {
            return Ok(0.0);
        }
        estimate = ny;
        x = y.into_iter().map(|v| v / ny).collect();
    }
    Ok(estimate)
}
