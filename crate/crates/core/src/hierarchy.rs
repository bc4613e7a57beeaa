//! Recursive multigrid setup, V-cycle application, coarsest-level direct
//! solve and complexity metrics.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coarsening::{affinity_soc, filter_soc, select_coarse_mis, CfSplit};
use crate::dense::{
    cholesky_lower, cholesky_solve, orthonormalize, orthonormalize_with_replacement, DenseBlock,
    ORTHO_DROP_TOL,
};
use crate::error::{Error, Result};
use crate::fem::rigid_body_modes;
use crate::prolongation::{dpls_build, DplsConfig, Prolongation};
use crate::smoother::{smoother_setup, FsaiSmoother, SmootherConfig};
use crate::sparse::{galerkin_triple, norm2, SparseMatrix};
use crate::test_space::{seed_space, srqcg, SrqcgConfig, TestSpace};

/// Largest matrix the coarsest-level dense factorization will accept.
pub const MAX_DENSE_COARSE: usize = 6000;

/// How the test space of a coarse level is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoarseTestSpace {
    /// Rows of the finer test space at the coarse nodes, re-orthonormalized.
    #[default]
    Injection,
    /// Injected rows used as seeds for a fresh SRQCG run on the coarse level.
    Resmooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    pub max_levels: usize,
    pub min_coarse_size: usize,
    pub nu1: usize,
    pub nu2: usize,
    pub theta: usize,
    pub smoother: SmootherConfig,
    pub srqcg: SrqcgConfig,
    pub dpls: DplsConfig,
    pub coarse_test_space: CoarseTestSpace,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            max_levels: 10,
            min_coarse_size: 100,
            nu1: 1,
            nu2: 1,
            theta: 5,
            smoother: SmootherConfig::default(),
            srqcg: SrqcgConfig::default(),
            dpls: DplsConfig::default(),
            coarse_test_space: CoarseTestSpace::Injection,
        }
    }
}

impl HierarchyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_levels < 1 {
            return Err(Error::Config("max_levels must be at least 1".into()));
        }
        if self.nu1 + self.nu2 < 1 {
            return Err(Error::Config("nu1 + nu2 must be at least 1".into()));
        }
        if self.theta < 1 {
            return Err(Error::Config("theta must be at least 1".into()));
        }
        self.smoother.validate()?;
        self.dpls.validate()
    }
}

#[derive(Debug, Clone)]
pub struct Level {
    pub a: SparseMatrix,
    /// Absent on the coarsest level, which is solved directly.
    pub smoother: Option<FsaiSmoother>,
    pub prolongation: Option<Prolongation>,
    pub split: Option<CfSplit>,
    /// Test space used to coarsen this level.
    pub test_space: Option<DenseBlock>,
}

/// Wall-clock seconds spent in each setup phase, summed over levels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SetupTimings {
    pub test_space: f64,
    pub coarsening: f64,
    pub smoother: f64,
    pub prolongation: f64,
    pub rap: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complexities {
    pub grid: f64,
    pub operator: f64,
    pub fsai: f64,
}

#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub levels: Vec<Level>,
    coarse_factor: DMatrix<f64>,
    pub nu1: usize,
    pub nu2: usize,
    pub timings: SetupTimings,
    /// Finest-level SRQCG result, when one was computed.
    pub finest_test_space: Option<TestSpace>,
}

fn factorize_coarsest(a: &SparseMatrix, level: usize) -> Result<DMatrix<f64>> {
    let n = a.n_rows();
    if n > MAX_DENSE_COARSE {
        return Err(Error::CoarseFactorization {
            level,
            reason: format!("{n} rows exceed the dense limit of {MAX_DENSE_COARSE}"),
        });
    }
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, v) in a.row(i) {
            d[(i, j)] = v;
        }
    }
    cholesky_lower(&d).map_err(|e| Error::CoarseFactorization {
        level,
        reason: e.to_string(),
    })
}

fn finest_seeds(
    n: usize,
    coordinates: Option<&[[f64; 3]]>,
    cfg: &SrqcgConfig,
) -> Result<DenseBlock> {
    let rbm = match coordinates {
        Some(c) => {
            if 3 * c.len() != n {
                return Err(Error::dim("amg_setup (coordinates)", n, 3 * c.len()));
            }
            let mut m = rigid_body_modes(c).modes;
            if m.n_cols() > cfg.n_tv {
                m = m.select_columns(&(0..cfg.n_tv).collect::<Vec<_>>());
            }
            Some(m)
        }
        None => None,
    };
    seed_space(rbm.as_ref(), cfg.n_tv, n, cfg.seed)
}

/// Builds the multigrid hierarchy for an SPD matrix. `coordinates` holds
/// one point per node with three unknowns per node, and switches on
/// rigid-body seeding of the test space.
pub fn amg_setup(
    a: &SparseMatrix,
    coordinates: Option<&[[f64; 3]]>,
    cfg: &HierarchyConfig,
) -> Result<Hierarchy> {
    cfg.validate()?;
    if a.n_rows() != a.n_cols() {
        return Err(Error::dim("amg_setup", a.n_rows(), a.n_cols()));
    }
    let start = Instant::now();
    let mut timings = SetupTimings::default();
    let mut levels: Vec<Level> = Vec::new();
    let mut finest_test_space = None;
    let mut current = a.clone();
    let mut injected: Option<DenseBlock> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.srqcg.seed.wrapping_add(7));

    loop {
        let depth = levels.len();
        let n = current.n_rows();
        if n <= cfg.min_coarse_size || depth + 1 >= cfg.max_levels {
            break;
        }

        let t = Instant::now();
        let smoother = smoother_setup(&current, &cfg.smoother)?;
        timings.smoother += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let v = if depth == 0 {
            let seeds = finest_seeds(n, coordinates, &cfg.srqcg)?;
            let ts = srqcg(&current, &smoother.g, &seeds, &cfg.srqcg)?;
            let v = ts.v.clone();
            finest_test_space = Some(ts);
            v
        } else {
            let mut v = injected.take().expect("injected test space");
            if cfg.coarse_test_space == CoarseTestSpace::Resmooth {
                let pad = DenseBlock::random(n, cfg.srqcg.n_tv.saturating_sub(v.n_cols()), &mut rng);
                for c in pad.columns() {
                    v.push_column(c)?;
                }
                let sub_cfg = SrqcgConfig {
                    n_tv: v.n_cols(),
                    ..cfg.srqcg.clone()
                };
                v = srqcg(&current, &smoother.g, &v, &sub_cfg)?.v;
            }
            v
        };
        timings.test_space += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let soc = affinity_soc(&current, &v)?;
        let graph = filter_soc(&soc, cfg.theta)?;
        let split = select_coarse_mis(&graph);
        timings.coarsening += t.elapsed().as_secs_f64();
        if split.n_coarse() == 0 || split.n_coarse() == n {
            break;
        }

        let t = Instant::now();
        let prolongation = dpls_build(&graph, &split, &v, &cfg.dpls)?;
        timings.prolongation += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let coarse = galerkin_triple(&prolongation.p, &current)?;
        timings.rap += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let mut next_v = v.select_rows(&split.coarse);
        if cfg.coarse_test_space == CoarseTestSpace::Injection {
            orthonormalize(&mut next_v, ORTHO_DROP_TOL);
        } else {
            orthonormalize_with_replacement(&mut next_v, ORTHO_DROP_TOL, &mut rng);
        }
        injected = Some(next_v);
        timings.test_space += t.elapsed().as_secs_f64();

        let fine = std::mem::replace(&mut current, coarse);
        levels.push(Level {
            a: fine,
            smoother: Some(smoother),
            prolongation: Some(prolongation),
            split: Some(split),
            test_space: Some(v),
        });
    }

    let coarse_factor = factorize_coarsest(&current, levels.len())?;
    levels.push(Level {
        a: current,
        smoother: None,
        prolongation: None,
        split: None,
        test_space: None,
    });
    timings.total = start.elapsed().as_secs_f64();
    Ok(Hierarchy {
        levels,
        coarse_factor,
        nu1: cfg.nu1,
        nu2: cfg.nu2,
        timings,
        finest_test_space,
    })
}

impl Hierarchy {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> &SparseMatrix {
        &self.levels[0].a
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.a.n_rows()).collect()
    }

    /// Solves with the coarsest-level Cholesky factor.
    pub fn coarse_solve(&self, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.coarse_factor.nrows();
        if y.len() != n {
            return Err(Error::dim("coarse_solve", n, y.len()));
        }
        let mut x = y.to_vec();
        cholesky_solve(&self.coarse_factor, &mut x);
        Ok(x)
    }

    /// One V(ν1, ν2)-cycle, B⁻¹y, on the finest level.
    pub fn vcycle_apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.vcycle_from(0, y)
    }

    /// V-cycle entered at `level`.
    pub fn vcycle_from(&self, level: usize, y: &[f64]) -> Result<Vec<f64>> {
        let lv = self
            .levels
            .get(level)
            .ok_or(Error::IndexOutOfRange { index: level, size: self.levels.len() })?;
        if y.len() != lv.a.n_rows() {
            return Err(Error::dim("vcycle_apply", lv.a.n_rows(), y.len()));
        }
        let (Some(sm), Some(pr)) = (&lv.smoother, &lv.prolongation) else {
            return self.coarse_solve(y);
        };
        let mut x = vec![0.0; y.len()];
        sm.smooth(&lv.a, y, &mut x, self.nu1)?;
        let ax = lv.a.spmv(&x)?;
        let r: Vec<f64> = y.iter().zip(&ax).map(|(yi, ai)| yi - ai).collect();
        let rc = pr.p.spmv_transpose(&r)?;
        let ec = self.vcycle_from(level + 1, &rc)?;
        let e = pr.p.spmv(&ec)?;
        for (xi, ei) in x.iter_mut().zip(&e) {
            *xi += ei;
        }
        sm.smooth(&lv.a, y, &mut x, self.nu2)?;
        Ok(x)
    }

    pub fn complexities(&self) -> Complexities {
        let n0 = self.levels[0].a.n_rows() as f64;
        let nnz0 = self.levels[0].a.nnz() as f64;
        let mut grid = 0.0;
        let mut operator = 0.0;
        let mut fsai = 0.0;
        for lv in &self.levels {
            grid += lv.a.n_rows() as f64;
            operator += lv.a.nnz() as f64;
            if let Some(s) = &lv.smoother {
                fsai += s.g.nnz() as f64;
            }
        }
        Complexities {
            grid: grid / n0,
            operator: operator / nnz0,
            fsai: fsai / nnz0,
        }
    }

    /// Richardson iteration x ← x + B⁻¹(b − Ax) from x = 0.
    pub fn stationary_solve(&self, b: &[f64], tol: f64, max_it: usize) -> Result<StationaryResult> {
        let a = self.finest();
        let n = a.n_rows();
        if b.len() != n {
            return Err(Error::dim("stationary_solve", n, b.len()));
        }
        let bnorm = norm2(b);
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut history = Vec::new();
        let mut it = 0;
        while norm2(&r) > tol * bnorm && it < max_it {
            let c = self.vcycle_apply(&r)?;
            for (xi, ci) in x.iter_mut().zip(&c) {
                *xi += ci;
            }
            let ax = a.spmv(&x)?;
            for ((ri, bi), ai) in r.iter_mut().zip(b).zip(&ax) {
                *ri = bi - ai;
            }
            it += 1;
            history.push(norm2(&r));
        }
        Ok(StationaryResult {
            converged: norm2(&r) <= tol * bnorm,
            x,
            iterations: it,
            residual_history: history,
        })
    }
}

#[derive(Debug, Clone)]
pub struct StationaryResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual_history: Vec<f64>,
}
