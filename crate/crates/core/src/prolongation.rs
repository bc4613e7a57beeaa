//! Dynamic-pattern least-squares prolongation.
//!
//! Every fine node is interpolated from a handful of nearby coarse nodes
//! chosen greedily: at each step the candidate whose (reflected) test-space
//! row is most aligned with the current residual joins the set, and an
//! incremental Householder QR keeps the least-squares fit up to date. The
//! ratio of the largest to the smallest |R_kk| is watched along the way and
//! a candidate that would push it past `kappa_p` is refused.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarsening::{affinity, CfSplit, SocGraph};
use crate::dense::DenseBlock;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DplsConfig {
    /// Maximum path length in the filtered graph from a fine node to its
    /// interpolating coarse nodes.
    pub d_p: usize,
    /// Relative interpolation residual at which a node stops.
    pub eps_p: f64,
    /// Largest accepted diagonal-ratio estimate of cond(R).
    pub kappa_p: f64,
    /// Cap on interpolatory coarse nodes per fine node.
    pub n_max: usize,
}

impl Default for DplsConfig {
    fn default() -> Self {
        Self {
            d_p: 2,
            eps_p: 1e-2,
            kappa_p: 50.0,
            n_max: 5,
        }
    }
}

impl DplsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_p < 1 {
            return Err(Error::Config("d_p must be at least 1".into()));
        }
        if !(self.kappa_p > 1.0) {
            return Err(Error::Config("kappa_p must exceed 1".into()));
        }
        if self.n_max < 1 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        if !(self.eps_p >= 0.0) {
            return Err(Error::Config("eps_p must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopReason {
    Tolerance,
    Condition,
    DistanceExhausted,
    NMax,
}

/// Outcome of the greedy fit for one fine node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFit {
    /// Indices into the candidate list, in order of selection.
    pub selected: Vec<usize>,
    pub weights: Vec<f64>,
    pub stop: StopReason,
    /// ‖residual‖ before any selection and after each accepted candidate.
    pub residual_history: Vec<f64>,
    /// max|R_kk| / min|R_kk| of the accepted factor (1 when empty).
    pub condition_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct Prolongation {
    pub p: SparseMatrix,
    /// Stop reason of each fine node; `None` on coarse nodes.
    pub stop_reasons: Vec<Option<StopReason>>,
}

impl Prolongation {
    /// Fine nodes left without any interpolatory coarse node.
    pub fn empty_fine_rows(&self) -> usize {
        self.stop_reasons
            .iter()
            .enumerate()
            .filter(|(i, s)| s.is_some() && self.p.row_cols(*i).is_empty())
            .count()
    }

    pub fn stop_counts(&self) -> [(StopReason, usize); 4] {
        let count = |r| self.stop_reasons.iter().filter(|s| **s == Some(r)).count();
        [
            (StopReason::Tolerance, count(StopReason::Tolerance)),
            (StopReason::Condition, count(StopReason::Condition)),
            (StopReason::DistanceExhausted, count(StopReason::DistanceExhausted)),
            (StopReason::NMax, count(StopReason::NMax)),
        ]
    }
}

fn tail_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Greedy least-squares fit of `target` by a subset of `candidates`.
pub fn dpls_fit(target: &[f64], candidates: &[Vec<f64>], cfg: &DplsConfig) -> Result<NodeFit> {
    let m = target.len();
    if let Some(c) = candidates.iter().find(|c| c.len() != m) {
        return Err(Error::dim("dpls_fit", m, c.len()));
    }
    let target_norm = tail_norm(target);
    let mut r = target.to_vec();
    let mut work: Vec<Vec<f64>> = candidates.to_vec();
    let mut remaining: Vec<usize> = (0..candidates.len()).collect();
    let mut selected = Vec::new();
    // columns of R, column k has k + 1 meaningful entries
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut diag_max = 0.0f64;
    let mut diag_min = f64::INFINITY;
    let mut history = vec![target_norm];

    let stop = loop {
        let k = selected.len();
        if tail_norm(&r[k..]) <= cfg.eps_p * target_norm {
            break StopReason::Tolerance;
        }
        if k >= cfg.n_max {
            break StopReason::NMax;
        }
        if remaining.is_empty() || k >= m {
            break StopReason::DistanceExhausted;
        }

        let mut best = 0;
        let mut best_aff = f64::NEG_INFINITY;
        for (pos, &c) in remaining.iter().enumerate() {
            let aff = affinity(&r[k..], &work[c][k..]);
            if aff > best_aff {
                best_aff = aff;
                best = pos;
            }
        }
        let c = remaining[best];
        let x = &work[c][k..];
        let xnorm = tail_norm(x);
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let (lo, hi) = (diag_min.min(xnorm), diag_max.max(xnorm));
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if cond > cfg.kappa_p {
            break StopReason::Condition;
        }

        // reflector H = I - 2 u uᵀ / (uᵀu), u = x - alpha e1
        let mut u = x.to_vec();
        u[0] -= alpha;
        let utu: f64 = u.iter().map(|v| v * v).sum();
        let reflect = |y: &mut [f64]| {
            let s = 2.0 * y.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() / utu;
            for (yi, ui) in y.iter_mut().zip(&u) {
                *yi -= s * ui;
            }
        };
        if r[k..] == *x {
            r[k] = alpha;
            r[k + 1..].iter_mut().for_each(|v| *v = 0.0);
        } else {
            reflect(&mut r[k..]);
        }
        let mut col = work[c][..k].to_vec();
        col.push(alpha);
        r_cols.push(col);
        remaining.remove(best);
        for &o in &remaining {
            reflect(&mut work[o][k..]);
        }
        selected.push(c);
        diag_min = lo;
        diag_max = hi;
        history.push(tail_norm(&r[k + 1..]));
    };

    // back substitution R w = r[..k]
    let k = selected.len();
    let mut w = r[..k].to_vec();
    for row in (0..k).rev() {
        let mut s = w[row];
        for col in row + 1..k {
            s -= r_cols[col][row] * w[col];
        }
        w[row] = s / r_cols[row][row];
    }
    Ok(NodeFit {
        selected,
        weights: w,
        stop,
        residual_history: history,
        condition_estimate: if k == 0 { 1.0 } else { diag_max / diag_min },
    })
}

/// Coarse nodes reachable from `i` within `depth` hops, ascending.
fn coarse_candidates(g: &SocGraph, split: &CfSplit, i: usize, depth: usize) -> Vec<usize> {
    let n = g.n_nodes();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::from([i]);
    dist[i] = 0;
    let mut found = Vec::new();
    while let Some(u) = queue.pop_front() {
        if dist[u] == depth {
            continue;
        }
        for &v in g.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                if split.is_coarse(v) {
                    found.push(v);
                }
                queue.push_back(v);
            }
        }
    }
    found.sort_unstable();
    found
}

pub fn dpls_build(
    g: &SocGraph,
    split: &CfSplit,
    v: &DenseBlock,
    cfg: &DplsConfig,
) -> Result<Prolongation> {
    cfg.validate()?;
    let n = g.n_nodes();
    if v.n_rows() != n || split.n_nodes() != n {
        return Err(Error::dim("dpls_build", n, v.n_rows()));
    }
    let rows: Vec<(Vec<(usize, f64)>, Option<StopReason>)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<_> {
            if let Some(ci) = split.coarse_index[i] {
                return Ok((vec![(ci, 1.0)], None));
            }
            let cand = coarse_candidates(g, split, i, cfg.d_p);
            let vecs: Vec<Vec<f64>> = cand.iter().map(|&j| v.row(j)).collect();
            let fit = dpls_fit(&v.row(i), &vecs, cfg)?;
            let mut entries: Vec<(usize, f64)> = fit
                .selected
                .iter()
                .zip(&fit.weights)
                .map(|(&s, &w)| (split.coarse_index[cand[s]].expect("coarse candidate"), w))
                .collect();
            entries.sort_unstable_by_key(|e| e.0);
            Ok((entries, Some(fit.stop)))
        })
        .collect::<Result<_>>()?;

    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut stop_reasons = Vec::with_capacity(n);
    for (entries, reason) in rows {
        for (j, w) in entries {
            cols.push(j);
            vals.push(w);
        }
        offsets.push(cols.len());
        stop_reasons.push(reason);
    }
    let p = SparseMatrix::from_csr(n, split.n_coarse(), offsets, cols, vals)?;
    Ok(Prolongation { p, stop_reasons })
}

/// ‖v_i − Σ_j w_j v_j‖₂ over rows of the test space.
pub fn interpolation_residual(v: &DenseBlock, i: usize, set: &[usize], w: &[f64]) -> Result<f64> {
    if set.len() != w.len() {
        return Err(Error::dim("interpolation_residual", set.len(), w.len()));
    }
    let n = v.n_rows();
    if let Some(&bad) = set.iter().chain(std::iter::once(&i)).find(|&&j| j >= n) {
        return Err(Error::IndexOutOfRange { index: bad, size: n });
    }
    let mut r = v.row(i);
    for (&j, &wj) in set.iter().zip(w) {
        for (c, rc) in r.iter_mut().enumerate() {
            *rc -= wj * v.get(j, c);
        }
    }
    Ok(tail_norm(&r))
}
