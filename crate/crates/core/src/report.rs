//! Solve driver plus the machine- and human-readable reports built from it.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::hierarchy::amg_setup;
use crate::krylov::{pcg, SolveReport, Timings};
use crate::sparse::SparseMatrix;

/// Size, iteration and timing metrics of one preconditioned solve, named
/// after the usual table columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    #[serde(rename = "C_gd")]
    pub c_gd: f64,
    #[serde(rename = "C_op")]
    pub c_op: f64,
    #[serde(rename = "C_fs")]
    pub c_fs: f64,
    pub n_it: usize,
    #[serde(rename = "T_ts")]
    pub t_ts: f64,
    #[serde(rename = "T_cs")]
    pub t_cs: f64,
    #[serde(rename = "T_sm")]
    pub t_sm: f64,
    #[serde(rename = "T_pl")]
    pub t_pl: f64,
    #[serde(rename = "T_rap")]
    pub t_rap: f64,
    #[serde(rename = "T_p")]
    pub t_p: f64,
    #[serde(rename = "T_s")]
    pub t_s: f64,
    #[serde(rename = "T_t")]
    pub t_t: f64,
}

/// Column names of [`RunMetrics`] in table order.
pub const METRIC_COLUMNS: [&str; 12] = [
    "C_gd", "C_op", "C_fs", "n_it", "T_ts", "T_cs", "T_sm", "T_pl", "T_rap", "T_p", "T_s", "T_t",
];

impl RunMetrics {
    fn values(&self) -> [String; 12] {
        let t = |x: f64| format!("{x:.3}");
        [
            format!("{:.3}", self.c_gd),
            format!("{:.3}", self.c_op),
            format!("{:.3}", self.c_fs),
            self.n_it.to_string(),
            t(self.t_ts),
            t(self.t_cs),
            t(self.t_sm),
            t(self.t_pl),
            t(self.t_rap),
            t(self.t_p),
            t(self.t_s),
            t(self.t_t),
        ]
    }
}

/// Everything recorded about one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSummary {
    pub problem: String,
    pub n_rows: usize,
    pub nnz: usize,
    pub levels: usize,
    pub level_sizes: Vec<usize>,
    pub converged: bool,
    pub true_relative_residual: f64,
    pub seed: u64,
    pub threads: usize,
    pub metrics: RunMetrics,
    pub residual_history: Vec<f64>,
    pub config: SolverConfig,
}

impl SolveSummary {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{}: n = {}, nnz = {}, levels = {} {:?}, converged = {}\n",
            self.problem, self.n_rows, self.nnz, self.levels, self.level_sizes, self.converged
        );
        s.push_str(&metrics_table("run", &[("solve".to_string(), self.metrics.clone())]));
        s
    }
}

/// Aligned text table, one row per labelled run.
pub fn metrics_table(label: &str, rows: &[(String, RunMetrics)]) -> String {
    let mut cells: Vec<Vec<String>> = Vec::with_capacity(rows.len() + 1);
    let mut header = vec![label.to_string()];
    header.extend(METRIC_COLUMNS.iter().map(|c| c.to_string()));
    cells.push(header);
    for (name, m) in rows {
        let mut row = vec![name.clone()];
        row.extend(m.values());
        cells.push(row);
    }
    let widths: Vec<usize> = (0..cells[0].len())
        .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &cells {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (v, w))| if c == 0 { format!("{v:<w$}") } else { format!("{v:>w$}") })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// CSV with a leading parameter column followed by the metric columns.
pub fn sweep_csv(param: &str, rows: &[(String, RunMetrics)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![param.to_string()];
    header.extend(METRIC_COLUMNS.iter().map(|c| c.to_string()));
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    w.write_record(&header).map_err(ser)?;
    for (value, m) in rows {
        let mut rec = vec![value.clone()];
        rec.extend([m.c_gd, m.c_op, m.c_fs].map(|x| x.to_string()));
        rec.push(m.n_it.to_string());
        rec.extend(
            [m.t_ts, m.t_cs, m.t_sm, m.t_pl, m.t_rap, m.t_p, m.t_s, m.t_t].map(|x| x.to_string()),
        );
        w.write_record(&rec).map_err(ser)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
}

/// Builds the preconditioner, runs PCG from zero and assembles the summary.
pub fn solve_problem(
    problem: &str,
    a: &SparseMatrix,
    coordinates: Option<&[[f64; 3]]>,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveSummary)> {
    let start = Instant::now();
    let h = amg_setup(a, coordinates, &cfg.hierarchy())?;
    let t_setup = start.elapsed().as_secs_f64();
    let (x, rep): (Vec<f64>, SolveReport) = pcg(a, b, |r| h.vcycle_apply(r), &cfg.pcg(), None)?;
    let mut timings = Timings::from_setup(&h.timings, rep.timings.t_s);
    timings.t_p = t_setup;
    timings.t_t = start.elapsed().as_secs_f64();
    let c = h.complexities();
    let metrics = RunMetrics {
        c_gd: c.grid,
        c_op: c.operator,
        c_fs: c.fsai,
        n_it: rep.iterations,
        t_ts: timings.t_ts,
        t_cs: timings.t_cs,
        t_sm: timings.t_sm,
        t_pl: timings.t_pl,
        t_rap: timings.t_rap,
        t_p: timings.t_p,
        t_s: timings.t_s,
        t_t: timings.t_t,
    };
    Ok((
        x,
        SolveSummary {
            problem: problem.to_string(),
            n_rows: a.n_rows(),
            nnz: a.nnz(),
            levels: h.n_levels(),
            level_sizes: h.level_sizes(),
            converged: rep.converged,
            true_relative_residual: rep.true_relative_residual,
            seed: cfg.seed,
            threads: rayon::current_num_threads(),
            metrics,
            residual_history: rep.residual_history,
            config: cfg.clone(),
        },
    ))
}
