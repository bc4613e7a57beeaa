// Greedy least-squares interpolation: one hand-made fit, then a full
// prolongation on a small chain.

use aspamg::coarsening::{affinity_soc, filter_soc, select_coarse_mis};
use aspamg::prolongation::{dpls_build, dpls_fit, interpolation_residual, DplsConfig};
use aspamg::sparse::SparseMatrix;
use aspamg::DenseBlock;

pub fn run_example() -> aspamg::Result<()> {
    let cfg = DplsConfig::default();

    // Target is an exact combination of the first two candidates.
    let target = [1.0, 2.0, 3.0];
    let candidates = vec![vec![1.0, 0.0, 1.0], vec![0.0, 2.0, 2.0], vec![0.3, 0.1, -0.2]];
    let fit = dpls_fit(&target, &candidates, &cfg)?;
    println!(
        "selected {:?} weights {:?} stop {:?} residuals {:?}",
        fit.selected, fit.weights, fit.stop, fit.residual_history
    );

    // Chain of 9 nodes with linear and constant test vectors.
    let n = 9;
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 2.0));
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
    }
    let a = SparseMatrix::from_triplets(n, n, &t)?;
    let v = DenseBlock::from_columns(n, &[vec![1.0; n], (0..n).map(|i| i as f64).collect()])?;
    let graph = filter_soc(&affinity_soc(&a, &v)?, 2)?;
    let split = select_coarse_mis(&graph);
    let pl = dpls_build(&graph, &split, &v, &cfg)?;
    println!("P is {} x {}, {} nonzeros", pl.p.n_rows(), pl.p.n_cols(), pl.p.nnz());
    for (reason, count) in pl.stop_counts() {
        println!("  {reason:?}: {count}");
    }
    for &i in &split.fine {
        let coarse: Vec<usize> = pl.p.row_cols(i).iter().map(|&c| split.coarse[c]).collect();
        let r = interpolation_residual(&v, i, &coarse, pl.p.row_values(i))?;
        println!("  fine node {i}: from {coarse:?}, residual {r:.1e}");
    }
    Ok(())
}

fn main() -> aspamg::Result<()> {
    run_example()
}
