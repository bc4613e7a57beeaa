// Strength of connection from test-vector affinities, θ-filtering and a
// maximal independent set of coarse nodes.

use aspamg::coarsening::{affinity, affinity_soc, filter_soc, select_coarse_mis, verify_mis};
use aspamg::sparse::SparseMatrix;
use aspamg::DenseBlock;

fn laplacian_1d(n: usize) -> aspamg::Result<SparseMatrix> {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 2.0));
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
    }
    SparseMatrix::from_triplets(n, n, &t)
}

pub fn run_example() -> aspamg::Result<()> {
    println!("affinity((1,0), (1,1)) = {}", affinity(&[1.0, 0.0], &[1.0, 1.0]));

    let n = 12;
    let a = laplacian_1d(n)?;
    // Smooth test vectors: the constant and a slow sine.
    let cols = vec![
        vec![1.0; n],
        (0..n).map(|i| ((i as f64 + 1.0) * std::f64::consts::PI / (n as f64 + 1.0)).sin()).collect(),
    ];
    let v = DenseBlock::from_columns(n, &cols)?;

    let soc = affinity_soc(&a, &v)?;
    let graph = filter_soc(&soc, 2)?;
    let split = select_coarse_mis(&graph);
    let marks: String = (0..n).map(|i| if split.is_coarse(i) { 'C' } else { 'f' }).collect();
    println!("1D chain of {n}: {marks}  ({} coarse)", split.n_coarse());
    if !verify_mis(&graph, &split) {
        return Err(aspamg::Error::InvalidArgument("not a maximal independent set".into()));
    }
    Ok(())
}

fn main() -> aspamg::Result<()> {
    run_example()
}
