// Near-null-space vectors from simultaneous Rayleigh quotient minimization,
// seeded with rigid-body modes.

use aspamg::fem::{assemble_hex_cube, rigid_body_modes, Face, Material, MaterialField};
use aspamg::smoother::{smoother_setup, SmootherConfig};
use aspamg::sparse::SparseMatrix;
use aspamg::test_space::{seed_space, srqcg, SrqcgConfig};

pub fn run_example() -> aspamg::Result<()> {
    // Toy case first: the two smallest eigenpairs of diag(1, ..., 10).
    let d: Vec<f64> = (1..=10).map(f64::from).collect();
    let a = SparseMatrix::diagonal(&d);
    let g = SparseMatrix::identity(10);
    let cfg = SrqcgConfig {
        n_tv: 2,
        k_max: 40,
        residual_tol: 1e-6,
        ..SrqcgConfig::default()
    };
    let ts = srqcg(&a, &g, &seed_space(None, 2, 10, 99)?, &cfg)?;
    println!("diag(1..10): quotients {:?} after {} iterations", ts.quotients, ts.iterations);

    // Elasticity: six rigid-body modes plus four random columns.
    let problem = assemble_hex_cube(
        4,
        4,
        4,
        1.0,
        &MaterialField::Uniform(Material::default()),
        Some(Face::XMin),
    )?;
    let a = &problem.stiffness;
    let sm = smoother_setup(a, &SmootherConfig::default())?;
    let rbm = rigid_body_modes(&problem.free_coordinates());
    let cfg = SrqcgConfig::default();
    let v0 = seed_space(Some(&rbm.modes), cfg.n_tv, a.n_rows(), cfg.seed)?;
    let ts = srqcg(a, &sm.g, &v0, &cfg)?;
    println!(
        "cube: {} vectors, orthonormality error {:.1e}",
        ts.v.n_cols(),
        ts.v.orthonormality_error()
    );
    for (k, q) in ts.quotients.iter().enumerate() {
        println!("  q[{k}] = {q:.4e}");
    }
    Ok(())
}

fn main() -> aspamg::Result<()> {
    run_example()
}
