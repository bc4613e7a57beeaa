// Clamped elastic cube solved with PCG and the adaptive multigrid
// preconditioner, printing the hierarchy and the usual run metrics.
//
// ```text
// cargo run --release --example solve_elasticity_cube
// ```

use aspamg::config::SolverConfig;
use aspamg::fem::{assemble_hex_cube, Face, Material, MaterialField};
use aspamg::report::solve_problem;

pub fn run_example() -> aspamg::Result<()> {
    let problem = assemble_hex_cube(
        6,
        6,
        6,
        1.0,
        &MaterialField::Uniform(Material::new(1.0, 0.3)?),
        Some(Face::XMin),
    )?;
    let a = &problem.stiffness;
    let coords = problem.free_coordinates();
    // Unit load on every free DOF.
    let b = vec![1.0; a.n_rows()];

    let cfg = SolverConfig::default();
    let (x, summary) = solve_problem("cube 6x6x6", a, Some(&coords), &b, &cfg)?;
    print!("{}", summary.table());

    let r = a.spmv(&x)?;
    let res: f64 = r.iter().zip(&b).map(|(ri, bi)| (bi - ri).powi(2)).sum::<f64>().sqrt();
    let rel = res / (a.n_rows() as f64).sqrt();
    println!("recomputed relative residual {rel:.2e}");
    if !summary.converged || rel > 1e-7 {
        return Err(aspamg::Error::InvalidArgument("solve did not converge".into()));
    }
    Ok(())
}

fn main() -> aspamg::Result<()> {
    run_example()
}
