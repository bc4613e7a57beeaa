// Sweeps the strength filter width θ and prints a metrics table and CSV.

use aspamg::config::SolverConfig;
use aspamg::fem::{assemble_hex_cube, Face, Material, MaterialField};
use aspamg::report::{metrics_table, solve_problem, sweep_csv};

pub fn run_example() -> aspamg::Result<()> {
    let problem = assemble_hex_cube(
        5,
        5,
        5,
        1.0,
        &MaterialField::Uniform(Material::default()),
        Some(Face::XMin),
    )?;
    let a = &problem.stiffness;
    let coords = problem.free_coordinates();
    let b = vec![1.0; a.n_rows()];

    let mut rows = Vec::new();
    for theta in [2, 3, 5, 8] {
        let cfg = SolverConfig {
            theta,
            ..SolverConfig::default()
        };
        let (_, s) = solve_problem("cube", a, Some(&coords), &b, &cfg)?;
        rows.push((theta.to_string(), s.metrics));
    }
    print!("{}", metrics_table("theta", &rows));
    print!("{}", sweep_csv("theta", &rows)?);
    Ok(())
}

fn main() -> aspamg::Result<()> {
    run_example()
}
