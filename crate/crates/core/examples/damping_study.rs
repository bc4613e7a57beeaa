// Shifts the top of the smoothed spectrum with a low-rank update and
// measures how much slower the stationary multigrid iteration becomes.

use aspamg::diagnostics::{damping_experiment, DampingSettings};
use aspamg::fem::{assemble_hex_cube, Face, Material, MaterialField};
use aspamg::HierarchyConfig;

pub fn run_example() -> aspamg::Result<()> {
    let problem = assemble_hex_cube(
        4,
        4,
        4,
        1.0,
        &MaterialField::Uniform(Material::default()),
        Some(Face::XMin),
    )?;
    let cfg = HierarchyConfig::default();
    for alpha in [0.0, 1.0, 5.0] {
        let settings = DampingSettings {
            alpha,
            k: 5,
            ..DampingSettings::default()
        };
        let r = damping_experiment(&problem, &cfg, &settings)?;
        println!(
            "alpha {alpha}: omega {:.3} -> {:.3}, iterations {} -> {}, radius {:.3} -> {:.3}",
            r.omega,
            r.omega_alpha,
            r.baseline_iterations,
            r.updated_iterations,
            r.baseline_radius,
            r.updated_radius
        );
    }
    Ok(())
}

fn main() -> aspamg::Result<()> {
    run_example()
}
