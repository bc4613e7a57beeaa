// Writes a generated problem to Matrix Market plus a coordinate file,
// reads both back and checks nothing changed.

use aspamg::fem::{assemble_hex_cube, Face, Material, MaterialField};
use aspamg::io::{read_coordinates, read_matrix_market, write_coordinates, write_matrix_market};

pub fn run_example() -> aspamg::Result<()> {
    let problem = assemble_hex_cube(
        3,
        2,
        2,
        0.5,
        &MaterialField::Uniform(Material::default()),
        Some(Face::XMin),
    )?;
    let dir = std::env::temp_dir().join(format!("aspamg-mm-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| aspamg::Error::InvalidArgument(e.to_string()))?;
    let mtx = dir.join("matrix.mtx");
    let xyz = dir.join("coords.xyz");

    let coords = problem.free_coordinates();
    write_matrix_market(&mtx, &problem.stiffness)?;
    write_coordinates(&xyz, &coords)?;

    let a = read_matrix_market(&mtx)?;
    let c = read_coordinates(&xyz, coords.len())?;
    println!(
        "{}: {} rows, {} nonzeros, symmetric = {}",
        mtx.display(),
        a.n_rows(),
        a.nnz(),
        a.is_symmetric()
    );
    let same = a == problem.stiffness && c == coords;
    println!("bit-exact round trip: {same}");
    let _ = std::fs::remove_dir_all(&dir);
    if !same {
        return Err(aspamg::Error::InvalidArgument("round trip changed the data".into()));
    }
    Ok(())
}

fn main() -> aspamg::Result<()> {
    run_example()
}
