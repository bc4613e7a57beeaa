use aspamg::error::MatrixMarketError;
use aspamg::fem::{assemble_hex_cube, Face, Material, MaterialField};
use aspamg::io::{
    count_data_lines, read_coordinates, read_matrix_market, write_coordinates, write_matrix_market,
};
use aspamg::{Error, SparseMatrix};

#[test]
fn stiffness_roundtrip_through_files() {
    let p = assemble_hex_cube(2, 2, 3, 0.7, &MaterialField::Uniform(Material::default()), Some(Face::ZMin))
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("k.mtx");
    let xyz = dir.path().join("k.xyz");
    write_matrix_market(&mtx, &p.stiffness).unwrap();
    let coords = p.free_coordinates();
    write_coordinates(&xyz, &coords).unwrap();

    let a = read_matrix_market(&mtx).unwrap();
    assert_eq!(a, p.stiffness);
    assert!(a.is_symmetric());
    assert_eq!(count_data_lines(&xyz).unwrap(), coords.len());
    assert_eq!(read_coordinates(&xyz, coords.len()).unwrap(), coords);
}

#[test]
fn general_matrix_stays_general() {
    let a = SparseMatrix::from_triplets(2, 3, &[(0, 2, 1.5), (1, 0, -0.25)]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("g.mtx");
    write_matrix_market(&f, &a).unwrap();
    let text = std::fs::read_to_string(&f).unwrap();
    assert!(text.starts_with("%%MatrixMarket matrix coordinate real general"));
    assert_eq!(read_matrix_market(&f).unwrap(), a);
}

#[test]
fn errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.mtx");
    std::fs::write(&f, "%%MatrixMarket matrix coordinate real general\n2 2 1\n5 1 1.0\n").unwrap();
    match read_matrix_market(&f) {
        Err(Error::MatrixMarket { path, source }) => {
            assert_eq!(path, f);
            assert!(matches!(source, MatrixMarketError::IndexOutOfBounds { line: 3, .. }));
        }
        other => panic!("unexpected {other:?}"),
    }
    let c = dir.path().join("c.xyz");
    std::fs::write(&c, "0 0 0\n1 1\n").unwrap();
    assert!(matches!(read_coordinates(&c, 2), Err(Error::Coordinates { line: 2, .. })));
    std::fs::write(&c, "0 0 0\n").unwrap();
    assert!(matches!(read_coordinates(&c, 2), Err(Error::Coordinates { .. })));
}
