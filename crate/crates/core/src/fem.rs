//! Structured hexahedral linear-elasticity problems, rigid body modes, and
//! the tetrahedral radius-ratio quality metric.

use serde::{Deserialize, Serialize};

use crate::dense::{orthonormalize, DenseBlock, OrthoOutcome, ORTHO_DROP_TOL};
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub young_modulus: f64,
    pub poisson_ratio: f64,
}

impl Material {
    pub fn new(young_modulus: f64, poisson_ratio: f64) -> Result<Self> {
        let m = Self {
            young_modulus,
            poisson_ratio,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.young_modulus > 0.0) || !self.young_modulus.is_finite() {
            return Err(Error::InvalidMaterial(format!(
                "Young modulus must be positive, got {}",
                self.young_modulus
            )));
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(Error::InvalidMaterial(format!(
                "Poisson ratio must lie in (-1, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        Ok(())
    }

    /// Isotropic constitutive matrix in Voigt order xx, yy, zz, xy, yz, zx
    /// with engineering shear strains.
    fn constitutive(&self) -> [[f64; 6]; 6] {
        let (e, nu) = (self.young_modulus, self.poisson_ratio);
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        let mut d = [[0.0; 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                d[i][j] = lambda;
            }
            d[i][i] = lambda + 2.0 * mu;
            d[i + 3][i + 3] = mu;
        }
        d
    }
}

impl Default for Material {
    fn default() -> Self {
        Self {
            young_modulus: 1.0,
            poisson_ratio: 0.3,
        }
    }
}

/// How materials are distributed over the elements.
#[derive(Debug, Clone, PartialEq)]
pub enum MaterialField {
    Uniform(Material),
    /// Elements whose centre lies in the lower half of the x range get
    /// `left`, the rest `right`.
    SplitX { left: Material, right: Material },
    PerElement(Vec<Material>),
}

impl MaterialField {
    fn material_for(&self, elem: usize, centre_x: f64, half_x: f64) -> Material {
        match self {
            MaterialField::Uniform(m) => *m,
            MaterialField::SplitX { left, right } => {
                if centre_x < half_x {
                    *left
                } else {
                    *right
                }
            }
            MaterialField::PerElement(v) => v[elem],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Face {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

#[derive(Debug, Clone)]
pub struct GeneratedProblem {
    /// Stiffness restricted to the free DOFs.
    pub stiffness: SparseMatrix,
    /// All node coordinates, one row per node.
    pub coordinates: Vec<[f64; 3]>,
    /// DOFs removed by the clamp, in the numbering 3·node + component.
    pub constrained_dofs: Vec<usize>,
    /// Kept DOFs, ascending; row k of `stiffness` is DOF `free_dofs[k]`.
    pub free_dofs: Vec<usize>,
    /// Eight node indices per element.
    pub elements: Vec<[usize; 8]>,
}

impl GeneratedProblem {
    pub fn n_nodes(&self) -> usize {
        self.coordinates.len()
    }

    /// Coordinates of the nodes whose DOFs survived the clamp. Clamping is
    /// node-wise, so these line up with the rows of `stiffness` three at a
    /// time.
    pub fn free_coordinates(&self) -> Vec<[f64; 3]> {
        self.free_dofs
            .iter()
            .filter(|&&d| d % 3 == 0)
            .map(|&d| self.coordinates[d / 3])
            .collect()
    }
}

/// Assembles trilinear hexahedra on an nx × ny × nz grid with 2×2×2 Gauss
/// integration and 3 DOFs per node. A clamped face removes the rows and
/// columns of all its nodes.
pub fn assemble_hex_cube(
    nx: usize,
    ny: usize,
    nz: usize,
    spacing: f64,
    materials: &MaterialField,
    clamped_face: Option<Face>,
) -> Result<GeneratedProblem> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::InvalidArgument(
            "element counts must be at least 1".into(),
        ));
    }
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument("spacing must be positive".into()));
    }
    let n_elem = nx * ny * nz;
    match materials {
        MaterialField::Uniform(m) => m.validate()?,
        MaterialField::SplitX { left, right } => {
            left.validate()?;
            right.validate()?;
        }
        MaterialField::PerElement(v) => {
            if v.len() != n_elem {
                return Err(Error::InvalidMaterial(format!(
                    "{} per-element materials for {} elements",
                    v.len(),
                    n_elem
                )));
            }
            for m in v {
                m.validate()?;
            }
        }
    }

    let (px, py) = (nx + 1, ny + 1);
    let node = |i: usize, j: usize, k: usize| i + px * (j + py * k);
    let mut coordinates = Vec::with_capacity(px * py * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                coordinates.push([i as f64 * spacing, j as f64 * spacing, k as f64 * spacing]);
            }
        }
    }
    let n_nodes = coordinates.len();

    let mut elements = Vec::with_capacity(n_elem);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                elements.push([
                    node(i, j, k),
                    node(i + 1, j, k),
                    node(i + 1, j + 1, k),
                    node(i, j + 1, k),
                    node(i, j, k + 1),
                    node(i + 1, j, k + 1),
                    node(i + 1, j + 1, k + 1),
                    node(i, j + 1, k + 1),
                ]);
            }
        }
    }

    let half_x = 0.5 * nx as f64 * spacing;
    let mut triplets = Vec::with_capacity(n_elem * 24 * 24);
    for (e, conn) in elements.iter().enumerate() {
        let xyz: [[f64; 3]; 8] = std::array::from_fn(|a| coordinates[conn[a]]);
        let centre_x = xyz.iter().map(|p| p[0]).sum::<f64>() / 8.0;
        let mat = materials.material_for(e, centre_x, half_x);
        let ke = hex8_stiffness(&xyz, &mat)?;
        for a in 0..24 {
            let ga = 3 * conn[a / 3] + a % 3;
            for b in 0..24 {
                let gb = 3 * conn[b / 3] + b % 3;
                triplets.push((ga, gb, ke[a][b]));
            }
        }
    }
    let n_dof = 3 * n_nodes;
    let full = SparseMatrix::from_triplets(n_dof, n_dof, &triplets)?.into_symmetric()?;

    let mut clamped = vec![false; n_nodes];
    if let Some(face) = clamped_face {
        let (lx, ly, lz) = (
            nx as f64 * spacing,
            ny as f64 * spacing,
            nz as f64 * spacing,
        );
        for (n, p) in coordinates.iter().enumerate() {
            clamped[n] = match face {
                Face::XMin => p[0] == 0.0,
                Face::XMax => p[0] == lx,
                Face::YMin => p[1] == 0.0,
                Face::YMax => p[1] == ly,
                Face::ZMin => p[2] == 0.0,
                Face::ZMax => p[2] == lz,
            };
        }
    }
    let constrained_dofs: Vec<usize> = (0..n_dof).filter(|d| clamped[d / 3]).collect();
    let free_dofs: Vec<usize> = (0..n_dof).filter(|d| !clamped[d / 3]).collect();
    let stiffness = if constrained_dofs.is_empty() {
        full
    } else {
        full.submatrix(&free_dofs)?
    };

    Ok(GeneratedProblem {
        stiffness,
        coordinates,
        constrained_dofs,
        free_dofs,
        elements,
    })
}

const GAUSS_2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
const HEX_CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// 24×24 stiffness of one trilinear hexahedron, bit-exactly symmetric.
pub fn hex8_stiffness(xyz: &[[f64; 3]; 8], mat: &Material) -> Result<[[f64; 24]; 24]> {
    let d = mat.constitutive();
    let mut ke = [[0.0; 24]; 24];
    for &xi in &GAUSS_2 {
        for &eta in &GAUSS_2 {
            for &zeta in &GAUSS_2 {
                // derivatives of shape functions in natural coordinates
                let mut dn = [[0.0; 3]; 8];
                for (a, c) in HEX_CORNERS.iter().enumerate() {
                    let (fx, fy, fz) = (1.0 + xi * c[0], 1.0 + eta * c[1], 1.0 + zeta * c[2]);
                    dn[a] = [
                        0.125 * c[0] * fy * fz,
                        0.125 * c[1] * fx * fz,
                        0.125 * c[2] * fx * fy,
                    ];
                }
                let mut jac = [[0.0; 3]; 3];
                for a in 0..8 {
                    for r in 0..3 {
                        for s in 0..3 {
                            jac[r][s] += dn[a][r] * xyz[a][s];
                        }
                    }
                }
                let (jinv, det) = invert3(&jac);
                if !(det > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "element has non-positive Jacobian determinant {det:e}"
                    )));
                }
                let mut b = [[0.0; 24]; 6];
                for a in 0..8 {
                    let g: [f64; 3] = std::array::from_fn(|r| {
                        jinv[r][0] * dn[a][0] + jinv[r][1] * dn[a][1] + jinv[r][2] * dn[a][2]
                    });
                    let c = 3 * a;
                    b[0][c] = g[0];
                    b[1][c + 1] = g[1];
                    b[2][c + 2] = g[2];
                    b[3][c] = g[1];
                    b[3][c + 1] = g[0];
                    b[4][c + 1] = g[2];
                    b[4][c + 2] = g[1];
                    b[5][c] = g[2];
                    b[5][c + 2] = g[0];
                }
                let mut db = [[0.0; 24]; 6];
                for r in 0..6 {
                    for col in 0..24 {
                        db[r][col] = (0..6).map(|k| d[r][k] * b[k][col]).sum();
                    }
                }
                for p in 0..24 {
                    for q in p..24 {
                        let v: f64 = (0..6).map(|k| b[k][p] * db[k][q]).sum();
                        ke[p][q] += v * det;
                    }
                }
            }
        }
    }
    for p in 0..24 {
        for q in 0..p {
            ke[p][q] = ke[q][p];
        }
    }
    Ok(ke)
}

/// Inverse of the Jacobian, returned so that `inv[r][s]` maps natural to
/// physical derivatives: ∂N/∂x_r = Σ_s inv[r][s] ∂N/∂ξ_s.
fn invert3(j: &[[f64; 3]; 3]) -> ([[f64; 3]; 3], f64) {
    let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
        - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
    let cof = |r: usize, c: usize| {
        let rs: Vec<usize> = (0..3).filter(|&x| x != r).collect();
        let cs: Vec<usize> = (0..3).filter(|&x| x != c).collect();
        let m = j[rs[0]][cs[0]] * j[rs[1]][cs[1]] - j[rs[0]][cs[1]] * j[rs[1]][cs[0]];
        if (r + c) % 2 == 0 {
            m
        } else {
            -m
        }
    };
    // J_rs = ∂x_s/∂ξ_r, so ∂N/∂x = J⁻¹ ∂N/∂ξ with (J⁻¹)_rs = cof(s, r)/det
    let inv = std::array::from_fn(|r| std::array::from_fn(|s| cof(s, r) / det));
    (inv, det)
}

/// Rigid body modes with columns: x, y, z translations, then rotations about
/// the x, y and z axes through the coordinate centroid. Not normalized.
pub fn rigid_body_modes_raw(coordinates: &[[f64; 3]]) -> DenseBlock {
    let n = coordinates.len();
    let mut centroid = [0.0; 3];
    for p in coordinates {
        for k in 0..3 {
            centroid[k] += p[k];
        }
    }
    if n > 0 {
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }
    }
    let mut block = DenseBlock::zeros(3 * n, 6);
    for (a, p) in coordinates.iter().enumerate() {
        let (x, y, z) = (p[0] - centroid[0], p[1] - centroid[1], p[2] - centroid[2]);
        for k in 0..3 {
            block.set(3 * a + k, k, 1.0);
        }
        // rotation about x: (0, -z, y)
        block.set(3 * a + 1, 3, -z);
        block.set(3 * a + 2, 3, y);
        // rotation about y: (z, 0, -x)
        block.set(3 * a, 4, z);
        block.set(3 * a + 2, 4, -x);
        // rotation about z: (-y, x, 0)
        block.set(3 * a, 5, -y);
        block.set(3 * a + 1, 5, x);
    }
    block
}

#[derive(Debug, Clone)]
pub struct RigidBodyModes {
    /// Orthonormal columns spanning the rigid motions.
    pub modes: DenseBlock,
    /// Raw column indices that turned out linearly dependent.
    pub dropped: Vec<usize>,
}

impl RigidBodyModes {
    pub fn is_rank_deficient(&self) -> bool {
        !self.dropped.is_empty()
    }
}

/// Orthonormalized rigid body modes (3n × 6 unless rank deficient).
pub fn rigid_body_modes(coordinates: &[[f64; 3]]) -> RigidBodyModes {
    let mut modes = rigid_body_modes_raw(coordinates);
    let OrthoOutcome { dependent, .. } = orthonormalize(&mut modes, ORTHO_DROP_TOL);
    RigidBodyModes {
        modes,
        dropped: dependent,
    }
}

/// Radius-ratio quality of a tetrahedron, 3·r/R: 1 for the regular
/// tetrahedron, 0 for degenerate input.
pub fn mesh_quality_tet(v: &[[f64; 3]; 4]) -> f64 {
    let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let cross = |a: [f64; 3], b: [f64; 3]| {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let dotp = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let norm = |a: [f64; 3]| dotp(a, a).sqrt();

    if v.iter().flatten().any(|c| !c.is_finite()) {
        return 0.0;
    }
    let u = sub(v[1], v[0]);
    let w = sub(v[2], v[0]);
    let t = sub(v[3], v[0]);
    let triple = dotp(u, cross(w, t));
    let mut longest: f64 = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            longest = longest.max(norm(sub(v[i], v[j])));
        }
    }
    if longest == 0.0 || triple.abs() <= 1e-12 * longest.powi(3) {
        return 0.0;
    }
    let volume = triple.abs() / 6.0;
    let faces = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];
    let area: f64 = faces
        .iter()
        .map(|&(a, b, c)| 0.5 * norm(cross(sub(v[b], v[a]), sub(v[c], v[a]))))
        .sum();
    let inradius = 3.0 * volume / area;
    // circumcentre relative to v0
    let num = {
        let (uu, ww, tt) = (dotp(u, u), dotp(w, w), dotp(t, t));
        let a = cross(w, t);
        let b = cross(t, u);
        let c = cross(u, w);
        [
            uu * a[0] + ww * b[0] + tt * c[0],
            uu * a[1] + ww * b[1] + tt * c[1],
            uu * a[2] + ww * b[2] + tt * c[2],
        ]
    };
    let circumradius = norm(num) / (2.0 * triple.abs());
    (3.0 * inradius / circumradius).clamp(0.0, 1.0)
}
