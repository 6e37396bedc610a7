//! P1 assembly on the structured mesh: stiffness with a cell-centroid
//! coefficient and the consistent mass matrix.

use super::mesh::MeshLevel;
use super::sparse::SparseSpd;

/// Local stiffness of the lower triangle ((i,j), (i+1,j), (i+1,j+1)) with a
/// unit coefficient; mesh-size independent in two dimensions.
const K_LOWER: [[f64; 3]; 3] = [
    [0.5, -0.5, 0.0],
    [-0.5, 1.0, -0.5],
    [0.0, -0.5, 0.5],
];

/// Local stiffness of the upper triangle ((i,j), (i+1,j+1), (i,j+1)).
const K_UPPER: [[f64; 3]; 3] = [
    [0.5, 0.0, -0.5],
    [0.0, 0.5, -0.5],
    [-0.5, -0.5, 1.0],
];

/// Maps node index to interior unknown index (row-major interior order).
pub fn interior_map(mesh: &MeshLevel) -> Vec<Option<usize>> {
    let mut map = vec![None; mesh.num_nodes()];
    for (k, node) in mesh.interior_nodes().into_iter().enumerate() {
        map[node] = Some(k);
    }
    map
}

/// Stiffness matrix on the interior nodes, the diffusion coefficient sampled
/// once per cell at its centroid. Homogeneous Dirichlet conditions are
/// imposed by dropping boundary rows and columns.
pub fn assemble_stiffness<F: Fn(f64, f64) -> f64>(mesh: &MeshLevel, coeff: F) -> SparseSpd {
    let map = interior_map(mesh);
    let mut triplets = Vec::with_capacity(9 * 2 * mesh.n * mesh.n);
    for cell in mesh.cells() {
        let a = coeff(cell.centroid.0, cell.centroid.1);
        let k = if cell.upper { &K_UPPER } else { &K_LOWER };
        for r in 0..3 {
            if let Some(ri) = map[cell.nodes[r]] {
                for c in 0..3 {
                    if let Some(ci) = map[cell.nodes[c]] {
                        triplets.push((ri, ci, a * k[r][c]));
                    }
                }
            }
        }
    }
    SparseSpd::from_triplets(mesh.num_interior(), triplets)
}

/// Consistent mass matrix over all nodes, boundary included.
pub fn assemble_mass(mesh: &MeshLevel) -> SparseSpd {
    let scale = mesh.h() * mesh.h() / 24.0;
    let mut triplets = Vec::with_capacity(9 * 2 * mesh.n * mesh.n);
    for cell in mesh.cells() {
        for r in 0..3 {
            for c in 0..3 {
                let m = if r == c { 2.0 } else { 1.0 };
                triplets.push((cell.nodes[r], cell.nodes[c], scale * m));
            }
        }
    }
    SparseSpd::from_triplets(mesh.num_nodes(), triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::build_mesh;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_stiffness_has_five_point_stencil() {
        let mesh = build_mesh(0, 4);
        let a = assemble_stiffness(&mesh, |_, _| 1.0);
        let map = interior_map(&mesh);
        // interior node (2, 2) of the 4x4 mesh
        let center = map[mesh.node_index(2, 2)].unwrap();
        assert_abs_diff_eq!(a.get(center, center), 4.0, epsilon = 1e-14);
        for (i, j) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            let k = map[mesh.node_index(i, j)].unwrap();
            assert_abs_diff_eq!(a.get(center, k), -1.0, epsilon = 1e-14);
        }
        for (i, j) in [(1, 1), (3, 3), (1, 3), (3, 1)] {
            let k = map[mesh.node_index(i, j)].unwrap();
            assert_abs_diff_eq!(a.get(center, k), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn stiffness_scales_with_constant_coefficient() {
        let mesh = build_mesh(0, 3);
        let a1 = assemble_stiffness(&mesh, |_, _| 1.0);
        let a2 = assemble_stiffness(&mesh, |_, _| 2.5);
        assert_eq!(a1.col_idx, a2.col_idx);
        for (u, v) in a1.values.iter().zip(&a2.values) {
            assert_abs_diff_eq!(2.5 * u, *v, epsilon = 1e-14);
        }
    }

    #[test]
    fn stiffness_is_symmetric() {
        let mesh = build_mesh(0, 4);
        let a = assemble_stiffness(&mesh, |x, y| 1.0 + x + 2.0 * y * y);
        for r in 0..a.n {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                let c = a.col_idx[k];
                assert_abs_diff_eq!(a.values[k], a.get(c, r), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn mass_row_sums_and_diagonal() {
        let mesh = build_mesh(0, 4);
        let m = assemble_mass(&mesh);
        let h2 = mesh.h() * mesh.h();
        let center = mesh.node_index(2, 2);
        let row_sum: f64 = (m.row_ptr[center]..m.row_ptr[center + 1]).map(|k| m.values[k]).sum();
        assert_abs_diff_eq!(row_sum, h2, epsilon = 1e-15);
        assert_abs_diff_eq!(m.get(center, center), h2 / 2.0, epsilon = 1e-15);
        let total: f64 = m.values.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }
}
