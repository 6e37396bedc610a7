//! Triangle quadrature exact through degree five, plus pointwise evaluation
//! of P1 fields — the measuring tools for convergence studies.

use super::mesh::MeshLevel;

/// Barycentric points and weights of a seven-point rule exact through
/// degree five. Weights are normalized to the reference area, so an
/// integral over a triangle is its area times the weighted sum.
pub const DEGREE5: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([0.059715871789770, 0.470142064105115, 0.470142064105115], 0.132394152788506),
    ([0.470142064105115, 0.059715871789770, 0.470142064105115], 0.132394152788506),
    ([0.470142064105115, 0.470142064105115, 0.059715871789770], 0.132394152788506),
    ([0.797426985353087, 0.101286507323456, 0.101286507323456], 0.125939180544827),
    ([0.101286507323456, 0.797426985353087, 0.101286507323456], 0.125939180544827),
    ([0.101286507323456, 0.101286507323456, 0.797426985353087], 0.125939180544827),
];

/// L2 distance between a nodal P1 field and a reference function, by the
/// degree-five rule on every cell.
pub fn l2_error_against<F: Fn(f64, f64) -> f64>(
    mesh: &MeshLevel,
    values: &[f64],
    exact: F,
) -> f64 {
    assert_eq!(values.len(), mesh.num_nodes());
    let area = 0.5 * mesh.h() * mesh.h();
    let mut total = 0.0;
    for cell in mesh.cells() {
        let [a, b, c] = cell.nodes;
        let (xa, ya) = mesh.node_xy(a);
        let (xb, yb) = mesh.node_xy(b);
        let (xc, yc) = mesh.node_xy(c);
        for (bary, w) in DEGREE5 {
            let x = bary[0] * xa + bary[1] * xb + bary[2] * xc;
            let y = bary[0] * ya + bary[1] * yb + bary[2] * yc;
            let fe = bary[0] * values[a] + bary[1] * values[b] + bary[2] * values[c];
            let d = fe - exact(x, y);
            total += area * w * d * d;
        }
    }
    total.sqrt()
}

/// Evaluates a nodal P1 field at an arbitrary point of the closed unit
/// square, resolving the triangle split along the bottom-left to top-right
/// diagonal of each mesh square.
pub fn eval_p1(mesh: &MeshLevel, values: &[f64], x: f64, y: f64) -> f64 {
    assert_eq!(values.len(), mesh.num_nodes());
    assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y), "point ({x}, {y}) outside");
    let h = mesh.h();
    let i = ((x / h).floor() as usize).min(mesh.n - 1);
    let j = ((y / h).floor() as usize).min(mesh.n - 1);
    let dx = x / h - i as f64;
    let dy = y / h - j as f64;
    let v = |di: usize, dj: usize| values[mesh.node_index(i + di, j + dj)];
    if dy <= dx {
        // lower triangle: (i, j), (i+1, j), (i+1, j+1)
        (1.0 - dx) * v(0, 0) + (dx - dy) * v(1, 0) + dy * v(1, 1)
    } else {
        // upper triangle: (i, j), (i+1, j+1), (i, j+1)
        (1.0 - dy) * v(0, 0) + dx * v(1, 1) + (dy - dx) * v(0, 1)
    }
}
