//! Mesh convergence of the P1 solver against closed-form references.

use mlsg_core::fem::{l2_error_against, Hierarchy};
use std::f64::consts::PI;

/// Solves -div(grad y) = 2 pi^2 sin(pi x) sin(pi y) (exact solution
/// sin(pi x) sin(pi y)) and returns the quadrature L2 error at `level`.
fn manufactured_error(hier: &Hierarchy, level: usize) -> f64 {
    let ops = hier.ops(level);
    let solver = ops.factorize(|_, _| 1.0);
    let rhs = ops.interpolate(|x, y| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin());
    let load = ops.mass_apply(&rhs);
    let y = ops.solve_dirichlet(&solver, &load).unwrap();
    l2_error_against(&ops.mesh, &y, |x, yy| (PI * x).sin() * (PI * yy).sin())
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let hier = Hierarchy::new(8);
    let errors: Vec<f64> = (0..=2).map(|level| manufactured_error(&hier, level)).collect();
    let r01 = errors[0] / errors[1];
    let r12 = errors[1] / errors[2];
    // halving h divides the L2 error by about four
    assert!((3.4..=4.6).contains(&r01), "ratio levels 0/1 = {r01}, errors {errors:?}");
    assert!((3.4..=4.6).contains(&r12), "ratio levels 1/2 = {r12}, errors {errors:?}");
}

#[test]
fn unit_source_center_value_matches_the_series_reference() {
    // -lap y = 1 with zero boundary values: the Fourier series gives
    // y(1/2, 1/2) = 0.07367135126666945
    let hier = Hierarchy::new(8);
    let ops = hier.ops(2);
    let solver = ops.factorize(|_, _| 1.0);
    let load = ops.mass_apply(&vec![1.0; ops.mesh.num_nodes()]);
    let y = ops.solve_dirichlet(&solver, &load).unwrap();
    let center = y[ops.mesh.node_index(16, 16)];
    let diff = (center - 0.07367135126666945).abs();
    assert!(diff < 1e-4, "center value {center}, off by {diff}");
}
