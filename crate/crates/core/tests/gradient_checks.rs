//! Checks of the per-sample objective: gradient consistency with finite
//! differences, curvature bounds, and agreement of the gradient across levels.

use mlsg_core::fem::{prolong, FeField};
use mlsg_core::problem::Problem;
use mlsg_core::rand_field::{gl_grid, sample_xi, SampleVector};
use mlsg_core::rng::stream;
use rand::Rng;

fn random_field(problem: &Problem, level: usize, rng: &mut impl Rng) -> FeField {
    let mut f = problem.zero_control(level);
    for c in f.coeffs.iter_mut() {
        *c = rng.gen_range(-1.0..=1.0);
    }
    f
}

#[test]
fn gradient_matches_central_differences() {
    let problem = Problem::benchmark(8);
    let mut rng = stream(2024, &[99]);
    let eps = 1e-3;
    for trial in 0..20 {
        let level = rng.gen_range(0..=2usize);
        let s = sample_xi(&mut rng);
        let u = random_field(&problem, level, &mut rng);
        let delta = random_field(&problem, level, &mut rng);

        let grad = problem.grad_f(level, &s, &u).unwrap();
        let ops = problem.hierarchy.ops(level);
        let directional = ops.l2_inner(&grad.coeffs, &delta.coeffs);

        let mut up = u.clone();
        up.axpy(eps, &delta);
        let mut um = u.clone();
        um.axpy(-eps, &delta);
        let centered = (problem.eval_f(level, &s, &up).unwrap()
            - problem.eval_f(level, &s, &um).unwrap())
            / (2.0 * eps);

        let rel = (directional - centered).abs() / centered.abs().max(1e-12);
        assert!(
            rel <= 1e-6,
            "trial {trial} level {level}: directional {directional} vs centered {centered} (rel {rel})"
        );
    }
}

#[test]
fn gradient_is_lipschitz_with_the_analytic_constant() {
    // The gradient map is beta*I + S'S where S is the control-to-state
    // solve; ||S|| <= C_p^2 / a_min with the square's Poincare constant
    // C_p = 1/(pi sqrt(2)) and a_min = 1 a uniform coefficient floor.
    let problem = Problem::benchmark(8);
    let cp2 = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::PI);
    let lip = problem.data.beta + cp2 * cp2;
    let mut rng = stream(2024, &[100]);
    for _ in 0..10 {
        let level = rng.gen_range(0..=2usize);
        let s = sample_xi(&mut rng);
        let u = random_field(&problem, level, &mut rng);
        let v = random_field(&problem, level, &mut rng);

        let gu = problem.grad_f(level, &s, &u).unwrap();
        let gv = problem.grad_f(level, &s, &v).unwrap();
        let ops = problem.hierarchy.ops(level);

        let mut dg = gu.clone();
        dg.axpy(-1.0, &gv);
        let mut du = u.clone();
        du.axpy(-1.0, &v);
        let lhs = ops.l2_norm(&dg.coeffs);
        let rhs = lip * ops.l2_norm(&du.coeffs);
        assert!(lhs <= rhs * (1.0 + 1e-9), "{lhs} > {lip} * ||u - v|| = {rhs}");
    }
}

#[test]
fn gradient_is_strongly_monotone() {
    // <grad f(u) - grad f(v), u - v> >= beta ||u - v||^2: the curvature
    // never drops below the regularization weight.
    let problem = Problem::benchmark(8);
    let beta = problem.data.beta;
    let mut rng = stream(2024, &[101]);
    for _ in 0..10 {
        let level = rng.gen_range(0..=2usize);
        let s = sample_xi(&mut rng);
        let u = random_field(&problem, level, &mut rng);
        let v = random_field(&problem, level, &mut rng);

        let gu = problem.grad_f(level, &s, &u).unwrap();
        let gv = problem.grad_f(level, &s, &v).unwrap();
        let ops = problem.hierarchy.ops(level);

        let mut dg = gu.clone();
        dg.axpy(-1.0, &gv);
        let mut du = u.clone();
        du.axpy(-1.0, &v);
        let inner = ops.l2_inner(&dg.coeffs, &du.coeffs);
        let floor = beta * ops.l2_norm(&du.coeffs).powi(2);
        assert!(inner >= floor * (1.0 - 1e-9), "{inner} < {floor}");
    }
}

#[test]
fn level_differences_of_the_gradient_shrink_with_refinement() {
    // For a fixed sample the coupled difference g_l - P g_{l-1} decays like
    // h_l^2, so its norm should drop by roughly four per level.
    let problem = Problem::benchmark(8);
    let mut rng = stream(2024, &[102]);
    for _ in 0..3 {
        let s = sample_xi(&mut rng);
        let u = problem.zero_control(0);
        let mut norms = Vec::new();
        for level in 1..=3usize {
            let fine = problem.grad_f(level, &s, &u).unwrap();
            let coarse = problem.grad_f(level - 1, &s, &u).unwrap();
            let mut diff = fine;
            diff.axpy(-1.0, &prolong(&coarse, level).unwrap());
            norms.push(problem.hierarchy.ops(level).l2_norm(&diff.coeffs));
        }
        assert!(
            norms[0] > norms[1] && norms[1] > norms[2],
            "coupled differences should decrease: {norms:?}"
        );
        assert!(norms[1] / norms[2] > 2.0, "decay too slow: {norms:?}");
    }
}

#[test]
fn averaged_curvature_operator_is_symmetric_and_positive() {
    let problem = Problem::benchmark(8);
    let quad = gl_grid(2);
    let nodes: Vec<(SampleVector, f64)> = quad
        .nodes
        .iter()
        .zip(quad.weights.iter())
        .map(|(s, w)| (*s, *w))
        .collect();
    let mut rng = stream(2024, &[103]);
    let level = 1;
    let v = random_field(&problem, level, &mut rng);
    let w = random_field(&problem, level, &mut rng);

    let hv = problem.hessian_action(level, &nodes, &v).unwrap();
    let hw = problem.hessian_action(level, &nodes, &w).unwrap();
    let ops = problem.hierarchy.ops(level);

    let vhw = ops.l2_inner(&v.coeffs, &hw.coeffs);
    let whv = ops.l2_inner(&w.coeffs, &hv.coeffs);
    assert!(
        (vhw - whv).abs() <= 1e-10 * vhw.abs().max(1.0),
        "asymmetry: {vhw} vs {whv}"
    );

    let vhv = ops.l2_inner(&v.coeffs, &hv.coeffs);
    let floor = problem.data.beta * ops.l2_norm(&v.coeffs).powi(2);
    assert!(vhv >= floor * (1.0 - 1e-9), "curvature {vhv} below floor {floor}");
}
