//! Behavior of the stochastic-gradient runners: agreement with hand-rolled
//! descent loops, the baseline equivalence of the capped randomized run, and
//! stability on a stiffer regularization.

use mlsg_core::estimator::{mlmc_gradient, XiSource};
use mlsg_core::fem::to_level;
use mlsg_core::optimize::{run_mlsg, run_rm_baseline, run_rmlsg, RunOptions};
use mlsg_core::problem::{Problem, ProblemData};
use mlsg_core::rand_field::{sample_xi, SampleVector};
use mlsg_core::rng::stream;
use mlsg_core::schedule::AlgoParams;

#[test]
fn pinned_sample_run_replays_a_manual_descent_loop_bitwise() {
    let problem = Problem::benchmark(8);
    let params = AlgoParams::mlsg_default();
    let s = sample_xi(&mut stream(77, &[0]));

    let mut opts = RunOptions::new(30, 123);
    opts.pinned_xi = Some(s);
    opts.forced_level = Some(1);
    opts.forced_samples = Some(1);
    opts.record_controls = true;
    let trace = run_mlsg(&problem, &params, &opts).unwrap();

    let xi = XiSource::Pinned(s);
    let mut u = problem.zero_control(1);
    let controls = trace.controls.as_ref().unwrap();
    for j in 1..=30u64 {
        assert_eq!(
            controls[(j - 1) as usize].coeffs,
            u.coeffs,
            "recorded iterate {j} diverges from the manual loop"
        );
        let out = mlmc_gradient(&problem, &u, 1, &[1, 1], &xi, params.cost_exp()).unwrap();
        u = to_level(&u, 1);
        u.axpy(-params.step_size(j), &out.grad);
    }
    assert_eq!(trace.final_control.coeffs, u.coeffs);
}

#[test]
fn forced_constant_step_tracks_plain_gradient_descent() {
    // With one shared sample the telescoped estimate equals the plain
    // gradient up to rounding, so a contractive constant step keeps the two
    // descent sequences together to near machine precision.
    let problem = Problem::benchmark(8);
    let params = AlgoParams::mlsg_default();
    let s = sample_xi(&mut stream(77, &[1]));

    let mut opts = RunOptions::new(30, 123);
    opts.pinned_xi = Some(s);
    opts.forced_level = Some(1);
    opts.forced_samples = Some(1);
    opts.forced_step = Some(100.0);
    let trace = run_mlsg(&problem, &params, &opts).unwrap();

    let mut u = problem.zero_control(1);
    for _ in 0..30 {
        let grad = problem.grad_f(1, &s, &u).unwrap();
        u.axpy(-100.0, &grad);
    }
    let max_diff = trace
        .final_control
        .coeffs
        .iter()
        .zip(u.coeffs.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(max_diff <= 1e-12, "runner drifted {max_diff} from plain descent");
}

#[test]
fn baseline_descent_converges_on_a_frozen_sample() {
    // Pinning the coefficient at its midpoint makes the baseline a
    // deterministic descent on one quadratic; the scheduled steps then drive
    // the gradient to noise level well within two thousand iterations.
    let problem = Problem::benchmark(8);
    let params = AlgoParams::rmlsg_default();
    let mut opts = RunOptions::new(2000, 55);
    opts.pinned_xi = Some(SampleVector::ZERO);
    let trace = run_rm_baseline(&problem, &params, 1, &opts).unwrap();

    let grad = problem.grad_f(1, &SampleVector::ZERO, &trace.final_control).unwrap();
    let norm = problem.hierarchy.ops(1).l2_norm(&grad.coeffs);
    assert!(norm <= 1e-6, "gradient norm after 2000 steps: {norm}");
}

#[test]
fn randomized_run_capped_at_level_zero_is_the_level_zero_baseline() {
    let problem = Problem::benchmark(8);
    let params = AlgoParams::rmlsg_default();

    let mut opts = RunOptions::new(50, 321);
    opts.repetition = 2;
    opts.record_controls = true;
    let mut capped_opts = opts.clone();
    capped_opts.forced_level = Some(0);

    let capped = run_rmlsg(&problem, &params, &capped_opts).unwrap();
    let baseline = run_rm_baseline(&problem, &params, 0, &opts).unwrap();

    assert_eq!(capped.final_control.coeffs, baseline.final_control.coeffs);
    let capped_controls = capped.controls.as_ref().unwrap();
    let baseline_controls = baseline.controls.as_ref().unwrap();
    for (a, b) in capped_controls.iter().zip(baseline_controls.iter()) {
        assert_eq!(a.coeffs, b.coeffs);
    }
    for (a, b) in capped.records.iter().zip(baseline.records.iter()) {
        assert_eq!(a.cost, b.cost);
        assert_eq!(a.sampled_level, Some(0));
        assert_eq!(b.sampled_level, Some(0));
    }
}

#[test]
fn stiff_regularization_stays_bounded_under_the_schedules() {
    let mut data = ProblemData::benchmark();
    data.beta = 1.0;
    let problem = Problem::new(data, 8);

    let mut params = AlgoParams::mlsg_default();
    params.beta = 1.0;
    params.ell = 2.0;
    params.tau0 = 2.0;
    params.sigma0_sq = ((2.0 * params.tau0 + 2.0 / params.ell) / (2.0 * params.tau0))
        * params.eps0_sq;
    params.validate().unwrap();

    let opts = RunOptions::new(40, 9);
    let trace = run_mlsg(&problem, &params, &opts).unwrap();
    let ops = problem.hierarchy.ops(trace.final_control.level);
    let norm = ops.l2_norm(&trace.final_control.coeffs);
    assert!(norm.is_finite() && norm <= 1.0, "iterates escaped: final norm {norm}");
}
