//! Stochastic gradient runners driven by the iteration schedules, a
//! deterministic steepest-descent reference solver with exact line search,
//! and plain-text persistence for reference controls.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::estimator::{mlmc_gradient, rmlmc_gradient, XiSource};
use crate::fem::{to_level, FeField};
use crate::par;
use crate::problem::Problem;
use crate::rand_field::{gl_grid, SampleVector};
use crate::rng::{purpose, StreamCtx};
use crate::schedule::AlgoParams;

/// One iteration of a run, recorded before the control update: `error` is
/// the distance of the pre-update iterate to the reference, while `cost` and
/// `expected_cost` are cumulative through this iteration inclusive.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub j: u64,
    pub schedule_level: usize,
    pub control_level: usize,
    pub cost: f64,
    pub expected_cost: f64,
    pub sampled_level: Option<usize>,
    pub error: Option<f64>,
}

#[derive(Debug)]
pub struct RunTrace {
    pub records: Vec<RunRecord>,
    pub final_control: FeField,
    pub seed: u64,
    pub repetition: u64,
    /// Pre-update iterates, kept only when requested.
    pub controls: Option<Vec<FeField>>,
}

/// Knobs for one run. The `forced_*` fields pin schedule decisions for
/// coupling experiments and tests; `None` means follow the schedule.
#[derive(Clone)]
pub struct RunOptions {
    pub iterations: u64,
    pub seed: u64,
    pub repetition: u64,
    pub reference: Option<FeField>,
    pub pinned_xi: Option<SampleVector>,
    pub forced_level: Option<usize>,
    pub forced_samples: Option<u64>,
    pub forced_step: Option<f64>,
    pub record_controls: bool,
}

impl RunOptions {
    pub fn new(iterations: u64, seed: u64) -> Self {
        RunOptions {
            iterations,
            seed,
            repetition: 0,
            reference: None,
            pinned_xi: None,
            forced_level: None,
            forced_samples: None,
            forced_step: None,
            record_controls: false,
        }
    }
}

fn xi_source(opts: &RunOptions, ctx: StreamCtx) -> XiSource {
    match opts.pinned_xi {
        Some(s) => XiSource::Pinned(s),
        None => XiSource::Stream(ctx),
    }
}

fn check_meshes_match(problem: &Problem, params: &AlgoParams) -> Result<()> {
    params.validate()?;
    if problem.hierarchy.n0() != params.n0() {
        return Err(CoreError::InvalidParam(format!(
            "schedule constants are calibrated to a coarsest mesh of {} squares per side, \
             but the problem hierarchy starts at {}",
            params.n0(),
            problem.hierarchy.n0()
        )));
    }
    if problem.data.beta != params.beta {
        return Err(CoreError::InvalidParam(format!(
            "the schedule assumes a regularization weight of {} but the problem uses {}",
            params.beta, problem.data.beta
        )));
    }
    Ok(())
}

/// Multilevel stochastic gradient run: per iteration, the level cap and the
/// per-level sample counts come from the schedules, and the control is
/// prolonged to the cap's mesh before the update.
pub fn run_mlsg(problem: &Problem, params: &AlgoParams, opts: &RunOptions) -> Result<RunTrace> {
    check_meshes_match(problem, params)?;
    let init_level = opts.forced_level.unwrap_or_else(|| params.mlsg_levels(1));
    let mut u = problem.zero_control(init_level);
    let mut records = Vec::with_capacity(opts.iterations as usize);
    let mut controls = opts.record_controls.then(Vec::new);
    let mut cost = 0.0;
    for j in 1..=opts.iterations {
        let level = opts.forced_level.unwrap_or_else(|| params.mlsg_levels(j));
        let n = match opts.forced_samples {
            Some(c) => vec![c; level + 1],
            None => params.mlsg_samples(j, level),
        };
        let ctx = StreamCtx { seed: opts.seed, repetition: opts.repetition, iteration: j };
        let out = mlmc_gradient(problem, &u, level, &n, &xi_source(opts, ctx), params.cost_exp())?;
        cost += params.mlsg_cost_increment(&n);
        records.push(RunRecord {
            j,
            schedule_level: level,
            control_level: u.level,
            cost,
            expected_cost: cost,
            sampled_level: None,
            error: opts.reference.as_ref().map(|r| error_vs_reference(&u, r, problem)),
        });
        if let Some(list) = controls.as_mut() {
            list.push(u.clone());
        }
        let tau = opts.forced_step.unwrap_or_else(|| params.step_size(j));
        u = to_level(&u, level);
        u.axpy(-tau, &out.grad);
    }
    Ok(RunTrace {
        records,
        final_control: u,
        seed: opts.seed,
        repetition: opts.repetition,
        controls,
    })
}

/// Randomized multilevel stochastic gradient run: one coupled sample per
/// iteration at a level drawn from the capped geometric distribution.
pub fn run_rmlsg(problem: &Problem, params: &AlgoParams, opts: &RunOptions) -> Result<RunTrace> {
    check_meshes_match(problem, params)?;
    let init_level = opts.forced_level.unwrap_or_else(|| params.rmlsg_levels(1));
    let mut u = problem.zero_control(init_level);
    let mut records = Vec::with_capacity(opts.iterations as usize);
    let mut controls = opts.record_controls.then(Vec::new);
    let mut cost = 0.0;
    let mut expected_cost = 0.0;
    for j in 1..=opts.iterations {
        let level = opts.forced_level.unwrap_or_else(|| params.rmlsg_levels(j));
        let pmf = params.level_pmf(level);
        let ctx = StreamCtx { seed: opts.seed, repetition: opts.repetition, iteration: j };
        let out =
            rmlmc_gradient(problem, &u, level, &pmf, &ctx, &xi_source(opts, ctx), params.cost_exp())?;
        let drawn = out.sampled_level.expect("randomized estimator reports its level");
        cost += params.rmlsg_cost_increment(drawn);
        expected_cost += params.rmlsg_expected_cost_increment(level);
        records.push(RunRecord {
            j,
            schedule_level: level,
            control_level: u.level,
            cost,
            expected_cost,
            sampled_level: Some(drawn),
            error: opts.reference.as_ref().map(|r| error_vs_reference(&u, r, problem)),
        });
        if let Some(list) = controls.as_mut() {
            list.push(u.clone());
        }
        let tau = opts.forced_step.unwrap_or_else(|| params.step_size(j));
        u = to_level(&u, level);
        u.axpy(-tau, &out.grad);
    }
    Ok(RunTrace {
        records,
        final_control: u,
        seed: opts.seed,
        repetition: opts.repetition,
        controls,
    })
}

/// Single-level stochastic gradient baseline at a fixed mesh level, sharing
/// its parameter stream with the randomized run so that capping the latter
/// at level zero reproduces this baseline exactly.
pub fn run_rm_baseline(
    problem: &Problem,
    params: &AlgoParams,
    level: usize,
    opts: &RunOptions,
) -> Result<RunTrace> {
    check_meshes_match(problem, params)?;
    let mut u = problem.zero_control(level);
    let mut records = Vec::with_capacity(opts.iterations as usize);
    let mut controls = opts.record_controls.then(Vec::new);
    let mut cost = 0.0;
    for j in 1..=opts.iterations {
        let ctx = StreamCtx { seed: opts.seed, repetition: opts.repetition, iteration: j };
        let s = xi_source(opts, ctx).draw(purpose::RMLMC_XI, 0, 0);
        let grad = problem.grad_f(level, &s, &u)?;
        cost += params.rmlsg_cost_increment(level);
        records.push(RunRecord {
            j,
            schedule_level: level,
            control_level: u.level,
            cost,
            expected_cost: cost,
            sampled_level: Some(level),
            error: opts.reference.as_ref().map(|r| error_vs_reference(&u, r, problem)),
        });
        if let Some(list) = controls.as_mut() {
            list.push(u.clone());
        }
        let tau = opts.forced_step.unwrap_or_else(|| params.step_size(j));
        u.axpy(-tau, &grad);
    }
    Ok(RunTrace {
        records,
        final_control: u,
        seed: opts.seed,
        repetition: opts.repetition,
        controls,
    })
}

/// Distance between a control and a reference control in the mesh
/// inner product of the finer of the two levels.
pub fn error_vs_reference(u: &FeField, reference: &FeField, problem: &Problem) -> f64 {
    let level = u.level.max(reference.level);
    let mut diff = to_level(u, level);
    diff.axpy(-1.0, &to_level(reference, level));
    problem.hierarchy.ops(level).l2_norm(&diff.coeffs)
}

/// `(iteration, error)` pairs of a trace, for slope fits.
pub fn trace_errors(trace: &RunTrace) -> Vec<(u64, f64)> {
    trace
        .records
        .iter()
        .filter_map(|rec| rec.error.map(|e| (rec.j, e)))
        .collect()
}

#[derive(Debug)]
pub struct ReferenceSolve {
    pub control: FeField,
    pub iterations: u64,
    pub grad_norm: f64,
}

/// Deterministic reference control: steepest descent with exact line search
/// on the quadrature-averaged objective, with one factorization per
/// quadrature node reused across all iterations.
pub fn solve_reference(
    problem: &Problem,
    q: usize,
    level: usize,
    max_iters: u64,
    grad_tol: f64,
) -> Result<ReferenceSolve> {
    let grid = gl_grid(q);
    let nodes: Vec<SampleVector> = grid.nodes;
    let weights = grid.weights;
    let ops = par::map_slice(&nodes, |s| problem.op(level, s));
    let level_ops = problem.hierarchy.ops(level);
    let beta = problem.data.beta;

    let mut u = problem.zero_control(level);
    let mut iterations = 0;
    loop {
        let adjoints: Vec<Result<Vec<f64>>> = par::map_slice(&ops, |op| op.p_of(&u.coeffs));
        let mut g = u.clone();
        g.scale(beta);
        for (p, w) in adjoints.into_iter().zip(&weights) {
            let p = p?;
            for (gk, pk) in g.coeffs.iter_mut().zip(&p) {
                *gk += w * pk;
            }
        }
        let grad_norm = level_ops.l2_norm(&g.coeffs);
        if grad_norm <= grad_tol {
            return Ok(ReferenceSolve { control: u, iterations, grad_norm });
        }
        if iterations >= max_iters {
            return Err(CoreError::ReferenceNotConverged {
                iterations,
                grad_norm,
                tol: grad_tol,
            });
        }

        let actions: Vec<Result<Vec<f64>>> = par::map_slice(&ops, |op| op.normal_action(&g.coeffs));
        let mut hg = g.clone();
        hg.scale(beta);
        for (a, w) in actions.into_iter().zip(&weights) {
            let a = a?;
            for (hk, ak) in hg.coeffs.iter_mut().zip(&a) {
                *hk += w * ak;
            }
        }
        let tau = level_ops.l2_inner(&g.coeffs, &g.coeffs) / level_ops.l2_inner(&g.coeffs, &hg.coeffs);
        u.axpy(-tau, &g);
        iterations += 1;
    }
}

/// Writes a reference control as a self-describing text file: a four-line
/// header (level, coarsest mesh size, node count, content hash) followed by
/// one full-precision value per line.
pub fn save_reference(path: &Path, control: &FeField, n0: usize) -> Result<()> {
    let body = reference_body(control);
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "level {}", control.level)?;
    writeln!(w, "n0 {n0}")?;
    writeln!(w, "nodes {}", control.coeffs.len())?;
    writeln!(w, "sha256 {}", sha256_hex(body.as_bytes()))?;
    w.write_all(body.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Reads a reference control, verifying shape and content hash. Returns the
/// field and the coarsest mesh size it was built on.
pub fn load_reference(path: &Path) -> Result<(FeField, usize)> {
    let bad = |reason: String| CoreError::Cache { path: path.display().to_string(), reason };
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let mut header = |name: &str| -> Result<String> {
        let line = lines
            .next()
            .ok_or_else(|| bad(format!("missing {name} header line")))??;
        line.strip_prefix(&format!("{name} "))
            .map(str::to_owned)
            .ok_or_else(|| bad(format!("expected '{name} ...', got '{line}'")))
    };
    let parse = |s: String, what: &str| -> Result<usize> {
        s.parse::<usize>().map_err(|_| bad(format!("bad {what}: '{s}'")))
    };
    let level = parse(header("level")?, "level")?;
    let n0 = parse(header("n0")?, "n0")?;
    let nodes = parse(header("nodes")?, "node count")?;
    let hash = header("sha256")?;

    let side = (n0 << level) + 1;
    if nodes != side * side {
        return Err(bad(format!(
            "node count {nodes} does not match level {level} on a {n0}-square base mesh"
        )));
    }
    let mut coeffs = Vec::with_capacity(nodes);
    let mut body = String::new();
    for line in lines {
        let line = line?;
        coeffs.push(line.parse::<f64>().map_err(|_| bad(format!("bad value '{line}'")))?);
        body.push_str(&line);
        body.push('\n');
    }
    if coeffs.len() != nodes {
        return Err(bad(format!("expected {nodes} values, found {}", coeffs.len())));
    }
    if sha256_hex(body.as_bytes()) != hash {
        return Err(bad("content hash mismatch".into()));
    }
    Ok((FeField { level, coeffs }, n0))
}

/// Content hash of a reference control: the hash of its value block exactly
/// as `save_reference` writes it.
pub fn reference_sha256(control: &FeField) -> String {
    sha256_hex(reference_body(control).as_bytes())
}

fn reference_body(control: &FeField) -> String {
    let mut body = String::with_capacity(control.coeffs.len() * 26);
    for v in &control.coeffs {
        body.push_str(&format!("{v:.16e}\n"));
    }
    body
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    let mut hex = String::with_capacity(64);
    for b in out {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}
