//! Experiment orchestration: reference-control management, repetition
//! fan-out, aggregation across repetitions, and CSV/sidecar emission.
//!
//! Every numeric column is written with `{:.16e}` so a value survives a
//! write/parse round trip exactly, and rows are emitted in a fixed order;
//! rerunning a config therefore reproduces its CSV byte for byte.

use anyhow::{anyhow, bail, Context, Result};
use mlsg_core::estimator::fit_rate_constant;
use mlsg_core::estimator::screen_levels;
use mlsg_core::fem::FeField;
use mlsg_core::optimize::{
    load_reference, reference_sha256, run_mlsg, run_rm_baseline, run_rmlsg, save_reference,
    solve_reference, RunOptions, RunTrace,
};
use mlsg_core::par;
use mlsg_core::problem::{Problem, ProblemData};
use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use crate::config::{ResolvedConfig, ResolvedReference, RunKind};
use crate::slope::fit_line;

/// How `ensure_reference` obtained the control.
#[derive(Debug)]
pub enum ReferenceSource {
    Loaded,
    Solved { iterations: u64, grad_norm: f64 },
}

/// Builds the benchmark problem on the config's coarsest mesh, with the
/// config's regularization weight.
pub fn build_problem(cfg: &ResolvedConfig) -> Problem {
    let mut data = ProblemData::benchmark();
    data.beta = cfg.params.beta;
    Problem::new(data, cfg.params.n0())
}

/// Returns the reference control described by `spec`, loading it from the
/// cache file when one exists and solving (then caching) otherwise. The
/// content hash is verified against `spec.sha256` when pinned, and always
/// returned so callers can pin it in replay sidecars.
pub fn ensure_reference(
    problem: &Problem,
    spec: &ResolvedReference,
) -> Result<(FeField, String, ReferenceSource)> {
    if let Some(path) = spec.path.as_ref().filter(|p| p.exists()) {
        let (control, n0) = load_reference(path)?;
        if n0 != problem.hierarchy.n0() {
            bail!(
                "reference cache {} was built on a coarsest mesh of {n0} squares per side, \
                 expected {}",
                path.display(),
                problem.hierarchy.n0()
            );
        }
        if control.level != spec.level {
            bail!(
                "reference cache {} holds a level-{} control, config expects level {}",
                path.display(),
                control.level,
                spec.level
            );
        }
        let hash = reference_sha256(&control);
        if let Some(pin) = &spec.sha256 {
            if *pin != hash {
                bail!(
                    "reference control hash mismatch: config pins {pin}, cache {} holds {hash}",
                    path.display()
                );
            }
        }
        return Ok((control, hash, ReferenceSource::Loaded));
    }

    let solved = solve_reference(problem, spec.q, spec.level, spec.max_iters, spec.grad_tol)?;
    let hash = reference_sha256(&solved.control);
    if let Some(pin) = &spec.sha256 {
        if *pin != hash {
            bail!("reference control hash mismatch: config pins {pin}, fresh solve gives {hash}");
        }
    }
    if let Some(path) = &spec.path {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("creating reference directory {}", dir.display()))?;
        }
        save_reference(path, &solved.control, problem.hierarchy.n0())?;
    }
    Ok((
        solved.control,
        hash,
        ReferenceSource::Solved { iterations: solved.iterations, grad_norm: solved.grad_norm },
    ))
}

/// The finest mesh level an optimizer run will touch, which the reference
/// control must match or exceed for the error column to be well defined.
fn finest_run_level(cfg: &ResolvedConfig) -> usize {
    match cfg.kind {
        RunKind::Mlsg => cfg.params.mlsg_levels(cfg.iterations),
        RunKind::Rmlsg => cfg.params.rmlsg_levels(cfg.iterations),
        _ => cfg.level,
    }
}

/// Runs every repetition of an optimizer config. Repetitions are
/// independent (disjoint seed namespaces) and fan out on the worker pool.
pub fn run_repetitions(
    problem: &Problem,
    cfg: &ResolvedConfig,
    reference: &FeField,
) -> Result<Vec<RunTrace>> {
    let traces = par::map_range(cfg.repetitions as usize, |rep| {
        let mut opts = RunOptions::new(cfg.iterations, cfg.seed);
        opts.repetition = rep as u64;
        opts.reference = Some(reference.clone());
        match cfg.kind {
            RunKind::Mlsg => run_mlsg(problem, &cfg.params, &opts),
            RunKind::Rmlsg => run_rmlsg(problem, &cfg.params, &opts),
            RunKind::RmBaseline => run_rm_baseline(problem, &cfg.params, cfg.level, &opts),
            _ => unreachable!("run_repetitions only handles optimizer strategies"),
        }
    })
    .into_iter()
    .collect::<mlsg_core::Result<Vec<_>>>()?;
    Ok(traces)
}

fn create_output(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
    }
    let file =
        File::create(path).with_context(|| format!("creating output {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// Writes the per-iteration table. Deterministic strategies get a single
/// cost column; the randomized strategy gets its expected cost plus
/// mean/std of the empirical cost across repetitions.
pub fn write_iteration_csv(
    path: &Path,
    cfg: &ResolvedConfig,
    traces: &[RunTrace],
) -> Result<()> {
    let reps = traces.len();
    let mut out = create_output(path)?;
    match cfg.kind {
        RunKind::Rmlsg => write!(out, "j,schedule_level,expected_cost,cost_mean,cost_std,mean_error")?,
        _ => write!(out, "j,schedule_level,cost,mean_error")?,
    }
    for rep in 0..reps {
        write!(out, ",err_rep_{rep}")?;
    }
    writeln!(out)?;

    for idx in 0..cfg.iterations as usize {
        let lead = &traces[0].records[idx];
        let errors: Vec<f64> = traces
            .iter()
            .map(|t| {
                t.records[idx]
                    .error
                    .ok_or_else(|| anyhow!("trace is missing its error column at j={}", lead.j))
            })
            .collect::<Result<_>>()?;
        let mean_error = errors.iter().sum::<f64>() / reps as f64;

        write!(out, "{},{}", lead.j, lead.schedule_level)?;
        match cfg.kind {
            RunKind::Rmlsg => {
                let costs: Vec<f64> = traces.iter().map(|t| t.records[idx].cost).collect();
                let cost_mean = costs.iter().sum::<f64>() / reps as f64;
                let cost_std = if reps > 1 {
                    (costs.iter().map(|c| (c - cost_mean).powi(2)).sum::<f64>()
                        / (reps - 1) as f64)
                        .sqrt()
                } else {
                    0.0
                };
                write!(
                    out,
                    ",{:.16e},{:.16e},{:.16e}",
                    lead.expected_cost, cost_mean, cost_std
                )?;
            }
            _ => write!(out, ",{:.16e}", lead.cost)?,
        }
        write!(out, ",{:.16e}", mean_error)?;
        for e in &errors {
            write!(out, ",{:.16e}", e)?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes the fully resolved config next to the CSV so the run can be
/// replayed exactly; the reference control is pinned by content hash.
pub fn write_sidecar(csv_path: &Path, cfg: &ResolvedConfig) -> Result<PathBuf> {
    let sidecar = csv_path.with_extension("config.json");
    let mut text = serde_json::to_string_pretty(&cfg.to_file())?;
    text.push('\n');
    std::fs::write(&sidecar, text)
        .with_context(|| format!("writing sidecar {}", sidecar.display()))?;
    Ok(sidecar)
}

fn run_optimizer(cfg: &mut ResolvedConfig) -> Result<()> {
    let problem = build_problem(cfg);
    let spec = cfg
        .reference
        .as_ref()
        .ok_or_else(|| anyhow!("optimizer runs need a \"reference\" block to report errors"))?
        .clone();
    let finest = finest_run_level(cfg);
    if spec.level < finest {
        bail!(
            "reference level {} is coarser than the run's finest level {finest}; \
             raise reference.level",
            spec.level
        );
    }
    let (control, hash, source) = ensure_reference(&problem, &spec)?;
    match source {
        ReferenceSource::Loaded => log::info!("reference control loaded from cache ({hash})"),
        ReferenceSource::Solved { iterations, grad_norm } => log::info!(
            "reference control solved in {iterations} iterations, gradient norm {grad_norm:.3e}"
        ),
    }
    cfg.reference.as_mut().expect("checked above").sha256 = Some(hash);

    let traces = run_repetitions(&problem, cfg, &control)?;
    let out = cfg
        .output
        .clone()
        .ok_or_else(|| anyhow!("an output CSV path is required (set \"output\" or pass --out)"))?;
    write_iteration_csv(&out, cfg, &traces)?;
    let sidecar = write_sidecar(&out, cfg)?;

    let last = traces[0].records.len() - 1;
    let final_mean = traces
        .iter()
        .map(|t| t.records[last].error.unwrap_or(f64::NAN))
        .sum::<f64>()
        / traces.len() as f64;
    println!(
        "{} x{} repetitions, {} iterations -> {}",
        kind_name(cfg.kind),
        cfg.repetitions,
        cfg.iterations,
        out.display()
    );
    println!("replay sidecar: {}", sidecar.display());
    println!("final mean error: {final_mean:.6e}");
    Ok(())
}

fn kind_name(kind: RunKind) -> &'static str {
    match kind {
        RunKind::Mlsg => "mlsg",
        RunKind::Rmlsg => "rmlsg",
        RunKind::RmBaseline => "rm-baseline",
        RunKind::Reference => "reference",
        RunKind::Screen => "screen",
        RunKind::ValidateRates => "validate-rates",
    }
}

fn run_reference(cfg: &ResolvedConfig) -> Result<()> {
    let problem = build_problem(cfg);
    let spec = cfg
        .reference
        .as_ref()
        .ok_or_else(|| anyhow!("the reference strategy needs a \"reference\" block"))?;
    if spec.path.is_none() {
        bail!("reference.path is required so the solved control can be cached");
    }
    let (control, hash, source) = ensure_reference(&problem, spec)?;
    match source {
        ReferenceSource::Loaded => println!("loaded cached reference control"),
        ReferenceSource::Solved { iterations, grad_norm } => {
            println!("solved reference control in {iterations} iterations, gradient norm {grad_norm:.3e}")
        }
    }
    println!(
        "level {} control, {} nodes, sha256 {hash}",
        control.level,
        control.coeffs.len()
    );
    Ok(())
}

fn run_screen(cfg: &ResolvedConfig, validate: bool) -> Result<()> {
    let problem = build_problem(cfg);
    let u0 = problem.zero_control(0);
    let stats = screen_levels(&problem, &u0, cfg.levels, cfg.samples as usize, cfg.seed)?;
    for s in &stats {
        println!(
            "level {}: h {:.6e}, squared mean difference {:.6e} ({} samples)",
            s.level, s.h, s.e_hat, s.samples
        );
    }
    if let Some(out) = &cfg.output {
        let mut w = create_output(out)?;
        writeln!(w, "level,h,e_hat,samples")?;
        for s in &stats {
            writeln!(w, "{},{:.16e},{:.16e},{}", s.level, s.h, s.e_hat, s.samples)?;
        }
        w.flush()?;
        println!("wrote screening table to {}", out.display());
    }

    // the decay fit uses the coupled-difference levels only (level 0 holds
    // the plain first-level estimate, not a difference)
    if stats.len() < 3 {
        if validate {
            bail!("need at least two difference levels to fit a decay rate; raise \"levels\"");
        }
        println!("(skipping the decay fit: it needs at least two difference levels)");
        return Ok(());
    }
    let xs: Vec<f64> = stats[1..].iter().map(|s| s.level as f64).collect();
    let ys: Vec<f64> = stats[1..].iter().map(|s| s.e_hat.log2()).collect();
    let (decay, _) = fit_line(&xs, &ys)?;
    let exponent = 2.0 * cfg.params.qs();
    let constant = fit_rate_constant(&stats[1..], exponent)?;
    println!("fitted decay per level (log2): {decay:.3}");
    println!("fitted rate constant: {constant:.6e}");

    if validate {
        if (-5.0..=-3.0).contains(&decay) {
            println!("PASS: decay {decay:.3} within [-5, -3]");
        } else {
            bail!("FAIL: decay {decay:.3} outside [-5, -3]");
        }
    }
    Ok(())
}

/// Extracts a log-log column pair from an experiment CSV, optionally
/// windowed by the `j` column, writes the pairs, and returns the fitted
/// slope.
pub fn plot_data(
    input: &Path,
    xcol: &str,
    ycol: &str,
    jmin: Option<u64>,
    jmax: Option<u64>,
    out: &Path,
) -> Result<f64> {
    let text = std::fs::read_to_string(input)
        .with_context(|| format!("reading {}", input.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("{} is empty", input.display()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| anyhow!("no column {name:?} in {} (have: {header})", input.display()))
    };
    let xi = find(xcol)?;
    let yi = find(ycol)?;
    let ji = cols.iter().position(|c| *c == "j");
    if (jmin.is_some() || jmax.is_some()) && ji.is_none() {
        bail!("a j window was given but {} has no j column", input.display());
    }

    let mut pairs = Vec::new();
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |idx: usize| {
            fields
                .get(idx)
                .ok_or_else(|| anyhow!("row {} is short", row + 2))?
                .parse::<f64>()
                .with_context(|| format!("row {}, column {}", row + 2, cols[idx]))
        };
        if let Some(ji) = ji {
            let j = parse(ji)? as u64;
            if jmin.is_some_and(|m| j < m) || jmax.is_some_and(|m| j > m) {
                continue;
            }
        }
        let x = parse(xi)?;
        let y = parse(yi)?;
        if x > 0.0 && y > 0.0 {
            pairs.push((x.log10(), y.log10()));
        }
    }
    if pairs.len() < 3 {
        bail!("only {} usable rows; a slope fit needs at least 3", pairs.len());
    }

    let mut w = create_output(out)?;
    writeln!(w, "log10_{xcol},log10_{ycol}")?;
    for (x, y) in &pairs {
        writeln!(w, "{:.16e},{:.16e}", x, y)?;
    }
    w.flush()?;

    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(fit_line(&xs, &ys)?.0)
}

/// Dispatches a resolved config. May fill in the reference hash pin, which
/// is why the config is taken mutably.
pub fn execute(cfg: &mut ResolvedConfig) -> Result<()> {
    match cfg.kind {
        RunKind::Mlsg | RunKind::Rmlsg | RunKind::RmBaseline => run_optimizer(cfg),
        RunKind::Reference => run_reference(cfg),
        RunKind::Screen => run_screen(cfg, false),
        RunKind::ValidateRates => run_screen(cfg, true),
    }
}
