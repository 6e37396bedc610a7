//! Gradient estimators: the multilevel estimator that averages coupled
//! adjoint differences per level, its single-sample randomized-level
//! counterpart, plus level screening and sample-size allocation helpers.
//!
//! All estimators reduce deterministically: parallel sample evaluation
//! collects results in job order and the sums run sequentially, so a run is
//! reproducible bit for bit regardless of thread count.

use crate::error::{CoreError, Result};
use crate::fem::{prolong, to_level, FeField};
use crate::par;
use crate::problem::Problem;
use crate::rand_field::{sample_xi, SampleVector};
use crate::rng::{purpose, StreamCtx};
use rand::Rng;

/// Where estimators get their coefficient samples: a keyed stream (normal
/// operation) or one pinned realization (identity tests, coupled runs).
#[derive(Clone)]
pub enum XiSource {
    Stream(StreamCtx),
    Pinned(SampleVector),
}

impl XiSource {
    pub fn draw(&self, purpose: u64, level: u64, index: u64) -> SampleVector {
        match self {
            XiSource::Stream(ctx) => sample_xi(&mut ctx.rng(purpose, level, index)),
            XiSource::Pinned(s) => *s,
        }
    }
}

/// An estimated gradient together with its bookkeeping.
#[derive(Debug)]
pub struct MlmcOutput {
    /// Estimate at the requested level.
    pub grad: FeField,
    /// Work units under the geometric cost model (see `sample_cost`).
    pub model_cost: f64,
    /// Samples actually spent per level.
    pub samples_used: Vec<u64>,
    /// The level drawn by the randomized estimator, if one was drawn.
    pub sampled_level: Option<usize>,
}

/// Model work units for one coupled sample at `level`: primal and adjoint
/// solve on the fine mesh, and on the coarser mesh when there is one, each
/// solve costing `2^(level * cost_exp)`.
fn sample_cost(level: usize, cost_exp: u32) -> f64 {
    let fine = 2f64.powi((level as u32 * cost_exp) as i32);
    let coarse = if level > 0 { 2f64.powi(((level as u32 - 1) * cost_exp) as i32) } else { 0.0 };
    2.0 * (fine + coarse)
}

/// Coupled adjoint difference at `level`: the adjoint for one coefficient
/// realization minus the prolonged adjoint of the same realization one level
/// coarser (just the adjoint itself at level zero).
fn adjoint_difference(
    problem: &Problem,
    u: &FeField,
    level: usize,
    s: &SampleVector,
) -> Result<FeField> {
    let fine = problem.solve_adjoint(level, s, u)?;
    if level == 0 {
        return Ok(fine);
    }
    let coarse = problem.solve_adjoint(level - 1, s, u)?;
    let mut diff = fine;
    diff.axpy(-1.0, &prolong(&coarse, level)?);
    Ok(diff)
}

/// Multilevel gradient estimate at `level` with `n[l]` coupled samples on
/// each level `l = 0..=level`. Each sample shares one coefficient
/// realization between its fine and coarse solve.
pub fn mlmc_gradient(
    problem: &Problem,
    u: &FeField,
    level: usize,
    n: &[u64],
    xi: &XiSource,
    cost_exp: u32,
) -> Result<MlmcOutput> {
    if n.len() != level + 1 {
        return Err(CoreError::SampleCountShape { level, expected: level + 1, got: n.len() });
    }
    if n.iter().any(|&k| k == 0) {
        return Err(CoreError::SampleCountZero);
    }

    let mut jobs = Vec::new();
    for (l, &count) in n.iter().enumerate() {
        for i in 0..count {
            jobs.push((l, i));
        }
    }
    let results: Vec<FeField> = par::map_slice(&jobs, |&(l, i)| {
        let s = xi.draw(purpose::MLMC_XI, l as u64, i);
        adjoint_difference(problem, u, l, &s)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let mut total = to_level(u, level);
    total.scale(problem.data.beta);
    let mut cost = 0.0;
    let mut offset = 0;
    for (l, &count) in n.iter().enumerate() {
        let mut mean = FeField::zeros(l, problem.hierarchy.n0());
        for d in &results[offset..offset + count as usize] {
            mean.axpy(1.0, d);
        }
        offset += count as usize;
        mean.scale(1.0 / count as f64);
        total.axpy(1.0, &prolong(&mean, level)?);
        cost += count as f64 * sample_cost(l, cost_exp);
    }

    Ok(MlmcOutput { grad: total, model_cost: cost, samples_used: n.to_vec(), sampled_level: None })
}

/// One term of the randomized-level estimator: the coupled adjoint
/// difference at a prescribed level `l`, reweighted by its probability.
pub fn rmlmc_term(
    problem: &Problem,
    u: &FeField,
    level: usize,
    l: usize,
    s: &SampleVector,
    pmf: &[f64],
    cost_exp: u32,
) -> Result<MlmcOutput> {
    validate_pmf(pmf, level)?;
    if l > level {
        return Err(CoreError::InvalidPmf {
            reason: format!("drawn level {l} exceeds maximum level {level}"),
        });
    }

    let mut diff = adjoint_difference(problem, u, l, s)?;
    diff.scale(1.0 / pmf[l]);

    let mut total = to_level(u, level);
    total.scale(problem.data.beta);
    total.axpy(1.0, &prolong(&diff, level)?);

    let mut samples_used = vec![0u64; level + 1];
    samples_used[l] = 1;
    Ok(MlmcOutput {
        grad: total,
        model_cost: sample_cost(l, cost_exp),
        samples_used,
        sampled_level: Some(l),
    })
}

/// Single-sample randomized-level gradient estimate at `level`: draws the
/// level from `pmf` by inverse transform, draws one coefficient realization,
/// and reweights the coupled difference by the level's probability.
pub fn rmlmc_gradient(
    problem: &Problem,
    u: &FeField,
    level: usize,
    pmf: &[f64],
    ctx: &StreamCtx,
    xi: &XiSource,
    cost_exp: u32,
) -> Result<MlmcOutput> {
    validate_pmf(pmf, level)?;
    let t: f64 = ctx.rng(purpose::RMLMC_LEVEL, 0, 0).gen();
    let mut l = level;
    let mut cum = 0.0;
    for (k, &p) in pmf.iter().enumerate() {
        cum += p;
        if t < cum {
            l = k;
            break;
        }
    }
    let s = xi.draw(purpose::RMLMC_XI, 0, 0);
    rmlmc_term(problem, u, level, l, &s, pmf, cost_exp)
}

fn validate_pmf(pmf: &[f64], level: usize) -> Result<()> {
    if pmf.len() != level + 1 {
        return Err(CoreError::InvalidPmf {
            reason: format!("need {} weights for level {level}, got {}", level + 1, pmf.len()),
        });
    }
    if pmf.iter().any(|&p| !(p > 0.0)) {
        return Err(CoreError::InvalidPmf { reason: "weights must be positive".into() });
    }
    let sum: f64 = pmf.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(CoreError::InvalidPmf { reason: format!("weights sum to {sum}, not 1") });
    }
    Ok(())
}

/// Per-level decay statistics from screening runs.
#[derive(Clone, Debug)]
pub struct LevelStats {
    pub level: usize,
    /// Squared norm of the empirical mean gradient difference against the
    /// next coarser level (of the gradient itself at level zero).
    pub e_hat: f64,
    pub h: f64,
    pub samples: usize,
}

/// Estimates the per-level decay of the mean gradient correction by Monte
/// Carlo: `m` coefficient realizations, each evaluated on every level up to
/// `l_max` with the realization shared across levels.
pub fn screen_levels(
    problem: &Problem,
    u: &FeField,
    l_max: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<LevelStats>> {
    if m < 2 {
        return Err(CoreError::TooFewSamples { got: m });
    }
    let grads: Vec<Vec<FeField>> = par::map_range(m, |i| -> Result<Vec<FeField>> {
        let s = sample_xi(&mut crate::rng::stream(seed, &[purpose::SCREEN_XI, i as u64]));
        (0..=l_max).map(|l| problem.grad_f(l, &s, u)).collect()
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let n0 = problem.hierarchy.n0();
    let mut stats = Vec::with_capacity(l_max + 1);
    for l in 0..=l_max {
        let mut mean = FeField::zeros(l, n0);
        for per_level in &grads {
            if l == 0 {
                mean.axpy(1.0, &per_level[0]);
            } else {
                let mut diff = per_level[l].clone();
                diff.axpy(-1.0, &prolong(&per_level[l - 1], l)?);
                mean.axpy(1.0, &diff);
            }
        }
        mean.scale(1.0 / m as f64);
        let norm = problem.hierarchy.ops(l).l2_norm(&mean.coeffs);
        stats.push(LevelStats {
            level: l,
            e_hat: norm * norm,
            h: problem.hierarchy.h0() * 0.5f64.powi(l as i32),
            samples: m,
        });
    }
    Ok(stats)
}

/// Fits the constant `c` in `e_hat = c * h^exponent` by a geometric-mean fit
/// in log space over the given entries.
pub fn fit_rate_constant(stats: &[LevelStats], exponent: f64) -> Result<f64> {
    let logs: Vec<f64> = stats
        .iter()
        .filter(|s| s.e_hat > 0.0 && s.h > 0.0)
        .map(|s| s.e_hat.ln() - exponent * s.h.ln())
        .collect();
    if logs.is_empty() {
        return Err(CoreError::EmptyRateFit);
    }
    Ok((logs.iter().sum::<f64>() / logs.len() as f64).exp())
}

/// Classical work-optimal sample allocation for a multilevel estimator with
/// per-level variances `v` and per-sample costs `c`, targeting statistical
/// error `tol_sq` (a squared tolerance).
pub fn optimal_sample_sizes(tol_sq: f64, v: &[f64], c: &[f64]) -> Result<Vec<u64>> {
    if v.is_empty() || v.len() != c.len() {
        return Err(CoreError::InvalidParam(format!(
            "variance and cost lists must match and be non-empty, got {} and {}",
            v.len(),
            c.len()
        )));
    }
    if tol_sq <= 0.0 || v.iter().any(|&x| x < 0.0) || c.iter().any(|&x| !(x > 0.0)) {
        return Err(CoreError::InvalidParam(
            "need tol_sq > 0, variances >= 0, costs > 0".into(),
        ));
    }
    let lagrange: f64 = v.iter().zip(c).map(|(&vl, &cl)| (vl * cl).sqrt()).sum();
    Ok(v.iter()
        .zip(c)
        .map(|(&vl, &cl)| ((lagrange / tol_sq) * (vl / cl).sqrt()).ceil().max(1.0) as u64)
        .collect())
}
