//! Experiment configuration: JSON schema, defaults, and resolution into the
//! core parameter pack.
//!
//! Unknown keys are rejected by name so that a typo in a config file fails
//! loudly instead of silently running with defaults. Every optional field
//! has a deterministic default, and a fully resolved config can be written
//! back out as a sidecar that replays the run exactly.

use anyhow::{bail, Context, Result};
use mlsg_core::schedule::{AlgoParams, Strategy};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// What a config file asks the harness to do.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    /// Multilevel stochastic gradient descent.
    Mlsg,
    /// Randomized-level stochastic gradient descent.
    Rmlsg,
    /// Single-level stochastic gradient baseline at a fixed mesh level.
    RmBaseline,
    /// Solve and cache the tensor-quadrature reference control.
    Reference,
    /// Estimate the level-variance decay at the zero control.
    Screen,
    /// Screen and check the fitted decay rate against the expected band.
    ValidateRates,
}

/// Optional overrides of the algorithm parameter pack. Anything left out
/// keeps its strategy default; derived quantities (`tau0`, `ell`,
/// `eps0_sq`, `sigma0_sq`) are recomputed from overridden inputs unless
/// they are overridden themselves.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub beta: Option<f64>,
    pub tau0: Option<f64>,
    pub alpha: Option<f64>,
    pub h0: Option<f64>,
    pub r: Option<u32>,
    pub d: Option<u32>,
    pub gamma: Option<f64>,
    pub c_bias: Option<f64>,
    pub c_var: Option<f64>,
    pub eps0_sq: Option<f64>,
    pub sigma0_sq: Option<f64>,
    pub eta: Option<f64>,
    pub ell: Option<f64>,
}

impl ParamOverrides {
    /// Snapshot of a fully resolved pack, for the replay sidecar.
    pub fn from_params(p: &AlgoParams) -> Self {
        ParamOverrides {
            beta: Some(p.beta),
            tau0: Some(p.tau0),
            alpha: Some(p.alpha),
            h0: Some(p.h0),
            r: Some(p.r),
            d: Some(p.d),
            gamma: Some(p.gamma),
            c_bias: Some(p.c_bias),
            c_var: Some(p.c_var),
            eps0_sq: Some(p.eps0_sq),
            sigma0_sq: Some(p.sigma0_sq),
            eta: Some(p.eta),
            ell: Some(p.ell),
        }
    }

    /// Applies the overrides on top of the strategy's default pack.
    ///
    /// Resolution order matters: `beta` feeds the default step scale and
    /// convexity constant, `h0`/`r`/`c_bias` feed the default bias
    /// tolerance, and that in turn feeds the default variance tolerance.
    pub fn resolve(&self, strategy: Strategy) -> Result<AlgoParams> {
        let mut p = match strategy {
            Strategy::Mlsg => AlgoParams::mlsg_default(),
            Strategy::Rmlsg => AlgoParams::rmlsg_default(),
        };
        if let Some(beta) = self.beta {
            p.beta = beta;
            p.tau0 = 2.0 / beta;
            p.ell = 2.0 * beta;
        }
        if let Some(tau0) = self.tau0 {
            p.tau0 = tau0;
        }
        if let Some(ell) = self.ell {
            p.ell = ell;
        }
        if let Some(alpha) = self.alpha {
            p.alpha = alpha;
        }
        if let Some(h0) = self.h0 {
            p.h0 = h0;
        }
        if let Some(r) = self.r {
            p.r = r;
        }
        if let Some(d) = self.d {
            p.d = d;
        }
        if let Some(gamma) = self.gamma {
            p.gamma = gamma;
        }
        if let Some(c_bias) = self.c_bias {
            p.c_bias = c_bias;
        }
        if let Some(c_var) = self.c_var {
            p.c_var = c_var;
        }
        p.eps0_sq = match self.eps0_sq {
            Some(v) => v,
            None => p.c_bias * p.h0.powi(2 * p.r as i32 + 2),
        };
        p.sigma0_sq = match self.sigma0_sq {
            Some(v) => v,
            None => ((2.0 * p.tau0 + 2.0 / p.ell) / (2.0 * p.tau0)) * p.eps0_sq,
        };
        if let Some(eta) = self.eta {
            p.eta = eta;
        }
        p.validate()?;
        Ok(p)
    }
}

/// Where the reference control comes from: a cache file, a fresh solve, or
/// both (solve once, then reuse the cache). A `sha256` pin makes a run
/// refuse any control other than the one it was written for.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub path: Option<PathBuf>,
    pub sha256: Option<String>,
    pub level: Option<usize>,
    pub q: Option<usize>,
    pub max_iters: Option<u64>,
    pub grad_tol: Option<f64>,
}

/// `ReferenceSpec` with defaults filled in.
#[derive(Clone, Debug)]
pub struct ResolvedReference {
    pub path: Option<PathBuf>,
    pub sha256: Option<String>,
    pub level: usize,
    pub q: usize,
    pub max_iters: u64,
    pub grad_tol: f64,
}

impl ReferenceSpec {
    pub fn resolve(&self) -> ResolvedReference {
        ResolvedReference {
            path: self.path.clone(),
            sha256: self.sha256.clone(),
            level: self.level.unwrap_or(4),
            q: self.q.unwrap_or(3),
            max_iters: self.max_iters.unwrap_or(60),
            grad_tol: self.grad_tol.unwrap_or(1e-8),
        }
    }

    pub fn from_resolved(r: &ResolvedReference) -> Self {
        ReferenceSpec {
            path: r.path.clone(),
            sha256: r.sha256.clone(),
            level: Some(r.level),
            q: Some(r.q),
            max_iters: Some(r.max_iters),
            grad_tol: Some(r.grad_tol),
        }
    }
}

/// On-disk experiment description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub strategy: RunKind,
    #[serde(default)]
    pub params: ParamOverrides,
    #[serde(default)]
    pub iterations: Option<u64>,
    #[serde(default)]
    pub repetitions: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Fixed mesh level for the single-level baseline.
    #[serde(default)]
    pub level: Option<usize>,
    /// Screening sample count.
    #[serde(default)]
    pub samples: Option<u64>,
    /// Largest difference level to screen.
    #[serde(default)]
    pub levels: Option<usize>,
    #[serde(default)]
    pub reference: Option<ReferenceSpec>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct CliOverrides {
    pub seed: Option<u64>,
    pub iterations: Option<u64>,
    pub repetitions: Option<u64>,
    pub output: Option<PathBuf>,
}

/// A config with every default filled in, ready to execute and to serialize
/// as a replay sidecar.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub kind: RunKind,
    pub params: AlgoParams,
    pub iterations: u64,
    pub repetitions: u64,
    pub seed: u64,
    pub level: usize,
    pub samples: u64,
    pub levels: usize,
    pub reference: Option<ResolvedReference>,
    pub output: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ConfigFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn resolve(&self, cli: &CliOverrides) -> Result<ResolvedConfig> {
        let strategy = match self.strategy {
            RunKind::Mlsg => Strategy::Mlsg,
            _ => Strategy::Rmlsg,
        };
        let params = self.params.resolve(strategy)?;
        let iterations = cli.iterations.or(self.iterations).unwrap_or(100);
        let repetitions = cli.repetitions.or(self.repetitions).unwrap_or(1);
        if iterations == 0 {
            bail!("iterations must be at least 1");
        }
        if repetitions == 0 {
            bail!("repetitions must be at least 1");
        }
        Ok(ResolvedConfig {
            kind: self.strategy,
            params,
            iterations,
            repetitions,
            seed: cli.seed.or(self.seed).unwrap_or(0),
            level: self.level.unwrap_or(0),
            samples: self.samples.unwrap_or(100),
            levels: self.levels.unwrap_or(3),
            reference: self.reference.as_ref().map(|r| r.resolve()),
            output: cli.output.clone().or_else(|| self.output.clone()),
        })
    }
}

impl ResolvedConfig {
    /// The config file that reproduces this run byte for byte.
    pub fn to_file(&self) -> ConfigFile {
        ConfigFile {
            strategy: self.kind,
            params: ParamOverrides::from_params(&self.params),
            iterations: Some(self.iterations),
            repetitions: Some(self.repetitions),
            seed: Some(self.seed),
            level: Some(self.level),
            samples: Some(self.samples),
            levels: Some(self.levels),
            reference: self.reference.as_ref().map(ReferenceSpec::from_resolved),
            output: self.output.clone(),
        }
    }
}
