//! Iteration schedules: diminishing step sizes, the growing level cap, the
//! per-level sample counts of the multilevel run, and the level distribution
//! of the randomized run, all derived from one parameter pack.

use crate::error::{CoreError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Multilevel estimator with scheduled per-level sample counts.
    Mlsg,
    /// Single-sample estimator with a randomized level.
    Rmlsg,
}

/// Parameter pack driving the schedules. `r` is the convergence order of the
/// discretization (meaning the gradient bias decays like `h^(2r+2)` in the
/// squared norm), `gamma` the per-unknown solver cost exponent, and `d` the
/// spatial dimension, so one solve at level `l` costs `2^(l*gamma*d)` work
/// units. `c_bias` and `c_var` are the constants in the bias and variance
/// decay models, `eps0_sq`/`sigma0_sq` the squared accuracy offsets at the
/// coarsest level, `eta` the growth exponent balancing sampling effort
/// against iteration count, and `ell` the strong-convexity modulus.
#[derive(Clone, Debug)]
pub struct AlgoParams {
    pub strategy: Strategy,
    pub beta: f64,
    pub tau0: f64,
    pub alpha: f64,
    pub h0: f64,
    pub r: u32,
    pub d: u32,
    pub gamma: f64,
    pub c_bias: f64,
    pub c_var: f64,
    pub eps0_sq: f64,
    pub sigma0_sq: f64,
    pub eta: f64,
    pub ell: f64,
}

impl AlgoParams {
    fn defaults(strategy: Strategy, eta: f64) -> Self {
        let beta = 1e-4;
        let tau0 = 2.0 / beta;
        let ell = 2.0 * beta;
        let h0 = 0.125f64;
        let c_bias = 0.5;
        let c_var = 0.5;
        let eps0_sq = c_bias * h0.powi(4);
        let sigma0_sq = ((2.0 * tau0 + 2.0 / ell) / (2.0 * tau0)) * eps0_sq;
        AlgoParams {
            strategy,
            beta,
            tau0,
            alpha: 10.0,
            h0,
            r: 1,
            d: 2,
            gamma: 1.0,
            c_bias,
            c_var,
            eps0_sq,
            sigma0_sq,
            eta,
            ell,
        }
    }

    pub fn mlsg_default() -> Self {
        Self::defaults(Strategy::Mlsg, 3.0)
    }

    pub fn rmlsg_default() -> Self {
        Self::defaults(Strategy::Rmlsg, 2.0)
    }

    /// Variance-decay exponent per level on the `2^-l` scale.
    pub fn qs(&self) -> f64 {
        self.r as f64 + 1.0
    }

    /// Cost-growth exponent per level on the `2^l` scale.
    pub fn qc(&self) -> f64 {
        self.gamma * self.d as f64 / 2.0
    }

    /// Squares per side of the coarsest mesh.
    pub fn n0(&self) -> usize {
        (1.0 / self.h0).round() as usize
    }

    /// Integer cost exponent `gamma * d` of the geometric work model.
    pub fn cost_exp(&self) -> u32 {
        (self.gamma * self.d as f64).round() as u32
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(CoreError::InvalidParam(reason));
        if !(self.beta > 0.0) {
            return fail(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.tau0 > 0.0) || !(self.alpha >= 0.0) {
            return fail(format!(
                "need tau0 > 0 and alpha >= 0, got {} and {}",
                self.tau0, self.alpha
            ));
        }
        if !(self.ell > 0.0) || self.tau0 * self.ell <= 2.0 {
            return fail(format!(
                "step sizes need tau0 * ell > 2 for the schedule to contract, got {}",
                self.tau0 * self.ell
            ));
        }
        let n0 = 1.0 / self.h0;
        if !(self.h0 > 0.0) || (n0 - n0.round()).abs() > 1e-9 || n0.round() < 2.0 {
            return fail(format!(
                "h0 must be the reciprocal of an integer >= 2, got {}",
                self.h0
            ));
        }
        if self.d == 0 || !(self.gamma > 0.0) {
            return fail(format!("need d >= 1 and gamma > 0, got {} and {}", self.d, self.gamma));
        }
        let gd = self.gamma * self.d as f64;
        if (gd - gd.round()).abs() > 1e-9 || gd.round() < 1.0 {
            return fail(format!("gamma * d must be a positive integer, got {gd}"));
        }
        for (name, v) in [
            ("c_bias", self.c_bias),
            ("c_var", self.c_var),
            ("eps0_sq", self.eps0_sq),
            ("sigma0_sq", self.sigma0_sq),
        ] {
            if !(v > 0.0) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.eta > 1.0) {
            return fail(format!("eta must exceed 1, got {}", self.eta));
        }
        let (qs, qc) = (self.qs(), self.qc());
        match self.strategy {
            Strategy::Mlsg => {
                if qs > qc {
                    let bound = (2.0 * qs - qc) / (qs - qc);
                    if self.eta < bound - 1e-12 {
                        return fail(format!(
                            "multilevel schedule needs eta >= {bound} when variance decay \
                             dominates cost growth, got {}",
                            self.eta
                        ));
                    }
                } else {
                    log::warn!(
                        "variance decay (qs = {qs}) does not dominate cost growth (qc = {qc}); \
                         the complexity model behind the schedules does not apply"
                    );
                }
            }
            Strategy::Rmlsg => {
                let bound = (3.0 * qs + qc) / (qs + qc);
                if self.eta >= bound {
                    return fail(format!(
                        "randomized schedule needs eta < {bound}, got {}",
                        self.eta
                    ));
                }
            }
        }
        Ok(())
    }

    /// Diminishing step size at iteration `j` (1-based).
    pub fn step_size(&self, j: u64) -> f64 {
        assert!(j >= 1, "iterations are 1-based");
        self.tau0 / (j as f64 + self.alpha)
    }

    /// Level cap at iteration `j` for the multilevel run: the smallest level
    /// whose modeled squared bias stays below the decaying accuracy target.
    pub fn mlsg_levels(&self, j: u64) -> usize {
        assert!(j >= 1, "iterations are 1-based");
        let two_r2 = 2.0 * self.r as f64 + 2.0;
        let value = self.h0.log2()
            - (self.eps0_sq.log2() + (1.0 - self.eta) * (j as f64).log2() - self.c_bias.log2())
                / two_r2;
        snap_ceil_f(value).max(0.0) as usize
    }

    /// Level cap at iteration `j` for the randomized run; its accuracy
    /// target decays like `1/j` independently of `eta`.
    pub fn rmlsg_levels(&self, j: u64) -> usize {
        assert!(j >= 1, "iterations are 1-based");
        let two_r2 = 2.0 * self.r as f64 + 2.0;
        let value = self.h0.log2()
            - (self.eps0_sq.log2() - (j as f64).log2() - self.c_bias.log2()) / two_r2;
        snap_ceil_f(value).max(0.0) as usize
    }

    /// Per-level sample counts at iteration `j` for a run currently capped
    /// at `max_level`, balancing the modeled per-level variances against the
    /// geometric cost growth.
    pub fn mlsg_samples(&self, j: u64, max_level: usize) -> Vec<u64> {
        assert!(j >= 1, "iterations are 1-based");
        let two_r2 = 2 * self.r as i64 + 2;
        let gd = self.cost_exp() as i64;
        let sum_k: f64 = (0..=max_level).map(|k| pow2_half(-(k as i64) * (two_r2 - gd))).sum();
        let base = (1.0 / self.sigma0_sq)
            * (j as f64).powf(self.eta - 2.0)
            * 2.0
            * self.c_var
            * self.h0.powi(two_r2 as i32)
            * sum_k;
        (0..=max_level)
            .map(|l| snap_ceil(base * pow2_half(-(l as i64) * (two_r2 + gd))).max(1))
            .collect()
    }

    /// Level distribution of the randomized estimator up to `level`:
    /// probabilities proportional to `2^(-l (2r+2+gamma*d)/2)`.
    pub fn level_pmf(&self, level: usize) -> Vec<f64> {
        let s = 2.0 * self.r as f64 + 2.0 + self.gamma * self.d as f64;
        if 2.0 * self.r as f64 + 2.0 <= self.gamma * self.d as f64 {
            log::warn!(
                "variance decay (2r+2 = {}) does not dominate cost growth (gamma*d = {}); \
                 the expected work per draw is unbounded as the level cap grows",
                2 * self.r + 2,
                self.gamma * self.d as f64
            );
        }
        let s_round = s.round();
        let raw: Vec<f64> = if (s - s_round).abs() < 1e-9 {
            (0..=level).map(|l| pow2_half(-(l as i64) * s_round as i64)).collect()
        } else {
            (0..=level).map(|l| 2f64.powf(-(l as f64) * s / 2.0)).collect()
        };
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    /// Work added by one multilevel gradient step with sample counts `n`,
    /// counting one solve unit `2^(l*gamma*d)` per sample at its level.
    pub fn mlsg_cost_increment(&self, n: &[u64]) -> f64 {
        let ce = self.cost_exp();
        n.iter()
            .enumerate()
            .map(|(l, &count)| count as f64 * 2f64.powi((l as u32 * ce) as i32))
            .sum()
    }

    /// Work added by one randomized gradient step that drew level `l`.
    pub fn rmlsg_cost_increment(&self, l: usize) -> f64 {
        2f64.powi((l as u32 * self.cost_exp()) as i32)
    }

    /// Expected work of one randomized gradient step capped at `level`.
    pub fn rmlsg_expected_cost_increment(&self, level: usize) -> f64 {
        let pmf = self.level_pmf(level);
        pmf.iter()
            .enumerate()
            .map(|(l, &p)| p * 2f64.powi((l as u32 * self.cost_exp()) as i32))
            .sum()
    }
}

/// `2^(t/2)` with exact powers of two for even `t`.
pub fn pow2_half(t: i64) -> f64 {
    let base = 2f64.powi(t.div_euclid(2) as i32);
    if t.rem_euclid(2) == 1 {
        base * std::f64::consts::SQRT_2
    } else {
        base
    }
}

/// Ceiling that first snaps values within `1e-9` of an integer, so counts
/// like `1.6 * 5` landing at `8 + 4e-16` do not get rounded up to 9.
pub fn snap_ceil(x: f64) -> u64 {
    snap_ceil_f(x).max(0.0) as u64
}

fn snap_ceil_f(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() < 1e-9 {
        nearest
    } else {
        x.ceil()
    }
}
