//! The control problem: a linear elliptic state equation with a random
//! diffusion coefficient, a quadratic tracking objective with Tikhonov
//! regularization, and the sample-wise gradient, adjoint, and Hessian
//! actions built from one factorization per coefficient realization.

use std::sync::Arc;

use crate::error::Result;
use crate::fem::{to_level, FeField, Hierarchy, LevelOps, SpdSolver};
use crate::rand_field::{eval_coeff, SampleVector};

pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Deterministic problem data: regularization weight, source term, and
/// tracking target.
#[derive(Clone)]
pub struct ProblemData {
    pub beta: f64,
    pub g: ScalarFn,
    pub z_d: ScalarFn,
}

impl ProblemData {
    /// The benchmark configuration used throughout: unit source, product-of-
    /// sines target, and a small regularization weight.
    pub fn benchmark() -> Self {
        ProblemData {
            beta: 1e-4,
            g: Arc::new(|_, _| 1.0),
            z_d: Arc::new(|x, y| {
                (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin()
            }),
        }
    }
}

/// The problem bound to a mesh hierarchy.
pub struct Problem {
    pub data: ProblemData,
    pub hierarchy: Hierarchy,
}

impl Problem {
    pub fn new(data: ProblemData, n0: usize) -> Self {
        Problem { data, hierarchy: Hierarchy::new(n0) }
    }

    pub fn benchmark(n0: usize) -> Self {
        Problem::new(ProblemData::benchmark(), n0)
    }

    pub fn zero_control(&self, level: usize) -> FeField {
        FeField::zeros(level, self.hierarchy.n0())
    }

    /// Assembles and factorizes the state operator for one coefficient
    /// realization at one level.
    pub fn op(&self, level: usize, s: &SampleVector) -> SampleOperator {
        let ops = self.hierarchy.ops(level);
        let solver = ops.factorize(|x, y| eval_coeff(x, y, s));
        let g_nodal = ops.interpolate(|x, y| (self.data.g)(x, y));
        let zd_nodal = ops.interpolate(|x, y| (self.data.z_d)(x, y));
        SampleOperator { ops, solver, beta: self.data.beta, g_nodal, zd_nodal }
    }

    /// State for one realization, with the control brought to `level`.
    pub fn solve_primal(&self, level: usize, s: &SampleVector, u: &FeField) -> Result<FeField> {
        let op = self.op(level, s);
        let ul = to_level(u, level);
        Ok(FeField { level, coeffs: op.state(&ul.coeffs)? })
    }

    /// Adjoint state for one realization.
    pub fn solve_adjoint(&self, level: usize, s: &SampleVector, u: &FeField) -> Result<FeField> {
        let op = self.op(level, s);
        let ul = to_level(u, level);
        Ok(FeField { level, coeffs: op.p_of(&ul.coeffs)? })
    }

    /// Gradient of the sample objective at `level`.
    pub fn grad_f(&self, level: usize, s: &SampleVector, u: &FeField) -> Result<FeField> {
        let op = self.op(level, s);
        let ul = to_level(u, level);
        Ok(FeField { level, coeffs: op.gradient(&ul.coeffs)? })
    }

    /// Value of the sample objective at `level`.
    pub fn eval_f(&self, level: usize, s: &SampleVector, u: &FeField) -> Result<f64> {
        let op = self.op(level, s);
        let ul = to_level(u, level);
        op.loss(&ul.coeffs)
    }

    /// Action of the quadrature-averaged objective Hessian on `v`, with one
    /// factorization per quadrature node. For repeated products (e.g. inside
    /// an iteration) build the operators once and use `normal_action`.
    pub fn hessian_action(
        &self,
        level: usize,
        quad: &[(SampleVector, f64)],
        v: &FeField,
    ) -> Result<FeField> {
        let vl = to_level(v, level);
        let mut out = vec![0.0; vl.coeffs.len()];
        for (s, w) in quad {
            let op = self.op(level, s);
            let hv = op.normal_action(&vl.coeffs)?;
            for (acc, h) in out.iter_mut().zip(&hv) {
                *acc += w * h;
            }
        }
        for (acc, b) in out.iter_mut().zip(&vl.coeffs) {
            *acc += self.data.beta * b;
        }
        Ok(FeField { level, coeffs: out })
    }
}

/// Factorized state operator for one coefficient realization at one level,
/// with the problem data interpolated onto that level's nodes. All vectors
/// are full nodal vectors; solves impose the homogeneous Dirichlet condition.
pub struct SampleOperator {
    pub ops: Arc<LevelOps>,
    solver: SpdSolver,
    beta: f64,
    g_nodal: Vec<f64>,
    zd_nodal: Vec<f64>,
}

impl SampleOperator {
    /// Solves the state equation with the nodal field `w` as data, i.e.
    /// applies the solution map to `w`: `A y = M w`, zero on the boundary.
    pub fn solve_mass(&self, w: &[f64]) -> Result<Vec<f64>> {
        let load = self.ops.mass_apply(w);
        self.ops.solve_dirichlet(&self.solver, &load)
    }

    /// State `y` for the control `u`: data is `g + u`.
    pub fn state(&self, u: &[f64]) -> Result<Vec<f64>> {
        let w: Vec<f64> = u.iter().zip(&self.g_nodal).map(|(a, b)| a + b).collect();
        self.solve_mass(&w)
    }

    /// Adjoint state for a given state: data is the tracking misfit.
    pub fn adjoint_for(&self, y: &[f64]) -> Result<Vec<f64>> {
        let w: Vec<f64> = y.iter().zip(&self.zd_nodal).map(|(a, b)| a - b).collect();
        self.solve_mass(&w)
    }

    /// Adjoint state as a function of the control.
    pub fn p_of(&self, u: &[f64]) -> Result<Vec<f64>> {
        let y = self.state(u)?;
        self.adjoint_for(&y)
    }

    /// Gradient of the sample objective in the mesh-independent inner
    /// product: `beta * u + p`.
    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let p = self.p_of(u)?;
        Ok(u.iter().zip(&p).map(|(a, b)| self.beta * a + b).collect())
    }

    /// Sample objective: half the squared tracking misfit plus the scaled
    /// squared control norm, both in the level's mass inner product.
    pub fn loss(&self, u: &[f64]) -> Result<f64> {
        let y = self.state(u)?;
        let misfit: Vec<f64> = y.iter().zip(&self.zd_nodal).map(|(a, b)| a - b).collect();
        let track = self.ops.l2_inner(&misfit, &misfit);
        let reg = self.ops.l2_inner(u, u);
        Ok(0.5 * track + 0.5 * self.beta * reg)
    }

    /// Data-term Hessian action: the solution map applied twice (the map is
    /// self-adjoint in the mass inner product).
    pub fn normal_action(&self, v: &[f64]) -> Result<Vec<f64>> {
        let sv = self.solve_mass(v)?;
        self.solve_mass(&sv)
    }
}
