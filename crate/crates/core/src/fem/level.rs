//! Per-level workspace: mass matrix, interior numbering, inner products,
//! interpolation, and Dirichlet solves; plus a lazily built level cache.

use std::sync::{Arc, Mutex};

use super::assembly::{assemble_mass, assemble_stiffness, interior_map};
use super::mesh::{build_mesh, MeshLevel};
use super::sparse::{SparseSpd, SpdSolver};
use crate::error::Result;

/// Everything about one level that does not depend on the sampled
/// coefficient: the mesh, its mass matrix, and the interior numbering.
pub struct LevelOps {
    pub mesh: MeshLevel,
    mass: SparseSpd,
    interior: Vec<usize>,
}

impl LevelOps {
    pub fn new(mesh: MeshLevel) -> Self {
        let mass = assemble_mass(&mesh);
        let interior = mesh.interior_nodes();
        LevelOps { mesh, mass, interior }
    }

    /// Nodal interpolant of a function.
    pub fn interpolate<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.mesh.num_nodes())
            .map(|k| {
                let (x, y) = self.mesh.node_xy(k);
                f(x, y)
            })
            .collect()
    }

    pub fn mass_apply(&self, v: &[f64]) -> Vec<f64> {
        self.mass.matvec(v)
    }

    /// L2 inner product of two nodal fields at this level.
    pub fn l2_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let mv = self.mass.matvec(v);
        u.iter().zip(&mv).map(|(a, b)| a * b).sum()
    }

    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        self.l2_inner(v, v).max(0.0).sqrt()
    }

    /// Assembles and factorizes the interior stiffness operator for one
    /// coefficient realization.
    pub fn factorize<F: Fn(f64, f64) -> f64>(&self, coeff: F) -> SpdSolver {
        SpdSolver::new(assemble_stiffness(&self.mesh, coeff))
    }

    /// Solves the homogeneous Dirichlet problem `A x = load` given the full
    /// assembled right-hand side (typically `mass * data`); returns a full
    /// nodal vector with zero boundary values.
    pub fn solve_dirichlet(&self, solver: &SpdSolver, load: &[f64]) -> Result<Vec<f64>> {
        debug_assert_eq!(load.len(), self.mesh.num_nodes());
        let rhs: Vec<f64> = self.interior.iter().map(|&k| load[k]).collect();
        let x = solver.solve(&rhs)?;
        let mut full = vec![0.0; self.mesh.num_nodes()];
        for (value, &node) in x.into_iter().zip(&self.interior) {
            full[node] = value;
        }
        Ok(full)
    }

    /// Interior unknown index for each node, where defined.
    pub fn interior_index(&self) -> Vec<Option<usize>> {
        interior_map(&self.mesh)
    }
}

/// Lazily built cache of `LevelOps` sharing one coarsest mesh.
pub struct Hierarchy {
    n0: usize,
    levels: Mutex<Vec<Option<Arc<LevelOps>>>>,
}

impl Hierarchy {
    pub fn new(n0: usize) -> Self {
        assert!(n0 >= 2, "coarsest mesh needs at least 2 squares per side");
        Hierarchy { n0, levels: Mutex::new(Vec::new()) }
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn h0(&self) -> f64 {
        1.0 / self.n0 as f64
    }

    pub fn ops(&self, level: usize) -> Arc<LevelOps> {
        let mut cache = self.levels.lock().unwrap();
        if cache.len() <= level {
            cache.resize_with(level + 1, || None);
        }
        cache[level]
            .get_or_insert_with(|| Arc::new(LevelOps::new(build_mesh(level, self.n0))))
            .clone()
    }
}
