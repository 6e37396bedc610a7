//! Piecewise-linear finite elements on uniform right-triangle meshes of the
//! unit square: meshing, assembly, sparse SPD solvers, nodal fields with
//! level transfer, and a per-level operator cache.

pub mod assembly;
pub mod field;
pub mod level;
pub mod mesh;
pub mod quad;
pub mod sparse;

pub use assembly::{assemble_mass, assemble_stiffness};
pub use field::{prolong, restrict_nodal, to_level, FeField};
pub use level::{Hierarchy, LevelOps};
pub use mesh::{build_mesh, MeshLevel};
pub use quad::{eval_p1, l2_error_against};
pub use sparse::{pcg, BandedCholesky, SparseSpd, SpdSolver};
