//! Structured triangulations of the unit square.
//!
//! Level `l` covers (0,1)^2 with `n = n0 * 2^l` squares per side, each square
//! split along its bottom-left to top-right diagonal. Node `(i, j)` sits at
//! `(i*h, j*h)` with `h = 1/n` and carries the row-major index `j*(n+1) + i`,
//! so consecutive levels are nested.

/// One uniform triangulation of the nested hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeshLevel {
    pub level: usize,
    /// squares per side; the mesh size is `1/n`
    pub n: usize,
}

/// A triangle of the mesh: vertex node ids plus centroid.
#[derive(Clone, Copy, Debug)]
pub struct Cell {
    pub nodes: [usize; 3],
    pub centroid: (f64, f64),
    /// true for the triangle above the bottom-left to top-right diagonal
    pub upper: bool,
}

/// Builds the mesh of the given level for a hierarchy whose coarsest mesh has
/// `n0` squares per side.
pub fn build_mesh(level: usize, n0: usize) -> MeshLevel {
    assert!(n0 >= 2, "coarsest mesh needs at least 2 squares per side");
    MeshLevel { level, n: n0 << level }
}

impl MeshLevel {
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn side_nodes(&self) -> usize {
        self.n + 1
    }

    pub fn num_nodes(&self) -> usize {
        self.side_nodes() * self.side_nodes()
    }

    pub fn num_interior(&self) -> usize {
        (self.n - 1) * (self.n - 1)
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.side_nodes() + i
    }

    pub fn node_xy(&self, idx: usize) -> (f64, f64) {
        let m = self.side_nodes();
        ((idx % m) as f64 * self.h(), (idx / m) as f64 * self.h())
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let m = self.side_nodes();
        let (i, j) = (idx % m, idx / m);
        i == 0 || i == self.n || j == 0 || j == self.n
    }

    /// Interior nodes in row-major order; this is the unknown numbering of
    /// the Dirichlet solver.
    pub fn interior_nodes(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_interior());
        for j in 1..self.n {
            for i in 1..self.n {
                out.push(self.node_index(i, j));
            }
        }
        out
    }

    /// All `2 n^2` triangles. For the square anchored at `(i, j)` the lower
    /// triangle is `((i,j), (i+1,j), (i+1,j+1))` and the upper one
    /// `((i,j), (i+1,j+1), (i,j+1))`.
    pub fn cells(&self) -> Vec<Cell> {
        let h = self.h();
        let mut out = Vec::with_capacity(2 * self.n * self.n);
        for j in 0..self.n {
            for i in 0..self.n {
                let a = self.node_index(i, j);
                let b = self.node_index(i + 1, j);
                let c = self.node_index(i + 1, j + 1);
                let d = self.node_index(i, j + 1);
                let (x0, y0) = (i as f64 * h, j as f64 * h);
                out.push(Cell {
                    nodes: [a, b, c],
                    centroid: (x0 + 2.0 * h / 3.0, y0 + h / 3.0),
                    upper: false,
                });
                out.push(Cell {
                    nodes: [a, c, d],
                    centroid: (x0 + h / 3.0, y0 + 2.0 * h / 3.0),
                    upper: true,
                });
            }
        }
        out
    }
}
