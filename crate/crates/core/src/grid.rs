//! Uniform fine and coarse meshes of the unit square with lowest-order edge numbering.
//!
//! Edge layout (fine and coarse alike): all x-oriented edges first, row-major by
//! `(row, col)`, followed by all y-oriented edges, row-major by `(row, col)`.
//! For a grid with `n` cells per axis the x-edge `(i, j)` (column `i`, horizontal
//! line `j`) has id `j * n + i` and the y-edge `(i, j)` (vertical line `i`, row `j`)
//! has id `n * (n + 1) + j * (n + 1) + i`. Every x-edge points in `+x` and every
//! y-edge in `+y`.

use crate::error::{Error, Result};

/// Index of a fine cell, `j * n + i` for column `i` and row `j`.
pub type CellId = usize;
/// Global fine edge id following the module-level layout.
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    X,
    Y,
}

/// Uniform `n x n` mesh of `[0,1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FineGrid {
    n: usize,
}

impl FineGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMesh(format!(
                "fine grid needs at least 2 cells per axis, got {n}"
            )));
        }
        Ok(Self { n })
    }

    /// Cells per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn num_cells(&self) -> usize {
        self.n * self.n
    }

    pub fn num_x_edges(&self) -> usize {
        self.n * (self.n + 1)
    }

    pub fn num_y_edges(&self) -> usize {
        (self.n + 1) * self.n
    }

    pub fn num_edges(&self) -> usize {
        self.num_x_edges() + self.num_y_edges()
    }

    pub fn num_boundary_edges(&self) -> usize {
        4 * self.n
    }

    pub fn num_interior_edges(&self) -> usize {
        self.num_edges() - self.num_boundary_edges()
    }

    pub fn num_nodes(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    pub fn cell(&self, i: usize, j: usize) -> CellId {
        debug_assert!(i < self.n && j < self.n);
        j * self.n + i
    }

    /// `(column, row)` of a cell.
    pub fn cell_coords(&self, c: CellId) -> (usize, usize) {
        (c % self.n, c / self.n)
    }

    pub fn cell_midpoint(&self, c: CellId) -> (f64, f64) {
        let (i, j) = self.cell_coords(c);
        let h = self.h();
        ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
    }

    pub fn x_edge(&self, i: usize, j: usize) -> EdgeId {
        debug_assert!(i < self.n && j <= self.n);
        j * self.n + i
    }

    pub fn y_edge(&self, i: usize, j: usize) -> EdgeId {
        debug_assert!(i <= self.n && j < self.n);
        self.num_x_edges() + j * (self.n + 1) + i
    }

    /// Orientation and `(i, j)` index pair of an edge.
    pub fn edge_coords(&self, e: EdgeId) -> (Orientation, usize, usize) {
        let nx = self.num_x_edges();
        if e < nx {
            (Orientation::X, e % self.n, e / self.n)
        } else {
            let k = e - nx;
            (Orientation::Y, k % (self.n + 1), k / (self.n + 1))
        }
    }

    /// Edges of a cell in `(bottom, top, left, right)` order.
    pub fn cell_edges(&self, c: CellId) -> [EdgeId; 4] {
        let (i, j) = self.cell_coords(c);
        [
            self.x_edge(i, j),
            self.x_edge(i, j + 1),
            self.y_edge(i, j),
            self.y_edge(i + 1, j),
        ]
    }

    pub fn is_boundary_edge(&self, e: EdgeId) -> bool {
        match self.edge_coords(e) {
            (Orientation::X, _, j) => j == 0 || j == self.n,
            (Orientation::Y, i, _) => i == 0 || i == self.n,
        }
    }

    /// Cells sharing an edge (one for boundary edges, two otherwise).
    pub fn edge_cells(&self, e: EdgeId) -> Vec<CellId> {
        let mut out = Vec::with_capacity(2);
        match self.edge_coords(e) {
            (Orientation::X, i, j) => {
                if j > 0 {
                    out.push(self.cell(i, j - 1));
                }
                if j < self.n {
                    out.push(self.cell(i, j));
                }
            }
            (Orientation::Y, i, j) => {
                if i > 0 {
                    out.push(self.cell(i - 1, j));
                }
                if i < self.n {
                    out.push(self.cell(i, j));
                }
            }
        }
        out
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    pub fn node_coords(&self, p: usize) -> (usize, usize) {
        (p % (self.n + 1), p / (self.n + 1))
    }

    pub fn is_boundary_node(&self, p: usize) -> bool {
        let (i, j) = self.node_coords(p);
        i == 0 || j == 0 || i == self.n || j == self.n
    }

    /// `(tail, head)` node ids of an edge under the global orientation.
    pub fn edge_nodes(&self, e: EdgeId) -> (usize, usize) {
        match self.edge_coords(e) {
            (Orientation::X, i, j) => (self.node(i, j), self.node(i + 1, j)),
            (Orientation::Y, i, j) => (self.node(i, j), self.node(i, j + 1)),
        }
    }
}

/// Uniform `N x N` coarse mesh whose cells are `r x r` blocks of fine cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseGrid {
    fine: FineGrid,
    n: usize,
    ratio: usize,
    interior_edges: Vec<usize>,
}

impl CoarseGrid {
    pub fn new(fine: FineGrid, n: usize) -> Result<Self> {
        if n == 0 || fine.n() % n != 0 {
            return Err(Error::IncompatibleGrids {
                fine: fine.n(),
                coarse: n,
            });
        }
        let mut grid = Self {
            fine,
            n,
            ratio: fine.n() / n,
            interior_edges: Vec::new(),
        };
        grid.interior_edges = (0..grid.num_edges())
            .filter(|&e| !grid.is_boundary_edge(e))
            .collect();
        Ok(grid)
    }

    pub fn fine(&self) -> &FineGrid {
        &self.fine
    }

    /// Coarse cells per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Fine cells per coarse cell along one axis.
    pub fn ratio(&self) -> usize {
        self.ratio
    }

    pub fn num_cells(&self) -> usize {
        self.n * self.n
    }

    pub fn num_edges(&self) -> usize {
        2 * self.n * (self.n + 1)
    }

    pub fn x_edge(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn y_edge(&self, i: usize, j: usize) -> usize {
        self.n * (self.n + 1) + j * (self.n + 1) + i
    }

    pub fn edge_coords(&self, e: usize) -> (Orientation, usize, usize) {
        let nx = self.n * (self.n + 1);
        if e < nx {
            (Orientation::X, e % self.n, e / self.n)
        } else {
            let k = e - nx;
            (Orientation::Y, k % (self.n + 1), k / (self.n + 1))
        }
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        match self.edge_coords(e) {
            (Orientation::X, _, j) => j == 0 || j == self.n,
            (Orientation::Y, i, _) => i == 0 || i == self.n,
        }
    }

    /// Interior coarse edge ids in ascending order; position in this list is
    /// the neighborhood index.
    pub fn interior_edges(&self) -> &[usize] {
        &self.interior_edges
    }

    pub fn num_interior_edges(&self) -> usize {
        self.interior_edges.len()
    }

    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn cell_coords(&self, c: usize) -> (usize, usize) {
        (c % self.n, c / self.n)
    }

    /// Fine cells of a coarse cell, row-major.
    pub fn block_cells(&self, c: usize) -> Vec<CellId> {
        let (ci, cj) = self.cell_coords(c);
        let r = self.ratio;
        let mut out = Vec::with_capacity(r * r);
        for j in cj * r..(cj + 1) * r {
            for i in ci * r..(ci + 1) * r {
                out.push(self.fine.cell(i, j));
            }
        }
        out
    }

    /// Fine edges strictly inside a coarse cell, ascending.
    pub fn block_interior_edges(&self, c: usize) -> Vec<EdgeId> {
        let (ci, cj) = self.cell_coords(c);
        let r = self.ratio;
        let (i0, j0) = (ci * r, cj * r);
        let mut out = Vec::with_capacity(2 * r * (r - 1));
        for j in j0 + 1..j0 + r {
            for i in i0..i0 + r {
                out.push(self.fine.x_edge(i, j));
            }
        }
        for j in j0..j0 + r {
            for i in i0 + 1..i0 + r {
                out.push(self.fine.y_edge(i, j));
            }
        }
        out
    }

    /// Fine edges lying on a coarse edge, ordered by increasing coordinate along it.
    pub fn fine_edges_on(&self, coarse_edge: usize) -> Vec<EdgeId> {
        let r = self.ratio;
        match self.edge_coords(coarse_edge) {
            (Orientation::X, i, j) => (0..r).map(|k| self.fine.x_edge(i * r + k, j * r)).collect(),
            (Orientation::Y, i, j) => (0..r).map(|k| self.fine.y_edge(i * r, j * r + k)).collect(),
        }
    }

    /// Coarse cells adjacent to a coarse edge (below/left first).
    pub fn edge_cells(&self, e: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2);
        match self.edge_coords(e) {
            (Orientation::X, i, j) => {
                if j > 0 {
                    out.push(self.cell(i, j - 1));
                }
                if j < self.n {
                    out.push(self.cell(i, j));
                }
            }
            (Orientation::Y, i, j) => {
                if i > 0 {
                    out.push(self.cell(i - 1, j));
                }
                if i < self.n {
                    out.push(self.cell(i, j));
                }
            }
        }
        out
    }

    /// The four coarse edges of a coarse cell in `(bottom, top, left, right)` order.
    pub fn cell_edges(&self, c: usize) -> [usize; 4] {
        let (i, j) = self.cell_coords(c);
        [
            self.x_edge(i, j),
            self.x_edge(i, j + 1),
            self.y_edge(i, j),
            self.y_edge(i + 1, j),
        ]
    }

    /// Position of a coarse edge among the interior edges.
    pub fn neighborhood_index(&self, coarse_edge: usize) -> Option<usize> {
        self.interior_edges.binary_search(&coarse_edge).ok()
    }

    pub fn neighborhood(&self, coarse_edge: usize) -> Result<Neighborhood> {
        if coarse_edge >= self.num_edges() {
            return Err(Error::NotInterior(coarse_edge));
        }
        let index = self
            .neighborhood_index(coarse_edge)
            .ok_or(Error::NotInterior(coarse_edge))?;
        let cells = self.edge_cells(coarse_edge);
        let coarse_cells = [cells[0], cells[1]];
        let mut fine_cells: Vec<CellId> = coarse_cells
            .iter()
            .flat_map(|&c| self.block_cells(c))
            .collect();
        fine_cells.sort_unstable();
        let trace_edges = self.fine_edges_on(coarse_edge);
        let mut interior_edges: Vec<EdgeId> = coarse_cells
            .iter()
            .flat_map(|&c| self.block_interior_edges(c))
            .chain(trace_edges.iter().copied())
            .collect();
        interior_edges.sort_unstable();
        Ok(Neighborhood {
            edge_id: coarse_edge,
            index,
            coarse_cells,
            fine_cells,
            interior_edges,
            trace_edges,
        })
    }

    /// All neighborhoods, in interior-edge order.
    pub fn neighborhoods(&self) -> Vec<Neighborhood> {
        self.interior_edges
            .iter()
            .map(|&e| self.neighborhood(e).expect("interior edge"))
            .collect()
    }
}

/// Union of the two coarse cells sharing an interior coarse edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    /// Coarse edge id.
    pub edge_id: usize,
    /// Position among interior coarse edges.
    pub index: usize,
    pub coarse_cells: [usize; 2],
    pub fine_cells: Vec<CellId>,
    /// Fine edges not on the neighborhood boundary, ascending; local index `k`
    /// maps to `interior_edges[k]`.
    pub interior_edges: Vec<EdgeId>,
    /// Fine edges on the coarse edge, ordered along it.
    pub trace_edges: Vec<EdgeId>,
}

impl Neighborhood {
    pub fn num_traces(&self) -> usize {
        self.trace_edges.len()
    }

    pub fn local_index(&self, e: EdgeId) -> Option<usize> {
        self.interior_edges.binary_search(&e).ok()
    }
}
