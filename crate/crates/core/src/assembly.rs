//! Lowest-order edge element assembly for `(a curl u, curl v) + (b u, v) = (f, v)`.
//!
//! Degrees of freedom are tangential edge integrals, `int_e phi . t ds = 1`.
//! On a cell `[x0, x0+h] x [y0, y0+h]` with local order (bottom, top, left, right)
//! the basis functions are
//!
//! ```text
//! bottom = ((1 - s) / h, 0)    top   = (s / h, 0)
//! left   = (0, (1 - r) / h)    right = (0, r / h)
//! ```
//!
//! with `r = (x - x0)/h`, `s = (y - y0)/h`. Their curls are `(+1, -1, -1, +1) / h^2`.

use crate::error::{Error, Result};
use crate::fields::{CellField, VectorCellField};
use crate::grid::{CellId, FineGrid};
use crate::linsolve::CsrMatrix;

pub type ElementMatrix = [[f64; 4]; 4];

/// Curl signs in (bottom, top, left, right) order.
pub const CURL_SIGNS: [f64; 4] = [1.0, -1.0, -1.0, 1.0];

/// Closed-form element curl-curl and mass matrices for cellwise constant `a`, `b`.
pub fn element_matrices(h: f64, a: f64, b: f64) -> (ElementMatrix, ElementMatrix) {
    let mut k = [[0.0; 4]; 4];
    let scale = a / (h * h);
    for i in 0..4 {
        for j in 0..4 {
            k[i][j] = scale * CURL_SIGNS[i] * CURL_SIGNS[j];
        }
    }
    let d = b / 3.0;
    let o = b / 6.0;
    let m = [
        [d, o, 0.0, 0.0],
        [o, d, 0.0, 0.0],
        [0.0, 0.0, d, o],
        [0.0, 0.0, o, d],
    ];
    (k, m)
}

/// Curl-curl and mass matrices over all fine edges.
#[derive(Debug, Clone)]
pub struct GlobalMatrices {
    pub curl: CsrMatrix,
    pub mass: CsrMatrix,
}

impl GlobalMatrices {
    pub fn total(&self) -> CsrMatrix {
        self.curl.add(&self.mass)
    }
}

pub fn assemble_global(grid: &FineGrid, a: &CellField, b: &CellField) -> Result<GlobalMatrices> {
    a.matches(grid)?;
    b.matches(grid)?;
    let h = grid.h();
    let ne = grid.num_edges();
    let mut kt = Vec::with_capacity(16 * grid.num_cells());
    let mut mt = Vec::with_capacity(8 * grid.num_cells());
    for c in 0..grid.num_cells() {
        let (ke, me) = element_matrices(h, a.get(c), b.get(c));
        let edges = grid.cell_edges(c);
        for p in 0..4 {
            for q in 0..4 {
                kt.push((edges[p], edges[q], ke[p][q]));
                if me[p][q] != 0.0 {
                    mt.push((edges[p], edges[q], me[p][q]));
                }
            }
        }
    }
    Ok(GlobalMatrices {
        curl: CsrMatrix::from_triplets(ne, ne, &kt),
        mass: CsrMatrix::from_triplets(ne, ne, &mt),
    })
}

/// Load vector over all fine edges, exact for cellwise constant `f`.
pub fn assemble_load(grid: &FineGrid, f: &VectorCellField) -> Result<Vec<f64>> {
    if f.n() != grid.n() {
        return Err(Error::DimensionMismatch {
            expected: grid.num_cells(),
            found: f.n() * f.n(),
        });
    }
    let half_h = 0.5 * grid.h();
    let mut out = vec![0.0; grid.num_edges()];
    for c in 0..grid.num_cells() {
        let (f1, f2) = f.get(c);
        let [bot, top, left, right] = grid.cell_edges(c);
        out[bot] += half_h * f1;
        out[top] += half_h * f1;
        out[left] += half_h * f2;
        out[right] += half_h * f2;
    }
    Ok(out)
}

/// Map between all fine edges and the interior (retained) edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    full_to_reduced: Vec<Option<usize>>,
    reduced_to_full: Vec<usize>,
}

impl DofMap {
    pub fn interior(grid: &FineGrid) -> Self {
        let mut full_to_reduced = vec![None; grid.num_edges()];
        let mut reduced_to_full = Vec::with_capacity(grid.num_interior_edges());
        for e in 0..grid.num_edges() {
            if !grid.is_boundary_edge(e) {
                full_to_reduced[e] = Some(reduced_to_full.len());
                reduced_to_full.push(e);
            }
        }
        Self {
            full_to_reduced,
            reduced_to_full,
        }
    }

    pub fn num_full(&self) -> usize {
        self.full_to_reduced.len()
    }

    pub fn num_reduced(&self) -> usize {
        self.reduced_to_full.len()
    }

    pub fn reduced(&self, full: usize) -> Option<usize> {
        self.full_to_reduced[full]
    }

    pub fn full(&self, reduced: usize) -> usize {
        self.reduced_to_full[reduced]
    }

    pub fn retained(&self) -> &[usize] {
        &self.reduced_to_full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.reduced_to_full.iter().map(|&e| full[e]).collect()
    }

    /// Full-length vector with zeros on eliminated edges.
    pub fn extend(&self, reduced: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_full()];
        for (k, &e) in self.reduced_to_full.iter().enumerate() {
            out[e] = reduced[k];
        }
        out
    }
}

/// Eliminates tangential boundary edges (`u . t = 0` on the boundary).
pub fn apply_essential_bc(
    a: &CsrMatrix,
    f: &[f64],
    grid: &FineGrid,
) -> (CsrMatrix, Vec<f64>, DofMap) {
    let map = DofMap::interior(grid);
    let keep = map.retained();
    (a.select(keep, keep), map.restrict(f), map)
}

/// Norms of a field restricted to a set of cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    /// `||v||_{H(curl)(a,b)}`.
    pub energy: f64,
    /// `(int a |curl v|^2)^(1/2)`.
    pub curl: f64,
    /// `||v||_{L2(b)}`.
    pub l2b: f64,
    /// `||v||_{L2}`.
    pub l2: f64,
}

/// Energy inner product of two full-length edge vectors over the given cells.
pub fn energy_inner(
    grid: &FineGrid,
    u: &[f64],
    v: &[f64],
    cells: &[CellId],
    a: &CellField,
    b: &CellField,
) -> f64 {
    let h = grid.h();
    cells
        .iter()
        .map(|&c| {
            let (ke, me) = element_matrices(h, a.get(c), b.get(c));
            let e = grid.cell_edges(c);
            let mut s = 0.0;
            for p in 0..4 {
                for q in 0..4 {
                    s += u[e[p]] * (ke[p][q] + me[p][q]) * v[e[q]];
                }
            }
            s
        })
        .sum()
}

pub fn weighted_norms(
    grid: &FineGrid,
    v: &[f64],
    cells: &[CellId],
    a: &CellField,
    b: &CellField,
) -> Norms {
    let h = grid.h();
    let (mut curl2, mut l2b2, mut l22) = (0.0, 0.0, 0.0);
    for &c in cells {
        let e = grid.cell_edges(c);
        let loc = [v[e[0]], v[e[1]], v[e[2]], v[e[3]]];
        let (ke, me) = element_matrices(h, a.get(c), b.get(c));
        let (_, m1) = element_matrices(h, 0.0, 1.0);
        for p in 0..4 {
            for q in 0..4 {
                curl2 += loc[p] * ke[p][q] * loc[q];
                l2b2 += loc[p] * me[p][q] * loc[q];
                l22 += loc[p] * m1[p][q] * loc[q];
            }
        }
    }
    Norms {
        energy: (curl2 + l2b2).max(0.0).sqrt(),
        curl: curl2.max(0.0).sqrt(),
        l2b: l2b2.max(0.0).sqrt(),
        l2: l22.max(0.0).sqrt(),
    }
}

/// Interior nodes in ascending order; columns of [`discrete_gradient`].
pub fn interior_nodes(grid: &FineGrid) -> Vec<usize> {
    (0..grid.num_nodes())
        .filter(|&p| !grid.is_boundary_node(p))
        .collect()
}

/// Edge-by-interior-node matrix with `(G p)_e = p(head) - p(tail)`.
pub fn discrete_gradient(grid: &FineGrid) -> CsrMatrix {
    let nodes = interior_nodes(grid);
    let mut col = vec![usize::MAX; grid.num_nodes()];
    for (k, &p) in nodes.iter().enumerate() {
        col[p] = k;
    }
    let mut trip = Vec::with_capacity(2 * grid.num_edges());
    for e in 0..grid.num_edges() {
        let (tail, head) = grid.edge_nodes(e);
        if col[head] != usize::MAX {
            trip.push((e, col[head], 1.0));
        }
        if col[tail] != usize::MAX {
            trip.push((e, col[tail], -1.0));
        }
    }
    CsrMatrix::from_triplets(grid.num_edges(), nodes.len(), &trip)
}

/// Assembled fine-scale problem with boundary edges eliminated.
#[derive(Debug, Clone)]
pub struct FineSystem {
    pub grid: FineGrid,
    pub a: CellField,
    pub b: CellField,
    pub matrices: GlobalMatrices,
    /// Full-edge load vector.
    pub load_full: Vec<f64>,
    pub dofs: DofMap,
    /// Reduced system matrix on interior edges.
    pub matrix: CsrMatrix,
    /// Reduced load vector.
    pub load: Vec<f64>,
}

impl FineSystem {
    pub fn assemble(
        grid: FineGrid,
        a: CellField,
        b: CellField,
        f: &VectorCellField,
    ) -> Result<Self> {
        a.check_curl_coefficient()?;
        b.check_mass_coefficient()?;
        let matrices = assemble_global(&grid, &a, &b)?;
        let load_full = assemble_load(&grid, f)?;
        let (matrix, load, dofs) = apply_essential_bc(&matrices.total(), &load_full, &grid);
        Ok(Self {
            grid,
            a,
            b,
            matrices,
            load_full,
            dofs,
            matrix,
            load,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.num_reduced()
    }

    /// Squared energy norm of a reduced vector over the whole domain.
    pub fn energy_sq(&self, v: &[f64]) -> f64 {
        self.matrix.quadratic_form(v)
    }

    /// Squared unweighted L2 norm of a reduced vector over the whole domain.
    pub fn l2_sq(&self, v: &[f64]) -> f64 {
        let full = self.dofs.extend(v);
        let all: Vec<CellId> = (0..self.grid.num_cells()).collect();
        let unit = CellField::constant(&self.grid, 1.0);
        weighted_norms(&self.grid, &full, &all, &unit, &unit).l2b.powi(2)
    }

    pub fn norms(&self, v: &[f64], cells: &[CellId]) -> Norms {
        weighted_norms(&self.grid, &self.dofs.extend(v), cells, &self.a, &self.b)
    }
}
