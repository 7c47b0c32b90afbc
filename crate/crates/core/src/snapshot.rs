//! Local snapshot functions and Galerkin solves in spanned subspaces.
//!
//! A snapshot for fine edge `e_j` of interior coarse edge `E_i` has unit
//! tangential DOF on `e_j`, zero DOFs on the other fine edges of `E_i` and on
//! the boundary of `omega_i`, and solves the homogeneous problem in each of the
//! two coarse blocks. Every coarse block is factored once; the extension of unit
//! data on each of its boundary fine edges is reused by all neighborhoods that
//! contain the block.

use std::collections::HashMap;

use faer::Mat;
use rayon::prelude::*;

use crate::assembly::FineSystem;
use crate::error::{Error, Result};
use crate::grid::{CoarseGrid, EdgeId, Neighborhood};
use crate::linsolve::{norm2, CsrMatrix, SparseCholesky, SpdSolver, DEFAULT_TOL};

/// Snapshot functions of one neighborhood, stored on its interior edges.
#[derive(Debug, Clone)]
pub struct LocalSnapshots {
    /// Neighborhood index (position among interior coarse edges).
    pub neighborhood: usize,
    /// Reduced DOF ids of the neighborhood's interior fine edges, ascending.
    pub support: Vec<usize>,
    /// `support.len() x J` coefficients; column `j` belongs to trace edge `j`.
    pub values: Mat<f64>,
    /// Local rows of the trace edges, in trace order.
    pub trace_rows: Vec<usize>,
}

impl LocalSnapshots {
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    /// Sparse column `(reduced ids, values)` of snapshot `j`, zeros dropped.
    pub fn column(&self, j: usize) -> (Vec<usize>, Vec<f64>) {
        self.combine(&(0..self.len()).map(|k| if k == j { 1.0 } else { 0.0 }).collect::<Vec<_>>())
    }

    /// Sparse fine vector `sum_k coeffs[k] psi_k`.
    pub fn combine(&self, coeffs: &[f64]) -> (Vec<usize>, Vec<f64>) {
        assert_eq!(coeffs.len(), self.len());
        let mut idx = Vec::with_capacity(self.support.len());
        let mut val = Vec::with_capacity(self.support.len());
        for (r, &dof) in self.support.iter().enumerate() {
            let v: f64 = (0..self.len()).map(|k| self.values[(r, k)] * coeffs[k]).sum();
            if v != 0.0 {
                idx.push(dof);
                val.push(v);
            }
        }
        (idx, val)
    }
}

/// Harmonic extensions of unit boundary data inside one coarse block.
struct BlockExtensions {
    interior: Vec<EdgeId>,
    /// boundary fine edge -> values on `interior`
    by_edge: HashMap<EdgeId, Vec<f64>>,
}

fn block_extensions(
    coarse: &CoarseGrid,
    full: &CsrMatrix,
    block: usize,
    solver: &dyn SpdSolver,
) -> Result<BlockExtensions> {
    let fine = coarse.fine();
    let interior = coarse.block_interior_edges(block);
    // boundary fine edges of the block that lie on interior coarse edges
    let data_edges: Vec<EdgeId> = coarse
        .cell_edges(block)
        .iter()
        .filter(|&&ce| !coarse.is_boundary_edge(ce))
        .flat_map(|&ce| coarse.fine_edges_on(ce))
        .collect();
    debug_assert!(data_edges.iter().all(|&e| !fine.is_boundary_edge(e)));
    let mut by_edge = HashMap::with_capacity(data_edges.len());
    if data_edges.is_empty() {
        return Ok(BlockExtensions { interior, by_edge });
    }
    if interior.is_empty() {
        for &e in &data_edges {
            by_edge.insert(e, Vec::new());
        }
        return Ok(BlockExtensions { interior, by_edge });
    }
    let a_ii = full.select(&interior, &interior);
    let a_ib = full.select(&interior, &data_edges);
    let factor = solver.prepare(&a_ii, DEFAULT_TOL).map_err(|e| {
        Error::NotPositiveDefinite(format!("local block {block} system is singular: {e}"))
    })?;
    let ni = interior.len();
    let mut rhs = Mat::<f64>::zeros(ni, data_edges.len());
    for (r, cols, vals) in (0..ni).map(|r| {
        let (c, v) = a_ib.row(r);
        (r, c, v)
    }) {
        for (&c, &v) in cols.iter().zip(vals) {
            rhs[(r, c)] = -v;
        }
    }
    let sol = factor.solve_many(&rhs)?;
    for (k, &e) in data_edges.iter().enumerate() {
        by_edge.insert(e, (0..ni).map(|r| sol[(r, k)]).collect());
    }
    Ok(BlockExtensions { interior, by_edge })
}

/// Snapshot functions of one neighborhood, built from precomputed block extensions.
fn assemble_local(
    nb: &Neighborhood,
    sys: &FineSystem,
    blocks: &[BlockExtensions],
) -> LocalSnapshots {
    let support: Vec<usize> = nb
        .interior_edges
        .iter()
        .map(|&e| sys.dofs.reduced(e).expect("neighborhood edges are interior"))
        .collect();
    let trace_rows: Vec<usize> = nb
        .trace_edges
        .iter()
        .map(|&e| nb.local_index(e).unwrap())
        .collect();
    let mut values = Mat::<f64>::zeros(support.len(), nb.num_traces());
    for (j, &e) in nb.trace_edges.iter().enumerate() {
        values[(trace_rows[j], j)] = 1.0;
        for &blk in &nb.coarse_cells {
            let ext = &blocks[blk];
            let vals = &ext.by_edge[&e];
            for (k, &ie) in ext.interior.iter().enumerate() {
                values[(nb.local_index(ie).unwrap(), j)] = vals[k];
            }
        }
    }
    LocalSnapshots {
        neighborhood: nb.index,
        support,
        values,
        trace_rows,
    }
}

/// Snapshot functions of a single neighborhood.
pub fn local_snapshot_basis(
    coarse: &CoarseGrid,
    nb: &Neighborhood,
    sys: &FineSystem,
) -> Result<LocalSnapshots> {
    let full = sys.matrices.total();
    let mut blocks: Vec<BlockExtensions> = (0..coarse.num_cells())
        .map(|_| BlockExtensions {
            interior: Vec::new(),
            by_edge: HashMap::new(),
        })
        .collect();
    for &blk in &nb.coarse_cells {
        blocks[blk] = block_extensions(coarse, &full, blk, &SparseCholesky)?;
    }
    Ok(assemble_local(nb, sys, &blocks))
}

/// Direct sum of all local snapshot spaces.
#[derive(Debug, Clone)]
pub struct SnapshotSpace {
    pub neighborhoods: Vec<Neighborhood>,
    pub local: Vec<LocalSnapshots>,
    /// Column offset of each neighborhood block in `basis`.
    pub offsets: Vec<usize>,
    /// Reduced-DOF x dim basis matrix, columns ordered by (edge id, trace index).
    pub basis: CsrMatrix,
}

impl SnapshotSpace {
    pub fn build(coarse: &CoarseGrid, sys: &FineSystem) -> Result<Self> {
        if coarse.fine() != &sys.grid {
            return Err(Error::DimensionMismatch {
                expected: sys.grid.n(),
                found: coarse.fine().n(),
            });
        }
        let full = sys.matrices.total();
        let blocks: Vec<BlockExtensions> = (0..coarse.num_cells())
            .into_par_iter()
            .map(|blk| block_extensions(coarse, &full, blk, &SparseCholesky))
            .collect::<Result<_>>()?;
        let neighborhoods = coarse.neighborhoods();
        let local: Vec<LocalSnapshots> = neighborhoods
            .par_iter()
            .map(|nb| assemble_local(nb, sys, &blocks))
            .collect();
        let mut offsets = Vec::with_capacity(local.len() + 1);
        let mut columns = Vec::new();
        offsets.push(0);
        for ls in &local {
            for j in 0..ls.len() {
                columns.push(ls.column(j));
            }
            offsets.push(columns.len());
        }
        let basis = CsrMatrix::from_columns(sys.num_dofs(), &columns);
        Ok(Self {
            neighborhoods,
            local,
            offsets,
            basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn num_neighborhoods(&self) -> usize {
        self.local.len()
    }

    /// Column range of neighborhood `i` in `basis`.
    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }
}

/// Galerkin solution in the span of a set of columns.
#[derive(Debug, Clone)]
pub struct GalerkinSolution {
    pub coeffs: Vec<f64>,
    /// Reduced fine vector `B c`.
    pub u: Vec<f64>,
}

/// Solves `B^T A B c = B^T F` and returns `u = B c`.
pub fn solve_in_space(
    basis: &CsrMatrix,
    a: &CsrMatrix,
    f: &[f64],
    solver: &dyn SpdSolver,
) -> Result<GalerkinSolution> {
    if basis.nrows() != a.nrows() || f.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: basis.nrows(),
        });
    }
    let bt = basis.transpose();
    let gram = bt.matmul(&a.matmul(basis));
    let rhs = bt.matvec(f);
    let factor = solver.prepare(&gram, DEFAULT_TOL).map_err(|e| match e {
        Error::NotPositiveDefinite(msg) => Error::RankDeficient(format!(
            "Galerkin matrix of dimension {} is not positive definite: {msg}",
            gram.nrows()
        )),
        other => other,
    })?;
    let coeffs = factor.solve(&rhs)?;
    let u = basis.matvec(&coeffs);
    Ok(GalerkinSolution { coeffs, u })
}

/// `max |B^T (F - A u)| / ||F||`, the Galerkin orthogonality defect.
pub fn galerkin_defect(basis: &CsrMatrix, a: &CsrMatrix, f: &[f64], u: &[f64]) -> f64 {
    let au = a.matvec(u);
    let r: Vec<f64> = f.iter().zip(&au).map(|(p, q)| p - q).collect();
    let g = basis.transpose().matvec(&r);
    let fnorm = norm2(f).max(f64::MIN_POSITIVE);
    g.iter().fold(0.0f64, |m, v| m.max(v.abs())) / fnorm
}
