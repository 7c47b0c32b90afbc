//! Local spectral problems, offline basis selection and the multiscale solve.
//!
//! In each neighborhood the eigenproblem `a_i(v, w) = lambda s_i(v, w)` is posed
//! on the snapshot space with
//!
//! * `a_i(v, w) = int_{E_i} b (v.t)(w.t)`, diagonal in the snapshot basis because
//!   snapshot traces are Kronecker deltas on the fine edges of `E_i`;
//! * `s_i(v, w) = (1/H) (v, w)_{H(curl)(a,b;omega_i)}`.
//!
//! Eigenvalues are kept in ascending order and the first `l_i` eigenvectors span
//! the offline space of the neighborhood.

use std::io::Write;

use faer::{Mat, MatRef};
use rayon::prelude::*;

use crate::assembly::FineSystem;
use crate::error::{Error, Result};
use crate::grid::{CoarseGrid, Neighborhood};
use crate::linsolve::{gen_eig_sym, CsrMatrix, EigenPairs, SpdSolver};
use crate::snapshot::{solve_in_space, GalerkinSolution, LocalSnapshots, SnapshotSpace};

/// Spectral data of one neighborhood.
#[derive(Debug, Clone)]
pub struct SpectralEntry {
    pub neighborhood: usize,
    /// Diagonal of `a_i` in the snapshot basis.
    pub edge_mass: Vec<f64>,
    /// `s_i` in the snapshot basis.
    pub scaled_gram: Mat<f64>,
    /// Ascending eigenpairs; eigenvectors are snapshot coordinates.
    pub pairs: EigenPairs,
    /// Eigenvectors mapped to fine coefficients on the snapshot support.
    pub modes: Mat<f64>,
}

impl SpectralEntry {
    pub fn num_modes(&self) -> usize {
        self.pairs.len()
    }

    /// `lambda_{k+1}` in one-based numbering, i.e. `values[k]`; `+inf` past the end.
    pub fn lambda(&self, k: usize) -> f64 {
        self.pairs.values.get(k).copied().unwrap_or(f64::INFINITY)
    }

    /// Dense `a_i` matrix.
    pub fn edge_mass_matrix(&self) -> Mat<f64> {
        let n = self.edge_mass.len();
        Mat::from_fn(n, n, |i, j| if i == j { self.edge_mass[i] } else { 0.0 })
    }
}

/// Energy Gram matrix `S^T A S` of local snapshots, using the reduced global matrix.
pub fn snapshot_energy_gram(local: &LocalSnapshots, matrix: &CsrMatrix) -> Mat<f64> {
    energy_gram(&local.support, local.values.as_ref(), matrix)
}

/// `V^T A[support, support] V` for columns `V` living on `support`, symmetrized.
///
/// Exact as a region-restricted energy form whenever `support` only contains
/// edges whose adjacent cells all lie in the region.
pub fn energy_gram(support: &[usize], values: MatRef<'_, f64>, matrix: &CsrMatrix) -> Mat<f64> {
    let a_loc = matrix.select(support, support);
    let n = support.len();
    let j = values.ncols();
    let mut a_v = Mat::<f64>::zeros(n, j);
    for r in 0..n {
        let (cols, vals) = a_loc.row(r);
        for k in 0..j {
            a_v[(r, k)] = cols.iter().zip(vals).map(|(&c, &v)| v * values[(c, k)]).sum();
        }
    }
    let g = values.transpose() * &a_v;
    Mat::from_fn(j, j, |p, q| 0.5 * (g[(p, q)] + g[(q, p)]))
}

/// Solves the local spectral problem of one neighborhood.
pub fn local_spectral(
    nb: &Neighborhood,
    local: &LocalSnapshots,
    sys: &FineSystem,
    coarse_h: f64,
) -> Result<SpectralEntry> {
    let h = sys.grid.h();
    let edge_mass: Vec<f64> = nb
        .trace_edges
        .iter()
        .map(|&e| {
            let cells = sys.grid.edge_cells(e);
            let avg = cells.iter().map(|&c| sys.b.get(c)).sum::<f64>() / cells.len() as f64;
            avg / h
        })
        .collect();
    let gram = snapshot_energy_gram(local, &sys.matrix);
    let scaled_gram = Mat::from_fn(gram.nrows(), gram.ncols(), |p, q| gram[(p, q)] / coarse_h);
    let n = edge_mass.len();
    let a = Mat::from_fn(n, n, |i, j| if i == j { edge_mass[i] } else { 0.0 });
    let pairs = gen_eig_sym(a.as_ref(), scaled_gram.as_ref())?;
    let modes = &local.values * &pairs.vectors;
    Ok(SpectralEntry {
        neighborhood: nb.index,
        edge_mass,
        scaled_gram,
        pairs,
        modes,
    })
}

/// First `l` offline functions of a neighborhood as sparse reduced vectors.
pub fn select_offline(
    entry: &SpectralEntry,
    local: &LocalSnapshots,
    l: usize,
) -> Result<Vec<(Vec<usize>, Vec<f64>)>> {
    if l > entry.num_modes() {
        return Err(Error::OutOfRange {
            what: "l_i",
            value: l.to_string(),
            range: format!("[0, {}]", entry.num_modes()),
        });
    }
    Ok((0..l).map(|k| mode_column(entry, local, k)).collect())
}

fn mode_column(entry: &SpectralEntry, local: &LocalSnapshots, k: usize) -> (Vec<usize>, Vec<f64>) {
    let mut idx = Vec::with_capacity(local.support.len());
    let mut val = Vec::with_capacity(local.support.len());
    for (r, &dof) in local.support.iter().enumerate() {
        let v = entry.modes[(r, k)];
        if v != 0.0 {
            idx.push(dof);
            val.push(v);
        }
    }
    (idx, val)
}

/// Everything precomputed offline: fine system, snapshots, spectra and `u_snap`.
pub struct MultiscaleProblem {
    pub coarse: CoarseGrid,
    pub system: FineSystem,
    pub snapshots: SnapshotSpace,
    pub spectra: Vec<SpectralEntry>,
    pub u_snap: Vec<f64>,
    pub solver: Box<dyn SpdSolver>,
}

impl MultiscaleProblem {
    pub fn build(coarse: CoarseGrid, system: FineSystem, solver: Box<dyn SpdSolver>) -> Result<Self> {
        let snapshots = SnapshotSpace::build(&coarse, &system)?;
        let h = coarse.h();
        let spectra = snapshots
            .neighborhoods
            .par_iter()
            .zip(&snapshots.local)
            .map(|(nb, ls)| local_spectral(nb, ls, &system, h))
            .collect::<Result<Vec<_>>>()?;
        let u_snap = solve_in_space(&snapshots.basis, &system.matrix, &system.load, solver.as_ref())?.u;
        Ok(Self {
            coarse,
            system,
            snapshots,
            spectra,
            u_snap,
            solver,
        })
    }

    pub fn num_neighborhoods(&self) -> usize {
        self.spectra.len()
    }

    /// Energy norm over the whole domain of a reduced vector.
    pub fn energy(&self, v: &[f64]) -> f64 {
        self.system.energy_sq(v).max(0.0).sqrt()
    }

    /// Sparse columns of the multiscale space, offline blocks first.
    pub fn columns(&self, space: &MultiscaleSpace) -> Vec<(Vec<usize>, Vec<f64>)> {
        let mut cols = Vec::with_capacity(space.dim());
        for (i, &l) in space.counts.iter().enumerate() {
            for k in 0..l {
                cols.push(mode_column(&self.spectra[i], &self.snapshots.local[i], k));
            }
        }
        cols.extend(space.online.iter().cloned());
        cols
    }

    pub fn basis(&self, space: &MultiscaleSpace) -> CsrMatrix {
        CsrMatrix::from_columns(self.system.num_dofs(), &self.columns(space))
    }

    pub fn solve(&self, space: &MultiscaleSpace) -> Result<GalerkinSolution> {
        solve_gmsfem(self, space)
    }

    /// Writes `edge_id,lambda_1,...` per neighborhood.
    pub fn write_eigenvalues(&self, mut w: impl Write) -> std::io::Result<()> {
        let max = self.spectra.iter().map(|s| s.num_modes()).max().unwrap_or(0);
        let header: Vec<String> = (1..=max).map(|k| format!("lambda_{k}")).collect();
        writeln!(w, "edge_id,{}", header.join(","))?;
        for (nb, s) in self.snapshots.neighborhoods.iter().zip(&self.spectra) {
            let vals: Vec<String> = s.pairs.values.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{},{}", nb.edge_id, vals.join(","))?;
        }
        Ok(())
    }
}

/// Current multiscale space: offline counts per neighborhood plus online functions.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleSpace {
    pub counts: Vec<usize>,
    pub online: Vec<(Vec<usize>, Vec<f64>)>,
}

impl MultiscaleSpace {
    /// `l_i = min(initial, J_i)` everywhere.
    pub fn uniform(problem: &MultiscaleProblem, initial: usize) -> Self {
        Self {
            counts: problem
                .spectra
                .iter()
                .map(|s| initial.min(s.num_modes()))
                .collect(),
            online: Vec::new(),
        }
    }

    /// All eigenfunctions in every neighborhood.
    pub fn full(problem: &MultiscaleProblem) -> Self {
        Self::uniform(problem, usize::MAX)
    }

    pub fn num_offline(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.num_offline() + self.online.len()
    }

    /// `lambda_{l_i + 1}` of neighborhood `i`, `+inf` when exhausted.
    pub fn next_lambda(&self, problem: &MultiscaleProblem, i: usize) -> f64 {
        problem.spectra[i].lambda(self.counts[i])
    }
}

/// Galerkin solve in the current multiscale space.
pub fn solve_gmsfem(problem: &MultiscaleProblem, space: &MultiscaleSpace) -> Result<GalerkinSolution> {
    if space.dim() == 0 {
        return Err(Error::Config("multiscale space is empty".into()));
    }
    let basis = problem.basis(space);
    solve_in_space(
        &basis,
        &problem.system.matrix,
        &problem.system.load,
        problem.solver.as_ref(),
    )
}
