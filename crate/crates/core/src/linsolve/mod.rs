//! Linear algebra kernels: sparse SPD solves, dense generalized eigenproblems,
//! and pivoted factorizations for near-singular Gram matrices.

mod dense;
mod solver;
mod sparse;

pub use dense::{dense_matvec, gen_eig_sym, EigenPairs, PivotedCholesky};
pub use solver::{
    solve_spd, solver_registry, PreparedSpd, SparseCholesky, SpdSolver, JacobiPcg,
    DEFAULT_SOLVER, DEFAULT_TOL,
};
pub use sparse::{dot, norm2, CsrMatrix};

/// Relative drop tolerance for pivoted Gram factorizations.
pub const GRAM_DROP_TOL: f64 = 1e-12;
