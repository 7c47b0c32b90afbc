//! Residual functionals on snapshot blocks and their dual norms.

use faer::Mat;
use rayon::prelude::*;

use crate::error::Result;
use crate::linsolve::{CsrMatrix, PivotedCholesky, GRAM_DROP_TOL};
use crate::offline::{energy_gram, MultiscaleProblem, MultiscaleSpace};

/// A set of snapshot columns with its factored energy Gram matrix.
///
/// The residual `R(v) = F(v) - a(u, v)` restricted to the span of the columns
/// has dual norm `g^T G^{-1} g` with `g = S^T (F - A u)` and `G = S^T A S`.
#[derive(Debug, Clone)]
pub struct ResidualBlock {
    /// Reduced DOF ids, ascending.
    pub support: Vec<usize>,
    /// `support.len() x k` column values.
    pub values: Mat<f64>,
    pub gram: Mat<f64>,
    chol: PivotedCholesky,
}

impl ResidualBlock {
    pub fn new(support: Vec<usize>, values: Mat<f64>, matrix: &CsrMatrix) -> Result<Self> {
        let gram = energy_gram(&support, values.as_ref(), matrix);
        let chol = PivotedCholesky::new(gram.as_ref(), GRAM_DROP_TOL)?;
        Ok(Self {
            support,
            values,
            gram,
            chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn rank(&self) -> usize {
        self.chol.rank()
    }

    /// `g = S^T r` for a global reduced residual vector `r`.
    pub fn functional(&self, r: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|k| {
                self.support
                    .iter()
                    .enumerate()
                    .map(|(row, &dof)| self.values[(row, k)] * r[dof])
                    .sum()
            })
            .collect()
    }

    /// Squared dual norm of the residual `r` over this block.
    pub fn norm_sq(&self, r: &[f64]) -> f64 {
        self.chol.dual_norm_sq(&self.functional(r)).max(0.0)
    }

    /// Riesz representer `S G^{-1} g` as a sparse reduced vector, and `||R||^2`.
    pub fn representer(&self, r: &[f64]) -> ((Vec<usize>, Vec<f64>), f64) {
        let g = self.functional(r);
        let c = self.chol.solve(&g);
        let norm_sq = g.iter().zip(&c).map(|(p, q)| p * q).sum::<f64>().max(0.0);
        let mut idx = Vec::with_capacity(self.support.len());
        let mut val = Vec::with_capacity(self.support.len());
        for (row, &dof) in self.support.iter().enumerate() {
            let v: f64 = (0..self.dim()).map(|k| self.values[(row, k)] * c[k]).sum();
            if v != 0.0 {
                idx.push(dof);
                val.push(v);
            }
        }
        ((idx, val), norm_sq)
    }
}

/// `F - A u` on reduced DOFs.
pub fn global_residual(matrix: &CsrMatrix, load: &[f64], u: &[f64]) -> Vec<f64> {
    let au = matrix.matvec(u);
    load.iter().zip(&au).map(|(f, a)| f - a).collect()
}

/// Squared dual norm of `F - A u` over a block.
pub fn residual_norm(block: &ResidualBlock, matrix: &CsrMatrix, load: &[f64], u: &[f64]) -> f64 {
    block.norm_sq(&global_residual(matrix, load, u))
}

/// One residual block per neighborhood, built from its snapshot space.
pub fn neighborhood_blocks(problem: &MultiscaleProblem) -> Result<Vec<ResidualBlock>> {
    problem
        .snapshots
        .local
        .par_iter()
        .map(|ls| ResidualBlock::new(ls.support.clone(), ls.values.clone(), &problem.system.matrix))
        .collect()
}

/// Per-neighborhood residual norms and indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub residual_sq: Vec<f64>,
    /// `lambda_{l_i+1}`, `+inf` for exhausted neighborhoods.
    pub next_lambda: Vec<f64>,
    /// `eta_i^2 = ||R_i||^2 / lambda_{l_i+1}`.
    pub indicator_sq: Vec<f64>,
}

impl ResidualReport {
    pub fn compute(
        problem: &MultiscaleProblem,
        blocks: &[ResidualBlock],
        space: &MultiscaleSpace,
        u: &[f64],
    ) -> Self {
        let r = global_residual(&problem.system.matrix, &problem.system.load, u);
        let residual_sq: Vec<f64> = blocks.par_iter().map(|b| b.norm_sq(&r)).collect();
        let next_lambda: Vec<f64> = (0..blocks.len())
            .map(|i| space.next_lambda(problem, i))
            .collect();
        let indicator_sq = residual_sq
            .iter()
            .zip(&next_lambda)
            .map(|(&rs, &lam)| if lam.is_finite() { rs / lam } else { 0.0 })
            .collect();
        Self {
            residual_sq,
            next_lambda,
            indicator_sq,
        }
    }

    pub fn sum_indicator_sq(&self) -> f64 {
        self.indicator_sq.iter().sum()
    }
}
