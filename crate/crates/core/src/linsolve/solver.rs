use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::{Mat, Side};

use super::sparse::{dot, norm2, CsrMatrix};
use crate::error::{Error, Result};
use crate::registry::Registry;

/// Backward-error target for every global solve:
/// `||b - A x|| <= tol (||A||_inf ||x|| + ||b||)`.
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_SOLVER: &str = "cholesky";

/// A matrix prepared for repeated SPD solves.
pub trait PreparedSpd: Send + Sync {
    fn dim(&self) -> usize;

    /// Solves for several right-hand sides at once (column-major `n x k`).
    fn solve_many(&self, rhs: &Mat<f64>) -> Result<Mat<f64>>;

    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = self.solve_many(&b)?;
        Ok((0..rhs.len()).map(|i| x[(i, 0)]).collect())
    }
}

/// Strategy for symmetric positive definite sparse systems.
pub trait SpdSolver: Send + Sync {
    fn name(&self) -> &'static str;

    fn prepare(&self, a: &CsrMatrix, tol: f64) -> Result<Box<dyn PreparedSpd>>;
}

/// Fill-reducing sparse Cholesky with residual-checked iterative refinement.
#[derive(Debug, Default, Clone, Copy)]
pub struct SparseCholesky;

struct CholeskyFactor {
    matrix: CsrMatrix,
    norm: f64,
    llt: Option<Llt<usize, f64>>,
    tol: f64,
}

impl SpdSolver for SparseCholesky {
    fn name(&self) -> &'static str {
        "cholesky"
    }

    fn prepare(&self, a: &CsrMatrix, tol: f64) -> Result<Box<dyn PreparedSpd>> {
        check_square(a)?;
        let llt = if a.nrows() == 0 {
            None
        } else {
            let m = a.to_faer()?;
            Some(m.sp_cholesky(Side::Lower).map_err(|e| {
                Error::NotPositiveDefinite(format!(
                    "sparse Cholesky of {}x{} matrix failed: {e:?}",
                    a.nrows(),
                    a.ncols()
                ))
            })?)
        };
        Ok(Box::new(CholeskyFactor {
            matrix: a.clone(),
            norm: inf_norm(a),
            llt,
            tol,
        }))
    }
}

impl PreparedSpd for CholeskyFactor {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn solve_many(&self, rhs: &Mat<f64>) -> Result<Mat<f64>> {
        let n = self.dim();
        if rhs.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rhs.nrows(),
            });
        }
        let Some(llt) = &self.llt else {
            return Ok(Mat::zeros(0, rhs.ncols()));
        };
        let mut x = llt.solve(rhs);
        for j in 0..rhs.ncols() {
            let b: Vec<f64> = (0..n).map(|i| rhs[(i, j)]).collect();
            let bn = norm2(&b);
            if bn == 0.0 {
                for i in 0..n {
                    x[(i, j)] = 0.0;
                }
                continue;
            }
            let mut xj: Vec<f64> = (0..n).map(|i| x[(i, j)]).collect();
            let mut rel = f64::INFINITY;
            for _ in 0..4 {
                let ax = self.matrix.matvec(&xj);
                let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
                rel = backward_error(self.norm, &xj, &r, bn);
                if rel <= self.tol {
                    break;
                }
                let rm = Mat::from_fn(n, 1, |i, _| r[i]);
                let dx = llt.solve(&rm);
                for i in 0..n {
                    xj[i] += dx[(i, 0)];
                }
            }
            if rel > self.tol {
                let ax = self.matrix.matvec(&xj);
                let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
                rel = backward_error(self.norm, &xj, &r, bn);
                if rel > self.tol {
                    return Err(Error::NoConvergence {
                        iterations: 4,
                        residual: rel,
                    });
                }
            }
            for i in 0..n {
                x[(i, j)] = xj[i];
            }
        }
        Ok(x)
    }
}

/// Conjugate gradients with diagonal (Jacobi) preconditioning.
#[derive(Debug, Clone, Copy)]
pub struct JacobiPcg {
    pub max_iter_factor: usize,
}

impl Default for JacobiPcg {
    fn default() -> Self {
        Self { max_iter_factor: 10 }
    }
}

struct PcgOperator {
    matrix: CsrMatrix,
    norm: f64,
    inv_diag: Vec<f64>,
    tol: f64,
    max_iter: usize,
}

impl SpdSolver for JacobiPcg {
    fn name(&self) -> &'static str {
        "pcg"
    }

    fn prepare(&self, a: &CsrMatrix, tol: f64) -> Result<Box<dyn PreparedSpd>> {
        check_square(a)?;
        let diag = a.diagonal();
        if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::NotPositiveDefinite(format!(
                "non-positive diagonal entry {} at row {i}",
                diag[i]
            )));
        }
        Ok(Box::new(PcgOperator {
            matrix: a.clone(),
            norm: inf_norm(a),
            inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
            tol,
            max_iter: self.max_iter_factor * a.nrows().max(10),
        }))
    }
}

impl PcgOperator {
    fn solve_one(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let bn = norm2(b);
        let mut x = vec![0.0; n];
        if bn == 0.0 {
            return Ok(x);
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.inv_diag).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for it in 0..self.max_iter {
            let ap = self.matrix.matvec(&p);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::NotPositiveDefinite(format!(
                    "CG found non-positive curvature {pap:e} at iteration {it}"
                )));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if backward_error(self.norm, &x, &r, bn) <= self.tol {
                // confirm against the true residual
                let ax = self.matrix.matvec(&x);
                let true_r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
                if backward_error(self.norm, &x, &true_r, bn) <= self.tol {
                    return Ok(x);
                }
                r = true_r;
            }
            z = r.iter().zip(&self.inv_diag).map(|(a, d)| a * d).collect();
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::NoConvergence {
            iterations: self.max_iter,
            residual: backward_error(self.norm, &x, &r, bn),
        })
    }
}

impl PreparedSpd for PcgOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn solve_many(&self, rhs: &Mat<f64>) -> Result<Mat<f64>> {
        let n = self.dim();
        if rhs.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rhs.nrows(),
            });
        }
        let mut out = Mat::zeros(n, rhs.ncols());
        for j in 0..rhs.ncols() {
            let b: Vec<f64> = (0..n).map(|i| rhs[(i, j)]).collect();
            let x = self.solve_one(&b)?;
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        Ok(out)
    }
}

fn inf_norm(a: &CsrMatrix) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Normwise backward error of `x` with residual `r`.
fn backward_error(a_norm: f64, x: &[f64], r: &[f64], b_norm: f64) -> f64 {
    norm2(r) / (a_norm * norm2(x) + b_norm)
}

fn check_square(a: &CsrMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    Ok(())
}

/// Built-in SPD solvers keyed by name.
pub fn solver_registry() -> Registry<dyn SpdSolver> {
    let mut reg: Registry<dyn SpdSolver> = Registry::new("linear solver");
    reg.register("cholesky", || Box::new(SparseCholesky));
    reg.register("pcg", || Box::new(JacobiPcg::default()));
    reg
}

/// One-shot SPD solve with the default direct solver.
pub fn solve_spd(a: &CsrMatrix, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    SparseCholesky.prepare(a, tol)?.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> (CsrMatrix, Mat<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Mat::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut s = &b * b.transpose();
        for i in 0..n {
            s[(i, i)] += 0.5;
        }
        let trip: Vec<_> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, s[(i, j)]))
            .collect();
        (CsrMatrix::from_triplets(n, n, &trip), s)
    }

    /// Dense oracle: Gaussian elimination with partial pivoting.
    fn gauss_solve(a: &Mat<f64>, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| a[(i, j)]).chain([b[i]]).collect())
            .collect();
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| m[x][k].abs().total_cmp(&m[y][k].abs())).unwrap();
            m.swap(k, p);
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                for j in k..=n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
            x[i] = (m[i][n] - s) / m[i][i];
        }
        x
    }

    #[test]
    fn identity_and_zero_rhs() {
        let reg = solver_registry();
        for name in reg.names() {
            let s = reg.create(name).unwrap();
            let p = s.prepare(&CsrMatrix::identity(4), DEFAULT_TOL).unwrap();
            assert_eq!(p.solve(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
            assert_eq!(p.solve(&[0.0; 4]).unwrap(), vec![0.0; 4]);
        }
    }

    #[test]
    fn random_spd_matches_dense_inverse() {
        let (a, dense) = random_spd(5, 11);
        let rhs = [1.0, -2.0, 0.5, 3.0, -1.0];
        let want = gauss_solve(&dense, &rhs);
        let reg = solver_registry();
        for name in reg.names() {
            let x = reg.create(name).unwrap().prepare(&a, DEFAULT_TOL).unwrap().solve(&rhs).unwrap();
            for i in 0..5 {
                assert!((x[i] - want[i]).abs() < 1e-9, "{name}: {} vs {}", x[i], want[i]);
            }
        }
        let x = solve_spd(&a, &rhs, DEFAULT_TOL).unwrap();
        let r = a.matvec(&x);
        let res: f64 = r.iter().zip(&rhs).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        assert!(res <= DEFAULT_TOL * norm2(&rhs));
    }

    #[test]
    fn indefinite_is_reported() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(matches!(
            SparseCholesky.prepare(&a, DEFAULT_TOL),
            Err(Error::NotPositiveDefinite(_))
        ));
        assert!(matches!(
            JacobiPcg::default().prepare(&a, DEFAULT_TOL),
            Err(Error::NotPositiveDefinite(_))
        ));
        let b = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        let p = JacobiPcg::default().prepare(&b, DEFAULT_TOL).unwrap();
        assert!(p.solve(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn unknown_solver_name() {
        assert!(matches!(
            solver_registry().create("lu"),
            Err(Error::UnknownName { .. })
        ));
    }
}
