//! Small dense kernels: generalized symmetric eigenproblems and pivoted Cholesky.

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Eigenpairs of `A v = lambda S v`, ascending, with `S`-orthonormal columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Solves `L x = b` in place for lower-triangular `L`.
fn forward_subst(l: MatRef<'_, f64>, b: &mut [f64]) {
    let n = b.len();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves `L^T x = b` in place for lower-triangular `L`.
fn backward_subst_transposed(l: MatRef<'_, f64>, b: &mut [f64]) {
    let n = b.len();
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[(k, i)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

fn column(m: MatRef<'_, f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

fn check_square(a: MatRef<'_, f64>, s: MatRef<'_, f64>) -> Result<usize> {
    let n = a.nrows();
    for m in [a, s] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if m.nrows() != n { m.nrows() } else { m.ncols() },
            });
        }
    }
    Ok(n)
}

/// Dense generalized symmetric eigenproblem `A v = lambda S v` with `S` SPD.
///
/// Reduced to the standard problem `L^-1 A L^-T y = lambda y` with `S = L L^T`.
/// Eigenvectors are `S`-orthonormal and signed so their first coefficient of
/// significant magnitude is positive.
pub fn gen_eig_sym(a: MatRef<'_, f64>, s: MatRef<'_, f64>) -> Result<EigenPairs> {
    let n = check_square(a, s)?;
    if n == 0 {
        return Ok(EigenPairs {
            values: Vec::new(),
            vectors: Mat::zeros(0, 0),
        });
    }
    let llt = s
        .llt(Side::Lower)
        .map_err(|e| Error::NotPositiveDefinite(format!("S-Cholesky failed: {e:?}")))?;
    let l = llt.L();

    // X = L^-1 A, then C = L^-1 X^T = L^-1 A L^-T
    let mut x = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        let mut col = column(a, j);
        forward_subst(l, &mut col);
        for i in 0..n {
            x[(i, j)] = col[i];
        }
    }
    let mut c = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        let mut col: Vec<f64> = (0..n).map(|i| x[(j, i)]).collect();
        forward_subst(l, &mut col);
        for i in 0..n {
            c[(i, j)] = col[i];
        }
    }
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let eig = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NotPositiveDefinite(format!("eigensolver failed: {e:?}")))?;

    let diag = eig.S();
    let u = eig.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| diag[p].total_cmp(&diag[q]));

    let mut values = Vec::with_capacity(n);
    let mut vectors = Mat::<f64>::zeros(n, n);
    for (k, &p) in order.iter().enumerate() {
        values.push(diag[p]);
        let mut v = column(u, p);
        backward_subst_transposed(l, &mut v);
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let sign = v
            .iter()
            .find(|x| x.abs() > 1e-10 * scale)
            .map(|x| x.signum())
            .unwrap_or(1.0);
        for i in 0..n {
            vectors[(i, k)] = sign * v[i];
        }
    }
    Ok(EigenPairs { values, vectors })
}

/// Symmetric pivoted Cholesky that stops once the largest remaining pivot falls
/// below `drop_tol * max_diag`. Dropped directions are excluded from solves.
#[derive(Debug, Clone)]
pub struct PivotedCholesky {
    n: usize,
    /// Retained original indices, in pivot order.
    pivots: Vec<usize>,
    /// Lower-triangular factor of `G[pivots, pivots]`, column-major by pivot order.
    factor: Mat<f64>,
}

impl PivotedCholesky {
    pub fn new(g: MatRef<'_, f64>, drop_tol: f64) -> Result<Self> {
        let n = g.nrows();
        if g.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: g.ncols(),
            });
        }
        let max_diag = (0..n).fold(0.0f64, |m, i| m.max(g[(i, i)]));
        let threshold = drop_tol * max_diag;
        // working copy in original indexing
        let mut w = g.to_owned();
        let mut remaining: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        while !remaining.is_empty() {
            let (pos, &p) = remaining
                .iter()
                .enumerate()
                .max_by(|a, b| w[(*a.1, *a.1)].total_cmp(&w[(*b.1, *b.1)]).then(b.0.cmp(&a.0)))
                .unwrap();
            let d = w[(p, p)];
            if !(d > threshold) || d <= 0.0 {
                break;
            }
            remaining.remove(pos);
            let piv = d.sqrt();
            let mut col = vec![0.0; n];
            col[p] = piv;
            for &i in &remaining {
                col[i] = w[(i, p)] / piv;
            }
            for &i in &remaining {
                for &j in &remaining {
                    w[(i, j)] -= col[i] * col[j];
                }
            }
            pivots.push(p);
            cols.push(col);
        }
        let k = pivots.len();
        let factor = Mat::from_fn(k, k, |i, j| if i >= j { cols[j][pivots[i]] } else { 0.0 });
        Ok(Self { n, pivots, factor })
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn retained(&self) -> &[usize] {
        &self.pivots
    }

    /// Solves `G[R,R] c_R = g_R` on the retained set `R`; other entries are zero.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let mut y: Vec<f64> = self.pivots.iter().map(|&p| rhs[p]).collect();
        forward_subst(self.factor.as_ref(), &mut y);
        backward_subst_transposed(self.factor.as_ref(), &mut y);
        let mut out = vec![0.0; self.n];
        for (k, &p) in self.pivots.iter().enumerate() {
            out[p] = y[k];
        }
        out
    }

    /// `g^T G^+ g` over the retained directions.
    pub fn dual_norm_sq(&self, rhs: &[f64]) -> f64 {
        let mut y: Vec<f64> = self.pivots.iter().map(|&p| rhs[p]).collect();
        forward_subst(self.factor.as_ref(), &mut y);
        y.iter().map(|v| v * v).sum()
    }
}

/// `y = M x` for a dense matrix.
pub fn dense_matvec(m: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(m.ncols(), x.len());
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
        let b = Mat::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut s = &b * b.transpose();
        for i in 0..n {
            s[(i, i)] += n as f64 * 0.1;
        }
        s
    }

    fn random_psd(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
        let b = Mat::<f64>::from_fn(n, rank, |_, _| rng.gen_range(-1.0..1.0));
        &b * b.transpose()
    }

    fn max_abs(m: MatRef<'_, f64>) -> f64 {
        let mut v: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                v = v.max(m[(i, j)].abs());
            }
        }
        v
    }

    #[test]
    fn equal_matrices_give_unit_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_spd(6, &mut rng);
        let e = gen_eig_sym(s.as_ref(), s.as_ref()).unwrap();
        for l in &e.values {
            assert!((l - 1.0).abs() < 1e-12);
        }
        let z = Mat::<f64>::zeros(6, 6);
        let e = gen_eig_sym(z.as_ref(), s.as_ref()).unwrap();
        assert!(e.values.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn diagonal_case() {
        let a = Mat::from_fn(2, 2, |i, j| if i == j { [1.0, 4.0][i] } else { 0.0 });
        let s = Mat::<f64>::identity(2, 2);
        let e = gen_eig_sym(a.as_ref(), s.as_ref()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 4.0).abs() < 1e-14);
        assert!((e.vectors[(0, 0)] - 1.0).abs() < 1e-14 && e.vectors[(1, 0)].abs() < 1e-14);
        assert!((e.vectors[(1, 1)] - 1.0).abs() < 1e-14 && e.vectors[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn s_not_spd_is_rejected() {
        let a = Mat::<f64>::identity(2, 2);
        let s = Mat::from_fn(2, 2, |i, j| if i == j { [1.0, -1.0][i] } else { 0.0 });
        assert!(matches!(
            gen_eig_sym(a.as_ref(), s.as_ref()),
            Err(Error::NotPositiveDefinite(_))
        ));
        let bad = Mat::<f64>::identity(3, 3);
        assert!(gen_eig_sym(a.as_ref(), bad.as_ref()).is_err());
    }

    #[test]
    fn residuals_orthonormality_rayleigh_and_completeness() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [1usize, 3, 8, 20] {
            let a = random_psd(n, n.max(2) - 1, &mut rng);
            let s = random_spd(n, &mut rng);
            let e = gen_eig_sym(a.as_ref(), s.as_ref()).unwrap();
            let na = max_abs(a.as_ref());
            let ns = max_abs(s.as_ref());
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            for k in 0..n {
                let v = column(e.vectors.as_ref(), k);
                let av = dense_matvec(a.as_ref(), &v);
                let sv = dense_matvec(s.as_ref(), &v);
                let lam = e.values[k];
                assert!(lam >= -1e-12 * na);
                let res = av
                    .iter()
                    .zip(&sv)
                    .map(|(x, y)| (x - lam * y).abs())
                    .fold(0.0, f64::max);
                assert!(res <= 1e-8 * (na + lam.abs() * ns), "residual {res}");
            }
            let vt_s_v = e.vectors.transpose() * &s * &e.vectors;
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((vt_s_v[(i, j)] - want).abs() < 1e-10);
                }
            }
            // A = S V diag(lambda) V^T S
            let sv = &s * &e.vectors;
            let lam = Mat::from_fn(n, n, |i, j| if i == j { e.values[i] } else { 0.0 });
            let rec = &sv * &lam * sv.transpose();
            let diff = &rec - &a;
            assert!(max_abs(diff.as_ref()) <= 1e-8 * na.max(1.0));
            // Rayleigh quotient bounds
            for _ in 0..100 {
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let q = dense_matvec(a.as_ref(), &v).iter().zip(&v).map(|(x, y)| x * y).sum::<f64>()
                    / dense_matvec(s.as_ref(), &v).iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
                assert!(q >= e.values[0] - 1e-10 && q <= e.values[n - 1] + 1e-10);
            }
        }
    }

    #[test]
    fn sign_convention_first_significant_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_psd(5, 5, &mut rng);
        let s = random_spd(5, &mut rng);
        let e = gen_eig_sym(a.as_ref(), s.as_ref()).unwrap();
        for k in 0..5 {
            let v = column(e.vectors.as_ref(), k);
            let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let first = v.iter().find(|x| x.abs() > 1e-10 * scale).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn pivoted_cholesky_full_rank_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_spd(7, &mut rng);
        let f = PivotedCholesky::new(g.as_ref(), 1e-12).unwrap();
        assert_eq!(f.rank(), 7);
        let b: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = f.solve(&b);
        let r = dense_matvec(g.as_ref(), &x);
        for i in 0..7 {
            assert!((r[i] - b[i]).abs() < 1e-10);
        }
        let dn: f64 = x.iter().zip(&b).map(|(p, q)| p * q).sum();
        assert!((f.dual_norm_sq(&b) - dn).abs() < 1e-10 * dn.abs().max(1.0));
    }

    #[test]
    fn pivoted_cholesky_drops_dependent_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = random_psd(6, 3, &mut rng);
        let f = PivotedCholesky::new(g.as_ref(), 1e-12).unwrap();
        assert_eq!(f.rank(), 3);
        // rhs in the range of G: solution reproduces it
        let y: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = dense_matvec(g.as_ref(), &y);
        let x = f.solve(&b);
        let r = dense_matvec(g.as_ref(), &x);
        for i in 0..6 {
            assert!((r[i] - b[i]).abs() < 1e-8);
        }
        let dropped: Vec<usize> = (0..6).filter(|i| !f.retained().contains(i)).collect();
        assert!(dropped.iter().all(|&i| x[i] == 0.0));
    }
}
