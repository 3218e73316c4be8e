//! Dense symmetric eigensolver (cyclic Jacobi) and a block-tridiagonal
//! Cholesky solver for the tensor systems of the cylinder extension.

use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Frobenius norm of the strictly off-diagonal part.
pub fn off_diagonal_frobenius(a: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// Eigenvalues and orthonormal eigenvectors of a symmetric matrix by cyclic
/// Jacobi sweeps, run until the off-diagonal Frobenius norm drops below
/// `rel_tol` times the full Frobenius norm.
///
/// Returns eigenpairs sorted ascending; each eigenvector's largest-magnitude
/// component is made positive (first such index on ties).
pub fn symmetric_eigen(
    a: &DMatrix<f64>,
    rel_tol: f64,
    max_sweeps: usize,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let mut a = (a + a.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    if n == 0 {
        return Ok((DVector::zeros(0), v));
    }
    let fro = a.norm().max(1e-300);
    let target = rel_tol * fro;
    let mut achieved = off_diagonal_frobenius(&a);

    let mut sweeps = 0;
    while achieved > target {
        if sweeps >= max_sweeps {
            return Err(Error::ConvergenceFailure {
                residual: achieved,
                target,
                sweeps,
            });
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                // Rotations on already-negligible entries only churn rounding.
                if apq.abs() <= f64::EPSILON * fro * 1e-3 {
                    continue;
                }
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                // Pin the rotated pair to exact symmetry.
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        achieved = off_diagonal_frobenius(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    normalize_column_signs(&mut vectors);
    Ok((eigenvalues, vectors))
}

/// Flip column signs so the largest-magnitude component is positive.
pub fn normalize_column_signs(m: &mut DMatrix<f64>) {
    for j in 0..m.ncols() {
        let mut best = 0usize;
        let mut best_abs = 0.0;
        for i in 0..m.nrows() {
            let v = m[(i, j)].abs();
            if v > best_abs {
                best_abs = v;
                best = i;
            }
        }
        if m[(best, j)] < 0.0 {
            for i in 0..m.nrows() {
                m[(i, j)] = -m[(i, j)];
            }
        }
    }
}

/// Block-tridiagonal SPD solve by block Cholesky elimination.
///
/// Solves the system with diagonal blocks `diag[0..J]` and symmetric coupling
/// `A[j][j+1] = off[j]`, `A[j+1][j] = off[j]`ᵀ, for one right-hand side per
/// block row. All blocks are n×n.
pub fn block_tridiag_solve(
    diag: &[DMatrix<f64>],
    off: &[DMatrix<f64>],
    rhs: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>> {
    let j_blocks = diag.len();
    if off.len() + 1 != j_blocks || rhs.len() != j_blocks {
        return Err(Error::DimensionMismatch {
            expected: j_blocks,
            got: rhs.len(),
        });
    }
    let mut chols: Vec<Cholesky<f64, Dyn>> = Vec::with_capacity(j_blocks);
    let mut reduced_rhs: Vec<DVector<f64>> = Vec::with_capacity(j_blocks);

    let mut schur = diag[0].clone();
    let mut b = rhs[0].clone();
    for j in 0..j_blocks {
        let chol = Cholesky::new(schur.clone()).ok_or_else(|| {
            Error::LinearSolve(format!(
                "block {j} lost positive definiteness (ladder too coarse or weight degenerate)"
            ))
        })?;
        if j + 1 < j_blocks {
            // schur_{j+1} = D_{j+1} − offᵀ S_j⁻¹ off
            let s_inv_off = chol.solve(&off[j]);
            schur = &diag[j + 1] - off[j].transpose() * &s_inv_off;
            let s_inv_b = chol.solve(&b);
            let next_b = &rhs[j + 1] - off[j].transpose() * s_inv_b;
            chols.push(chol);
            reduced_rhs.push(b);
            b = next_b;
        } else {
            chols.push(chol);
            reduced_rhs.push(b.clone());
        }
    }

    let mut x: Vec<DVector<f64>> = vec![DVector::zeros(0); j_blocks];
    x[j_blocks - 1] = chols[j_blocks - 1].solve(&reduced_rhs[j_blocks - 1]);
    for j in (0..j_blocks - 1).rev() {
        let adjusted = &reduced_rhs[j] - &off[j] * &x[j + 1];
        x[j] = chols[j].solve(&adjusted);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_eigen() {
        let (vals, vecs) = symmetric_eigen(&DMatrix::identity(2, 2), 1e-12, 50).unwrap();
        assert_relative_eq!(vals[0], 1.0);
        assert_relative_eq!(vals[1], 1.0);
        let orth = (vecs.transpose() * &vecs - DMatrix::identity(2, 2)).amax();
        assert!(orth < 1e-14);
    }

    #[test]
    fn known_2x2() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = symmetric_eigen(&a, 1e-14, 50).unwrap();
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(vals[1], 3.0, epsilon = 1e-12);
        // residual A v = λ v
        for k in 0..2 {
            let r = &a * vecs.column(k) - vecs.column(k) * vals[k];
            assert!(r.amax() < 1e-12);
        }
    }

    #[test]
    fn random_symmetric_reconstruction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 24;
        let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = (&raw + raw.transpose()) * 0.5;
        let (vals, vecs) = symmetric_eigen(&a, 1e-12, 60).unwrap();
        let rebuilt = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((rebuilt - &a).amax() < 1e-10);
        for k in 1..n {
            assert!(vals[k] >= vals[k - 1]);
        }
    }

    #[test]
    fn sign_convention_is_deterministic() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let (_, vecs) = symmetric_eigen(&a, 1e-14, 10).unwrap();
        assert!(vecs[(0, 0)] > 0.0);
        assert!(vecs[(1, 1)] > 0.0);
    }

    #[test]
    fn convergence_error_reports_residual() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        match symmetric_eigen(&a, 1e-16, 0) {
            Err(Error::ConvergenceFailure { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn block_tridiag_matches_dense_solve() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (nb, n) = (5, 4);
        let mut diag = Vec::new();
        let mut off = Vec::new();
        for _ in 0..nb {
            let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.2..0.2));
            diag.push(&raw * raw.transpose() + DMatrix::identity(n, n) * 2.0);
        }
        for _ in 0..nb - 1 {
            off.push(DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.1..0.1)));
        }
        let rhs: Vec<DVector<f64>> = (0..nb)
            .map(|_| DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)))
            .collect();

        // Dense reference
        let big = nb * n;
        let mut dense = DMatrix::zeros(big, big);
        let mut bvec = DVector::zeros(big);
        for j in 0..nb {
            dense.view_mut((j * n, j * n), (n, n)).copy_from(&diag[j]);
            if j + 1 < nb {
                dense.view_mut((j * n, (j + 1) * n), (n, n)).copy_from(&off[j]);
                dense
                    .view_mut(((j + 1) * n, j * n), (n, n))
                    .copy_from(&off[j].transpose());
            }
            bvec.rows_mut(j * n, n).copy_from(&rhs[j]);
        }
        let xref = dense.lu().solve(&bvec).unwrap();

        let x = block_tridiag_solve(&diag, &off, &rhs).unwrap();
        for j in 0..nb {
            for i in 0..n {
                assert_relative_eq!(x[j][i], xref[j * n + i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn block_tridiag_rejects_indefinite() {
        let diag = vec![DMatrix::from_row_slice(1, 1, &[-1.0])];
        let off: Vec<DMatrix<f64>> = vec![];
        let rhs = vec![DVector::from_row_slice(&[1.0])];
        assert!(matches!(
            block_tridiag_solve(&diag, &off, &rhs),
            Err(Error::LinearSolve(_))
        ));
    }
}
