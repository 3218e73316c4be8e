//! Coefficient fields: the symmetric positive definite diffusion matrix A(x)
//! and the scalar potential C(x).

use crate::error::{Error, Result};
use crate::expr::Expr;
use nalgebra::DMatrix;
use std::sync::Arc;

type MatrixFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// x ↦ A(x), an n×n real symmetric positive definite matrix field.
#[derive(Clone)]
pub struct MatrixCoefficient {
    dim: usize,
    f: Arc<MatrixFn>,
}

impl std::fmt::Debug for MatrixCoefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MatrixCoefficient(dim={})", self.dim)
    }
}

impl MatrixCoefficient {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self { dim, f: Arc::new(f) }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, move |_| DMatrix::identity(dim, dim))
    }

    pub fn constant(matrix: DMatrix<f64>) -> Self {
        let dim = matrix.nrows();
        Self::new(dim, move |_| matrix.clone())
    }

    /// Scalar multiple of the identity, varying over the domain.
    pub fn isotropic(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(dim, move |x| DMatrix::identity(dim, dim) * f(x))
    }

    /// Diagonal field defined by one expression per axis.
    pub fn diagonal_exprs(exprs: Vec<Expr>) -> Self {
        let dim = exprs.len();
        Self::new(dim, move |p| {
            let x = p[0];
            let y = if p.len() > 1 { p[1] } else { 0.0 };
            DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                dim,
                exprs.iter().map(|e| e.eval(x, y)),
            ))
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Raw sample without validity checks.
    pub fn sample(&self, x: &[f64]) -> DMatrix<f64> {
        (self.f)(x)
    }

    /// Sample and verify symmetry and positive definiteness, naming the
    /// offending point on failure.
    pub fn sample_checked(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.sample(x);
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: m.nrows(),
            });
        }
        let scale = m.amax().max(1e-300);
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::CoefficientViolation {
                location: x.to_vec(),
                reason: "non-finite entry".into(),
            });
        }
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::CoefficientViolation {
                        location: x.to_vec(),
                        reason: format!(
                            "not symmetric: A[{i}][{j}] = {} vs A[{j}][{i}] = {}",
                            m[(i, j)],
                            m[(j, i)]
                        ),
                    });
                }
            }
        }
        let min_eig = min_eigenvalue_symmetric(&m);
        if !(min_eig > 0.0) {
            return Err(Error::CoefficientViolation {
                location: x.to_vec(),
                reason: format!("not positive definite: min eigenvalue {min_eig}"),
            });
        }
        Ok(m)
    }
}

/// Smallest eigenvalue of a (small) symmetric matrix.
pub fn min_eigenvalue_symmetric(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        1 => m[(0, 0)],
        2 => {
            let (a, b, d) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
            let mean = 0.5 * (a + d);
            let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            mean - radius
        }
        _ => {
            let sym = (m + m.transpose()) * 0.5;
            sym.symmetric_eigenvalues().min()
        }
    }
}

/// x ↦ C(x), a real scalar field.
#[derive(Clone)]
pub struct ScalarCoefficient {
    f: Arc<ScalarFn>,
}

impl std::fmt::Debug for ScalarCoefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ScalarCoefficient")
    }
}

impl ScalarCoefficient {
    pub fn new(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    pub fn from_expr(expr: Expr) -> Self {
        Self::new(move |p| expr.eval(p[0], if p.len() > 1 { p[1] } else { 0.0 }))
    }

    /// This coefficient shifted by a constant (used by calibration).
    pub fn shifted(&self, offset: f64) -> Self {
        let inner = self.f.clone();
        Self::new(move |x| inner(x) + offset)
    }

    pub fn sample(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn sample_checked(&self, x: &[f64]) -> Result<f64> {
        let v = self.sample(x);
        if !v.is_finite() {
            return Err(Error::CoefficientViolation {
                location: x.to_vec(),
                reason: format!("scalar coefficient not finite: {v}"),
            });
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_is_accepted() {
        let a = MatrixCoefficient::identity(2);
        let m = a.sample_checked(&[0.3, 0.7]).unwrap();
        assert_relative_eq!(m[(0, 0)], 1.0);
        assert_relative_eq!(m[(0, 1)], 0.0);
    }

    #[test]
    fn asymmetric_sample_is_named() {
        let a = MatrixCoefficient::new(2, |_| {
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])
        });
        match a.sample_checked(&[0.25]) {
            Err(Error::CoefficientViolation { location, reason }) => {
                assert_eq!(location, vec![0.25]);
                assert!(reason.contains("not symmetric"));
            }
            other => panic!("expected coefficient violation, got {other:?}"),
        }
    }

    #[test]
    fn indefinite_sample_rejected() {
        let a = MatrixCoefficient::new(2, |_| {
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0])
        });
        assert!(matches!(
            a.sample_checked(&[0.0]),
            Err(Error::CoefficientViolation { .. })
        ));
    }

    #[test]
    fn min_eig_2x2_closed_form() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_relative_eq!(min_eigenvalue_symmetric(&m), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn scalar_expr_and_shift() {
        let c = ScalarCoefficient::from_expr(Expr::parse("sin(x)").unwrap());
        assert_relative_eq!(c.sample(&[1.0]), 1f64.sin());
        let shifted = c.shifted(2.0);
        assert_relative_eq!(shifted.sample(&[1.0]), 1f64.sin() + 2.0);
    }

    #[test]
    fn scalar_nan_rejected() {
        let c = ScalarCoefficient::new(|x| 1.0 / x[0]);
        assert!(c.sample_checked(&[1.0]).is_ok());
        assert!(c.sample_checked(&[0.0]).is_err());
    }
}
