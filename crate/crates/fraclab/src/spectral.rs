//! Full generalized eigendecomposition Kφ = λMφ of the assembled operator,
//! plus the heat semigroup e^{−tL} and the spectral heat kernel.
//!
//! The generalized problem is reduced to a standard symmetric one through the
//! Cholesky factor of the mass matrix and solved densely with cyclic Jacobi
//! sweeps; at desk scale every mode is kept.

use crate::assemble::AssembledOperator;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::fmt::Write as _;
use std::sync::Arc;

/// Nodal values over interior dofs, with an implicit zero boundary trace.
#[derive(Debug, Clone)]
pub struct GridFunction {
    values: DVector<f64>,
    grid: Arc<Grid>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: DVector<f64>) -> Result<Self> {
        if values.len() != grid.n_interior() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_interior(),
                got: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "grid function contains non-finite entries".into(),
            ));
        }
        Ok(Self { values, grid })
    }

    pub fn zero(grid: Arc<Grid>) -> Self {
        let n = grid.n_interior();
        Self {
            values: DVector::zeros(n),
            grid,
        }
    }

    /// Sample a closure at the interior node coordinates.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let n = grid.n_interior();
        let values = DVector::from_fn(n, |k, _| {
            let node = grid.interior_node(k);
            f(&grid.coords(node)[..grid.dimension()])
        });
        Self::new(grid, values)
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.amax()
    }

    pub fn norm_l2(&self) -> f64 {
        self.values.norm()
    }

    /// Nodal values over all grid nodes, zeros on the boundary.
    pub fn embed_with_boundary(&self) -> DVector<f64> {
        let mut full = DVector::zeros(self.grid.n_nodes());
        for k in 0..self.len() {
            full[self.grid.interior_node(k)] = self.values[k];
        }
        full
    }
}

/// All eigenpairs of Kφ = λMφ, ascending, with M-orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    /// Columns are nodal eigenvectors on interior dofs.
    modes: DMatrix<f64>,
    operator: AssembledOperator,
    mass_cholesky: Cholesky<f64, Dyn>,
}

/// Relative off-diagonal target for the Jacobi sweeps.
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 75;

/// Solve the full generalized symmetric eigenproblem of an assembled operator.
pub fn eigendecompose(op: &AssembledOperator) -> Result<SpectralDecomposition> {
    let mass_chol =
        Cholesky::new(op.mass().clone()).ok_or(Error::SingularMass)?;
    let l = mass_chol.l();

    // Standard form: S = L⁻¹ K L⁻ᵀ.
    let mut s = op.stiffness().clone();
    l.solve_lower_triangular_mut(&mut s);
    let mut st = s.transpose();
    l.solve_lower_triangular_mut(&mut st);
    let s = (&st + st.transpose()) * 0.5;

    let (eigenvalues, q) = linalg::symmetric_eigen(&s, JACOBI_TOL, JACOBI_MAX_SWEEPS)?;

    // Back-substitute Φ = L⁻ᵀ Q, restoring M-orthonormality.
    let mut modes = q;
    l.transpose().solve_upper_triangular_mut(&mut modes);
    linalg::normalize_column_signs(&mut modes);

    Ok(SpectralDecomposition {
        eigenvalues,
        modes,
        operator: op.clone(),
        mass_cholesky: mass_chol,
    })
}

impl SpectralDecomposition {
    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Ascending eigenvalues; `eigenvalue(0)` is the principal one.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues[k]
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn operator(&self) -> &AssembledOperator {
        &self.operator
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.operator.grid()
    }

    /// k-th eigenfunction as a grid function.
    pub fn mode(&self, k: usize) -> GridFunction {
        GridFunction {
            values: self.modes.column(k).into_owned(),
            grid: self.grid().clone(),
        }
    }

    fn check_dims(&self, u: &GridFunction) -> Result<()> {
        if u.len() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Modal coefficients u_k = φ_kᵀ M u.
    pub fn project(&self, u: &GridFunction) -> Result<DVector<f64>> {
        self.check_dims(u)?;
        Ok(self.modes.transpose() * (self.operator.mass() * u.values()))
    }

    /// Nodal values from modal coefficients.
    pub fn reconstruct(&self, coeffs: &DVector<f64>) -> Result<GridFunction> {
        if coeffs.len() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                got: coeffs.len(),
            });
        }
        GridFunction::new(self.grid().clone(), &self.modes * coeffs)
    }

    /// Apply the heat semigroup e^{−tL} for t ≥ 0.
    pub fn heat_apply(&self, t: f64, u: &GridFunction) -> Result<GridFunction> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "heat semigroup time must be nonnegative, got {t}"
            )));
        }
        let mut coeffs = self.project(u)?;
        for k in 0..coeffs.len() {
            coeffs[k] *= (-self.eigenvalues[k] * t).exp();
        }
        self.reconstruct(&coeffs)
    }

    /// Heat kernel W_t between interior dofs i and j, summed over all modes.
    pub fn heat_kernel(&self, t: f64, i: usize, j: usize) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "heat kernel requires t > 0, got {t}"
            )));
        }
        let n = self.n_modes();
        if i >= n || j >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: i.max(j),
            });
        }
        let mut acc = 0.0;
        for k in 0..n {
            // Mode product first: the sum is then bitwise symmetric in (i, j).
            acc += (self.modes[(i, k)] * self.modes[(j, k)]) * (-t * self.eigenvalues[k]).exp();
        }
        Ok(acc)
    }

    /// Full heat kernel matrix Φ e^{−tΛ} Φᵀ.
    pub fn heat_kernel_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "heat kernel requires t > 0, got {t}"
            )));
        }
        let decay =
            DVector::from_fn(self.n_modes(), |k, _| (-t * self.eigenvalues[k]).exp());
        Ok(&self.modes * DMatrix::from_diagonal(&decay) * self.modes.transpose())
    }

    /// Modal multiplication by λ^p. Fractional validation lives in
    /// `frac::FracPower`; p = 1 recovers M⁻¹K.
    pub fn apply_power(&self, p: f64, u: &GridFunction) -> Result<GridFunction> {
        let mut coeffs = self.project(u)?;
        for k in 0..coeffs.len() {
            coeffs[k] *= self.eigenvalues[k].powf(p);
        }
        self.reconstruct(&coeffs)
    }

    /// Solve M x = b (used by consistency checks).
    pub fn mass_solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.mass_cholesky.solve(b)
    }

    /// `k,lambda_k` rows, 1-based mode index.
    pub fn spectrum_csv(&self) -> String {
        let mut out = String::from("k,lambda_k\n");
        for k in 0..self.n_modes() {
            let _ = writeln!(out, "{},{}", k + 1, self.eigenvalues[k]);
        }
        out
    }

    /// Matrix of modes, one interior node per row, one mode per column.
    pub fn modes_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.modes.nrows() {
            let row: Vec<String> = (0..self.modes.ncols())
                .map(|k| format!("{}", self.modes[(i, k)]))
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}
