//! Piecewise-linear finite element assembly of the stiffness form
//! ∫ A∇u·∇v and the consistent mass form ∫ uv, restricted to interior
//! degrees of freedom (boundary rows and columns are eliminated).
//!
//! Variable A is sampled once per element at the centroid; mass integrals
//! are exact for P1 products. The C-weighted mass matrix interpolates C
//! linearly over each element and integrates the resulting cubic exactly.

use crate::coeff::{MatrixCoefficient, ScalarCoefficient};
use crate::error::{Error, Result};
use crate::grid::Grid;
use nalgebra::DMatrix;
use std::fmt::Write as _;
use std::sync::Arc;

/// Stiffness and mass matrices of −div(A∇) on the interior dof space.
#[derive(Debug, Clone)]
pub struct AssembledOperator {
    stiffness: DMatrix<f64>,
    mass: DMatrix<f64>,
    grid: Arc<Grid>,
    coefficient: MatrixCoefficient,
}

impl AssembledOperator {
    /// Wrap externally built matrices (synthetic spectra, tests).
    pub fn from_parts(
        stiffness: DMatrix<f64>,
        mass: DMatrix<f64>,
        grid: Arc<Grid>,
        coefficient: MatrixCoefficient,
    ) -> Result<Self> {
        if stiffness.nrows() != stiffness.ncols() || stiffness.nrows() != mass.nrows() {
            return Err(Error::DimensionMismatch {
                expected: stiffness.nrows(),
                got: mass.nrows(),
            });
        }
        Ok(Self {
            stiffness,
            mass,
            grid,
            coefficient,
        })
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coefficient(&self) -> &MatrixCoefficient {
        &self.coefficient
    }

    pub fn n_dof(&self) -> usize {
        self.stiffness.nrows()
    }
}

/// Assemble stiffness and mass for −div(A∇) with Dirichlet elimination.
pub fn assemble(grid: &Arc<Grid>, a: &MatrixCoefficient) -> Result<AssembledOperator> {
    if a.dim() != grid.dimension() {
        return Err(Error::DimensionMismatch {
            expected: grid.dimension(),
            got: a.dim(),
        });
    }
    let n = grid.n_interior();
    let mut k = DMatrix::zeros(n, n);
    let mut m = DMatrix::zeros(n, n);

    for e in 0..grid.n_elements() {
        let geo = grid.element_geometry(e);
        let point = &geo.centroid[..grid.dimension()];
        let a_mat = a.sample_checked(point)?;
        let nv = geo.nodes.len();

        for (li, &ni) in geo.nodes.iter().enumerate() {
            let Some(ii) = grid.interior_index(ni) else {
                continue;
            };
            for (lj, &nj) in geo.nodes.iter().enumerate() {
                let Some(jj) = grid.interior_index(nj) else {
                    continue;
                };
                // a_mat ∇ψ_lj · ∇ψ_li, constant over the element
                let mut flux = 0.0;
                for r in 0..grid.dimension() {
                    for c in 0..grid.dimension() {
                        flux += geo.gradients[li][r] * a_mat[(r, c)] * geo.gradients[lj][c];
                    }
                }
                k[(ii, jj)] += flux * geo.measure;
                m[(ii, jj)] += geo.measure * p1_mass_entry(nv, li, lj);
            }
        }
    }
    // Symmetrize away rounding skew.
    k = (&k + k.transpose()) * 0.5;
    m = (&m + m.transpose()) * 0.5;
    Ok(AssembledOperator {
        stiffness: k,
        mass: m,
        grid: grid.clone(),
        coefficient: a.clone(),
    })
}

/// Exact P1 mass entries, as a fraction of the element measure.
fn p1_mass_entry(n_vertices: usize, i: usize, j: usize) -> f64 {
    match n_vertices {
        // segment: h/6 [[2,1],[1,2]]
        2 => {
            if i == j {
                1.0 / 3.0
            } else {
                1.0 / 6.0
            }
        }
        // triangle: A/12 [[2,1,1],[1,2,1],[1,1,2]]
        3 => {
            if i == j {
                1.0 / 6.0
            } else {
                1.0 / 12.0
            }
        }
        _ => unreachable!(),
    }
}

/// Mass matrix weighted by a scalar field C, on interior dofs.
///
/// C is interpolated linearly from its nodal values; the element integrals
/// ∫ C ψ_a ψ_b are then exact (cubic polynomials).
pub fn weighted_mass_matrix(grid: &Grid, c: &ScalarCoefficient) -> Result<DMatrix<f64>> {
    let n = grid.n_interior();
    let mut out = DMatrix::zeros(n, n);
    let nodal: Vec<f64> = (0..grid.n_nodes())
        .map(|i| c.sample_checked(&grid.coords(i)[..grid.dimension()]))
        .collect::<Result<_>>()?;

    for e in 0..grid.n_elements() {
        let geo = grid.element_geometry(e);
        let nv = geo.nodes.len();
        for (li, &ni) in geo.nodes.iter().enumerate() {
            let Some(ii) = grid.interior_index(ni) else {
                continue;
            };
            for (lj, &nj) in geo.nodes.iter().enumerate() {
                let Some(jj) = grid.interior_index(nj) else {
                    continue;
                };
                let mut entry = 0.0;
                for (ld, &nd) in geo.nodes.iter().enumerate() {
                    entry += nodal[nd] * p1_cubic_entry(nv, li, lj, ld);
                }
                out[(ii, jj)] += entry * geo.measure;
            }
        }
    }
    out = (&out + out.transpose()) * 0.5;
    Ok(out)
}

/// Exact ∫ ψ_i ψ_j ψ_d over the reference element, as a fraction of measure.
fn p1_cubic_entry(n_vertices: usize, i: usize, j: usize, d: usize) -> f64 {
    match n_vertices {
        // On a segment of length h: ∫ N0^p N1^q = h p! q! / (p+q+1)!
        2 => {
            let powers = (i == 0) as u32 + (j == 0) as u32 + (d == 0) as u32;
            match powers {
                0 | 3 => 1.0 / 4.0,  // N^3
                _ => 1.0 / 12.0,     // N^2 N'
            }
        }
        // On a triangle of area A: ∫ N1^a N2^b N3^c = 2A a! b! c! / (a+b+c+2)!
        3 => {
            if i == j && j == d {
                1.0 / 10.0 // N^3
            } else if i == j || j == d || i == d {
                1.0 / 30.0 // N^2 N'
            } else {
                1.0 / 60.0 // N N' N''
            }
        }
        _ => unreachable!(),
    }
}

/// Interior matrix in CSV coordinate format: `i,j,value`, nonzeros only.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::from("i,j,value\n");
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{i},{j},{v}");
            }
        }
    }
    out
}
