//! Quadratic functionals on the weighted cylinder and the pointwise
//! algebraic identity they rest on.
//!
//! M(U) = ∫∫ y^a B∇U·∇U − 2s c_s ∫ C U(·,0)², its variation
//! V(U) = M₂(U) − M₁(U), and a residual meter for the identity
//! G(U,v) = Σ y^a B_ij X^i X^j + Σ D_i(U² Y^i) = Σ y^a B_ij D_iU D_jU + (U²/v) Lv
//! with X^i = v D_i(U/v) and Y^i = y^a (B∇v)_i / v.

use crate::assemble::weighted_mass_matrix;
use crate::coeff::{MatrixCoefficient, ScalarCoefficient};
use crate::error::{Error, Result};
use crate::extension::{weighted_energy, ExtensionField, YLadder};
use crate::frac::{frac_schroedinger_spectrum, FracPower, ModalPotential};
use crate::gamma::trace_constant;
use crate::grid::Grid;
use crate::spectral::GridFunction;
use nalgebra::DMatrix;
use serde::Serialize;
use std::sync::Arc;

/// Block coefficient B(x) = [[A(x), 0], [0, 1]] on the cylinder.
#[derive(Debug, Clone)]
pub struct CylinderCoefficient {
    a_block: MatrixCoefficient,
}

impl CylinderCoefficient {
    pub fn new(a_block: MatrixCoefficient) -> Self {
        Self { a_block }
    }

    pub fn a_block(&self) -> &MatrixCoefficient {
        &self.a_block
    }

    /// The full (n+1)×(n+1) block matrix at a point.
    pub fn block_at(&self, x: &[f64]) -> DMatrix<f64> {
        let a = self.a_block.sample(x);
        let n = a.nrows();
        let mut b = DMatrix::zeros(n + 1, n + 1);
        b.view_mut((0, 0), (n, n)).copy_from(&a);
        b[(n, n)] = 1.0;
        b
    }
}

/// Evaluated quadratic functional, exported as JSON.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FunctionalReport {
    /// ∫∫ y^a B∇U·∇U
    pub energy: f64,
    /// 2s c_s ∫ C U(·,0)²
    pub trace_term: f64,
    /// energy − trace_term
    pub total: f64,
    /// Quadrature gap against a coarsened ladder.
    pub error_estimate: f64,
}

/// Evaluate M(U) for one coefficient pair.
pub fn functional_m(
    field: &ExtensionField,
    b: &CylinderCoefficient,
    c: &ScalarCoefficient,
    s: f64,
) -> Result<FunctionalReport> {
    if (field.s() - s).abs() > 1e-14 {
        return Err(Error::InvalidArgument(format!(
            "field extended with s = {} but functional requested for s = {s}",
            field.s()
        )));
    }
    let energy = weighted_energy(field, b.a_block());
    let error_estimate = match coarsened(field) {
        Some(coarse) => (weighted_energy(&coarse, b.a_block()) - energy).abs(),
        None => 0.0,
    };
    let u0 = field.trace()?;
    let mc = weighted_mass_matrix(field.grid(), c)?;
    let quad_form = (u0.values().transpose() * &mc * u0.values())[(0, 0)];
    let trace_term = 2.0 * s * trace_constant(s)? * quad_form;
    Ok(FunctionalReport {
        energy,
        trace_term,
        total: energy - trace_term,
        error_estimate,
    })
}

/// Same field on every second ladder node, for the quadrature gap estimate.
fn coarsened(field: &ExtensionField) -> Option<ExtensionField> {
    let nodes = field.ladder().nodes();
    let ny = nodes.len() - 1;
    if ny % 2 != 0 || ny < 8 {
        return None;
    }
    let keep: Vec<usize> = (0..=ny).step_by(2).collect();
    let coarse_nodes: Vec<f64> = keep.iter().map(|&j| nodes[j]).collect();
    let ladder = YLadder::from_nodes(coarse_nodes, field.ladder().grading()).ok()?;
    let mut values = DMatrix::zeros(field.values().nrows(), keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        values.set_column(dst, &field.values().column(src));
    }
    ExtensionField::from_values(values, field.s(), ladder, field.grid().clone()).ok()
}

/// V(U) = M₂(U) − M₁(U).
pub fn functional_v(
    field: &ExtensionField,
    pair_1: (&CylinderCoefficient, &ScalarCoefficient),
    pair_2: (&CylinderCoefficient, &ScalarCoefficient),
    s: f64,
) -> Result<f64> {
    let m1 = functional_m(field, pair_1.0, pair_1.1, s)?;
    let m2 = functional_m(field, pair_2.0, pair_2.1, s)?;
    Ok(m2.total - m1.total)
}

/// The same variation through the difference integrand
/// ∫∫ y^a (B₂−B₁)∇U·∇U + 2s c_s ∫ (C₁−C₂) U(·,0)². Must match
/// `functional_v` to rounding; both routes are kept on purpose.
pub fn functional_v_direct(
    field: &ExtensionField,
    pair_1: (&CylinderCoefficient, &ScalarCoefficient),
    pair_2: (&CylinderCoefficient, &ScalarCoefficient),
    s: f64,
) -> Result<f64> {
    let a1 = pair_1.0.a_block().clone();
    let a2 = pair_2.0.a_block().clone();
    let dim = a1.dim();
    let diff = MatrixCoefficient::new(dim, move |x| a2.sample(x) - a1.sample(x));
    // B₂ − B₁ has a zero bottom-right block: no U_y² contribution.
    let energy = crate::extension::weighted_energy_with(field, &diff, 0.0);

    let c1 = pair_1.1.clone();
    let c2 = pair_2.1.clone();
    let c_diff = ScalarCoefficient::new(move |x| c1.sample(x) - c2.sample(x));
    let u0 = field.trace()?;
    let mc = weighted_mass_matrix(field.grid(), &c_diff)?;
    let quad_form = (u0.values().transpose() * &mc * u0.values())[(0, 0)];
    Ok(energy + 2.0 * s * trace_constant(s)? * quad_form)
}

/// Principal eigenvalue and minimizer of Λ^s − C̃: the Rayleigh trigger of
/// the variational lemma. μ₁ ≤ 0 exactly when some admissible trace makes
/// M ≤ 0 (up to the positive constant 2s c_s).
pub fn rayleigh_min(fp: &FracPower, pot: &ModalPotential) -> Result<(f64, GridFunction)> {
    let spec = frac_schroedinger_spectrum(fp, pot)?;
    Ok((spec.mu()[0], spec.grid_function(0)?))
}

/// Nodal samples on the full tensor grid (all x nodes × ladder nodes),
/// boundary included. Fields here need not satisfy the Dirichlet condition;
/// the identity meter only needs values.
#[derive(Debug, Clone)]
pub struct TensorField {
    values: DMatrix<f64>,
    grid: Arc<Grid>,
    ladder: YLadder,
}

impl TensorField {
    pub fn from_fn(
        grid: Arc<Grid>,
        ladder: &YLadder,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        if grid.dimension() != 1 {
            return Err(Error::InvalidArgument(
                "tensor fields require an interval grid".into(),
            ));
        }
        let values = DMatrix::from_fn(grid.n_nodes(), ladder.nodes().len(), |i, j| {
            f(grid.coords(i)[0], ladder.nodes()[j])
        });
        Ok(Self {
            values,
            grid,
            ladder: ladder.clone(),
        })
    }

    pub fn from_extension(field: &ExtensionField) -> Result<Self> {
        if field.grid().dimension() != 1 {
            return Err(Error::InvalidArgument(
                "tensor fields require an interval grid".into(),
            ));
        }
        let grid = field.grid().clone();
        let mut values = DMatrix::zeros(grid.n_nodes(), field.ladder().nodes().len());
        for i in 0..field.values().nrows() {
            let node = grid.interior_node(i);
            for j in 0..field.values().ncols() {
                values[(node, j)] = field.values()[(i, j)];
            }
        }
        Ok(Self {
            values,
            grid,
            ladder: field.ladder().clone(),
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn min_abs(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

/// A field with analytic derivatives, for exact-derivative residual runs.
pub struct SmoothField {
    pub f: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub fx: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub fy: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub fxx: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub fyy: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

const RESIDUAL_FLOOR: f64 = 1e-30;

/// Pointwise residual of the identity with caller-supplied derivatives,
/// sampled on a lattice over (x_lo, x_hi) × (y_lo, y_hi). The v-field must
/// stay away from zero (`floor`).
#[allow(clippy::too_many_arguments)]
pub fn picone_residual_analytic(
    u: &SmoothField,
    v: &SmoothField,
    a_coeff: &MatrixCoefficient,
    s: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    samples: usize,
    floor: f64,
) -> Result<f64> {
    if a_coeff.dim() != 1 {
        return Err(Error::InvalidArgument(
            "analytic residual supports interval domains".into(),
        ));
    }
    let a = 1.0 - 2.0 * s;
    let mut worst: f64 = 0.0;
    for iy in 1..samples {
        // strictly y > 0: the weight derivative carries y^{a−1}
        let y = y_range.0 + (y_range.1 - y_range.0) * iy as f64 / samples as f64;
        for ix in 1..samples {
            let x = x_range.0 + (x_range.1 - x_range.0) * ix as f64 / samples as f64;
            let vv = (v.f)(x, y);
            if vv.abs() < floor {
                return Err(Error::DivisionHazard {
                    min_abs: vv.abs(),
                    floor,
                });
            }
            let w = y.powf(a);
            let dw = if a == 0.0 { 0.0 } else { a * y.powf(a - 1.0) };
            let amat = a_coeff.sample(&[x])[(0, 0)];
            // derivative of A by central differences; exact for constant A
            let hx = 1e-5 * (1.0 + x.abs());
            let da = (a_coeff.sample(&[x + hx])[(0, 0)] - a_coeff.sample(&[x - hx])[(0, 0)])
                / (2.0 * hx);

            let (uu, ux, uy) = ((u.f)(x, y), (u.fx)(x, y), (u.fy)(x, y));
            let (vx, vy) = ((v.fx)(x, y), (v.fy)(x, y));
            let (vxx, vyy) = ((v.fxx)(x, y), (v.fyy)(x, y));

            let xx = ux - uu / vv * vx;
            let xy = uy - uu / vv * vy;
            let y_x = w * amat * vx / vv;
            let y_y = w * vy / vv;
            let dyx = w * (da * vx + amat * vxx) / vv - w * amat * vx * vx / (vv * vv);
            let dyy = (dw * vy + w * vyy) / vv - w * vy * vy / (vv * vv);
            let div_term = 2.0 * uu * ux * y_x + 2.0 * uu * uy * y_y + uu * uu * (dyx + dyy);

            let g = w * amat * xx * xx + w * xy * xy + div_term;
            let lv = w * (da * vx + amat * vxx) + dw * vy + w * vyy;
            let rhs = w * amat * ux * ux + w * uy * uy + uu * uu / vv * lv;

            let scale = g.abs() + rhs.abs() + RESIDUAL_FLOOR;
            worst = worst.max((g - rhs).abs() / scale);
        }
    }
    Ok(worst)
}

/// Residual of the identity from nodal samples, using nested centered
/// finite differences on the tensor grid. Both sides share the stencils, so
/// the degenerate v ≡ const case cancels to rounding.
pub fn picone_residual_fd(
    u: &TensorField,
    v: &TensorField,
    a_coeff: &MatrixCoefficient,
    s: f64,
    floor: f64,
) -> Result<f64> {
    if u.values.shape() != v.values.shape() {
        return Err(Error::DimensionMismatch {
            expected: u.values.len(),
            got: v.values.len(),
        });
    }
    let min_abs = v.min_abs();
    if min_abs < floor {
        return Err(Error::DivisionHazard { min_abs, floor });
    }
    let grid = &u.grid;
    let xs: Vec<f64> = (0..grid.n_nodes()).map(|i| grid.coords(i)[0]).collect();
    let ys = u.ladder.nodes().to_vec();
    let a = 1.0 - 2.0 * s;
    let (nx, ny) = u.values.shape();

    let weight = |j: usize| ys[j].powf(a);
    let amat: Vec<f64> = xs.iter().map(|&x| a_coeff.sample(&[x])[(0, 0)]).collect();

    let uf = &u.values;
    let vf = &v.values;
    let ratio = DMatrix::from_fn(nx, ny, |i, j| uf[(i, j)] / vf[(i, j)]);

    let dx = |m: &DMatrix<f64>| d_centered(m, &xs, true);
    let dy = |m: &DMatrix<f64>| d_centered(m, &ys, false);

    let (ux, uy) = (dx(uf), dy(uf));
    let (vx, vy) = (dx(vf), dy(vf));
    let (rx, ry) = (dx(&ratio), dy(&ratio));

    // Y fields and fluxes on margin-1 nodes.
    let mut wyx = DMatrix::zeros(nx, ny);
    let mut wyy = DMatrix::zeros(nx, ny);
    let mut flux_x = DMatrix::zeros(nx, ny);
    let mut flux_y = DMatrix::zeros(nx, ny);
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let w = weight(j);
            let u2 = uf[(i, j)] * uf[(i, j)];
            flux_x[(i, j)] = w * amat[i] * vx[(i, j)];
            flux_y[(i, j)] = w * vy[(i, j)];
            wyx[(i, j)] = u2 * flux_x[(i, j)] / vf[(i, j)];
            wyy[(i, j)] = u2 * flux_y[(i, j)] / vf[(i, j)];
        }
    }
    let div_w = dx(&wyx) + dy(&wyy);
    let lv = dx(&flux_x) + dy(&flux_y);

    // Margin 4: every stencil input at these nodes is itself a wide-stencil
    // value, keeping the nested differences at full order.
    let mut worst: f64 = 0.0;
    for i in 4..nx.saturating_sub(4) {
        for j in 4..ny.saturating_sub(4) {
            let w = weight(j);
            let xx = vf[(i, j)] * rx[(i, j)];
            let xy = vf[(i, j)] * ry[(i, j)];
            let g = w * amat[i] * xx * xx + w * xy * xy + div_w[(i, j)];
            let rhs = w * amat[i] * ux[(i, j)] * ux[(i, j)]
                + w * uy[(i, j)] * uy[(i, j)]
                + uf[(i, j)] * uf[(i, j)] / vf[(i, j)] * lv[(i, j)];
            let scale = g.abs() + rhs.abs() + RESIDUAL_FLOOR;
            worst = worst.max((g - rhs).abs() / scale);
        }
    }
    Ok(worst)
}

/// Centered first derivative along one axis: fourth-order five-point where
/// the local spacing is uniform, second-order three-point otherwise. Margin
/// entries stay zero; callers keep a margin of four nodes.
fn d_centered(m: &DMatrix<f64>, axis: &[f64], along_rows: bool) -> DMatrix<f64> {
    let (nx, ny) = m.shape();
    let len = if along_rows { nx } else { ny };
    let other = if along_rows { ny } else { nx };
    let at = |i: usize, k: usize| if along_rows { m[(i, k)] } else { m[(k, i)] };

    let mut out = DMatrix::zeros(nx, ny);
    for i in 1..len - 1 {
        let h1 = axis[i] - axis[i - 1];
        let h2 = axis[i + 1] - axis[i];
        let wide = i >= 2
            && i + 2 < len
            && uniform4(&axis[i - 2..=i + 2]);
        for k in 0..other {
            let d = if wide {
                (at(i - 2, k) - 8.0 * at(i - 1, k) + 8.0 * at(i + 1, k) - at(i + 2, k))
                    / (12.0 * h1)
            } else {
                let (c_m, c_0, c_p) = nonuniform_weights(h1, h2);
                c_m * at(i - 1, k) + c_0 * at(i, k) + c_p * at(i + 1, k)
            };
            if along_rows {
                out[(i, k)] = d;
            } else {
                out[(k, i)] = d;
            }
        }
    }
    out
}

fn uniform4(window: &[f64]) -> bool {
    let h = window[1] - window[0];
    window
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * h.abs().max(1e-300))
}

fn nonuniform_weights(h1: f64, h2: f64) -> (f64, f64, f64) {
    (
        -h2 / (h1 * (h1 + h2)),
        (h2 - h1) / (h1 * h2),
        h1 / (h2 * (h1 + h2)),
    )
}
