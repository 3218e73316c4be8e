//! The degenerate cylinder extension of boundary data: U on Ω × (0, Y)
//! solving div(y^a B∇U) = 0 with U(·,0) = u, built two independent ways —
//! a per-mode Poisson-kernel expansion and a direct tensor finite element
//! solve — plus the weighted Neumann trace that recovers c_s L^s u.

use crate::assemble::AssembledOperator;
use crate::coeff::MatrixCoefficient;
use crate::error::{Error, Result};
use crate::frac::FracPower;
use crate::gamma::{gamma, ln_gamma};
use crate::linalg::block_tridiag_solve;
use crate::quad::{trapezoid_refine, QuadratureConfig};
use crate::spectral::GridFunction;
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use std::sync::Arc;

/// Graded ladder of extension heights 0 = y_0 < y_1 < … < y_Ny = Y.
#[derive(Debug, Clone)]
pub struct YLadder {
    nodes: Vec<f64>,
    gamma: f64,
}

impl YLadder {
    /// Nodes y_j = Y (j/ny)^gamma. Grading packs nodes into the y^{2s}
    /// boundary layer at y = 0.
    pub fn graded(y_max: f64, ny: usize, gamma: f64) -> Result<Self> {
        if !(y_max > 0.0) || !y_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ladder height must be positive, got {y_max}"
            )));
        }
        if ny < 4 {
            return Err(Error::InvalidArgument(format!(
                "ladder needs at least 4 intervals, got {ny}"
            )));
        }
        if !(gamma >= 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grading exponent must be >= 1, got {gamma}"
            )));
        }
        let nodes = (0..=ny)
            .map(|j| y_max * (j as f64 / ny as f64).powf(gamma))
            .collect();
        Ok(Self { nodes, gamma })
    }

    pub fn uniform(y_max: f64, ny: usize) -> Result<Self> {
        Self::graded(y_max, ny, 1.0)
    }

    /// Wrap an explicit node sequence starting at 0, strictly increasing.
    pub fn from_nodes(nodes: Vec<f64>, gamma: f64) -> Result<Self> {
        if nodes.len() < 5 || nodes[0] != 0.0 {
            return Err(Error::InvalidArgument(
                "ladder nodes must start at 0 and provide at least 4 intervals".into(),
            ));
        }
        if !nodes.windows(2).all(|w| w[1] > w[0] && w[1].is_finite()) {
            return Err(Error::InvalidArgument(
                "ladder nodes must be strictly increasing and finite".into(),
            ));
        }
        Ok(Self { nodes, gamma })
    }

    /// Ladder for a given fractional order: height y_factor / √λ_1 so the
    /// principal profile decays to e^{−y_factor} at the top.
    pub fn for_order(
        s: f64,
        lambda_1: f64,
        y_factor: f64,
        ny: usize,
        gamma: f64,
    ) -> Result<Self> {
        if !(lambda_1 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "principal eigenvalue must be positive, got {lambda_1}"
            )));
        }
        let ladder = Self::graded(y_factor / lambda_1.sqrt(), ny, gamma)?;
        ladder.validate_for_order(s)?;
        Ok(ladder)
    }

    /// The first positive node must resolve the y^{2s} boundary layer.
    pub fn validate_for_order(&self, s: f64) -> Result<()> {
        let y1 = self.nodes[1];
        if y1.powf(2.0 * s) > 1e-3 {
            return Err(Error::InvalidArgument(format!(
                "ladder too coarse for s = {s}: y_1^(2s) = {:.3e} exceeds 1e-3; increase ny or gamma",
                y1.powf(2.0 * s)
            )));
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of intervals.
    pub fn n_intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn y_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn grading(&self) -> f64 {
        self.gamma
    }
}

/// Per-mode extension profile ρ_s(λ, y), normalized to ρ_s(λ, 0) = 1:
///
///   ρ_s(λ, y) = y^{2s}/(4^s Γ(s)) ∫₀^∞ e^{−y²/4t} e^{−λt} t^{−1−s} dt,
///
/// integrated on the log-t axis with the peak factored out.
pub fn kernel_profile(s: f64, lambda: f64, y: f64, quad: &QuadratureConfig) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::SOutOfRange(s));
    }
    if !(lambda > 0.0) || !(y >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kernel profile needs lambda > 0 and y >= 0, got lambda = {lambda}, y = {y}"
        )));
    }
    if y == 0.0 {
        return Ok(1.0);
    }
    let z = lambda.sqrt() * y;
    // Asymptotically ρ ~ (z/2)^{s−1/2} e^{−z}; past this cutoff it underflows.
    if z > 760.0 {
        return Ok(0.0);
    }

    let exponent = |tau: f64| -0.25 * y * y * (-tau).exp() - lambda * tau.exp() - s * tau;
    // Stationary point of the exponent: λw² + sw − y²/4 = 0.
    let w_star = (-s + (s * s + lambda * y * y).sqrt()) / (2.0 * lambda);
    let tau0 = w_star.ln();
    let e0 = exponent(tau0);

    let window = |dir: f64| {
        let mut step = 1.0;
        while exponent(tau0 + dir * step) > e0 - 50.0 && step < 1e6 {
            step *= 2.0;
        }
        tau0 + dir * step
    };
    let (tau_lo, tau_hi) = (window(-1.0), window(1.0));

    let mut cfg = *quad;
    cfg.initial_panels = (((tau_hi - tau_lo) * 4.0).ceil() as usize).clamp(64, 4096);
    let out = trapezoid_refine(|tau| (exponent(tau) - e0).exp(), tau_lo, tau_hi, &cfg)?;

    // ρ = exp(2s ln y − s ln4 − lnΓ(s) + E0 + ln I)
    let log_rho =
        2.0 * s * y.ln() - s * 4f64.ln() - ln_gamma(s)? + e0 + out.value.max(1e-300).ln();
    if log_rho < -745.0 {
        return Ok(0.0);
    }
    Ok(log_rho.exp())
}

/// Extension field values U(x_i, y_j) on interior nodes × ladder nodes.
#[derive(Debug, Clone)]
pub struct ExtensionField {
    values: DMatrix<f64>,
    s: f64,
    ladder: YLadder,
    grid: Arc<crate::grid::Grid>,
}

impl ExtensionField {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn weight_exponent(&self) -> f64 {
        1.0 - 2.0 * self.s
    }

    pub fn ladder(&self) -> &YLadder {
        &self.ladder
    }

    pub fn grid(&self) -> &Arc<crate::grid::Grid> {
        &self.grid
    }

    /// Slice at ladder node j as a grid function.
    pub fn slice(&self, j: usize) -> Result<GridFunction> {
        GridFunction::new(self.grid.clone(), self.values.column(j).into_owned())
    }

    /// The trace u = U(·, 0).
    pub fn trace(&self) -> Result<GridFunction> {
        self.slice(0)
    }

    /// Build from explicit values (perturbation studies, tests).
    pub fn from_values(
        values: DMatrix<f64>,
        s: f64,
        ladder: YLadder,
        grid: Arc<crate::grid::Grid>,
    ) -> Result<Self> {
        if values.nrows() != grid.n_interior() || values.ncols() != ladder.nodes().len() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_interior() * ladder.nodes().len(),
                got: values.nrows() * values.ncols(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "extension field has non-finite values".into(),
            ));
        }
        Ok(Self {
            values,
            s,
            ladder,
            grid,
        })
    }

    /// `i,j,x,y,U` rows over interior nodes × ladder nodes.
    pub fn csv(&self) -> String {
        let mut out = String::from("i,j,x,y,U\n");
        for i in 0..self.values.nrows() {
            let node = self.grid.interior_node(i);
            let x = self.grid.coords(node)[0];
            for j in 0..self.values.ncols() {
                let _ = writeln!(
                    out,
                    "{i},{j},{x},{},{}",
                    self.ladder.nodes()[j],
                    self.values[(i, j)]
                );
            }
        }
        out
    }
}

/// Modal extension: U(·, y) = Σ u_k ρ_s(λ_k, y) φ_k. The y = 0 row equals u
/// exactly.
pub fn extend_spectral(
    fp: &FracPower,
    u: &GridFunction,
    ladder: &YLadder,
) -> Result<ExtensionField> {
    ladder.validate_for_order(fp.s())?;
    let dec = fp.decomposition();
    let coeffs = dec.project(u)?;
    let n = dec.n_modes();
    let ny = ladder.nodes().len();
    let quad = QuadratureConfig::tight();

    // Scaled profile matrix: P[k][j] = u_k ρ_s(λ_k, y_j).
    let mut profile = DMatrix::zeros(n, ny);
    for k in 0..n {
        if coeffs[k] == 0.0 {
            continue;
        }
        let lambda = dec.eigenvalue(k);
        for j in 0..ny {
            profile[(k, j)] =
                coeffs[k] * kernel_profile(fp.s(), lambda, ladder.nodes()[j], &quad)?;
        }
    }
    let mut values = dec.modes() * profile;
    values.set_column(0, u.values());
    ExtensionField::from_values(values, fp.s(), ladder.clone(), dec.grid().clone())
}

/// Direct tensor finite element solve of div(y^a B∇U) = 0 on the truncated
/// cylinder: Dirichlet trace at y = 0, zero on the lateral boundary, natural
/// (Neumann) condition at y = Y. The weight y^a is sampled at interval
/// midpoints.
pub fn extend_direct(
    fp: &FracPower,
    op: &AssembledOperator,
    u: &GridFunction,
    ladder: &YLadder,
) -> Result<ExtensionField> {
    ladder.validate_for_order(fp.s())?;
    if !Arc::ptr_eq(op.grid(), u.grid()) {
        return Err(Error::InvalidArgument(
            "extension operator and trace live on different grids".into(),
        ));
    }
    let a = fp.weight_exponent();
    let nodes = ladder.nodes();
    let ny = ladder.n_intervals();
    let n = op.n_dof();
    let (k_mat, m_mat) = (op.stiffness(), op.mass());

    // Tridiagonal 1D matrices in y with midpoint weight per interval.
    let mut sy: DMatrix<f64> = DMatrix::zeros(ny + 1, ny + 1);
    let mut my: DMatrix<f64> = DMatrix::zeros(ny + 1, ny + 1);
    for e in 0..ny {
        let h = nodes[e + 1] - nodes[e];
        let w = (0.5 * (nodes[e] + nodes[e + 1])).powf(a);
        let stiff = w / h;
        let mass = w * h / 6.0;
        for (li, gi) in [(0usize, e), (1, e + 1)] {
            for (lj, gj) in [(0usize, e), (1, e + 1)] {
                sy[(gi, gj)] += if li == lj { stiff } else { -stiff };
                my[(gi, gj)] += if li == lj { 2.0 * mass } else { mass };
            }
        }
    }

    // Unknown slices j = 1..=ny; slice 0 is the Dirichlet trace.
    let mut diag = Vec::with_capacity(ny);
    let mut off = Vec::with_capacity(ny.saturating_sub(1));
    let mut rhs = Vec::with_capacity(ny);
    for j in 1..=ny {
        diag.push(k_mat * my[(j, j)] + m_mat * sy[(j, j)]);
        if j < ny {
            off.push(k_mat * my[(j, j + 1)] + m_mat * sy[(j, j + 1)]);
        }
        if j == 1 {
            let coupled: DVector<f64> =
                k_mat * u.values() * my[(1, 0)] + m_mat * u.values() * sy[(1, 0)];
            rhs.push(-coupled);
        } else {
            rhs.push(DVector::zeros(n));
        }
    }
    let slices = block_tridiag_solve(&diag, &off, &rhs)?;

    let mut values = DMatrix::zeros(n, ny + 1);
    values.set_column(0, u.values());
    for (j, x) in slices.iter().enumerate() {
        values.set_column(j + 1, x);
    }
    ExtensionField::from_values(values, fp.s(), ladder.clone(), op.grid().clone())
}

/// Weighted Neumann trace extracted from an extension field.
#[derive(Debug, Clone)]
pub struct NeumannTrace {
    pub trace: GridFunction,
    /// Relative change between the last two extrapolation windows.
    pub error_estimate: f64,
    /// False when successive window estimates stopped shrinking.
    pub monotone: bool,
}

/// Extrapolate −(U(·,y) − U(·,0))/y^{2s} to y → 0 over the smallest ladder
/// nodes. The result approximates c_s L^s u with c_s = Γ(1−s)/(4^s Γ(1+s)).
///
/// The difference quotient expands as c0 + c1 y^{2−2s} + c2 y² + …, so those
/// three terms form the least-squares model.
pub fn neumann_trace(fp: &FracPower, field: &ExtensionField) -> Result<NeumannTrace> {
    neumann_trace_with_window(fp, field, 6)
}

pub fn neumann_trace_with_window(
    fp: &FracPower,
    field: &ExtensionField,
    window: usize,
) -> Result<NeumannTrace> {
    let s = fp.s();
    if (field.s() - s).abs() > 1e-14 {
        return Err(Error::InvalidArgument(format!(
            "field was extended with s = {} but trace requested for s = {s}",
            field.s()
        )));
    }
    let nodes = field.ladder().nodes();
    let m = window.min(nodes.len() - 1);
    if m < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 ladder nodes in the extrapolation window, have {m}"
        )));
    }

    // Difference quotients g_j per node (columns of G).
    let n = field.values().nrows();
    let u0 = field.values().column(0);
    let mut g = DMatrix::zeros(n, m);
    for j in 1..=m {
        let yj = nodes[j];
        let scale = yj.powf(2.0 * s);
        for i in 0..n {
            g[(i, j - 1)] = -(field.values()[(i, j)] - u0[i]) / scale;
        }
    }

    let fit = |cols: usize| -> Result<DVector<f64>> {
        // Least-squares weights for the constant term of the local model.
        let mut x = DMatrix::zeros(cols, 3);
        for j in 0..cols {
            let yj = nodes[j + 1];
            x[(j, 0)] = 1.0;
            x[(j, 1)] = yj.powf(2.0 - 2.0 * s);
            x[(j, 2)] = yj * yj;
        }
        // Column scaling keeps the normal equations well conditioned.
        for c in 1..3 {
            let norm = x.column(c).amax().max(1e-300);
            for j in 0..cols {
                x[(j, c)] /= norm;
            }
        }
        let xt = x.transpose();
        let gram = &xt * &x;
        let chol = nalgebra::Cholesky::new(gram)
            .ok_or_else(|| Error::LinearSolve("trace extrapolation fit is singular".into()))?;
        // c0 per node: solve (XᵀX) W = Xᵀ Gᵀ and take the first row.
        let rhs = &xt * g.columns(0, cols).transpose();
        let sol = chol.solve(&rhs);
        Ok(sol.row(0).transpose())
    };

    let full = fit(m)?;
    let reduced = fit(m - 1)?;
    let shorter = fit(m - 2).unwrap_or_else(|_| reduced.clone());
    let norm = full.norm().max(1e-300);
    let diff_last = (&full - &reduced).norm() / norm;
    let diff_prev = (&reduced - &shorter).norm() / norm;
    let monotone = diff_last <= diff_prev + 1e-12;

    Ok(NeumannTrace {
        trace: GridFunction::new(field.grid().clone(), full)?,
        error_estimate: diff_last,
        monotone,
    })
}

/// Weighted Dirichlet energy ∫∫ y^a (A∇ₓU·∇ₓU + U_y²) of a field, by
/// midpoint-in-y and element-in-x quadrature.
pub fn weighted_energy(field: &ExtensionField, a_mat: &MatrixCoefficient) -> f64 {
    weighted_energy_with(field, a_mat, 1.0)
}

/// Energy with an explicit coefficient on the U_y² term: the bottom-right
/// entry of the cylinder block matrix. Difference blocks B₂ − B₁ carry 0
/// there. `a_mat` is sampled raw, so indefinite differences are allowed.
pub fn weighted_energy_with(
    field: &ExtensionField,
    a_mat: &MatrixCoefficient,
    y_block: f64,
) -> f64 {
    let grid = field.grid();
    let a = field.weight_exponent();
    let nodes = field.ladder().nodes();
    let dim = grid.dimension();

    // Full nodal embedding (zero boundary) per ladder column.
    let mut full = DMatrix::zeros(grid.n_nodes(), nodes.len());
    for i in 0..field.values().nrows() {
        let node = grid.interior_node(i);
        for j in 0..nodes.len() {
            full[(node, j)] = field.values()[(i, j)];
        }
    }

    let mut energy = 0.0;
    for jy in 0..nodes.len() - 1 {
        let dy = nodes[jy + 1] - nodes[jy];
        let weight = (0.5 * (nodes[jy] + nodes[jy + 1])).powf(a);
        for e in 0..grid.n_elements() {
            let geo = grid.element_geometry(e);
            let a_sample = a_mat.sample(&geo.centroid[..dim]);
            // x-gradient of the midpoint slice, constant on the element.
            let mut grad = [0.0f64; 2];
            let mut dy_avg = 0.0;
            for (l, &node) in geo.nodes.iter().enumerate() {
                let mid = 0.5 * (full[(node, jy)] + full[(node, jy + 1)]);
                for r in 0..dim {
                    grad[r] += mid * geo.gradients[l][r];
                }
                dy_avg += (full[(node, jy + 1)] - full[(node, jy)]) / dy;
            }
            dy_avg /= geo.nodes.len() as f64;
            let mut quad_form = y_block * dy_avg * dy_avg;
            for r in 0..dim {
                for c in 0..dim {
                    quad_form += grad[r] * a_sample[(r, c)] * grad[c];
                }
            }
            energy += weight * quad_form * geo.measure * dy;
        }
    }
    energy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemble::assemble;
    use crate::grid::build_interval_grid;
    use crate::spectral::eigendecompose;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn setup(n: usize, s: f64) -> (FracPower, AssembledOperator) {
        let grid = Arc::new(build_interval_grid(0.0, PI, n).unwrap());
        let op = assemble(&grid, &MatrixCoefficient::identity(1)).unwrap();
        let dec = Arc::new(eigendecompose(&op).unwrap());
        (FracPower::new(dec, s).unwrap(), op)
    }

    #[test]
    fn ladder_shape_and_validation() {
        let ladder = YLadder::graded(14.0, 64, 3.0).unwrap();
        assert_eq!(ladder.nodes().len(), 65);
        assert_relative_eq!(ladder.y_max(), 14.0);
        assert!(ladder.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!(ladder.validate_for_order(0.5).is_ok());
        // s = 0.25 needs stronger grading than gamma = 3 at ny = 64.
        assert!(ladder.validate_for_order(0.25).is_err());
        assert!(YLadder::graded(14.0, 64, 4.0)
            .unwrap()
            .validate_for_order(0.25)
            .is_ok());
        assert!(YLadder::graded(-1.0, 64, 3.0).is_err());
        assert!(YLadder::graded(1.0, 2, 3.0).is_err());
    }

    #[test]
    fn profile_half_order_closed_form() {
        // For s = 1/2 the profile is exactly e^{−√λ y}.
        let quad = QuadratureConfig::tight();
        let rho = kernel_profile(0.5, 4.0, 1.0, &quad).unwrap();
        assert_relative_eq!(rho, (-2.0f64).exp(), max_relative = 1e-8);
        assert_relative_eq!(rho, 0.13533528323661269, max_relative = 1e-8);
        for (lambda, y) in [(1.0, 0.3), (9.0, 2.0), (100.0, 0.05)] {
            let rho = kernel_profile(0.5, lambda, y, &quad).unwrap();
            let expected = (-lambda.sqrt() * y).exp();
            assert_relative_eq!(rho, expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn profile_normalization_and_reference_values() {
        let quad = QuadratureConfig::tight();
        for s in [0.25, 0.5, 0.75] {
            for lambda in [1.0, 17.3] {
                assert_eq!(kernel_profile(s, lambda, 0.0, &quad).unwrap(), 1.0);
            }
        }
        // 40-digit reference values of 2/Γ(s) (z/2)^s K_s(z).
        let rho = kernel_profile(0.25, 1.0, 2.0, &quad).unwrap();
        assert_relative_eq!(rho, 0.06364627180613659, max_relative = 1e-9);
        let rho = kernel_profile(0.75, 2.0, 0.7, &quad).unwrap();
        assert_relative_eq!(rho, 0.50475072798785629, max_relative = 1e-9);
    }

    #[test]
    fn profile_oracle_different_substitution() {
        // Independent oracle: substituting u = y²/4t gives
        // ρ = (1/Γ(s)) ∫ e^{−u − λy²/4u} u^{s−1} du, integrated on log-u with
        // a fixed dense grid (10x the adaptive budget).
        let oracle = |s: f64, lambda: f64, y: f64| {
            let f = |tau: f64| {
                let u = tau.exp();
                (-u - lambda * y * y / (4.0 * u) + s * tau).exp()
            };
            let (lo, hi, n) = (-60.0, 12.0, 200_000);
            let h = (hi - lo) / n as f64;
            let mut acc = 0.5 * (f(lo) + f(hi));
            for i in 1..n {
                acc += f(lo + i as f64 * h);
            }
            acc * h / gamma(s).unwrap()
        };
        let quad = QuadratureConfig::tight();
        for (s, lambda, y) in [(0.25, 1.0, 2.0), (0.6, 3.0, 0.5), (0.75, 12.0, 0.9)] {
            let rho = kernel_profile(s, lambda, y, &quad).unwrap();
            assert_relative_eq!(rho, oracle(s, lambda, y), max_relative = 1e-8);
        }
    }

    #[test]
    fn profile_monotone_in_y_and_lambda() {
        let quad = QuadratureConfig::tight();
        let mut prev = 1.0;
        for j in 1..=10 {
            let rho = kernel_profile(0.3, 5.0, j as f64 * 0.4, &quad).unwrap();
            assert!(rho > 0.0 && rho < prev);
            prev = rho;
        }
        let hi = kernel_profile(0.3, 2.0, 1.0, &quad).unwrap();
        let lo = kernel_profile(0.3, 20.0, 1.0, &quad).unwrap();
        assert!(lo < hi);
        // deep tail underflows to zero, not garbage
        assert_eq!(kernel_profile(0.3, 1e6, 5.0, &quad).unwrap(), 0.0);
    }

    #[test]
    fn spectral_extension_single_mode() {
        let (fp, _) = setup(48, 0.5);
        let dec = fp.decomposition().clone();
        let ladder = YLadder::for_order(0.5, dec.eigenvalue(0), 14.0, 32, 3.0).unwrap();
        let u = dec.mode(0);
        let field = extend_spectral(&fp, &u, &ladder).unwrap();
        // exact trace row
        assert_eq!(field.values().column(0), *u.values());
        let root = dec.eigenvalue(0).sqrt();
        for (j, &y) in ladder.nodes().iter().enumerate().skip(1) {
            let slice = field.slice(j).unwrap();
            let expected = u.values() * (-root * y).exp();
            assert!(
                (slice.values() - &expected).amax() <= 1e-8 * u.norm_inf(),
                "slice {j} deviates from the closed-form profile"
            );
        }
        // top slice is negligible: Y = 14/√λ_1 ⇒ e^{−14}
        let top = field.slice(ladder.n_intervals()).unwrap();
        assert!(top.norm_inf() <= 1e-6 * u.norm_inf());
        // positivity on Ω × [0, Y)
        assert!(field
            .values()
            .columns(0, ladder.n_intervals())
            .iter()
            .all(|&v| v > 0.0));
    }

    #[test]
    fn zero_trace_extends_to_zero() {
        let (fp, op) = setup(16, 0.5);
        let ladder =
            YLadder::for_order(0.5, fp.decomposition().eigenvalue(0), 14.0, 16, 4.0).unwrap();
        let z = GridFunction::zero(fp.decomposition().grid().clone());
        assert_eq!(
            extend_spectral(&fp, &z, &ladder).unwrap().values().amax(),
            0.0
        );
        assert_eq!(
            extend_direct(&fp, &op, &z, &ladder).unwrap().values().amax(),
            0.0
        );
    }

    #[test]
    fn direct_solve_matches_profile_for_half_order() {
        let (fp, op) = setup(48, 0.5);
        let dec = fp.decomposition().clone();
        let ladder = YLadder::for_order(0.5, dec.eigenvalue(0), 14.0, 64, 3.0).unwrap();
        let u = dec.mode(0);
        let field = extend_direct(&fp, &op, &u, &ladder).unwrap();
        let root = dec.eigenvalue(0).sqrt();
        for (j, &y) in ladder.nodes().iter().enumerate() {
            let slice = field.slice(j).unwrap();
            let expected = u.values() * (-root * y).exp();
            let err = (slice.values() - &expected).amax();
            assert!(
                err <= 0.01 * u.norm_inf(),
                "direct slice {j} off by {err:.3e} at y = {y}"
            );
        }
    }

    #[test]
    fn methods_agree_in_weighted_energy() {
        let (fp, op) = setup(48, 0.5);
        let dec = fp.decomposition().clone();
        let ladder = YLadder::for_order(0.5, dec.eigenvalue(0), 14.0, 64, 3.0).unwrap();
        let u = GridFunction::new(
            dec.grid().clone(),
            dec.mode(0).values() + dec.mode(2).values() * 0.5,
        )
        .unwrap();
        let spectral = extend_spectral(&fp, &u, &ladder).unwrap();
        let direct = extend_direct(&fp, &op, &u, &ladder).unwrap();
        let a_id = MatrixCoefficient::identity(1);
        let e_s = weighted_energy(&spectral, &a_id);
        let e_d = weighted_energy(&direct, &a_id);
        assert!(
            (e_s - e_d).abs() <= 0.02 * e_s,
            "energies differ: spectral {e_s}, direct {e_d}"
        );
    }

    #[test]
    fn energy_is_minimal_over_same_trace_perturbations() {
        let (fp, _) = setup(24, 0.5);
        let dec = fp.decomposition().clone();
        let ladder = YLadder::for_order(0.5, dec.eigenvalue(0), 14.0, 32, 3.0).unwrap();
        let u = dec.mode(0);
        let field = extend_spectral(&fp, &u, &ladder).unwrap();
        let a_id = MatrixCoefficient::identity(1);
        let base = weighted_energy(&field, &a_id);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let (n, ny) = (field.values().nrows(), field.values().ncols());
        for _ in 0..20 {
            // Smooth-in-y random perturbation vanishing at the trace row.
            let amp = 0.3 * u.norm_inf();
            let shape: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let freq = rng.random_range(0.5..2.0);
            let mut perturbed = field.values().clone();
            for j in 1..ny {
                let y = ladder.nodes()[j];
                let env = (freq * y).sin() * (-y).exp();
                for i in 0..n {
                    perturbed[(i, j)] += amp * shape[i] * env;
                }
            }
            let trial =
                ExtensionField::from_values(perturbed, 0.5, ladder.clone(), dec.grid().clone())
                    .unwrap();
            assert!(weighted_energy(&trial, &a_id) > base);
        }
    }

    #[test]
    fn trace_closed_form_half_order() {
        let (fp, _) = setup(64, 0.5);
        let dec = fp.decomposition().clone();
        let ladder = YLadder::for_order(0.5, dec.eigenvalue(0), 14.0, 64, 3.0).unwrap();
        let u = dec.mode(0);
        let field = extend_spectral(&fp, &u, &ladder).unwrap();
        let trace = neumann_trace(&fp, &field).unwrap();
        // c_{1/2} = 1: trace = √λ_1 · φ_1
        let expected = u.values() * dec.eigenvalue(0).sqrt();
        let rel = (trace.trace.values() - &expected).norm() / expected.norm();
        assert!(rel <= 1e-4, "half-order trace off by {rel:.3e}");
    }

    #[test]
    fn trace_constant_other_orders() {
        for (s, gamma_exp) in [(0.25, 4.0), (0.75, 3.0)] {
            let (fp, _) = setup(64, s);
            let dec = fp.decomposition().clone();
            let ladder = YLadder::for_order(s, dec.eigenvalue(0), 14.0, 64, gamma_exp).unwrap();
            let u = dec.mode(0);
            let field = extend_spectral(&fp, &u, &ladder).unwrap();
            let trace = neumann_trace(&fp, &field).unwrap();
            let c_s = crate::gamma::trace_constant(s).unwrap();
            let expected = u.values() * (c_s * dec.eigenvalue(0).powf(s));
            let rel = (trace.trace.values() - &expected).norm() / expected.norm();
            assert!(rel <= 5e-3, "s = {s}: trace constant off by {rel:.3e}");
        }
    }

    #[test]
    fn trace_window_validation() {
        let (fp, _) = setup(16, 0.5);
        let dec = fp.decomposition().clone();
        let ladder = YLadder::for_order(0.5, dec.eigenvalue(0), 14.0, 16, 4.0).unwrap();
        let field = extend_spectral(&fp, &dec.mode(0), &ladder).unwrap();
        assert!(neumann_trace_with_window(&fp, &field, 3).is_err());
        assert!(neumann_trace_with_window(&fp, &field, 5).is_ok());
    }

    #[test]
    fn csv_export_layout() {
        let (fp, _) = setup(8, 0.5);
        let dec = fp.decomposition().clone();
        let ladder = YLadder::for_order(0.5, dec.eigenvalue(0), 14.0, 8, 5.0).unwrap();
        let field = extend_spectral(&fp, &dec.mode(0), &ladder).unwrap();
        let csv = field.csv();
        assert!(csv.starts_with("i,j,x,y,U\n"));
        assert_eq!(csv.lines().count(), 1 + 7 * 9);
    }
}
