//! Adaptive trapezoid quadrature on a finite window, used after log-axis
//! substitutions that turn the improper integrals of this crate into smooth
//! integrands decaying at both window ends.
//!
//! Node doubling reuses previous evaluations; convergence is declared when
//! two successive estimates agree to the configured tolerance.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// Relative agreement required between successive refinements.
    pub rel_tol: f64,
    /// Absolute floor so that zero integrals converge immediately.
    pub abs_tol: f64,
    /// Panels in the first trapezoid pass.
    pub initial_panels: usize,
    /// Maximum number of node doublings before giving up.
    pub max_refinements: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-300,
            initial_panels: 32,
            max_refinements: 16,
        }
    }
}

impl QuadratureConfig {
    /// Tight configuration for kernel profiles feeding trace extrapolation,
    /// where absolute accuracy near machine precision is needed.
    pub fn tight() -> Self {
        Self {
            rel_tol: 1e-13,
            ..Self::default()
        }
    }
}

/// Outcome of one adaptive quadrature, kept for diagnostics reports.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadratureOutcome {
    pub value: f64,
    pub error_estimate: f64,
    pub nodes_used: usize,
}

/// Trapezoid rule with panel doubling on [lo, hi].
pub fn trapezoid_refine<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureOutcome> {
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "quadrature window [{lo}, {hi}]"
        )));
    }
    let mut panels = cfg.initial_panels.max(2);
    let mut h = (hi - lo) / panels as f64;
    let mut acc = 0.5 * (f(lo) + f(hi));
    for i in 1..panels {
        acc += f(lo + i as f64 * h);
    }
    let mut estimate = acc * h;
    let mut nodes = panels + 1;

    for _ in 0..cfg.max_refinements {
        // Add midpoints of the current panels.
        let mut mid_sum = 0.0;
        for i in 0..panels {
            mid_sum += f(lo + (i as f64 + 0.5) * h);
        }
        acc += mid_sum;
        panels *= 2;
        h *= 0.5;
        nodes += panels / 2;
        let refined = acc * h;
        let diff = (refined - estimate).abs();
        estimate = refined;
        if diff <= cfg.rel_tol * estimate.abs() + cfg.abs_tol {
            return Ok(QuadratureOutcome {
                value: estimate,
                error_estimate: diff,
                nodes_used: nodes,
            });
        }
    }
    Err(Error::AccuracyFailure {
        achieved: ((acc * h) - estimate).abs().max(f64::EPSILON * estimate.abs()),
        requested: cfg.rel_tol * estimate.abs().max(cfg.abs_tol),
    })
}
