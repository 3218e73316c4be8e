//! Adaptive Cash–Karp Runge–Kutta (4th/5th order) for the small ODE systems
//! of the radial experiments, with a step callback for event detection.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h_init: 1e-2,
            h_min: 1e-13,
            max_steps: 10_000_000,
        }
    }
}

// Cash–Karp tableau.
const A2: f64 = 0.2;
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [0.3, -0.9, 1.2];
const A5: [f64; 4] = [-11.0 / 54.0, 2.5, -70.0 / 27.0, 35.0 / 27.0];
const A6: [f64; 5] = [
    1631.0 / 55296.0,
    175.0 / 512.0,
    575.0 / 13824.0,
    44275.0 / 110592.0,
    253.0 / 4096.0,
];
const B5: [f64; 6] = [
    37.0 / 378.0,
    0.0,
    250.0 / 621.0,
    125.0 / 594.0,
    0.0,
    512.0 / 1771.0,
];
const B4: [f64; 6] = [
    2825.0 / 27648.0,
    0.0,
    18575.0 / 48384.0,
    13525.0 / 55296.0,
    277.0 / 14336.0,
    0.25,
];

fn axpy<const N: usize>(y: [f64; N], terms: &[(f64, [f64; N])], h: f64) -> [f64; N] {
    let mut out = y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One step attempt from (t, y); returns (y_new, error_estimate).
fn try_step<const N: usize, F: Fn(f64, [f64; N]) -> [f64; N]>(
    f: &F,
    t: f64,
    y: [f64; N],
    h: f64,
) -> ([f64; N], f64) {
    let k1 = f(t, y);
    let k2 = f(t + A2 * h, axpy(y, &[(A2, k1)], h));
    let k3 = f(t + 0.3 * h, axpy(y, &[(A3[0], k1), (A3[1], k2)], h));
    let k4 = f(
        t + 0.6 * h,
        axpy(y, &[(A4[0], k1), (A4[1], k2), (A4[2], k3)], h),
    );
    let k5 = f(
        t + h,
        axpy(y, &[(A5[0], k1), (A5[1], k2), (A5[2], k3), (A5[3], k4)], h),
    );
    let k6 = f(
        t + 0.875 * h,
        axpy(
            y,
            &[
                (A6[0], k1),
                (A6[1], k2),
                (A6[2], k3),
                (A6[3], k4),
                (A6[4], k5),
            ],
            h,
        ),
    );
    let ks = [k1, k2, k3, k4, k5, k6];
    let mut y5 = y;
    let mut err: f64 = 0.0;
    for i in 0..N {
        let mut acc5 = 0.0;
        let mut acc4 = 0.0;
        for (j, k) in ks.iter().enumerate() {
            acc5 += B5[j] * k[i];
            acc4 += B4[j] * k[i];
        }
        y5[i] += h * acc5;
        err = err.max((h * (acc5 - acc4)).abs());
    }
    (y5, err)
}

/// Integrate y' = f(t, y) from t0 to t1 (t1 > t0), invoking `on_step`
/// after every accepted step with (t_prev, y_prev, t_new, y_new).
pub fn integrate_with<const N: usize, F, C>(
    f: &F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    ctrl: &StepControl,
    mut on_step: C,
) -> Result<[f64; N]>
where
    F: Fn(f64, [f64; N]) -> [f64; N],
    C: FnMut(f64, [f64; N], f64, [f64; N]) -> Result<()>,
{
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!(
            "integration range [{t0}, {t1}] is empty"
        )));
    }
    let mut t = t0;
    let mut y = y0;
    let mut h = ctrl.h_init.min(t1 - t0);
    for _ in 0..ctrl.max_steps {
        if t >= t1 {
            return Ok(y);
        }
        h = h.min(t1 - t);
        let (y_new, err) = try_step(f, t, y, h);
        let mut scale = ctrl.abs_tol;
        for i in 0..N {
            scale = scale.max(ctrl.rel_tol * y[i].abs().max(y_new[i].abs()));
        }
        if !y_new.iter().all(|v| v.is_finite()) {
            return Err(Error::Integration {
                location: t,
                reason: "state became non-finite".into(),
            });
        }
        if err <= scale {
            let t_new = t + h;
            on_step(t, y, t_new, y_new)?;
            t = t_new;
            y = y_new;
            let grow = if err == 0.0 {
                5.0
            } else {
                (0.9 * (scale / err).powf(0.2)).clamp(0.2, 5.0)
            };
            h *= grow;
        } else {
            h *= (0.9 * (scale / err).powf(0.25)).clamp(0.1, 1.0);
            if h < ctrl.h_min {
                return Err(Error::Integration {
                    location: t,
                    reason: format!("step size underflow ({h:.3e})"),
                });
            }
        }
    }
    Err(Error::Integration {
        location: t,
        reason: "step budget exhausted".into(),
    })
}

/// Integrate without step observation.
pub fn integrate<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    ctrl: &StepControl,
) -> Result<[f64; N]>
where
    F: Fn(f64, [f64; N]) -> [f64; N],
{
    integrate_with(f, t0, y0, t1, ctrl, |_, _, _, _| Ok(()))
}
