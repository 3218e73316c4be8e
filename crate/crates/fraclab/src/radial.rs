//! Radial reductions of the fractional model equations, the Liouville
//! transformation to normal form, Prüfer-phase zero counting, windowed
//! oscillation classification, and the classical 1D Sturm comparison oracle.

use crate::error::{Error, Result};
use crate::ode::{integrate, integrate_with, StepControl};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// u'' + d·u'/r + c·u = 0 with d = n+1−2s.
#[derive(Debug, Clone, Copy)]
pub struct RadialODE {
    pub damping: f64,
    pub c: f64,
    pub n: usize,
    pub s: f64,
}

/// Radial form of −(−Δ)^s u + c u = 0 for radially symmetric data in ℝⁿ.
/// s = 1 is accepted as the classical limit (damping 0 when n = 1).
pub fn radial_reduce(n: usize, s: f64, c: f64) -> Result<RadialODE> {
    if !(s > 0.0 && s <= 1.0) || !s.is_finite() {
        return Err(Error::SOutOfRange(s));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    Ok(RadialODE {
        damping: n as f64 + 1.0 - 2.0 * s,
        c,
        n,
        s,
    })
}

/// y'' + q(r) y = 0 obtained from the damped equation via u = y·r^{s−1};
/// valid on r > 0, singular at the origin.
#[derive(Debug, Clone, Copy)]
pub struct TransformedODE {
    pub s: f64,
    pub c: f64,
    /// Left end of the validity range (exclusive).
    pub r_min: f64,
}

impl TransformedODE {
    /// q(r) = (c r² − s² + s) / r².
    pub fn q(&self, r: f64) -> f64 {
        (self.c * r * r - self.s * self.s + self.s) / (r * r)
    }
}

/// Liouville normal form of the n = 1 radial equation (damping 2(1−s)).
pub fn liouville_transform(ode: &RadialODE) -> Result<TransformedODE> {
    if ode.n != 1 {
        return Err(Error::InvalidArgument(format!(
            "transformation covers the n = 1 damping 2(1−s); got n = {}",
            ode.n
        )));
    }
    Ok(TransformedODE {
        s: ode.s,
        c: ode.c,
        r_min: 0.0,
    })
}

/// Zeros of a solution of y'' + q y = 0 located through the Prüfer phase.
#[derive(Debug, Clone)]
pub struct ZeroScan {
    pub interval: (f64, f64),
    /// Phase crossings strictly after r0; a zero of the initial data at r0
    /// itself is reported through `initial_zero` instead.
    pub zeros: Vec<f64>,
    pub spacings: Vec<f64>,
    pub final_phase: f64,
    pub initial_zero: bool,
}

impl ZeroScan {
    pub fn count(&self) -> usize {
        self.zeros.len()
    }

    /// `index,location,spacing` rows; spacing is empty on the first zero.
    pub fn csv(&self) -> String {
        let mut out = String::from("index,location,spacing\n");
        for (k, z) in self.zeros.iter().enumerate() {
            if k == 0 {
                let _ = writeln!(out, "{},{},", k + 1, z);
            } else {
                let _ = writeln!(out, "{},{},{}", k + 1, z, self.spacings[k - 1]);
            }
        }
        out
    }
}

const CROSSING_SLACK: f64 = 1e-8;

/// Integrate the phase equation θ' = cos²θ + q sin²θ from θ(r0) = theta0 and
/// locate every upward crossing of a multiple of π — the zeros of y — by
/// bisection to 1e−10 in r.
pub fn integrate_prufer(
    q: &(impl Fn(f64) -> f64 + ?Sized),
    r0: f64,
    r_end: f64,
    ctrl: &StepControl,
    theta0: f64,
) -> Result<ZeroScan> {
    if !(r_end > r0) || !r0.is_finite() || !r_end.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "scan interval [{r0}, {r_end}] is invalid"
        )));
    }
    // The phase equation needs q finite along the way; probe a sample.
    for i in 0..=64 {
        let r = r0 + (r_end - r0) * i as f64 / 64.0;
        if !q(r).is_finite() {
            return Err(Error::InvalidArgument(format!(
                "potential is not finite at r = {r}"
            )));
        }
    }

    let phase = |r: f64, y: [f64; 1]| {
        let (sin, cos) = y[0].sin_cos();
        [cos * cos + q(r) * sin * sin]
    };

    // θ at r inside an accepted step, by re-integration from the step start.
    let theta_at = |ra: f64, ya: f64, r: f64| -> Result<f64> {
        if r <= ra {
            return Ok(ya);
        }
        let mut sub = *ctrl;
        sub.h_init = (r - ra).min(ctrl.h_init);
        Ok(integrate(&phase, ra, [ya], r, &sub)?[0])
    };

    let mut zeros: Vec<f64> = Vec::new();
    let mut next_level = (theta0 / PI).floor() + 1.0;
    if (theta0 - (next_level - 1.0) * PI).abs() <= f64::EPSILON * theta0.abs().max(1.0) {
        // starting exactly on a level: that zero belongs to the initial data
    }
    let final_state = integrate_with(
        &phase,
        r0,
        [theta0],
        r_end,
        ctrl,
        |ra, ya, rb, yb| {
            while yb[0] >= next_level * PI {
                // bisect θ(r) = next_level·π inside [ra, rb]
                let target = next_level * PI;
                let (mut lo, mut hi) = (ra, rb);
                let mut theta_lo = ya[0];
                for _ in 0..200 {
                    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let tm = theta_at(ra, ya[0], mid)?;
                    if tm >= target {
                        hi = mid;
                    } else {
                        lo = mid;
                        theta_lo = tm;
                    }
                }
                let _ = theta_lo;
                zeros.push(0.5 * (lo + hi));
                next_level += 1.0;
            }
            Ok(())
        },
    )?;

    // Endpoint grazing: the phase may land within slack below a level.
    if final_state[0] >= next_level * PI - CROSSING_SLACK {
        zeros.push(r_end);
    }

    let spacings = zeros.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(ZeroScan {
        interval: (r0, r_end),
        zeros,
        spacings,
        final_phase: final_state[0],
    })
}

/// Zeros of the damped radial equation itself, by sign-change bisection on
/// the integrated solution. Used to check that the Liouville transformation
/// preserves zero sets.
pub fn radial_solution_zeros(
    ode: &RadialODE,
    r0: f64,
    r_end: f64,
    init: (f64, f64),
    ctrl: &StepControl,
) -> Result<Vec<f64>> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidArgument(
            "radial integration must start at r > 0".into(),
        ));
    }
    let (d, c) = (ode.damping, ode.c);
    let f = |r: f64, y: [f64; 2]| [y[1], -d / r * y[1] - c * y[0]];

    let value_at = |ra: f64, ya: [f64; 2], r: f64| -> Result<f64> {
        if r <= ra {
            return Ok(ya[0]);
        }
        let mut sub = *ctrl;
        sub.h_init = (r - ra).min(ctrl.h_init);
        Ok(integrate(&f, ra, ya, r, &sub)?[0])
    };

    let mut zeros = Vec::new();
    integrate_with(&f, r0, [init.0, init.1], r_end, ctrl, |ra, ya, rb, yb| {
        if ya[0] == 0.0 && ra > r0 {
            zeros.push(ra);
        }
        if ya[0] * yb[0] < 0.0 {
            let (mut lo, mut hi) = (ra, rb);
            let mut f_lo = ya[0];
            for _ in 0..200 {
                if hi - lo <= 1e-12 * hi.abs().max(1.0) {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let fm = value_at(ra, ya, mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm > 0.0) == (f_lo > 0.0) {
                    lo = mid;
                    f_lo = fm;
                } else {
                    hi = mid;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        Ok(())
    })?;
    Ok(zeros)
}

/// Outcome of one Sturm comparison experiment.
#[derive(Debug, Clone)]
pub enum SturmVerdict {
    /// q2-solution zeros (t1, t2) and the zero of each random q1 solution
    /// found strictly inside.
    Holds {
        t1: f64,
        t2: f64,
        witnesses: Vec<f64>,
    },
    /// A random q1 solution failed to vanish inside (t1, t2) — never
    /// expected when the precondition holds.
    Violated { t1: f64, t2: f64, bad_phase: f64 },
    Inconclusive { reason: String },
}

/// Classical comparison oracle: with q1 > q2 on the interval and a
/// q2-solution vanishing at t1 and t2, every q1-solution must vanish in
/// (t1, t2). Five random initial phases are tested.
pub fn sturm_compare(
    q1: &(impl Fn(f64) -> f64 + ?Sized),
    q2: &(impl Fn(f64) -> f64 + ?Sized),
    interval: (f64, f64),
    seed: u64,
) -> Result<SturmVerdict> {
    let (a, b) = interval;
    if !(b > a) {
        return Err(Error::InvalidArgument(format!(
            "comparison interval [{a}, {b}] is invalid"
        )));
    }
    // Strict ordering on the open interval.
    for i in 1..512 {
        let r = a + (b - a) * i as f64 / 512.0;
        if !(q1(r) > q2(r)) {
            return Ok(SturmVerdict::Inconclusive {
                reason: format!("precondition q1 > q2 violated at r = {r}"),
            });
        }
    }

    let ctrl = StepControl::default();
    // A q2 solution vanishing at a: phase starts at 0.
    let scan = integrate_prufer(q2, a, b, &ctrl, 0.0)?;
    let Some(&t2) = scan.zeros.first() else {
        return Ok(SturmVerdict::Inconclusive {
            reason: "q2 solution has no second zero in the interval".into(),
        });
    };
    let t1 = a;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut witnesses = Vec::new();
    for _ in 0..5 {
        let psi = rng.random_range(0.05..PI - 0.05);
        let scan1 = integrate_prufer(q1, t1, t2, &ctrl, psi)?;
        match scan1.zeros.first() {
            Some(&z) if z < t2 => witnesses.push(z),
            _ => {
                return Ok(SturmVerdict::Violated {
                    t1,
                    t2,
                    bad_phase: psi,
                })
            }
        }
    }
    Ok(SturmVerdict::Holds { t1, t2, witnesses })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    OscillatoryEvidence,
    NonOscillatoryEvidence,
    Indeterminate,
}

/// Windowed zero-count evidence over dyadic windows [r0·2^j, r0·2^{j+1}].
#[derive(Debug, Clone)]
pub struct OscillationEvidence {
    pub scan: ZeroScan,
    pub window_counts: Vec<usize>,
    pub classification: Classification,
}

/// Scan [r0, r0·2^windows] and classify: oscillatory evidence when every
/// dyadic window holds a zero; non-oscillatory when the last 75% of windows
/// hold none.
pub fn oscillation_classify(
    q: &(impl Fn(f64) -> f64 + ?Sized),
    r0: f64,
    r_max: f64,
    windows: usize,
) -> Result<OscillationEvidence> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidArgument(
            "windowed scan needs r0 > 0".into(),
        ));
    }
    if windows < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 windows, got {windows}"
        )));
    }
    let scan_end = r0 * 2f64.powi(windows as i32);
    if scan_end > r_max * (1.0 + 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "{windows} dyadic windows from {r0} reach {scan_end}, beyond r_max = {r_max}"
        )));
    }
    let scan = integrate_prufer(q, r0, scan_end, &StepControl::default(), 0.0)?;

    let mut window_counts = vec![0usize; windows];
    for &z in &scan.zeros {
        let j = ((z / r0).log2().floor() as isize).clamp(0, windows as isize - 1) as usize;
        window_counts[j] += 1;
    }

    let classification = if window_counts.iter().all(|&c| c >= 1) {
        Classification::OscillatoryEvidence
    } else {
        let tail_len = (3 * windows).div_ceil(4);
        let tail = &window_counts[windows - tail_len..];
        if tail.iter().all(|&c| c == 0) {
            Classification::NonOscillatoryEvidence
        } else {
            Classification::Indeterminate
        }
    };
    Ok(OscillationEvidence {
        scan,
        window_counts,
        classification,
    })
}
