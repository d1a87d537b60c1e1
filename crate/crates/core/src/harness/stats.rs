//! Coverage statistics for the experiment harness.
//!
//! A coverage experiment observes `s` containment successes out of `t`
//! independent trials. With a uniform prior on the unknown coverage
//! probability the posterior is Beta(s + 1, t − s + 1), and the natural
//! summary is the highest-posterior-density interval of that Beta: the
//! shortest interval capturing the requested mass. [`beta_hpd_interval`]
//! computes it; [`beta_cdf`] exposes the regularized incomplete beta
//! function the bisection relies on.
//!
//! The HPD interval of a Beta density comes in four shapes depending on
//! where the mode sits:
//!
//! * `t = 0`: the posterior is uniform, every interval of the right length
//!   works, and we return the centered one.
//! * `s = t`: the density is increasing, the interval is right-anchored,
//!   `[(1 − m)^{1/(t+1)}, 1]` in closed form.
//! * `s = 0`: the mirror image, `[0, 1 − (1 − m)^{1/(t+1)}]`.
//! * otherwise: the mode is interior and the interval is the level set
//!   `{x : f(x) ≥ λ}` whose mass is `m`; we bisect on the density level λ,
//!   recovering the two crossing points of each candidate level by a further
//!   bisection on each side of the mode.

use crate::geometry::ln_gamma;

use super::HarnessError;

/// Iterations for the outer bisection on the density level. The level is
/// bracketed in `[0, f(mode)]`, so 200 halvings put the bracket far below
/// f64 resolution.
const LEVEL_ITERATIONS: usize = 200;

/// Iterations for the inner bisections that locate a level crossing.
const ROOT_ITERATIONS: usize = 200;

/// Maximum terms for the incomplete-beta continued fraction.
const BETACF_MAX_ITERATIONS: usize = 400;

/// Relative tolerance at which the continued fraction is considered
/// converged.
const BETACF_EPSILON: f64 = 1e-15;

/// Guard against division by zero in the modified Lentz recurrence.
const BETACF_FPMIN: f64 = 1e-300;

/// Natural log of the Beta function `B(a, b)`.
fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued-fraction core of the regularized incomplete beta function
/// (modified Lentz recurrence). Converges quickly when
/// `x < (a + 1) / (a + b + 2)`; [`beta_cdf`] applies the symmetry that maps
/// the other half of the domain onto this regime.
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < BETACF_FPMIN {
        d = BETACF_FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETACF_MAX_ITERATIONS {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < BETACF_FPMIN {
            d = BETACF_FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < BETACF_FPMIN {
            c = BETACF_FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < BETACF_FPMIN {
            d = BETACF_FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < BETACF_FPMIN {
            c = BETACF_FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < BETACF_EPSILON {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)` — the CDF of the
/// Beta(a, b) distribution at `x`. Requires `a > 0` and `b > 0`; values of
/// `x` outside `[0, 1]` clamp to the endpoints.
pub fn beta_cdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

/// Log-density of Beta(a, b) at `x` in the open interval, `-inf` outside.
fn beta_ln_pdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return f64::NEG_INFINITY;
    }
    (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(a, b)
}

/// Highest-posterior-density interval of the Beta(s + 1, t − s + 1)
/// posterior on a coverage probability, given `successes` hits out of
/// `trials` trials, capturing probability `mass`.
///
/// Returns `(lo, hi)` with `0 ≤ lo ≤ hi ≤ 1`. Errors when
/// `successes > trials` or `mass` is outside `(0, 1)`.
pub fn beta_hpd_interval(
    successes: usize,
    trials: usize,
    mass: f64,
) -> Result<(f64, f64), HarnessError> {
    if successes > trials {
        return Err(HarnessError::InvalidCounts { successes, trials });
    }
    if !(mass > 0.0 && mass < 1.0) {
        return Err(HarnessError::InvalidMass { value: mass });
    }
    let t = trials as f64;
    // Uniform posterior: every interval of length `mass` is an HPD interval;
    // return the centered one.
    if trials == 0 {
        return Ok(((1.0 - mass) / 2.0, (1.0 + mass) / 2.0));
    }
    // Monotone densities: right- and left-anchored intervals in closed form.
    // The CDF of Beta(t + 1, 1) is x^{t+1}, so the upper-anchored interval
    // starts where the left tail holds 1 − mass.
    if successes == trials {
        return Ok(((1.0 - mass).powf(1.0 / (t + 1.0)), 1.0));
    }
    if successes == 0 {
        return Ok((0.0, 1.0 - (1.0 - mass).powf(1.0 / (t + 1.0))));
    }

    // Interior mode: bisect on the density level.
    let a = successes as f64 + 1.0;
    let b = t - successes as f64 + 1.0;
    let mode = (a - 1.0) / (a + b - 2.0);
    let ln_peak = beta_ln_pdf(mode, a, b);
    let peak = ln_peak.exp();

    // The crossing points of level `lvl`: f is increasing on [0, mode] and
    // decreasing on [mode, 1], so each side has exactly one crossing for
    // levels inside (0, peak).
    let cross_left = |lvl: f64| -> f64 {
        let (mut lo, mut hi) = (0.0, mode);
        for _ in 0..ROOT_ITERATIONS {
            let mid = 0.5 * (lo + hi);
            if beta_ln_pdf(mid, a, b).exp() < lvl {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let cross_right = |lvl: f64| -> f64 {
        let (mut lo, mut hi) = (mode, 1.0);
        for _ in 0..ROOT_ITERATIONS {
            let mid = 0.5 * (lo + hi);
            if beta_ln_pdf(mid, a, b).exp() >= lvl {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    // Level 0 captures everything, level `peak` nothing; mass is monotone
    // decreasing in the level, so bisection applies.
    let (mut level_lo, mut level_hi) = (0.0_f64, peak);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..LEVEL_ITERATIONS {
        let level = 0.5 * (level_lo + level_hi);
        lo = cross_left(level);
        hi = cross_right(level);
        let captured = beta_cdf(hi, a, b) - beta_cdf(lo, a, b);
        if captured > mass {
            level_lo = level;
        } else {
            level_hi = level;
        }
    }
    Ok((lo, hi))
}
