//! Bracketing and bisection for monotone scalar functions.

use crate::error::{Error, Result};

/// Maximum number of geometric bracket expansions.
pub const MAX_DOUBLINGS: usize = 200;

/// Maximum number of bisection halvings once a root is bracketed.
pub const MAX_BISECTIONS: usize = 200;

/// Stopping rule for [`bisect`].
#[derive(Debug, Clone, Copy)]
pub struct BisectOptions {
    /// Stop once `|f(mid)| <= f_tol`.
    pub f_tol: f64,
    /// Stop once the bracket is narrower than `x_tol`.
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for BisectOptions {
    fn default() -> Self {
        Self {
            f_tol: 0.0,
            x_tol: 0.0,
            max_iter: MAX_BISECTIONS,
        }
    }
}

/// Result of a bisection: the final bracket and the midpoint returned as root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracketed {
    pub root: f64,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

/// Bisects `f` on `[lo, hi]`, where `f(lo)` and `f(hi)` have opposite signs
/// (zero counts as either sign).
///
/// Terminates on the tolerances in `opts` or when the bracket stops shrinking
/// in floating point. Exhausting `max_iter` without meeting a tolerance is an
/// error only if a tolerance was requested.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, opts: &BisectOptions) -> Result<Bracketed> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(Bracketed { root: lo, lo, hi: lo, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Bracketed { root: hi, lo: hi, hi, iterations: 0 });
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracket {
            what: format!("no sign change on [{lo}, {hi}]"),
            f_lo,
            f_hi,
        });
    }
    let lo_negative = f_lo < 0.0;
    for iteration in 1..=opts.max_iter {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            return Ok(Bracketed { root: mid, lo, hi, iterations: iteration });
        }
        let f_mid = f(mid);
        if f_mid.is_nan() {
            return Err(Error::Convergence(format!("function is NaN at {mid}")));
        }
        if f_mid == 0.0 || f_mid.abs() <= opts.f_tol {
            return Ok(Bracketed { root: mid, lo, hi, iterations: iteration });
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= opts.x_tol {
            return Ok(Bracketed {
                root: lo + 0.5 * (hi - lo),
                lo,
                hi,
                iterations: iteration,
            });
        }
    }
    if opts.f_tol > 0.0 || opts.x_tol > 0.0 {
        return Err(Error::Convergence(format!(
            "bisection did not reach tolerance after {} steps (bracket [{lo}, {hi}])",
            opts.max_iter
        )));
    }
    Ok(Bracketed {
        root: lo + 0.5 * (hi - lo),
        lo,
        hi,
        iterations: opts.max_iter,
    })
}

/// Expands `[lo, hi]` geometrically until `f` changes sign across it.
///
/// `f` is assumed monotone. The side that moves is chosen by the sign of `f`
/// at each end relative to `increasing`.
pub fn expand_bracket<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, increasing: bool) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut step = (hi - lo).max(1.0);
    for _ in 0..MAX_DOUBLINGS {
        let f_lo = f(lo);
        let f_hi = f(hi);
        if f_lo.is_nan() || f_hi.is_nan() {
            return Err(Error::Convergence(format!(
                "function is NaN while bracketing on [{lo}, {hi}]"
            )));
        }
        let (below, above) = if increasing { (f_lo, f_hi) } else { (f_hi, f_lo) };
        let lo_ok = below <= 0.0;
        let hi_ok = above >= 0.0;
        if lo_ok && hi_ok {
            return Ok((lo, hi));
        }
        if !lo_ok {
            if increasing {
                lo -= step;
            } else {
                hi += step;
            }
        }
        if !hi_ok {
            if increasing {
                hi += step;
            } else {
                lo -= step;
            }
        }
        step *= 2.0;
    }
    Err(Error::Convergence(format!(
        "bracket expansion exceeded {MAX_DOUBLINGS} doublings"
    )))
}
