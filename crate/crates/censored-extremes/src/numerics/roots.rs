//! Bracketed bisection on monotone functions, with upward doubling search
//! to establish the bracket.

use crate::error::{Error, Result};

/// Find `x` in `[lo, hi]` with `f(x) = 0` by bisection.
///
/// Requires `f(lo)` and `f(hi)` to have opposite signs. Terminates when the
/// bracket width shrinks below `xtol * max(1, |x|)`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Bracket(format!(
            "no sign change on [{lo}, {hi}]: f(lo)={flo:e}, f(hi)={fhi:e}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol * mid.abs().max(1.0) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Starting at `start`, double the step upward until `f` changes sign,
/// then bisect. `f` must be monotone for the result to be the unique root.
pub fn bisect_with_upward_bracket<F: Fn(f64) -> f64>(f: F, start: f64, xtol: f64) -> Result<f64> {
    let fstart = f(start);
    if fstart == 0.0 {
        return Ok(start);
    }
    let mut lo = start;
    let mut step = start.abs().max(1.0);
    for _ in 0..200 {
        let hi = lo + step;
        let fhi = f(hi);
        if fhi == 0.0 {
            return Ok(hi);
        }
        if fhi.signum() != fstart.signum() {
            return bisect(f, lo, hi, xtol);
        }
        lo = hi;
        step *= 2.0;
    }
    Err(Error::Bracket(format!("no sign change found above {start}")))
}
