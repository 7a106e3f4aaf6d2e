//! Bracketed scalar root-finding: bisection with safeguarded Newton steps.

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum RootError {
    /// f(lo) and f(hi) do not straddle zero.
    NoBracket { lo: f64, hi: f64, flo: f64, fhi: f64 },
    /// Iteration cap reached before the interval shrank to tolerance.
    NoConvergence { lo: f64, hi: f64 },
}

impl fmt::Display for RootError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootError::NoBracket { lo, hi, flo, fhi } => write!(
                f,
                "no sign change on [{lo:e}, {hi:e}]: f(lo)={flo:e}, f(hi)={fhi:e}"
            ),
            RootError::NoConvergence { lo, hi } => {
                write!(f, "root iteration stalled on [{lo:e}, {hi:e}]")
            }
        }
    }
}

impl std::error::Error for RootError {}

/// Solve f(x) = 0 on a bracketing interval.
///
/// A Newton step (when `df` is supplied) is taken only if it lands
/// strictly inside the current bracket; otherwise the step bisects. The
/// bracket is maintained throughout, so convergence is unconditional for
/// continuous f. `xtol` is absolute in x.
pub fn solve_bracketed(
    f: &dyn Fn(f64) -> f64,
    df: Option<&dyn Fn(f64) -> f64>,
    lo: f64,
    hi: f64,
    xtol: f64,
) -> Result<f64, RootError> {
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(RootError::NoBracket { lo, hi, flo, fhi });
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 || hi - lo <= xtol {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let mut next = f64::NAN;
        if let Some(df) = df {
            let d = df(x);
            if d != 0.0 {
                let cand = x - fx / d;
                if cand > lo && cand < hi {
                    next = cand;
                }
            }
        }
        if !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        x = next;
    }
    if hi - lo <= xtol.max(4.0 * f64::EPSILON * hi.abs()) {
        Ok(x)
    } else {
        Err(RootError::NoConvergence { lo, hi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_root_of_two() {
        let f = |x: f64| x * x * x - 2.0;
        let df = |x: f64| 3.0 * x * x;
        let r = solve_bracketed(&f, Some(&df), 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.powf(1.0 / 3.0)).abs() < 1e-13);
    }

    #[test]
    fn reports_missing_bracket() {
        let f = |x: f64| x * x + 1.0;
        assert!(matches!(
            solve_bracketed(&f, None, -1.0, 1.0, 1e-12),
            Err(RootError::NoBracket { .. })
        ));
    }

    #[test]
    fn works_without_derivative() {
        let f = |x: f64| x.exp() - 3.0;
        let r = solve_bracketed(&f, None, 0.0, 2.0, 1e-13).unwrap();
        assert!((r - 3f64.ln()).abs() < 1e-12);
    }
}
