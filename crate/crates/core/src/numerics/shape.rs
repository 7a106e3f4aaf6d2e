//! Divided-difference monotonicity and convexity tests on sampled values.
//!
//! All tests use an absolute tolerance on the divided differences plus a
//! per-point rounding floor, and report the first offending node so
//! callers can attach a witness.
//!
//! The floor matters on geometrically clustered grids: differencing
//! values known only to relative precision eps over gaps of width c*x
//! leaves slope noise ~ eps*|v|/(c*x) and curvature noise ~ twice that
//! over the triple span. A violation smaller than this bound is not
//! evidence of anything.

/// First sample point at which a shape requirement failed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub x: f64,
    /// Signed divided difference that broke the requirement.
    pub magnitude: f64,
}

/// f64 noise bound for the slope between nodes i and i+1. Values are
/// assembled from chains of rounded operations (weights with powf,
/// Hermite reads, density ratios), so the budget is 24 ulps per value
/// rather than 1. On grids that resolve the function (relative spacing
/// above ~1e-3) the resulting floor stays below 1e-8.
fn slope_noise(x: &[f64], v: &[f64], i: usize) -> f64 {
    24.0 * f64::EPSILON * (v[i].abs() + v[i + 1].abs()) / (x[i + 1] - x[i])
}

fn first_diff_violation(
    x: &[f64],
    v: &[f64],
    tol: f64,
    bad: impl Fn(f64) -> bool,
) -> Option<Violation> {
    debug_assert_eq!(x.len(), v.len());
    for i in 0..x.len().saturating_sub(1) {
        let d = (v[i + 1] - v[i]) / (x[i + 1] - x[i]);
        if bad(d) && d.abs() > tol + slope_noise(x, v, i) {
            return Some(Violation {
                index: i,
                x: x[i],
                magnitude: d,
            });
        }
    }
    None
}

fn second_diff_violation(
    x: &[f64],
    v: &[f64],
    tol: f64,
    bad: impl Fn(f64) -> bool,
) -> Option<Violation> {
    for i in 1..x.len().saturating_sub(1) {
        let d0 = (v[i] - v[i - 1]) / (x[i] - x[i - 1]);
        let d1 = (v[i + 1] - v[i]) / (x[i + 1] - x[i]);
        let span = x[i + 1] - x[i - 1];
        let dd = 2.0 * (d1 - d0) / span;
        let noise = 2.0 * (slope_noise(x, v, i - 1) + slope_noise(x, v, i)) / span;
        if bad(dd) && dd.abs() > tol + noise {
            return Some(Violation {
                index: i,
                x: x[i],
                magnitude: dd,
            });
        }
    }
    None
}

/// None iff first divided differences are all >= -tol.
pub fn check_increasing(x: &[f64], v: &[f64], tol: f64) -> Option<Violation> {
    first_diff_violation(x, v, tol, |d| d < 0.0)
}

/// None iff first divided differences are all <= tol.
pub fn check_decreasing(x: &[f64], v: &[f64], tol: f64) -> Option<Violation> {
    first_diff_violation(x, v, tol, |d| d > 0.0)
}

/// None iff second divided differences are all <= tol.
pub fn check_concave(x: &[f64], v: &[f64], tol: f64) -> Option<Violation> {
    second_diff_violation(x, v, tol, |d| d > 0.0)
}

/// None iff second divided differences are all >= -tol.
pub fn check_convex(x: &[f64], v: &[f64], tol: f64) -> Option<Violation> {
    second_diff_violation(x, v, tol, |d| d < 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concave_function_passes() {
        let x: Vec<f64> = (0..100).map(|i| 0.01 + i as f64 / 100.0).collect();
        let v: Vec<f64> = x.iter().map(|&t| t.sqrt()).collect();
        assert!(check_increasing(&x, &v, 1e-12).is_none());
        assert!(check_concave(&x, &v, 1e-12).is_none());
        assert!(check_convex(&x, &v, 1e-12).is_some());
    }

    #[test]
    fn witness_points_at_break() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let v = [0.0, 1.0, 0.5, 2.0];
        let w = check_increasing(&x, &v, 1e-12).unwrap();
        assert_eq!(w.index, 1);
        assert!(w.magnitude < 0.0);
    }
}
