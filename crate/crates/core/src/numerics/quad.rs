//! Gauss–Legendre panel quadrature.
//!
//! Three layers: a fixed 8-point rule per cell (`integrate_cell`), an
//! adaptive bisection driver comparing 8- against 16-point panels
//! (`integrate_adaptive`), and a geometric pre-subdivision wrapper for
//! integrands with an integrable singularity at one endpoint
//! (`integrate_geometric`).

use super::sum::NeumaierSum;
use std::fmt;

/// Abscissas (positive half) and weights of the 8-point Gauss–Legendre rule on [-1,1].
const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Abscissas (positive half) and weights of the 16-point Gauss–Legendre rule on [-1,1].
const GL16: [(f64, f64); 8] = [
    (0.095_012_509_837_637_44, 0.189_450_610_455_068_5),
    (0.281_603_550_779_258_9, 0.182_603_415_044_923_6),
    (0.458_016_777_657_227_4, 0.169_156_519_395_002_5),
    (0.617_876_244_402_643_8, 0.149_595_988_816_576_7),
    (0.755_404_408_355_003_0, 0.124_628_971_255_533_9),
    (0.865_631_202_387_831_8, 0.095_158_511_682_492_78),
    (0.944_575_023_073_232_6, 0.062_253_523_938_647_89),
    (0.989_400_934_991_649_9, 0.027_152_459_411_754_09),
];

/// Quadrature failed to converge on a subinterval.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadError {
    pub lo: f64,
    pub hi: f64,
    pub estimate: f64,
    pub error_estimate: f64,
}

impl fmt::Display for QuadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "quadrature did not converge on [{:e}, {:e}] (estimate {:e}, error {:e})",
            self.lo, self.hi, self.estimate, self.error_estimate
        )
    }
}

impl std::error::Error for QuadError {}

/// 8-point Gauss–Legendre estimate of `∫_a^b f`.
pub fn integrate_cell(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL8 {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

fn integrate_cell_16(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL16 {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

/// Adaptive bisection with an 8-vs-16-point error estimate per panel.
///
/// A panel is accepted when |I16 - I8| <= max(abs_tol_panel, rel_tol*|I16|);
/// panel absolute budgets halve with each split so the global absolute
/// error stays near `abs_tol`.
pub fn integrate_adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64, QuadError> {
    let mut total = NeumaierSum::new();
    // Explicit stack of (lo, hi, abs budget, depth).
    let mut stack = vec![(a, b, abs_tol.max(f64::MIN_POSITIVE), 0u32)];
    while let Some((lo, hi, budget, depth)) = stack.pop() {
        let coarse = integrate_cell(f, lo, hi);
        let fine = integrate_cell_16(f, lo, hi);
        let err = (fine - coarse).abs();
        if err <= budget.max(rel_tol * fine.abs()) || (hi - lo) < 1e-15 * (b - a).abs() {
            total.add(fine);
            continue;
        }
        if depth >= 48 {
            return Err(QuadError {
                lo,
                hi,
                estimate: fine,
                error_estimate: err,
            });
        }
        let mid = 0.5 * (lo + hi);
        stack.push((mid, hi, 0.5 * budget, depth + 1));
        stack.push((lo, mid, 0.5 * budget, depth + 1));
    }
    Ok(total.value())
}

/// Which endpoint carries the singular behavior.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingularEnd {
    Lower,
    Upper,
}

/// Integrate with geometric subdivision toward a singular endpoint,
/// then adaptively inside each geometric cell. The singular endpoint is
/// never evaluated; cell boundaries approach it with ratio 1/2 down to
/// a relative offset of 2^-46.
pub fn integrate_geometric(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    end: SingularEnd,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64, QuadError> {
    if !(b > a) {
        return Ok(0.0);
    }
    let len = b - a;
    let mut bounds: Vec<f64> = Vec::with_capacity(64);
    let mut off = len;
    while off > len * 2f64.powi(-60) && off > 1e-290 {
        bounds.push(off);
        off *= 0.5;
    }
    bounds.push(off);
    // offsets measured from the singular end, decreasing
    let mut total = NeumaierSum::new();
    let n = bounds.len();
    for w in bounds.windows(2) {
        let (outer, inner) = (w[0], w[1]);
        let (lo, hi) = match end {
            SingularEnd::Lower => (a + inner, a + outer),
            SingularEnd::Upper => (b - outer, b - inner),
        };
        total.add(integrate_adaptive(f, lo, hi, rel_tol, abs_tol / n as f64)?);
    }
    // innermost sliver, one fixed panel
    let (lo, hi) = match end {
        SingularEnd::Lower => (a, a + off),
        SingularEnd::Upper => (b - off, b),
    };
    let sliver = match end {
        SingularEnd::Lower => integrate_cell(f, lo + 1e-300, hi),
        SingularEnd::Upper => integrate_cell(f, lo, hi - 1e-300),
    };
    total.add(sliver);
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let f = |x: f64| 3.0 * x * x;
        assert!((integrate_cell(&f, 0.0, 2.0) - 8.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_oscillatory() {
        let f = |x: f64| (40.0 * x).sin();
        let exact = (1.0 - (40.0f64).cos()) / 40.0;
        let got = integrate_adaptive(&f, 0.0, 1.0, 1e-12, 1e-14).unwrap();
        assert!((got - exact).abs() < 1e-11);
    }

    #[test]
    fn geometric_handles_log_singularity() {
        // ∫_0^1 ln(1/x) dx = 1
        let f = |x: f64| (1.0 / x).ln();
        let got = integrate_geometric(&f, 0.0, 1.0, SingularEnd::Lower, 1e-12, 1e-13).unwrap();
        assert!((got - 1.0).abs() < 1e-10, "got {got}");
    }

    #[test]
    fn geometric_inverse_sqrt() {
        // ∫_0^1 x^{-1/2} dx = 2
        let f = |x: f64| 1.0 / x.sqrt();
        let got = integrate_geometric(&f, 0.0, 1.0, SingularEnd::Lower, 1e-12, 1e-13).unwrap();
        assert!((got - 2.0).abs() < 1e-9, "got {got}");
    }
}
