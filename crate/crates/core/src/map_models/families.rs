//! Built-in map families.
//!
//! Every family is specified by exact inverse branches; forward maps are
//! closed-form where available and otherwise solved from the inverse
//! branch by a bracketed Newton iteration (the inverse branches are
//! monotone, so the bracket [0,1] is global).

use super::{Branch, InvariantDensity, LaminarKind, MapError, MapKind, MapModel, RealFn};
use crate::numerics::solve_bracketed;
use std::sync::Arc;

fn rf(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> RealFn {
    Arc::new(f)
}

/// Construct a built-in family by name. `alpha` is consumed only by the
/// one-parameter interval family and must lie in (0, 1).
pub fn build_builtin(name: &str, alpha: Option<f64>) -> Result<MapModel, MapError> {
    match name {
        "farey" => Ok(farey()),
        "t_alpha" => {
            let a = alpha.ok_or(MapError::AlphaOutOfRange(f64::NAN))?;
            t_alpha(a)
        }
        "pm_quadratic" => Ok(pm_quadratic()),
        "pm_halfline" => Ok(pm_halfline()),
        other => Err(MapError::UnknownFamily(other.to_string())),
    }
}

/// The Farey map: x/(1-x) below 1/2, (1-x)/x above, invariant density 1/x.
pub fn farey() -> MapModel {
    let b0 = Branch::new(
        0.0,
        0.5,
        rf(|x| x / (1.0 - x)),
        rf(|x| {
            let d = 1.0 - x;
            1.0 / (d * d)
        }),
        rf(|x| {
            let d = 1.0 - x;
            2.0 / (d * d * d)
        }),
        rf(|y| y / (1.0 + y)),
        rf(|y| {
            let d = 1.0 + y;
            1.0 / (d * d)
        }),
        rf(|y| {
            let d = 1.0 + y;
            -2.0 / (d * d * d)
        }),
    );
    let b1 = Branch::new(
        0.5,
        1.0,
        rf(|x| (1.0 - x) / x),
        rf(|x| -1.0 / (x * x)),
        rf(|x| 2.0 / (x * x * x)),
        rf(|y| 1.0 / (1.0 + y)),
        rf(|y| {
            let d = 1.0 + y;
            -1.0 / (d * d)
        }),
        rf(|y| {
            let d = 1.0 + y;
            2.0 / (d * d * d)
        }),
    );
    MapModel {
        kind: MapKind::UnitInterval,
        family: "farey".to_string(),
        laminar: LaminarKind::FareyUnit,
        branches: vec![b0, b1],
        cuts: vec![0.5],
        density: Some(reciprocal_density()),
        displacement: None,
    }
}

/// Density h(x) = 1/x with antiderivative ln(1/x).
fn reciprocal_density() -> InvariantDensity {
    InvariantDensity::new(rf(|x| 1.0 / x), rf(|x| -1.0 / (x * x)))
        .with_antiderivative(rf(|x| -x.ln()), rf(|s| (-s).exp()))
}

/// One-parameter interval family defined through its inverse branches
/// psi_0(y) = y/(1+y)^(1-alpha), psi_1(y) = 1/(1+y)^(1-alpha); preserves
/// the same measure as the Farey map. Forward branches are root-found.
pub fn t_alpha(alpha: f64) -> Result<MapModel, MapError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MapError::AlphaOutOfRange(alpha));
    }
    let a1 = 2f64.powf(alpha - 1.0);

    let psi0 = move |y: f64| y * (1.0 + y).powf(alpha - 1.0);
    let psi0_d = move |y: f64| (1.0 + alpha * y) * (1.0 + y).powf(alpha - 2.0);
    let psi0_dd =
        move |y: f64| -(1.0 - alpha) * (2.0 + alpha * y) * (1.0 + y).powf(alpha - 3.0);
    let psi1 = move |y: f64| (1.0 + y).powf(alpha - 1.0);
    let psi1_d = move |y: f64| (alpha - 1.0) * (1.0 + y).powf(alpha - 2.0);
    let psi1_dd = move |y: f64| (1.0 - alpha) * (2.0 - alpha) * (1.0 + y).powf(alpha - 3.0);

    // Branch 0 forward inverts psi_0 by a bracketed Newton iteration.
    // psi_0(y) = y (1+y)^{alpha-1} pinches y between x and 2x, so the
    // bracket and the tolerance stay relative to the root; an absolute
    // tolerance would destroy every digit of roots near the fixed point.
    let fwd0 = move |x: f64| -> f64 {
        let hi = (x * 2f64.powf(1.0 - alpha) * 1.000001).min(1.0);
        let lo = x * 0.999999;
        solve_bracketed(
            &|y| y * (1.0 + y).powf(alpha - 1.0) - x,
            Some(&|y| (1.0 + alpha * y) * (1.0 + y).powf(alpha - 2.0)),
            lo,
            hi,
            4.0 * f64::EPSILON * x,
        )
        .expect("branch 0 inverse is monotone and bracketed")
    };
    // Branch 1 inverts in closed form: (1+y)^{alpha-1} = x.
    let fwd1 = move |x: f64| -> f64 { x.powf(-1.0 / (1.0 - alpha)) - 1.0 };

    let b0 = Branch::new(
        0.0,
        a1,
        rf(fwd0),
        rf(move |x| {
            let y = fwd0(x);
            1.0 / psi0_d(y)
        }),
        rf(move |x| {
            let y = fwd0(x);
            let t = 1.0 / psi0_d(y);
            -psi0_dd(y) * t * t * t
        }),
        rf(psi0),
        rf(psi0_d),
        rf(psi0_dd),
    );
    let b1 = Branch::new(
        a1,
        1.0,
        rf(fwd1),
        rf(move |x| {
            let y = fwd1(x);
            1.0 / psi1_d(y)
        }),
        rf(move |x| {
            let y = fwd1(x);
            let t = 1.0 / psi1_d(y);
            -psi1_dd(y) * t * t * t
        }),
        rf(psi1),
        rf(psi1_d),
        rf(psi1_dd),
    );
    Ok(MapModel {
        kind: MapKind::UnitInterval,
        family: format!("t_alpha({alpha})"),
        laminar: LaminarKind::None,
        branches: vec![b0, b1],
        cuts: vec![a1],
        density: Some(reciprocal_density()),
        displacement: None,
    })
}

/// x + x^2 mod 1 with invariant density 1/x + 1/(1+x). The branch cut is
/// the golden-ratio point where x + x^2 = 1.
pub fn pm_quadratic() -> MapModel {
    let a1 = 0.5 * (5f64.sqrt() - 1.0);
    let b0 = Branch::new(
        0.0,
        a1,
        rf(|x| x + x * x),
        rf(|x| 1.0 + 2.0 * x),
        rf(|_| 2.0),
        // psi_0(y) = (-1 + sqrt(1+4y))/2 in cancellation-free form
        rf(|y| 2.0 * y / (1.0 + (1.0 + 4.0 * y).sqrt())),
        rf(|y| 1.0 / (1.0 + 4.0 * y).sqrt()),
        rf(|y| -2.0 / (1.0 + 4.0 * y).powf(1.5)),
    );
    let b1 = Branch::new(
        a1,
        1.0,
        rf(|x| x + x * x - 1.0),
        rf(|x| 1.0 + 2.0 * x),
        rf(|_| 2.0),
        rf(|y| 0.5 * (-1.0 + (5.0 + 4.0 * y).sqrt())),
        rf(|y| 1.0 / (5.0 + 4.0 * y).sqrt()),
        rf(|y| -2.0 / (5.0 + 4.0 * y).powf(1.5)),
    );
    MapModel {
        kind: MapKind::UnitInterval,
        family: "pm_quadratic".to_string(),
        laminar: LaminarKind::PmQuadratic,
        branches: vec![b0, b1],
        cuts: vec![a1],
        density: Some(quadratic_density()),
        displacement: None,
    }
}

/// Density 1/x + 1/(1+x) with antiderivative ln(2/(x(1+x))).
fn quadratic_density() -> InvariantDensity {
    InvariantDensity::new(
        rf(|x| 1.0 / x + 1.0 / (1.0 + x)),
        rf(|x| -1.0 / (x * x) - 1.0 / ((1.0 + x) * (1.0 + x))),
    )
    .with_antiderivative(
        rf(|x| 2f64.ln() - x.ln() - x.ln_1p()),
        rf(quadratic_antiderivative_inverse),
    )
}

/// Solve ln(2/(x(1+x))) = s for x, i.e. x^2 + x = 2 e^{-s}, without
/// cancellation for large s.
fn quadratic_antiderivative_inverse(s: f64) -> f64 {
    let t = 8.0 * (-s).exp();
    t / (2.0 * (1.0 + (1.0 + t).sqrt()))
}

/// Lebesgue-preserving half-line conjugate of the quadratic map: branch
/// cut at ln 2, indifferent fixed point at +infinity. All branch data is
/// in closed form via X(y) = the unit-interval point at height y.
pub fn pm_halfline() -> MapModel {
    let ln2 = 2f64.ln();
    // X(y) in (0,1): inverse of the antiderivative of the quadratic density.
    let x_of = quadratic_antiderivative_inverse;

    let b0 = Branch::new(
        ln2,
        f64::INFINITY,
        rf(|s| s - (2.0 * (-s).exp()).ln_1p()),
        rf(|s| {
            let e = (-s).exp();
            (1.0 + 4.0 * e) / (1.0 + 2.0 * e)
        }),
        rf(|s| {
            let e = (-s).exp();
            let d = 1.0 + 2.0 * e;
            -2.0 * e / (d * d)
        }),
        rf(move |y| {
            let x = x_of(y);
            2f64.ln() - x.ln()
        }),
        rf(move |y| {
            let x = x_of(y);
            (1.0 + x) / (1.0 + 2.0 * x)
        }),
        rf(move |y| {
            let x = x_of(y);
            let d = 1.0 + 2.0 * x;
            x * (1.0 + x) / (d * d * d)
        }),
    );
    let b1 = Branch::new(
        0.0,
        ln2,
        rf(move |s| s - (ln2 - s).exp_m1().ln()),
        rf(|s| {
            let e = (-s).exp();
            (4.0 * e - 1.0) / (2.0 * e - 1.0)
        }),
        rf(|s| {
            let e = (-s).exp();
            let d = 2.0 * e - 1.0;
            2.0 * e / (d * d)
        }),
        rf(move |y| {
            let x = x_of(y);
            2f64.ln() - x.ln_1p()
        }),
        rf(move |y| {
            let x = x_of(y);
            x / (1.0 + 2.0 * x)
        }),
        rf(move |y| {
            let x = x_of(y);
            let d = 1.0 + 2.0 * x;
            -x * (1.0 + x) / (d * d * d)
        }),
    );
    MapModel {
        kind: MapKind::HalfLine,
        family: "pm_halfline".to_string(),
        laminar: LaminarKind::PmHalfLine,
        branches: vec![b0, b1],
        cuts: vec![ln2],
        density: None,
        displacement: Some(rf(|s| (2.0 * (-s).exp()).ln_1p())),
    }
}
