//! Measure conjugation between unit-interval models and
//! Lebesgue-preserving half-line models.
//!
//! Phi(x) = integral of h over [x, 1] maps (0,1) decreasingly onto
//! (0, inf) and pushes the infinite invariant measure to Lebesgue. Built
//! from the closed-form antiderivative when the density carries one,
//! otherwise from a cumulative quadrature table in log coordinates with
//! a bracketed-bisection inverse.

use crate::map_models::{
    Branch, InvariantDensity, LaminarKind, MapError, MapKind, MapModel, RealFn,
};
use crate::numerics::quad::QuadError;
use crate::numerics::{integrate_adaptive, MonotoneCubic, NeumaierSum};
use crate::transfer::{GridDensity, TransferError};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConjugationMode {
    ClosedForm,
    Numeric,
}

/// Strictly decreasing change of coordinates s = Phi(x) with its inverse.
pub struct Conjugation {
    phi: RealFn,
    phi_inv: RealFn,
    /// Density that generated the conjugation.
    h: RealFn,
    pub mode: ConjugationMode,
    /// Inversion tolerance in x.
    pub tolerance: f64,
}

#[derive(Debug)]
pub enum ConjugationError {
    Quadrature(QuadError),
    NotUnitInterval,
    Map(MapError),
    Transfer(TransferError),
}

impl fmt::Display for ConjugationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConjugationError::Quadrature(e) => write!(f, "conjugation quadrature: {e}"),
            ConjugationError::NotUnitInterval => {
                f.write_str("conjugation applies to unit-interval models")
            }
            ConjugationError::Map(e) => write!(f, "{e}"),
            ConjugationError::Transfer(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ConjugationError {}

impl From<QuadError> for ConjugationError {
    fn from(e: QuadError) -> Self {
        ConjugationError::Quadrature(e)
    }
}

impl From<MapError> for ConjugationError {
    fn from(e: MapError) -> Self {
        ConjugationError::Map(e)
    }
}

impl From<TransferError> for ConjugationError {
    fn from(e: TransferError) -> Self {
        ConjugationError::Transfer(e)
    }
}

impl Conjugation {
    pub fn phi(&self, x: f64) -> f64 {
        (self.phi)(x)
    }
    pub fn phi_inverse(&self, s: f64) -> f64 {
        (self.phi_inv)(s)
    }
}

/// Innermost x covered by the numeric table.
const NUMERIC_X_LO: f64 = 1e-14;
const NUMERIC_KNOTS: usize = 2048;
const INVERSION_TOL: f64 = 1e-12;

/// Build Phi from a density that is positive on (0,1) and non-integrable
/// only at 0.
pub fn build_conjugation(h: &InvariantDensity) -> Result<Conjugation, ConjugationError> {
    let h_fn: RealFn = h.clone_evaluators().0;
    if h.has_closed_form() {
        let (a, a_inv) = h.clone_antiderivatives().expect("closed form present");
        return Ok(Conjugation {
            phi: a,
            phi_inv: a_inv,
            h: h_fn,
            mode: ConjugationMode::ClosedForm,
            tolerance: INVERSION_TOL,
        });
    }

    // Cumulative table over t = ln x in [ln(NUMERIC_X_LO), 0], summed from
    // the right so Phi(1) = 0 exactly.
    let t_lo = NUMERIC_X_LO.ln();
    let m = NUMERIC_KNOTS;
    let ts: Vec<f64> = (0..=m).map(|i| t_lo * (1.0 - i as f64 / m as f64)).collect();
    let mut cum = vec![0.0f64; m + 1];
    let mut acc = NeumaierSum::new();
    for i in (0..m).rev() {
        let (xa, xb) = (ts[i].exp(), ts[i + 1].exp());
        let cell = integrate_adaptive(&|x| h_fn(x), xa, xb, 1e-13, 1e-15)?;
        acc.add(cell);
        cum[i] = acc.value();
    }
    // Phi decreases in x, so it increases in -t; store against t ascending.
    let phi_of_t = MonotoneCubic::new(&ts, &cum).expect("table nodes are increasing");
    let table = Arc::new(phi_of_t);

    let t_phi = table.clone();
    let phi: RealFn = Arc::new(move |x: f64| t_phi.eval(x.ln()));
    let t_inv = table.clone();
    let phi_inv: RealFn = Arc::new(move |s: f64| {
        // bisect in t; Phi is decreasing in t
        let (mut lo, mut hi) = (t_lo, 0.0);
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            if t_inv.eval(mid) > s {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 0.25 * INVERSION_TOL {
                break;
            }
        }
        (0.5 * (lo + hi)).exp()
    });
    Ok(Conjugation {
        phi,
        phi_inv,
        h: h_fn,
        mode: ConjugationMode::Numeric,
        tolerance: INVERSION_TOL,
    })
}

/// Transport a unit-interval model across the conjugation generated by
/// its own invariant density. Branch k of the image is Phi o T_k o
/// Phi^{-1}, with derivatives by the chain rule; the image preserves
/// Lebesgue measure and its laminar displacement is evaluated as a
/// measure of the short interval [x, T_0(x)], which stays accurate long
/// after the naive difference s - T(s) has lost every digit.
pub fn conjugate_map(map: &MapModel, c: &Conjugation) -> Result<MapModel, ConjugationError> {
    if map.kind != MapKind::UnitInterval {
        return Err(ConjugationError::NotUnitInterval);
    }
    map.density()?;

    let n = map.branch_count();
    let mut branches = Vec::with_capacity(n);
    for j in 0..n {
        branches.push(conjugated_branch(map, c, j));
    }
    let cuts: Vec<f64> = map.cuts.iter().map(|&a| c.phi(a)).collect();

    // u(s) = Phi(x) - Phi(T x) = mu([x, T_0 x]) via direct quadrature.
    let u: RealFn = {
        let phi_inv = c.phi_inv.clone();
        let h = c.h.clone();
        let fwd = branch_forward(map, 0);
        Arc::new(move |s: f64| {
            let x = phi_inv(s);
            let tx = fwd(x);
            integrate_adaptive(&|t| h(t), x.min(tx), x.max(tx), 1e-12, 1e-300)
                .unwrap_or(f64::NAN)
        })
    };

    Ok(MapModel::new(
        MapKind::HalfLine,
        format!("conj({})", map.family),
        LaminarKind::None,
        branches,
        cuts,
        None,
        Some(u),
    ))
}

fn branch_forward(map: &MapModel, j: usize) -> RealFn {
    map.branch(j).forward_arc()
}

fn conjugated_branch(map: &MapModel, c: &Conjugation, j: usize) -> Branch {
    let d = map.density.as_ref().unwrap();
    let (h, h_d) = (d.clone_evaluators().0, d.clone_evaluators().1);
    let b = map.branch(j);
    let (f, f_d, f_dd) = (b.forward_arc(), b.forward_deriv_arc(), b.forward_second_arc());
    let (g, g_d, g_dd) = (b.inverse_arc(), b.inverse_deriv_arc(), b.inverse_second_arc());
    let phi = c.phi.clone();
    let phi_inv = c.phi_inv.clone();

    // domain endpoints swap under the decreasing Phi
    let lo = if b.hi >= 1.0 { 0.0 } else { c.phi(b.hi) };
    let hi = if b.lo <= 0.0 {
        f64::INFINITY
    } else {
        c.phi(b.lo)
    };

    let fwd = {
        let (phi, phi_inv, f) = (phi.clone(), phi_inv.clone(), f.clone());
        Arc::new(move |s: f64| phi(f(phi_inv(s))))
    };
    let fwd_d = {
        let (phi_inv, f, f_d, h) = (phi_inv.clone(), f.clone(), f_d.clone(), h.clone());
        Arc::new(move |s: f64| {
            let x = phi_inv(s);
            h(f(x)) * f_d(x) / h(x)
        })
    };
    let fwd_dd = {
        let (phi_inv, f, f_d, f_dd, h, h_d) = (
            phi_inv.clone(),
            f.clone(),
            f_d.clone(),
            f_dd.clone(),
            h.clone(),
            h_d.clone(),
        );
        Arc::new(move |s: f64| {
            let x = phi_inv(s);
            let (hx, tfx) = (h(x), f(x));
            let a_prime = h_d(tfx) * f_d(x) * f_d(x) / hx + h(tfx) * f_dd(x) / hx
                - h(tfx) * f_d(x) * h_d(x) / (hx * hx);
            -a_prime / hx
        })
    };
    let inv = {
        let (phi, phi_inv, g) = (phi.clone(), phi_inv.clone(), g.clone());
        Arc::new(move |s: f64| phi(g(phi_inv(s))))
    };
    let inv_d = {
        let (phi_inv, g, g_d, h) = (phi_inv.clone(), g.clone(), g_d.clone(), h.clone());
        Arc::new(move |s: f64| {
            let x = phi_inv(s);
            h(g(x)) * g_d(x) / h(x)
        })
    };
    let inv_dd = {
        let (phi_inv, g, g_d, g_dd, h, h_d) = (phi_inv, g, g_d.clone(), g_dd, h, h_d);
        Arc::new(move |s: f64| {
            let x = phi_inv(s);
            let (hx, gx) = (h(x), g(x));
            let b_prime = h_d(gx) * g_d(x) * g_d(x) / hx + h(gx) * g_dd(x) / hx
                - h(gx) * g_d(x) * h_d(x) / (hx * hx);
            -b_prime / hx
        })
    };
    Branch::new(lo, hi, fwd, fwd_d, fwd_dd, inv, inv_d, inv_dd)
}

/// Transport a density on (0,1) relative to the invariant measure to a
/// density on the half-line relative to Lebesgue: same values at
/// transported nodes, no Jacobian (Phi pushes the measure to Lebesgue).
pub fn pushforward_density(
    g: &GridDensity,
    c: &Conjugation,
) -> Result<GridDensity, ConjugationError> {
    let mut pairs: Vec<(f64, f64)> = g
        .nodes
        .iter()
        .zip(&g.values)
        .map(|(&x, &v)| (c.phi(x), v))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.dedup_by(|a, b| a.0 == b.0);
    let nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let values: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(GridDensity::from_values_lebesgue(Arc::new(nodes), values)?)
}

#[cfg(test)]
#[path = "conjugation_tests.rs"]
mod tests;
