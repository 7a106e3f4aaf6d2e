//! Numerical laboratory for intermittent one-dimensional maps preserving
//! an infinite measure: interval maps with an indifferent fixed point at
//! the origin and half-line maps with an indifferent fixed point at
//! infinity, their transfer operators, and the infinite-volume mixing
//! experiments built on them.

pub mod map_models;
pub mod mixing_lab;
pub mod numerics;
pub mod conjugation;
pub mod laminar_distortion;
pub mod limit_theorems;
pub mod observables;
pub mod transfer;

pub use map_models::{
    build_builtin, check_assumptions, farey, pm_halfline, pm_quadratic, t_alpha,
    verify_invariant_density, AssumptionReport, Branch, InvariantDensity, MapError, MapKind,
    MapModel,
};
