//! Shared numerical kernels: Gauss panels, bracketed root-finding,
//! shape-preserving interpolation, divided-difference shape tests, and
//! compensated summation.
//!
//! Everything here is deterministic: fixed quadrature rules, fixed
//! refinement orders, no randomness.

pub mod interp;
pub mod quad;
pub mod roots;
pub mod shape;
pub mod sum;

pub use interp::MonotoneCubic;
pub use quad::{integrate_adaptive, integrate_cell, integrate_geometric, QuadError};
pub use roots::{solve_bracketed, RootError};
pub use shape::{check_concave, check_convex, check_decreasing, check_increasing, Violation};
pub use sum::NeumaierSum;
