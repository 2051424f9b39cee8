//! Quadrature, bracketing root finders and double-double arithmetic used by the solvers.

pub mod dd;
pub mod quad;
pub mod roots;

pub use dd::Dd;
pub use quad::{integrate, integrate_with, QuadOptions};
pub use roots::{bisect, brent, scan_sign_changes};
