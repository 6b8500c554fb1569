//! Special functions and quadrature used by the analytic coverage modules.

mod hyp2f1;
mod quadrature;

pub(crate) use hyp2f1::atan_sqrt_over_sqrt;
pub use hyp2f1::{hyp2f1_lt, hyp2f1_lt_general};
pub use quadrature::{integrate_1d, integrate_ordered_2d, integrate_ordered_3d, IntegrationResult, QuadratureSpec};
