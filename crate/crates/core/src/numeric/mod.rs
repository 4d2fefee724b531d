//! Numerical building blocks: adaptive quadrature, special functions and
//! the affine extrapolation fit used by the limit estimators.

pub mod fit;
pub mod quad;
pub mod special;

pub use fit::{affine_fit, AffineFit};
pub use quad::{integrate, integrate_to_infinity, Integral, Tolerance};
pub use special::{expint_e1, log_add_exp, EULER_GAMMA};
