//! Gamma and Bessel functions and the weighted Bessel integrals behind the
//! sharp trace constants.

mod bessel;
mod gamma;
mod weighted;

pub use bessel::{bessel_j, hankel_coefficients, switch_point, BesselEvaluator, BesselMethod};
pub use gamma::{gamma, log_gamma};
pub use weighted::{weighted_bessel_integral, weighted_bessel_integral_with, BesselIntegral, Divergence, DivergenceKind, WeightSpec};
