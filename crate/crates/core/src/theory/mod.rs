//! Closed-form limit constants and moment formulas, with numerical oracles.

mod constants;
mod limits;
mod stress_profile;

pub use crate::special::unit_ball_volume;
pub use constants::{c_d_closed, c_d_montecarlo, c_d_prime_closed, c_d_prime_montecarlo, LimitConstants, McEstimate};
pub use limits::{
    cube_covariance_cross_stress, cube_variance_crossings, expected_crossings_leading, intensity_bounds,
    limit_intensity, normalize_f, stress_variance, CubeMoments,
};
pub use stress_profile::{halton, stress_profile_integrals, stress_profile_s1, S1Quadrature, StressProfileIntegrals};
