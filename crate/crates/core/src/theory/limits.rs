//! Leading-order intensity and second-moment formulas for the crossing
//! process and the stress.

use serde::Serialize;

use super::constants::{c_d_closed, c_d_prime_closed};
use super::stress_profile::StressProfileIntegrals;
use crate::error::{arg_err, Result};
use crate::geometry::{fiber_sq_integral, GridQuadrature, ProjectionPlane, Region2, Window};

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        arg_err(format!("{name} must be positive and finite, got {x}"))
    }
}

/// Limit intensity measure of a region in the sparse regime `t²δ^{d+1} = c`:
/// `M(A) = c_d c² ∫_A λ_{d-2}((v + L^⊥) ∩ W)² dv / 8`.
pub fn limit_intensity(
    window: &Window,
    plane: &ProjectionPlane,
    c: f64,
    region: &Region2,
    quadrature: GridQuadrature,
) -> Result<f64> {
    positive("c", c)?;
    let integral = fiber_sq_integral(window, plane, region, quadrature)?;
    Ok(c_d_closed(window.dim()) * c * c * integral / 8.0)
}

/// Leading term `c_d t⁴ δ^{2d+2} ∫ λ_{d-2}(…)² / 8` of the expected number of
/// crossings over the whole plane.
pub fn expected_crossings_leading(
    window: &Window,
    plane: &ProjectionPlane,
    t: f64,
    delta: f64,
    quadrature: GridQuadrature,
) -> Result<f64> {
    positive("t", t)?;
    if !(delta.is_finite() && delta >= 0.0) {
        return arg_err(format!("delta must be non-negative, got {delta}"));
    }
    let d = window.dim() as i32;
    let integral = fiber_sq_integral(window, plane, &Region2::FullPlane, quadrature)?;
    Ok(c_d_closed(window.dim()) * t.powi(4) * delta.powi(2 * d + 2) * integral / 8.0)
}

/// Lower and upper bounds on the expected number of crossings in `A`:
/// the leading term with the squared slice replaced by its infimum over
/// `B_2(v, 4δ)` in `W_{-3δ}` and by its supremum over `B_2(v, 4δ)` in `W`.
pub fn intensity_bounds(
    window: &Window,
    plane: &ProjectionPlane,
    t: f64,
    delta: f64,
    region: &Region2,
    quadrature: GridQuadrature,
) -> Result<(f64, f64)> {
    positive("t", t)?;
    positive("delta", delta)?;
    region.validate()?;
    let (lo, hi) = window.projected_bounds(plane)?;
    // The upper integrand is supported on the 4δ-neighbourhood of W|_L.
    let pad = 4.0 * delta;
    let (lo, hi) =
        (crate::geometry::Point2::new(lo.x - pad, lo.y - pad), crate::geometry::Point2::new(hi.x + pad, hi.y + pad));
    let (mut lower, mut upper) = (0.0, 0.0);
    let _ = quadrature.integrate(lo, hi, |v| {
        if region.contains(v) {
            let (inf, sup) = window.fiber_extremes_on_disk(v, 4.0 * delta, 3.0 * delta);
            lower += inf * inf;
            upper += sup * sup;
        }
        0.0
    });
    let cell = (hi.x - lo.x) * (hi.y - lo.y) / (quadrature.cells_per_axis as f64).powi(2);
    let d = window.dim() as i32;
    let scale = c_d_closed(window.dim()) * t.powi(4) * delta.powi(2 * d + 2) / 8.0 * cell;
    Ok((lower * scale, upper * scale))
}

/// Leading-order `Var ξ_t(L)` for the unit cube in the thermodynamic regime
/// `tδ^d = c`: `c⁴ t³ δ⁴ (2c_d² + c_d'/c) / 8`.
pub fn cube_variance_crossings(d: usize, t: f64, c: f64) -> Result<f64> {
    positive("t", t)?;
    positive("c", c)?;
    let delta = (c / t).powf(1.0 / d as f64);
    let cd = c_d_closed(d);
    Ok(c.powi(4) * t.powi(3) * delta.powi(4) * (2.0 * cd * cd + c_d_prime_closed(d) / c) / 8.0)
}

/// Leading-order `Cov(ξ_t(L), stress)` for the unit cube in the
/// thermodynamic regime: `c_d t⁵ δ^{2d+2} ∫_W S¹ / 2`.
///
/// Equivalently `c_d c² t³ δ² ∫_W S¹ / 2`, since `t²δ^{2d} = c²`.
pub fn cube_covariance_cross_stress(d: usize, t: f64, c: f64, s1_integral: f64) -> Result<f64> {
    positive("t", t)?;
    positive("c", c)?;
    let delta = (c / t).powf(1.0 / d as f64);
    Ok(c_d_closed(d) * t.powi(5) * delta.powi(2 * d as i32 + 2) * s1_integral / 2.0)
}

/// Leading-order `Var(stress) = t³ ∫_W S¹(v)² dv`.
pub fn stress_variance(t: f64, s1_sq_integral: f64) -> f64 {
    t.powi(3) * s1_sq_integral
}

/// `(F1, F2) = ((ξ − Eξ)/(t^{7/2} δ^{2d+2}), (stress − E stress)/t^{3/2})`.
pub fn normalize_f(
    d: usize,
    t: f64,
    delta: f64,
    crossings: f64,
    stress: f64,
    exp_crossings: f64,
    exp_stress: f64,
) -> (f64, f64) {
    let f1 = (crossings - exp_crossings) / (t.powf(3.5) * delta.powi(2 * d as i32 + 2));
    let f2 = (stress - exp_stress) / t.powf(1.5);
    (f1, f2)
}

/// Leading-order moments of `(ξ_t(L), stress)` for the unit cube in the
/// thermodynamic regime, and the limiting covariance `sigma` of `F_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CubeMoments {
    pub d: usize,
    pub t: f64,
    pub delta: f64,
    pub c: f64,
    pub exp_crossings: f64,
    pub exp_stress: f64,
    pub var_crossings: f64,
    pub var_stress: f64,
    pub cov_cross_stress: f64,
    pub sigma: [[f64; 2]; 2],
}

impl CubeMoments {
    pub fn new(d: usize, t: f64, c: f64, profile: &StressProfileIntegrals) -> Result<Self> {
        if d < 3 {
            return arg_err(format!("cube moments require d >= 3, got {d}"));
        }
        let delta = (c / t).powf(1.0 / d as f64);
        let cd = c_d_closed(d);
        let var_crossings = cube_variance_crossings(d, t, c)?;
        let cov_cross_stress = cube_covariance_cross_stress(d, t, c, profile.integral)?;
        let var_stress = stress_variance(t, profile.integral_sq);
        let power = 2 * d as i32 + 2;
        let f1_scale = t.powf(3.5) * delta.powi(power);
        let f2_scale = t.powf(1.5);
        let sigma = [
            [var_crossings / (f1_scale * f1_scale), cov_cross_stress / (f1_scale * f2_scale)],
            [cov_cross_stress / (f1_scale * f2_scale), var_stress / (f2_scale * f2_scale)],
        ];
        Ok(Self {
            d,
            t,
            delta,
            c,
            exp_crossings: cd * t.powi(4) * delta.powi(power) / 8.0,
            exp_stress: t * t * profile.integral / 2.0,
            var_crossings,
            var_stress,
            cov_cross_stress,
            sigma,
        })
    }

    pub fn sigma_det(&self) -> f64 {
        self.sigma[0][0] * self.sigma[1][1] - self.sigma[0][1] * self.sigma[1][0]
    }
}
