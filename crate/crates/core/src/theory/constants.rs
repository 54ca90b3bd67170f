//! The geometric constants `c_d` and `c_d'` governing crossing moments, in
//! closed form and as Monte Carlo estimates of their defining integrals.
//!
//! `c_d = ∫_{2B_2} ∫_{B_d²} 1{[0,w₁]|_L ∩ (w₃ + [0,w₂])|_L ≠ ∅} dw₁ dw₂ dw₃`.
//! Integrating out `w₃` leaves `∫∫ |w₁|_L × w₂|_L|`; the projection of a
//! uniform point of `B_d` has radial density `κ_{d-2}(1-r²)^{(d-2)/2}`, which
//! gives `c_d = 2π κ_{d-2}² B(3/2, d/2)²`.
//!
//! `c_d' = ∫_{B_d} (∫_{B_d} |x|_L × z|_L| dz)² dx` (the two-crossing analogue,
//! with the plane offsets integrated out) evaluates to
//! `4π κ_{d-2}³ B(3/2, d/2)² B(2, d/2)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{arg_err, Result};
use crate::geometry::{segments_intersect, Point2};
use crate::sampling::RngStream;
use crate::special::{beta, unit_ball_volume};

fn check_dim(d: usize) {
    assert!(d >= 3, "limit constants are defined for d >= 3, got {d}");
}

/// Closed form of `c_d`.
///
/// # Panics
/// If `d < 3`.
pub fn c_d_closed(d: usize) -> f64 {
    check_dim(d);
    let kappa = unit_ball_volume(d - 2);
    let b = beta(1.5, d as f64 / 2.0);
    2.0 * std::f64::consts::PI * kappa * kappa * b * b
}

/// Closed form of `c_d'`.
///
/// # Panics
/// If `d < 3`.
pub fn c_d_prime_closed(d: usize) -> f64 {
    check_dim(d);
    let kappa = unit_ball_volume(d - 2);
    let b = beta(1.5, d as f64 / 2.0);
    4.0 * std::f64::consts::PI * kappa.powi(3) * b * b * beta(2.0, d as f64 / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitConstants {
    pub d: usize,
    /// `κ_{d-2}`
    pub kappa: f64,
    pub c_d: f64,
    pub c_d_prime: f64,
}

impl LimitConstants {
    pub fn new(d: usize) -> Result<Self> {
        if d < 3 {
            return arg_err(format!("limit constants require d >= 3, got {d}"));
        }
        Ok(Self { d, kappa: unit_ball_volume(d - 2), c_d: c_d_closed(d), c_d_prime: c_d_prime_closed(d) })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl McEstimate {
    fn from_hits(hits: u64, samples: u64, volume: f64) -> Self {
        let p = hits as f64 / samples as f64;
        Self { estimate: volume * p, std_error: volume * (p * (1.0 - p) / samples as f64).sqrt(), samples }
    }

    /// `|estimate − value|` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.estimate - value) / self.std_error
    }
}

const MC_CHUNK: u64 = 1 << 16;
const MIN_MC_SAMPLES: u64 = 1000;

/// Projection onto the first two axes of a uniform point of `B_d`.
///
/// The first `d` coordinates of a uniform point on the sphere `S^{d+1}` are
/// uniform in `B_d`, so normalising `d + 2` Gaussians suffices.
fn projected_ball_point<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Point2 {
    let mut norm_sq = 0.0;
    let mut first = [0.0; 2];
    for k in 0..d + 2 {
        let g: f64 = rng.sample(StandardNormal);
        norm_sq += g * g;
        if k < 2 {
            first[k] = g;
        }
    }
    let s = norm_sq.sqrt().recip();
    Point2::new(first[0] * s, first[1] * s)
}

fn disk_point<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Point2 {
    let r = radius * rng.random::<f64>().sqrt();
    let th = std::f64::consts::TAU * rng.random::<f64>();
    Point2::new(r * th.cos(), r * th.sin())
}

fn crosses(x: Point2, offset: Point2, z: Point2) -> bool {
    let origin = Point2::new(0.0, 0.0);
    segments_intersect(origin, x, offset, Point2::new(offset.x + z.x, offset.y + z.y)).is_some()
}

fn count_hits(n_samples: u64, stream: RngStream, trial: impl Fn(&mut rand_chacha::ChaCha8Rng) -> bool + Sync) -> u64 {
    let chunks = n_samples.div_ceil(MC_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.substream(k).rng();
            let len = MC_CHUNK.min(n_samples - k * MC_CHUNK);
            (0..len).filter(|_| trial(&mut rng)).count() as u64
        })
        .sum()
}

/// Hit-or-miss estimate of the integral defining `c_d`.
pub fn c_d_montecarlo(d: usize, n_samples: u64, stream: RngStream) -> Result<McEstimate> {
    if d < 3 || n_samples < MIN_MC_SAMPLES {
        return arg_err(format!("need d >= 3 and at least {MIN_MC_SAMPLES} samples"));
    }
    let kd = unit_ball_volume(d);
    let volume = kd * kd * 4.0 * std::f64::consts::PI;
    let hits = count_hits(n_samples, stream, |rng| {
        let w1 = projected_ball_point(rng, d);
        let w2 = projected_ball_point(rng, d);
        let w3 = disk_point(rng, 2.0);
        crosses(w1, w3, w2)
    });
    Ok(McEstimate::from_hits(hits, n_samples, volume))
}

/// Hit-or-miss estimate of the integral defining `c_d'`: one segment `[0,x]`
/// crossed by two independently placed segments `y_i + [0,z_i]`.
pub fn c_d_prime_montecarlo(d: usize, n_samples: u64, stream: RngStream) -> Result<McEstimate> {
    if d < 3 || n_samples < MIN_MC_SAMPLES {
        return arg_err(format!("need d >= 3 and at least {MIN_MC_SAMPLES} samples"));
    }
    let kd = unit_ball_volume(d);
    let disk = 4.0 * std::f64::consts::PI;
    let volume = kd.powi(3) * disk * disk;
    let hits = count_hits(n_samples, stream, |rng| {
        let x = projected_ball_point(rng, d);
        let (z1, z2) = (projected_ball_point(rng, d), projected_ball_point(rng, d));
        let (y1, y2) = (disk_point(rng, 2.0), disk_point(rng, 2.0));
        crosses(x, y1, z1) && crosses(x, y2, z2)
    });
    Ok(McEstimate::from_hits(hits, n_samples, volume))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn closed_forms_by_hand() {
        // B(3/2, 3/2) = π/8, κ₁ = 2 → c₃ = 2π·4·π²/64 = π³/8
        assert_relative_eq!(c_d_closed(3), PI.powi(3) / 8.0, max_relative = 1e-13);
        assert_relative_eq!(c_d_closed(3), 3.875_784_585, epsilon = 1e-8);
        // B(3/2, 2) = 4/15, κ₂ = π → c₄ = 2π·π²·16/225
        assert_relative_eq!(c_d_closed(4), 32.0 * PI.powi(3) / 225.0, max_relative = 1e-13);
        // B(2, 3/2) = 4/15 → c₃' = 4π·8·(π/8)²·4/15 = 2π³/15
        assert_relative_eq!(c_d_prime_closed(3), 2.0 * PI.powi(3) / 15.0, max_relative = 1e-13);
        // B(2, 2) = 1/6 → c₄' = 4π·π³·(16/225)/6
        assert_relative_eq!(c_d_prime_closed(4), 64.0 * PI.powi(4) / 1350.0, max_relative = 1e-13);
        for d in 3..=10 {
            assert!(c_d_closed(d) > 0.0 && c_d_prime_closed(d) > 0.0);
            let lc = LimitConstants::new(d).unwrap();
            assert!(lc.kappa.is_finite() && lc.c_d.is_finite() && lc.c_d_prime.is_finite());
        }
        assert!(LimitConstants::new(2).is_err());
    }

    #[test]
    fn monte_carlo_small_runs_agree() {
        for d in [3, 5] {
            let est = c_d_montecarlo(d, 400_000, RngStream::new(1, d as u64)).unwrap();
            assert!(est.estimate >= 0.0);
            assert!(est.z_score(c_d_closed(d)).abs() < 4.0, "d={d}: {est:?} vs {}", c_d_closed(d));
        }
        let est = c_d_prime_montecarlo(3, 2_000_000, RngStream::new(2, 0)).unwrap();
        assert!(est.z_score(c_d_prime_closed(3)).abs() < 4.0, "{est:?}");
        assert!(c_d_montecarlo(3, 10, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn monte_carlo_reproducible() {
        let a = c_d_montecarlo(3, 100_000, RngStream::new(5, 5)).unwrap();
        let b = c_d_montecarlo(3, 100_000, RngStream::new(5, 5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn projected_ball_points_have_slice_density() {
        // P(|x_L| <= 1/2) for uniform x in B_3 is 1 - (3/4)^{3/2}.
        let mut rng = RngStream::new(3, 3).rng();
        let n = 200_000;
        let inside = (0..n).filter(|_| projected_ball_point(&mut rng, 3).norm_sq() <= 0.25).count();
        let p = 1.0 - 0.75f64.powf(1.5);
        let frac = inside as f64 / n as f64;
        assert!((frac - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{frac} vs {p}");
    }
}
