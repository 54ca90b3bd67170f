//! Null calibration: each test is run on synthetic data drawn from its null
//! hypothesis, and the rejection rate is compared with the nominal level.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::Serialize;

use super::battery::{
    clt_test_columns, correlation_test, dispersion_test, mean_check, poisson_gof, CltOptions, LocalTolerance,
    TestReport,
};
use crate::error::{arg_err, Result};
use crate::sampling::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Dispersion,
    PoissonGof,
    Independence,
    LocalIntensity,
    Clt,
}

impl TestKind {
    pub const ALL: [TestKind; 5] =
        [Self::Dispersion, Self::PoissonGof, Self::Independence, Self::LocalIntensity, Self::Clt];

    /// Tests exercised by the Poisson battery.
    pub const POISSON: [TestKind; 4] = [Self::Dispersion, Self::PoissonGof, Self::Independence, Self::LocalIntensity];
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub test: TestKind,
    pub trials: usize,
    pub rejections: usize,
    pub rate: f64,
    /// `α + 2√(α/trials)`
    pub bound: f64,
    pub passed: bool,
}

const NULL_MEAN: f64 = 5.0;
const COUNT_SAMPLES: usize = 1000;
const CLT_SAMPLES: usize = 500;

fn poisson_column(rng: &mut ChaCha8Rng, n: usize) -> Vec<u64> {
    let law = Poisson::new(NULL_MEAN).expect("positive mean");
    (0..n).map(|_| law.sample(rng) as u64).collect()
}

fn as_f64(xs: &[u64]) -> Vec<f64> {
    xs.iter().map(|&x| x as f64).collect()
}

/// One draw of the test on synthetic null data.
pub fn null_trial(kind: TestKind, level: f64, stream: RngStream) -> Result<TestReport> {
    let mut rng = stream.rng();
    match kind {
        TestKind::Dispersion => dispersion_test(&poisson_column(&mut rng, COUNT_SAMPLES), level),
        TestKind::PoissonGof => poisson_gof(&poisson_column(&mut rng, COUNT_SAMPLES), NULL_MEAN, level),
        TestKind::Independence => {
            let a = as_f64(&poisson_column(&mut rng, COUNT_SAMPLES));
            let b = as_f64(&poisson_column(&mut rng, COUNT_SAMPLES));
            correlation_test(&[a, b], level)
        }
        TestKind::LocalIntensity => {
            let a = as_f64(&poisson_column(&mut rng, COUNT_SAMPLES));
            let b = as_f64(&poisson_column(&mut rng, COUNT_SAMPLES));
            mean_check(&[a, b], &[NULL_MEAN, NULL_MEAN], LocalTolerance::at_level(level, 2, 0.0), level)
        }
        TestKind::Clt => {
            let sigma: [[f64; 2]; 2] = [[2.0, 0.6], [0.6, 0.5]];
            let l11 = sigma[0][0].sqrt();
            let l21 = sigma[0][1] / l11;
            let l22 = (sigma[1][1] - l21 * l21).sqrt();
            let (mut x, mut y) = (Vec::with_capacity(CLT_SAMPLES), Vec::with_capacity(CLT_SAMPLES));
            for _ in 0..CLT_SAMPLES {
                let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                x.push(l11 * a);
                y.push(l21 * a + l22 * b);
            }
            clt_test_columns(&[&x, &y], Some(sigma), CltOptions { level, ..CltOptions::default() })
        }
    }
}

/// Rejection rate of `kind` over `trials` seeded null draws.
pub fn calibrate(kind: TestKind, trials: usize, level: f64, seed: u64) -> Result<CalibrationResult> {
    if trials == 0 {
        return arg_err("calibration needs at least one trial");
    }
    let mut rejections = 0;
    for k in 0..trials as u64 {
        let report = null_trial(kind, level, RngStream::new(seed, k))?;
        if !report.passed {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / trials as f64;
    let bound = level + 2.0 * (level / trials as f64).sqrt();
    Ok(CalibrationResult { test: kind, trials, rejections, rate, bound, passed: rate <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_calibration_runs() {
        for kind in TestKind::ALL {
            let r = calibrate(kind, 40, 0.01, 11).unwrap();
            assert_eq!(r.trials, 40);
            assert!(r.rejections <= 3, "{r:?}");
        }
        assert!(calibrate(TestKind::Clt, 0, 0.01, 0).is_err());
    }
}
