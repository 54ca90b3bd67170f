//! Acceptance suite. Prints one `PASS`/`FAIL` line per checked item, grouped
//! by criterion, and exits non-zero if any item fails.
//!
//! Run everything with `cargo test --test acceptance`, or a subset with
//! `cargo test --test acceptance -- 1 7`.

use std::time::{Duration, Instant};

use projrgg::special::{beta, unit_ball_volume};
use projrgg::stats::{
    calibrate, correlation_test, dispersion_test, ks_normal, poisson_gof, run_replications, skew_kurtosis, standardize,
    ExperimentConfig, ReplicationRecord, Summary, TestKind,
};
use projrgg::theory::{
    c_d_closed, c_d_montecarlo, c_d_prime_closed, c_d_prime_montecarlo, cube_covariance_cross_stress,
    cube_variance_crossings, limit_intensity, stress_profile_integrals, McEstimate, S1Quadrature,
};
use projrgg::{
    build_rgg, enumerate_crossings, enumerate_crossings_bruteforce, fiber_integral, sample_poisson_process,
    GridQuadrature, Point2, PointSet, ProjectionPlane, Regime, RegimeSpec, Region2, RngStream, StressWeight, Window,
};

struct Outcome {
    failures: usize,
    checks: usize,
}

impl Outcome {
    fn check(&mut self, criterion: u32, ok: bool, what: impl AsRef<str>) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
        }
        println!("{} [{criterion}] {}", if ok { "PASS" } else { "FAIL" }, what.as_ref());
    }

    fn info(&self, criterion: u32, what: impl AsRef<str>) {
        println!("INFO [{criterion}] {}", what.as_ref());
    }
}

fn cube3() -> (Window, ProjectionPlane) {
    (Window::cube(3).unwrap(), ProjectionPlane::coordinate(3))
}

fn counts(records: &[ReplicationRecord]) -> Vec<u64> {
    records.iter().map(|r| r.crossings).collect()
}

fn as_f64(xs: &[u64]) -> Vec<f64> {
    xs.iter().map(|&x| x as f64).collect()
}

fn within_se(est: &McEstimate, value: f64) -> bool {
    (est.estimate - value).abs() <= 3.0 * est.std_error
}

// 1. Closed-form constants against Monte Carlo evaluations of their defining
// integrals, 10^7 samples each, under a minute in total.
fn constants(out: &mut Outcome) {
    const N: u64 = 10_000_000;
    let start = Instant::now();
    let reference_values = [(3, 2.33434, 0.059284), (4, 1.72259, 0.033821)];
    for (d, ref_cd, ref_cdp) in reference_values {
        let mc = c_d_montecarlo(d, N, RngStream::new(1, d as u64)).unwrap();
        let mcp = c_d_prime_montecarlo(d, N, RngStream::new(2, d as u64)).unwrap();
        let (cd, cdp) = (c_d_closed(d), c_d_prime_closed(d));
        out.check(
            1,
            within_se(&mc, cd),
            format!("d={d}: c_d closed {cd:.6} vs MC {:.6} ± {:.6} (3 s.e.)", mc.estimate, mc.std_error),
        );
        out.check(
            1,
            within_se(&mcp, cdp),
            format!("d={d}: c_d' closed {cdp:.6} vs MC {:.6} ± {:.6} (3 s.e.)", mcp.estimate, mcp.std_error),
        );

        let k = unit_ball_volume(d - 2);
        let b3 = beta(3.0, d as f64 / 2.0);
        let published_cd = 8.0 * std::f64::consts::PI * k * k * b3 * b3;
        let published_cdp = std::f64::consts::PI * k.powi(3) * b3 * b3 * beta(4.0, d as f64 / 2.0);
        out.info(
            1,
            format!(
                "d={d}: reference values c_d={ref_cd}, c_d'={ref_cdp}; \
            8πκ²B(3,d/2)² = {published_cd:.6}, πκ³B(3,d/2)²B(4,d/2) = {published_cdp:.6}"
            ),
        );
        out.check(
            1,
            within_se(&mc, ref_cd),
            format!(
                "d={d}: reference c_d = {ref_cd} vs MC {:.6} ± {:.6} (z = {:.1})",
                mc.estimate,
                mc.std_error,
                mc.z_score(ref_cd)
            ),
        );
        out.check(
            1,
            within_se(&mcp, ref_cdp),
            format!(
                "d={d}: reference c_d' = {ref_cdp} vs MC {:.6} ± {:.6} (z = {:.1})",
                mcp.estimate,
                mcp.std_error,
                mcp.z_score(ref_cdp)
            ),
        );
    }
    let elapsed = start.elapsed();
    out.check(1, elapsed < Duration::from_secs(60), format!("runtime {:.1}s < 60s", elapsed.as_secs_f64()));
}

fn quadrants() -> Vec<Region2> {
    let p = Point2::new;
    vec![Region2::rectangle(p(0.0, 0.0), p(0.5, 0.5)).unwrap(), Region2::rectangle(p(0.5, 0.5), p(1.0, 1.0)).unwrap()]
}

// 2-4. Sparse regime, cube, d = 3, c = 4.14, t = 2000, 10^4 replications.
fn sparse(out: &mut Outcome) {
    let (window, plane) = cube3();
    let c = 4.14;
    let regions = quadrants();
    let cfg = ExperimentConfig {
        window,
        plane: plane.clone(),
        regime: Regime::Sparse { c },
        t_values: vec![2000.0],
        replications: 10_000,
        regions: regions.clone(),
        seed: 2024,
        weight: StressWeight::InverseSq,
        compute_stress: false,
    };
    let start = Instant::now();
    let records = run_replications(&cfg).unwrap();
    let elapsed = start.elapsed();
    let q = GridQuadrature::default();
    let reference = limit_intensity(&window, &plane, c, &Region2::FullPlane, q).unwrap();
    let totals = counts(&records);
    let s = Summary::of(&as_f64(&totals));
    let se = s.std_error();

    let tol = 3.0 * se + 0.05 * reference;
    out.check(
        2,
        (s.mean - reference).abs() <= tol,
        format!(
            "mean crossings {:.4} ± {se:.4} vs limit intensity {reference:.4} (|diff| {:.4} ≤ {tol:.4})",
            s.mean,
            (s.mean - reference).abs()
        ),
    );
    out.info(2, format!("approximation 0.29179·c² = {:.4}", 0.29179 * c * c));
    out.check(2, elapsed < Duration::from_secs(600), format!("runtime {:.1}s < 600s", elapsed.as_secs_f64()));

    let d = s.variance / s.mean;
    out.check(3, (0.95..=1.05).contains(&d), format!("dispersion index {d:.4} in [0.95, 1.05]"));
    let gof = poisson_gof(&totals, reference, 0.01).unwrap();
    out.check(
        3,
        gof.passed,
        format!(
            "χ² GOF to Poisson({reference:.4}): stat {:.1}, df {}, p = {:.3e} (level 0.01)",
            gof.statistic,
            gof.reference,
            gof.p_value.unwrap_or(f64::NAN)
        ),
    );
    let gof_emp = poisson_gof(&totals, s.mean, 0.01).unwrap();
    out.info(
        3,
        format!("χ² GOF to Poisson(sample mean {:.4}): p = {:.3e}", s.mean, gof_emp.p_value.unwrap_or(f64::NAN)),
    );
    let cols: Vec<Vec<f64>> =
        (0..regions.len()).map(|k| records.iter().map(|r| r.region_counts[k] as f64).collect()).collect();
    let ind = correlation_test(&cols, 0.01).unwrap();
    out.check(
        3,
        ind.passed,
        format!(
            "quadrant counts uncorrelated: r = {:.4}, Bonferroni p = {:.3} (level 0.01)",
            ind.statistic,
            ind.p_value.unwrap_or(f64::NAN)
        ),
    );
    for (k, region) in regions.iter().enumerate() {
        let reference = limit_intensity(&window, &plane, c, region, q).unwrap();
        let rs = Summary::of(&cols[k]);
        let tol = 3.0 * rs.std_error() + 0.05 * reference;
        out.check(
            3,
            (rs.mean - reference).abs() <= tol,
            format!(
                "quadrant {k}: mean {:.4} ± {:.4} vs {reference:.4} (|diff| {:.4} ≤ {tol:.4})",
                rs.mean,
                rs.std_error(),
                (rs.mean - reference).abs()
            ),
        );
    }
    let disp = dispersion_test(&totals, 0.01).unwrap();
    out.info(
        3,
        format!(
            "dispersion χ² test: z = {:.1}, p = {:.3e}",
            disp.z_score.unwrap_or(f64::NAN),
            disp.p_value.unwrap_or(f64::NAN)
        ),
    );

    let rel = (s.variance - s.mean).abs() / s.mean;
    out.check(
        4,
        rel <= 0.1,
        format!("|Var − mean|/mean = |{:.4} − {:.4}|/{:.4} = {rel:.4} ≤ 0.1", s.variance, s.mean, s.mean),
    );
}

fn thermodynamic_config(t_values: Vec<f64>, replications: usize, seed: u64, stress: bool) -> ExperimentConfig {
    let (window, plane) = cube3();
    ExperimentConfig {
        window,
        plane,
        regime: Regime::Thermodynamic { c: 1.0 },
        t_values,
        replications,
        regions: Vec::new(),
        seed,
        weight: StressWeight::InverseSq,
        compute_stress: stress,
    }
}

fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (Summary::of(x).mean, Summary::of(y).mean);
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() - 1) as f64
}

// 5-6. Thermodynamic regime, cube, d = 3, c = 1.
fn clt(out: &mut Outcome) {
    let (window, plane) = cube3();
    let t = 1000.0;
    let start = Instant::now();
    let profile = stress_profile_integrals(&window, &plane, &StressWeight::InverseSq, S1Quadrature::default()).unwrap();
    out.info(
        5,
        format!(
            "∫S¹ = {:.6}, ∫(S¹)² = {:.6} (32³ outer grid × 10⁵ Halton points, {:.1}s)",
            profile.integral,
            profile.integral_sq,
            start.elapsed().as_secs_f64()
        ),
    );

    let records = run_replications(&thermodynamic_config(vec![t], 2000, 77, true)).unwrap();
    let xi = as_f64(&counts(&records));
    let stress: Vec<f64> = records.iter().map(|r| r.stress.unwrap()).collect();

    let var_ref = cube_variance_crossings(3, t, 1.0).unwrap();
    let var_xi = Summary::of(&xi).variance;
    out.info(5, format!("mean crossings {:.1}, mean stress {:.1}", Summary::of(&xi).mean, Summary::of(&stress).mean));
    out.check(
        5,
        (var_xi / var_ref - 1.0).abs() <= 0.10,
        format!("Var ξ = {var_xi:.4e} vs {var_ref:.4e} (ratio {:.4}, within 10%)", var_xi / var_ref),
    );
    let cov_ref = cube_covariance_cross_stress(3, t, 1.0, profile.integral).unwrap();
    let cov = covariance(&xi, &stress);
    out.check(
        5,
        (cov / cov_ref - 1.0).abs() <= 0.15,
        format!("Cov(ξ, stress) = {cov:.4e} vs {cov_ref:.4e} (ratio {:.4}, within 15%)", cov / cov_ref),
    );
    let var_s = Summary::of(&stress).variance / t.powi(3);
    out.check(
        5,
        (var_s / profile.integral_sq - 1.0).abs() <= 0.10,
        format!(
            "Var(stress)/t³ = {var_s:.6} vs ∫(S¹)² = {:.6} (ratio {:.4}, within 10%)",
            profile.integral_sq,
            var_s / profile.integral_sq
        ),
    );
    let elapsed = start.elapsed();
    out.check(5, elapsed < Duration::from_secs(1800), format!("runtime {:.1}s < 1800s", elapsed.as_secs_f64()));

    for (name, col) in [
        ("F1", records.iter().map(|r| r.f1).collect::<Vec<_>>()),
        ("F2", records.iter().map(|r| r.f2.unwrap()).collect()),
    ] {
        let (ks, p) = ks_normal(&standardize(&col));
        out.check(6, p >= 0.01, format!("{name}: KS {ks:.4}, p = {p:.4} (level 0.01)"));
        let (g1, g2) = skew_kurtosis(&col);
        out.check(6, g1.abs() <= 0.15, format!("{name}: |skewness| {:.4} ≤ 0.15", g1.abs()));
        out.check(6, g2.abs() <= 0.3, format!("{name}: |excess kurtosis| {:.4} ≤ 0.3", g2.abs()));
    }

    // KS statistic of the standardised crossing count at t = 500 vs t = 2000,
    // 20 seeded repeats of 500 replications each.
    let mut improved = 0;
    for k in 0..20 {
        let recs = run_replications(&thermodynamic_config(vec![500.0, 2000.0], 500, 1000 + k, false)).unwrap();
        let ks_at = |t: f64| {
            let f1: Vec<f64> = recs.iter().filter(|r| r.t == t).map(|r| r.f1).collect();
            ks_normal(&standardize(&f1)).0
        };
        if ks_at(2000.0) <= ks_at(500.0) {
            improved += 1;
        }
    }
    out.check(6, improved >= 16, format!("KS(t=2000) ≤ KS(t=500) in {improved}/20 repeats (need ≥ 16)"));
}

fn rgg_bruteforce(points: &PointSet, delta: f64) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d2: f64 = points.get(i).iter().zip(points.get(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 <= delta * delta {
                edges.push((i as u32, j as u32));
            }
        }
    }
    edges
}

// 7. Accelerated algorithms against quadratic scans.
fn oracles(out: &mut Outcome) {
    let spec = RegimeSpec::new(Regime::Thermodynamic { c: 1.0 }, 3).unwrap();
    let delta = spec.delta_for(500.0).unwrap();
    let tilted = ProjectionPlane::from_basis(vec![0.6, 0.8, 0.0], vec![-0.8 * 0.6, 0.6 * 0.6, 0.8]).unwrap();
    let cases = [
        (Window::cube(3).unwrap(), ProjectionPlane::coordinate(3)),
        (Window::ball(3).unwrap(), ProjectionPlane::coordinate(3)),
        (Window::ball(3).unwrap(), tilted),
    ];
    let (mut equal, mut events) = (0, 0);
    for k in 0..300u64 {
        let (w, pl) = &cases[k as usize % cases.len()];
        let pts = sample_poisson_process(w, 500.0, &mut RngStream::new(7, k).rng()).unwrap();
        let g = build_rgg(pts, delta).unwrap();
        let fast = enumerate_crossings(&g, pl);
        events += fast.len();
        if fast == enumerate_crossings_bruteforce(&g, pl) {
            equal += 1;
        }
    }
    out.check(
        7,
        equal == 300,
        format!("crossing enumeration ≡ brute force on {equal}/300 instances ({events} events)"),
    );

    let mut equal = 0;
    for k in 0..200u64 {
        let d = 3 + (k % 3) as usize;
        let w = if k % 2 == 0 { Window::cube(d).unwrap() } else { Window::ball(d).unwrap() };
        let t = 200.0 + 10.0 * k as f64;
        let delta =
            RegimeSpec::new(Regime::Thermodynamic { c: 1.0 + (k % 4) as f64 }, d).unwrap().delta_for(t).unwrap();
        let pts = sample_poisson_process(&w, t, &mut RngStream::new(8, k).rng()).unwrap();
        let brute = rgg_bruteforce(&pts, delta);
        if build_rgg(pts, delta).unwrap().edges() == brute.as_slice() {
            equal += 1;
        }
    }
    out.check(7, equal == 200, format!("grid RGG ≡ O(n²) scan on {equal}/200 instances"));
}

// 8. Fiber-measure identities.
fn geometry(out: &mut Outcome) {
    let q = GridQuadrature::new(2048).unwrap();
    for d in [3, 4] {
        let pl = ProjectionPlane::coordinate(d);
        for w in [Window::cube(d).unwrap(), Window::ball(d).unwrap()] {
            let total = fiber_integral(&w, &pl, &Region2::FullPlane, q).unwrap();
            out.check(8, (total - 1.0).abs() <= 1e-3, format!("{:?} d={d}: ∫ fiber over L = {total:.6}", w.kind()));
        }
        let cube = Window::cube(d).unwrap();
        let ball = Window::ball(d).unwrap();
        let r = ball.ball_radius().unwrap();
        let mut rng = RngStream::new(9, d as u64).rng();
        let (mut cube_exact, mut ball_err) = (true, 0.0f64);
        for _ in 0..10_000 {
            use rand::Rng;
            let v = Point2::new(rng.random::<f64>(), rng.random::<f64>());
            cube_exact &= cube.fiber_measure(&pl, v).unwrap() == 1.0;
            let u = Point2::new(r * (2.0 * rng.random::<f64>() - 1.0), r * (2.0 * rng.random::<f64>() - 1.0));
            let h = (r * r - u.norm_sq()).max(0.0);
            let expected = unit_ball_volume(d - 2) * h.powf((d - 2) as f64 / 2.0);
            ball_err = ball_err.max((ball.fiber_measure(&pl, u).unwrap() - expected).abs());
        }
        out.check(8, cube_exact, format!("cube d={d}: fiber ≡ 1 on W|_L (10⁴ points)"));
        out.check(8, ball_err <= 1e-12, format!("ball d={d}: max |fiber − κ(r²−|v|²)^((d−2)/2)| = {ball_err:.2e}"));
    }
}

// 9. Rejection rates under synthetic nulls, 200 seeds, α = 0.01.
fn calibration(out: &mut Outcome) {
    for kind in TestKind::ALL {
        let r = calibrate(kind, 200, 0.01, 31).unwrap();
        out.check(
            9,
            r.passed,
            format!("{kind:?}: {} / 200 rejections, rate {:.4} ≤ {:.4}", r.rejections, r.rate, r.bound),
        );
    }
}

fn main() {
    let selected: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let want = |ids: &[&str]| selected.is_empty() || ids.iter().any(|id| selected.iter().any(|s| s == id));
    let mut out = Outcome { failures: 0, checks: 0 };
    let suites: [(&[&str], fn(&mut Outcome)); 6] = [
        (&["1"], constants),
        (&["2", "3", "4"], sparse),
        (&["5", "6"], clt),
        (&["7"], oracles),
        (&["8"], geometry),
        (&["9"], calibration),
    ];
    for (ids, run) in suites {
        if want(ids) {
            run(&mut out);
        }
    }
    println!("acceptance: {} checks, {} failed", out.checks, out.failures);
    if out.failures > 0 {
        std::process::exit(1);
    }
}
