use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use projrgg::stats::{
    calibrate, clt_test, dispersion_test, independence_test, local_intensity_check, poisson_gof, run_replications,
    write_records_csv, write_reports_jsonl, CltOptions, LocalTolerance, ReplicationRecord, TestKind, TestReport,
};
use projrgg::theory::{
    c_d_closed, c_d_montecarlo, c_d_prime_closed, c_d_prime_montecarlo, limit_intensity, stress_profile_integrals,
    unit_ball_volume, CubeMoments,
};
use projrgg::{GridQuadrature, Regime, Region2, RngStream, WindowKind};

use crate::config::LoadedConfig;
use crate::manifest::{sha256_hex, CommandKind, Manifest, MANIFEST_FILE, RECORDS_FILE, REPORT_FILE};

pub const CALIBRATION_TRIALS: usize = 200;
pub const CONSTANTS_HEADER: &str = "d,kappa,c_d_closed,c_d_mc,c_d_mc_se,c_d_prime_closed,c_d_prime_mc,c_d_prime_mc_se";

pub fn constants(lo: usize, hi: usize, samples: u64, seed: u64) -> Result<String> {
    let mut out = String::from(CONSTANTS_HEADER);
    out.push('\n');
    for d in lo..=hi {
        let mc = c_d_montecarlo(d, samples, RngStream::new(seed, 2 * d as u64))?;
        let mcp = c_d_prime_montecarlo(d, samples, RngStream::new(seed, 2 * d as u64 + 1))?;
        out.push_str(&format!(
            "{d},{},{},{},{},{},{},{}\n",
            unit_ball_volume(d - 2),
            c_d_closed(d),
            mc.estimate,
            mc.std_error,
            c_d_prime_closed(d),
            mcp.estimate,
            mcp.std_error
        ));
    }
    Ok(out)
}

/// Options shared by every experiment command; all are recorded in the
/// manifest.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub command: CommandKind,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub level: Option<f64>,
    pub tolerance_scale: f64,
    pub calibrate: bool,
}

pub struct RunOutput {
    pub manifest: Manifest,
    pub records: Option<(Vec<u8>, usize)>,
    pub reports: Vec<TestReport>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }

    /// Writes all files; nothing is written before the run has completed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        if let Some((csv, _)) = &self.records {
            std::fs::write(dir.join(RECORDS_FILE), csv)?;
        }
        if !self.reports.is_empty() {
            let mut buf = Vec::new();
            write_reports_jsonl(&self.reports, &mut buf)?;
            std::fs::write(dir.join(REPORT_FILE), buf)?;
        }
        std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&self.manifest)? + "\n")?;
        Ok(())
    }
}

fn with_t(t: f64, mut r: TestReport) -> TestReport {
    r.detail = format!("t={t}; {}", r.detail);
    r
}

fn calibration_reports(kinds: &[TestKind], level: f64, seed: u64) -> Result<Vec<TestReport>> {
    kinds
        .iter()
        .map(|&kind| {
            let c = calibrate(kind, CALIBRATION_TRIALS, level, seed)?;
            Ok(TestReport {
                test: format!("calibration:{}", serde_json::to_value(kind)?.as_str().unwrap_or("?")),
                statistic: c.rate,
                reference: c.bound,
                p_value: None,
                z_score: None,
                level,
                passed: c.passed,
                degenerate: false,
                detail: format!("{} of {} null trials rejected", c.rejections, c.trials),
            })
        })
        .collect()
}

fn group(records: &[ReplicationRecord], t: f64) -> Vec<ReplicationRecord> {
    records.iter().filter(|r| r.t == t).cloned().collect()
}

fn poisson_reports(
    cfg: &LoadedConfig,
    records: &[ReplicationRecord],
    level: f64,
    scale: f64,
) -> Result<Vec<TestReport>> {
    let exp = &cfg.experiment;
    let Regime::Sparse { c } = exp.regime else { unreachable!("checked by the caller") };
    let q = GridQuadrature::new(cfg.file.tests.quadrature_cells)?;
    let full = limit_intensity(&exp.window, &exp.plane, c, &Region2::FullPlane, q)?;
    let references = exp
        .regions
        .iter()
        .map(|r| limit_intensity(&exp.window, &exp.plane, c, r, q))
        .collect::<projrgg::Result<Vec<_>>>()?;
    let tol = LocalTolerance::at_level(level, exp.regions.len(), cfg.file.tests.intensity_slack * scale);
    let mut reports = Vec::new();
    for &t in &exp.t_values {
        let g = group(records, t);
        let counts: Vec<u64> = g.iter().map(|r| r.crossings).collect();
        reports.push(with_t(t, dispersion_test(&counts, level)?));
        reports.push(with_t(t, poisson_gof(&counts, full, level)?));
        if exp.regions.len() >= 2 {
            reports.push(with_t(t, independence_test(&g, &exp.regions, level)?));
        }
        if !exp.regions.is_empty() {
            reports.push(with_t(t, local_intensity_check(&g, &exp.regions, &references, tol, level)?));
        }
    }
    Ok(reports)
}

fn clt_reports(cfg: &LoadedConfig, records: &[ReplicationRecord], level: f64, scale: f64) -> Result<Vec<TestReport>> {
    let exp = &cfg.experiment;
    let Regime::Thermodynamic { c } = exp.regime else { unreachable!("checked by the caller") };
    let tests = &cfg.file.tests;
    let profile = if exp.window.kind() == WindowKind::Cube {
        Some(stress_profile_integrals(&exp.window, &exp.plane, &exp.weight, tests.s1_quadrature())?)
    } else {
        None
    };
    let opts = CltOptions { level, relative_tolerance: tests.sigma_tolerance.map(|x| x * scale) };
    let mut reports = Vec::new();
    for &t in &exp.t_values {
        let sigma = match &profile {
            Some(p) => Some(CubeMoments::new(exp.window.dim(), t, c, p)?.sigma),
            None => None,
        };
        reports.push(with_t(t, clt_test(&group(records, t), sigma, opts)?));
    }
    Ok(reports)
}

pub fn run(cfg: &LoadedConfig, opts: &RunOptions) -> Result<RunOutput> {
    let mut cfg = cfg.clone();
    let seed = opts.seed.unwrap_or(cfg.file.seed);
    cfg.experiment.seed = seed;
    let level = opts.level.unwrap_or(cfg.file.tests.level);
    if !(level > 0.0 && level < 1.0) {
        bail!("--level: must lie in (0, 1), got {level}");
    }
    if !(opts.tolerance_scale.is_finite() && opts.tolerance_scale >= 0.0) {
        bail!("--tolerance-scale: must be non-negative");
    }
    let regime_name = match cfg.experiment.regime {
        Regime::Sparse { .. } => "sparse",
        Regime::Thermodynamic { .. } => "thermodynamic",
        Regime::Explicit { .. } => "explicit",
    };
    match opts.command {
        CommandKind::PoissonTest if regime_name != "sparse" => {
            bail!("regime: poisson-test requires the sparse regime, got {regime_name}")
        }
        CommandKind::CltTest if regime_name != "thermodynamic" => {
            bail!("regime: clt-test requires the thermodynamic regime, got {regime_name}")
        }
        _ => {}
    }
    if !opts.calibrate {
        let needed = match opts.command {
            CommandKind::PoissonTest => 100,
            CommandKind::CltTest => 500,
            CommandKind::Simulate => 1,
        };
        if cfg.experiment.replications < needed {
            bail!("replications: this command needs at least {needed}, got {}", cfg.experiment.replications);
        }
        if opts.command == CommandKind::PoissonTest {
            for (i, a) in cfg.experiment.regions.iter().enumerate() {
                if cfg.experiment.regions[i + 1..].iter().any(|b| a == b || a.overlaps(b)) {
                    bail!("regions: region {i} overlaps another region");
                }
            }
        }
        if opts.command == CommandKind::CltTest {
            cfg.experiment.compute_stress = true;
        }
    }

    let mut manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: opts.command,
        seed,
        threads: opts.threads,
        level,
        tolerance_scale: opts.tolerance_scale,
        calibrate: opts.calibrate,
        config_sha256: sha256_hex(cfg.text.as_bytes()),
        config: cfg.text.clone(),
        records_sha256: None,
        passed: None,
    };

    if opts.calibrate {
        let kinds: &[TestKind] = match opts.command {
            CommandKind::PoissonTest => &TestKind::POISSON,
            CommandKind::CltTest => &[TestKind::Clt],
            CommandKind::Simulate => bail!("--calibrate applies to the test commands only"),
        };
        let reports = calibration_reports(kinds, level, seed)?;
        manifest.passed = Some(reports.iter().all(|r| r.passed));
        return Ok(RunOutput { manifest, records: None, reports });
    }

    let records = run_replications(&cfg.experiment)?;
    let mut csv = Vec::new();
    write_records_csv(&records, cfg.experiment.regions.len(), &mut csv)?;
    manifest.records_sha256 = Some(sha256_hex(&csv));
    let reports = match opts.command {
        CommandKind::Simulate => Vec::new(),
        CommandKind::PoissonTest => poisson_reports(&cfg, &records, level, opts.tolerance_scale)?,
        CommandKind::CltTest => clt_reports(&cfg, &records, level, opts.tolerance_scale)?,
    };
    if opts.command != CommandKind::Simulate {
        manifest.passed = Some(reports.iter().all(|r| r.passed));
    }
    Ok(RunOutput { manifest, records: Some((csv, records.len())), reports })
}

/// Output directory: the flag, then `PROJRGG_OUT_DIR`, then `./projrgg-out`.
pub fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("PROJRGG_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("projrgg-out"))
}
