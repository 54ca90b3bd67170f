//! Replication harness and the statistical test battery.

mod battery;
mod calibration;
mod experiment;

pub use battery::{
    clt_test, clt_test_columns, correlation_test, dispersion_test, independence_test, kolmogorov_sf, ks_normal,
    local_intensity_check, mean_check, poisson_gof, skew_kurtosis, standardize, z_critical, CltOptions, LocalTolerance,
    TestReport,
};
pub use calibration::{calibrate, null_trial, CalibrationResult, TestKind};
pub use experiment::{
    read_records_csv, records_at, replication_stream, run_replications, write_records_csv, ExperimentConfig,
    ReplicationRecord, Summary, RECORD_COLUMNS,
};

/// Writes reports as JSON lines.
pub fn write_reports_jsonl<W: std::io::Write>(reports: &[TestReport], mut out: W) -> crate::Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
