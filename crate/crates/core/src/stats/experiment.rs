//! Seeded replication harness and the records it produces.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossings::{count_in_region, enumerate_crossings};
use crate::error::{config_err, Error, Result};
use crate::geometry::{ProjectionPlane, Region2, Window};
use crate::sampling::{build_rgg, sample_poisson_process, Regime, RegimeSpec, RngStream};
use crate::stress::{stress_total, tree_sum, StressWeight};
use crate::theory::normalize_f;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub window: Window,
    pub plane: ProjectionPlane,
    pub regime: Regime,
    pub t_values: Vec<f64>,
    pub replications: usize,
    pub regions: Vec<Region2>,
    pub seed: u64,
    pub weight: StressWeight,
    pub compute_stress: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<RegimeSpec> {
        if self.replications == 0 {
            return config_err("replications must be at least 1");
        }
        if self.t_values.is_empty() {
            return config_err("t_values must not be empty");
        }
        if let Some(t) = self.t_values.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return config_err(format!("t_values must be positive, got {t}"));
        }
        if self.plane.dim() != self.window.dim() {
            return config_err(format!(
                "plane dimension {} does not match window dimension {}",
                self.plane.dim(),
                self.window.dim()
            ));
        }
        self.window.projected_bounds(&self.plane)?;
        for r in &self.regions {
            r.validate()?;
        }
        RegimeSpec::new(self.regime, self.window.dim())
    }
}

/// One replication. `stress` and `f2` are absent when stress is not computed.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationRecord {
    pub t: f64,
    pub replication: u64,
    pub n_points: u64,
    pub n_edges: u64,
    pub crossings: u64,
    pub region_counts: Vec<u64>,
    pub stress: Option<f64>,
    pub f1: f64,
    pub f2: Option<f64>,
}

/// The random stream of replication `rep` at the `t_index`-th intensity.
pub fn replication_stream(seed: u64, t_index: usize, rep: u64) -> RngStream {
    RngStream::new(seed, ((t_index as u64) << 40) | rep)
}

fn simulate_one(cfg: &ExperimentConfig, spec: &RegimeSpec, t_index: usize, rep: u64) -> Result<ReplicationRecord> {
    let t = cfg.t_values[t_index];
    let delta = spec.delta_for(t)?;
    let mut rng = replication_stream(cfg.seed, t_index, rep).rng();
    let points = sample_poisson_process(&cfg.window, t, &mut rng)?;
    let stress = cfg.compute_stress.then(|| stress_total(&points, &cfg.plane, &cfg.weight));
    let graph = build_rgg(points, delta)?;
    let events = enumerate_crossings(&graph, &cfg.plane);
    Ok(ReplicationRecord {
        t,
        replication: rep,
        n_points: graph.points().len() as u64,
        n_edges: graph.edges().len() as u64,
        crossings: events.len() as u64,
        region_counts: cfg.regions.iter().map(|r| count_in_region(&events, r) as u64).collect(),
        stress,
        f1: 0.0,
        f2: None,
    })
}

/// Runs every replication at every intensity, in parallel on independent
/// streams. Records are ordered by `(t index, replication)`; `F1`, `F2` are
/// centred by the empirical mean of their intensity group.
pub fn run_replications(cfg: &ExperimentConfig) -> Result<Vec<ReplicationRecord>> {
    let spec = cfg.validate()?;
    let d = cfg.window.dim();
    let mut out = Vec::with_capacity(cfg.t_values.len() * cfg.replications);
    for (ti, &t) in cfg.t_values.iter().enumerate() {
        let mut group = (0..cfg.replications as u64)
            .into_par_iter()
            .map(|rep| simulate_one(cfg, &spec, ti, rep))
            .collect::<Result<Vec<_>>>()?;
        let delta = spec.delta_for(t)?;
        let crossings: Vec<f64> = group.iter().map(|r| r.crossings as f64).collect();
        let mean_c = tree_sum(&crossings) / group.len() as f64;
        let mean_s = if cfg.compute_stress {
            let s: Vec<f64> = group.iter().map(|r| r.stress.unwrap_or(0.0)).collect();
            tree_sum(&s) / group.len() as f64
        } else {
            0.0
        };
        for r in &mut group {
            let (f1, f2) = normalize_f(d, t, delta, r.crossings as f64, r.stress.unwrap_or(0.0), mean_c, mean_s);
            r.f1 = f1;
            r.f2 = r.stress.map(|_| f2);
        }
        out.extend(group);
    }
    Ok(out)
}

/// Fixed leading columns of the records CSV; per-region counts follow as
/// `region_0`, `region_1`, ….
pub const RECORD_COLUMNS: [&str; 8] = ["t", "replication", "n_points", "n_edges", "crossings", "stress", "f1", "f2"];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes records as CSV. Floats use the shortest representation that
/// parses back to the same value.
pub fn write_records_csv<W: Write>(records: &[ReplicationRecord], n_regions: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = RECORD_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..n_regions).map(|k| format!("region_{k}")));
    w.write_record(&header)?;
    for r in records {
        if r.region_counts.len() != n_regions {
            return Err(Error::Argument("record region count does not match header".into()));
        }
        let mut row = vec![
            r.t.to_string(),
            r.replication.to_string(),
            r.n_points.to_string(),
            r.n_edges.to_string(),
            r.crossings.to_string(),
            opt(r.stress),
            r.f1.to_string(),
            opt(r.f2),
        ];
        row.extend(r.region_counts.iter().map(|c| c.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<ReplicationRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    let fixed = RECORD_COLUMNS.len();
    if header.len() < fixed || header.iter().take(fixed).ne(RECORD_COLUMNS.iter().copied()) {
        return Err(Error::Argument(format!("unexpected records header: {header:?}")));
    }
    let bad = |field: &str, row: usize| Error::Argument(format!("row {row}: cannot parse column {field}"));
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let num = |k: usize| -> Result<f64> { row[k].parse().map_err(|_| bad(RECORD_COLUMNS[k], i)) };
        let int = |k: usize| -> Result<u64> { row[k].parse().map_err(|_| bad(&header[k], i)) };
        let maybe = |k: usize| -> Result<Option<f64>> {
            if row[k].is_empty() {
                Ok(None)
            } else {
                num(k).map(Some)
            }
        };
        out.push(ReplicationRecord {
            t: num(0)?,
            replication: int(1)?,
            n_points: int(2)?,
            n_edges: int(3)?,
            crossings: int(4)?,
            stress: maybe(5)?,
            f1: num(6)?,
            f2: maybe(7)?,
            region_counts: (fixed..row.len()).map(int).collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

/// Per-group view: the records at intensity `t`.
pub fn records_at(records: &[ReplicationRecord], t: f64) -> Vec<&ReplicationRecord> {
    records.iter().filter(|r| r.t == t).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

impl Summary {
    /// Sample mean and unbiased variance.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { n, mean: f64::NAN, variance: f64::NAN };
        }
        let mean = tree_sum(xs) / n as f64;
        let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let variance = if n > 1 { tree_sum(&sq) / (n - 1) as f64 } else { 0.0 };
        Self { n, mean, variance }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }
}
