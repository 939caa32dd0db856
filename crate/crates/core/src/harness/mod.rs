//! Experiment configuration, orchestration and output.
//!
//! An experiment produces a header line, one JSON line per sample and a
//! summary line, plus optional CSV tables. Replicas run in parallel on
//! independent streams and are collected in replica order, so the output
//! is a function of the configuration alone.

pub mod convergence;
pub mod edge_walk;
mod experiments;
pub mod rng;
pub mod stats;

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use convergence::{local_convergence_probe, ConvergenceReport};
pub use edge_walk::{edge_walk_stationarity, edge_walk_visits, StationarityReport, VisitReport};
pub use experiments::{
    census_count, census_frequencies, conjecture_sample, distance_encoding_holds, expected_census,
    hull_sample, round_trip_holds, skeleton_chain_stats, theorem1_sample, ConjectureSample,
    HullSample, SkeletonChainStats, Theorem1Sample,
};
pub use rng::{replica_rng, replica_seed, ReplicaRng};
pub use stats::{chi_square, Aggregate, ChiSquare, StatRecord, Summary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Skeleton(#[from] crate::skeleton_process::SkeletonError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Sample,
    Census,
    SeriesCheck,
    Hull,
    Theorem1,
    SkeletonStats,
    EdgeWalk,
    Converge,
    Conjectures,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Sample => "sample",
            Experiment::Census => "census",
            Experiment::SeriesCheck => "series-check",
            Experiment::Hull => "hull",
            Experiment::Theorem1 => "theorem1",
            Experiment::SkeletonStats => "skeleton-stats",
            Experiment::EdgeWalk => "edge-walk",
            Experiment::Converge => "converge",
            Experiment::Conjectures => "conjectures",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Faces per sampled map; for `census` and `edge-walk` the size of the
    /// exhaustive enumeration.
    pub faces: usize,
    /// Map sizes for experiments running over several sizes.
    pub sizes: Vec<usize>,
    /// Maps, draws or trajectories, depending on the experiment.
    pub samples: usize,
    pub rmax: u32,
    pub seed: u64,
    /// Series truncation order.
    pub truncation: usize,
    /// Ball radius or measurement window.
    pub radius: u32,
    /// Random geodesics per root and sample in `theorem1`.
    pub geodesics: usize,
}

impl ExperimentConfig {
    /// Defaults for each experiment.
    pub fn new(experiment: Experiment) -> Self {
        let base = ExperimentConfig {
            experiment,
            faces: 1000,
            sizes: Vec::new(),
            samples: 10,
            rmax: 10,
            seed: 1,
            truncation: 50,
            radius: 5,
            geodesics: 25,
        };
        match experiment {
            Experiment::Sample => base,
            Experiment::Census => ExperimentConfig {
                faces: 2,
                samples: 10_000,
                ..base
            },
            Experiment::SeriesCheck => ExperimentConfig { rmax: 20, ..base },
            Experiment::Hull => ExperimentConfig {
                faces: 10_000,
                samples: 100,
                ..base
            },
            Experiment::Theorem1 => ExperimentConfig {
                faces: 10_000,
                samples: 200,
                rmax: 30,
                ..base
            },
            Experiment::SkeletonStats => ExperimentConfig {
                samples: 100_000,
                truncation: 256,
                ..base
            },
            Experiment::EdgeWalk => ExperimentConfig {
                faces: 3,
                sizes: vec![1000],
                samples: 200,
                ..base
            },
            Experiment::Converge => ExperimentConfig {
                sizes: vec![100, 1000, 10_000],
                samples: 1000,
                radius: 1,
                ..base
            },
            Experiment::Conjectures => ExperimentConfig {
                faces: 10_000,
                samples: 100,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: String| Err(HarnessError::Config(m));
        let name = self.experiment.name();
        if self.faces == 0 {
            return err(format!("{name}: --n must be at least 1"));
        }
        if self.samples == 0 {
            return err(format!("{name}: --samples must be at least 1"));
        }
        if self.truncation < 2 {
            return err(format!(
                "{name}: --k must be at least 2, got {}",
                self.truncation
            ));
        }
        match self.experiment {
            Experiment::Census if self.faces > 6 => err(format!(
                "census: exhaustive enumeration supports --n up to 6, got {}",
                self.faces
            )),
            Experiment::EdgeWalk if self.faces > 4 => err(format!(
                "edge-walk: exact check supports --n up to 4, got {}",
                self.faces
            )),
            Experiment::EdgeWalk | Experiment::Converge
                if self.sizes.is_empty() || self.sizes.contains(&0) =>
            {
                err(format!("{name}: --sizes must list positive face counts"))
            }
            Experiment::Hull
            | Experiment::Theorem1
            | Experiment::SkeletonStats
            | Experiment::SeriesCheck
                if self.rmax == 0 =>
            {
                err(format!("{name}: --rmax must be at least 1"))
            }
            Experiment::Theorem1 if self.rmax < 2 => {
                err("theorem1: --rmax must be at least 2".into())
            }
            _ => Ok(()),
        }
    }
}

/// A named pass/fail outcome inside a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub samples: Vec<Value>,
    pub summary: Value,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl ExperimentReport {
    pub fn header(&self) -> Value {
        json!({
            "kind": "header",
            "experiment": self.config.experiment.name(),
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.config.seed,
            "rng": "ChaCha8, per-replica seed SplitMix64(seed, replica)",
            "config": self.config,
        })
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), HarnessError> {
        writeln!(out, "{}", self.header())?;
        for (i, s) in self.samples.iter().enumerate() {
            let mut line = json!({ "kind": "sample", "replica": i });
            if let (Value::Object(dst), Value::Object(src)) = (&mut line, s) {
                dst.extend(src.clone());
            }
            writeln!(out, "{line}")?;
        }
        let summary = json!({ "kind": "summary", "summary": self.summary, "checks": self.checks });
        writeln!(out, "{summary}")?;
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    experiments::run(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_messages() {
        let mut cfg = ExperimentConfig::new(Experiment::Census);
        cfg.faces = 9;
        let e = run_experiment(&cfg).unwrap_err().to_string();
        assert!(e.contains("up to 6"), "{e}");
        cfg.faces = 2;
        cfg.samples = 0;
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = ExperimentConfig::new(Experiment::Converge);
        cfg.sizes.clear();
        assert!(run_experiment(&cfg)
            .unwrap_err()
            .to_string()
            .contains("--sizes"));
    }

    #[test]
    fn runs_are_byte_identical() {
        for exp in [
            Experiment::Sample,
            Experiment::Hull,
            Experiment::Conjectures,
        ] {
            let mut cfg = ExperimentConfig::new(exp);
            cfg.faces = 300;
            cfg.samples = 6;
            cfg.rmax = 3;
            cfg.radius = 2;
            let a = run_experiment(&cfg).unwrap().to_jsonl();
            let b = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .unwrap()
                .install(|| run_experiment(&cfg).unwrap().to_jsonl());
            assert_eq!(a, b);
            assert!(a.lines().next().unwrap().contains("\"kind\":\"header\""));
        }
    }

    #[test]
    fn census_of_two_faces() {
        let mut cfg = ExperimentConfig::new(Experiment::Census);
        cfg.samples = 9000;
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.summary["distinct"], 9);
        assert!(r.all_pass(), "{:?}", r.checks);
    }

    #[test]
    fn series_check_passes() {
        let mut cfg = ExperimentConfig::new(Experiment::SeriesCheck);
        cfg.truncation = 12;
        cfg.rmax = 4;
        let r = run_experiment(&cfg).unwrap();
        assert!(r.all_pass(), "{:?}", r.checks);
        assert_eq!(r.tables[0].rows.len(), 13);
    }
}
