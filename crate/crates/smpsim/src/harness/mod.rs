//! Experiment harness: seeded experiment configurations, deterministic
//! result tables, and summary/plot-data emission.
//!
//! Every experiment id maps to one deterministic function of
//! (seed, parameters). Instances inside an experiment draw from independent
//! counter-based streams keyed by instance id, so result rows do not depend
//! on execution order.

pub mod experiments;
pub mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Known experiment ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExperimentId {
    FingerprintEq,
    AmbainisEq,
    Hm,
    Drhm,
    Ratio,
    ClampSim,
    Replace,
    BothReplaced,
    Locc1Hybrid,
    Newman,
    UnionBound,
}

pub const ALL_EXPERIMENTS: [ExperimentId; 11] = [
    ExperimentId::FingerprintEq,
    ExperimentId::AmbainisEq,
    ExperimentId::Hm,
    ExperimentId::Drhm,
    ExperimentId::Ratio,
    ExperimentId::ClampSim,
    ExperimentId::Replace,
    ExperimentId::BothReplaced,
    ExperimentId::Locc1Hybrid,
    ExperimentId::Newman,
    ExperimentId::UnionBound,
];

impl ExperimentId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::FingerprintEq => "fingerprint-eq",
            ExperimentId::AmbainisEq => "ambainis-eq",
            ExperimentId::Hm => "hm",
            ExperimentId::Drhm => "drhm",
            ExperimentId::Ratio => "ratio",
            ExperimentId::ClampSim => "clamp-sim",
            ExperimentId::Replace => "replace",
            ExperimentId::BothReplaced => "both-replaced",
            ExperimentId::Locc1Hybrid => "locc1-hybrid",
            ExperimentId::Newman => "newman",
            ExperimentId::UnionBound => "union-bound",
        }
    }
}

impl std::fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_EXPERIMENTS
            .iter()
            .find(|id| id.as_str() == s)
            .copied()
            .ok_or_else(|| Error::usage(format!("unknown experiment id {s:?}")))
    }
}

/// A fully specified experiment run: id, seed, optional output path, and
/// overridable parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub seed: u64,
    pub out: Option<PathBuf>,
    params: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(id: ExperimentId, seed: u64) -> Self {
        Self {
            id,
            seed,
            out: None,
            params: BTreeMap::new(),
        }
    }

    pub fn set_param(&mut self, key: &str, value: &str) {
        self.params.insert(key.to_string(), value.to_string());
    }

    pub fn params(&self) -> &BTreeMap<String, String> {
        &self.params
    }

    /// Apply a flat key-value config file: one `key = value` per line,
    /// blank lines and `#` comments ignored. `seed` and `out` are
    /// recognized; all other keys become parameters.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::usage(format!(
                    "config line {}: expected `key = value`",
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "seed" => {
                    self.seed = value
                        .parse()
                        .map_err(|_| Error::usage(format!("config: bad seed {value:?}")))?;
                }
                "out" => self.out = Some(PathBuf::from(value)),
                _ => self.set_param(key, value),
            }
        }
        Ok(())
    }

    pub fn param_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::usage(format!("parameter {key}: expected integer, got {v:?}"))),
        }
    }

    pub fn param_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::usage(format!("parameter {key}: expected number, got {v:?}"))),
        }
    }
}

/// One checked metric of one instance.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub instance: u64,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    /// Bound the value was checked against, if any.
    pub bound: Option<f64>,
    pub pass: bool,
}

/// All rows of one experiment run.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub experiment: ExperimentId,
    pub master_seed: u64,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(experiment: ExperimentId, master_seed: u64) -> Self {
        Self {
            experiment,
            master_seed,
            rows: Vec::new(),
        }
    }

    /// value must not exceed bound.
    pub fn check_at_most(&mut self, instance: u64, metric: &str, value: f64, bound: f64) {
        self.rows.push(ResultRow {
            instance,
            seed: self.master_seed,
            metric: metric.to_string(),
            value,
            bound: Some(bound),
            pass: value <= bound + 1e-12,
        });
    }

    /// value must be at least bound.
    pub fn check_at_least(&mut self, instance: u64, metric: &str, value: f64, bound: f64) {
        self.rows.push(ResultRow {
            instance,
            seed: self.master_seed,
            metric: metric.to_string(),
            value,
            bound: Some(bound),
            pass: value >= bound - 1e-12,
        });
    }

    /// Unchecked informational value.
    pub fn info(&mut self, instance: u64, metric: &str, value: f64) {
        self.rows.push(ResultRow {
            instance,
            seed: self.master_seed,
            metric: metric.to_string(),
            value,
            bound: None,
            pass: true,
        });
    }

    pub fn passed(&self) -> usize {
        self.rows.iter().filter(|r| r.pass).count()
    }

    pub fn failed(&self) -> usize {
        self.rows.len() - self.passed()
    }

    pub fn all_pass(&self) -> bool {
        self.failed() == 0
    }

    /// First failing row, for reporting.
    pub fn first_failure(&self) -> Option<&ResultRow> {
        self.rows.iter().find(|r| !r.pass)
    }
}

/// Run one experiment to a deterministic result table.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    match cfg.id {
        ExperimentId::FingerprintEq => experiments::fingerprint_eq(cfg),
        ExperimentId::AmbainisEq => experiments::ambainis_eq(cfg),
        ExperimentId::Hm => experiments::hm(cfg),
        ExperimentId::Drhm => experiments::drhm(cfg),
        ExperimentId::Ratio => experiments::ratio(cfg),
        ExperimentId::ClampSim => experiments::clamp_sim(cfg),
        ExperimentId::Replace => experiments::replace(cfg),
        ExperimentId::BothReplaced => experiments::both_replaced(cfg),
        ExperimentId::Locc1Hybrid => experiments::locc1_hybrid(cfg),
        ExperimentId::Newman => experiments::newman(cfg),
        ExperimentId::UnionBound => experiments::union_bound(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_round_trip() {
        for id in ALL_EXPERIMENTS {
            assert_eq!(ExperimentId::from_str(id.as_str()).unwrap(), id);
        }
        assert!(ExperimentId::from_str("nope").is_err());
    }

    #[test]
    fn config_file_parsing() {
        let mut cfg = ExperimentConfig::new(ExperimentId::Ratio, 1);
        cfg.apply_config_text("# comment\nseed = 9\nchains = 50\nout = results/r.csv\n")
            .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.param_usize("chains", 200).unwrap(), 50);
        assert_eq!(
            cfg.out.as_deref(),
            Some(std::path::Path::new("results/r.csv"))
        );
        assert!(cfg.apply_config_text("bad line").is_err());
    }

    #[test]
    fn result_table_checks() {
        let mut t = ResultTable::new(ExperimentId::Ratio, 3);
        t.check_at_most(0, "dev", 1e-10, 1e-9);
        t.check_at_least(0, "margin", 0.5, 0.0);
        t.info(0, "note", 42.0);
        assert!(t.all_pass());
        t.check_at_most(1, "dev", 1.0, 1e-9);
        assert_eq!(t.failed(), 1);
        assert_eq!(t.first_failure().unwrap().instance, 1);
    }
}
