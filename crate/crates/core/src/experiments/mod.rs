//! Scenario suites with recorded assertions, JSON reports and CSV/SVG artifacts.

mod config;
mod cobordism;
mod decay;
mod gapfill;
mod index_suite;
mod shifts;
pub mod svg;
mod two_boundary;

pub use config::{
    BulkConfig, CurrentConfig, DomainConfig, IndexConfig, SuiteConfig, SCHEMA_VERSION,
};
pub use cobordism::run_cobordism_suite;
pub use decay::run_decay;
pub use gapfill::run_gap_filling;
pub use index_suite::run_index_suite;
pub use shifts::run_shift_models;
pub use two_boundary::run_two_boundary;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const SUITES: [&str; 7] = ["gapfill", "index", "cobordism", "two-boundary", "shifts", "decay", "all"];

/// One checked expectation with the value it was checked against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Assertion {
    /// `|observed - expected| <= tolerance`.
    pub fn near(name: impl Into<String>, expected: f64, observed: f64, tolerance: f64) -> Self {
        let passed = (observed - expected).abs() <= tolerance;
        Assertion { name: name.into(), expected, observed, tolerance, passed }
    }

    /// `observed <= bound`; `expected` holds the bound.
    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Assertion { name: name.into(), expected: bound, observed, tolerance: 0.0, passed: observed <= bound }
    }

    /// `observed >= bound`.
    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Assertion { name: name.into(), expected: bound, observed, tolerance: 0.0, passed: observed >= bound }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Assertion { name: name.into(), expected: 1.0, observed: v, tolerance: 0.0, passed: ok }
    }
}

/// A file produced by a scenario, relative to its scenario directory.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub file: String,
    pub contents: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub name: String,
    pub passed: bool,
    /// Set when a precondition (admissibility) failed and nothing was asserted.
    pub skipped: Option<String>,
    pub assertions: Vec<Assertion>,
    pub data: Value,
    pub runtime_s: f64,
    #[serde(skip)]
    pub artifacts: Vec<Artifact>,
}

impl ScenarioResult {
    pub fn new(name: impl Into<String>) -> Self {
        ScenarioResult {
            name: name.into(),
            passed: true,
            skipped: None,
            assertions: vec![],
            data: Value::Null,
            runtime_s: 0.0,
            artifacts: vec![],
        }
    }

    pub fn check(&mut self, a: Assertion) {
        self.passed &= a.passed;
        self.assertions.push(a);
    }

    pub fn artifact(&mut self, file: impl Into<String>, contents: String) {
        self.artifacts.push(Artifact { file: file.into(), contents });
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub scenarios: Vec<ScenarioResult>,
    pub runtime_s: f64,
}

impl SuiteReport {
    pub fn scenario(&self, name: &str) -> Option<&ScenarioResult> {
        self.scenarios.iter().find(|s| s.name == name)
    }

    /// JSON with every `runtime_s` field removed.
    pub fn canonical_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        strip_runtime(&mut v);
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// Writes `report.json` and every scenario's artifacts under
    /// `dir/<suite>/<scenario>/`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        for s in &self.scenarios {
            if s.artifacts.is_empty() {
                continue;
            }
            let sub = dir.join(&self.suite).join(&s.name);
            std::fs::create_dir_all(&sub)?;
            for a in &s.artifacts {
                std::fs::write(sub.join(&a.file), &a.contents)?;
            }
        }
        Ok(())
    }
}

fn strip_runtime(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("runtime_s");
            map.values_mut().for_each(strip_runtime);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_runtime),
        _ => {}
    }
}

pub(crate) type Job = Box<dyn Fn() -> Result<ScenarioResult> + Send + Sync>;

/// Runs independent scenarios in parallel, keeping the job order.
pub(crate) fn run_jobs(jobs: Vec<Job>) -> Result<Vec<ScenarioResult>> {
    jobs.par_iter()
        .map(|job| {
            let t = Instant::now();
            let mut r = job()?;
            r.runtime_s = t.elapsed().as_secs_f64();
            Ok(r)
        })
        .collect()
}

/// Runs a named suite. Scenarios run on the current rayon pool.
pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let t = Instant::now();
    let scenarios = match name {
        "gapfill" => run_gap_filling(cfg)?,
        "index" => run_index_suite(cfg)?,
        "cobordism" => run_cobordism_suite(cfg)?,
        "two-boundary" => run_two_boundary(cfg)?,
        "shifts" => run_shift_models(cfg)?,
        "decay" => run_decay(cfg)?,
        "all" => {
            let mut all = Vec::new();
            for suite in &SUITES[..SUITES.len() - 1] {
                for mut s in run_suite(suite, cfg)?.scenarios {
                    s.name = format!("{suite}/{}", s.name);
                    all.push(s);
                }
            }
            let cross = gapfill::cross_consistency(&all);
            all.push(cross);
            all
        }
        other => return Err(Error::Config(format!("unknown suite '{other}'; expected one of {SUITES:?}"))),
    };
    Ok(SuiteReport {
        schema_version: SCHEMA_VERSION,
        suite: name.into(),
        seed: cfg.seed,
        passed: scenarios.iter().all(|s| s.passed),
        scenarios,
        runtime_s: t.elapsed().as_secs_f64(),
    })
}

/// Runs `run_suite` on a dedicated pool of `threads` workers.
pub fn run_suite_with_jobs(name: &str, cfg: &SuiteConfig, threads: usize) -> Result<SuiteReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| run_suite(name, cfg))
}

/// `x,y,value` rows for per-site data.
pub fn site_csv(domain: &crate::geometry::Domain, values: &[f64]) -> String {
    let mut out = String::from("x,y,value\n");
    for (s, v) in domain.sites().iter().zip(values) {
        out.push_str(&format!("{},{},{:.12e}\n", s.x, s.y, v));
    }
    out
}
