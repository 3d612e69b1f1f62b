use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One estimated quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub n: Option<usize>,
    pub statistic: String,
    /// 1-based coordinate of `theta`, when the statistic is coordinatewise.
    pub coordinate: Option<usize>,
    pub value: f64,
    pub standard_error: Option<f64>,
    pub target: Option<f64>,
}

impl Record {
    pub fn new(n: Option<usize>, statistic: impl Into<String>, value: f64) -> Self {
        Self { n, statistic: statistic.into(), coordinate: None, value, standard_error: None, target: None }
    }

    pub fn coordinate(mut self, j: usize) -> Self {
        self.coordinate = Some(j);
        self
    }

    pub fn se(mut self, se: f64) -> Self {
        self.standard_error = Some(se);
        self
    }

    pub fn target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }
}

/// A pass/fail comparison against a declared tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub tool_version: String,
    /// The fully resolved configuration that produced the report.
    pub config: serde_json::Value,
    pub records: Vec<Record>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, config: &impl Serialize) -> Self {
        Self {
            experiment: experiment.into(),
            tool_version: crate::VERSION.to_string(),
            config: serde_json::to_value(config).expect("configurations serialize to JSON"),
            records: Vec::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn passes(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn records_named<'a>(&'a self, statistic: &'a str) -> impl Iterator<Item = &'a Record> + 'a {
        self.records.iter().filter(move |r| r.statistic == statistic)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize to JSON")
    }

    /// One CSV table per statistic: `n,coordinate,value,standard_error,target`.
    pub fn csv_tables(&self) -> BTreeMap<String, String> {
        let mut tables: BTreeMap<String, String> = BTreeMap::new();
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            let table = tables
                .entry(r.statistic.clone())
                .or_insert_with(|| "n,coordinate,value,standard_error,target\n".to_string());
            table.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n.map(|n| n.to_string()).unwrap_or_default(),
                r.coordinate.map(|j| j.to_string()).unwrap_or_default(),
                r.value,
                opt(r.standard_error),
                opt(r.target)
            ));
        }
        tables
    }

    /// Human-readable `PASS`/`FAIL` lines.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        for w in &self.warnings {
            out.push_str(&format!("WARN {w}\n"));
        }
        out
    }
}
