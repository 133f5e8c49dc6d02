//! Run report: JSON document plus CSV tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub id: u32,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Set when the result rests on an approximate idempotent with defect above `1e-6`.
    pub advisory: bool,
}

impl Criterion {
    pub fn at_most(id: u32, name: &str, value: f64, tolerance: f64) -> Self {
        Criterion { id, name: name.into(), value, tolerance, pass: value.is_finite() && value <= tolerance, advisory: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskStatus {
    Pass,
    Fail,
    /// Hypotheses violated: no value is reported.
    Refused,
    Error,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tables {
    /// `(series, t, value)`.
    pub heat_traces: Vec<(String, f64, f64)>,
    /// `(series, power, log_power, coefficient)`.
    pub fit_bases: Vec<(String, f64, u32, f64)>,
    /// `(kind, index, value)`.
    pub contributions: Vec<(String, i64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskReport {
    pub task: String,
    pub status: TaskStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub values: BTreeMap<String, f64>,
    pub certificates: BTreeMap<String, f64>,
    pub criteria: Vec<Criterion>,
    #[serde(skip)]
    pub tables: Tables,
}

impl TaskReport {
    pub fn new(task: &str) -> Self {
        TaskReport {
            task: task.into(),
            status: TaskStatus::Pass,
            message: None,
            values: BTreeMap::new(),
            certificates: BTreeMap::new(),
            criteria: Vec::new(),
            tables: Tables::default(),
        }
    }

    pub fn value(&mut self, k: &str, v: f64) {
        self.values.insert(k.into(), v);
    }

    pub fn certificate(&mut self, k: &str, v: f64) {
        self.certificates.insert(k.into(), v);
    }

    /// Appends to the message, keeping earlier notes.
    pub fn note(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        self.message = Some(match self.message.take() {
            Some(m) => format!("{m}; {msg}"),
            None => msg,
        });
    }

    pub fn finish(mut self) -> Self {
        if self.status == TaskStatus::Pass && self.criteria.iter().any(|c| !c.pass) {
            self.status = TaskStatus::Fail;
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub config_hash: String,
    pub task: String,
    pub tasks: Vec<TaskReport>,
    pub pass: bool,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ACCEPTANCE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

impl RunReport {
    pub fn new(config_hash: String, task: &str, tasks: Vec<TaskReport>) -> Self {
        let pass = tasks.iter().all(|t| t.status == TaskStatus::Pass);
        RunReport { config_hash, task: task.into(), tasks, pass }
    }

    /// A refusal outranks failed criteria.
    pub fn exit_code(&self) -> i32 {
        if self.tasks.iter().any(|t| t.status == TaskStatus::Refused) {
            EXIT_DEGENERATE
        } else if self.pass {
            EXIT_OK
        } else {
            EXIT_ACCEPTANCE
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn criteria_csv(&self) -> String {
        let mut s = String::from("task,id,criterion,value,tolerance,pass,advisory\n");
        for t in &self.tasks {
            for c in &t.criteria {
                let _ = writeln!(s, "{},{},{},{:e},{:e},{},{}", t.task, c.id, c.name, c.value, c.tolerance, c.pass, c.advisory);
            }
        }
        s
    }

    pub fn heat_traces_csv(&self) -> String {
        let mut s = String::from("task,series,t,value\n");
        for t in &self.tasks {
            for (series, x, v) in &t.tables.heat_traces {
                let _ = writeln!(s, "{},{},{:e},{:e}", t.task, series, x, v);
            }
        }
        s
    }

    pub fn fit_bases_csv(&self) -> String {
        let mut s = String::from("task,series,power,log_power,coefficient\n");
        for t in &self.tasks {
            for (series, p, l, c) in &t.tables.fit_bases {
                let _ = writeln!(s, "{},{},{},{},{:e}", t.task, series, p, l, c);
            }
        }
        s
    }

    pub fn contributions_csv(&self) -> String {
        let mut s = String::from("task,kind,index,value\n");
        for t in &self.tasks {
            for (kind, i, v) in &t.tables.contributions {
                let _ = writeln!(s, "{},{},{},{:e}", t.task, kind, i, v);
            }
        }
        s
    }

    /// Writes `report.json`, `criteria.csv`, `heat_traces.csv`,
    /// `fit_bases.csv` and `orbit_contributions.csv` into `dir`.
    pub fn emit(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json())?;
        fs::write(dir.join("criteria.csv"), self.criteria_csv())?;
        fs::write(dir.join("heat_traces.csv"), self.heat_traces_csv())?;
        fs::write(dir.join("fit_bases.csv"), self.fit_bases_csv())?;
        fs::write(dir.join("orbit_contributions.csv"), self.contributions_csv())
    }
}

/// Wall-clock times, kept out of `report.json` so identical configs give
/// identical reports.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timing {
    pub config_hash: String,
    pub total_seconds: f64,
    pub tasks: BTreeMap<String, f64>,
    pub cache_hits: usize,
    pub cache_misses: usize,
}

impl Timing {
    pub fn emit(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut s = serde_json::to_string_pretty(self).expect("timing serializes");
        s.push('\n');
        fs::write(dir.join("timing.json"), s)
    }
}
