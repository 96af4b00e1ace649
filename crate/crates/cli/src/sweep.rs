//! Parameter sweeps: the cartesian product of a grid, one CSV row per run.

use crate::artifacts::simulate_to;
use crate::CODE_VERSION;
use doall::adversary::AdversarySpec;
use doall::analysis::RunRow;
use doall::config::{Algorithm, EffortConfig, FaultBound, RunConfig};
use doall::overlay::GraphMode;
use doall::protocol::epoch_phases;
use doall::runner::run;
use doall::sim::TraceLevel;
use doall::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::{Path, PathBuf};

/// A task count, either literal or a rule in `p`: `"p"`, `"5p"`, `"p^2"`,
/// or `"D"` for `11 p² g(p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TaskRule {
    Count(u32),
    Rule(String),
}

impl TaskRule {
    pub fn resolve(&self, p: u32) -> Result<u32> {
        let bad = |r: &str| Error::Config(format!("unknown task rule `{r}`"));
        match self {
            TaskRule::Count(t) => Ok(*t),
            TaskRule::Rule(r) => match r.as_str() {
                "p^2" => Ok(p * p),
                "D" => Ok(11 * p * p * epoch_phases(p) as u32),
                s => {
                    let k = s.strip_suffix('p').ok_or_else(|| bad(s))?;
                    if k.is_empty() {
                        Ok(p)
                    } else {
                        k.parse::<u32>().map(|k| k * p).map_err(|_| bad(s))
                    }
                }
            },
        }
    }
}

/// A crash bound: a number, `"unbounded"` (`p − 1`) or `"half"` (`⌊p/2⌋`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FaultRule {
    Count(u32),
    Rule(String),
}

impl FaultRule {
    pub fn resolve(&self, p: u32) -> Result<FaultBound> {
        match self {
            FaultRule::Count(f) => Ok(FaultBound::Count(*f)),
            FaultRule::Rule(r) if r == "unbounded" => Ok(FaultBound::Unbounded),
            FaultRule::Rule(r) if r == "half" => Ok(FaultBound::Count(p / 2)),
            FaultRule::Rule(r) => Err(Error::Config(format!("unknown fault rule `{r}`"))),
        }
    }
}

/// Seeds as a count (`0..n`) or an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    fn values(&self) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub algorithms: Vec<Algorithm>,
    pub p: Vec<u32>,
    pub t: Vec<TaskRule>,
    #[serde(default = "unbounded")]
    pub f: Vec<FaultRule>,
    #[serde(default = "one_seed")]
    pub seeds: Seeds,
    #[serde(default)]
    pub adversary: AdversarySpec,
    #[serde(default)]
    pub delta0: Option<u32>,
    #[serde(default)]
    pub graph_mode: Option<GraphMode>,
    #[serde(default)]
    pub effort: Option<EffortConfig>,
}

fn unbounded() -> Vec<FaultRule> {
    vec![FaultRule::Rule("unbounded".into())]
}

fn one_seed() -> Seeds {
    Seeds::Count(1)
}

impl Grid {
    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Every configuration of the grid, in a fixed order.
    pub fn configs(&self) -> Result<Vec<RunConfig>> {
        let mut out = Vec::new();
        for &alg in &self.algorithms {
            for &p in &self.p {
                for t in &self.t {
                    for f in &self.f {
                        for seed in self.seeds.values() {
                            let mut c = RunConfig::new(p, t.resolve(p)?, alg);
                            c.f = f.resolve(p)?;
                            c.seed = seed;
                            c.adversary = self.adversary.clone();
                            c.trace = TraceLevel::Off;
                            if let Some(d) = self.delta0 {
                                c.delta0 = d;
                            }
                            if let Some(m) = self.graph_mode {
                                c.graph_mode = m;
                            }
                            if alg == Algorithm::EffortPriority {
                                c.effort = self.effort.clone();
                            }
                            out.push(c);
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Config("the grid is empty".into()));
        }
        Ok(out)
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub algorithm: Algorithm,
    pub p: u32,
    pub t: u32,
    pub f: u32,
    pub seed: u64,
    pub status: String,
    pub work: Option<u64>,
    pub messages: Option<u64>,
    pub effort: Option<u64>,
    pub termination_round: Option<u64>,
    pub tasks_completed: Option<bool>,
    pub crashes: Option<u32>,
    pub degree: Option<u32>,
    pub error: Option<String>,
    pub code_version: String,
}

impl Row {
    pub fn key(&self) -> (Algorithm, u32, u32, u32, u64) {
        (self.algorithm, self.p, self.t, self.f, self.seed)
    }

    pub fn run_row(&self) -> Option<RunRow> {
        (self.status == "ok").then(|| RunRow {
            algorithm: self.algorithm,
            p: self.p,
            t: self.t,
            f: self.f,
            seed: self.seed,
            work: self.work.unwrap_or(0),
            messages: self.messages.unwrap_or(0),
            effort: self.effort.unwrap_or(0),
            degree: self.degree.unwrap_or(0),
        })
    }
}

fn key_of(c: &RunConfig) -> (Algorithm, u32, u32, u32, u64) {
    (c.algorithm, c.p, c.t, c.f(), c.seed)
}

/// Directory name of a saved run.
pub fn run_dir_name(c: &RunConfig) -> String {
    format!(
        "{}-p{}-t{}-f{}-s{}",
        c.algorithm.name(),
        c.p,
        c.t,
        c.f(),
        c.seed
    )
}

fn run_one(c: &RunConfig, save: Option<&Path>) -> Row {
    let result = match save {
        Some(dir) => {
            let mut c = c.clone();
            c.trace = TraceLevel::Summary;
            simulate_to(&c, &dir.join(run_dir_name(&c)))
        }
        None => run(c, serde_json::Value::Null),
    };
    let mut row = Row {
        algorithm: c.algorithm,
        p: c.p,
        t: c.t,
        f: c.f(),
        seed: c.seed,
        status: "ok".into(),
        work: None,
        messages: None,
        effort: None,
        termination_round: None,
        tasks_completed: None,
        crashes: None,
        degree: None,
        error: None,
        code_version: CODE_VERSION.into(),
    };
    match result {
        Ok(out) => {
            let m = out.metrics;
            if !m.terminated {
                row.status = "no_termination".into();
            } else if !m.tasks_completed {
                row.status = "incomplete".into();
            }
            row.work = Some(m.work);
            row.messages = Some(m.messages);
            row.effort = Some(m.effort);
            row.termination_round = Some(m.termination_round);
            row.tasks_completed = Some(m.tasks_completed);
            row.crashes = Some(m.crashes);
            row.degree = Some(out.overlay.max_degree() as u32);
        }
        Err(e) => {
            row.status = "error".into();
            row.error = Some(e.to_string());
        }
    }
    row
}

/// Reads the rows of an existing sweep file.
pub fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|x| x.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub out: PathBuf,
    pub jobs: usize,
    /// Also write each run's artifacts under `out/runs/`.
    pub save_runs: bool,
}

/// Summary of a sweep call.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SweepSummary {
    pub total: usize,
    pub skipped: usize,
    pub ran: usize,
    pub failed: usize,
}

/// Runs every grid row missing from `out/sweep.csv` and appends it. Rows
/// are computed in parallel batches and appended in grid order, so an
/// interrupted sweep loses at most one batch and resumes where it stopped.
pub fn sweep(grid: &Grid, opts: &SweepOptions) -> Result<SweepSummary> {
    let configs = grid.configs()?;
    std::fs::create_dir_all(&opts.out)?;
    let path = opts.out.join("sweep.csv");
    let done: HashSet<_> = if path.exists() {
        read_rows(&path)?.iter().map(Row::key).collect()
    } else {
        HashSet::new()
    };
    let pending: Vec<&RunConfig> = configs
        .iter()
        .filter(|c| !done.contains(&key_of(c)))
        .collect();
    let mut summary = SweepSummary {
        total: configs.len(),
        skipped: configs.len() - pending.len(),
        ..Default::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::Parameter(e.to_string()))?;
    let save = opts.save_runs.then(|| opts.out.join("runs"));
    let fresh = std::fs::metadata(&path).map_or(true, |m| m.len() == 0);
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    for batch in pending.chunks(4 * opts.jobs.max(1)) {
        let rows: Vec<Row> = pool.install(|| {
            batch
                .par_iter()
                .map(|c| run_one(c, save.as_deref()))
                .collect()
        });
        for row in rows {
            summary.ran += 1;
            if row.status != "ok" {
                summary.failed += 1;
            }
            w.serialize(&row).map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_rules() {
        assert_eq!(TaskRule::Rule("p".into()).resolve(8).unwrap(), 8);
        assert_eq!(TaskRule::Rule("5p".into()).resolve(8).unwrap(), 40);
        assert_eq!(TaskRule::Rule("p^2".into()).resolve(8).unwrap(), 64);
        assert_eq!(TaskRule::Rule("D".into()).resolve(8).unwrap(), 64768);
        assert!(TaskRule::Rule("q".into()).resolve(8).is_err());
    }

    #[test]
    fn grid_size() {
        let g: Grid = serde_json::from_str(r#"{"algorithms": ["balance_load", "effort_priority"], "p": [4, 8], "t": ["p"], "seeds": 3}"#).unwrap();
        assert_eq!(g.configs().unwrap().len(), 12);
    }
}
