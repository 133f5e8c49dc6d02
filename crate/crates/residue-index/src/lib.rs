//! Config, cache, reports and task drivers for residue and index-pairing runs.

use std::time::Instant;

pub mod cache;
pub mod config;
pub mod report;
pub mod tasks;

use cache::Cache;
use config::{RunConfig, Task};
use report::{RunReport, TaskReport, Timing};
use tasks::Context;

pub fn run_task(task: Task, ctx: &Context<'_>) -> TaskReport {
    match task {
        Task::TraceSuite => tasks::traces::run(ctx),
        Task::ResidueCrosscheck => tasks::residue::run(ctx),
        Task::IndexPairing => tasks::pairing::run(ctx),
        Task::All => unreachable!("expanded before dispatch"),
    }
}

/// Runs `task` (or every task for `all`) and returns the report with timings.
pub fn run(config: &RunConfig, task: Task, cache: &Cache) -> (RunReport, Timing) {
    let ctx = Context { config, cache };
    let hash = config.hash();
    let start = Instant::now();
    let mut timing = Timing { config_hash: hash.clone(), ..Timing::default() };
    let mut reports = Vec::new();
    for t in task.expand() {
        let t0 = Instant::now();
        reports.push(run_task(t, &ctx));
        timing.tasks.insert(t.name().into(), t0.elapsed().as_secs_f64());
    }
    timing.total_seconds = start.elapsed().as_secs_f64();
    timing.cache_hits = cache.hits();
    timing.cache_misses = cache.misses();
    (RunReport::new(hash, task.name(), reports), timing)
}
