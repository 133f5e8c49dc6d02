use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use residue_index::cache::Cache;
use residue_index::config::{load_config, RunConfig, Task};
use residue_index::report::EXIT_CONFIG;

#[derive(Parser, Debug)]
#[command(name = "residue-index", version, about = "Equivariant residues, foliated traces and index pairings")]
struct Args {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Task to run; overrides the config's `task` field.
    #[arg(long, value_enum)]
    task: Option<Task>,
    /// Output directory for report.json, timing.json and the CSV tables.
    #[arg(long, default_value = "residue-index-out")]
    out: PathBuf,
    /// Cache directory; falls back to $RESIDUE_INDEX_CACHE, then .residue-index-cache/.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match &args.config {
        Some(p) => match load_config(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("config error: --threads must be positive");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("thread pool: {e}");
        }
    }
    let task = args.task.unwrap_or(config.task);
    let cache = Cache::new(Cache::resolve(args.cache.as_deref()));
    let (report, timing) = residue_index::run(&config, task, &cache);
    if let Err(e) = report.emit(&args.out).and_then(|_| timing.emit(&args.out)) {
        eprintln!("writing {}: {e}", args.out.display());
        return ExitCode::from(1);
    }
    for t in &report.tasks {
        for c in &t.criteria {
            println!("{} criterion {} {}: {} (value {:e}, tolerance {:e})", t.task, c.id, c.name, if c.pass { "PASS" } else { "FAIL" }, c.value, c.tolerance);
        }
        if let Some(m) = &t.message {
            println!("{}: {:?}: {m}", t.task, t.status);
        }
    }
    println!("report: {}", args.out.join("report.json").display());
    ExitCode::from(report.exit_code() as u8)
}
