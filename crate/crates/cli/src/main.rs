use clap::{Parser, Subcommand, ValueEnum};
use doall::analysis::{analyze, bound_report};
use doall::config::RunConfig;
use doall::overlay::{
    build_lps, random_regular, read_edge_list, spectral_check, tanner_sample, write_edge_list,
    GraphMode,
};
use doall::rules::PermutationTable;
use doall::runner::{calibrate_ct, calibration_grid, overlay_for};
use doall::sim::{RunTrace, TraceLevel};
use doall::{Error, Result};
use doall_cli::sweep::{read_rows, sweep, Grid, SweepOptions};
use doall_cli::*;
use serde_json::json;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "doall",
    version,
    about = "Fault-tolerant Do-All simulations over expander overlays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its artifacts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the config's output_dir, then `.`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        round_cap: Option<u64>,
        #[arg(long, value_enum)]
        trace: Option<Level>,
    },
    /// Run every point of a grid, appending rows to OUT/sweep.csv.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Keep each run's trace and metrics under OUT/runs/.
        #[arg(long)]
        save_runs: bool,
    },
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Analyze traces (epochs, witnesses, progress) or a sweep file (bound
    /// ratios).
    Analyze {
        #[arg(long, num_args = 1..)]
        trace: Vec<PathBuf>,
        #[arg(long, conflicts_with = "trace")]
        sweep: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Find the smallest round-budget constant for the first part of
    /// Effort-Priority over the calibration grid.
    Calibrate {
        #[arg(long, default_value_t = 50)]
        seeds: u64,
        #[arg(long, default_value_t = doall::overlay::DEFAULT_DELTA0)]
        delta0: u32,
        #[arg(long, value_enum, default_value_t = Mode::Lps)]
        mode: Mode,
    },
    #[command(subcommand)]
    Perms(PermsCommand),
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Build a base graph and write it as an edge list.
    Build {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Generator prime for LPS graphs (degree q + 1).
        #[arg(long)]
        q: Option<u32>,
        /// Degree for random regular graphs.
        #[arg(long)]
        degree: Option<u32>,
        /// Minimum node count (LPS) or exact node count (random regular).
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the overlay G(p, f) and write it as an edge list.
    Overlay {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        f: u32,
        #[arg(long, default_value_t = doall::overlay::DEFAULT_DELTA0)]
        delta0: u32,
        #[arg(long, value_enum, default_value_t = Mode::Lps)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Eigenvalue check and neighborhood sampling of an edge list.
    Verify {
        #[arg(long)]
        input: PathBuf,
        /// Degree the Ramanujan bound is taken for; defaults to the graph's.
        #[arg(long)]
        delta0: Option<u32>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum PermsCommand {
    /// Write a permutation table (the fixed default unless --seed is given).
    Dump {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Full,
    Summary,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Lps,
    RandomRegular,
}

impl From<Mode> for GraphMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Lps => GraphMode::Lps,
            Mode::RandomRegular => GraphMode::RandomRegular,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}

fn print_json(v: &serde_json::Value) {
    // a closed pipe (e.g. `| head`) is not worth a panic
    let _ = writeln!(
        std::io::stdout(),
        "{}",
        serde_json::to_string_pretty(v).expect("serializable")
    );
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Simulate {
            config,
            seed,
            out,
            round_cap,
            trace,
        } => simulate(&config, seed, out, round_cap, trace),
        Command::Sweep {
            grid,
            out,
            jobs,
            save_runs,
        } => {
            let grid = Grid::load(&grid)?;
            let s = sweep(
                &grid,
                &SweepOptions {
                    out,
                    jobs,
                    save_runs,
                },
            )?;
            print_json(&json!(s));
            Ok(EXIT_OK)
        }
        Command::Graph(g) => graph(g),
        Command::Analyze {
            trace,
            sweep,
            out,
            jobs,
        } => match sweep {
            Some(path) => analyze_sweep(&path, &out),
            None => analyze_traces(&trace, &out, jobs),
        },
        Command::Calibrate {
            seeds,
            delta0,
            mode,
        } => {
            let c = calibrate_ct(&calibration_grid(), seeds, delta0, mode.into())?;
            print_json(
                &json!({ "code_version": CODE_VERSION, "calibration": c, "ct": (c.ct * 100.0).ceil() / 100.0 }),
            );
            Ok(EXIT_OK)
        }
        Command::Perms(PermsCommand::Dump { p, seed, out }) => {
            let table = match seed {
                Some(s) => PermutationTable::random(s, p),
                None => PermutationTable::fixed_default(p),
            };
            let mut w = std::io::BufWriter::new(std::fs::File::create(out)?);
            table.write(&mut w)?;
            w.flush()?;
            Ok(EXIT_OK)
        }
    }
}

fn simulate(
    path: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    round_cap: Option<u64>,
    trace: Option<Level>,
) -> Result<i32> {
    let text = std::fs::read_to_string(path)?;
    let mut config = match RunConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            print_json(
                &json!({ "status": "invalid_config", "issues": [{ "field": "", "message": e.to_string() }] }),
            );
            return Ok(EXIT_CONFIG);
        }
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    if round_cap.is_some() {
        config.round_cap = round_cap;
    }
    if let Some(l) = trace {
        config.trace = match l {
            Level::Full => TraceLevel::Full,
            Level::Summary => TraceLevel::Summary,
            Level::Off => TraceLevel::Off,
        };
    }
    let issues = config.validate();
    if !issues.is_empty() {
        print_json(&json!({ "status": "invalid_config", "issues": issues }));
        return Ok(EXIT_CONFIG);
    }
    let dir = out
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let result = doall_cli::artifacts::simulate_to(&config, &dir)?;
    let m = &result.metrics;
    print_json(&json!({ "metrics": m, "out": dir }));
    Ok(if !m.terminated {
        EXIT_NO_TERMINATION
    } else if m.tasks_completed {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

fn graph(command: GraphCommand) -> Result<i32> {
    match command {
        GraphCommand::Build {
            mode,
            q,
            degree,
            nodes,
            seed,
            out,
        } => {
            let g = match mode {
                Mode::Lps => {
                    let q = q.ok_or_else(|| Error::Config("--q is required for lps".into()))?;
                    build_lps(q, nodes)?.graph
                }
                Mode::RandomRegular => {
                    let d = degree.ok_or_else(|| {
                        Error::Config("--degree is required for random-regular".into())
                    })?;
                    random_regular(nodes, d as usize, seed)?
                }
            };
            write_graph(&g, &out)?;
            print_json(
                &json!({ "nodes": g.node_count(), "edges": g.edge_count(), "degree": g.degree_bound(), "out": out }),
            );
            Ok(EXIT_OK)
        }
        GraphCommand::Overlay {
            p,
            f,
            delta0,
            mode,
            seed,
            out,
        } => {
            let o = overlay_for(p, f, delta0, mode.into(), seed)?;
            write_graph(&o.graph, &out)?;
            print_json(&json!(o.metadata()));
            Ok(EXIT_OK)
        }
        GraphCommand::Verify {
            input,
            delta0,
            samples,
            seed,
        } => {
            let g = read_edge_list(BufReader::new(std::fs::File::open(&input)?))?;
            let delta0 = delta0.unwrap_or(g.degree_bound() as u32);
            let spectral = spectral_check(&g, delta0)?;
            let tanner = tanner_sample(&g, &spectral, samples, seed)?;
            print_json(&json!({ "spectral": spectral, "tanner": tanner }));
            Ok(EXIT_OK)
        }
    }
}

fn write_graph(g: &doall::overlay::ExpanderGraph, out: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(out)?);
    write_edge_list(g, &mut w)?;
    w.flush()?;
    Ok(())
}

fn analyze_traces(paths: &[PathBuf], out: &Path, jobs: usize) -> Result<i32> {
    use rayon::prelude::*;
    if paths.is_empty() {
        return Err(Error::Config("give --trace or --sweep".into()));
    }
    std::fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Parameter(e.to_string()))?;
    let results: Vec<Result<serde_json::Value>> = pool.install(|| {
        paths
            .par_iter()
            .enumerate()
            .map(|(i, p)| analyze_one(p, out, i, paths.len()))
            .collect()
    });
    let mut hard = 0;
    let mut summaries = Vec::new();
    for r in results {
        let v = r?;
        hard += v["hard_violations"].as_u64().unwrap_or(0);
        summaries.push(v);
    }
    print_json(&json!({ "code_version": CODE_VERSION, "traces": summaries }));
    Ok(if hard == 0 { EXIT_OK } else { EXIT_FAILURE })
}

fn analyze_one(path: &Path, out: &Path, index: usize, count: usize) -> Result<serde_json::Value> {
    let trace = RunTrace::read_ndjson(BufReader::new(std::fs::File::open(path)?))?;
    let (_, _, meta) = trace.header();
    let config: RunConfig = serde_json::from_value(meta["config"].clone())
        .map_err(|e| Error::Config(format!("trace header: {e}")))?;
    let f = meta["schedule"]["f"]
        .as_u64()
        .map_or(config.f(), |f| f as u32);
    let overlay = overlay_for(
        config.p,
        f,
        config.delta0,
        config.graph_mode,
        config.graph_seed,
    )?;
    let a = analyze(&trace, &overlay)?;
    // one trace writes plain names; several get a numbered prefix
    let name = |base: &str| {
        if count == 1 {
            base.to_string()
        } else {
            format!("{index}-{base}")
        }
    };
    a.write_epochs_csv(std::fs::File::create(out.join(name("epochs.csv")))?)?;
    a.write_extended_csv(std::fs::File::create(out.join(name("extended.csv")))?)?;
    let summary = json!({
        "trace": path,
        "code_version": CODE_VERSION,
        "config": config,
        "epochs": a.epochs.len(),
        "stormy": a.stormy,
        "extended": a.extended.len(),
        "unproductive_fraction": a.unproductive_fraction(),
        "hard_violations": a.hard_violations().count(),
        "findings": a.findings,
        "proxy": "core sets replaced by compact witnesses",
    });
    std::fs::write(
        out.join(name("analysis.json")),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(summary)
}

fn analyze_sweep(path: &Path, out: &Path) -> Result<i32> {
    let rows: Vec<_> = read_rows(path)?
        .iter()
        .filter_map(|r| r.run_row())
        .collect();
    let report = bound_report(&rows);
    std::fs::create_dir_all(out)?;
    let mut w = csv::Writer::from_path(out.join("bounds.csv"))
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for r in &report {
        w.serialize(r)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    print_json(&json!({ "code_version": CODE_VERSION, "bounds": report }));
    Ok(EXIT_OK)
}
