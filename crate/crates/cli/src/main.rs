//! `mdst` — solve minimum-diameter-spanning-tree instances, generate graph
//! files, and run self-stabilization scenarios on the network simulator.
//!
//! Exit codes: 0 success, 2 invalid input, 3 requested predicates did not
//! stabilize within the horizon (the report is still written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mdst_core::center::{absolute_center_ordered, SkipBound};
use mdst_core::checker::run_with_checker;
use mdst_core::gen;
use mdst_core::graph::{
    all_pairs_distances, shortest_path_tree, tree_diameter, TieOrder, WeightedGraph,
};
use mdst_core::netsim::{RunConfig, Scenario, SchedulerPolicy, TraceMode};

#[derive(Parser)]
#[command(name = "mdst", version, about = "Minimum diameter spanning tree lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a graph file sequentially: absolute center, separation, MDST.
    Solve {
        /// Graph file (`n m` header, then `u v w` lines).
        #[arg(long)]
        graph: PathBuf,
        /// Enable the lower-bound edge-skipping optimization.
        #[arg(long)]
        skip_bound: bool,
    },
    /// Run a simulation scenario and write the stabilization report.
    Simulate {
        /// Scenario JSON file; its graph path resolves relative to it.
        #[arg(long)]
        scenario: PathBuf,
        /// Report output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the full action trace as JSON Lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario horizon.
        #[arg(long)]
        horizon: Option<u64>,
        /// Override the scheduler policy.
        #[arg(long, value_enum)]
        scheduler: Option<SchedulerArg>,
        /// Log every node's routing table each round (into the trace).
        #[arg(long)]
        dump_tables: bool,
    },
    /// Generate a graph file.
    Gen {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        n: usize,
        /// Edge count (random-connected only; default 2n capped at the
        /// complete graph).
        #[arg(long)]
        m: Option<usize>,
        /// Maximum integer edge weight (random-connected only).
        #[arg(long, default_value_t = 10)]
        wmax: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchedulerArg {
    Fair,
    Adversarial,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Path,
    Cycle,
    Star,
    RandomConnected,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Solve { graph, skip_bound } => cmd_solve(&graph, skip_bound),
        Command::Simulate {
            scenario,
            out,
            trace,
            seed,
            horizon,
            scheduler,
            dump_tables,
        } => cmd_simulate(&scenario, out, trace, seed, horizon, scheduler, dump_tables),
        Command::Gen {
            family,
            n,
            m,
            wmax,
            seed,
            out,
        } => cmd_gen(family, n, m, wmax, seed, &out),
    }
}

fn load_graph(path: &Path) -> Result<WeightedGraph, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("{}: {}", path.display(), e))?;
    WeightedGraph::parse(&text).map_err(|e| format!("{}: {}", path.display(), e))
}

fn cmd_solve(path: &Path, skip_bound: bool) -> Result<ExitCode, String> {
    let g = load_graph(path)?;
    let dt = all_pairs_distances(&g);
    let order = TieOrder::identity(g.n());
    let skip = if skip_bound {
        SkipBound::On
    } else {
        SkipBound::Off
    };
    let center = absolute_center_ordered(&g, &dt, &order, skip);
    let tree = shortest_path_tree(&g, &dt, center.location);
    let diameter = tree_diameter(&g, &tree);
    println!("center {}", center.location);
    println!("separation {}", center.separation);
    let edges: Vec<String> = tree
        .edges
        .iter()
        .map(|(u, v)| format!("{}-{}", u, v))
        .collect();
    println!("tree {}", edges.join(" "));
    println!("diameter {}", diameter);
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(
    path: &Path,
    out: Option<PathBuf>,
    trace_out: Option<PathBuf>,
    seed: Option<u64>,
    horizon: Option<u64>,
    scheduler: Option<SchedulerArg>,
    dump_tables: bool,
) -> Result<ExitCode, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("{}: {}", path.display(), e))?;
    let scenario: Scenario =
        serde_json::from_str(&text).map_err(|e| format!("{}: {}", path.display(), e))?;
    let graph_path = path
        .parent()
        .map(|d| d.join(&scenario.graph))
        .unwrap_or_else(|| PathBuf::from(&scenario.graph));
    let graph = load_graph(&graph_path)?;

    let mut cfg = RunConfig::new(graph, scenario.protocol)
        .with_init(scenario.init)
        .with_scheduler(scenario.scheduler)
        .with_seed(scenario.seed)
        .with_horizon(scenario.horizon)
        .with_faults(scenario.faults.clone());
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(h) = horizon {
        cfg.horizon = h;
    }
    if let Some(s) = scheduler {
        cfg.scheduler = match s {
            SchedulerArg::Fair => SchedulerPolicy::Fair,
            SchedulerArg::Adversarial => SchedulerPolicy::Adversarial,
        };
    }
    cfg.trace_mode = if trace_out.is_some() {
        TraceMode::Full
    } else {
        TraceMode::Digests
    };
    cfg.dump_tables = dump_tables;

    let outcome = run_with_checker(&cfg).map_err(|e| e.to_string())?;
    let report =
        serde_json::to_string_pretty(&outcome.report).map_err(|e| e.to_string())?;
    match &out {
        Some(p) => std::fs::write(p, report.as_bytes())
            .map_err(|e| format!("{}: {}", p.display(), e))?,
        None => println!("{report}"),
    }
    if let Some(p) = &trace_out {
        std::fs::write(p, outcome.trace.to_jsonl().as_bytes())
            .map_err(|e| format!("{}: {}", p.display(), e))?;
    }
    if outcome.report.stabilized {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}

fn cmd_gen(
    family: Family,
    n: usize,
    m: Option<usize>,
    wmax: u32,
    seed: u64,
    out: &Path,
) -> Result<ExitCode, String> {
    if n == 0 {
        return Err("n must be positive".into());
    }
    let graph = match family {
        Family::Path => {
            if n < 2 {
                return Err("path needs n >= 2".into());
            }
            gen::path(n)
        }
        Family::Cycle => {
            if n < 3 {
                return Err("cycle needs n >= 3".into());
            }
            gen::cycle(n)
        }
        Family::Star => {
            if n < 2 {
                return Err("star needs n >= 2".into());
            }
            gen::star(n)
        }
        Family::RandomConnected => {
            use rand::SeedableRng;
            let m = m.unwrap_or_else(|| (2 * n).min(n * (n - 1) / 2));
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            gen::try_random_connected(&mut rng, n, m, wmax).map_err(|e| e.to_string())?
        }
    };
    std::fs::write(out, graph.format().as_bytes())
        .map_err(|e| format!("{}: {}", out.display(), e))?;
    Ok(ExitCode::SUCCESS)
}
