//! Benchmark sweeps: solver x map x agent count x seed, emitted as CSV.

use std::path::PathBuf;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use rayon::prelude::*;

use unlabeled_mapf::instance::{generate_random_instance, MovingAiMap};

use crate::instance_args::load_map;
use crate::solver::{csv_row, run_solver, SolverSpec, CSV_HEADER};

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    /// key=value config file; flags given here override it
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// map files to sweep over
    #[arg(long, num_args = 1..)]
    pub maps: Vec<PathBuf>,

    /// agent counts to sweep over
    #[arg(long, num_args = 1..)]
    pub agents: Vec<usize>,

    /// targets per instance (default: same as the agent count)
    #[arg(long)]
    pub targets: Option<usize>,

    /// instances per (map, agent count): seeds 0..N
    #[arg(long)]
    pub seeds: Option<u64>,

    /// solver specs, e.g. tswap:alg2 flow
    #[arg(long, num_args = 1..)]
    pub solvers: Vec<String>,

    /// per-solve timeout in seconds
    #[arg(long)]
    pub timeout: Option<f64>,

    /// output CSV path (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// parallel workers (default 1; runtimes are only comparable serially)
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug)]
struct BenchConfig {
    maps: Vec<PathBuf>,
    agents: Vec<usize>,
    targets: Option<usize>,
    seeds: u64,
    solvers: Vec<SolverSpec>,
    timeout: Duration,
    out: Option<PathBuf>,
    jobs: usize,
}

fn merge_config(args: &BenchArgs) -> Result<BenchConfig> {
    let mut maps = args.maps.clone();
    let mut agents = args.agents.clone();
    let mut targets = args.targets;
    let mut seeds = args.seeds;
    let mut solver_names: Vec<String> = args.solvers.clone();
    let mut timeout = args.timeout;
    let mut out = args.out.clone();
    let mut jobs = args.jobs;

    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{} line {}: expected key=value", path.display(), i + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let list = || value.split([',', ' ']).filter(|v| !v.is_empty());
            match key {
                "maps" if maps.is_empty() => maps = list().map(PathBuf::from).collect(),
                "agents" if agents.is_empty() => {
                    agents = list().map(|v| v.parse()).collect::<Result<_, _>>()?
                }
                "targets" if targets.is_none() => targets = Some(value.parse()?),
                "seeds" if seeds.is_none() => seeds = Some(value.parse()?),
                "solvers" if solver_names.is_empty() => solver_names = list().map(String::from).collect(),
                "timeout_s" if timeout.is_none() => timeout = Some(value.parse()?),
                "out" if out.is_none() => out = Some(PathBuf::from(value)),
                "jobs" if jobs.is_none() => jobs = Some(value.parse()?),
                "maps" | "agents" | "targets" | "seeds" | "solvers" | "timeout_s" | "out" | "jobs" => {}
                other => bail!("{} line {}: unknown key `{}`", path.display(), i + 1, other),
            }
        }
    }

    if maps.is_empty() {
        bail!("no maps given (flag --maps or config `maps=`)");
    }
    if agents.is_empty() {
        bail!("no agent counts given");
    }
    if solver_names.is_empty() {
        bail!("no solvers given");
    }
    let solvers = solver_names
        .iter()
        .map(|s| s.parse::<SolverSpec>().map_err(|e| anyhow!("solver `{}`: {}", s, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchConfig {
        maps,
        agents,
        targets,
        seeds: seeds.unwrap_or(10),
        solvers,
        timeout: Duration::from_secs_f64(timeout.unwrap_or(300.0)),
        out,
        jobs: jobs.unwrap_or(1),
    })
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let config = merge_config(args)?;
    let maps: Vec<(String, MovingAiMap)> = config
        .maps
        .iter()
        .map(|p| load_map(p).map(|m| (p.display().to_string(), m)))
        .collect::<Result<_>>()?;
    for (name, map) in &maps {
        for &n in &config.agents {
            if n > map.graph.n_nodes() {
                bail!("{}: {} agents exceed the {} free cells", name, n, map.graph.n_nodes());
            }
        }
    }

    // one task per instance; every solver sees the same instance
    let tasks: Vec<(usize, usize, u64)> = maps
        .iter()
        .enumerate()
        .flat_map(|(mi, _)| {
            config
                .agents
                .iter()
                .flat_map(move |&n| (0..config.seeds).map(move |seed| (mi, n, seed)))
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .context("building worker pool")?;
    let rows: Vec<Vec<String>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(mi, n, seed)| {
                let (name, map) = &maps[mi];
                let n_targets = config.targets.unwrap_or(n).min(n);
                let mut rows = Vec::with_capacity(config.solvers.len());
                match generate_random_instance(&map.graph, n, n_targets, seed) {
                    Ok(instance) => {
                        for spec in &config.solvers {
                            let output = run_solver(&instance, spec, config.timeout);
                            rows.push(csv_row(name, n, Some(seed), spec, &output));
                        }
                    }
                    Err(e) => {
                        eprintln!("warning: {} n={} seed={}: {}", name, n, seed, e);
                    }
                }
                rows
            })
            .collect()
    });

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for row in rows.into_iter().flatten() {
        csv.push_str(&row);
        csv.push('\n');
    }
    match &config.out {
        Some(path) => std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", csv),
    }
    Ok(())
}
