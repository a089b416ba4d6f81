//! Shared instance loading for the subcommands.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::Args;

use unlabeled_mapf::graph::Node;
use unlabeled_mapf::instance::{
    generate_random_instance, parse_coord, parse_instance_spec, parse_movingai_map, resolve_coords,
    Instance, InstanceSpecBody, MovingAiMap,
};

#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    /// MovingAI map file
    #[arg(long)]
    pub map: Option<PathBuf>,

    /// Instance description file (map + starts/targets or agents/seed)
    #[arg(long, conflicts_with_all = ["map", "starts", "targets", "agents"])]
    pub instance: Option<PathBuf>,

    /// Explicit start cells, x,y = (col,row)
    #[arg(long, num_args = 1.., requires = "targets")]
    pub starts: Vec<String>,

    /// Explicit target cells, x,y = (col,row)
    #[arg(long, num_args = 1.., requires = "starts")]
    pub targets: Vec<String>,

    /// Sample this many random starts (and targets) instead
    #[arg(long, conflicts_with = "starts")]
    pub agents: Option<usize>,

    /// Number of random targets (default: same as --agents)
    #[arg(long, requires = "agents")]
    pub n_targets: Option<usize>,

    /// Seed for random instance sampling
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A map plus resolved starts and targets; owns the graph the instance
/// borrows from.
pub struct LoadedInstance {
    pub map: MovingAiMap,
    pub map_name: String,
    pub starts: Vec<Node>,
    pub targets: Vec<Node>,
    pub seed: Option<u64>,
}

impl LoadedInstance {
    pub fn instance(&self) -> Result<Instance<'_>> {
        Instance::new(&self.map.graph, self.starts.clone(), self.targets.clone())
            .map_err(|e| anyhow!("invalid instance: {}", e))
    }
}

pub fn load_map(path: &Path) -> Result<MovingAiMap> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let map = parse_movingai_map(&text).with_context(|| format!("parsing {}", path.display()))?;
    warn_about(&map, &path.display().to_string());
    Ok(map)
}

fn warn_about(map: &MovingAiMap, name: &str) {
    if map.dropped_cells > 0 {
        eprintln!(
            "warning: {}: kept the largest connected component, dropped {} passable cells",
            name, map.dropped_cells
        );
    }
    for &(line, c) in map.unknown_chars.iter().take(3) {
        eprintln!("warning: {}: unknown character '{}' on line {} treated as obstacle", name, c, line);
    }
}

pub fn load(args: &InstanceArgs) -> Result<LoadedInstance> {
    if let Some(instance_path) = &args.instance {
        let text = std::fs::read_to_string(instance_path)
            .with_context(|| format!("reading {}", instance_path.display()))?;
        let spec = parse_instance_spec(&text)
            .map_err(|e| anyhow!("{}: {}", instance_path.display(), e))?;
        let base = instance_path.parent().unwrap_or(Path::new("."));
        let (map, map_name) = resolve_map_spec(&spec.map, base)?;
        return match spec.body {
            InstanceSpecBody::Explicit { starts, targets } => {
                let starts = resolve_coords(&map.graph, &starts).map_err(|e| anyhow!(e))?;
                let targets = resolve_coords(&map.graph, &targets).map_err(|e| anyhow!(e))?;
                Ok(LoadedInstance { map, map_name, starts, targets, seed: None })
            }
            InstanceSpecBody::Random { agents, targets, seed } => {
                let inst = generate_random_instance(&map.graph, agents, targets, seed)
                    .map_err(|e| anyhow!("sampling instance: {}", e))?;
                let (starts, targets) = (inst.starts().to_vec(), inst.targets().to_vec());
                Ok(LoadedInstance { map, map_name, starts, targets, seed: Some(seed) })
            }
        };
    }

    let map_path = args
        .map
        .as_ref()
        .ok_or_else(|| anyhow!("give --map (with --starts/--targets or --agents) or --instance"))?;
    let map = load_map(map_path)?;
    let map_name = map_path.display().to_string();
    if !args.starts.is_empty() {
        let starts = parse_cells(&map, &args.starts)?;
        let targets = parse_cells(&map, &args.targets)?;
        return Ok(LoadedInstance { map, map_name, starts, targets, seed: None });
    }
    let agents = args
        .agents
        .ok_or_else(|| anyhow!("give --starts/--targets or --agents"))?;
    let n_targets = args.n_targets.unwrap_or(agents);
    let inst = generate_random_instance(&map.graph, agents, n_targets, args.seed)
        .map_err(|e| anyhow!("sampling instance: {}", e))?;
    let (starts, targets) = (inst.starts().to_vec(), inst.targets().to_vec());
    Ok(LoadedInstance { map, map_name, starts, targets, seed: Some(args.seed) })
}

fn resolve_map_spec(spec: &str, base_dir: &Path) -> Result<(MovingAiMap, String)> {
    if let Some(rows) = spec.strip_prefix("inline:") {
        let rows: Vec<&str> = rows.split(';').collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut text = format!("type octile\nheight {}\nwidth {}\nmap\n", height, width);
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        let map = parse_movingai_map(&text).map_err(|e| anyhow!("inline map: {}", e))?;
        return Ok((map, "inline".to_string()));
    }
    let path = base_dir.join(spec);
    let map = load_map(&path)?;
    Ok((map, spec.to_string()))
}

fn parse_cells(map: &MovingAiMap, tokens: &[String]) -> Result<Vec<Node>> {
    let coords: Result<Vec<(usize, usize)>, String> = tokens.iter().map(|t| parse_coord(t)).collect();
    let coords = coords.map_err(|e| anyhow!(e))?;
    resolve_coords(&map.graph, &coords).map_err(|e| anyhow!(e))
}
