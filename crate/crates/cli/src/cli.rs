//! Command-line flags and their translation into a [`RunConfig`].

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use periomega::FamilyTag;

use crate::config::{
    BifurcateTask, CompareTask, EntropyTask, Format, MapConfig, OmegaTask, OutputConfig, PeriodicTask, RunConfig,
    SharkovskiiTask, Task,
};
use crate::error::{invalid, CliError};
use crate::run;

#[derive(Debug, Parser)]
#[command(name = "periomega", version, about = "Periodic sets, chain recurrence and period-doubling cascades")]
pub struct Args {
    /// JSON run configuration; flags given alongside it override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for box sampling (omega, compare).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Catalog periodic orbits up to a period horizon.
    Periodic {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Approximate the chain-recurrent set by box subdivision.
    Omega {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        omega: OmegaArgs,
    },
    /// Compare cataloged periodic points with the chain-recurrent approximation.
    Compare {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        omega: OmegaArgs,
        /// Relative discrepancy volume below which the sets agree.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Locate the saddle-node and period-doubling cascade of a family.
    Bifurcate {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Parameter interval for the saddle-node search.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        bracket: Option<Vec<f64>>,
    },
    /// Sharkovskii order queries, printed as JSON lines.
    Sharkovskii {
        #[command(subcommand)]
        query: Option<Query>,
    },
    /// Topological entropy of an interval map from lap counts.
    Entropy {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        iterations: Option<usize>,
        /// Laps are counted on 2^density grid points.
        #[arg(long)]
        sample_density: Option<u32>,
    },
}

#[derive(Debug, Subcommand)]
enum Query {
    /// Position of m relative to n.
    Compare { m: u64, n: u64 },
    /// Periods up to the cap forced by a period-n orbit.
    Forced {
        n: u64,
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Forcing closure and power-of-two checks on a periodic search.
    Check {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        cap: Option<u64>,
    },
}

#[derive(Debug, clap::Args)]
struct MapArgs {
    /// quadratic, logistic, henon or sphere.
    #[arg(long, value_parser = parse_family)]
    family: Option<FamilyTag>,
    #[arg(long = "a", allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long = "b", allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Working domain as LO,HI per axis.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    domain: Option<Vec<f64>>,
}

#[derive(Debug, clap::Args)]
struct SearchArgs {
    #[arg(long)]
    max_period: Option<usize>,
    /// Newton seeds per axis.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, clap::Args)]
struct OmegaArgs {
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    initial_depth: Option<u32>,
    #[arg(long)]
    samples_per_box: Option<usize>,
    /// Image padding as a multiple of the cell diagonal.
    #[arg(long)]
    padding: Option<f64>,
}

fn parse_family(s: &str) -> Result<FamilyTag, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned()))
        .map_err(|_| format!("unknown family {s:?}; expected quadratic, logistic, henon or sphere"))
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl MapArgs {
    fn apply(self, map: &mut Option<MapConfig>) -> Result<(), CliError> {
        if let Some(f) = self.family {
            if map.as_ref().is_none_or(|m| m.family != f) {
                *map = Some(MapConfig::new(f));
            }
        }
        let given = self.a.is_some() || self.b.is_some() || self.lambda.is_some() || self.domain.is_some();
        if !given {
            return Ok(());
        }
        let Some(m) = map.as_mut() else {
            return invalid("--family is required when map parameters are given without a config");
        };
        m.a = self.a.or(m.a);
        m.b = self.b.or(m.b);
        m.lambda = self.lambda.or(m.lambda);
        if let Some(d) = self.domain {
            if d.is_empty() || d.len() % 2 != 0 {
                return invalid("--domain takes LO,HI for each axis");
            }
            m.domain = Some(d.chunks(2).map(|c| [c[0], c[1]]).collect());
        }
        Ok(())
    }
}

impl SearchArgs {
    fn apply(self, max_period: &mut usize, grid: &mut Option<usize>, tol: &mut f64) {
        set(max_period, self.max_period);
        *grid = self.grid.or(*grid);
        set(tol, self.tol);
    }
}

impl OmegaArgs {
    fn apply(self, depth: &mut u32, initial_depth: &mut Option<u32>, samples: &mut usize, padding: &mut f64) {
        set(depth, self.depth);
        *initial_depth = self.initial_depth.or(*initial_depth);
        set(samples, self.samples_per_box);
        set(padding, self.padding);
    }
}

impl Command {
    fn kind(&self) -> &'static str {
        match self {
            Command::Periodic { .. } => "periodic",
            Command::Omega { .. } => "omega",
            Command::Compare { .. } => "compare",
            Command::Bifurcate { .. } => "bifurcate",
            Command::Sharkovskii { .. } => "sharkovskii",
            Command::Entropy { .. } => "entropy",
        }
    }

    fn default_task(&self) -> Result<Task, CliError> {
        Ok(match self {
            Command::Periodic { .. } => Task::Periodic(PeriodicTask::default()),
            Command::Omega { .. } => Task::Omega(OmegaTask::default()),
            Command::Compare { .. } => Task::Compare(CompareTask::default()),
            Command::Bifurcate { .. } => Task::Bifurcate(BifurcateTask::default()),
            Command::Sharkovskii { query: None } => {
                return invalid("sharkovskii needs a query (compare, forced or check) or --config")
            }
            Command::Sharkovskii { query: Some(_) } => Task::Sharkovskii(SharkovskiiTask::Compare { m: 1, n: 1 }),
            Command::Entropy { .. } => Task::Entropy(EntropyTask::default()),
        })
    }

    /// Overlays the flags of this subcommand onto `cfg`, whose task has the same kind.
    fn apply(self, cfg: &mut RunConfig) -> Result<(), CliError> {
        match (self, &mut cfg.task) {
            (Command::Periodic { map, search }, Task::Periodic(t)) => {
                map.apply(&mut cfg.map)?;
                search.apply(&mut t.max_period, &mut t.grid, &mut t.tol);
            }
            (Command::Omega { map, omega }, Task::Omega(t)) => {
                map.apply(&mut cfg.map)?;
                omega.apply(&mut t.depth, &mut t.initial_depth, &mut t.samples_per_box, &mut t.padding);
            }
            (Command::Compare { map, search, omega, threshold }, Task::Compare(t)) => {
                map.apply(&mut cfg.map)?;
                search.apply(&mut t.max_period, &mut t.grid, &mut t.tol);
                omega.apply(&mut t.depth, &mut t.initial_depth, &mut t.samples_per_box, &mut t.padding);
                set(&mut t.threshold, threshold);
            }
            (Command::Bifurcate { map, n_max, tol, bracket }, Task::Bifurcate(t)) => {
                map.apply(&mut cfg.map)?;
                set(&mut t.n_max, n_max);
                set(&mut t.tol, tol);
                if let Some(b) = bracket {
                    t.bracket = [b[0], b[1]];
                }
            }
            (Command::Sharkovskii { query }, Task::Sharkovskii(t)) => match query {
                None => {}
                Some(Query::Compare { m, n }) => *t = SharkovskiiTask::Compare { m, n },
                Some(Query::Forced { n, cap }) => {
                    let prev = match t {
                        SharkovskiiTask::Forced { cap, .. } => Some(*cap),
                        _ => None,
                    };
                    *t = SharkovskiiTask::Forced { n, cap: cap.or(prev).unwrap_or(20) };
                }
                Some(Query::Check { map, search, cap }) => {
                    if !matches!(t, SharkovskiiTask::Check { .. }) {
                        *t = SharkovskiiTask::Check { max_period: 8, grid: None, tol: 1e-10, cap: None };
                    }
                    if let SharkovskiiTask::Check { max_period, grid, tol, cap: c } = t {
                        search.apply(max_period, grid, tol);
                        *c = cap.or(*c);
                    }
                    map.apply(&mut cfg.map)?;
                }
            },
            (Command::Entropy { map, iterations, sample_density }, Task::Entropy(t)) => {
                map.apply(&mut cfg.map)?;
                set(&mut t.iterations, iterations);
                set(&mut t.sample_density, sample_density);
            }
            (cmd, task) => {
                return invalid(format!(
                    "config task kind is {:?} but the subcommand is {:?}",
                    task.kind(),
                    cmd.kind()
                ))
            }
        }
        Ok(())
    }
}

fn load(path: &PathBuf) -> Result<RunConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn build_config(args: Args) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => load(path)?,
        None => RunConfig { map: None, task: args.command.default_task()?, output: OutputConfig::default() },
    };
    args.command.apply(&mut cfg)?;
    if let Some(seed) = args.seed {
        match &mut cfg.task {
            Task::Omega(t) => t.seed = seed,
            Task::Compare(t) => t.seed = seed,
            _ => {}
        }
    }
    if let Some(out) = args.out {
        cfg.output.path = Some(out.display().to_string());
    }
    set(&mut cfg.output.format, args.format);
    Ok(cfg)
}

pub fn execute(args: Args) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return invalid("--threads must be ≥ 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(format!("cannot start {n} worker threads: {e}")))?;
    }
    let mut cfg = build_config(args)?;
    let text = run::run(&mut cfg)?;
    match &cfg.output.path {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {path}: {e}"))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write to standard output: {e}"))),
    }
}
