use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bbs::algorithms::{make_policy, solve_for, Algorithm, BbsOptions, BbsPlan, BbsPolicy, Orientation};
use bbs::balance::{verify_constraints, OccupancyMap};
use bbs::bench::{decimal, rows_to_csv, run_sweep, BenchError, ExperimentConfig, TopologySource};
use bbs::schedule::{compile, CyclicSchedule, DEFAULT_LCM_CAP};
use bbs::sim::{run, SimConfig, SimError, StepPolicy};
use bbs::topology::{parse_grid_spec, Topology};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bbs", version, about = "Many-packet broadcast on fixed topologies")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a topology as an edge list.
    Gen {
        #[command(flatten)]
        topo: TopoArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the occupancy LP; writes occupancies as CSV and prints C.
    Solve {
        #[command(flatten)]
        topo: TopoArgs,
        #[arg(long, value_enum, default_value_t = OrientArg::Split)]
        orientation: OrientArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile occupancies into a cyclic frame schedule.
    Build {
        #[command(flatten)]
        topo: TopoArgs,
        /// Occupancy CSV from `solve`; solved on the fly when omitted.
        #[arg(long)]
        occupancies: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OrientArg::Split)]
        orientation: OrientArg,
        #[arg(long)]
        max_den: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one broadcast and print a report.
    Run {
        #[command(flatten)]
        topo: TopoArgs,
        #[arg(long, default_value = "bbs")]
        algo: Algorithm,
        #[arg(long)]
        packets: usize,
        /// Schedule file from `build` (bbs only).
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OrientArg::Split)]
        orientation: OrientArg,
        #[arg(long)]
        max_den: Option<u64>,
        /// Write per-step counters and every transfer to the output directory.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep topologies, algorithms and packet counts into a results table.
    Bench {
        /// Key-value config file; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        grid: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        edges: Vec<PathBuf>,
        #[arg(long)]
        root: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        algo: Vec<Algorithm>,
        #[arg(long, value_delimiter = ',')]
        packets: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the active-edge series of every run.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        max_den: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Args)]
struct TopoArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    root: Option<usize>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Grid dimensions, e.g. 4x4 or 2x2x4.
    #[arg(long)]
    grid: Option<String>,
    /// Edge-list file.
    #[arg(long)]
    edges: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrientArg {
    Split,
    DepthFirst,
    Distance,
}

impl From<OrientArg> for Orientation {
    fn from(o: OrientArg) -> Orientation {
        match o {
            OrientArg::Split => Orientation::Split,
            OrientArg::DepthFirst => Orientation::DepthFirst,
            OrientArg::Distance => Orientation::BfsDistance,
        }
    }
}

enum Failure {
    Config(String),
    Protocol(String),
    Livelock(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Protocol(_) => 3,
            Failure::Livelock(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Protocol(m) | Failure::Livelock(m) => m,
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Failure {
        match e {
            SimError::Livelock { .. } => Failure::Livelock(e.to_string()),
            _ => Failure::Protocol(e.to_string()),
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Failure {
        match e {
            BenchError::Sim { source: SimError::Livelock { .. }, .. } => Failure::Livelock(e.to_string()),
            BenchError::Sim { .. } => Failure::Protocol(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn config<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

impl TopoArgs {
    fn source(&self) -> Result<TopologySource, Failure> {
        match (&self.source.grid, &self.source.edges) {
            (Some(g), _) => Ok(TopologySource::Grid(parse_grid_spec(g).map_err(config)?)),
            (_, Some(p)) => Ok(TopologySource::EdgeList(p.clone())),
            _ => unreachable!("clap requires one source"),
        }
    }

    fn load(&self) -> Result<(String, Topology), Failure> {
        let src = self.source()?;
        Ok((src.label(), src.load(self.root)?))
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Gen { topo, out } => {
            let (_, t) = topo.load()?;
            emit(&out, &t.to_edge_list())
        }
        Cmd::Solve { topo, orientation, out } => {
            let (_, t) = topo.load()?;
            let (sol, _) = solve_for(&t, orientation.into()).map_err(config)?;
            let report = verify_constraints(&t, &sol.occupancies);
            if !report.is_clean() {
                return Err(Failure::Config(format!("solver produced a violating solution: {report:?}")));
            }
            emit(&out, &sol.occupancies.to_csv(&sol.c))?;
            eprintln!("C = {}", sol.c);
            Ok(())
        }
        Cmd::Build { topo, occupancies, orientation, max_den, out } => {
            let (_, t) = topo.load()?;
            let sched = match occupancies {
                // a plain occupancy file has no classes; it follows the first class's order
                Some(p) => {
                    let occ = OccupancyMap::from_csv(&read(&p)?).map_err(config)?.0;
                    let (_, classes) = solve_for(&t, orientation.into()).map_err(config)?;
                    compile(&t, &occ, &classes[0].rank, max_den, DEFAULT_LCM_CAP).map_err(config)?
                }
                None => {
                    let opts = BbsOptions { orientation: orientation.into(), max_den, ..BbsOptions::default() };
                    let plan = BbsPlan::build(&t, &opts).map_err(config)?;
                    plan.schedule.as_ref().clone()
                }
            };
            emit(&out, &sched.serialize())?;
            eprintln!("frames = {}", sched.frame_count());
            Ok(())
        }
        Cmd::Run { topo, algo, packets, schedule, orientation, max_den, trace, out } => {
            let (label, t) = topo.load()?;
            if packets == 0 {
                return Err(Failure::Config("--packets must be positive".into()));
            }
            let mut policy: Box<dyn StepPolicy + Send> = match (&schedule, algo) {
                (Some(p), Algorithm::Bbs) => {
                    let s = CyclicSchedule::deserialize(&read(p)?).map_err(config)?;
                    s.check_topology(&t).map_err(config)?;
                    Box::new(BbsPolicy::from_schedule(s))
                }
                (Some(_), _) => return Err(Failure::Config("--schedule only applies to bbs".into())),
                (None, Algorithm::Bbs) => {
                    let opts = BbsOptions { orientation: orientation.into(), max_den, ..BbsOptions::default() };
                    let plan = BbsPlan::build(&t, &opts).map_err(config)?;
                    Box::new(BbsPolicy::new(&plan))
                }
                (None, a) => make_policy(a, &t, packets, None).map_err(config)?,
            };
            let r = run(&t, policy.as_mut(), &SimConfig::new(packets).keep_transfers(trace))?;
            let mut report = String::from("{\n");
            let fields = [
                ("topology", format!("\"{label}\"")),
                ("algorithm", format!("\"{algo}\"")),
                ("nodes", t.node_count().to_string()),
                ("N", packets.to_string()),
                ("T", r.t.to_string()),
                ("transfers", r.total_transfers.to_string()),
                ("avg_AE", decimal(r.avg_active_edges, 4)),
                ("norm_AE", decimal(r.normalized_active, 4)),
                ("T_I", r.phases.t_i.to_string()),
                ("T_S", r.phases.t_s.to_string()),
                ("T_F", r.phases.t_f.to_string()),
                ("phases_clamped", r.phases.clamped.to_string()),
            ];
            for (i, (k, v)) in fields.iter().enumerate() {
                let sep = if i + 1 < fields.len() { "," } else { "" };
                writeln!(report, "  \"{k}\": {v}{sep}").unwrap();
            }
            report.push_str("}\n");
            print!("{report}");
            if trace {
                let dir = out.unwrap_or_else(|| PathBuf::from("."));
                write(&dir.join("steps.csv"), &r.trace.to_csv())?;
                write(&dir.join("transfers.csv"), &r.trace.transfers_csv())?;
            }
            Ok(())
        }
        Cmd::Bench { config: file, grid, edges, root, algo, packets, out, trace, max_den, jobs } => {
            let mut cfg = match &file {
                Some(p) => ExperimentConfig::parse(&read(p)?)?,
                None => ExperimentConfig {
                    algorithms: Algorithm::ALL.to_vec(),
                    packets: vec![100, 500, 2500],
                    ..ExperimentConfig::default()
                },
            };
            if !grid.is_empty() || !edges.is_empty() {
                cfg.topologies.clear();
                for g in &grid {
                    cfg.topologies.push(TopologySource::Grid(parse_grid_spec(g).map_err(config)?));
                }
                cfg.topologies.extend(edges.into_iter().map(TopologySource::EdgeList));
            }
            if !algo.is_empty() {
                cfg.algorithms = algo;
            }
            if !packets.is_empty() {
                cfg.packets = packets;
            }
            cfg.root = root.or(cfg.root);
            cfg.out_dir = out.or(cfg.out_dir);
            cfg.trace |= trace;
            cfg.max_den = max_den.or(cfg.max_den);
            cfg.jobs = jobs.or(cfg.jobs);
            if cfg.trace && cfg.out_dir.is_none() {
                return Err(Failure::Config("--trace needs --out".into()));
            }
            let result = run_sweep(&cfg)?;
            let csv = rows_to_csv(&result.rows);
            match &cfg.out_dir {
                Some(dir) => {
                    write(&dir.join("results.csv"), &csv)?;
                    for (label, a, n, tr) in &result.traces {
                        write(&dir.join("series").join(format!("{label}_{a}_{n}.csv")), &tr.to_csv())?;
                    }
                    eprintln!("{} rows written to {}", result.rows.len(), dir.join("results.csv").display());
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}
