//! Benchmark sweeps over topologies, algorithms and packet counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::algorithms::{make_policy, Algorithm, BbsError, BbsOptions, BbsPlan, UnknownAlgorithm};
use crate::sim::{run, Frac, PhaseBreakdown, RunTrace, SimConfig, SimError};
use crate::topology::{build_grid, from_edge_list, parse_grid_spec, Topology, TopologyError};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Algorithm(#[from] UnknownAlgorithm),
    #[error("{label}: {source}")]
    Plan { label: String, source: BbsError },
    #[error("{label} {algo} N={n}: {source}")]
    Sim { label: String, algo: Algorithm, n: usize, source: SimError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Where a topology comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologySource {
    Grid(Vec<usize>),
    EdgeList(PathBuf),
}

impl TopologySource {
    pub fn label(&self) -> String {
        match self {
            TopologySource::Grid(d) => d.iter().map(ToString::to_string).collect::<Vec<_>>().join("x"),
            TopologySource::EdgeList(p) => {
                p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            }
        }
    }

    pub fn load(&self, root: Option<usize>) -> Result<Topology, BenchError> {
        let t = match self {
            TopologySource::Grid(d) => build_grid(d)?,
            TopologySource::EdgeList(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| BenchError::Io { path: p.clone(), source: e })?;
                from_edge_list(&text)?
            }
        };
        Ok(match root {
            Some(r) => t.with_root(r)?,
            None => t,
        })
    }
}

/// Sweep settings.
///
/// The file form is one `key = value` per line, `#` comments:
///
/// | key | value |
/// |---|---|
/// | `grid` | grid dims `AxB[xC]`, comma separated, repeatable |
/// | `edges` | edge-list paths, comma separated, repeatable |
/// | `root` | root node id for every topology |
/// | `algorithms` | any of `bbs, greedy, btree, srda` |
/// | `packets` | packet counts |
/// | `out` | output directory |
/// | `trace` | `true` to write per-run active-edge series |
/// | `max_den` | rationalize occupancies to this denominator |
/// | `jobs` | worker threads |
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExperimentConfig {
    pub topologies: Vec<TopologySource>,
    pub root: Option<usize>,
    pub algorithms: Vec<Algorithm>,
    pub packets: Vec<usize>,
    pub out_dir: Option<PathBuf>,
    pub trace: bool,
    pub max_den: Option<u64>,
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig, BenchError> {
        let mut cfg = ExperimentConfig::default();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: &str| BenchError::Config(format!("line {}: {m}", ln + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            let items = || value.split(',').map(str::trim).filter(|s| !s.is_empty());
            let int = |s: &str| s.parse::<u64>().map_err(|_| bad(&format!("bad number {s:?}")));
            match key {
                "grid" => {
                    for g in items() {
                        cfg.topologies.push(TopologySource::Grid(parse_grid_spec(g)?));
                    }
                }
                "edges" => cfg.topologies.extend(items().map(|p| TopologySource::EdgeList(p.into()))),
                "root" => cfg.root = Some(int(value)? as usize),
                "algorithms" => {
                    cfg.algorithms = items().map(str::parse).collect::<Result<_, _>>()?;
                }
                "packets" => {
                    cfg.packets = items().map(|s| int(s).map(|n| n as usize)).collect::<Result<_, _>>()?;
                }
                "out" => cfg.out_dir = Some(value.into()),
                "trace" => {
                    cfg.trace = match value {
                        "true" | "1" | "yes" => true,
                        "false" | "0" | "no" => false,
                        _ => return Err(bad("trace must be true or false")),
                    }
                }
                "max_den" => cfg.max_den = Some(int(value)?),
                "jobs" => cfg.jobs = Some(int(value)? as usize),
                _ => return Err(bad(&format!("unknown key {key:?}"))),
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.topologies.is_empty() {
            return Err(BenchError::Config("no topology given".into()));
        }
        if self.algorithms.is_empty() {
            return Err(BenchError::Config("algorithm list is empty".into()));
        }
        if self.packets.is_empty() {
            return Err(BenchError::Config("packet list is empty".into()));
        }
        if self.packets.contains(&0) {
            return Err(BenchError::Config("packet counts must be positive".into()));
        }
        if self.max_den == Some(0) || self.jobs == Some(0) {
            return Err(BenchError::Config("max_den and jobs must be positive".into()));
        }
        Ok(())
    }
}

/// One cell of a results table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub topology: String,
    pub algorithm: Algorithm,
    pub n: usize,
    pub t: u64,
    pub avg_ae: Frac,
    pub norm_ae: Frac,
    pub phases: PhaseBreakdown,
    /// `T / T_bbs` for the same topology and `N`; `None` without a BBS row.
    pub t_over_tb: Option<Frac>,
}

pub const CSV_HEADER: &str = "topology,algorithm,N,T,avg_AE,norm_AE,T_I,T_S,T_F,T_over_Tb";

/// `x` rounded half up to `places` decimals.
pub fn decimal(x: Frac, places: u32) -> String {
    let scale = 10u64.pow(places);
    // round half up
    let v = (x * Frac::from_integer(scale) + Frac::new(1, 2)).to_integer();
    format!("{}.{:0width$}", v / scale, v % scale, width = places as usize)
}

pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.topology,
            r.algorithm,
            r.n,
            r.t,
            decimal(r.avg_ae, 4),
            decimal(r.norm_ae, 4),
            r.phases.t_i,
            r.phases.t_s,
            r.phases.t_f,
            r.t_over_tb.map(|x| decimal(x, 4)).unwrap_or_default()
        )
        .unwrap();
    }
    out
}

/// Rows sorted by `(topology, algorithm name, N)`, plus traces when requested.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<BenchRow>,
    pub traces: Vec<(String, Algorithm, usize, RunTrace)>,
}

/// Runs every `(topology, algorithm, N)` cell, up to `jobs` at a time.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput, BenchError> {
    cfg.validate()?;
    let mut topos = Vec::new();
    for src in &cfg.topologies {
        topos.push((src.label(), src.load(cfg.root)?));
    }
    run_sweep_on(&topos, cfg)
}

/// Like [`run_sweep`] with topologies already loaded and labeled.
pub fn run_sweep_on(
    topos: &[(String, Topology)],
    cfg: &ExperimentConfig,
) -> Result<SweepOutput, BenchError> {
    if cfg.algorithms.is_empty() || cfg.packets.is_empty() || cfg.packets.contains(&0) {
        return Err(BenchError::Config("need at least one algorithm and positive packet counts".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    pool.install(|| sweep(topos, cfg))
}

fn sweep(topos: &[(String, Topology)], cfg: &ExperimentConfig) -> Result<SweepOutput, BenchError> {
    let opts = BbsOptions { max_den: cfg.max_den, ..BbsOptions::default() };
    let wants_bbs = cfg.algorithms.contains(&Algorithm::Bbs);
    let plans: Vec<Option<BbsPlan>> = topos
        .par_iter()
        .map(|(label, t)| {
            if !wants_bbs {
                return Ok(None);
            }
            BbsPlan::build(t, &opts)
                .map(Some)
                .map_err(|e| BenchError::Plan { label: label.clone(), source: e })
        })
        .collect::<Result<_, _>>()?;
    let mut cells = Vec::new();
    for k in 0..topos.len() {
        for &a in &cfg.algorithms {
            for &n in &cfg.packets {
                cells.push((k, a, n));
            }
        }
    }
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(k, algo, n)| {
            let (label, t) = &topos[k];
            let mut policy = make_policy(algo, t, n, plans[k].as_ref())
                .map_err(|e| BenchError::Plan { label: label.clone(), source: e })?;
            let r = run(t, policy.as_mut(), &SimConfig::new(n))
                .map_err(|e| BenchError::Sim { label: label.clone(), algo, n, source: e })?;
            Ok((k, algo, n, r))
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    let bbs_t: BTreeMap<(usize, usize), u64> = results
        .iter()
        .filter(|(_, a, _, _)| *a == Algorithm::Bbs)
        .map(|(k, _, n, r)| ((*k, *n), r.t))
        .collect();
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for (k, algo, n, r) in results {
        let label = topos[k].0.clone();
        rows.push(BenchRow {
            topology: label.clone(),
            algorithm: algo,
            n,
            t: r.t,
            avg_ae: r.avg_active_edges,
            norm_ae: r.normalized_active,
            phases: r.phases,
            t_over_tb: bbs_t.get(&(k, n)).map(|&tb| Frac::new(r.t, tb.max(1))),
        });
        if cfg.trace {
            traces.push((label, algo, n, r.trace));
        }
    }
    rows.sort_by(|a, b| {
        (&a.topology, a.algorithm.name(), a.n).cmp(&(&b.topology, b.algorithm.name(), b.n))
    });
    traces.sort_by(|a, b| (&a.0, a.1.name(), a.2).cmp(&(&b.0, b.1.name(), b.2)));
    Ok(SweepOutput { rows, traces })
}
