//! Synchronous, half-duplex broadcast simulator.
//!
//! Each step a policy proposes transfers of single packets along edges. The
//! engine checks them against the pre-step state, applies them together and
//! stops once every node holds all packets.

use std::fmt;
use std::fmt::Write as _;

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::topology::{Rate, Topology};

/// Exact ratio used for run metrics.
pub type Frac = Ratio<u64>;

/// Fixed-size set of packet ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketSet {
    words: Vec<u64>,
}

impl PacketSet {
    pub fn empty(n: usize) -> PacketSet {
        PacketSet { words: vec![0; n.div_ceil(64)] }
    }

    pub fn full(n: usize) -> PacketSet {
        let mut s = PacketSet::empty(n);
        for p in 0..n {
            s.insert(p);
        }
        s
    }

    pub fn contains(&self, p: usize) -> bool {
        self.words[p / 64] >> (p % 64) & 1 == 1
    }

    pub fn insert(&mut self, p: usize) -> bool {
        let had = self.contains(p);
        self.words[p / 64] |= 1 << (p % 64);
        !had
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Lowest packet in `self` but not in `other`.
    pub fn first_missing_from(&self, other: &PacketSet) -> Option<usize> {
        self.words
            .iter()
            .zip(&other.words)
            .enumerate()
            .find_map(|(k, (a, b))| {
                let d = a & !b;
                (d != 0).then(|| k * 64 + d.trailing_zeros() as usize)
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                (w != 0).then(|| {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    k * 64 + b
                })
            })
        })
    }
}

/// One packet moving along one directed edge in one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transfer {
    pub sender: usize,
    pub receiver: usize,
    pub packet: usize,
}

impl Transfer {
    pub fn new(sender: usize, receiver: usize, packet: usize) -> Transfer {
        Transfer { sender, receiver, packet }
    }
}

impl fmt::Display for Transfer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{} packet {}", self.sender, self.receiver, self.packet)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Misstep {
    NotAnEdge,
    NodeBusy(usize),
    UnknownPacket,
    SenderLacksPacket,
    ReceiverHasPacket,
    RateLimited,
}

impl fmt::Display for Misstep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Misstep::NotAnEdge => write!(f, "nodes are not adjacent"),
            Misstep::NodeBusy(n) => write!(f, "node {n} is already in a transfer this step"),
            Misstep::UnknownPacket => write!(f, "packet id out of range"),
            Misstep::SenderLacksPacket => write!(f, "sender does not hold the packet"),
            Misstep::ReceiverHasPacket => write!(f, "receiver already holds the packet"),
            Misstep::RateLimited => write!(f, "edge has not accumulated a full transfer"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("protocol violation at step {step}: {transfer}: {reason}")]
    ProtocolViolation { step: u64, transfer: Transfer, reason: Misstep },
    #[error("no completion after {steps} steps")]
    Livelock { steps: u64 },
    #[error("trace does not end with every node complete")]
    IncompleteTrace,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub packets: usize,
    /// Defaults to `100 N + 100 P` when `None`.
    pub max_steps: Option<u64>,
    /// Keep every transfer, not just per-step counters.
    pub keep_transfers: bool,
}

impl SimConfig {
    pub fn new(packets: usize) -> SimConfig {
        assert!(packets >= 1, "need at least one packet");
        SimConfig { packets, max_steps: None, keep_transfers: false }
    }

    pub fn keep_transfers(mut self, keep: bool) -> SimConfig {
        self.keep_transfers = keep;
        self
    }

    pub fn step_cap(&self, p: usize) -> u64 {
        self.max_steps.unwrap_or(100 * self.packets as u64 + 100 * p as u64)
    }
}

/// Packet sets of all nodes plus the step counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimState {
    sets: Vec<PacketSet>,
    counts: Vec<usize>,
    packets: usize,
    step: u64,
    // per directed edge transfer credit, parallel to adjacency; None with unit rates
    credit: Option<Vec<Vec<Rate>>>,
}

impl SimState {
    /// Root holds every packet, all other nodes none.
    pub fn initial(t: &Topology, packets: usize) -> SimState {
        let p = t.node_count();
        let mut sets = vec![PacketSet::empty(packets); p];
        let mut counts = vec![0; p];
        sets[t.root()] = PacketSet::full(packets);
        counts[t.root()] = packets;
        let credit = (!t.has_unit_rates())
            .then(|| (0..p).map(|i| vec![Rate::zero(); t.degree(i)]).collect());
        SimState { sets, counts, packets, step: 0, credit }
    }

    pub fn packets(&self) -> usize {
        self.packets
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn node_count(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, node: usize) -> &PacketSet {
        &self.sets[node]
    }

    pub fn holds(&self, node: usize, packet: usize) -> bool {
        self.sets[node].contains(packet)
    }

    pub fn count(&self, node: usize) -> usize {
        self.counts[node]
    }

    /// Packets the node still lacks.
    pub fn deficit(&self, node: usize) -> usize {
        self.packets - self.counts[node]
    }

    pub fn is_complete(&self, node: usize) -> bool {
        self.counts[node] == self.packets
    }

    pub fn covered(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn completed(&self) -> usize {
        self.counts.iter().filter(|&&c| c == self.packets).count()
    }

    pub fn all_complete(&self) -> bool {
        self.counts.iter().all(|&c| c == self.packets)
    }

    /// Lowest packet `u` holds that `v` lacks.
    pub fn first_useful(&self, u: usize, v: usize) -> Option<usize> {
        if self.counts[u] == 0 || self.counts[v] == self.packets {
            return None;
        }
        self.sets[u].first_missing_from(&self.sets[v])
    }

    /// True if `u` holds something `v` lacks.
    pub fn can_help(&self, u: usize, v: usize) -> bool {
        self.first_useful(u, v).is_some()
    }

    /// True if edge `u -> v` may carry a packet this step.
    pub fn edge_ready(&self, t: &Topology, u: usize, v: usize) -> bool {
        match &self.credit {
            None => true,
            Some(c) => match t.neighbors(u).binary_search(&v) {
                Ok(k) => c[u][k] + t.rate(u, v).unwrap() >= Rate::one(),
                Err(_) => false,
            },
        }
    }
}

/// Checks `transfers` against the pre-step state, then applies them all and
/// advances the step counter.
pub fn apply_step(state: &mut SimState, t: &Topology, transfers: &[Transfer]) -> Result<(), SimError> {
    let step = state.step + 1;
    let p = t.node_count();
    let mut busy = vec![false; p];
    for &tr in transfers {
        let fail = |reason| Err(SimError::ProtocolViolation { step, transfer: tr, reason });
        if tr.sender >= p || tr.receiver >= p || !t.has_edge(tr.sender, tr.receiver) {
            return fail(Misstep::NotAnEdge);
        }
        for n in [tr.sender, tr.receiver] {
            if busy[n] {
                return fail(Misstep::NodeBusy(n));
            }
            busy[n] = true;
        }
        if tr.packet >= state.packets {
            return fail(Misstep::UnknownPacket);
        }
        if !state.holds(tr.sender, tr.packet) {
            return fail(Misstep::SenderLacksPacket);
        }
        if state.holds(tr.receiver, tr.packet) {
            return fail(Misstep::ReceiverHasPacket);
        }
        if !state.edge_ready(t, tr.sender, tr.receiver) {
            return fail(Misstep::RateLimited);
        }
    }
    if let Some(credit) = &mut state.credit {
        for (u, row) in credit.iter_mut().enumerate() {
            for (k, c) in row.iter_mut().enumerate() {
                let v = t.neighbors(u)[k];
                *c = (*c + t.rate(u, v).unwrap()).min(Rate::one());
            }
        }
        for tr in transfers {
            let k = t.neighbors(tr.sender).binary_search(&tr.receiver).unwrap();
            credit[tr.sender][k] -= Rate::one();
        }
    }
    for tr in transfers {
        state.sets[tr.receiver].insert(tr.packet);
        state.counts[tr.receiver] += 1;
    }
    state.step = step;
    Ok(())
}

/// A broadcast algorithm expressed as a per-step proposal.
pub trait StepPolicy {
    /// Appends this step's transfers to `out`, reading only `state`.
    fn propose(&mut self, state: &SimState, t: &Topology, out: &mut Vec<Transfer>);
}

/// Per-step counters of a run, and optionally every transfer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunTrace {
    active: Vec<u32>,
    covered: Vec<u32>,
    completed: Vec<u32>,
    transfers: Option<Vec<Vec<Transfer>>>,
    node_count: usize,
}

impl RunTrace {
    fn new(node_count: usize, keep: bool) -> RunTrace {
        RunTrace { node_count, transfers: keep.then(Vec::new), ..RunTrace::default() }
    }

    pub fn steps(&self) -> u64 {
        self.active.len() as u64
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Active edges per step; entry `s` is step `s + 1`.
    pub fn active_edges(&self) -> &[u32] {
        &self.active
    }

    pub fn covered_nodes(&self) -> &[u32] {
        &self.covered
    }

    pub fn completed_nodes(&self) -> &[u32] {
        &self.completed
    }

    pub fn has_transfers(&self) -> bool {
        self.transfers.is_some()
    }

    /// Transfers per step, empty if they were not retained.
    pub fn transfers(&self) -> &[Vec<Transfer>] {
        self.transfers.as_deref().unwrap_or(&[])
    }

    pub fn total_transfers(&self) -> u64 {
        self.active.iter().map(|&a| u64::from(a)).sum()
    }

    /// `step,active_edges,covered_nodes,completed_nodes`, steps numbered from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,active_edges,covered_nodes,completed_nodes\n");
        for s in 0..self.active.len() {
            writeln!(out, "{},{},{},{}", s + 1, self.active[s], self.covered[s], self.completed[s])
                .unwrap();
        }
        out
    }

    /// `step,sender,receiver,packet`, empty body if transfers were not retained.
    pub fn transfers_csv(&self) -> String {
        let mut out = String::from("step,sender,receiver,packet\n");
        for (s, step) in self.transfers().iter().enumerate() {
            for tr in step {
                writeln!(out, "{},{},{},{}", s + 1, tr.sender, tr.receiver, tr.packet).unwrap();
            }
        }
        out
    }
}

/// Initial, stable and finishing phase lengths. They always sum to `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseBreakdown {
    pub t_i: u64,
    pub t_s: u64,
    pub t_f: u64,
    /// The finishing phase began before every node was covered and was cut back.
    pub clamped: bool,
}

/// Phase lengths of a completed trace.
///
/// `T_I` is the number of steps until every node holds a packet. `T_F` counts
/// the steps from the one in which the first non-root node completes through
/// the last. When the two overlap, `T_F` is cut to `T - T_I`.
pub fn detect_phases(trace: &RunTrace) -> Result<PhaseBreakdown, SimError> {
    let p = trace.node_count as u32;
    let t = trace.steps();
    if t == 0 {
        return if p <= 1 {
            Ok(PhaseBreakdown { t_i: 0, t_s: 0, t_f: 0, clamped: false })
        } else {
            Err(SimError::IncompleteTrace)
        };
    }
    if *trace.completed.last().unwrap() != p {
        return Err(SimError::IncompleteTrace);
    }
    let t_i = trace.covered.iter().position(|&c| c == p).unwrap() as u64 + 1;
    let first_done = match p {
        1 => 0,
        _ => trace.completed.iter().position(|&c| c >= 2).unwrap() as u64,
    };
    let raw_f = t - first_done;
    let (t_f, clamped) = if t_i + raw_f > t { (t - t_i, true) } else { (raw_f, false) };
    Ok(PhaseBreakdown { t_i, t_s: t - t_i - t_f, t_f, clamped })
}

/// Mean active edges per step, and that mean over `floor(P/2)`.
pub fn compute_metrics(trace: &RunTrace) -> (Frac, Frac) {
    let t = trace.steps().max(1);
    let avg = Frac::new(trace.total_transfers(), t);
    let half = (trace.node_count as u64 / 2).max(1);
    (avg, avg / Frac::from_integer(half))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    /// Completion time in steps.
    pub t: u64,
    pub total_transfers: u64,
    pub avg_active_edges: Frac,
    pub normalized_active: Frac,
    pub phases: PhaseBreakdown,
    pub trace: RunTrace,
}

/// Runs `policy` from the initial state until every node holds every packet.
pub fn run(t: &Topology, policy: &mut dyn StepPolicy, cfg: &SimConfig) -> Result<RunResult, SimError> {
    let p = t.node_count();
    let cap = cfg.step_cap(p);
    let mut state = SimState::initial(t, cfg.packets);
    let mut trace = RunTrace::new(p, cfg.keep_transfers);
    let mut buf = Vec::new();
    while !state.all_complete() {
        if state.step >= cap {
            return Err(SimError::Livelock { steps: state.step });
        }
        buf.clear();
        policy.propose(&state, t, &mut buf);
        apply_step(&mut state, t, &buf)?;
        trace.active.push(buf.len() as u32);
        trace.covered.push(state.covered() as u32);
        trace.completed.push(state.completed() as u32);
        if let Some(all) = &mut trace.transfers {
            all.push(buf.clone());
        }
    }
    let phases = detect_phases(&trace)?;
    let (avg, norm) = compute_metrics(&trace);
    Ok(RunResult {
        t: trace.steps(),
        total_transfers: trace.total_transfers(),
        avg_active_edges: avg,
        normalized_active: norm,
        phases,
        trace,
    })
}

/// Rebuilds the final state from a trace with retained transfers.
pub fn replay(t: &Topology, trace: &RunTrace, packets: usize) -> Result<SimState, SimError> {
    let mut state = SimState::initial(t, packets);
    for step in trace.transfers() {
        apply_step(&mut state, t, step)?;
    }
    Ok(state)
}
