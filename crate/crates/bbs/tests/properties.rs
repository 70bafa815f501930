use std::collections::BTreeMap;

use bbs::algorithms::{make_policy, packet_selection, Algorithm, BbsOptions, BbsPlan, BbsPolicy, Orientation};
use bbs::balance::{estimate_stable_time, solve_balanced, trace_to_occupancy, verify_constraints};
use bbs::schedule::{edge_color_bipartite, edge_color_heuristic, is_bipartite_multigraph, Multigraph};
use bbs::sim::{apply_step, replay, run, SimConfig, SimError, SimState, Transfer};
use bbs::topology::{bfs_distances, build_grid, from_edge_list, Rate, Topology};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;

/// Random connected graph: a random spanning tree plus extra edges, random root.
fn connected_topology(max_p: usize) -> impl Strategy<Value = Topology> {
    (2..=max_p)
        .prop_flat_map(|p| {
            let parents: Vec<_> = (1..p).map(|i| 0..i).collect();
            let extra = proptest::collection::vec((0..p, 0..p), 0..=p);
            (Just(p), parents, extra, 0..p)
        })
        .prop_map(|(p, parents, extra, root)| {
            let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, &u)| (u, i + 1)).collect();
            for (u, v) in extra {
                let e = (u.min(v), u.max(v));
                if u != v && !edges.iter().any(|&(a, b)| (a.min(b), a.max(b)) == e) {
                    edges.push(e);
                }
            }
            Topology::from_edges(p, &edges).unwrap().with_root(root).unwrap()
        })
}

fn small_dims() -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(2usize..=5, 1..=3)
}

fn algorithm() -> impl Strategy<Value = Algorithm> {
    prop::sample::select(Algorithm::ALL.to_vec())
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn bbs_plan(t: &Topology) -> BbsPlan {
    BbsPlan::build(t, &BbsOptions::default()).unwrap()
}

fn depth_first_plan(t: &Topology) -> BbsPlan {
    BbsPlan::build(t, &BbsOptions { orientation: Orientation::DepthFirst, ..BbsOptions::default() }).unwrap()
}

fn run_algo(t: &Topology, algo: Algorithm, n: usize, keep: bool) -> bbs::sim::RunResult {
    let plan = (algo == Algorithm::Bbs).then(|| bbs_plan(t));
    let mut p = make_policy(algo, t, n, plan.as_ref()).unwrap();
    run(t, p.as_mut(), &SimConfig::new(n).keep_transfers(keep)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_edge_formula(dims in small_dims()) {
        let t = build_grid(&dims).unwrap();
        let p: usize = dims.iter().product();
        let edges: usize = dims.iter().map(|&d| (d - 1) * p / d).sum();
        prop_assert_eq!(t.edge_count(), edges);
        prop_assert!(t.max_degree() <= 2 * dims.len());
    }

    #[test]
    fn distance_map_invariants(t in connected_topology(14)) {
        let d = bfs_distances(&t);
        prop_assert_eq!(d[t.root()], 0);
        for (u, v) in t.edges() {
            prop_assert!(d[u].abs_diff(d[v]) <= 1);
        }
        for v in (0..t.node_count()).filter(|&v| v != t.root()) {
            prop_assert!(d[v] > 0);
            prop_assert!(t.neighbors(v).iter().any(|&u| d[u] + 1 == d[v]));
        }
    }

    #[test]
    fn edge_list_round_trip(t in connected_topology(14)) {
        let back = from_edge_list(&t.to_edge_list()).unwrap();
        prop_assert_eq!(back.with_root(t.root()).unwrap(), t);
    }

    #[test]
    fn lp_solutions_pass_the_verifier(t in connected_topology(9)) {
        let s = solve_balanced(&t).unwrap();
        prop_assert!(verify_constraints(&t, &s.occupancies).is_clean());
        for v in (0..t.node_count()).filter(|&v| v != t.root()) {
            prop_assert_eq!(&s.per_node_in[v], &s.c);
        }
        let plan = bbs_plan(&t);
        prop_assert!(verify_constraints(&t, &plan.solution.occupancies).is_clean());
        let m = plan.classes.len() as i64;
        for v in (0..t.node_count()).filter(|&v| v != t.root()) {
            prop_assert_eq!(&plan.solution.per_node_in[v], &plan.solution.c);
            if m > 1 {
                for class in &plan.classes {
                    prop_assert_eq!(class.occupancies.inflow(&t, v), q(1, 2 * m));
                }
            }
        }
    }

    #[test]
    fn rate_scaling_scales_c(t in connected_topology(8), num in 1i64..=4, den in 1i64..=4) {
        let factor = Rate::new(num, den);
        let a = solve_balanced(&t).unwrap();
        let b = solve_balanced(&t.scale_rates(factor)).unwrap();
        prop_assert_eq!(b.c, a.c * q(num, den));
        prop_assert_eq!(b.occupancies, a.occupancies);
    }

    #[test]
    fn frames_are_proper_colorings(t in connected_topology(10)) {
        let plan = bbs_plan(&t);
        // one multigraph copy per unit of class occupancy
        let classes: Vec<_> = plan.classes.iter().map(|c| &c.occupancies).collect();
        let l = classes.iter().flat_map(|o| o.iter()).fold(BigInt::from(1), |l, (_, _, x)| l.lcm(x.denom()));
        let lq = BigRational::from_integer(l.clone());
        let mut expect: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
        for (c, o) in classes.iter().enumerate() {
            for (u, v, x) in o.iter() {
                let k = (x * &lq).to_integer().to_u64().unwrap();
                expect.insert((c, u, v), k);
            }
        }
        let frames = plan.schedule.frames();
        let mut used: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
        for (f, labels) in frames.iter().zip(plan.schedule.labels()) {
            let mut busy = vec![false; t.node_count()];
            for (&(u, v), &c) in f.iter().zip(labels) {
                prop_assert!(!busy[u] && !busy[v]);
                busy[u] = true;
                busy[v] = true;
                *used.entry((c, u, v)).or_default() += 1;
            }
        }
        prop_assert_eq!(&used, &expect);
        let mut undirected: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (&(_, u, v), &k) in &expect {
            *undirected.entry((u.min(v), u.max(v))).or_default() += k;
        }
        let edges: Vec<_> = undirected.into_iter().collect();
        let m = Multigraph::from_multiplicities(t.node_count(), l.to_u64().unwrap(), &edges);
        if is_bipartite_multigraph(&m) {
            prop_assert_eq!(frames.len() as u64, m.d_m());
            prop_assert!(frames.len() as u64 <= m.l());
        }
    }

    #[test]
    fn bipartite_coloring_uses_d_m(
        (dims, ks) in small_dims().prop_flat_map(|d| {
            let e = build_grid(&d).unwrap().edge_count();
            (Just(d), proptest::collection::vec(1u64..=3, e))
        })
    ) {
        let t = build_grid(&dims).unwrap();
        let edges: Vec<_> = t.edges().zip(ks).collect();
        let m = Multigraph::from_multiplicities(t.node_count(), 3, &edges);
        prop_assert_eq!(edge_color_bipartite(&m).unwrap().len() as u64, m.d_m());
    }

    #[test]
    fn heuristic_coloring_bounds(t in connected_topology(12), k in 1u64..=3) {
        let edges: Vec<_> = t.edges().map(|e| (e, k)).collect();
        let m = Multigraph::from_multiplicities(t.node_count(), 3, &edges);
        let frames = edge_color_heuristic(&m);
        if k == 1 {
            prop_assert!(frames.len() as u64 <= m.d_m() + 1);
        } else {
            prop_assert!((frames.len() as u64) < 2 * m.d_m());
        }
        let total: usize = frames.iter().map(Vec::len).sum();
        prop_assert_eq!(total as u64, k * t.edge_count() as u64);
    }

    #[test]
    fn schedules_are_deterministic(t in connected_topology(10)) {
        prop_assert_eq!(bbs_plan(&t).schedule.serialize(), bbs_plan(&t).schedule.serialize());
    }

    #[test]
    fn every_policy_completes(t in connected_topology(12), algo in algorithm(), n in 1usize..=40) {
        let r = run_algo(&t, algo, n, true);
        let p = t.node_count() as u64;
        let tr = &r.trace;
        prop_assert!(tr.covered_nodes().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(tr.completed_nodes().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(tr.active_edges().iter().all(|&a| u64::from(a) <= p / 2));
        prop_assert_eq!(r.phases.t_i + r.phases.t_s + r.phases.t_f, r.t);
        // covered nodes at most double each step
        prop_assert!(1u64 << r.phases.t_i.min(63) >= p);
        let state = replay(&t, tr, n).unwrap();
        prop_assert!(state.all_complete());
        if matches!(algo, Algorithm::Bbs | Algorithm::Greedy) {
            prop_assert_eq!(r.total_transfers, n as u64 * (p - 1));
        }
    }

    #[test]
    fn depth_first_initial_phase_at_most_p_on_grids(dims in small_dims(), n in 1usize..=40) {
        let t = build_grid(&dims).unwrap();
        let r = run(&t, &mut BbsPolicy::new(&depth_first_plan(&t)), &SimConfig::new(n)).unwrap();
        prop_assert!(r.phases.t_i <= t.node_count() as u64, "{:?}", r.phases);
    }

    #[test]
    fn bbs_stable_phase_bracket(t in connected_topology(10), extra in 0usize..=30) {
        prop_assume!(t.node_count() > 2);
        let n = 2 * t.node_count() + extra;
        let r = run_algo(&t, Algorithm::Bbs, n, false);
        let p = t.node_count() as u64;
        prop_assert!(r.phases.t_s >= n as u64 && r.phases.t_s <= n as u64 * p, "{:?}", r.phases);
        let est = estimate_stable_time(&t, &bbs_plan(&t).solution, n as u64);
        prop_assert!(est.lower <= est.time && est.time <= est.upper);
    }

    #[test]
    fn traces_induce_feasible_occupancies(t in connected_topology(10), algo in algorithm(), n in 1usize..=30) {
        let r = run_algo(&t, algo, n, true);
        let occ = trace_to_occupancy(&r.trace, &t).unwrap();
        let report = verify_constraints(&t, &occ);
        prop_assert!(report.max_excess() <= q(1, r.t as i64), "{:?}", report);
    }

    #[test]
    fn runs_are_deterministic(t in connected_topology(10), algo in algorithm(), n in 1usize..=20) {
        let a = run_algo(&t, algo, n, true);
        let b = run_algo(&t, algo, n, true);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn packet_selection_is_pure(t in connected_topology(10), n in 1usize..=70, steps in 0usize..=20) {
        let plan = bbs_plan(&t);
        let mut policy = make_policy(Algorithm::Bbs, &t, n, Some(&plan)).unwrap();
        let mut s = SimState::initial(&t, n);
        let mut buf = Vec::new();
        for _ in 0..steps {
            buf.clear();
            policy.propose(&s, &t, &mut buf);
            apply_step(&mut s, &t, &buf).unwrap();
        }
        let snapshot = s.clone();
        for (u, v) in t.directed_edges() {
            let a = packet_selection(u, v, &s, &t);
            prop_assert_eq!(a, packet_selection(u, v, &s, &t));
            if let Some(p) = a {
                prop_assert!(s.holds(u, p) && !s.holds(v, p));
            }
        }
        prop_assert_eq!(s, snapshot);
    }

    #[test]
    fn adversarial_steps_are_rejected(t in connected_topology(8), pick in 0usize..1000) {
        let s0 = SimState::initial(&t, 3);
        let r = t.root();
        let nb = t.neighbors(r)[pick % t.degree(r)];
        let far = (0..t.node_count()).find(|&v| v != r && !t.has_edge(r, v));
        let mut cases = vec![
            vec![Transfer::new(r, nb, 0), Transfer::new(r, nb, 1)],
            vec![Transfer::new(r, nb, 3)],
            vec![Transfer::new(nb, r, 0)],
        ];
        if let Some(f) = far {
            cases.push(vec![Transfer::new(r, f, 0)]);
        }
        for case in cases {
            let mut s = s0.clone();
            let err = apply_step(&mut s, &t, &case);
            prop_assert!(matches!(err, Err(SimError::ProtocolViolation { .. })), "{:?}", case);
        }
    }
}

#[test]
fn sparse_schedule_initial_phase_exceeds_p() {
    // five frames per cycle and a three-hop path from the root: the path only
    // advances once per frame that carries its next edge
    let t = Topology::from_edges(5, &[(0, 1), (1, 2), (1, 4), (2, 3), (3, 4)]).unwrap().with_root(3).unwrap();
    let plan = depth_first_plan(&t);
    assert_eq!(plan.schedule.frame_count(), 5);
    let r = run(&t, &mut BbsPolicy::new(&plan), &SimConfig::new(1)).unwrap();
    assert_eq!(r.phases.t_i, 7);
}

#[test]
fn split_initial_phase_exceeds_p_on_a_ladder() {
    // class trees on a 2x4 ladder are deep next to P, and each class only
    // moves in half of the four frames
    let t = build_grid(&[2, 4]).unwrap();
    assert_eq!(bbs_plan(&t).classes.len(), 2);
    for n in [1, 100] {
        let r = run_algo(&t, Algorithm::Bbs, n, false);
        assert!(r.phases.t_i > 8, "{:?}", r.phases);
    }
}

#[test]
fn stable_phase_can_be_shorter_than_n() {
    // the measured phases eat into N when N is close to P
    let t = build_grid(&[2]).unwrap();
    let r = run_algo(&t, Algorithm::Bbs, 10, false);
    assert_eq!((r.t, r.phases.t_i, r.phases.t_s, r.phases.t_f), (10, 1, 8, 1));
    let t = build_grid(&[3]).unwrap();
    let r = run_algo(&t, Algorithm::Bbs, 3, false);
    assert_eq!((r.t, r.phases.t_i, r.phases.t_s, r.phases.t_f), (6, 2, 2, 2));
}

#[test]
fn scatter_initial_phase_can_exceed_p() {
    // the P bound on T_I holds for BBS only: scatter fills owners one segment at a time
    let t = build_grid(&[4, 4]).unwrap();
    let r = run_algo(&t, Algorithm::Srda, 500, false);
    assert!(r.phases.t_i > 16, "{:?}", r.phases);
}
