use std::collections::BTreeSet;

use fiedler_core::graph::{generate_connected_graph, Graph, GraphGenConfig};
use fiedler_core::model::{gru_update, initial_state, message_step, outgoing_message, predict, readout_local};
use fiedler_core::sim::{run_simulation, run_simulation_threaded, run_simulation_with_drop};
use fiedler_core::{init_params, ModelParams, ReadoutMode};
use proptest::prelude::*;

fn random_graph(n_min: usize, n_max: usize) -> impl Strategy<Value = Graph> {
    (n_min..=n_max, any::<u64>(), 0u64..500).prop_map(|(n, seed, idx)| {
        generate_connected_graph(&GraphGenConfig::with_nodes(n, n, seed), idx).unwrap()
    })
}

/// Sparse connected graphs (a random tree plus a few chords) so that balls of
/// small radius leave most of the graph outside.
fn sparse_graph() -> impl Strategy<Value = Graph> {
    (8usize..30)
        .prop_flat_map(|n| {
            let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|i| (0..i).boxed()).collect();
            (Just(n), parents, prop::collection::vec((0..n, 0..n), 0..4))
        })
        .prop_map(|(n, parents, chords)| {
            let mut edges: BTreeSet<(usize, usize)> =
                parents.iter().enumerate().map(|(i, &p)| (p, i + 1)).collect();
            for (a, b) in chords {
                if a != b {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            Graph::new(n, edges).unwrap()
        })
}

/// Monolithic recomputation where `dropped` edges are absent from round
/// `from_round` onward: message_step runs on the full graph before that
/// round and on the reduced graph afterwards.
fn monolithic_with_drop(
    params: &ModelParams,
    g: &Graph,
    rounds: usize,
    dropped: &[(usize, usize)],
    from_round: usize,
) -> Vec<f64> {
    let mut reduced = g.clone();
    for &(a, b) in dropped {
        reduced = reduced.without_edge(a, b).unwrap();
    }
    let mut h = initial_state(g.node_count(), params.hidden);
    for round in 1..=rounds {
        let graph = if round >= from_round { &reduced } else { g };
        let m = message_step(params, graph, &h);
        h = gru_update(params, &h, &m);
    }
    (0..g.node_count()).map(|v| readout_local(params, h.row(v))).collect()
}

fn min_distance(g: &Graph, v: usize, targets: &[usize]) -> usize {
    let d = g.bfs_distances(v);
    targets.iter().filter_map(|&t| d[t]).min().unwrap_or(usize::MAX)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn agents_reproduce_monolithic_forward(g in random_graph(5, 12), seed in any::<u64>(), t in prop::sample::select(vec![2usize, 4, 8])) {
        let params = init_params(8, seed);
        let sim = run_simulation(&params, &g, t);
        let mono = predict(&params, &g, t, ReadoutMode::Local);
        for (a, b) in sim.estimates.iter().zip(mono.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    /// Every round-t payload is W_msg applied to the sender's state after
    /// round t-1 (send-then-update schedule).
    #[test]
    fn trace_shows_synchronous_rounds(g in random_graph(3, 10), seed in any::<u64>(), t in 1usize..6) {
        let params = init_params(5, seed);
        let sim = run_simulation(&params, &g, t);
        prop_assert_eq!(sim.trace.rounds.len(), t);
        let mut prev = initial_state(g.node_count(), 5);
        for (k, r) in sim.trace.rounds.iter().enumerate() {
            prop_assert_eq!(r.round, k + 1);
            prop_assert_eq!(r.messages.len(), 2 * g.edge_count());
            for msg in &r.messages {
                prop_assert!(g.has_edge(msg.sender, msg.receiver));
                prop_assert_eq!(&msg.payload, &outgoing_message(&params, prev.row(msg.sender)));
            }
            for (v, s) in r.states.iter().enumerate() {
                prev.row_mut(v).copy_from_slice(s);
            }
        }
    }

    #[test]
    fn dropped_edges_match_recomputation_and_stay_in_cone(
        g in sparse_graph(),
        seed in any::<u64>(),
        t in 1usize..6,
        from_round in 1usize..5,
        pick in any::<prop::sample::Index>(),
    ) {
        let params = init_params(6, seed);
        let (a, b) = g.edges()[pick.index(g.edge_count())];
        let dropped = run_simulation_with_drop(&params, &g, t, &[(a, b)], from_round).unwrap().estimates;
        let oracle = monolithic_with_drop(&params, &g, t, &[(a, b)], from_round);
        for (x, y) in dropped.iter().zip(&oracle) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let clean = run_simulation(&params, &g, t).estimates;
        for v in 0..g.node_count() {
            if dropped[v] != clean[v] {
                let d = min_distance(&g, v, &[a, b]);
                prop_assert!(d <= t, "node {} at distance {} changed (T={})", v, d, t);
                prop_assert!(from_round + d <= t, "node {} changed before the drop could reach it", v);
            }
        }
    }

    /// Rewiring edges that lie entirely outside the radius-T ball around v
    /// leaves v's estimate untouched.
    #[test]
    fn estimate_depends_only_on_radius_t_ball(
        g in sparse_graph(),
        seed in any::<u64>(),
        t in 1usize..4,
        pick in any::<prop::sample::Index>(),
    ) {
        let params = init_params(6, seed);
        let n = g.node_count();
        let v = pick.index(n);
        let dist = g.bfs_distances(v);
        let outside: Vec<usize> = (0..n).filter(|&u| dist[u].map_or(true, |d| d > t)).collect();
        prop_assume!(outside.len() >= 2);
        // Toggle every pair among the first few far nodes.
        let far = &outside[..outside.len().min(5)];
        let mut edges: BTreeSet<(usize, usize)> = g.edges().iter().copied().collect();
        for (i, &x) in far.iter().enumerate() {
            for &y in &far[i + 1..] {
                let e = (x.min(y), x.max(y));
                if !edges.remove(&e) {
                    edges.insert(e);
                }
            }
        }
        let rewired = Graph::new(n, edges).unwrap();
        prop_assume!(rewired.edges() != g.edges());
        let before = run_simulation(&params, &g, t).estimates[v];
        let after = run_simulation(&params, &rewired, t).estimates[v];
        prop_assert_eq!(before.to_bits(), after.to_bits());
    }
}

#[test]
fn fifty_graphs_sim_equals_forward() {
    let cfg = GraphGenConfig::with_nodes(5, 12, 2024);
    for k in 0..50u64 {
        let g = generate_connected_graph(&cfg, k).unwrap();
        let t = [2, 4, 8][k as usize % 3];
        let params = init_params(16, k);
        let sim = run_simulation(&params, &g, t).estimates;
        let mono = predict(&params, &g, t, ReadoutMode::Local);
        let worst = sim.iter().zip(mono.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-12, "graph {k}: {worst:e}");
    }
}

#[test]
fn concurrent_agents_match_reference_schedule() {
    let cfg = GraphGenConfig::with_nodes(6, 10, 8);
    for k in 0..5u64 {
        let g = generate_connected_graph(&cfg, k).unwrap();
        let params = init_params(8, 100 + k);
        let reference = run_simulation(&params, &g, 4).estimates;
        let threaded = run_simulation_threaded(&params, &g, 4);
        assert_eq!(reference, threaded);
    }
}

#[test]
fn isolated_agents_all_agree() {
    let g = generate_connected_graph(&GraphGenConfig::with_nodes(8, 8, 3), 0).unwrap();
    let params = init_params(8, 12);
    let all: Vec<_> = g.edges().to_vec();
    let est = run_simulation_with_drop(&params, &g, 5, &all, 1).unwrap().estimates;
    assert!(est.iter().all(|&x| x == est[0]));
    let none = run_simulation_with_drop(&params, &g, 5, &[], 1).unwrap().estimates;
    assert_eq!(none, run_simulation(&params, &g, 5).estimates);
}
