use std::collections::HashSet;

use riskprop::graph::{build_graph, Contact, UserId};
use riskprop::partition::{partition_bfs_grow, partition_round_robin, DEFAULT_IMBALANCE};
use riskprop::stats::median;
use riskprop::synth::{gen_csfg, gen_rgg, generate, rgg_radius, GraphKind, SynthConfig};
use riskprop::DEFAULT_T_NOW;

/// Closed triplets over connected triplets, computed from an edge list.
fn global_clustering(n: usize, edges: &[(u32, u32)]) -> f64 {
    let mut adj = vec![Vec::new(); n];
    let mut set = HashSet::new();
    for &(a, b) in edges {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
        set.insert((a.min(b), a.max(b)));
    }
    let (mut closed, mut triplets) = (0u64, 0u64);
    for nbrs in &adj {
        let d = nbrs.len() as u64;
        triplets += d * d.saturating_sub(1) / 2;
        for (i, &x) in nbrs.iter().enumerate() {
            for &y in &nbrs[i + 1..] {
                if set.contains(&(x.min(y), x.max(y))) {
                    closed += 1;
                }
            }
        }
    }
    closed as f64 / triplets as f64
}

#[test]
fn triad_closure_raises_clustering() {
    let (mut with, mut without) = (Vec::new(), Vec::new());
    for seed in 0..10 {
        with.push(global_clustering(1000, &gen_csfg(1000, 2, 0.95, seed)));
        without.push(global_clustering(1000, &gen_csfg(1000, 2, 0.0, seed)));
    }
    let (a, b) = (median(&with).unwrap(), median(&without).unwrap());
    assert!(a > b, "clustering {a} vs {b}");
}

#[test]
fn rgg_interior_degree_near_expectation() {
    for n in [500, 1000, 3000] {
        let r = rgg_radius(n);
        let expected = std::f64::consts::PI * r * r * n as f64;
        let mut medians = Vec::new();
        for seed in 0..5 {
            // Interior points are not observable from the edge list, so take
            // the upper half of the degree distribution as the interior proxy.
            let mut deg = vec![0usize; n];
            for (a, b) in gen_rgg(n, seed) {
                deg[a as usize] += 1;
                deg[b as usize] += 1;
            }
            deg.sort_unstable();
            let upper: Vec<f64> = deg[n / 2..].iter().map(|&d| d as f64).collect();
            medians.push(median(&upper).unwrap());
        }
        let m = median(&medians).unwrap();
        assert!(
            (0.5 * expected..=1.5 * expected).contains(&m),
            "n={n}: median degree {m}, expected {expected}"
        );
    }
}

#[test]
fn bfs_grow_cuts_fewer_edges_than_round_robin_on_csfg() {
    for n in [500, 2000] {
        let (mut grown, mut modular) = (Vec::new(), Vec::new());
        for seed in 0..10 {
            let data = generate(&SynthConfig::new(GraphKind::Csfg, n, seed)).unwrap();
            let (graph, _) = build_graph(&data.contacts, DEFAULT_T_NOW, None).unwrap();
            for k in [2, 4] {
                grown.push(partition_bfs_grow(&graph, k, DEFAULT_IMBALANCE, seed).unwrap().cut_edges() as f64);
                modular.push(partition_round_robin(&graph, k).unwrap().cut_edges() as f64);
            }
        }
        let (g, m) = (median(&grown).unwrap(), median(&modular).unwrap());
        assert!(g <= m, "n={n}: bfs-grow {g} vs round-robin {m}");
    }
}

#[test]
fn generated_contacts_form_a_simple_graph() {
    for kind in [GraphKind::Rgg, GraphKind::Csfg] {
        let data = generate(&SynthConfig::new(kind, 800, 3)).unwrap();
        let (graph, report) = build_graph(&data.contacts, DEFAULT_T_NOW, None).unwrap();
        assert_eq!(report.self_loops, 0);
        assert_eq!(graph.contact_count(), data.contacts.len());
        assert_eq!(graph.user_count(), data.scores.len());
        let users: HashSet<UserId> = data.contacts.iter().flat_map(|c: &Contact| [c.user_a, c.user_b]).collect();
        assert!(users.iter().all(|u| data.scores.contains_key(u)));
    }
}
