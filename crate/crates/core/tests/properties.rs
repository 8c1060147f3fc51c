mod common;

use std::collections::BTreeSet;
use std::path::Path;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_instance, random_tree, T_NOW};
use riskprop::engine::{run, ActorConfig, Partitioner, RunSetup, StopCriteria};
use riskprop::experiment::node_max_scores;
use riskprop::graph::{build_graph, RiskScore, ScoreSet, UserId};
use riskprop::io::parse_sociopatterns;
use riskprop::partition::{partition_bfs_grow, partition_round_robin};
use riskprop::reachability::{actual_reachability, inits_for_alpha, reach_depths, InitReference};

fn rows_strategy() -> impl Strategy<Value = Vec<(u32, u32, u32)>> {
    prop::collection::vec((0u32..5000, 0u32..40, 0u32..40), 1..120)
}

fn render(rows: &[(u32, u32, u32)]) -> String {
    rows.iter()
        .map(|(t, i, j)| format!("{} {} {}\n", t * 20, 1000 + i * 7, 1000 + j * 7))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ingestion_ignores_row_order(rows in rows_strategy(), seed in any::<u64>()) {
        prop_assume!(rows.iter().any(|(_, i, j)| i != j));
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let path = Path::new("rows.dat");
        let a = parse_sociopatterns(&render(&rows), path, T_NOW).unwrap();
        let b = parse_sociopatterns(&render(&shuffled), path, T_NOW).unwrap();
        prop_assert_eq!(&a.contacts, &b.contacts);
        prop_assert_eq!(a.ids.raw_ids(), b.ids.raw_ids());
        prop_assert_eq!(a.self_loops, b.self_loops);
    }

    #[test]
    fn id_map_is_a_bijection(rows in rows_strategy()) {
        prop_assume!(rows.iter().any(|(_, i, j)| i != j));
        let got = parse_sociopatterns(&render(&rows), Path::new("rows.dat"), T_NOW).unwrap();
        let raw: BTreeSet<String> = rows
            .iter()
            .filter(|(_, i, j)| i != j)
            .flat_map(|(_, i, j)| [i, j])
            .map(|v| (1000 + v * 7).to_string())
            .collect();
        prop_assert_eq!(got.ids.len(), raw.len());
        for (k, r) in got.ids.raw_ids().iter().enumerate() {
            prop_assert!(raw.contains(r));
            let u = got.ids.user(r).unwrap();
            prop_assert_eq!(u, UserId(k as u32));
            prop_assert_eq!(got.ids.raw(u), Some(r.as_str()));
        }
        for c in &got.contacts {
            prop_assert!((c.user_a.0 as usize) < raw.len() && (c.user_b.0 as usize) < raw.len());
        }
    }

    #[test]
    fn bfs_grow_is_total_and_bounded(seed in 0u64..10_000, n in 2usize..120, degree in 1.0f64..6.0, k in 1usize..12, imbalance in 0.0f64..1.0) {
        let inst = random_instance(seed, n, degree, (0.5, 0.6));
        let (graph, _) = build_graph(&inst.contacts, T_NOW, None).unwrap();
        let users = graph.user_count();
        prop_assume!(k <= users);
        let p = partition_bfs_grow(&graph, k, imbalance, seed).unwrap();
        prop_assert_eq!(p.assignment().len(), users);
        prop_assert!(p.assignment().iter().all(|&a| (a as usize) < k));
        let cap = ((1.0 + imbalance) * users as f64 / k as f64).ceil() as usize;
        prop_assert!(p.block_sizes().iter().all(|&s| s <= cap), "{:?} cap {}", p.block_sizes(), cap);
        prop_assert_eq!(p.block_sizes().iter().sum::<usize>(), users);
        let again = partition_bfs_grow(&graph, k, imbalance, seed).unwrap();
        prop_assert_eq!(p.assignment(), again.assignment());
    }
}

fn setup_for(seed: u64, n: usize, degree: f64) -> (riskprop::graph::TemporalGraph, Vec<RiskScore>, ActorConfig) {
    let inst = random_instance(seed, n, degree, (0.1, 1.0));
    let (graph, _) = build_graph(&inst.contacts, T_NOW, Some(inst.config.horizon_days)).unwrap();
    let max = node_max_scores(&graph, &inst.scores, T_NOW, inst.config.horizon_days);
    (graph, max, inst.config)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn reached_set_shrinks_as_gamma_grows(seed in 0u64..10_000, n in 2usize..60, degree in 1.0f64..5.0, src in 0usize..60, alpha in 0.1f64..0.95) {
        let (graph, max, base) = setup_for(seed, n, degree);
        let source = graph.users()[src % graph.user_count()];
        let inits = inits_for_alpha(&max, alpha);
        let mut last = usize::MAX;
        for g in 0..=10 {
            let config = ActorConfig { alpha, gamma: g as f64 / 10.0, ..base };
            let r = actual_reachability(&graph, source, &inits, &config, InitReference::MeanAll).unwrap();
            prop_assert!(r.reached_set_size >= 1);
            prop_assert!(r.reached_set_size <= last, "gamma {}: {} > {}", config.gamma, r.reached_set_size, last);
            last = r.reached_set_size;
        }
    }

    #[test]
    fn depth_within_estimate_for_weakest_reached_gate(seed in 0u64..10_000, n in 2usize..60, degree in 1.0f64..5.0, src in 0usize..60) {
        let (graph, max, config) = setup_for(seed, n, degree);
        let source = graph.users()[src % graph.user_count()];
        let inits = inits_for_alpha(&max, config.alpha);
        let r = actual_reachability(&graph, source, &inits, &config, InitReference::MinReached).unwrap();
        prop_assert!(
            r.actual_depth as f64 <= (r.estimated * (1.0 + 1e-12)).ceil(),
            "depth {} estimate {}", r.actual_depth, r.estimated
        );
    }
}

/// Reached set when only `source` holds a score: the users whose exposure the
/// engine raises above zero, plus the source itself.
fn engine_reached(contacts: &[riskprop::graph::Contact], source: UserId, score: RiskScore, config: ActorConfig) -> BTreeSet<UserId> {
    let mut scores = ScoreSet::new();
    scores.insert(source, vec![score]);
    let mut setup = RunSetup::new(1, StopCriteria::quiescent(), T_NOW);
    setup.config = config;
    setup.partitioner = Partitioner::RoundRobin;
    let out = run(contacts, &scores, &setup).unwrap();
    out.exposures
        .iter()
        .filter(|(&u, s)| u == source || s.magnitude > 0.0)
        .map(|(&u, _)| u)
        .collect()
}

fn reach_set(contacts: &[riskprop::graph::Contact], source: UserId, score: RiskScore, config: &ActorConfig) -> BTreeSet<UserId> {
    let (graph, _) = build_graph(contacts, T_NOW, Some(config.horizon_days)).unwrap();
    let mut scores = ScoreSet::new();
    scores.insert(source, vec![score]);
    let inits = inits_for_alpha(&node_max_scores(&graph, &scores, T_NOW, config.horizon_days), config.alpha);
    let depths = reach_depths(&graph, graph.index_of(source).unwrap(), &inits, config);
    depths
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_some())
        .map(|(i, _)| graph.user(i as u32))
        .collect()
}

// Users without a score relay everything (0 >= gamma * 0), so on a cycle
// the engine would never fall quiet; trees keep the comparison finite.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn reach_matches_engine_on_trees(seed in 0u64..10_000, n in 2usize..50, src in 0u32..50, mag in 0.01f64..1.0, age in 0i64..14, alpha in 0.1f64..0.95, gamma in 0.0f64..1.0) {
        let contacts = random_tree(seed, n);
        let source = UserId(src % n as u32);
        let score = RiskScore::new(mag, T_NOW - age * common::DAY).unwrap();
        let config = ActorConfig { alpha, gamma, ..ActorConfig::default() };
        prop_assert_eq!(reach_set(&contacts, source, score, &config), engine_reached(&contacts, source, score, config));
    }
}

#[test]
fn round_robin_path_cut() {
    let contacts: Vec<_> = (0..3)
        .map(|i| riskprop::graph::Contact::new(UserId(i), UserId(i + 1), T_NOW).unwrap())
        .collect();
    let (graph, _) = build_graph(&contacts, T_NOW, None).unwrap();
    let p = partition_round_robin(&graph, 2).unwrap();
    assert_eq!(p.assignment(), &[0, 1, 0, 1]);
    assert_eq!(p.cut_edges(), 3);
}
