//! Repeated runs behind the sweep and bench reports.

use rand::seq::index::sample;
use serde::Serialize;

use crate::engine::{actors_for_users, default_score, run, RunSetup, StopCriteria};
use crate::error::{Error, Result};
use crate::graph::{filter_scores, max_score, Contact, RiskScore, ScoreSet, TemporalGraph, UserId};
use crate::rng::{stream, Domain};
use crate::stats::{linear_fit, LinearFit};
use crate::synth::{generate, GraphKind, SynthConfig};

/// Each node's maximum in-horizon score, or the default score when it has
/// none.
pub fn node_max_scores(graph: &TemporalGraph, scores: &ScoreSet, t_now: i64, horizon_days: f64) -> Vec<RiskScore> {
    let filtered = filter_scores(scores, t_now, horizon_days).scores;
    graph
        .users()
        .iter()
        .map(|u| {
            filtered
                .get(u)
                .and_then(|l| max_score(l))
                .unwrap_or_else(|| default_score(t_now))
        })
        .collect()
}

/// `count` distinct users drawn uniformly, in ascending order; every user
/// when `count` covers the graph.
pub fn sample_sources(graph: &TemporalGraph, count: usize, seed: u64) -> Vec<UserId> {
    let n = graph.user_count();
    if count >= n {
        return graph.users().to_vec();
    }
    let mut rng = stream(seed, Domain::Sources, 0);
    let mut picked: Vec<usize> = sample(&mut rng, n, count).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| graph.users()[i]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyRow {
    pub gamma: f64,
    pub alpha: f64,
    pub updates: u64,
    pub messages: u64,
    pub runtime_seconds: f64,
    /// Relative to the smallest send tolerance run at the same alpha.
    pub normalized_updates: f64,
    pub normalized_messages: f64,
    pub normalized_runtime: f64,
}

/// Runs the engine for every `(gamma, alpha)` pair and normalizes each run
/// against the smallest gamma at the same alpha.
pub fn efficiency_sweep(
    contacts: &[Contact],
    scores: &ScoreSet,
    setup: &RunSetup,
    gammas: &[f64],
    alphas: &[f64],
) -> Result<Vec<EfficiencyRow>> {
    let baseline_gamma = gammas
        .iter()
        .copied()
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Config("no send tolerances given".into()))?;
    let mut rows = Vec::with_capacity(gammas.len() * alphas.len());
    for &alpha in alphas {
        let measure = |gamma: f64| -> Result<(u64, u64, f64)> {
            let mut s = setup.clone();
            s.config.alpha = alpha;
            s.config.gamma = gamma;
            let out = run(contacts, scores, &s)?;
            Ok((out.metrics.updates, out.metrics.messages_sent, out.metrics.wall_runtime_seconds))
        };
        let base = measure(baseline_gamma)?;
        for &gamma in gammas {
            let (updates, messages, runtime_seconds) = if gamma == baseline_gamma { base } else { measure(gamma)? };
            rows.push(EfficiencyRow {
                gamma,
                alpha,
                updates,
                messages,
                runtime_seconds,
                normalized_updates: ratio(updates as f64, base.0 as f64),
                normalized_messages: ratio(messages as f64, base.1 as f64),
                normalized_runtime: ratio(runtime_seconds, base.2),
            });
        }
    }
    rows.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.alpha.total_cmp(&b.alpha)));
    Ok(rows)
}

fn ratio(x: f64, base: f64) -> f64 {
    if base == 0.0 {
        if x == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        x / base
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub kind: GraphKind,
    pub users: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub t_now: i64,
    /// Stop at quiescence instead of the evaluation timeout.
    pub quiescence: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub rep: usize,
    pub actors: usize,
    pub contacts: usize,
    pub runtime: f64,
    pub messages: u64,
    pub updates: u64,
}

/// One run per user count and repetition. Repetition `r` uses seed
/// `seed + r`, so each repetition draws a fresh graph and score set.
pub fn bench(config: &BenchConfig, mut progress: impl FnMut(&BenchRow)) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(config.users.len() * config.reps);
    for &n in &config.users {
        for rep in 0..config.reps {
            let seed = config.seed.wrapping_add(rep as u64);
            let mut synth = SynthConfig::new(config.kind, n, seed);
            synth.t_now = config.t_now;
            let data = generate(&synth)?;
            let actors = actors_for_users(n);
            let stop = if config.quiescence {
                StopCriteria::quiescent()
            } else {
                StopCriteria::evaluation_defaults(n, actors)
            };
            let mut setup = RunSetup::new(actors, stop, config.t_now);
            setup.seed = seed;
            let out = run(&data.contacts, &data.scores, &setup)?;
            let row = BenchRow {
                n,
                rep,
                actors,
                contacts: out.graph.contact_count(),
                runtime: out.metrics.wall_runtime_seconds,
                messages: out.metrics.messages_sent,
                updates: out.metrics.updates,
            };
            progress(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Runtime against contact count over all rows.
pub fn runtime_fit(rows: &[BenchRow]) -> Option<LinearFit> {
    let x: Vec<f64> = rows.iter().map(|r| r.contacts as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.runtime).collect();
    linear_fit(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    #[test]
    fn sampled_sources_are_distinct_and_sorted() {
        let data = generate(&SynthConfig::new(GraphKind::Csfg, 300, 1)).unwrap();
        let (graph, _) = build_graph(&data.contacts, crate::DEFAULT_T_NOW, None).unwrap();
        let s = sample_sources(&graph, 50, 9);
        assert_eq!(s.len(), 50);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s, sample_sources(&graph, 50, 9));
        assert_eq!(sample_sources(&graph, 1000, 9).len(), graph.user_count());
    }

    #[test]
    fn efficiency_baseline_is_one() {
        let data = generate(&SynthConfig::new(GraphKind::Rgg, 200, 3)).unwrap();
        let setup = RunSetup::new(1, StopCriteria::evaluation_defaults(200, 1), crate::DEFAULT_T_NOW);
        let rows = efficiency_sweep(&data.contacts, &data.scores, &setup, &[0.6, 0.1], &[0.8]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].gamma, 0.1);
        assert_eq!(rows[0].normalized_messages, 1.0);
        assert!(rows[1].messages <= rows[0].messages);
    }

    #[test]
    fn bench_row_count() {
        let config = BenchConfig {
            kind: GraphKind::Rgg,
            users: vec![100, 200],
            reps: 2,
            seed: 5,
            t_now: crate::DEFAULT_T_NOW,
            quiescence: true,
        };
        let rows = bench(&config, |_| {}).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.actors == 1));
        assert_eq!(rows[0].n, 100);
        assert_eq!(rows[3].rep, 1);
    }
}
