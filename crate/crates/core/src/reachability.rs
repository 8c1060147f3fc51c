//! Message reachability: how far a user's initial message travels before the
//! send condition stops it.
//!
//! The estimate only looks at the decay arithmetic: a message sent with
//! magnitude `init_u` carries `alpha^(h-1) * init_u` after `h` hops and keeps
//! moving while that stays above `gamma * init_v`. The actual value replays
//! the send condition hop by hop on the contact graph.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{should_send, ActorConfig};
use crate::error::{Error, Result};
use crate::graph::{NodeIx, RiskScore, TemporalGraph, UserId};
use crate::stats::{quartiles, Quartiles};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachParams {
    pub alpha: f64,
    pub gamma: f64,
    pub init_u: f64,
    pub init_v: f64,
}

/// Upper bound on the hop depth reached by a message of magnitude `init_u`.
///
/// Zero when `init_u` is zero, infinite when `gamma * init_v` is zero, and
/// never negative otherwise.
pub fn estimate_reachability(params: &ReachParams) -> f64 {
    if params.init_u == 0.0 {
        return 0.0;
    }
    let threshold = params.gamma * params.init_v;
    if threshold == 0.0 {
        return f64::INFINITY;
    }
    (1.0 + (threshold / params.init_u).ln() / params.alpha.ln()).max(0.0)
}

/// Which destination magnitude the estimate compares against.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitReference {
    /// Mean initial-message magnitude over all users.
    #[default]
    MeanAll,
    /// Smallest initial-message magnitude among the users actually reached.
    MinReached,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReachResult {
    pub estimated: f64,
    pub actual_depth: u32,
    pub reached_set_size: usize,
    /// `actual_depth / estimated`; infinite when the estimate is zero but the
    /// message moved, `NaN` when both are zero.
    pub ratio: f64,
}

/// Hop depth per node of the source's initial message, `None` where it never
/// arrives.
///
/// The message leaves the source with magnitude `init(source)` and loses a
/// factor `alpha` at every relay. A user forwards it when the send condition
/// holds against its own initial message; an edge carries it when the last
/// contact is no older than the message time minus the buffer.
pub fn reach_depths(graph: &TemporalGraph, source: NodeIx, inits: &[RiskScore], config: &ActorConfig) -> Vec<Option<u32>> {
    let buffer = config.buffer_seconds();
    let origin = inits[source as usize];
    let mut depth: Vec<Option<u32>> = vec![None; graph.user_count()];
    // Magnitude each reached user would send on.
    let mut outgoing = vec![0.0; graph.user_count()];
    depth[source as usize] = Some(0);
    outgoing[source as usize] = origin.magnitude;
    let mut queue = VecDeque::from([source]);
    while let Some(x) = queue.pop_front() {
        let carried = RiskScore {
            magnitude: outgoing[x as usize],
            time: origin.time,
        };
        if !should_send(&carried, &inits[x as usize], config) {
            continue;
        }
        let h = depth[x as usize].unwrap();
        for &(y, contact_time) in graph.neighbors(x) {
            if depth[y as usize].is_none() && origin.time <= contact_time + buffer {
                depth[y as usize] = Some(h + 1);
                outgoing[y as usize] = config.alpha * carried.magnitude;
                queue.push_back(y);
            }
        }
    }
    depth
}

fn mean_init(inits: &[RiskScore]) -> f64 {
    inits.iter().map(|s| s.magnitude).sum::<f64>() / inits.len() as f64
}

fn ratio(actual: u32, estimated: f64) -> f64 {
    if estimated == 0.0 {
        if actual == 0 {
            f64::NAN
        } else {
            f64::INFINITY
        }
    } else {
        actual as f64 / estimated
    }
}

fn evaluate(graph: &TemporalGraph, source: NodeIx, inits: &[RiskScore], config: &ActorConfig, reference: f64, min_reached: bool) -> ReachResult {
    let depths = reach_depths(graph, source, inits, config);
    let mut actual_depth = 0;
    let mut reached = 0;
    let mut min_init = f64::INFINITY;
    for (v, d) in depths.iter().enumerate() {
        if let Some(d) = d {
            actual_depth = actual_depth.max(*d);
            reached += 1;
            min_init = min_init.min(inits[v].magnitude);
        }
    }
    let init_v = if min_reached { min_init } else { reference };
    let estimated = estimate_reachability(&ReachParams {
        alpha: config.alpha,
        gamma: config.gamma,
        init_u: inits[source as usize].magnitude,
        init_v,
    });
    ReachResult {
        estimated,
        actual_depth,
        reached_set_size: reached,
        ratio: ratio(actual_depth, estimated),
    }
}

fn reference_value(reference: InitReference, inits: &[RiskScore]) -> (f64, bool) {
    match reference {
        InitReference::MeanAll => (mean_init(inits), false),
        InitReference::MinReached => (f64::NAN, true),
        InitReference::Fixed(v) => (v, false),
    }
}

/// Actual and estimated reachability of `source`'s initial message.
///
/// `inits` holds every user's initial message, indexed by node.
pub fn actual_reachability(
    graph: &TemporalGraph,
    source: UserId,
    inits: &[RiskScore],
    config: &ActorConfig,
    reference: InitReference,
) -> Result<ReachResult> {
    let src = graph.index_of(source).ok_or(Error::UnknownUser(source))?;
    if inits.len() != graph.user_count() {
        return Err(Error::Config(format!(
            "{} initial messages for {} users",
            inits.len(),
            graph.user_count()
        )));
    }
    let (value, min_reached) = reference_value(reference, inits);
    Ok(evaluate(graph, src, inits, config, value, min_reached))
}

/// Initial messages for a transmission rate, from each user's maximum score.
pub fn inits_for_alpha(max_scores: &[RiskScore], alpha: f64) -> Vec<RiskScore> {
    max_scores
        .iter()
        .map(|s| RiskScore {
            magnitude: alpha * s.magnitude,
            time: s.time,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub alpha: f64,
    pub source: UserId,
    pub estimated: f64,
    pub actual_depth: u32,
    pub reached_set_size: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Quartiles over all finite ratios.
    pub ratio_quartiles: Option<Quartiles>,
}

/// The send-tolerance by transmission-rate grid used for the sweeps.
pub fn default_gammas() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn default_alphas() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// Evaluates every `(gamma, alpha, source)` combination.
///
/// `max_scores` holds each user's maximum initial score (node order);
/// initial messages are rescaled for each `alpha`. Rows are ordered by gamma,
/// then alpha, then source.
pub fn reachability_sweep(
    graph: &TemporalGraph,
    max_scores: &[RiskScore],
    sources: &[UserId],
    gammas: &[f64],
    alphas: &[f64],
    reference: InitReference,
    base: &ActorConfig,
) -> Result<SweepResult> {
    let nodes = sources
        .iter()
        .map(|&u| graph.index_of(u).ok_or(Error::UnknownUser(u)))
        .collect::<Result<Vec<_>>>()?;
    let per_alpha: Vec<Vec<RiskScore>> = alphas.iter().map(|&a| inits_for_alpha(max_scores, a)).collect();

    let cells: Vec<(f64, usize)> = gammas
        .iter()
        .flat_map(|&g| (0..alphas.len()).map(move |ai| (g, ai)))
        .collect();
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .flat_map_iter(|&(gamma, ai)| {
            let config = ActorConfig {
                alpha: alphas[ai],
                gamma,
                ..*base
            };
            let inits = &per_alpha[ai];
            let (value, min_reached) = reference_value(reference, inits);
            nodes.iter().map(move |&src| {
                let r = evaluate(graph, src, inits, &config, value, min_reached);
                SweepRow {
                    gamma,
                    alpha: config.alpha,
                    source: graph.user(src),
                    estimated: r.estimated,
                    actual_depth: r.actual_depth,
                    reached_set_size: r.reached_set_size,
                    ratio: r.ratio,
                }
            })
        })
        .collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    Ok(SweepResult {
        ratio_quartiles: quartiles(&ratios),
        rows,
    })
}
