//! Risk propagation runtime.
//!
//! The driver builds the contact graph, partitions it, hands each actor its
//! users and their scores, runs the actors concurrently and merges their
//! exposure scores.

mod actor;
mod config;
mod message;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicI64, AtomicUsize};
use std::sync::mpsc;
use std::time::Instant;

use serde::Serialize;

pub use actor::{ActorMetrics, StopReason, TraceEvent};
pub use config::{actors_for_users, ActorConfig, StopCriteria};
pub use message::{compute_message, init_user, log_weight, should_send, Message, UserState};

use crate::error::{Error, Result};
use crate::graph::{build_graph, filter_scores, BuildReport, Contact, NodeIx, RiskScore, ScoreSet, TemporalGraph, UserId};
use crate::partition::{partition_bfs_grow, partition_round_robin, partition_scores, Partition, DEFAULT_IMBALANCE};
use actor::{Actor, ActorOutcome, Links, Shared};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub updates: u64,
    pub messages_sent: u64,
    pub messages_received: u64,
    pub wall_runtime_seconds: f64,
    pub actors: Vec<ActorMetrics>,
}

impl RunMetrics {
    fn from_actors(actors: Vec<ActorMetrics>, wall_runtime_seconds: f64) -> Self {
        Self {
            updates: actors.iter().map(|a| a.updates).sum(),
            messages_sent: actors.iter().map(|a| a.messages_sent).sum(),
            messages_received: actors.iter().map(|a| a.messages_received).sum(),
            wall_runtime_seconds,
            actors,
        }
    }
}

/// Output of [`propagate`].
#[derive(Debug, Clone)]
pub struct Propagation {
    /// Final exposure magnitude per node.
    pub curr: Vec<f64>,
    pub metrics: RunMetrics,
    /// Events from every actor, concatenated by actor; empty unless tracing.
    pub trace: Vec<TraceEvent>,
}

/// Exposure-only score given to graph users without any in-horizon score.
pub fn default_score(t_now: i64) -> RiskScore {
    RiskScore {
        magnitude: 0.0,
        time: t_now,
    }
}

/// Initial states for every node, in node order.
pub fn initial_states(graph: &TemporalGraph, scores: &ScoreSet, t_now: i64, config: &ActorConfig) -> Vec<UserState> {
    let fallback = [default_score(t_now)];
    graph
        .users()
        .iter()
        .map(|u| {
            let list = scores.get(u).map_or(&fallback[..], Vec::as_slice);
            init_user(list, config)
        })
        .collect()
}

/// Runs the actors over an already built and partitioned graph.
///
/// `scores` must only name graph users; users without scores start from
/// [`default_score`].
pub fn propagate(
    graph: &TemporalGraph,
    scores: &ScoreSet,
    partition: &Partition,
    config: &ActorConfig,
    stop: &StopCriteria,
    t_now: i64,
    trace: bool,
) -> Result<Propagation> {
    config.validate()?;
    stop.validate()?;
    let actors = partition.actors();
    let blocks = partition_scores(graph, scores, partition)?;

    let owner = partition.assignment();
    let mut local_ix = vec![0u32; graph.user_count()];
    let mut members: Vec<Vec<NodeIx>> = vec![Vec::new(); actors];
    for v in 0..graph.user_count() as NodeIx {
        let k = partition.actor_of(v);
        local_ix[v as usize] = members[k].len() as u32;
        members[k].push(v);
    }

    let fallback = vec![default_score(t_now)];
    let mut workers: Vec<Actor<'_>> = Vec::with_capacity(actors);
    for (k, (nodes, block)) in members.into_iter().zip(&blocks).enumerate() {
        let initial_scores: Vec<Vec<RiskScore>> = nodes
            .iter()
            .map(|&v| block.get(&graph.user(v)).unwrap_or(&fallback).clone())
            .collect();
        let states = initial_scores.iter().map(|s| init_user(s, config)).collect();
        workers.push(Actor {
            id: k,
            graph,
            owner,
            local_ix: &local_ix,
            nodes,
            states,
            initial_scores,
            config: *config,
            trace,
        });
    }

    let start = Instant::now();
    let outcomes: Vec<ActorOutcome> = if actors == 1 {
        vec![workers.pop().unwrap().run(stop, None)?]
    } else {
        run_concurrently(workers, stop)?
    };
    let wall = start.elapsed().as_secs_f64();

    let mut curr = vec![0.0; graph.user_count()];
    let mut all_metrics = Vec::with_capacity(actors);
    let mut events = Vec::new();
    for outcome in outcomes {
        for (v, c) in outcome.curr {
            curr[v as usize] = c;
        }
        all_metrics.push(outcome.metrics);
        events.extend(outcome.trace);
    }
    Ok(Propagation {
        curr,
        metrics: RunMetrics::from_actors(all_metrics, wall),
        trace: events,
    })
}

fn run_concurrently(workers: Vec<Actor<'_>>, stop: &StopCriteria) -> Result<Vec<ActorOutcome>> {
    let actors = workers.len();
    let (senders, receivers): (Vec<_>, Vec<_>) = (0..actors).map(|_| mpsc::channel()).unzip();
    let shared = Shared {
        pending: AtomicI64::new(actors as i64),
        live: AtomicUsize::new(actors),
        abort: AtomicBool::new(false),
    };
    let links: Vec<Links> = receivers
        .into_iter()
        .map(|inbox| Links {
            inbox,
            peers: senders.clone(),
        })
        .collect();
    drop(senders);

    let results: Vec<Result<ActorOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = workers
            .into_iter()
            .zip(links)
            .map(|(worker, link)| {
                let shared = &shared;
                let id = worker.id;
                scope.spawn(move || {
                    catch_unwind(AssertUnwindSafe(|| worker.run(stop, Some((&link, shared))))).unwrap_or_else(|panic| {
                        shared.abort.store(true, std::sync::atomic::Ordering::SeqCst);
                        shared.live.fetch_sub(1, std::sync::atomic::Ordering::SeqCst);
                        Err(Error::ActorFailed {
                            actor: id,
                            reason: panic_message(&panic),
                        })
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(id, h)| {
                h.join().unwrap_or_else(|_| {
                    Err(Error::ActorFailed {
                        actor: id,
                        reason: "thread panicked".into(),
                    })
                })
            })
            .collect()
    });
    results.into_iter().collect()
}

fn panic_message(panic: &Box<dyn std::any::Any + Send>) -> String {
    panic
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| panic.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

/// How users are assigned to actors.
#[derive(Debug, Clone, PartialEq)]
pub enum Partitioner {
    RoundRobin,
    BfsGrow { imbalance: f64 },
    /// Externally computed `user -> actor` assignment.
    Import(BTreeMap<UserId, u32>),
}

impl Default for Partitioner {
    fn default() -> Self {
        Partitioner::BfsGrow {
            imbalance: DEFAULT_IMBALANCE,
        }
    }
}

impl Partitioner {
    pub fn partition(&self, graph: &TemporalGraph, actors: usize, seed: u64) -> Result<Partition> {
        match self {
            Partitioner::RoundRobin => partition_round_robin(graph, actors),
            Partitioner::BfsGrow { imbalance } => partition_bfs_grow(graph, actors, *imbalance, seed),
            Partitioner::Import(map) => {
                let assignment = graph
                    .users()
                    .iter()
                    .map(|u| map.get(u).copied().ok_or(Error::UnknownUser(*u)))
                    .collect::<Result<Vec<u32>>>()?;
                Partition::from_assignment(graph, assignment, actors)
            }
        }
    }
}

/// Everything a full run needs besides its inputs.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub actors: usize,
    pub partitioner: Partitioner,
    pub config: ActorConfig,
    pub stop: StopCriteria,
    pub t_now: i64,
    pub seed: u64,
    /// Drop contacts older than this many days; `None` keeps all.
    pub contact_expiry_days: Option<f64>,
    pub trace: bool,
}

impl RunSetup {
    pub fn new(actors: usize, stop: StopCriteria, t_now: i64) -> Self {
        let config = ActorConfig::default();
        Self {
            actors,
            partitioner: Partitioner::default(),
            config,
            stop,
            t_now,
            seed: crate::DEFAULT_SEED,
            contact_expiry_days: Some(config.horizon_days),
            trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub exposures: BTreeMap<UserId, RiskScore>,
    pub metrics: RunMetrics,
    pub graph: TemporalGraph,
    pub partition: Partition,
    pub build_report: BuildReport,
    /// Users whose scores all fell outside the horizon.
    pub defaulted_users: Vec<UserId>,
    /// Scored users that are not part of the contact graph.
    pub ignored_users: Vec<UserId>,
    pub trace: Vec<TraceEvent>,
}

/// End-to-end propagation: graph, partition, actors, merged exposures.
pub fn run(contacts: &[Contact], scores: &ScoreSet, setup: &RunSetup) -> Result<RunOutput> {
    setup.config.validate()?;
    let (graph, build_report) = build_graph(contacts, setup.t_now, setup.contact_expiry_days)?;
    let filtered = filter_scores(scores, setup.t_now, setup.config.horizon_days);
    let mut ignored_users = Vec::new();
    let mut in_graph = ScoreSet::new();
    for (user, list) in filtered.scores {
        if graph.index_of(user).is_some() {
            in_graph.insert(user, list);
        } else {
            ignored_users.push(user);
        }
    }
    let partition = setup.partitioner.partition(&graph, setup.actors, setup.seed)?;
    let result = propagate(
        &graph,
        &in_graph,
        &partition,
        &setup.config,
        &setup.stop,
        setup.t_now,
        setup.trace,
    )?;
    let exposures = graph
        .users()
        .iter()
        .zip(&result.curr)
        .map(|(&u, &c)| {
            (
                u,
                RiskScore {
                    magnitude: c,
                    time: setup.t_now,
                },
            )
        })
        .collect();
    Ok(RunOutput {
        exposures,
        metrics: result.metrics,
        graph,
        partition,
        build_report,
        defaulted_users: filtered.emptied,
        ignored_users,
        trace: result.trace,
    })
}
