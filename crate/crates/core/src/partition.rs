//! Assignment of users to actors.

use std::collections::VecDeque;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::{NodeIx, ScoreSet, TemporalGraph, UserId};
use crate::rng;

pub const DEFAULT_IMBALANCE: f64 = 0.2;

/// Maps every graph node to one of `K` actors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<u32>,
    actors: usize,
    cut_edges: usize,
}

impl Partition {
    /// Wraps an assignment indexed by node, validating the actor range and
    /// recounting cut edges.
    pub fn from_assignment(graph: &TemporalGraph, assignment: Vec<u32>, actors: usize) -> Result<Self> {
        if actors == 0 {
            return Err(Error::NoActors);
        }
        if assignment.len() != graph.user_count() {
            return Err(Error::Config(format!(
                "partition covers {} users but the graph has {}",
                assignment.len(),
                graph.user_count()
            )));
        }
        if let Some(pos) = assignment.iter().position(|&a| a as usize >= actors) {
            return Err(Error::Config(format!(
                "user {} assigned to actor {} but only {} actors exist",
                graph.user(pos as NodeIx),
                assignment[pos],
                actors
            )));
        }
        let cut_edges = count_cut_edges(graph, &assignment);
        Ok(Self {
            assignment,
            actors,
            cut_edges,
        })
    }

    pub fn actors(&self) -> usize {
        self.actors
    }

    pub fn cut_edges(&self) -> usize {
        self.cut_edges
    }

    pub fn actor_of(&self, node: NodeIx) -> usize {
        self.assignment[node as usize] as usize
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.actors];
        for &a in &self.assignment {
            sizes[a as usize] += 1;
        }
        sizes
    }
}

pub fn count_cut_edges(graph: &TemporalGraph, assignment: &[u32]) -> usize {
    graph
        .edges()
        .filter(|&(a, b, _)| assignment[a as usize] != assignment[b as usize])
        .count()
}

fn check_actor_count(graph: &TemporalGraph, actors: usize) -> Result<()> {
    if actors == 0 {
        return Err(Error::NoActors);
    }
    if actors > graph.user_count() {
        return Err(Error::TooManyActors {
            actors,
            users: graph.user_count(),
        });
    }
    Ok(())
}

/// Node `i` goes to actor `i mod K`.
pub fn partition_round_robin(graph: &TemporalGraph, actors: usize) -> Result<Partition> {
    check_actor_count(graph, actors)?;
    let assignment = (0..graph.user_count()).map(|i| (i % actors) as u32).collect();
    Partition::from_assignment(graph, assignment, actors)
}

/// Balanced breadth-first graph growing followed by greedy boundary moves.
///
/// Blocks are grown one at a time. Each block starts from the unassigned user
/// of highest degree (ties to the lower id) and expands breadth-first until it
/// holds its share of the remaining users; when its component runs out, the
/// next highest-degree unassigned user is used as another root. A refinement
/// pass then moves boundary users to the neighboring block holding most of
/// their edges, as long as no block exceeds `ceil((1 + imbalance) * n / K)`.
/// The seed only fixes the order in which boundary users are visited.
pub fn partition_bfs_grow(graph: &TemporalGraph, actors: usize, imbalance: f64, seed: u64) -> Result<Partition> {
    check_actor_count(graph, actors)?;
    if !(imbalance >= 0.0) {
        return Err(Error::Config(format!("imbalance must be >= 0, got {imbalance}")));
    }
    let n = graph.user_count();
    const UNSET: u32 = u32::MAX;
    let mut assignment = vec![UNSET; n];

    let mut by_degree: Vec<NodeIx> = (0..n as NodeIx).collect();
    by_degree.sort_by_key(|&v| (std::cmp::Reverse(graph.degree(v)), v));
    let mut next_root = 0usize;

    let mut remaining = n;
    let mut queue = VecDeque::new();
    for block in 0..actors {
        let target = remaining.div_ceil(actors - block);
        let mut size = 0;
        queue.clear();
        while size < target {
            let v = match queue.pop_front() {
                Some(v) => v,
                None => {
                    while assignment[by_degree[next_root] as usize] != UNSET {
                        next_root += 1;
                    }
                    by_degree[next_root]
                }
            };
            if assignment[v as usize] != UNSET {
                continue;
            }
            assignment[v as usize] = block as u32;
            size += 1;
            for &(w, _) in graph.neighbors(v) {
                if assignment[w as usize] == UNSET {
                    queue.push_back(w);
                }
            }
        }
        remaining -= size;
    }
    debug_assert!(assignment.iter().all(|&a| a != UNSET));

    let cap = ((1.0 + imbalance) * n as f64 / actors as f64).ceil() as usize;
    refine(graph, &mut assignment, actors, cap, seed);
    Partition::from_assignment(graph, assignment, actors)
}

fn refine(graph: &TemporalGraph, assignment: &mut [u32], actors: usize, cap: usize, seed: u64) {
    if actors == 1 {
        return;
    }
    let mut sizes = vec![0usize; actors];
    for &a in assignment.iter() {
        sizes[a as usize] += 1;
    }
    let mut order: Vec<NodeIx> = (0..graph.user_count() as NodeIx).collect();
    let mut rng = rng::stream(seed, rng::Domain::Partition, 0);
    let mut links = vec![0usize; actors];
    for _ in 0..4 {
        order.shuffle(&mut rng);
        let mut moved = false;
        for &v in &order {
            let home = assignment[v as usize] as usize;
            if sizes[home] <= 1 {
                continue;
            }
            links.iter_mut().for_each(|l| *l = 0);
            for &(w, _) in graph.neighbors(v) {
                links[assignment[w as usize] as usize] += 1;
            }
            let best = (0..actors)
                .filter(|&b| b != home && sizes[b] < cap)
                .max_by_key(|&b| (links[b], std::cmp::Reverse(b)));
            if let Some(b) = best {
                if links[b] > links[home] {
                    assignment[v as usize] = b as u32;
                    sizes[home] -= 1;
                    sizes[b] += 1;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
    }
}

/// Splits scores by owning actor.
pub fn partition_scores(graph: &TemporalGraph, scores: &ScoreSet, partition: &Partition) -> Result<Vec<ScoreSet>> {
    let mut blocks = vec![ScoreSet::new(); partition.actors()];
    for (&user, list) in scores {
        let node = graph.index_of(user).ok_or(Error::UnknownUser(user))?;
        blocks[partition.actor_of(node)].insert(user, list.clone());
    }
    Ok(blocks)
}

/// Looks up a user's actor by id.
pub fn actor_of_user(graph: &TemporalGraph, partition: &Partition, user: UserId) -> Result<usize> {
    graph
        .index_of(user)
        .map(|v| partition.actor_of(v))
        .ok_or(Error::UnknownUser(user))
}
