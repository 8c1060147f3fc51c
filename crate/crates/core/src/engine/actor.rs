//! A single actor: owns a block of users, drains its local mailbox before its
//! remote one and forwards messages until a stopping criterion fires.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicI64, AtomicUsize, Ordering};
use std::sync::mpsc::{Receiver, RecvTimeoutError, Sender, TryRecvError};
use std::time::{Duration, Instant};

use serde::Serialize;

use super::config::{ActorConfig, StopCriteria};
use super::message::{compute_message, should_send, Message, UserState};
use crate::error::{Error, Result};
use crate::graph::{NodeIx, RiskScore, TemporalGraph};

const BATCH: usize = 512;
const POLL: Duration = Duration::from_millis(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxDuration,
    EarlyStop,
    Timeout,
    Quiescent,
    /// Single actor with an empty mailbox and no timeout configured.
    Idle,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActorMetrics {
    pub actor: usize,
    pub users: usize,
    pub updates: u64,
    pub messages_sent: u64,
    pub messages_received: u64,
    pub runtime_seconds: f64,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceEvent {
    Sent { message: Message, contact_time: i64 },
    Updated { node: NodeIx, from: f64, to: f64 },
}

pub(crate) struct ActorOutcome {
    pub curr: Vec<(NodeIx, f64)>,
    pub metrics: ActorMetrics,
    pub trace: Vec<TraceEvent>,
}

/// State shared by all actors of one run.
pub(crate) struct Shared {
    /// In-flight remote batches plus busy actors.
    pub pending: AtomicI64,
    /// Actors still inside their main loop.
    pub live: AtomicUsize,
    pub abort: AtomicBool,
}

pub(crate) struct Links {
    pub inbox: Receiver<Vec<Message>>,
    pub peers: Vec<Sender<Vec<Message>>>,
}

pub(crate) struct Actor<'a> {
    pub id: usize,
    pub graph: &'a TemporalGraph,
    pub owner: &'a [u32],
    pub local_ix: &'a [u32],
    pub nodes: Vec<NodeIx>,
    pub states: Vec<UserState>,
    pub initial_scores: Vec<Vec<RiskScore>>,
    pub config: ActorConfig,
    pub trace: bool,
}

struct Runtime<'a> {
    links: Option<(&'a Links, &'a Shared)>,
    local: VecDeque<Message>,
    remote: VecDeque<Message>,
    outboxes: Vec<Vec<Message>>,
    busy: bool,
    buffer: i64,
    since_update: u64,
    updates: u64,
    sent: u64,
    received: u64,
    trace: Option<Vec<TraceEvent>>,
}

impl<'a> Actor<'a> {
    /// Runs the actor to completion. `links` is `None` for a single-actor run.
    pub fn run(mut self, stop: &StopCriteria, links: Option<(&Links, &Shared)>) -> Result<ActorOutcome> {
        let start = Instant::now();
        let actors = links.map_or(1, |(l, _)| l.peers.len());
        let mut rt = Runtime {
            links,
            local: VecDeque::new(),
            remote: VecDeque::new(),
            outboxes: vec![Vec::new(); actors],
            busy: true,
            buffer: self.config.buffer_seconds(),
            since_update: 0,
            updates: 0,
            sent: 0,
            received: 0,
            trace: self.trace.then(Vec::new),
        };

        let result = self.seed(&mut rt).and_then(|()| self.main_loop(&mut rt, stop, start));
        if let Some((links, shared)) = rt.links {
            if rt.busy {
                shared.pending.fetch_sub(1, Ordering::SeqCst);
            }
            if result.is_err() {
                shared.abort.store(true, Ordering::SeqCst);
            }
            shared.live.fetch_sub(1, Ordering::SeqCst);
            drain(links, shared);
        }
        let reason = result?;
        let runtime_seconds = start.elapsed().as_secs_f64();
        Ok(ActorOutcome {
            curr: self.nodes.iter().zip(&self.states).map(|(&v, s)| (v, s.curr)).collect(),
            metrics: ActorMetrics {
                actor: self.id,
                users: self.nodes.len(),
                updates: rt.updates,
                messages_sent: rt.sent,
                messages_received: rt.received,
                runtime_seconds,
                stop_reason: reason,
            },
            trace: rt.trace.unwrap_or_default(),
        })
    }

    /// Initial messages: every user offers its full score set to every
    /// neighbor, gated by its own initial message.
    fn seed(&mut self, rt: &mut Runtime<'_>) -> Result<()> {
        for i in 0..self.nodes.len() {
            let u = self.nodes[i];
            let init = self.states[i].init;
            let scores = std::mem::take(&mut self.initial_scores[i]);
            for &(v, contact_time) in self.graph.neighbors(u) {
                if let Some(score) = compute_message(&scores, contact_time, &self.config) {
                    if should_send(&score, &init, &self.config) {
                        let message = Message { src: u, dest: v, score, hops: 1 };
                        self.send(rt, message, contact_time)?;
                    }
                }
            }
            self.initial_scores[i] = scores;
        }
        Ok(())
    }

    fn main_loop(&mut self, rt: &mut Runtime<'_>, stop: &StopCriteria, start: Instant) -> Result<StopReason> {
        let mut last_receive = Instant::now();
        loop {
            if let Some(d) = stop.max_duration {
                if start.elapsed() >= d {
                    return Ok(StopReason::MaxDuration);
                }
            }
            if let Some(m) = stop.early_stop {
                if rt.since_update >= m {
                    return Ok(StopReason::EarlyStop);
                }
            }
            if let Some(message) = rt.local.pop_front().or_else(|| rt.remote.pop_front()) {
                self.handle(rt, message)?;
                last_receive = Instant::now();
                continue;
            }

            let Some((links, shared)) = rt.links else {
                return Ok(idle_single(stop, start, last_receive));
            };
            if shared.abort.load(Ordering::Relaxed) {
                return Ok(StopReason::Aborted);
            }
            self.flush_all(rt);
            match links.inbox.try_recv() {
                Ok(batch) => {
                    rt.accept(batch, shared);
                    continue;
                }
                Err(TryRecvError::Empty) => {}
                Err(TryRecvError::Disconnected) => unreachable!("actor holds a sender to itself"),
            }
            if rt.busy {
                rt.busy = false;
                shared.pending.fetch_sub(1, Ordering::SeqCst);
            }
            if stop.quiescence && shared.pending.load(Ordering::SeqCst) == 0 {
                return Ok(StopReason::Quiescent);
            }

            let now = Instant::now();
            let mut wait = Duration::MAX;
            if let Some(t) = stop.timeout {
                let idle = now.duration_since(last_receive);
                if idle >= t {
                    return Ok(StopReason::Timeout);
                }
                wait = wait.min(t - idle);
            }
            if let Some(d) = stop.max_duration {
                wait = wait.min(d.saturating_sub(now.duration_since(start)));
            }
            if stop.quiescence || wait == Duration::MAX {
                wait = wait.min(POLL);
            }
            match links.inbox.recv_timeout(wait) {
                Ok(batch) => rt.accept(batch, shared),
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => unreachable!("actor holds a sender to itself"),
            }
        }
    }

    fn handle(&mut self, rt: &mut Runtime<'_>, message: Message) -> Result<()> {
        let u = message.dest;
        if self.owner[u as usize] as usize != self.id {
            return Err(Error::Routing {
                user: self.graph.user(u),
                actor: self.id,
            });
        }
        rt.received += 1;
        let i = self.local_ix[u as usize] as usize;
        let state = &mut self.states[i];
        if message.score.magnitude > state.curr {
            if let Some(trace) = rt.trace.as_mut() {
                trace.push(TraceEvent::Updated {
                    node: u,
                    from: state.curr,
                    to: message.score.magnitude,
                });
            }
            state.curr = message.score.magnitude;
            rt.updates += 1;
            rt.since_update = 0;
        } else {
            rt.since_update += 1;
        }

        let init = state.init;
        // A forwarded message holds one score, so only the buffer filter and
        // the scaling of `compute_message` apply.
        if message.score.time > init.time {
            return Ok(());
        }
        let magnitude = self.config.alpha * message.score.magnitude;
        if magnitude < self.config.gamma * init.magnitude {
            return Ok(());
        }
        for &(v, contact_time) in self.graph.neighbors(u) {
            if v == message.src || message.score.time > contact_time + rt.buffer {
                continue;
            }
            let forward = Message {
                src: u,
                dest: v,
                score: RiskScore {
                    magnitude,
                    time: message.score.time,
                },
                hops: message.hops + 1,
            };
            self.send(rt, forward, contact_time)?;
        }
        Ok(())
    }

    fn send(&mut self, rt: &mut Runtime<'_>, message: Message, contact_time: i64) -> Result<()> {
        rt.sent += 1;
        if let Some(trace) = rt.trace.as_mut() {
            trace.push(TraceEvent::Sent { message, contact_time });
        }
        let dest_actor = self.owner[message.dest as usize] as usize;
        if dest_actor == self.id {
            rt.local.push_back(message);
            return Ok(());
        }
        if rt.links.is_none() {
            return Err(Error::Routing {
                user: self.graph.user(message.dest),
                actor: self.id,
            });
        }
        rt.outboxes[dest_actor].push(message);
        if rt.outboxes[dest_actor].len() >= BATCH {
            rt.flush(dest_actor);
        }
        Ok(())
    }

    fn flush_all(&self, rt: &mut Runtime<'_>) {
        for k in 0..rt.outboxes.len() {
            if !rt.outboxes[k].is_empty() {
                rt.flush(k);
            }
        }
    }
}

impl Runtime<'_> {
    fn flush(&mut self, actor: usize) {
        let Some((links, shared)) = self.links else { return };
        let batch = std::mem::take(&mut self.outboxes[actor]);
        shared.pending.fetch_add(1, Ordering::SeqCst);
        if links.peers[actor].send(batch).is_err() {
            shared.pending.fetch_sub(1, Ordering::SeqCst);
        }
    }

    fn accept(&mut self, batch: Vec<Message>, shared: &Shared) {
        if self.busy {
            shared.pending.fetch_sub(1, Ordering::SeqCst);
        } else {
            // The batch's token becomes this actor's busy token.
            self.busy = true;
        }
        self.remote.extend(batch);
    }
}

/// A lone actor with nothing queued can never receive again; it stops once
/// its remaining timeout (or duration) has elapsed.
fn idle_single(stop: &StopCriteria, start: Instant, last_receive: Instant) -> StopReason {
    if stop.quiescence {
        return StopReason::Quiescent;
    }
    if let Some(t) = stop.timeout {
        let left = t.saturating_sub(last_receive.elapsed());
        let budget = stop.max_duration.map_or(left, |d| left.min(d.saturating_sub(start.elapsed())));
        std::thread::sleep(budget);
        return if budget < left { StopReason::MaxDuration } else { StopReason::Timeout };
    }
    if let Some(d) = stop.max_duration {
        std::thread::sleep(d.saturating_sub(start.elapsed()));
        return StopReason::MaxDuration;
    }
    StopReason::Idle
}

/// Discards batches addressed to a stopped actor until every actor has left
/// its main loop, keeping the in-flight count accurate for the others.
fn drain(links: &Links, shared: &Shared) {
    while shared.live.load(Ordering::SeqCst) > 0 {
        match links.inbox.recv_timeout(POLL) {
            Ok(_) => {
                shared.pending.fetch_sub(1, Ordering::SeqCst);
            }
            Err(_) => continue,
        }
    }
}
