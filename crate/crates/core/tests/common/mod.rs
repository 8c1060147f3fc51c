//! Shared helpers for the integration tests: random instances and an
//! independent propagation oracle.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riskprop::engine::ActorConfig;
use riskprop::graph::{Contact, RiskScore, ScoreSet, UserId};

pub const T_NOW: i64 = 1_600_000_000;
pub const DAY: i64 = 86_400;

#[derive(Debug, Clone)]
pub struct Instance {
    pub contacts: Vec<Contact>,
    pub scores: ScoreSet,
    pub config: ActorConfig,
}

/// Random instance on `n` users with roughly `degree` contacts per user.
///
/// Every user gets at least one positive score inside the horizon, plus
/// possibly stale ones, so no user starts from a zero initial message.
pub fn random_instance(seed: u64, n: usize, degree: f64, gamma: (f64, f64)) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = (degree / (n.max(2) - 1) as f64).min(1.0);
    let mut contacts = Vec::new();
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            if rng.gen::<f64>() < p {
                // Sometimes record the pair twice, out of order.
                let reps = if rng.gen::<f64>() < 0.2 { 2 } else { 1 };
                for _ in 0..reps {
                    let t = T_NOW - rng.gen_range(0..14 * DAY);
                    let (x, y) = if rng.gen() { (a, b) } else { (b, a) };
                    contacts.push(Contact {
                        user_a: UserId(x),
                        user_b: UserId(y),
                        time: t,
                    });
                }
            }
        }
    }
    if contacts.is_empty() {
        contacts.push(Contact::new(UserId(0), UserId(1), T_NOW - DAY).unwrap());
    }
    let mut scores = ScoreSet::new();
    for u in 0..n as u32 {
        let k = rng.gen_range(1..=4);
        let mut list = Vec::new();
        for i in 0..k {
            let magnitude = rng.gen_range(0.01..1.0);
            let time = if i == 0 {
                T_NOW - rng.gen_range(0..=14 * DAY)
            } else {
                T_NOW - rng.gen_range(0..18 * DAY)
            };
            list.push(RiskScore::new(magnitude, time).unwrap());
        }
        scores.insert(UserId(u), list);
    }
    let config = ActorConfig {
        alpha: rng.gen_range(0.5..0.85),
        gamma: rng.gen_range(gamma.0..gamma.1),
        ..ActorConfig::default()
    };
    Instance {
        contacts,
        scores,
        config,
    }
}

/// Random tree on `n` users with all contacts at `T_NOW`.
pub fn random_tree(seed: u64, n: usize) -> Vec<Contact> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..n as u32)
        .map(|v| {
            let parent = rng.gen_range(0..v);
            Contact::new(UserId(parent), UserId(v), T_NOW).unwrap()
        })
        .collect()
}

fn better(a: &RiskScore, b: &RiskScore) -> bool {
    a.magnitude > b.magnitude || (a.magnitude == b.magnitude && a.time < b.time)
}

/// Picks the score sent over a contact by weighting every admissible score
/// in linear space.
fn select(scores: &[RiskScore], contact: i64, cfg: &ActorConfig) -> Option<RiskScore> {
    let limit = contact as f64 + cfg.buffer_days * DAY as f64;
    let mut best: Option<(f64, RiskScore)> = None;
    for s in scores {
        if s.time as f64 > limit {
            continue;
        }
        let delta = ((s.time - contact) as f64 / DAY as f64).min(0.0);
        let w = s.magnitude.max(cfg.epsilon) * (delta / cfg.tau).exp();
        let replace = match best {
            None => true,
            Some((bw, bs)) => w > bw || (w == bw && better(s, &bs)),
        };
        if replace {
            best = Some((w, *s));
        }
    }
    best.map(|(_, s)| RiskScore {
        magnitude: cfg.alpha * s.magnitude,
        time: s.time,
    })
}

/// Final exposure magnitudes by exhaustive fixed-point iteration.
///
/// A message is characterized by its receiver, its sender and the time of
/// the score it carries; whether and where it is forwarded depends on
/// nothing else, and a larger magnitude forwards at least as far. Keeping
/// only the largest magnitude per such state therefore yields the same
/// per-user maxima as delivering every message.
pub fn oracle_exposures(contacts: &[Contact], scores: &ScoreSet, cfg: &ActorConfig) -> BTreeMap<UserId, f64> {
    let horizon = (cfg.horizon_days * DAY as f64).round() as i64;
    let buffer = (cfg.buffer_days * DAY as f64).round() as i64;

    let mut latest: BTreeMap<(u32, u32), i64> = BTreeMap::new();
    for c in contacts {
        let (a, b) = (c.user_a.0.min(c.user_b.0), c.user_a.0.max(c.user_b.0));
        if a == b || T_NOW - c.time > horizon {
            continue;
        }
        let e = latest.entry((a, b)).or_insert(c.time);
        *e = (*e).max(c.time);
    }
    let mut adj: BTreeMap<u32, Vec<(u32, i64)>> = BTreeMap::new();
    for (&(a, b), &t) in &latest {
        adj.entry(a).or_default().push((b, t));
        adj.entry(b).or_default().push((a, t));
    }

    let mut own: HashMap<u32, Vec<RiskScore>> = HashMap::new();
    let mut init: HashMap<u32, RiskScore> = HashMap::new();
    let mut curr: BTreeMap<u32, f64> = BTreeMap::new();
    for &u in adj.keys() {
        let kept: Vec<RiskScore> = scores
            .get(&UserId(u))
            .map(|l| l.iter().copied().filter(|s| T_NOW - s.time <= horizon).collect())
            .unwrap_or_default();
        let kept = if kept.is_empty() {
            vec![RiskScore {
                magnitude: 0.0,
                time: T_NOW,
            }]
        } else {
            kept
        };
        let mut top = kept[0];
        for s in &kept[1..] {
            if better(s, &top) {
                top = *s;
            }
        }
        init.insert(
            u,
            RiskScore {
                magnitude: cfg.alpha * top.magnitude,
                time: top.time,
            },
        );
        curr.insert(u, top.magnitude);
        own.insert(u, kept);
    }

    let passes = |m: &RiskScore, u: u32| {
        let i = init[&u];
        m.magnitude >= cfg.gamma * i.magnitude && m.time <= i.time
    };

    let mut best: HashMap<(u32, u32, i64), f64> = HashMap::new();
    let mut work: VecDeque<(u32, u32, RiskScore)> = VecDeque::new();
    let offer = |to: u32, from: u32, m: RiskScore, best: &mut HashMap<(u32, u32, i64), f64>, work: &mut VecDeque<_>| {
        let slot = best.entry((to, from, m.time)).or_insert(f64::NEG_INFINITY);
        if m.magnitude > *slot {
            *slot = m.magnitude;
            work.push_back((to, from, m));
        }
    };

    for (&u, nbrs) in &adj {
        for &(v, t) in nbrs {
            if let Some(m) = select(&own[&u], t, cfg) {
                if passes(&m, u) {
                    offer(v, u, m, &mut best, &mut work);
                }
            }
        }
    }
    while let Some((u, from, m)) = work.pop_front() {
        if best[&(u, from, m.time)] > m.magnitude {
            continue;
        }
        let c = curr.get_mut(&u).unwrap();
        if m.magnitude > *c {
            *c = m.magnitude;
        }
        let fwd = RiskScore {
            magnitude: cfg.alpha * m.magnitude,
            time: m.time,
        };
        if !passes(&fwd, u) {
            continue;
        }
        for &(v, t) in &adj[&u] {
            if v != from && m.time <= t + buffer {
                offer(v, u, fwd, &mut best, &mut work);
            }
        }
    }
    curr.into_iter().map(|(u, c)| (UserId(u), c)).collect()
}

/// Number of distinct users with at least one contact.
pub fn contact_users(contacts: &[Contact]) -> usize {
    let mut users: Vec<u32> = contacts
        .iter()
        .filter(|c| c.user_a != c.user_b)
        .flat_map(|c| [c.user_a.0, c.user_b.0])
        .collect();
    users.sort_unstable();
    users.dedup();
    users.len()
}

pub fn magnitudes(exposures: &BTreeMap<UserId, RiskScore>) -> BTreeMap<UserId, f64> {
    exposures.iter().map(|(&u, s)| (u, s.magnitude)).collect()
}
