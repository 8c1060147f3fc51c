//! Risk scores, contacts and the temporal contact graph.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Converts a (possibly fractional) number of days into whole seconds.
pub fn days_to_seconds(days: f64) -> i64 {
    (days * SECONDS_PER_DAY as f64).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A timestamped infection probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskScore {
    pub magnitude: f64,
    /// Seconds since the Unix epoch.
    pub time: i64,
}

impl RiskScore {
    pub fn new(magnitude: f64, time: i64) -> Result<Self> {
        if !(0.0..=1.0).contains(&magnitude) {
            return Err(Error::InvalidMagnitude(magnitude));
        }
        if time < 0 {
            return Err(Error::NegativeTime(time));
        }
        Ok(Self { magnitude, time })
    }

    /// Risk ordering: larger magnitude wins, and on equal magnitude the older
    /// score ranks higher.
    pub fn risk_cmp(&self, other: &Self) -> Ordering {
        self.magnitude
            .total_cmp(&other.magnitude)
            .then_with(|| other.time.cmp(&self.time))
    }
}

/// Maximum score under [`RiskScore::risk_cmp`].
pub fn max_score(scores: &[RiskScore]) -> Option<RiskScore> {
    scores.iter().copied().max_by(|a, b| a.risk_cmp(b))
}

/// An undirected contact between two users, stored with `user_a < user_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Contact {
    pub user_a: UserId,
    pub user_b: UserId,
    pub time: i64,
}

impl Contact {
    /// Builds a canonically ordered contact. Returns `None` for a self-loop.
    pub fn new(a: UserId, b: UserId, time: i64) -> Option<Self> {
        match a.cmp(&b) {
            Ordering::Less => Some(Self { user_a: a, user_b: b, time }),
            Ordering::Greater => Some(Self { user_a: b, user_b: a, time }),
            Ordering::Equal => None,
        }
    }
}

/// Initial risk scores per user.
pub type ScoreSet = BTreeMap<UserId, Vec<RiskScore>>;

/// Dense index of a user inside a [`TemporalGraph`].
pub type NodeIx = u32;

/// Adjacency-list contact graph keeping only the most recent contact time per
/// user pair.
///
/// Users are relabelled to dense node indices `0..user_count()` in ascending
/// `UserId` order; neighbor lists are sorted by node index.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalGraph {
    users: Vec<UserId>,
    offsets: Vec<usize>,
    neighbors: Vec<(NodeIx, i64)>,
}

/// Counters for inputs that were discarded while building a graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub self_loops: usize,
    pub expired: usize,
    pub duplicates: usize,
}

impl TemporalGraph {
    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn contact_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn user(&self, ix: NodeIx) -> UserId {
        self.users[ix as usize]
    }

    pub fn index_of(&self, user: UserId) -> Option<NodeIx> {
        self.users.binary_search(&user).ok().map(|i| i as NodeIx)
    }

    pub fn neighbors(&self, ix: NodeIx) -> &[(NodeIx, i64)] {
        let i = ix as usize;
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, ix: NodeIx) -> usize {
        let i = ix as usize;
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn contact_time(&self, a: NodeIx, b: NodeIx) -> Option<i64> {
        let adj = self.neighbors(a);
        adj.binary_search_by_key(&b, |&(v, _)| v).ok().map(|i| adj[i].1)
    }

    /// Unique undirected edges `(a, b, time)` with `a < b`, in node order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeIx, NodeIx, i64)> + '_ {
        (0..self.user_count() as NodeIx).flat_map(move |a| {
            self.neighbors(a)
                .iter()
                .filter(move |&&(b, _)| a < b)
                .map(move |&(b, t)| (a, b, t))
        })
    }

    /// The graph's contacts in canonical (user id) form.
    pub fn contacts(&self) -> Vec<Contact> {
        self.edges()
            .filter_map(|(a, b, t)| Contact::new(self.user(a), self.user(b), t))
            .collect()
    }
}

/// Builds the contact graph.
///
/// Repeated contacts on a pair keep the latest time. When `expiry_days` is
/// set, contacts with `t_now - time > expiry` are dropped. Self-loops are
/// skipped and users left without any contact are not part of the graph.
pub fn build_graph(
    contacts: &[Contact],
    t_now: i64,
    expiry_days: Option<f64>,
) -> Result<(TemporalGraph, BuildReport)> {
    let mut report = BuildReport::default();
    let expiry = expiry_days.map(days_to_seconds);

    let mut latest: BTreeMap<(UserId, UserId), i64> = BTreeMap::new();
    for c in contacts {
        let Some(c) = Contact::new(c.user_a, c.user_b, c.time) else {
            report.self_loops += 1;
            continue;
        };
        if let Some(limit) = expiry {
            if t_now - c.time > limit {
                report.expired += 1;
                continue;
            }
        }
        latest
            .entry((c.user_a, c.user_b))
            .and_modify(|t| {
                report.duplicates += 1;
                *t = (*t).max(c.time);
            })
            .or_insert(c.time);
    }
    if latest.is_empty() {
        return Err(Error::EmptyGraph);
    }

    let mut users: Vec<UserId> = latest.keys().flat_map(|&(a, b)| [a, b]).collect();
    users.sort_unstable();
    users.dedup();
    let ix = |u: UserId| users.binary_search(&u).unwrap() as NodeIx;

    let mut degree = vec![0usize; users.len()];
    for &(a, b) in latest.keys() {
        degree[ix(a) as usize] += 1;
        degree[ix(b) as usize] += 1;
    }
    let mut offsets = Vec::with_capacity(users.len() + 1);
    offsets.push(0);
    for d in &degree {
        offsets.push(offsets.last().unwrap() + d);
    }
    let mut fill = offsets.clone();
    let mut neighbors = vec![(0, 0); *offsets.last().unwrap()];
    for (&(a, b), &t) in &latest {
        let (ia, ib) = (ix(a), ix(b));
        neighbors[fill[ia as usize]] = (ib, t);
        fill[ia as usize] += 1;
        neighbors[fill[ib as usize]] = (ia, t);
        fill[ib as usize] += 1;
    }
    for i in 0..users.len() {
        neighbors[offsets[i]..offsets[i + 1]].sort_unstable_by_key(|&(v, _)| v);
    }

    if report.self_loops > 0 {
        log::warn!("dropped {} self-loop contacts", report.self_loops);
    }
    Ok((
        TemporalGraph {
            users,
            offsets,
            neighbors,
        },
        report,
    ))
}

/// Result of [`filter_scores`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilteredScores {
    pub scores: ScoreSet,
    /// Users that had scores but none inside the horizon.
    pub emptied: Vec<UserId>,
}

/// Keeps scores computed within the last `horizon_days` (inclusive boundary).
pub fn filter_scores(scores: &ScoreSet, t_now: i64, horizon_days: f64) -> FilteredScores {
    let horizon = days_to_seconds(horizon_days);
    let mut out = FilteredScores::default();
    for (&user, list) in scores {
        let kept: Vec<RiskScore> = list
            .iter()
            .copied()
            .filter(|s| t_now - s.time <= horizon)
            .collect();
        if kept.is_empty() {
            out.emptied.push(user);
        } else {
            out.scores.insert(user, kept);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const T0: i64 = 1_600_000_000;

    fn c(a: u32, b: u32, t: i64) -> Contact {
        Contact {
            user_a: UserId(a),
            user_b: UserId(b),
            time: t,
        }
    }

    #[test]
    fn repeated_contact_keeps_latest_time() {
        let (g, report) = build_graph(&[c(1, 2, T0), c(1, 2, T0 + 3600)], T0, None).unwrap();
        assert_eq!(g.user_count(), 2);
        assert_eq!(g.contact_count(), 1);
        assert_eq!(g.contact_time(0, 1), Some(T0 + 3600));
        assert_eq!(g.contact_time(1, 0), Some(T0 + 3600));
        assert_eq!(report.duplicates, 1);
    }

    #[test]
    fn lone_self_loop_is_an_empty_graph() {
        let err = build_graph(&[c(1, 1, T0)], T0, None).unwrap_err();
        assert!(matches!(err, Error::EmptyGraph));
    }

    #[test]
    fn path_construction() {
        let (g, _) = build_graph(&[c(1, 2, T0), c(2, 3, T0 + 1)], T0, None).unwrap();
        assert_eq!(g.user_count(), 3);
        assert_eq!(g.contact_count(), 2);
        let mid = g.index_of(UserId(2)).unwrap();
        let adj: Vec<UserId> = g.neighbors(mid).iter().map(|&(v, _)| g.user(v)).collect();
        assert_eq!(adj, vec![UserId(1), UserId(3)]);
    }

    #[test]
    fn reversed_pair_is_the_same_contact() {
        let (g, _) = build_graph(&[c(5, 2, T0), c(2, 5, T0 - 10)], T0, None).unwrap();
        assert_eq!(g.contact_count(), 1);
        assert_eq!(g.contacts(), vec![c(2, 5, T0)]);
    }

    #[test]
    fn expired_contacts_are_dropped() {
        let contacts = [c(0, 1, T0 - 3 * SECONDS_PER_DAY), c(1, 2, T0 - SECONDS_PER_DAY)];
        let (g, report) = build_graph(&contacts, T0, Some(2.0)).unwrap();
        assert_eq!(report.expired, 1);
        assert_eq!(g.users(), &[UserId(1), UserId(2)]);
    }

    #[test]
    fn score_horizon_boundary_is_inclusive() {
        let day = SECONDS_PER_DAY;
        let mut scores = ScoreSet::new();
        scores.insert(UserId(0), vec![RiskScore::new(0.3, T0 - 15 * day).unwrap()]);
        scores.insert(
            UserId(1),
            vec![
                RiskScore::new(0.4, T0 - 14 * day).unwrap(),
                RiskScore::new(0.5, T0 - 14 * day - 1).unwrap(),
            ],
        );
        let out = filter_scores(&scores, T0, 14.0);
        assert_eq!(out.emptied, vec![UserId(0)]);
        assert_eq!(out.scores[&UserId(1)], vec![RiskScore::new(0.4, T0 - 14 * day).unwrap()]);
    }

    #[test]
    fn in_horizon_filter_is_identity() {
        let mut scores = ScoreSet::new();
        scores.insert(UserId(3), vec![RiskScore::new(0.1, T0).unwrap(), RiskScore::new(0.9, T0 - 100).unwrap()]);
        let out = filter_scores(&scores, T0, 14.0);
        assert_eq!(out.scores, scores);
        assert!(out.emptied.is_empty());
    }

    #[test]
    fn older_score_wins_magnitude_tie() {
        let older = RiskScore::new(0.5, 10).unwrap();
        let newer = RiskScore::new(0.5, 20).unwrap();
        assert_eq!(max_score(&[older, newer]), Some(older));
        assert_eq!(max_score(&[newer, older]), Some(older));
    }

    #[test]
    fn score_range_is_enforced() {
        assert!(RiskScore::new(1.5, 0).is_err());
        assert!(RiskScore::new(-0.1, 0).is_err());
        assert!(RiskScore::new(0.5, -1).is_err());
    }
}
