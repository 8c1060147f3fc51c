//! Synthetic contact graphs and risk scores.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::graph::{Contact, RiskScore, ScoreSet, UserId, SECONDS_PER_DAY};
use crate::rng::{stream, Domain};

pub const DEFAULT_P_HIGH: f64 = 0.2;
pub const DEFAULT_DAYS: u32 = 14;
pub const CSFG_EDGES_PER_USER: usize = 2;
pub const CSFG_TRIAD_PROBABILITY: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    /// Random geometric graph.
    Rgg,
    /// Clustered scale-free (powerlaw-cluster) graph.
    Csfg,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphKind::Rgg => "rgg",
            GraphKind::Csfg => "csfg",
        })
    }
}

impl FromStr for GraphKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rgg" => Ok(GraphKind::Rgg),
            "csfg" => Ok(GraphKind::Csfg),
            other => Err(format!("unknown graph kind `{other}` (expected rgg or csfg)")),
        }
    }
}

/// Connection radius for `n` points: `min(1, 0.25^(log10(n) - 1))`.
pub fn rgg_radius(n: usize) -> f64 {
    0.25f64.powf((n as f64).log10() - 1.0).min(1.0)
}

/// Points uniform in the unit square, joined when within [`rgg_radius`].
/// Edges are `(a, b)` with `a < b`, sorted.
pub fn gen_rgg(n: usize, seed: u64) -> Vec<(u32, u32)> {
    let mut rng = stream(seed, Domain::Geometric, 0);
    let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let r = rgg_radius(n);
    let r2 = r * r;

    // Bucket points into cells of side >= r; only neighboring cells can hold
    // points within range.
    let cells = ((1.0 / r).floor() as usize).max(1);
    let cell_of = |x: f64| ((x * cells as f64) as usize).min(cells - 1);
    let mut grid: Vec<Vec<u32>> = vec![Vec::new(); cells * cells];
    for (i, &(x, y)) in points.iter().enumerate() {
        grid[cell_of(y) * cells + cell_of(x)].push(i as u32);
    }
    let mut edges = Vec::new();
    for (i, &(x, y)) in points.iter().enumerate() {
        let (cx, cy) = (cell_of(x) as isize, cell_of(y) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (cx + dx, cy + dy);
                if nx < 0 || ny < 0 || nx >= cells as isize || ny >= cells as isize {
                    continue;
                }
                for &j in &grid[ny as usize * cells + nx as usize] {
                    if (j as usize) <= i {
                        continue;
                    }
                    let (px, py) = points[j as usize];
                    if (px - x).powi(2) + (py - y).powi(2) <= r2 {
                        edges.push((i as u32, j));
                    }
                }
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Powerlaw-cluster growth: a clique on the first `m` users, then every new
/// user attaches `m` edges. The first goes to a degree-proportional target;
/// each further edge, with probability `p_triad`, closes a triangle through a
/// neighbor of the previous target, and otherwise is another preferential
/// attachment. Duplicate targets are redrawn.
pub fn gen_csfg(n: usize, m: usize, p_triad: f64, seed: u64) -> Vec<(u32, u32)> {
    assert!(m >= 1 && n > m, "need n > m >= 1");
    let mut rng = stream(seed, Domain::PowerlawCluster, 0);
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut edges = Vec::with_capacity(m * (m - 1) / 2 + m * (n - m));
    // Each user appears once per incident edge end, plus once for seed users.
    let mut repeated: Vec<u32> = (0..m as u32).collect();

    let mut connect = |adj: &mut Vec<Vec<u32>>, repeated: &mut Vec<u32>, a: u32, b: u32| {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
        repeated.push(a);
        repeated.push(b);
        edges.push((a.min(b), a.max(b)));
    };
    for a in 0..m as u32 {
        for b in a + 1..m as u32 {
            connect(&mut adj, &mut repeated, a, b);
        }
    }

    for source in m as u32..n as u32 {
        let mut target: Option<u32> = None;
        for k in 0..m {
            let triad = if k > 0 && rng.gen::<f64>() < p_triad {
                let prev = target.unwrap();
                let options: Vec<u32> = adj[prev as usize]
                    .iter()
                    .copied()
                    .filter(|&w| w != source && !adj[source as usize].contains(&w))
                    .collect();
                (!options.is_empty()).then(|| options[rng.gen_range(0..options.len())])
            } else {
                None
            };
            let next = match triad {
                Some(w) => w,
                None => loop {
                    let w = repeated[rng.gen_range(0..repeated.len())];
                    if w != source && !adj[source as usize].contains(&w) {
                        target = Some(w);
                        break w;
                    }
                },
            };
            connect(&mut adj, &mut repeated, source, next);
        }
    }
    edges.sort_unstable();
    edges
}

/// Per-user offset in `[0, 86400)` seconds shared by its score and contact
/// time grids.
pub fn time_offset(user: UserId, seed: u64) -> i64 {
    stream(seed, Domain::TimeOffsets, user.0 as u64).gen_range(0..SECONDS_PER_DAY)
}

/// `days + 1` daily scores per user. With probability `p_high` a user is high
/// risk and draws magnitudes from `[0.5, 1)`, otherwise from `[0, 0.5)`.
/// Score `d` is stamped `t_now + offset - d days`.
pub fn gen_scores(users: &[UserId], p_high: f64, days: u32, t_now: i64, seed: u64) -> ScoreSet {
    users
        .iter()
        .map(|&u| {
            let mut rng = stream(seed, Domain::ScoreMagnitudes, u.0 as u64);
            let high = rng.gen::<f64>() < p_high;
            let offset = time_offset(u, seed);
            let scores = (0..=days as i64)
                .map(|d| RiskScore {
                    magnitude: if high { rng.gen_range(0.5..1.0) } else { rng.gen_range(0.0..0.5) },
                    time: t_now + offset - d * SECONDS_PER_DAY,
                })
                .collect();
            (u, scores)
        })
        .collect()
}

/// One contact per edge, at a uniformly chosen point of the lower user's daily
/// time grid.
pub fn gen_contact_times(edges: &[(u32, u32)], days: u32, t_now: i64, seed: u64) -> Vec<Contact> {
    edges
        .iter()
        .enumerate()
        .filter_map(|(i, &(a, b))| {
            let lower = UserId(a.min(b));
            let d = stream(seed, Domain::ContactTimes, i as u64).gen_range(0..=days as i64);
            Contact::new(UserId(a), UserId(b), t_now + time_offset(lower, seed) - d * SECONDS_PER_DAY)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub users: usize,
    pub kind: GraphKind,
    pub p_high: f64,
    pub days: u32,
    pub t_now: i64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(kind: GraphKind, users: usize, seed: u64) -> Self {
        Self {
            users,
            kind,
            p_high: DEFAULT_P_HIGH,
            days: DEFAULT_DAYS,
            t_now: crate::DEFAULT_T_NOW,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub contacts: Vec<Contact>,
    /// Scores for every user that has at least one contact.
    pub scores: ScoreSet,
}

pub fn generate(config: &SynthConfig) -> crate::Result<SynthData> {
    if config.users < 2 {
        return Err(crate::Error::Config("at least 2 users are required".into()));
    }
    if !(0.0..=1.0).contains(&config.p_high) {
        return Err(crate::Error::Config("p_high must lie in [0, 1]".into()));
    }
    let edges = match config.kind {
        GraphKind::Rgg => gen_rgg(config.users, config.seed),
        GraphKind::Csfg => {
            if config.users <= CSFG_EDGES_PER_USER {
                return Err(crate::Error::Config(format!(
                    "csfg needs more than {CSFG_EDGES_PER_USER} users"
                )));
            }
            gen_csfg(config.users, CSFG_EDGES_PER_USER, CSFG_TRIAD_PROBABILITY, config.seed)
        }
    };
    let contacts = gen_contact_times(&edges, config.days, config.t_now, config.seed);
    let users: Vec<UserId> = edges
        .iter()
        .flat_map(|&(a, b)| [UserId(a), UserId(b)])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let scores = gen_scores(&users, config.p_high, config.days, config.t_now, config.seed);
    Ok(SynthData { contacts, scores })
}
