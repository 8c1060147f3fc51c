//! SocioPatterns proximity data: whitespace-separated rows `t i j [...]`,
//! one row per 20-second interval in which `i` and `j` were close.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Contact, RiskScore, ScoreSet, UserId, SECONDS_PER_DAY};
use crate::rng::{stream, Domain};

/// Bijection between raw participant ids and dense [`UserId`]s.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdMap {
    raw: Vec<String>,
    index: HashMap<String, UserId>,
}

impl IdMap {
    fn from_sorted(raw: Vec<String>) -> Self {
        let index = raw
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), UserId(i as u32)))
            .collect();
        Self { raw, index }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn user(&self, raw: &str) -> Option<UserId> {
        self.index.get(raw).copied()
    }

    pub fn raw(&self, user: UserId) -> Option<&str> {
        self.raw.get(user.0 as usize).map(String::as_str)
    }

    /// Raw ids in `UserId` order.
    pub fn raw_ids(&self) -> &[String] {
        &self.raw
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        (0..self.raw.len() as u32).map(UserId)
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub contacts: Vec<Contact>,
    pub ids: IdMap,
    /// Rows where a participant met itself.
    pub self_loops: usize,
}

/// Numeric ids sort numerically, anything else lexicographically after them.
fn raw_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

pub fn parse_sociopatterns(text: &str, path: &Path, t_now: i64) -> Result<Ingested> {
    // Latest interval per unordered raw pair.
    let mut latest: HashMap<(String, String), i64> = HashMap::new();
    let mut self_loops = 0;
    let mut rows = 0usize;
    for (n, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let Some(t) = fields.next() else { continue };
        let bad = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: n as u64 + 1,
            reason,
        };
        let (Some(i), Some(j)) = (fields.next(), fields.next()) else {
            return Err(bad(format!("expected `t i j`, got `{}`", line.trim())));
        };
        let t: i64 = t.parse().map_err(|_| bad(format!("invalid time `{t}`")))?;
        if t < 0 {
            return Err(bad(format!("negative time {t}")));
        }
        rows += 1;
        if i == j {
            self_loops += 1;
            continue;
        }
        let key = if raw_order(i, j).is_le() {
            (i.to_string(), j.to_string())
        } else {
            (j.to_string(), i.to_string())
        };
        let slot = latest.entry(key).or_insert(t);
        *slot = (*slot).max(t);
    }
    if rows == 0 {
        return Err(Error::EmptyInput(path.to_path_buf()));
    }

    let mut raw: Vec<String> = latest
        .keys()
        .flat_map(|(a, b)| [a.clone(), b.clone()])
        .collect();
    raw.sort_by(|a, b| raw_order(a, b));
    raw.dedup();
    let ids = IdMap::from_sorted(raw);

    let mut contacts: Vec<Contact> = latest
        .into_iter()
        .map(|((a, b), t)| Contact {
            user_a: ids.user(&a).unwrap(),
            user_b: ids.user(&b).unwrap(),
            time: t + t_now,
        })
        .collect();
    contacts.sort_by_key(|c| (c.user_a, c.user_b));
    Ok(Ingested {
        contacts,
        ids,
        self_loops,
    })
}

pub fn ingest_sociopatterns(path: &Path, t_now: i64) -> Result<Ingested> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_sociopatterns(&text, path, t_now)
}

/// One score per user, dated a day before `t_now` so it predates every
/// shifted contact.
pub fn gen_realworld_scores(users: impl IntoIterator<Item = UserId>, t_now: i64, p_high: f64, seed: u64) -> ScoreSet {
    users
        .into_iter()
        .map(|u| {
            let mut rng = stream(seed, Domain::RealWorldScores, u.0 as u64);
            let magnitude = if rng.gen::<f64>() < p_high {
                rng.gen_range(0.5..1.0)
            } else {
                rng.gen_range(0.0..0.5)
            };
            (
                u,
                vec![RiskScore {
                    magnitude,
                    time: t_now - SECONDS_PER_DAY,
                }],
            )
        })
        .collect()
}
