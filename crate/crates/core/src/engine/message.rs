//! Per-user state and the message kernel shared by the actors and the
//! reachability analysis.

use serde::Serialize;

use super::config::ActorConfig;
use crate::graph::{max_score, NodeIx, RiskScore, SECONDS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UserState {
    /// Maximum initial score scaled by the transmission rate; the reference
    /// for the send condition.
    pub init: RiskScore,
    /// Running maximum of received magnitudes.
    pub curr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub src: NodeIx,
    pub dest: NodeIx,
    pub score: RiskScore,
    /// Edges traversed by the payload since it left its originating user.
    pub hops: u32,
}

/// Initial state from a nonempty list of scores.
pub fn init_user(scores: &[RiskScore], config: &ActorConfig) -> UserState {
    let top = max_score(scores).expect("init_user needs at least one score");
    UserState {
        init: RiskScore {
            magnitude: config.alpha * top.magnitude,
            time: top.time,
        },
        curr: top.magnitude,
    }
}

/// Log-weight of a score relative to a contact: recent scores dominate, and
/// scores after the contact get no bonus.
pub fn log_weight(score: &RiskScore, contact_time: i64, config: &ActorConfig) -> f64 {
    let delta_days = ((score.time - contact_time) as f64 / SECONDS_PER_DAY as f64).min(0.0);
    score.magnitude.max(config.epsilon).ln() + delta_days / config.tau
}

/// Picks the score to forward across an edge whose latest contact was at
/// `contact_time`, already scaled by `alpha`. `None` when every score is
/// newer than the buffered contact time.
pub fn compute_message(scores: &[RiskScore], contact_time: i64, config: &ActorConfig) -> Option<RiskScore> {
    let limit = contact_time + config.buffer_seconds();
    let selected = match scores {
        [only] => Some(*only).filter(|s| s.time <= limit),
        _ => scores
            .iter()
            .filter(|s| s.time <= limit)
            .map(|s| (log_weight(s, contact_time, config), s))
            .max_by(|(wa, a), (wb, b)| wa.total_cmp(wb).then_with(|| a.risk_cmp(b)))
            .map(|(_, s)| *s),
    }?;
    Some(RiskScore {
        magnitude: config.alpha * selected.magnitude,
        time: selected.time,
    })
}

/// Send condition: the candidate is at least `gamma` times the sender's
/// initial message and no newer than it.
pub fn should_send(candidate: &RiskScore, sender_init: &RiskScore, config: &ActorConfig) -> bool {
    candidate.magnitude >= config.gamma * sender_init.magnitude && candidate.time <= sender_init.time
}
