use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::days_to_seconds;

/// Propagation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActorConfig {
    /// Transmission rate applied on every hop.
    pub alpha: f64,
    /// Send tolerance, as a fraction of the sender's initial message.
    pub gamma: f64,
    /// Time constant (days) of the recency weighting.
    pub tau: f64,
    /// Floor substituted for magnitudes before taking logarithms.
    pub epsilon: f64,
    /// Days after a contact during which newer scores still count.
    pub buffer_days: f64,
    /// Age limit (days) for initial scores.
    pub horizon_days: f64,
}

impl Default for ActorConfig {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            gamma: 0.6,
            tau: 1.0,
            epsilon: 1e-7,
            buffer_days: 2.0,
            horizon_days: 14.0,
        }
    }
}

impl ActorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(self.tau > 0.0) {
            return bad("tau must be positive");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.buffer_days >= 0.0) {
            return bad("buffer must be non-negative");
        }
        if !(self.horizon_days >= self.buffer_days) {
            return bad("horizon must be at least the buffer");
        }
        Ok(())
    }

    pub fn buffer_seconds(&self) -> i64 {
        days_to_seconds(self.buffer_days)
    }
}

/// Per-actor stopping conditions; any one that fires stops the actor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StopCriteria {
    /// Stop once the actor has run this long.
    pub max_duration: Option<Duration>,
    /// Stop after this many consecutive received messages changed nothing.
    pub early_stop: Option<u64>,
    /// Stop after this long without receiving anything while idle.
    pub timeout: Option<Duration>,
    /// Stop as soon as every actor is idle and no message is in flight.
    pub quiescence: bool,
}

impl StopCriteria {
    /// Settings used throughout the evaluation: one hour, `10 * users`
    /// messages, and a 3 second timeout (zero for a single actor).
    pub fn evaluation_defaults(users: usize, actors: usize) -> Self {
        Self {
            max_duration: Some(Duration::from_secs(3600)),
            early_stop: Some(10 * users as u64),
            timeout: Some(if actors == 1 {
                Duration::ZERO
            } else {
                Duration::from_secs(3)
            }),
            quiescence: false,
        }
    }

    /// Stop only at quiescence.
    pub fn quiescent() -> Self {
        Self {
            quiescence: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_duration.is_none() && self.early_stop.is_none() && self.timeout.is_none() && !self.quiescence {
            return Err(Error::Config(
                "no stopping criterion set; actors would never terminate".into(),
            ));
        }
        Ok(())
    }
}

/// Actor count for `n` users: one below 1,000 users, two otherwise.
pub fn actors_for_users(n: usize) -> usize {
    if n < 1000 {
        1
    } else {
        2
    }
}
