use std::collections::HashMap;
use std::sync::Mutex;

use crate::crypto::Timestamp;
use crate::protocol::Username;

pub const DEFAULT_WINDOW_MILLIS: u64 = 30_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreshnessOutcome {
    Accepted,
    /// `|now - timestamp|` exceeds the window.
    Stale,
    /// Timestamp is not newer than the last accepted one for this user.
    Replayed,
    /// Timestamp was fresh but the response did not verify.
    Mismatch,
}

/// Server-side timestamp policy for the hardened variant.
///
/// A response is admitted only if its timestamp lies within `window_millis`
/// of the server clock and is strictly newer than the last timestamp
/// accepted for the same user. The window check alone would let a captured
/// response be replayed until it ages out.
#[derive(Debug)]
pub struct FreshnessPolicy {
    window_millis: u64,
    last_accepted: Mutex<HashMap<Username, Timestamp>>,
}

impl Default for FreshnessPolicy {
    fn default() -> Self {
        Self::new(DEFAULT_WINDOW_MILLIS)
    }
}

impl FreshnessPolicy {
    /// Panics if `window_millis` is zero.
    pub fn new(window_millis: u64) -> Self {
        assert!(window_millis > 0, "freshness window must be positive");
        Self {
            window_millis,
            last_accepted: Mutex::new(HashMap::new()),
        }
    }

    pub fn window_millis(&self) -> u64 {
        self.window_millis
    }

    pub fn last_accepted(&self, username: &Username) -> Option<Timestamp> {
        self.lock().get(username).copied()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<Username, Timestamp>> {
        self.last_accepted
            .lock()
            .unwrap_or_else(std::sync::PoisonError::into_inner)
    }

    /// Runs the freshness checks and, if they pass, `verify`. The per-user
    /// record is updated only on success. The whole sequence holds the lock,
    /// so two concurrent sessions cannot both accept the same timestamp.
    pub fn admit(
        &self,
        username: &Username,
        timestamp: Timestamp,
        now: Timestamp,
        verify: impl FnOnce() -> bool,
    ) -> FreshnessOutcome {
        if now.abs_diff(timestamp) > self.window_millis {
            return FreshnessOutcome::Stale;
        }
        let mut map = self.lock();
        if let Some(&last) = map.get(username) {
            if timestamp <= last {
                return FreshnessOutcome::Replayed;
            }
        }
        if !verify() {
            return FreshnessOutcome::Mismatch;
        }
        map.insert(username.clone(), timestamp);
        FreshnessOutcome::Accepted
    }
}
