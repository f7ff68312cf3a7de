use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::domain::{BtSighting, NodeId, Tick};

/// Number of distinct subjects `i` sighted within `[now - window_ms, now]`.
pub fn node_degree(sightings: &[BtSighting], i: &NodeId, now: Tick, window_ms: u64) -> usize {
    let from = now.saturating_sub_ms(window_ms);
    sightings
        .iter()
        .filter(|s| &s.observer == i && s.t >= from && s.t <= now)
        .map(|s| &s.subject)
        .collect::<BTreeSet<_>>()
        .len()
}

/// Sliding-window node degree for every observer.
#[derive(Clone, Debug)]
pub struct DegreeTracker {
    window_ms: u64,
    recent: HashMap<NodeId, VecDeque<(Tick, NodeId)>>,
}

impl DegreeTracker {
    pub fn new(window_ms: u64) -> Self {
        DegreeTracker {
            window_ms,
            recent: HashMap::new(),
        }
    }

    pub fn push(&mut self, s: &BtSighting) {
        self.recent
            .entry(s.observer.clone())
            .or_default()
            .push_back((s.t, s.subject.clone()));
    }

    /// Degree of `i` at `now`. Sightings older than the window are dropped,
    /// so `now` must not go backwards between calls.
    pub fn degree(&mut self, i: &NodeId, now: Tick) -> usize {
        let from = now.saturating_sub_ms(self.window_ms);
        let Some(q) = self.recent.get_mut(i) else {
            return 0;
        };
        while q.front().is_some_and(|(t, _)| *t < from) {
            q.pop_front();
        }
        q.iter()
            .filter(|(t, _)| *t <= now)
            .map(|(_, subject)| subject)
            .collect::<BTreeSet<_>>()
            .len()
    }
}
