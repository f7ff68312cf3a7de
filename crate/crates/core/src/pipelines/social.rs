//! Social strength: contact time in the current hour-of-day slot, averaged
//! over the days observed so far.

use std::collections::{BTreeMap, HashMap};

use crate::domain::{Pair, Tick, MS_PER_HOUR};
use crate::pipelines::contact::ContactEvent;

/// Contact seconds per (day, hour slot) for every pair seen so far.
#[derive(Clone, Debug, Default)]
pub struct SocialStrengthState {
    pairs: BTreeMap<Pair, HashMap<(u64, usize), f64>>,
}

impl SocialStrengthState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds the slot table of `pair` from its contacts (credited up to
    /// and including `now`) and returns the strength at `now`, in seconds.
    pub fn update(&mut self, pair: &Pair, contacts: &[ContactEvent], now: Tick) -> f64 {
        let table = self.pairs.entry(pair.clone()).or_default();
        table.clear();

        let mut spans: Vec<(u64, u64)> = contacts
            .iter()
            .map(|c| {
                let (a, b) = c.occupancy_ms();
                (a, b.min(now.0 + 1))
            })
            .filter(|(a, b)| a < b)
            .collect();
        spans.sort_unstable();

        // union of the spans, so no slot is credited twice
        let mut merged: Vec<(u64, u64)> = Vec::with_capacity(spans.len());
        for (a, b) in spans {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }

        for (mut a, b) in merged {
            while a < b {
                let hour = a / MS_PER_HOUR;
                let cut = ((hour + 1) * MS_PER_HOUR).min(b);
                let tick = Tick(a);
                *table.entry((tick.day(), tick.hour_slot())).or_insert(0.0) +=
                    (cut - a) as f64 / 1000.0;
                a = cut;
            }
        }

        self.strength(pair, now)
    }

    /// Strength of `pair` at `now` from the current slot table.
    pub fn strength(&self, pair: &Pair, now: Tick) -> f64 {
        let Some(table) = self.pairs.get(pair) else {
            return 0.0;
        };
        let slot = now.hour_slot();
        let days = now.day() + 1;
        let total: f64 = (0..days).filter_map(|d| table.get(&(d, slot))).sum();
        total / days as f64
    }

    /// Seconds credited to `pair` on `day` in hour `slot`.
    pub fn slot_seconds(&self, pair: &Pair, day: u64, slot: usize) -> f64 {
        self.pairs
            .get(pair)
            .and_then(|t| t.get(&(day, slot)))
            .copied()
            .unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{NodeId, MS_PER_DAY};
    use proptest::prelude::*;

    fn pair() -> Pair {
        Pair::new(
            &NodeId::new("USense2").unwrap(),
            &NodeId::new("USense5").unwrap(),
        )
        .unwrap()
    }

    fn contact(start_ms: u64, duration_s: f64) -> ContactEvent {
        ContactEvent {
            pair: pair(),
            start: Tick(start_ms),
            end: Tick(start_ms + ((duration_s - 60.0) * 1000.0) as u64),
            duration_s,
        }
    }

    const SLOT10: u64 = 10 * MS_PER_HOUR;

    #[test]
    fn single_day() {
        let mut st = SocialStrengthState::new();
        let s = st.update(&pair(), &[contact(SLOT10, 600.0)], Tick(SLOT10 + 3_599_999));
        assert_eq!(s, 600.0);
    }

    #[test]
    fn averaged_over_days() {
        let mut st = SocialStrengthState::new();
        let contacts = [contact(SLOT10, 600.0), contact(MS_PER_DAY + SLOT10, 1200.0)];
        // end of day 1, queried back in slot 10
        let now = Tick(MS_PER_DAY + SLOT10 + 3_599_999);
        assert_eq!(st.update(&pair(), &contacts, now), 900.0);
    }

    #[test]
    fn never_in_contact() {
        let mut st = SocialStrengthState::new();
        assert_eq!(st.strength(&pair(), Tick(SLOT10)), 0.0);
        assert_eq!(st.update(&pair(), &[], Tick(SLOT10)), 0.0);
        // contact in another slot does not count
        assert_eq!(st.update(&pair(), &[contact(0, 600.0)], Tick(SLOT10)), 0.0);
    }

    #[test]
    fn contacts_spanning_slots_are_split() {
        let mut st = SocialStrengthState::new();
        let c = contact(SLOT10 + 3_000_000, 1200.0);
        st.update(&pair(), &[c], Tick(SLOT10 + 2 * MS_PER_HOUR));
        assert_eq!(st.slot_seconds(&pair(), 0, 10), 600.0);
        assert_eq!(st.slot_seconds(&pair(), 0, 11), 600.0);
    }

    #[test]
    fn credit_stops_at_now() {
        let mut st = SocialStrengthState::new();
        let s = st.update(&pair(), &[contact(SLOT10, 600.0)], Tick(SLOT10 + 59_999));
        assert_eq!(s, 60.0);
    }

    proptest! {
        #[test]
        fn non_decreasing_within_slot(
            starts in proptest::collection::vec(0u64..3_600, 1..8),
            steps in proptest::collection::vec(1u64..600_000, 1..10),
        ) {
            let mut contacts: Vec<ContactEvent> = starts.iter().map(|s| contact(SLOT10 + s * 1000, 60.0 + (*s % 500) as f64)).collect();
            contacts.sort_by_key(|c| c.start);
            let mut st = SocialStrengthState::new();
            let mut now = SLOT10;
            let mut prev = 0.0;
            for step in steps {
                now += step;
                if now >= SLOT10 + MS_PER_HOUR { break; }
                let s = st.update(&pair(), &contacts, Tick(now));
                prop_assert!(s >= prev);
                prop_assert!(s <= 3600.0);
                prev = s;
            }
        }
    }
}
