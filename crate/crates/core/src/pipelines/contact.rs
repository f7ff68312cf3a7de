//! Proximity pipeline: merges Bluetooth sightings of a pair into contacts.

use crate::domain::{BtSighting, Pair, Tick};
use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContactParams {
    /// Sightings at most this far apart belong to the same contact.
    pub gap_ms: u64,
    /// Presence credited after the last sighting of a contact.
    pub dwell_s: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        ContactParams {
            gap_ms: 120_000,
            dwell_s: 60.0,
        }
    }
}

/// Encounter between two nodes, from first to last merged sighting.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactEvent {
    pub pair: Pair,
    pub start: Tick,
    pub end: Tick,
    /// `(end - start) / 1000 + dwell_s`
    pub duration_s: f64,
}

impl ContactEvent {
    fn new(pair: Pair, start: Tick, end: Tick, dwell_s: f64) -> Self {
        ContactEvent {
            pair,
            start,
            end,
            duration_s: (end.0 - start.0) as f64 / 1000.0 + dwell_s,
        }
    }

    /// Millisecond interval `[start, start + duration)` credited to the contact.
    pub fn occupancy_ms(&self) -> (u64, u64) {
        let len = (self.duration_s * 1000.0).round() as u64;
        (self.start.0, self.start.0 + len)
    }
}

/// Incremental contact detection for one pair.
#[derive(Clone, Debug)]
pub struct ContactTracker {
    pair: Pair,
    params: ContactParams,
    closed: Vec<ContactEvent>,
    open: Option<(Tick, Tick)>,
}

impl ContactTracker {
    pub fn new(pair: Pair, params: ContactParams) -> Self {
        ContactTracker {
            pair,
            params,
            closed: Vec::new(),
            open: None,
        }
    }

    pub fn pair(&self) -> &Pair {
        &self.pair
    }

    pub fn push(&mut self, t: Tick) -> Result<()> {
        match self.open {
            None => self.open = Some((t, t)),
            Some((_, last)) if t < last => {
                return Err(Error::Unsorted {
                    index: self.closed.len(),
                    prev_ms: last.0,
                    next_ms: t.0,
                })
            }
            Some((start, last)) if t.0 - last.0 <= self.params.gap_ms => {
                self.open = Some((start, t))
            }
            Some((start, last)) => {
                self.closed.push(ContactEvent::new(
                    self.pair.clone(),
                    start,
                    last,
                    self.params.dwell_s,
                ));
                self.open = Some((t, t));
            }
        }
        Ok(())
    }

    /// Contacts so far, the still-open one last.
    pub fn contacts(&self) -> Vec<ContactEvent> {
        let mut out = self.closed.clone();
        if let Some((start, last)) = self.open {
            out.push(ContactEvent::new(
                self.pair.clone(),
                start,
                last,
                self.params.dwell_s,
            ));
        }
        out
    }

    pub fn total_seconds(&self) -> f64 {
        self.contacts().iter().map(|c| c.duration_s).sum()
    }
}

/// Merges time-sorted sightings of a single pair into disjoint contacts.
pub fn detect_contacts(
    sightings: &[BtSighting],
    params: ContactParams,
) -> Result<Vec<ContactEvent>> {
    let Some(first) = sightings.first() else {
        return Ok(Vec::new());
    };
    let pair = Pair::new(&first.observer, &first.subject)?;
    let mut tracker = ContactTracker::new(pair, params);
    for (index, s) in sightings.iter().enumerate() {
        if !tracker.pair.contains(&s.observer)
            || !tracker.pair.contains(&s.subject)
            || s.observer == s.subject
        {
            return Err(Error::Domain(format!(
                "sighting {index} ({} -> {}) is not of pair {}",
                s.observer, s.subject, tracker.pair
            )));
        }
        tracker.push(s.t).map_err(|e| match e {
            Error::Unsorted {
                prev_ms, next_ms, ..
            } => Error::Unsorted {
                index,
                prev_ms,
                next_ms,
            },
            e => e,
        })?;
    }
    Ok(tracker.contacts())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::NodeId;
    use proptest::prelude::*;

    fn sightings(times_s: &[u64]) -> Vec<BtSighting> {
        let a = NodeId::new("a").unwrap();
        let b = NodeId::new("b").unwrap();
        times_s
            .iter()
            .enumerate()
            .map(|(k, &t)| BtSighting {
                t: Tick(t * 1000),
                observer: if k % 2 == 0 { a.clone() } else { b.clone() },
                subject: if k % 2 == 0 { b.clone() } else { a.clone() },
                rssi_dbm: -50.0,
            })
            .collect()
    }

    #[test]
    fn merge_examples() {
        let c = detect_contacts(&sightings(&[0, 60, 120]), ContactParams::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].start, c[0].end), (Tick(0), Tick(120_000)));
        assert_eq!(c[0].duration_s, 180.0);

        let c = detect_contacts(&sightings(&[0, 400]), ContactParams::default()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(
            c.iter().map(|c| c.duration_s).collect::<Vec<_>>(),
            vec![60.0, 60.0]
        );

        assert!(detect_contacts(&[], ContactParams::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn gap_boundary_is_inclusive() {
        let c = detect_contacts(&sightings(&[0, 120, 241]), ContactParams::default()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].duration_s, 180.0);
    }

    #[test]
    fn rejects_unsorted_and_foreign() {
        let err = detect_contacts(&sightings(&[0, 60, 30]), ContactParams::default()).unwrap_err();
        assert!(matches!(err, Error::Unsorted { index: 2, .. }));
        let mut s = sightings(&[0, 60]);
        s[1].subject = NodeId::new("c").unwrap();
        assert!(detect_contacts(&s, ContactParams::default()).is_err());
    }

    proptest! {
        #[test]
        fn contacts_disjoint_and_split_invariant(
            gaps in proptest::collection::vec(0u64..400, 1..60),
            split in 0usize..60,
        ) {
            let mut t = 0;
            let times: Vec<u64> = gaps.iter().map(|g| { t += g; t }).collect();
            let all = sightings(&times);
            let params = ContactParams::default();
            let c = detect_contacts(&all, params).unwrap();
            for w in c.windows(2) {
                prop_assert!(w[0].end.0 + params.gap_ms < w[1].start.0);
            }
            let total: f64 = c.iter().map(|c| c.duration_s).sum();

            // split only where the neighbouring sightings are more than gap_ms apart
            let k = split % times.len();
            if k > 0 && (times[k] - times[k - 1]) * 1000 > params.gap_ms {
                let left = detect_contacts(&all[..k], params).unwrap();
                let right = detect_contacts(&all[k..], params).unwrap();
                let parts: f64 = left.iter().chain(&right).map(|c| c.duration_s).sum();
                prop_assert_eq!(total, parts);
            }
        }
    }
}
