//! Relative distance: inverts the path-loss model and smooths the result
//! with an exponential moving average per observer/subject pair.

use std::collections::BTreeMap;

use crate::domain::{Distance, NodeId, Tick};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::simulator::RfParams;

/// Distance in meters implied by `rssi_dbm` with no shadowing.
pub fn estimate_distance_raw<T: Real>(rssi_dbm: T, rf: &RfParams<T>) -> T {
    let ten = T::lit(10.0);
    ten.powf((rf.p_ref_dbm - rssi_dbm) / (ten * rf.pathloss_exp))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceState<T> {
    ema_m: Option<T>,
    last_update: Tick,
    alpha: T,
}

impl<T: Real> DistanceState<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(Error::Domain(format!(
                "EMA alpha must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(DistanceState {
            ema_m: None,
            last_update: Tick::ZERO,
            alpha,
        })
    }

    /// Folds in a new raw estimate and returns the smoothed distance.
    pub fn update(&mut self, raw_m: T, now: Tick) -> T {
        let ema = match self.ema_m {
            None => raw_m,
            Some(prev) => self.alpha * raw_m + (T::one() - self.alpha) * prev,
        };
        self.ema_m = Some(ema);
        self.last_update = now;
        ema
    }

    pub fn value(&self) -> Option<T> {
        self.ema_m
    }

    pub fn last_update(&self) -> Tick {
        self.last_update
    }

    pub fn staleness_ms(&self, now: Tick) -> u64 {
        now.0.saturating_sub(self.last_update.0)
    }

    /// Forgets the history; the next update starts afresh.
    pub fn reset(&mut self) {
        self.ema_m = None;
    }

    /// Smoothed distance, or out of range when never observed or stale.
    pub fn estimate(&self, now: Tick, stale_after_ms: u64) -> Distance<T> {
        match self.ema_m {
            Some(d) if self.staleness_ms(now) <= stale_after_ms => Distance::Meters(d),
            _ => Distance::OutOfRange,
        }
    }
}

pub fn ema_update<T: Real>(state: &mut DistanceState<T>, raw_m: T, now: Tick) -> T {
    state.update(raw_m, now)
}

/// Distance pipeline over all observer/subject pairs.
#[derive(Clone, Debug)]
pub struct DistanceTracker<T> {
    rf: RfParams<T>,
    alpha: T,
    stale_after_ms: u64,
    states: BTreeMap<(NodeId, NodeId), DistanceState<T>>,
}

impl<T: Real> DistanceTracker<T> {
    pub fn new(rf: RfParams<T>, alpha: T, stale_after_ms: u64) -> Result<Self> {
        DistanceState::new(alpha)?;
        Ok(DistanceTracker {
            rf,
            alpha,
            stale_after_ms,
            states: BTreeMap::new(),
        })
    }

    /// Records a sighting of `subject` by `observer`. A pair that had gone
    /// stale restarts its average from this reading.
    pub fn observe(&mut self, observer: &NodeId, subject: &NodeId, rssi_dbm: T, t: Tick) -> T {
        let raw = estimate_distance_raw(rssi_dbm, &self.rf);
        let alpha = self.alpha;
        let state = self
            .states
            .entry((observer.clone(), subject.clone()))
            .or_insert_with(|| DistanceState::new(alpha).expect("alpha validated"));
        if state.staleness_ms(t) > self.stale_after_ms {
            state.reset();
        }
        state.update(raw, t)
    }

    pub fn estimate(&self, observer: &NodeId, subject: &NodeId, now: Tick) -> Distance<T> {
        self.states
            .get(&(observer.clone(), subject.clone()))
            .map_or(Distance::OutOfRange, |s| {
                s.estimate(now, self.stale_after_ms)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::rssi_from_distance;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn inverse_examples() {
        let rf = RfParams::<f64>::default();
        assert_relative_eq!(estimate_distance_raw(-40.0, &rf), 1.0);
        assert_relative_eq!(
            estimate_distance_raw(-67.0, &rf),
            10.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            estimate_distance_raw(-94.0, &rf),
            100.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn ema_examples() {
        let mut s = DistanceState::new(0.3).unwrap();
        assert_eq!(s.update(10.0, Tick(0)), 10.0);
        assert_relative_eq!(s.update(20.0, Tick(1)), 13.0, epsilon = 1e-12);

        let mut s = DistanceState::new(1.0f64).unwrap();
        s.update(4.0, Tick(0));
        assert_eq!(ema_update(&mut s, 7.5, Tick(1)), 7.5);

        assert!(DistanceState::new(0.0f64).is_err());
        assert!(DistanceState::new(1.5f64).is_err());
    }

    #[test]
    fn staleness_yields_out_of_range() {
        let mut s = DistanceState::new(0.3f64).unwrap();
        assert_eq!(s.estimate(Tick(0), 300_000), Distance::OutOfRange);
        s.update(5.0, Tick(60_000));
        assert_eq!(s.estimate(Tick(360_000), 300_000), Distance::Meters(5.0));
        assert_eq!(s.estimate(Tick(360_001), 300_000), Distance::OutOfRange);
    }

    #[test]
    fn tracker_restarts_after_gap() {
        let rf = RfParams::<f64>::default();
        let a = NodeId::new("a").unwrap();
        let b = NodeId::new("b").unwrap();
        let mut tr = DistanceTracker::new(rf, 0.3, 300_000).unwrap();
        tr.observe(&a, &b, -40.0, Tick(0));
        let d = tr.observe(&a, &b, -67.0, Tick(60_000));
        assert_relative_eq!(d, 0.3 * 10.0 + 0.7 * 1.0, max_relative = 1e-12);
        let d = tr.observe(&a, &b, -67.0, Tick(1_000_000));
        assert_relative_eq!(d, 10.0, max_relative = 1e-12);
        assert_eq!(tr.estimate(&b, &a, Tick(1_000_000)), Distance::OutOfRange);
    }

    proptest! {
        #[test]
        fn roundtrip_with_path_loss(d in 0.1f64..1000.0, exp in 1.5f64..4.5, p_ref in -60.0f64..-30.0) {
            let rf = RfParams { p_ref_dbm: p_ref, pathloss_exp: exp, ..RfParams::default() };
            let rssi = p_ref - 10.0 * exp * d.log10();
            prop_assume!(rssi >= -120.0);
            let back = estimate_distance_raw(rssi_from_distance(d, &rf, 0.0).unwrap(), &rf);
            prop_assert!(((back - d) / d).abs() <= 1e-9);
        }

        #[test]
        fn ema_error_is_geometric(x0 in 0.0f64..100.0, c in 0.0f64..100.0, alpha in 0.01f64..1.0, k in 0u32..40) {
            let mut s = DistanceState::new(alpha).unwrap();
            s.update(x0, Tick(0));
            let mut ema = x0;
            for step in 0..k {
                ema = s.update(c, Tick(u64::from(step) + 1));
            }
            let expected = (1.0 - alpha).powi(k as i32) * (x0 - c).abs();
            prop_assert!(((ema - c).abs() - expected).abs() <= 1e-9 * (1.0 + (x0 - c).abs()));
        }
    }
}
