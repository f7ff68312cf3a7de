//! Environmental sound: peak amplitude in a short window mapped to a level
//! in dB and then to one of four classes.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::domain::{SoundClass, SoundSample, Tick, MS_PER_MINUTE};
use crate::scalar::Real;

/// Amplitudes below this are treated as this value (-100 dB).
pub const AMPLITUDE_FLOOR: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SoundParams {
    pub window_ms: u64,
    /// Levels below this are quiet.
    pub normal_from_db: f64,
    pub alert_from_db: f64,
    pub noisy_from_db: f64,
}

impl Default for SoundParams {
    fn default() -> Self {
        SoundParams {
            window_ms: 1_000,
            normal_from_db: -60.0,
            alert_from_db: -30.0,
            noisy_from_db: -10.0,
        }
    }
}

pub fn level_db<T: Real>(amplitude: T) -> T {
    T::lit(20.0) * amplitude.max(T::lit(AMPLITUDE_FLOOR)).log10()
}

pub fn classify_level<T: Real>(level_db: T, params: &SoundParams) -> SoundClass {
    if level_db < T::lit(params.normal_from_db) {
        SoundClass::Quiet
    } else if level_db < T::lit(params.alert_from_db) {
        SoundClass::Normal
    } else if level_db < T::lit(params.noisy_from_db) {
        SoundClass::Alert
    } else {
        SoundClass::Noisy
    }
}

/// Level and class of a window; `None` for an empty window.
pub fn classify_sound(window: &[SoundSample], params: &SoundParams) -> Option<(f64, SoundClass)> {
    let peak = window.iter().map(|s| s.amplitude).reduce(f64::max)?;
    let db = level_db(peak);
    Some((db, classify_level(db, params)))
}

/// Classifies each minute of one node from the window that closes it.
#[derive(Clone, Debug)]
pub struct SoundTracker {
    params: SoundParams,
    minute: Option<u64>,
    window: Vec<SoundSample>,
    classes: BTreeMap<u64, SoundClass>,
}

impl SoundTracker {
    pub fn new(params: SoundParams) -> Self {
        SoundTracker {
            params,
            minute: None,
            window: Vec::new(),
            classes: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, s: &SoundSample) {
        let m = s.t.minute();
        if self.minute != Some(m) {
            self.close();
            self.minute = Some(m);
        }
        let window_start = Tick::end_of_minute(m).0 + 1 - self.params.window_ms.min(MS_PER_MINUTE);
        if s.t.0 >= window_start {
            self.window.push(s.clone());
        }
    }

    fn close(&mut self) {
        if let (Some(m), Some((_, class))) =
            (self.minute, classify_sound(&self.window, &self.params))
        {
            self.classes.insert(m, class);
        }
        self.window.clear();
    }

    pub fn finish(mut self) -> BTreeMap<u64, SoundClass> {
        self.close();
        self.classes
    }
}
