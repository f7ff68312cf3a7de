//! Propinquity and social interaction per ordered pair and minute, and the
//! qualitative nearness label derived from both.
//!
//! ```text
//! p  = s / ((d + 1) * m)
//! si = log10(s) * N(v; mu, sigma2) / (log10(d + 10) * m)
//! ```
//!
//! where `N` is the normal density with variance `sigma2`. Both scores are
//! zero when no fresh distance exists; `si` is also zero below `s_floor`.

use crate::domain::{Distance, MinuteRecord, Motion, Nearness, NodeId, SoundClass};
use crate::scalar::Real;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FusionParams<T> {
    /// Variance of the Gaussian sound weighting.
    pub sigma2: T,
    /// Sound class at which social interaction peaks.
    pub mu: T,
    /// Social strength (seconds) below which `si` is zero.
    pub s_floor: T,
}

impl<T: Real> Default for FusionParams<T> {
    fn default() -> Self {
        FusionParams {
            sigma2: T::lit(0.75),
            mu: T::one(),
            s_floor: T::one(),
        }
    }
}

impl<T: Real> FusionParams<T> {
    pub fn sigma(&self) -> T {
        self.sigma2.sqrt()
    }

    /// Normal density of `v` around `mu`.
    pub fn sound_weight(&self, v: T) -> T {
        let two = T::lit(2.0);
        let norm = T::one() / (self.sigma() * (two * T::PI()).sqrt());
        let dv = v - self.mu;
        norm * (-(dv * dv) / (two * self.sigma2)).exp()
    }
}

pub fn propinquity<T: Real>(s: T, d: Distance<T>, m: Motion) -> T {
    match d {
        Distance::OutOfRange => T::zero(),
        _ if s <= T::zero() => T::zero(),
        Distance::Meters(d) => s / ((d + T::one()) * m.factor::<T>()),
    }
}

pub fn social_interaction<T: Real>(
    s: T,
    v: SoundClass,
    d: Distance<T>,
    m: Motion,
    params: &FusionParams<T>,
) -> T {
    social_interaction_at(s, T::lit(f64::from(v.code())), d, m, params)
}

/// Social interaction with a real-valued sound class.
pub fn social_interaction_at<T: Real>(
    s: T,
    v: T,
    d: Distance<T>,
    m: Motion,
    params: &FusionParams<T>,
) -> T {
    match d {
        Distance::OutOfRange => T::zero(),
        _ if s < params.s_floor => T::zero(),
        Distance::Meters(d) => {
            let ten = T::lit(10.0);
            s.log10() * params.sound_weight(v) / ((d + ten).log10() * m.factor::<T>())
        }
    }
}

/// Growing sorted sample of a score, for empirical tercile ranks.
#[derive(Clone, Debug, Default)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn extend(&mut self, batch: impl IntoIterator<Item = f64>) {
        let mut batch: Vec<f64> = batch.into_iter().collect();
        if batch.is_empty() {
            return;
        }
        batch.sort_by(f64::total_cmp);
        let old = std::mem::take(&mut self.values);
        let mut merged = Vec::with_capacity(old.len() + batch.len());
        let (mut a, mut b) = (old.into_iter().peekable(), batch.into_iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(x), Some(y)) => {
                    if x.total_cmp(y).is_le() {
                        merged.push(a.next().unwrap());
                    } else {
                        merged.push(b.next().unwrap());
                    }
                }
                (Some(_), None) => merged.extend(a.by_ref()),
                (None, Some(_)) => merged.extend(b.by_ref()),
                (None, None) => break,
            }
        }
        self.values = merged;
    }

    /// 0, 1 or 2 by which third of the sample lies strictly below `x`.
    pub fn tercile(&self, x: f64) -> u8 {
        let below = self.values.partition_point(|v| v.total_cmp(&x).is_lt());
        let n = self.values.len();
        if 3 * below < n {
            0
        } else if 3 * below < 2 * n {
            1
        } else {
            2
        }
    }
}

/// Distribution of p and si over the records of the run so far.
#[derive(Clone, Debug, Default)]
pub struct SessionStats {
    pub p: SortedSample,
    pub si: SortedSample,
}

/// Labels are provisional until the session holds this many records.
pub const MIN_SESSION_RECORDS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NearnessLabel {
    pub label: Nearness,
    pub provisional: bool,
}

impl SessionStats {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn absorb(&mut self, records: &[MinuteRecord]) {
        self.p.extend(records.iter().map(|r| r.p_ij));
        self.si.extend(records.iter().map(|r| r.si_ij));
    }
}

/// Mean of the two tercile levels, rounded down.
pub fn combine_levels(p_level: u8, si_level: u8) -> Nearness {
    Nearness::from_level((p_level + si_level) / 2)
}

pub fn nearness_label(p: f64, si: f64, stats: &SessionStats) -> NearnessLabel {
    if stats.len() < MIN_SESSION_RECORDS {
        return NearnessLabel {
            label: Nearness::Low,
            provisional: true,
        };
    }
    NearnessLabel {
        label: combine_levels(stats.p.tercile(p), stats.si.tercile(si)),
        provisional: false,
    }
}

/// Pipeline outputs for one ordered pair at one minute, seen from `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairInputs {
    pub i: NodeId,
    pub j: NodeId,
    pub n_i: u32,
    pub m_i: Motion,
    pub v_i: SoundClass,
    pub d_ij: Distance<f64>,
    pub s_ij: f64,
}

/// Scores every pair of the snapshot, labels them against the records of
/// earlier minutes, then adds them to the session. Output is sorted by
/// `(i, j)`.
pub fn fuse_minute(
    snapshot: &[PairInputs],
    minute: u64,
    params: &FusionParams<f64>,
    stats: &mut SessionStats,
) -> Vec<MinuteRecord> {
    let mut records: Vec<MinuteRecord> = snapshot
        .iter()
        .map(|x| {
            let p = propinquity(x.s_ij, x.d_ij, x.m_i);
            let si = social_interaction(x.s_ij, x.v_i, x.d_ij, x.m_i, params);
            MinuteRecord {
                minute,
                i: x.i.clone(),
                j: x.j.clone(),
                n_i: x.n_i,
                m_i: x.m_i,
                v_i: x.v_i,
                d_ij: x.d_ij,
                s_ij: x.s_ij,
                p_ij: p,
                si_ij: si,
                nearness: nearness_label(p, si, stats).label,
            }
        })
        .collect();
    records.sort_by(|a, b| (&a.i, &a.j).cmp(&(&b.i, &b.j)));
    stats.absorb(&records);
    records
}
