//! Identities, time and sample types shared by every pipeline.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MS_PER_SECOND: u64 = 1_000;
pub const MS_PER_MINUTE: u64 = 60_000;
pub const MS_PER_HOUR: u64 = 3_600_000;
pub const MS_PER_DAY: u64 = 86_400_000;

pub const RSSI_MIN_DBM: f64 = -120.0;
pub const RSSI_MAX_DBM: f64 = 0.0;

const NODE_ID_MAX_LEN: usize = 64;

/// Opaque device identifier, e.g. `USense2`.
///
/// Ordering is lexicographic on the underlying string. Cloning is cheap.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(Arc<str>);

impl NodeId {
    pub fn new(id: impl AsRef<str>) -> Result<Self> {
        let id = id.as_ref();
        let reason = if id.is_empty() {
            Some("empty")
        } else if id.chars().count() > NODE_ID_MAX_LEN {
            Some("longer than 64 characters")
        } else if id.contains([',', '\n', '\r']) {
            Some("contains a comma or line break")
        } else {
            None
        };
        match reason {
            Some(reason) => Err(Error::InvalidNodeId {
                id: id.to_string(),
                reason,
            }),
            None => Ok(NodeId(Arc::from(id))),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NodeId::new(s)
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        NodeId::new(s).map_err(serde::de::Error::custom)
    }
}

/// Orders two distinct ids so that the smaller comes first.
pub fn canonical_pair(a: &NodeId, b: &NodeId) -> Result<(NodeId, NodeId)> {
    match a.cmp(b) {
        std::cmp::Ordering::Less => Ok((a.clone(), b.clone())),
        std::cmp::Ordering::Greater => Ok((b.clone(), a.clone())),
        std::cmp::Ordering::Equal => Err(Error::SelfPair(a.to_string())),
    }
}

/// Unordered pair of distinct nodes, stored low id first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    low: NodeId,
    high: NodeId,
}

impl Pair {
    pub fn new(a: &NodeId, b: &NodeId) -> Result<Self> {
        let (low, high) = canonical_pair(a, b)?;
        Ok(Pair { low, high })
    }

    pub fn low(&self) -> &NodeId {
        &self.low
    }

    pub fn high(&self) -> &NodeId {
        &self.high
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        &self.low == id || &self.high == id
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.low, self.high)
    }
}

/// Milliseconds since the scenario epoch.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Tick(pub u64);

impl Tick {
    pub const ZERO: Tick = Tick(0);

    pub fn ms(self) -> u64 {
        self.0
    }

    pub fn minute(self) -> u64 {
        self.0 / MS_PER_MINUTE
    }

    /// Hour of day, 0..=23.
    pub fn hour_slot(self) -> usize {
        ((self.0 / MS_PER_HOUR) % 24) as usize
    }

    pub fn day(self) -> u64 {
        self.0 / MS_PER_DAY
    }

    /// Last millisecond of `minute`; the instant at which that minute is fused.
    pub fn end_of_minute(minute: u64) -> Tick {
        Tick((minute + 1) * MS_PER_MINUTE - 1)
    }

    pub fn saturating_sub_ms(self, ms: u64) -> Tick {
        Tick(self.0.saturating_sub(ms))
    }
}

impl fmt::Display for Tick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BtSighting {
    pub t: Tick,
    pub observer: NodeId,
    pub subject: NodeId,
    pub rssi_dbm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccelSample {
    pub t: Tick,
    pub node: NodeId,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl AccelSample {
    pub fn magnitude(&self) -> f64 {
        (self.ax * self.ax + self.ay * self.ay + self.az * self.az).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SoundSample {
    pub t: Tick,
    pub node: NodeId,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SensorSample {
    Bt(BtSighting),
    Accel(AccelSample),
    Sound(SoundSample),
}

impl SensorSample {
    pub fn t(&self) -> Tick {
        match self {
            SensorSample::Bt(s) => s.t,
            SensorSample::Accel(s) => s.t,
            SensorSample::Sound(s) => s.t,
        }
    }

    pub fn kind(&self) -> SensorKind {
        match self {
            SensorSample::Bt(_) => SensorKind::Bluetooth,
            SensorSample::Accel(_) => SensorKind::Accelerometer,
            SensorSample::Sound(_) => SensorKind::Microphone,
        }
    }

    /// Node whose sensor produced the sample.
    pub fn node(&self) -> &NodeId {
        match self {
            SensorSample::Bt(s) => &s.observer,
            SensorSample::Accel(s) => &s.node,
            SensorSample::Sound(s) => &s.node,
        }
    }
}

impl From<BtSighting> for SensorSample {
    fn from(s: BtSighting) -> Self {
        SensorSample::Bt(s)
    }
}

impl From<AccelSample> for SensorSample {
    fn from(s: AccelSample) -> Self {
        SensorSample::Accel(s)
    }
}

impl From<SoundSample> for SensorSample {
    fn from(s: SoundSample) -> Self {
        SensorSample::Sound(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SensorKind {
    Bluetooth,
    Accelerometer,
    Microphone,
}

/// Motion state of a node. The numeric code divides the fusion scores, so
/// stationary is neutral.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Motion {
    #[default]
    Stationary,
    Moving,
}

impl Motion {
    pub fn code(self) -> u8 {
        match self {
            Motion::Stationary => 1,
            Motion::Moving => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Motion::Stationary),
            2 => Some(Motion::Moving),
            _ => None,
        }
    }

    pub fn factor<T: Real>(self) -> T {
        T::lit(f64::from(self.code()))
    }
}

/// Environmental sound class `v`.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum SoundClass {
    #[default]
    Quiet,
    Normal,
    Alert,
    Noisy,
}

impl SoundClass {
    pub const ALL: [SoundClass; 4] = [
        SoundClass::Quiet,
        SoundClass::Normal,
        SoundClass::Alert,
        SoundClass::Noisy,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(usize::from(code)).copied()
    }
}

/// Qualitative nearness level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Nearness {
    Low,
    Avg,
    High,
}

impl Nearness {
    pub fn from_level(level: u8) -> Self {
        match level {
            0 => Nearness::Low,
            1 => Nearness::Avg,
            _ => Nearness::High,
        }
    }

    pub fn level(self) -> u8 {
        self as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Nearness::Low => "Low",
            Nearness::Avg => "Avg",
            Nearness::High => "High",
        }
    }
}

impl FromStr for Nearness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Low" => Ok(Nearness::Low),
            "Avg" => Ok(Nearness::Avg),
            "High" => Ok(Nearness::High),
            _ => Err(Error::Domain(format!("unknown nearness label {s:?}"))),
        }
    }
}

/// Relative distance estimate, or the absence of a fresh one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distance<T> {
    Meters(T),
    OutOfRange,
}

impl<T: Real> Distance<T> {
    pub fn meters(self) -> Option<T> {
        match self {
            Distance::Meters(d) => Some(d),
            Distance::OutOfRange => None,
        }
    }

    pub fn is_out_of_range(self) -> bool {
        matches!(self, Distance::OutOfRange)
    }

    /// Encoding used in files: out of range becomes `+inf`.
    pub fn to_real(self) -> T {
        self.meters().unwrap_or_else(T::infinity)
    }

    pub fn from_real(x: T) -> Self {
        if x.is_infinite() && x > T::zero() {
            Distance::OutOfRange
        } else {
            Distance::Meters(x)
        }
    }
}

/// The only artifact the engine persists: one row per ordered pair and
/// minute.
#[derive(Clone, Debug, PartialEq)]
pub struct MinuteRecord {
    pub minute: u64,
    pub i: NodeId,
    pub j: NodeId,
    pub n_i: u32,
    pub m_i: Motion,
    pub v_i: SoundClass,
    pub d_ij: Distance<f64>,
    pub s_ij: f64,
    pub p_ij: f64,
    pub si_ij: f64,
    pub nearness: Nearness,
}

impl MinuteRecord {
    /// Checks the cross-field invariants of a record.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: &str| {
            Err(Error::Validation(format!(
                "minute record {}: {msg}",
                self.minute
            )))
        };
        if self.i == self.j {
            return bad("i equals j");
        }
        if let Distance::Meters(d) = self.d_ij {
            if !(d >= 0.0) || !d.is_finite() {
                return bad("distance must be finite and non-negative");
            }
        }
        for (name, x) in [("s", self.s_ij), ("p", self.p_ij), ("si", self.si_ij)] {
            if !(x >= 0.0) || !x.is_finite() {
                return bad(&format!("{name} must be finite and non-negative"));
            }
        }
        if (self.d_ij.is_out_of_range() || self.s_ij == 0.0)
            && (self.p_ij != 0.0 || self.si_ij != 0.0)
        {
            return bad("p and si must vanish when out of range or without social strength");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    NonMonotone,
    OutOfRange,
    SelfSighting,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// Position of the offending sample in the validated sequence.
    pub index: usize,
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_accepted(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    pub fn into_result(self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(first) => Err(Error::Validation(format!(
                "{} violation(s); first at sample {}: {}",
                self.violations.len(),
                first.index,
                first.message
            ))),
        }
    }
}

/// Incremental validator; [`validate_stream`] runs it over a slice.
#[derive(Debug, Default)]
pub struct StreamValidator {
    last: HashMap<(NodeId, SensorKind), Tick>,
    report: ValidationReport,
}

impl StreamValidator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Checks one sample; returns whether it was clean.
    pub fn check(&mut self, sample: &SensorSample) -> bool {
        let index = self.report.checked;
        self.report.checked += 1;
        let before = self.report.violations.len();
        let mut flag = |kind, message: String| {
            self.report.violations.push(Violation {
                index,
                kind,
                message,
            })
        };

        match sample {
            SensorSample::Bt(s) => {
                if !(RSSI_MIN_DBM..=RSSI_MAX_DBM).contains(&s.rssi_dbm) {
                    flag(
                        ViolationKind::OutOfRange,
                        format!("rssi {} dBm outside [-120, 0]", s.rssi_dbm),
                    );
                }
                if s.observer == s.subject {
                    flag(
                        ViolationKind::SelfSighting,
                        format!("{} sighted itself", s.observer),
                    );
                }
            }
            SensorSample::Accel(s) => {
                if ![s.ax, s.ay, s.az].iter().all(|x| x.is_finite()) {
                    flag(ViolationKind::OutOfRange, "non-finite acceleration".into());
                }
            }
            SensorSample::Sound(s) => {
                if !(0.0..=1.0).contains(&s.amplitude) {
                    flag(
                        ViolationKind::OutOfRange,
                        format!("amplitude {} outside [0, 1]", s.amplitude),
                    );
                }
            }
        }

        let key = (sample.node().clone(), sample.kind());
        let t = sample.t();
        if let Some(prev) = self.last.get(&key) {
            if t < *prev {
                flag(
                    ViolationKind::NonMonotone,
                    format!(
                        "{:?} stream of {} goes back from {} to {}",
                        key.1, key.0, prev, t
                    ),
                );
            }
        }
        let slot = self.last.entry(key).or_insert(t);
        *slot = (*slot).max(t);

        self.report.violations.len() == before
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn finish(self) -> ValidationReport {
        self.report
    }
}

pub fn validate_stream<'a>(
    samples: impl IntoIterator<Item = &'a SensorSample>,
) -> ValidationReport {
    let mut v = StreamValidator::new();
    for s in samples {
        v.check(s);
    }
    v.finish()
}
