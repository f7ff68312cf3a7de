//! Deterministic multi-agent trace generator.
//!
//! Agents follow scripted piecewise-linear waypoints. Every
//! `scan_interval_ms` each agent scans for the others and reports an RSSI
//! drawn from a log-distance path-loss model with Gaussian shadowing;
//! accelerometers sample at 20 Hz and microphones at 1 Hz.
//!
//! Random draws come from ChaCha8 substreams keyed by (seed, agent, sensor,
//! block), where a block is one minute for accelerometer and sound and one
//! scan for Bluetooth. Any subset of blocks can therefore be generated in
//! any order, or in parallel, with identical output.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{
    AccelSample, BtSighting, Motion, NodeId, SoundSample, Tick, MS_PER_MINUTE, RSSI_MAX_DBM,
    RSSI_MIN_DBM,
};
use crate::error::{Error, Result};
use crate::ingest::TraceSet;
use crate::scalar::Real;

pub const ACCEL_PERIOD_MS: u64 = 50;
pub const SOUND_PERIOD_MS: u64 = 1_000;
pub const GRAVITY: f64 = 9.81;
/// Vertical oscillation added while an agent walks.
pub const GAIT_FREQ_HZ: f64 = 2.0;
pub const GAIT_AMPLITUDE: f64 = 2.0;
/// Positions closer than this are treated as this far apart by the radio
/// model, which is undefined at zero distance.
pub const MIN_RADIO_DISTANCE_M: f64 = 0.1;

/// Log-distance path-loss parameters.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfParams<T> {
    /// Received power at the 1 m reference distance.
    pub p_ref_dbm: T,
    pub pathloss_exp: T,
    pub shadowing_sigma_db: T,
    pub scan_interval_ms: u64,
    pub max_range_m: T,
}

impl<T: Real> Default for RfParams<T> {
    fn default() -> Self {
        RfParams {
            p_ref_dbm: T::lit(-40.0),
            pathloss_exp: T::lit(2.7),
            shadowing_sigma_db: T::zero(),
            scan_interval_ms: 60_000,
            max_range_m: T::lit(30.0),
        }
    }
}

impl<T: Real> RfParams<T> {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let field = |name: &str| format!("{prefix}{name}");
        if !(self.p_ref_dbm.is_finite()) {
            return Err(Error::config(field("p_ref_dbm"), "must be finite"));
        }
        if !(self.pathloss_exp > T::zero()) || !self.pathloss_exp.is_finite() {
            return Err(Error::config(field("pathloss_exp"), "must be > 0"));
        }
        if !(self.shadowing_sigma_db >= T::zero()) || !self.shadowing_sigma_db.is_finite() {
            return Err(Error::config(field("shadowing_sigma_db"), "must be >= 0"));
        }
        if self.scan_interval_ms == 0 {
            return Err(Error::config(field("scan_interval_ms"), "must be > 0"));
        }
        if !(self.max_range_m > T::zero()) || !self.max_range_m.is_finite() {
            return Err(Error::config(field("max_range_m"), "must be > 0"));
        }
        Ok(())
    }
}

/// RSSI seen at distance `d` under the path-loss model, plus a shadowing
/// draw in dB, clamped to the valid RSSI range.
pub fn rssi_from_distance<T: Real>(d: T, rf: &RfParams<T>, noise_db: T) -> Result<T> {
    if !(d > T::zero()) {
        return Err(Error::Domain(format!("distance must be > 0, got {d}")));
    }
    let ten = T::lit(10.0);
    let rssi = rf.p_ref_dbm - ten * rf.pathloss_exp * d.log10() + noise_db;
    Ok(rssi.max(T::lit(RSSI_MIN_DBM)).min(T::lit(RSSI_MAX_DBM)))
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t_ms: u64,
    pub x: f64,
    pub y: f64,
}

/// Microphone amplitude held over `[from_ms, to_ms)`.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SoundSpan {
    pub from_ms: u64,
    pub to_ms: u64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub id: NodeId,
    pub waypoints: Vec<Waypoint>,
    #[serde(default)]
    pub sound: Vec<SoundSpan>,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    pub duration_ms: u64,
    #[serde(default = "default_accel_noise")]
    pub accel_noise_sigma: f64,
    #[serde(default)]
    pub rf: RfParams<f64>,
    #[serde(rename = "agent", default)]
    pub agents: Vec<AgentConfig>,
}

fn default_accel_noise() -> f64 {
    0.1
}

impl ScenarioConfig {
    /// Checks every invariant, reporting the first failure with its field path.
    pub fn validate(&self) -> Result<()> {
        if self.duration_ms == 0 {
            return Err(Error::config("duration_ms", "must be > 0"));
        }
        if !(self.accel_noise_sigma >= 0.0) || !self.accel_noise_sigma.is_finite() {
            return Err(Error::config("accel_noise_sigma", "must be >= 0"));
        }
        self.rf.validate("rf.")?;

        let mut seen = HashMap::new();
        for (a, agent) in self.agents.iter().enumerate() {
            if let Some(prev) = seen.insert(agent.id.clone(), a) {
                return Err(Error::config(
                    format!("agent[{a}].id"),
                    format!("duplicate of agent[{prev}]"),
                ));
            }
            let Some(first) = agent.waypoints.first() else {
                return Err(Error::config(
                    format!("agent[{a}].waypoints"),
                    "at least one waypoint required",
                ));
            };
            if first.t_ms != 0 {
                return Err(Error::config(
                    format!("agent[{a}].waypoints[0].t_ms"),
                    "first waypoint must be at t=0",
                ));
            }
            for (k, w) in agent.waypoints.iter().enumerate() {
                if !w.x.is_finite() || !w.y.is_finite() {
                    return Err(Error::config(
                        format!("agent[{a}].waypoints[{k}]"),
                        "coordinates must be finite",
                    ));
                }
                if k > 0 && w.t_ms < agent.waypoints[k - 1].t_ms {
                    return Err(Error::config(
                        format!("agent[{a}].waypoints[{k}].t_ms"),
                        "waypoints must be time-sorted",
                    ));
                }
            }
            for (k, s) in agent.sound.iter().enumerate() {
                let path = |f: &str| format!("agent[{a}].sound[{k}].{f}");
                if s.from_ms >= s.to_ms {
                    return Err(Error::config(path("to_ms"), "must be greater than from_ms"));
                }
                if s.to_ms > self.duration_ms {
                    return Err(Error::config(path("to_ms"), "beyond duration_ms"));
                }
                if !(0.0..=1.0).contains(&s.amplitude) {
                    return Err(Error::config(path("amplitude"), "must lie in [0, 1]"));
                }
            }
        }
        Ok(())
    }

    pub fn minutes(&self) -> u64 {
        self.duration_ms.div_ceil(MS_PER_MINUTE)
    }
}

/// Position, motion and sound oracle for one agent.
#[derive(Clone, Debug)]
pub struct AgentTrack {
    waypoints: Vec<Waypoint>,
    sound: Vec<SoundSpan>,
}

impl AgentTrack {
    fn segment(&self, t: u64) -> usize {
        // index of the last waypoint at or before t
        self.waypoints
            .partition_point(|w| w.t_ms <= t)
            .saturating_sub(1)
    }

    pub fn position(&self, t: Tick) -> (f64, f64) {
        let k = self.segment(t.0);
        let a = &self.waypoints[k];
        match self.waypoints.get(k + 1) {
            Some(b) if b.t_ms > a.t_ms => {
                let f = (t.0 - a.t_ms) as f64 / (b.t_ms - a.t_ms) as f64;
                (a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))
            }
            _ => (a.x, a.y),
        }
    }

    pub fn motion(&self, t: Tick) -> Motion {
        let k = self.segment(t.0);
        let a = &self.waypoints[k];
        match self.waypoints.get(k + 1) {
            Some(b) if b.t_ms > a.t_ms && (b.x != a.x || b.y != a.y) => Motion::Moving,
            _ => Motion::Stationary,
        }
    }

    /// Scheduled amplitude; the last matching span wins, silence otherwise.
    pub fn amplitude(&self, t: Tick) -> f64 {
        self.sound
            .iter()
            .rev()
            .find(|s| s.from_ms <= t.0 && t.0 < s.to_ms)
            .map_or(0.0, |s| s.amplitude)
    }
}

#[derive(Clone, Debug)]
pub struct GroundTruth {
    ids: Vec<NodeId>,
    tracks: HashMap<NodeId, AgentTrack>,
}

impl GroundTruth {
    fn new(cfg: &ScenarioConfig) -> Self {
        GroundTruth {
            ids: cfg.agents.iter().map(|a| a.id.clone()).collect(),
            tracks: cfg
                .agents
                .iter()
                .map(|a| {
                    (
                        a.id.clone(),
                        AgentTrack {
                            waypoints: a.waypoints.clone(),
                            sound: a.sound.clone(),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn agents(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn track(&self, id: &NodeId) -> Result<&AgentTrack> {
        self.tracks
            .get(id)
            .ok_or_else(|| Error::UnknownAgent(id.to_string()))
    }

    pub fn true_distance(&self, i: &NodeId, j: &NodeId, t: Tick) -> Result<f64> {
        let (xi, yi) = self.track(i)?.position(t);
        let (xj, yj) = self.track(j)?.position(t);
        Ok((xi - xj).hypot(yi - yj))
    }

    pub fn motion(&self, i: &NodeId, t: Tick) -> Result<Motion> {
        Ok(self.track(i)?.motion(t))
    }

    pub fn amplitude(&self, i: &NodeId, t: Tick) -> Result<f64> {
        Ok(self.track(i)?.amplitude(t))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
enum Stream {
    Bluetooth = 1,
    Accel = 2,
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn substream(seed: u64, agent: usize, stream: Stream, block: u64) -> ChaCha8Rng {
    let mut k = mix(seed ^ 0x6e73_656e_7365_0001);
    k = mix(k ^ agent as u64);
    k = mix(k ^ stream as u64);
    k = mix(k ^ block);
    ChaCha8Rng::seed_from_u64(k)
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * sigma
}

/// Validated scenario ready to emit samples.
#[derive(Clone, Debug)]
pub struct Simulator {
    cfg: ScenarioConfig,
    truth: GroundTruth,
}

impl Simulator {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let truth = GroundTruth::new(&cfg);
        Ok(Simulator { cfg, truth })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn ground_truth(&self) -> &GroundTruth {
        &self.truth
    }

    pub fn agents(&self) -> &[NodeId] {
        self.truth.agents()
    }

    fn track(&self, agent: usize) -> &AgentTrack {
        &self.truth.tracks[&self.truth.ids[agent]]
    }

    /// Accelerometer samples of one agent with `t` in `[from_ms, to_ms)`.
    pub fn accel_for_agent(
        &self,
        agent: usize,
        from_ms: u64,
        to_ms: u64,
    ) -> impl Iterator<Item = AccelSample> + '_ {
        let id = self.truth.ids[agent].clone();
        let track = self.track(agent);
        let sigma = self.cfg.accel_noise_sigma;
        let seed = self.cfg.seed;
        let to_ms = to_ms.min(self.cfg.duration_ms);
        let first_minute = from_ms / MS_PER_MINUTE;
        let last_minute = to_ms.div_ceil(MS_PER_MINUTE);
        (first_minute..last_minute).flat_map(move |minute| {
            let mut rng = substream(seed, agent, Stream::Accel, minute);
            let id = id.clone();
            let start = minute * MS_PER_MINUTE;
            (0..MS_PER_MINUTE / ACCEL_PERIOD_MS).filter_map(move |k| {
                let t = start + k * ACCEL_PERIOD_MS;
                // draws are consumed for every slot so the block stays aligned
                let (nx, ny, nz) = (
                    gaussian(&mut rng, sigma),
                    gaussian(&mut rng, sigma),
                    gaussian(&mut rng, sigma),
                );
                if t < from_ms || t >= to_ms {
                    return None;
                }
                let gait = match track.motion(Tick(t)) {
                    Motion::Moving => {
                        let secs = t as f64 / 1000.0;
                        GAIT_AMPLITUDE * (2.0 * std::f64::consts::PI * GAIT_FREQ_HZ * secs).sin()
                    }
                    Motion::Stationary => 0.0,
                };
                Some(AccelSample {
                    t: Tick(t),
                    node: id.clone(),
                    ax: nx,
                    ay: ny,
                    az: GRAVITY + gait + nz,
                })
            })
        })
    }

    /// Microphone samples of one agent with `t` in `[from_ms, to_ms)`.
    pub fn sound_for_agent(
        &self,
        agent: usize,
        from_ms: u64,
        to_ms: u64,
    ) -> impl Iterator<Item = SoundSample> + '_ {
        let id = self.truth.ids[agent].clone();
        let track = self.track(agent);
        let to_ms = to_ms.min(self.cfg.duration_ms);
        let first = from_ms.div_ceil(SOUND_PERIOD_MS);
        let last = to_ms.div_ceil(SOUND_PERIOD_MS);
        (first..last).map(move |k| {
            let t = Tick(k * SOUND_PERIOD_MS);
            SoundSample {
                t,
                node: id.clone(),
                amplitude: track.amplitude(t),
            }
        })
    }

    /// Sightings reported by every observer during one scan, ordered by
    /// (observer, subject) in configuration order.
    fn scan(&self, scan: u64) -> Vec<BtSighting> {
        let t = Tick(scan * self.cfg.rf.scan_interval_ms);
        let rf = &self.cfg.rf;
        let n = self.truth.ids.len();
        let mut out = Vec::new();
        for obs in 0..n {
            let mut rng = substream(self.cfg.seed, obs, Stream::Bluetooth, scan);
            for sub in 0..n {
                if sub == obs {
                    continue;
                }
                let noise = gaussian(&mut rng, rf.shadowing_sigma_db);
                let (ido, ids) = (&self.truth.ids[obs], &self.truth.ids[sub]);
                let d = self
                    .truth
                    .true_distance(ido, ids, t)
                    .expect("configured agents");
                if d > rf.max_range_m {
                    continue;
                }
                let rssi = rssi_from_distance(d.max(MIN_RADIO_DISTANCE_M), rf, noise)
                    .expect("distance clamped positive");
                out.push(BtSighting {
                    t,
                    observer: ido.clone(),
                    subject: ids.clone(),
                    rssi_dbm: rssi,
                });
            }
        }
        out
    }

    /// All sightings with `t` in `[from_ms, to_ms)`, sorted by (t, observer, subject).
    pub fn sightings(&self, from_ms: u64, to_ms: u64) -> impl Iterator<Item = BtSighting> + '_ {
        let step = self.cfg.rf.scan_interval_ms;
        let to_ms = to_ms.min(self.cfg.duration_ms);
        (from_ms.div_ceil(step)..to_ms.div_ceil(step)).flat_map(move |scan| {
            let mut batch = self.scan(scan);
            batch.sort_by(|a, b| (&a.observer, &a.subject).cmp(&(&b.observer, &b.subject)));
            batch
        })
    }

    /// Every sample with `t` in `[from_ms, to_ms)`, each sequence sorted by
    /// time and then node.
    pub fn window(&self, from_ms: u64, to_ms: u64) -> TraceSet {
        let n = self.truth.ids.len();
        let mut accel: Vec<AccelSample> = (0..n)
            .flat_map(|a| self.accel_for_agent(a, from_ms, to_ms))
            .collect();
        accel.sort_by(|a, b| (a.t, &a.node).cmp(&(b.t, &b.node)));
        let mut sound: Vec<SoundSample> = (0..n)
            .flat_map(|a| self.sound_for_agent(a, from_ms, to_ms))
            .collect();
        sound.sort_by(|a, b| (a.t, &a.node).cmp(&(b.t, &b.node)));
        TraceSet {
            sightings: self.sightings(from_ms, to_ms).collect(),
            accel,
            sound,
        }
    }

    /// Whole-run traces split into consecutive windows of `chunk_ms`;
    /// concatenating the chunks gives [`Simulator::window`] over the run.
    pub fn chunks(&self, chunk_ms: u64) -> impl Iterator<Item = TraceSet> + '_ {
        assert!(chunk_ms > 0);
        let end = self.cfg.duration_ms;
        (0..end.div_ceil(chunk_ms))
            .map(move |c| self.window(c * chunk_ms, ((c + 1) * chunk_ms).min(end)))
    }
}

/// Materializes the complete trace set of a scenario.
pub fn generate(config: ScenarioConfig) -> Result<(TraceSet, GroundTruth)> {
    let sim = Simulator::new(config)?;
    let traces = sim.window(0, sim.cfg.duration_ms);
    Ok((traces, sim.truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    fn fixed(name: &str, x: f64, y: f64) -> AgentConfig {
        AgentConfig {
            id: id(name),
            waypoints: vec![Waypoint { t_ms: 0, x, y }],
            sound: vec![],
        }
    }

    fn config(agents: Vec<AgentConfig>) -> ScenarioConfig {
        ScenarioConfig {
            name: "t".into(),
            seed: 9,
            duration_ms: 10 * MS_PER_MINUTE,
            accel_noise_sigma: 0.1,
            rf: RfParams::default(),
            agents,
        }
    }

    #[test]
    fn rssi_model_examples() {
        let rf = RfParams::<f64>::default();
        assert_relative_eq!(rssi_from_distance(1.0, &rf, 0.0).unwrap(), -40.0);
        assert_relative_eq!(
            rssi_from_distance(10.0, &rf, 0.0).unwrap(),
            -67.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            rssi_from_distance(100.0, &rf, 0.0).unwrap(),
            -94.0,
            epsilon = 1e-12
        );
        assert_eq!(rssi_from_distance(1e9, &rf, 0.0).unwrap(), -120.0);
        assert_eq!(rssi_from_distance(1.0, &rf, 80.0).unwrap(), 0.0);
        assert!(rssi_from_distance(0.0, &rf, 0.0).is_err());
        assert!(rssi_from_distance(-1.0, &rf, 0.0).is_err());
        let rf32 = RfParams::<f32>::default();
        assert_relative_eq!(
            rssi_from_distance(10.0f32, &rf32, 0.0).unwrap(),
            -67.0,
            epsilon = 1e-4
        );
    }

    #[test]
    fn reference_distance_sightings() {
        let (traces, _) =
            generate(config(vec![fixed("a", 0.0, 0.0), fixed("b", 1.0, 0.0)])).unwrap();
        assert_eq!(traces.sightings.len(), 20);
        assert!(traces.sightings.iter().all(|s| s.rssi_dbm == -40.0));
    }

    #[test]
    fn single_agent_has_no_sightings() {
        let (traces, _) = generate(config(vec![fixed("a", 0.0, 0.0)])).unwrap();
        assert!(traces.sightings.is_empty());
        assert_eq!(traces.accel.len(), 10 * 1200);
        assert_eq!(traces.sound.len(), 10 * 60);
    }

    #[test]
    fn out_of_range_pairs_are_silent() {
        let (traces, _) =
            generate(config(vec![fixed("a", 0.0, 0.0), fixed("b", 30.5, 0.0)])).unwrap();
        assert!(traces.sightings.is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let mut cfg = config(vec![fixed("a", 0.0, 0.0), fixed("b", 5.0, 0.0)]);
        cfg.rf.shadowing_sigma_db = 2.0;
        let (a, _) = generate(cfg.clone()).unwrap();
        let (b, _) = generate(cfg.clone()).unwrap();
        assert_eq!(a, b);
        cfg.seed += 1;
        let (c, _) = generate(cfg).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn chunking_does_not_change_output() {
        let mut cfg = config(vec![fixed("a", 0.0, 0.0), fixed("b", 5.0, 0.0)]);
        cfg.rf.shadowing_sigma_db = 2.0;
        cfg.rf.scan_interval_ms = 7_000;
        let sim = Simulator::new(cfg).unwrap();
        let whole = sim.window(0, sim.config().duration_ms);
        let mut joined = TraceSet::default();
        for c in sim.chunks(45_000) {
            joined.sightings.extend(c.sightings);
            joined.accel.extend(c.accel);
            joined.sound.extend(c.sound);
        }
        assert_eq!(whole, joined);
    }

    #[test]
    fn noiseless_sightings_are_symmetric() {
        let mut cfg = config(vec![
            fixed("a", 0.0, 0.0),
            AgentConfig {
                id: id("b"),
                waypoints: vec![
                    Waypoint {
                        t_ms: 0,
                        x: 1.0,
                        y: 0.0,
                    },
                    Waypoint {
                        t_ms: 600_000,
                        x: 25.0,
                        y: 3.0,
                    },
                ],
                sound: vec![],
            },
        ]);
        cfg.rf.scan_interval_ms = 10_000;
        let (traces, _) = generate(cfg).unwrap();
        let mut by_t: HashMap<(u64, bool), f64> = HashMap::new();
        for s in &traces.sightings {
            by_t.insert((s.t.0, s.observer.as_str() == "a"), s.rssi_dbm);
        }
        for s in &traces.sightings {
            assert_eq!(by_t[&(s.t.0, true)], by_t[&(s.t.0, false)]);
        }
    }

    #[test]
    fn true_distance_examples() {
        let cfg = config(vec![
            fixed("i", 0.0, 0.0),
            fixed("j", 3.0, 4.0),
            fixed("k", 0.0, 0.0),
            AgentConfig {
                id: id("mover"),
                waypoints: vec![
                    Waypoint {
                        t_ms: 0,
                        x: 0.0,
                        y: 0.0,
                    },
                    Waypoint {
                        t_ms: 10_000,
                        x: 10.0,
                        y: 0.0,
                    },
                ],
                sound: vec![],
            },
        ]);
        let sim = Simulator::new(cfg).unwrap();
        let gt = sim.ground_truth();
        assert_eq!(gt.true_distance(&id("i"), &id("j"), Tick(0)).unwrap(), 5.0);
        assert_eq!(gt.true_distance(&id("i"), &id("k"), Tick(0)).unwrap(), 0.0);
        assert_eq!(
            gt.true_distance(&id("mover"), &id("i"), Tick(5_000))
                .unwrap(),
            5.0
        );
        assert_eq!(
            gt.true_distance(&id("mover"), &id("i"), Tick(60_000))
                .unwrap(),
            10.0
        );
        assert!(gt.true_distance(&id("i"), &id("nobody"), Tick(0)).is_err());
        assert_eq!(
            gt.motion(&id("mover"), Tick(5_000)).unwrap(),
            Motion::Moving
        );
        assert_eq!(
            gt.motion(&id("mover"), Tick(10_000)).unwrap(),
            Motion::Stationary
        );
        assert_eq!(
            gt.motion(&id("i"), Tick(5_000)).unwrap(),
            Motion::Stationary
        );
    }

    #[test]
    fn gait_is_vertical() {
        let mut cfg = config(vec![AgentConfig {
            id: id("w"),
            waypoints: vec![
                Waypoint {
                    t_ms: 0,
                    x: 0.0,
                    y: 0.0,
                },
                Waypoint {
                    t_ms: 600_000,
                    x: 100.0,
                    y: 0.0,
                },
            ],
            sound: vec![],
        }]);
        cfg.accel_noise_sigma = 0.0;
        let (traces, _) = generate(cfg).unwrap();
        let s = &traces.accel[3];
        assert_eq!(s.t, Tick(150));
        assert_relative_eq!(
            s.az,
            GRAVITY + 2.0 * (0.6 * std::f64::consts::PI).sin(),
            epsilon = 1e-12
        );
        assert_eq!((s.ax, s.ay), (0.0, 0.0));
    }

    #[test]
    fn sound_schedule_applies() {
        let mut cfg = config(vec![fixed("a", 0.0, 0.0)]);
        cfg.agents[0].sound = vec![
            SoundSpan {
                from_ms: 0,
                to_ms: 120_000,
                amplitude: 0.01,
            },
            SoundSpan {
                from_ms: 60_000,
                to_ms: 120_000,
                amplitude: 0.5,
            },
        ];
        let (traces, gt) = generate(cfg).unwrap();
        assert_eq!(traces.sound[0].amplitude, 0.01);
        assert_eq!(traces.sound[60].amplitude, 0.5);
        assert_eq!(traces.sound[120].amplitude, 0.0);
        assert_eq!(gt.amplitude(&id("a"), Tick(61_000)).unwrap(), 0.5);
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let mut cfg = config(vec![fixed("a", 0.0, 0.0), fixed("b", 1.0, 0.0)]);
        cfg.agents[1].waypoints.push(Waypoint {
            t_ms: 5,
            x: 0.0,
            y: 0.0,
        });
        cfg.agents[1].waypoints.push(Waypoint {
            t_ms: 4,
            x: 0.0,
            y: 0.0,
        });
        let err = Simulator::new(cfg.clone()).unwrap_err().to_string();
        assert!(err.starts_with("agent[1].waypoints[2].t_ms"), "{err}");

        cfg.agents[1].waypoints.truncate(1);
        cfg.agents[1].waypoints[0].t_ms = 3;
        let err = Simulator::new(cfg.clone()).unwrap_err().to_string();
        assert!(err.starts_with("agent[1].waypoints[0].t_ms"), "{err}");

        cfg.agents[1].waypoints[0].t_ms = 0;
        cfg.rf.pathloss_exp = 0.0;
        let err = Simulator::new(cfg.clone()).unwrap_err().to_string();
        assert!(err.starts_with("rf.pathloss_exp"), "{err}");

        cfg.rf.pathloss_exp = 2.7;
        cfg.agents[0].sound.push(SoundSpan {
            from_ms: 0,
            to_ms: cfg.duration_ms + 1,
            amplitude: 0.1,
        });
        let err = Simulator::new(cfg).unwrap_err().to_string();
        assert!(err.starts_with("agent[0].sound[0].to_ms"), "{err}");
    }
}
