//! Run orchestration: sensor streams in, minute records out.
//!
//! A run has two phases. Extraction turns the raw streams into per-minute
//! motion and sound labels per node and a time-sorted sighting list; the
//! motion and sound pipelines are independent per node and run in parallel.
//! Fusion then walks the minutes in order, advancing the proximity,
//! distance and degree pipelines to the end of each minute and scoring
//! every pair that has ever been in contact. Raw samples are dropped after
//! extraction; only minute records reach the sink.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{
    AccelSample, BtSighting, MinuteRecord, Motion, NodeId, Pair, SensorSample, SoundClass,
    SoundSample, StreamValidator, Tick,
};
use crate::error::Result;
use crate::fusion::{fuse_minute, FusionParams, PairInputs, SessionStats};
use crate::ingest::{TracePaths, TraceRows, TraceSet};
use crate::pipelines::{
    ContactTracker, DegreeTracker, DistanceTracker, MotionTracker, PipelineParams,
    SocialStrengthState, SoundTracker,
};
use crate::simulator::{RfParams, Simulator};

/// Receives the records of each fused minute, in minute order.
pub trait RecordSink {
    fn accept(&mut self, minute: u64, records: &[MinuteRecord]) -> Result<()>;
}

impl RecordSink for Vec<MinuteRecord> {
    fn accept(&mut self, _minute: u64, records: &[MinuteRecord]) -> Result<()> {
        self.extend_from_slice(records);
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EngineParams {
    pub pipelines: PipelineParams,
    pub fusion: FusionParams<f64>,
    /// Radio model the distance pipeline inverts.
    pub rf: RfParams<f64>,
}

/// Per-node labels keyed by minute.
pub type Labels<L> = BTreeMap<NodeId, BTreeMap<u64, L>>;

/// Everything fusion needs from the raw streams.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineOutputs {
    /// Number of minutes to fuse, starting at minute 0.
    pub minutes: u64,
    /// Sorted by (t, observer, subject).
    pub sightings: Vec<BtSighting>,
    pub motion: Labels<Motion>,
    pub sound: Labels<SoundClass>,
}

/// Label in force at `minute`: the latest one at or before it.
fn label_at<L: Copy + Default>(labels: Option<&BTreeMap<u64, L>>, minute: u64) -> L {
    labels
        .and_then(|l| l.range(..=minute).next_back())
        .map_or_else(L::default, |(_, v)| *v)
}

impl PipelineOutputs {
    pub fn motion_at(&self, node: &NodeId, minute: u64) -> Motion {
        label_at(self.motion.get(node), minute)
    }

    pub fn sound_at(&self, node: &NodeId, minute: u64) -> SoundClass {
        label_at(self.sound.get(node), minute)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairStats {
    pub i: NodeId,
    pub j: NodeId,
    pub contact_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub minutes: u64,
    pub records: usize,
    pub pairs: Vec<PairStats>,
}

fn minutes_through(end: Option<Tick>) -> u64 {
    end.map_or(0, |t| t.minute() + 1)
}

fn sort_sightings(sightings: &mut [BtSighting]) {
    sightings.sort_by(|a, b| (a.t, &a.observer, &a.subject).cmp(&(b.t, &b.observer, &b.subject)));
}

fn motion_labels<'a>(
    samples: impl IntoIterator<Item = &'a AccelSample>,
    params: &PipelineParams,
) -> Labels<Motion> {
    let mut trackers: HashMap<NodeId, MotionTracker> = HashMap::new();
    for s in samples {
        trackers
            .entry(s.node.clone())
            .or_insert_with(|| MotionTracker::new(params.motion))
            .push(s);
    }
    trackers.into_iter().map(|(n, t)| (n, t.finish())).collect()
}

fn sound_labels<'a>(
    samples: impl IntoIterator<Item = &'a SoundSample>,
    params: &PipelineParams,
) -> Labels<SoundClass> {
    let mut trackers: HashMap<NodeId, SoundTracker> = HashMap::new();
    for s in samples {
        trackers
            .entry(s.node.clone())
            .or_insert_with(|| SoundTracker::new(params.sound))
            .push(s);
    }
    trackers.into_iter().map(|(n, t)| (n, t.finish())).collect()
}

#[derive(Clone, Debug, Default)]
pub struct Engine {
    params: EngineParams,
}

impl Engine {
    pub fn new(params: EngineParams) -> Result<Self> {
        params.rf.validate("rf.")?;
        crate::pipelines::DistanceState::new(params.pipelines.alpha)?;
        if !(params.fusion.sigma2 > 0.0) {
            return Err(crate::Error::config("fusion.sigma2", "must be > 0"));
        }
        Ok(Engine { params })
    }

    pub fn params(&self) -> &EngineParams {
        &self.params
    }

    /// Runs the motion and sound pipelines on simulator output, one agent
    /// per task.
    pub fn extract_scenario(&self, sim: &Simulator) -> PipelineOutputs {
        let end = sim.config().duration_ms;
        let p = &self.params.pipelines;
        let per_agent: Vec<_> = (0..sim.agents().len())
            .into_par_iter()
            .map(|a| {
                let id = sim.agents()[a].clone();
                let mut motion = MotionTracker::new(p.motion);
                for s in sim.accel_for_agent(a, 0, end) {
                    motion.push(&s);
                }
                let mut sound = SoundTracker::new(p.sound);
                for s in sim.sound_for_agent(a, 0, end) {
                    sound.push(&s);
                }
                (id, motion.finish(), sound.finish())
            })
            .collect();
        let mut out = PipelineOutputs {
            minutes: sim.config().minutes(),
            sightings: sim.sightings(0, end).collect(),
            ..Default::default()
        };
        sort_sightings(&mut out.sightings);
        for (id, m, s) in per_agent {
            out.motion.insert(id.clone(), m);
            out.sound.insert(id, s);
        }
        out
    }

    /// Validates an in-memory trace set and runs the per-node pipelines.
    pub fn extract_traces(&self, ts: &TraceSet) -> Result<PipelineOutputs> {
        ts.validate().into_result()?;
        let p = &self.params.pipelines;
        let (motion, sound) = rayon::join(
            || motion_labels(&ts.accel, p),
            || sound_labels(&ts.sound, p),
        );
        let mut sightings = ts.sightings.clone();
        sort_sightings(&mut sightings);
        Ok(PipelineOutputs {
            minutes: minutes_through(ts.end()),
            sightings,
            motion,
            sound,
        })
    }

    /// Streams the three trace files through the pipelines, one file per
    /// task. Any parse or validation error aborts the whole extraction.
    pub fn extract_files(&self, paths: &TracePaths, epoch_ms: u64) -> Result<PipelineOutputs> {
        let p = &self.params.pipelines;

        let read_sightings = || -> Result<(Vec<BtSighting>, Option<Tick>)> {
            let mut v = StreamValidator::new();
            let mut out = Vec::new();
            for s in TraceRows::<BtSighting>::open(&paths.sightings, epoch_ms)? {
                let s = s?;
                v.check(&SensorSample::Bt(s.clone()));
                out.push(s);
            }
            v.finish().into_result()?;
            let end = out.iter().map(|s| s.t).max();
            sort_sightings(&mut out);
            Ok((out, end))
        };
        let read_accel = || -> Result<(Labels<Motion>, Option<Tick>)> {
            let mut trackers: HashMap<NodeId, MotionTracker> = HashMap::new();
            let mut end = None;
            for s in TraceRows::<AccelSample>::open(&paths.accel, epoch_ms)? {
                let s = s?;
                end = end.max(Some(s.t));
                trackers
                    .entry(s.node.clone())
                    .or_insert_with(|| MotionTracker::new(p.motion))
                    .push(&s);
            }
            Ok((
                trackers.into_iter().map(|(n, t)| (n, t.finish())).collect(),
                end,
            ))
        };
        let read_sound = || -> Result<(Labels<SoundClass>, Option<Tick>)> {
            let mut trackers: HashMap<NodeId, SoundTracker> = HashMap::new();
            let mut end = None;
            for s in TraceRows::<SoundSample>::open(&paths.sound, epoch_ms)? {
                let s = s?;
                end = end.max(Some(s.t));
                trackers
                    .entry(s.node.clone())
                    .or_insert_with(|| SoundTracker::new(p.sound))
                    .push(&s);
            }
            Ok((
                trackers.into_iter().map(|(n, t)| (n, t.finish())).collect(),
                end,
            ))
        };

        let (bt, (accel, sound)) =
            rayon::join(read_sightings, || rayon::join(read_accel, read_sound));
        let (sightings, e1) = bt?;
        let (motion, e2) = accel?;
        let (sound, e3) = sound?;
        Ok(PipelineOutputs {
            minutes: minutes_through(e1.max(e2).max(e3)),
            sightings,
            motion,
            sound,
        })
    }

    /// Fuses every minute in order, handing each minute's records to `sink`.
    pub fn fuse(&self, outputs: &PipelineOutputs, sink: &mut dyn RecordSink) -> Result<RunStats> {
        let p = &self.params.pipelines;
        let mut contacts: BTreeMap<Pair, ContactTracker> = BTreeMap::new();
        let mut social = SocialStrengthState::new();
        let mut distance = DistanceTracker::new(self.params.rf, p.alpha, p.stale_after_ms)?;
        let mut degree = DegreeTracker::new(p.degree_window_ms);
        let mut stats = SessionStats::default();
        let mut fed = 0;
        let mut total = 0;

        for minute in 0..outputs.minutes {
            let now = Tick::end_of_minute(minute);
            while let Some(s) = outputs.sightings.get(fed).filter(|s| s.t <= now) {
                let pair = Pair::new(&s.observer, &s.subject)?;
                contacts
                    .entry(pair.clone())
                    .or_insert_with(|| ContactTracker::new(pair, p.contact))
                    .push(s.t)?;
                distance.observe(&s.observer, &s.subject, s.rssi_dbm, s.t);
                degree.push(s);
                fed += 1;
            }

            let mut snapshot = Vec::with_capacity(2 * contacts.len());
            for (pair, tracker) in &contacts {
                let s_ij = social.update(pair, &tracker.contacts(), now);
                for (i, j) in [(pair.low(), pair.high()), (pair.high(), pair.low())] {
                    snapshot.push(PairInputs {
                        i: i.clone(),
                        j: j.clone(),
                        n_i: degree.degree(i, now) as u32,
                        m_i: outputs.motion_at(i, minute),
                        v_i: outputs.sound_at(i, minute),
                        d_ij: distance.estimate(i, j, now),
                        s_ij,
                    });
                }
            }
            let records = fuse_minute(&snapshot, minute, &self.params.fusion, &mut stats);
            total += records.len();
            sink.accept(minute, &records)?;
        }

        Ok(RunStats {
            minutes: outputs.minutes,
            records: total,
            pairs: contacts
                .iter()
                .map(|(pair, t)| PairStats {
                    i: pair.low().clone(),
                    j: pair.high().clone(),
                    contact_seconds: t.total_seconds(),
                })
                .collect(),
        })
    }

    pub fn run_scenario(&self, sim: &Simulator, sink: &mut dyn RecordSink) -> Result<RunStats> {
        self.fuse(&self.extract_scenario(sim), sink)
    }

    pub fn run_traces(&self, ts: &TraceSet, sink: &mut dyn RecordSink) -> Result<RunStats> {
        self.fuse(&self.extract_traces(ts)?, sink)
    }

    pub fn run_files(
        &self,
        paths: &TracePaths,
        epoch_ms: u64,
        sink: &mut dyn RecordSink,
    ) -> Result<RunStats> {
        self.fuse(&self.extract_files(paths, epoch_ms)?, sink)
    }
}
