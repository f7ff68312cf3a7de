//! CSV codecs for sensor traces and minute records.
//!
//! All files are plain comma-separated text with a mandatory header row and
//! `\n` line endings; fields are never quoted. Reals are written in the
//! shortest form that parses back to the identical `f64`.
//!
//! | file            | header                                                   |
//! |-----------------|----------------------------------------------------------|
//! | `sightings.csv` | `t_ms,observer,subject,rssi_dbm`                         |
//! | `accel.csv`     | `t_ms,node,ax,ay,az`                                     |
//! | `sound.csv`     | `t_ms,node,amplitude`                                    |
//! | minute records  | `minute,i,j,n_i,m_i,v_i,d_m,s_s,p,si,nearness`           |
//!
//! In minute records `d_m` is `inf` when no fresh distance exists.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use csv::StringRecord;

use crate::domain::{
    AccelSample, BtSighting, Distance, MinuteRecord, Motion, Nearness, NodeId, SensorSample,
    SoundClass, SoundSample, Tick, ValidationReport, RSSI_MAX_DBM, RSSI_MIN_DBM,
};
use crate::error::{Error, Result};

pub const SIGHTINGS_FILE: &str = "sightings.csv";
pub const ACCEL_FILE: &str = "accel.csv";
pub const SOUND_FILE: &str = "sound.csv";

pub const SIGHTINGS_HEADER: &[&str] = &["t_ms", "observer", "subject", "rssi_dbm"];
pub const ACCEL_HEADER: &[&str] = &["t_ms", "node", "ax", "ay", "az"];
pub const SOUND_HEADER: &[&str] = &["t_ms", "node", "amplitude"];
pub const RECORD_HEADER: &[&str] = &[
    "minute", "i", "j", "n_i", "m_i", "v_i", "d_m", "s_s", "p", "si", "nearness",
];

/// Time-sorted sensor samples of a run, one sequence per sensor.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceSet {
    pub sightings: Vec<BtSighting>,
    pub accel: Vec<AccelSample>,
    pub sound: Vec<SoundSample>,
}

impl TraceSet {
    pub fn len(&self) -> usize {
        self.sightings.len() + self.accel.len() + self.sound.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Validates the three sequences as one stream.
    pub fn validate(&self) -> ValidationReport {
        let mut v = crate::domain::StreamValidator::new();
        for s in &self.sightings {
            v.check(&SensorSample::Bt(s.clone()));
        }
        for s in &self.accel {
            v.check(&SensorSample::Accel(s.clone()));
        }
        for s in &self.sound {
            v.check(&SensorSample::Sound(s.clone()));
        }
        v.finish()
    }

    /// Last timestamp across all sensors.
    pub fn end(&self) -> Option<Tick> {
        let a = self.sightings.iter().map(|s| s.t);
        let b = self.accel.iter().map(|s| s.t);
        let c = self.sound.iter().map(|s| s.t);
        a.chain(b).chain(c).max()
    }
}

/// Locations of the three trace files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TracePaths {
    pub sightings: PathBuf,
    pub accel: PathBuf,
    pub sound: PathBuf,
}

impl TracePaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        TracePaths {
            sightings: dir.join(SIGHTINGS_FILE),
            accel: dir.join(ACCEL_FILE),
            sound: dir.join(SOUND_FILE),
        }
    }
}

/// Formats a real so that parsing it yields the same `f64`.
pub fn fmt_real(out: &mut String, x: f64) {
    let _ = write!(out, "{x:?}");
}

pub fn sighting_row(s: &BtSighting) -> String {
    let mut row = format!("{},{},{},", s.t.0, s.observer, s.subject);
    fmt_real(&mut row, s.rssi_dbm);
    row
}

pub fn accel_row(s: &AccelSample) -> String {
    let mut row = format!("{},{},", s.t.0, s.node);
    fmt_real(&mut row, s.ax);
    row.push(',');
    fmt_real(&mut row, s.ay);
    row.push(',');
    fmt_real(&mut row, s.az);
    row
}

pub fn sound_row(s: &SoundSample) -> String {
    let mut row = format!("{},{},", s.t.0, s.node);
    fmt_real(&mut row, s.amplitude);
    row
}

/// Encodes a minute record as one CSV row without line terminator.
pub fn record_row(r: &MinuteRecord) -> String {
    let mut row = format!(
        "{},{},{},{},{},{},",
        r.minute,
        r.i,
        r.j,
        r.n_i,
        r.m_i.code(),
        r.v_i.code()
    );
    fmt_real(&mut row, r.d_ij.to_real());
    for x in [r.s_ij, r.p_ij, r.si_ij] {
        row.push(',');
        fmt_real(&mut row, x);
    }
    row.push(',');
    row.push_str(r.nearness.as_str());
    row
}

/// Field-level parse failure: 1-based column and message.
type FieldError = (usize, String);

fn field(rec: &StringRecord, col: usize) -> std::result::Result<&str, FieldError> {
    rec.get(col)
        .ok_or_else(|| (col + 1, "missing field".to_string()))
}

fn parse_u64(rec: &StringRecord, col: usize) -> std::result::Result<u64, FieldError> {
    let s = field(rec, col)?;
    s.parse().map_err(|_| {
        (
            col + 1,
            format!("expected a non-negative integer, found {s:?}"),
        )
    })
}

fn parse_real(rec: &StringRecord, col: usize) -> std::result::Result<f64, FieldError> {
    let s = field(rec, col)?;
    s.parse()
        .map_err(|_| (col + 1, format!("expected a number, found {s:?}")))
}

fn parse_id(rec: &StringRecord, col: usize) -> std::result::Result<NodeId, FieldError> {
    NodeId::new(field(rec, col)?).map_err(|e| (col + 1, e.to_string()))
}

fn parse_time(
    rec: &StringRecord,
    col: usize,
    epoch_ms: u64,
) -> std::result::Result<Tick, FieldError> {
    let raw = parse_u64(rec, col)?;
    raw.checked_sub(epoch_ms).map(Tick).ok_or_else(|| {
        (
            col + 1,
            format!("timestamp {raw} precedes epoch {epoch_ms}"),
        )
    })
}

fn check_arity(rec: &StringRecord, n: usize) -> std::result::Result<(), FieldError> {
    if rec.len() != n {
        return Err((
            rec.len().min(n) + 1,
            format!("expected {n} fields, found {}", rec.len()),
        ));
    }
    Ok(())
}

/// One trace CSV row type.
pub trait TraceRow: Sized {
    const HEADER: &'static [&'static str];
    fn parse(rec: &StringRecord, epoch_ms: u64) -> std::result::Result<Self, FieldError>;
    /// Node whose stream must be monotone in time.
    fn stream(&self) -> &NodeId;
    fn t(&self) -> Tick;
}

impl TraceRow for BtSighting {
    const HEADER: &'static [&'static str] = SIGHTINGS_HEADER;

    fn parse(rec: &StringRecord, epoch_ms: u64) -> std::result::Result<Self, FieldError> {
        check_arity(rec, 4)?;
        let s = BtSighting {
            t: parse_time(rec, 0, epoch_ms)?,
            observer: parse_id(rec, 1)?,
            subject: parse_id(rec, 2)?,
            rssi_dbm: parse_real(rec, 3)?,
        };
        if s.observer == s.subject {
            return Err((3, format!("{} sighted itself", s.observer)));
        }
        if !(RSSI_MIN_DBM..=RSSI_MAX_DBM).contains(&s.rssi_dbm) {
            return Err((4, format!("rssi {} dBm outside [-120, 0]", s.rssi_dbm)));
        }
        Ok(s)
    }

    fn stream(&self) -> &NodeId {
        &self.observer
    }

    fn t(&self) -> Tick {
        self.t
    }
}

impl TraceRow for AccelSample {
    const HEADER: &'static [&'static str] = ACCEL_HEADER;

    fn parse(rec: &StringRecord, epoch_ms: u64) -> std::result::Result<Self, FieldError> {
        check_arity(rec, 5)?;
        let s = AccelSample {
            t: parse_time(rec, 0, epoch_ms)?,
            node: parse_id(rec, 1)?,
            ax: parse_real(rec, 2)?,
            ay: parse_real(rec, 3)?,
            az: parse_real(rec, 4)?,
        };
        for (k, x) in [s.ax, s.ay, s.az].into_iter().enumerate() {
            if !x.is_finite() {
                return Err((k + 3, "acceleration must be finite".into()));
            }
        }
        Ok(s)
    }

    fn stream(&self) -> &NodeId {
        &self.node
    }

    fn t(&self) -> Tick {
        self.t
    }
}

impl TraceRow for SoundSample {
    const HEADER: &'static [&'static str] = SOUND_HEADER;

    fn parse(rec: &StringRecord, epoch_ms: u64) -> std::result::Result<Self, FieldError> {
        check_arity(rec, 3)?;
        let s = SoundSample {
            t: parse_time(rec, 0, epoch_ms)?,
            node: parse_id(rec, 1)?,
            amplitude: parse_real(rec, 2)?,
        };
        if !(0.0..=1.0).contains(&s.amplitude) {
            return Err((3, format!("amplitude {} outside [0, 1]", s.amplitude)));
        }
        Ok(s)
    }

    fn stream(&self) -> &NodeId {
        &self.node
    }

    fn t(&self) -> Tick {
        self.t
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .quoting(false)
        .flexible(true)
        .from_reader(input)
}

fn check_header(rows: &mut csv::Reader<impl Read>, expected: &[&str], file: &Path) -> Result<()> {
    let mut rec = StringRecord::new();
    let got = rows.read_record(&mut rec).map_err(|e| csv_error(e, file))?;
    let err = |column: usize, message: String| Error::Parse {
        file: file.to_path_buf(),
        line: 1,
        column,
        message,
    };
    if !got {
        return Err(err(1, "missing header".into()));
    }
    for (k, name) in expected.iter().enumerate() {
        match rec.get(k) {
            Some(h) if h == *name => {}
            Some(h) => return Err(err(k + 1, format!("expected header {name:?}, found {h:?}"))),
            None => return Err(err(k + 1, format!("missing header {name:?}"))),
        }
    }
    if rec.len() > expected.len() {
        return Err(err(expected.len() + 1, "unexpected extra header".into()));
    }
    Ok(())
}

fn csv_error(e: csv::Error, file: &Path) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            file: file.to_path_buf(),
            line,
            column: 1,
            message: format!("{kind:?}"),
        },
    }
}

/// Streaming reader over one trace file. Rows are parsed, range checked and
/// checked for per-node time order; the first failure ends the stream.
pub struct TraceRows<S, R = BufReader<File>> {
    rows: csv::Reader<R>,
    file: PathBuf,
    epoch_ms: u64,
    record: StringRecord,
    last: HashMap<NodeId, Tick>,
    failed: bool,
    _row: PhantomData<S>,
}

impl<S: TraceRow> TraceRows<S> {
    pub fn open(path: impl AsRef<Path>, epoch_ms: u64) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path)
            .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::from_reader(BufReader::with_capacity(1 << 16, file), path, epoch_ms)
    }
}

impl<S: TraceRow, R: Read> TraceRows<S, R> {
    /// `name` is only used in error locations.
    pub fn from_reader(input: R, name: impl AsRef<Path>, epoch_ms: u64) -> Result<Self> {
        let file = name.as_ref().to_path_buf();
        let mut rows = csv_reader(input);
        check_header(&mut rows, S::HEADER, &file)?;
        Ok(TraceRows {
            rows,
            file,
            epoch_ms,
            record: StringRecord::new(),
            last: HashMap::new(),
            failed: false,
            _row: PhantomData,
        })
    }

    fn next_row(&mut self) -> Result<Option<S>> {
        if !self
            .rows
            .read_record(&mut self.record)
            .map_err(|e| csv_error(e, &self.file))?
        {
            return Ok(None);
        }
        let line = self.record.position().map_or(0, |p| p.line());
        let located = |(column, message): FieldError| Error::Parse {
            file: self.file.clone(),
            line,
            column,
            message,
        };
        let row = S::parse(&self.record, self.epoch_ms).map_err(located)?;
        match self.last.get_mut(row.stream()) {
            Some(prev) if row.t() < *prev => {
                return Err(located((
                    1,
                    format!(
                        "time goes back from {} to {} for {}",
                        prev,
                        row.t(),
                        row.stream()
                    ),
                )));
            }
            Some(prev) => *prev = row.t(),
            None => {
                self.last.insert(row.stream().clone(), row.t());
            }
        }
        Ok(Some(row))
    }
}

impl<S: TraceRow, R: Read> Iterator for TraceRows<S, R> {
    type Item = Result<S>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let out = self.next_row().transpose();
        if matches!(out, Some(Err(_))) {
            self.failed = true;
        }
        out
    }
}

fn read_all<S: TraceRow>(path: &Path, epoch_ms: u64) -> Result<Vec<S>> {
    TraceRows::<S>::open(path, epoch_ms)?.collect()
}

/// Reads the three trace files. Timestamps have `epoch_ms` subtracted.
pub fn read_traces(paths: &TracePaths, epoch_ms: u64) -> Result<TraceSet> {
    let (sightings, (accel, sound)) = rayon::join(
        || read_all(&paths.sightings, epoch_ms),
        || {
            rayon::join(
                || read_all(&paths.accel, epoch_ms),
                || read_all(&paths.sound, epoch_ms),
            )
        },
    );
    Ok(TraceSet {
        sightings: sightings?,
        accel: accel?,
        sound: sound?,
    })
}

/// Incremental writer of the three trace files.
pub struct TraceWriter {
    paths: TracePaths,
    sightings: BufWriter<File>,
    accel: BufWriter<File>,
    sound: BufWriter<File>,
}

impl TraceWriter {
    pub fn create(dir: impl AsRef<Path>) -> Result<Self> {
        std::fs::create_dir_all(dir.as_ref())?;
        let paths = TracePaths::in_dir(dir);
        let open = |p: &Path, header: &[&str]| -> Result<BufWriter<File>> {
            let mut w = BufWriter::with_capacity(1 << 16, File::create(p)?);
            writeln!(w, "{}", header.join(","))?;
            Ok(w)
        };
        Ok(TraceWriter {
            sightings: open(&paths.sightings, SIGHTINGS_HEADER)?,
            accel: open(&paths.accel, ACCEL_HEADER)?,
            sound: open(&paths.sound, SOUND_HEADER)?,
            paths,
        })
    }

    pub fn write(&mut self, ts: &TraceSet) -> Result<()> {
        for s in &ts.sightings {
            writeln!(self.sightings, "{}", sighting_row(s))?;
        }
        for s in &ts.accel {
            writeln!(self.accel, "{}", accel_row(s))?;
        }
        for s in &ts.sound {
            writeln!(self.sound, "{}", sound_row(s))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<TracePaths> {
        self.sightings.flush()?;
        self.accel.flush()?;
        self.sound.flush()?;
        Ok(self.paths)
    }
}

pub fn write_traces(ts: &TraceSet, dir: impl AsRef<Path>) -> Result<TracePaths> {
    let mut w = TraceWriter::create(dir)?;
    w.write(ts)?;
    w.finish()
}

fn parse_record_fields(rec: &StringRecord) -> std::result::Result<MinuteRecord, FieldError> {
    check_arity(rec, RECORD_HEADER.len())?;
    let small = |col: usize| -> std::result::Result<u8, FieldError> {
        let v = parse_u64(rec, col)?;
        u8::try_from(v).map_err(|_| (col + 1, format!("code {v} out of range")))
    };
    let m = small(4)?;
    let v = small(5)?;
    let n = parse_u64(rec, 3)?;
    let d = parse_real(rec, 6)?;
    let nearness = field(rec, 10)?;
    let r = MinuteRecord {
        minute: parse_u64(rec, 0)?,
        i: parse_id(rec, 1)?,
        j: parse_id(rec, 2)?,
        n_i: u32::try_from(n).map_err(|_| (4, format!("degree {n} out of range")))?,
        m_i: Motion::from_code(m).ok_or((5, format!("motion code must be 1 or 2, found {m}")))?,
        v_i: SoundClass::from_code(v)
            .ok_or((6, format!("sound class must be 0..=3, found {v}")))?,
        d_ij: Distance::from_real(d),
        s_ij: parse_real(rec, 7)?,
        p_ij: parse_real(rec, 8)?,
        si_ij: parse_real(rec, 9)?,
        nearness: nearness
            .parse::<Nearness>()
            .map_err(|e| (11, e.to_string()))?,
    };
    r.check().map_err(|e| (1, e.to_string()))?;
    Ok(r)
}

/// Decodes one minute-record row (no line terminator).
pub fn parse_record_row(row: &str) -> std::result::Result<MinuteRecord, (usize, String)> {
    let rec = StringRecord::from(row.split(',').collect::<Vec<_>>());
    parse_record_fields(&rec)
}

pub fn write_records<'a, W: Write>(
    out: W,
    records: impl IntoIterator<Item = &'a MinuteRecord>,
) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{}", RECORD_HEADER.join(","))?;
    for r in records {
        writeln!(out, "{}", record_row(r))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records_from(input: impl Read, name: impl AsRef<Path>) -> Result<Vec<MinuteRecord>> {
    let file = name.as_ref();
    let mut rows = csv_reader(input);
    check_header(&mut rows, RECORD_HEADER, file)?;
    let mut rec = StringRecord::new();
    let mut out = Vec::new();
    while rows.read_record(&mut rec).map_err(|e| csv_error(e, file))? {
        let line = rec.position().map_or(0, |p| p.line());
        let r = parse_record_fields(&rec).map_err(|(column, message)| Error::Parse {
            file: file.to_path_buf(),
            line,
            column,
            message,
        })?;
        out.push(r);
    }
    Ok(out)
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<MinuteRecord>> {
    let path = path.as_ref();
    read_records_from(BufReader::new(File::open(path)?), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_sightings(text: &str) -> Result<Vec<BtSighting>> {
        TraceRows::<BtSighting, _>::from_reader(text.as_bytes(), "sightings.csv", 0)?.collect()
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse_sightings("t_ms,observer,subject,rssi_dbm\n")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn sighting_row_maps_directly() {
        let rows = parse_sightings("t_ms,observer,subject,rssi_dbm\n60000,USense2,USense5,-67.0\n")
            .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].t.minute(), 1);
        assert_eq!(rows[0].observer.as_str(), "USense2");
        assert_eq!(rows[0].subject.as_str(), "USense5");
        assert_eq!(rows[0].rssi_dbm, -67.0);
    }

    #[test]
    fn bad_number_is_located() {
        let err = parse_sightings("t_ms,observer,subject,rssi_dbm\n60000,USense2,USense5,abc\n")
            .unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 4)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_and_range_errors() {
        let err = parse_sightings("t_ms,observer,target,rssi_dbm\n").unwrap_err();
        assert!(
            matches!(
                err,
                Error::Parse {
                    line: 1,
                    column: 3,
                    ..
                }
            ),
            "{err:?}"
        );

        let err =
            parse_sightings("t_ms,observer,subject,rssi_dbm\n0,a,b,-50\n0,a,b,10\n").unwrap_err();
        assert!(
            matches!(
                err,
                Error::Parse {
                    line: 3,
                    column: 4,
                    ..
                }
            ),
            "{err:?}"
        );

        let err = parse_sightings("t_ms,observer,subject,rssi_dbm\n0,a,a,-50\n").unwrap_err();
        assert!(
            matches!(
                err,
                Error::Parse {
                    line: 2,
                    column: 3,
                    ..
                }
            ),
            "{err:?}"
        );

        let err = parse_sightings("t_ms,observer,subject,rssi_dbm\n100,a,b,-50\n50,a,c,-50\n")
            .unwrap_err();
        assert!(
            matches!(
                err,
                Error::Parse {
                    line: 3,
                    column: 1,
                    ..
                }
            ),
            "{err:?}"
        );

        let err = parse_sightings("t_ms,observer,subject,rssi_dbm\n100,a,b\n").unwrap_err();
        assert!(
            matches!(
                err,
                Error::Parse {
                    line: 2,
                    column: 4,
                    ..
                }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn epoch_shifts_timestamps() {
        let text = "t_ms,node,amplitude\n1448287260000,USense2,0.25\n";
        let rows: Vec<SoundSample> =
            TraceRows::from_reader(text.as_bytes(), "sound.csv", 1_448_287_200_000)
                .unwrap()
                .collect::<Result<_>>()
                .unwrap();
        assert_eq!(rows[0].t, Tick(60_000));
        let err = TraceRows::<SoundSample, _>::from_reader(
            text.as_bytes(),
            "sound.csv",
            1_448_287_300_000,
        )
        .unwrap()
        .next()
        .unwrap()
        .unwrap_err();
        assert!(matches!(err, Error::Parse { column: 1, .. }));
    }

    #[test]
    fn empty_traceset_writes_header_only_files() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_traces(&TraceSet::default(), dir.path()).unwrap();
        assert_eq!(
            std::fs::read_to_string(&paths.sightings).unwrap(),
            "t_ms,observer,subject,rssi_dbm\n"
        );
        assert_eq!(
            std::fs::read_to_string(&paths.accel).unwrap(),
            "t_ms,node,ax,ay,az\n"
        );
        assert_eq!(
            std::fs::read_to_string(&paths.sound).unwrap(),
            "t_ms,node,amplitude\n"
        );
        assert_eq!(read_traces(&paths, 0).unwrap(), TraceSet::default());
    }

    #[test]
    fn record_row_roundtrip_with_sentinel() {
        let r = MinuteRecord {
            minute: 7,
            i: NodeId::new("USense2").unwrap(),
            j: NodeId::new("USense5").unwrap(),
            n_i: 3,
            m_i: Motion::Moving,
            v_i: SoundClass::Alert,
            d_ij: Distance::OutOfRange,
            s_ij: 120.5,
            p_ij: 0.0,
            si_ij: 0.0,
            nearness: Nearness::Low,
        };
        let row = record_row(&r);
        assert_eq!(row, "7,USense2,USense5,3,2,2,inf,120.5,0.0,0.0,Low");
        assert_eq!(parse_record_row(&row).unwrap(), r);

        let mut bad = r.clone();
        bad.p_ij = 1.0;
        assert!(parse_record_row(&record_row(&bad)).is_err());
    }
}
