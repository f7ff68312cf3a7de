//! Append-only, file-backed log of minute records.
//!
//! File layout: the magic bytes `NSNS1`, then one frame per record, each a
//! little-endian `u32` payload length followed by the record encoded as a
//! minute-record CSV row in UTF-8 (no line terminator). Records are kept in
//! strictly increasing `(minute, i, j)` order.
//!
//! A torn final frame (crash mid-append) is dropped when the log is opened;
//! every complete frame before it is kept.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use crate::domain::{MinuteRecord, NodeId};
use crate::engine::RecordSink;
use crate::error::{Error, Result};
use crate::ingest::{parse_record_row, record_row, write_records};

pub const MAGIC: &[u8; 5] = b"NSNS1";

/// Selects records for queries and export.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecordFilter {
    /// Ordered `(i, j)`: records seen from `i` towards `j`.
    pub pair: Option<(NodeId, NodeId)>,
    pub from_minute: Option<u64>,
    pub to_minute: Option<u64>,
}

impl RecordFilter {
    pub fn matches(&self, r: &MinuteRecord) -> bool {
        self.pair
            .as_ref()
            .is_none_or(|(i, j)| &r.i == i && &r.j == j)
            && self.from_minute.is_none_or(|m| r.minute >= m)
            && self.to_minute.is_none_or(|m| r.minute <= m)
    }
}

#[derive(Debug)]
pub struct RecordLog {
    path: PathBuf,
    writer: Option<BufWriter<File>>,
    records: Vec<MinuteRecord>,
    recovered_bytes: u64,
}

fn key(r: &MinuteRecord) -> (u64, &NodeId, &NodeId) {
    (r.minute, &r.i, &r.j)
}

impl RecordLog {
    /// Creates an empty log, replacing any file at `path`.
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut file = File::create(&path)?;
        file.write_all(MAGIC)?;
        file.sync_data()?;
        Ok(RecordLog {
            path,
            writer: Some(BufWriter::new(file)),
            records: Vec::new(),
            recovered_bytes: 0,
        })
    }

    /// Opens an existing log for reading and further appends.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let mut log = Self::open_read_only(path)?;
        let mut file = OpenOptions::new().write(true).open(&log.path)?;
        let good = file.metadata()?.len() - log.recovered_bytes;
        if log.recovered_bytes > 0 {
            file.set_len(good)?;
        }
        file.seek(SeekFrom::Start(good))?;
        log.writer = Some(BufWriter::new(file));
        Ok(log)
    }

    /// Loads a log without the ability to append. Never modifies the file.
    pub fn open_read_only(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut bytes = Vec::new();
        File::open(&path)?.read_to_end(&mut bytes)?;
        let (records, consumed) = decode(&bytes)?;
        Ok(RecordLog {
            path,
            writer: None,
            records,
            recovered_bytes: (bytes.len() - consumed) as u64,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Bytes of a torn trailing frame discarded on open.
    pub fn recovered_bytes(&self) -> u64 {
        self.recovered_bytes
    }

    pub fn records(&self) -> &[MinuteRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last_minute(&self) -> Option<u64> {
        self.records.last().map(|r| r.minute)
    }

    /// Appends a batch whose keys continue the strictly increasing order.
    /// The batch is checked completely before anything is written.
    pub fn append(&mut self, records: &[MinuteRecord]) -> Result<()> {
        let mut prev = self.records.last().map(key);
        for r in records {
            r.check()?;
            if let Some(p) = prev {
                if key(r) <= p {
                    return Err(Error::OutOfOrder(format!(
                        "record ({}, {}, {}) does not follow ({}, {}, {})",
                        r.minute, r.i, r.j, p.0, p.1, p.2
                    )));
                }
            }
            prev = Some(key(r));
        }
        if records.is_empty() {
            return Ok(());
        }
        let w = self
            .writer
            .as_mut()
            .ok_or_else(|| Error::Io(std::io::Error::other("record log opened read-only")))?;
        for r in records {
            let row = record_row(r);
            let len =
                u32::try_from(row.len()).map_err(|_| Error::Corrupt("record too long".into()))?;
            w.write_all(&len.to_le_bytes())?;
            w.write_all(row.as_bytes())?;
        }
        w.flush()?;
        self.records.extend_from_slice(records);
        Ok(())
    }

    /// Forces appended records to stable storage.
    pub fn sync(&mut self) -> Result<()> {
        if let Some(w) = self.writer.as_mut() {
            w.flush()?;
            w.get_ref().sync_data()?;
        }
        Ok(())
    }

    /// Records of the ordered pair `(i, j)` with minute in `minutes`.
    pub fn query<'a>(
        &'a self,
        i: &'a NodeId,
        j: &'a NodeId,
        minutes: RangeInclusive<u64>,
    ) -> impl Iterator<Item = &'a MinuteRecord> + 'a {
        let lo = self
            .records
            .partition_point(|r| r.minute < *minutes.start());
        let hi = self.records.partition_point(|r| r.minute <= *minutes.end());
        self.records[lo..hi.max(lo)]
            .iter()
            .filter(move |r| &r.i == i && &r.j == j)
    }

    pub fn filtered<'a>(
        &'a self,
        filter: &'a RecordFilter,
    ) -> impl Iterator<Item = &'a MinuteRecord> + 'a {
        self.records.iter().filter(move |r| filter.matches(r))
    }

    /// Writes the selected records in the minute-record CSV format.
    pub fn export_csv(&self, out: impl Write, filter: &RecordFilter) -> Result<()> {
        write_records(out, self.filtered(filter))
    }

    /// Every node id occurring in the log.
    pub fn nodes(&self) -> std::collections::BTreeSet<&NodeId> {
        self.records.iter().flat_map(|r| [&r.i, &r.j]).collect()
    }
}

impl Drop for RecordLog {
    fn drop(&mut self) {
        let _ = self.sync();
    }
}

impl RecordSink for RecordLog {
    fn accept(&mut self, _minute: u64, records: &[MinuteRecord]) -> Result<()> {
        self.append(records)
    }
}

/// Decodes complete frames; returns them and the number of bytes consumed.
fn decode(bytes: &[u8]) -> Result<(Vec<MinuteRecord>, usize)> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Corrupt("missing NSNS1 magic".into()));
    }
    let mut at = MAGIC.len();
    let mut records: Vec<MinuteRecord> = Vec::new();
    while bytes.len() - at >= 4 {
        let len = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        if bytes.len() - at - 4 < len {
            break;
        }
        let payload = &bytes[at + 4..at + 4 + len];
        let row = std::str::from_utf8(payload)
            .map_err(|_| Error::Corrupt(format!("frame at byte {at} is not UTF-8")))?;
        let r = parse_record_row(row).map_err(|(col, msg)| {
            Error::Corrupt(format!("frame at byte {at}, column {col}: {msg}"))
        })?;
        if let Some(prev) = records.last() {
            if key(&r) <= key(prev) {
                return Err(Error::Corrupt(format!(
                    "frame at byte {at} breaks key order"
                )));
            }
        }
        records.push(r);
        at += 4 + len;
    }
    Ok((records, at))
}
