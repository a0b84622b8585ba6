//! `TTG1` binary time-tag files and the `channel,timestamp_ns` CSV form.
//!
//! Binary layout (little-endian): magic `TTG1`, version `u16` (= 1), reserved
//! `u16`, then 12-byte records of channel `u8`, 3 padding bytes and the
//! timestamp in ns as `u64`.

use std::fs;
use std::path::Path;

use super::{Channel, EventRecord, EventStream};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TTG1";
const VERSION: u16 = 1;
const HEADER: usize = 8;
const RECORD: usize = 12;

fn parse_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        offset: offset as u64,
        reason: reason.into(),
    }
}

pub fn write_timetag_bytes(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + RECORD * stream.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    for e in stream.events() {
        out.push(e.channel as u8);
        out.extend_from_slice(&[0; 3]);
        out.extend_from_slice(&e.timestamp.to_le_bytes());
    }
    out
}

/// Parse a `TTG1` image. Out-of-order records are sorted with a warning;
/// timestamps beyond `i64::MAX` are rejected as counter overflow.
pub fn parse_timetag_bytes(bytes: &[u8]) -> Result<EventStream> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(parse_err(0, "bad magic, expected TTG1"));
    }
    if bytes.len() < HEADER {
        return Err(parse_err(bytes.len(), "truncated header"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(parse_err(4, format!("unsupported version {version}")));
    }
    let body = &bytes[HEADER..];
    if !body.len().is_multiple_of(RECORD) {
        let off = HEADER + body.len() / RECORD * RECORD;
        return Err(parse_err(off, "truncated record"));
    }
    let mut events = Vec::with_capacity(body.len() / RECORD);
    let mut sorted = true;
    for (i, rec) in body.chunks_exact(RECORD).enumerate() {
        let off = HEADER + i * RECORD;
        let channel = Channel::from_u8(rec[0]).ok_or_else(|| parse_err(off, format!("unknown channel {}", rec[0])))?;
        let ts = u64::from_le_bytes(rec[4..12].try_into().expect("8 bytes"));
        if ts > i64::MAX as u64 {
            return Err(parse_err(off + 4, format!("timestamp overflow {ts}")));
        }
        let e = EventRecord { timestamp: ts, channel };
        if events.last().is_some_and(|p: &EventRecord| *p > e) {
            sorted = false;
        }
        events.push(e);
    }
    if !sorted {
        log::warn!("time-tag records out of order; re-sorting {} events", events.len());
    }
    Ok(EventStream::new(events, 0))
}

/// Parse `channel,timestamp_ns` lines; `#` comments and a header line are
/// skipped. The error offset is the 1-based line number.
pub fn parse_timetag_csv(text: &str) -> Result<EventStream> {
    let mut events = Vec::new();
    let mut sorted = true;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(c), Some(t), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(i + 1, "expected two fields"));
        };
        if i == 0 && c.trim() == "channel" {
            continue;
        }
        let channel = Channel::parse(c).ok_or_else(|| parse_err(i + 1, format!("unknown channel {c:?}")))?;
        let timestamp: u64 = t
            .trim()
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad timestamp {t:?}")))?;
        if timestamp > i64::MAX as u64 {
            return Err(parse_err(i + 1, format!("timestamp overflow {timestamp}")));
        }
        let e = EventRecord { timestamp, channel };
        if events.last().is_some_and(|p: &EventRecord| *p > e) {
            sorted = false;
        }
        events.push(e);
    }
    if !sorted {
        log::warn!("time-tag records out of order; re-sorting {} events", events.len());
    }
    Ok(EventStream::new(events, 0))
}

/// Read a time-tag file; `.csv` files use the text form, anything else `TTG1`.
pub fn read_timetag_file(path: &Path) -> Result<EventStream> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_timetag_csv(&fs::read_to_string(path)?)
    } else {
        parse_timetag_bytes(&fs::read(path)?)
    }
}

pub fn write_timetag_file(stream: &EventStream, path: &Path) -> Result<()> {
    fs::write(path, write_timetag_bytes(stream))?;
    Ok(())
}
